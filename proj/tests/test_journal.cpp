#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <sstream>

#include "aae/synth.hpp"

using namespace aae;
using Catch::Matchers::WithinAbs;

namespace {

AttributeSchema small_schema() {
  AttributeSchema s;
  s.add_categorical("gl_account", {"B1", "B2", "B24"});
  s.add_categorical("currency_key", {"C6", "C7"});
  s.add_continuous("amount_local", "EUR", ContinuousTransform::log1p_minmax);
  return s;
}

const char* kThreeRows =
    "gl_account,currency_key,amount_local\n"
    "B1,C7,100.5\n"
    "B2,C6,2500\n"
    "B1,C7,47632.45\n";

}  // namespace

TEST_CASE("schema: encoded dimension and validation", "[journal]") {
  const auto s = small_schema();
  REQUIRE(s.encoded_dim() == 6);
  REQUIRE(s.categorical_dim() == 5);
  REQUIRE(s.block_offset(1) == 3);
  REQUIRE(desk_schema().encoded_dim() == 33);

  AttributeSchema bad;
  REQUIRE_THROWS_AS(bad.add_categorical("a", {}), ConfigError);
  REQUIRE_THROWS_AS(bad.add_categorical("a", {"x", "x"}), ConfigError);
  bad.add_categorical("a", {"x"});
  REQUIRE_THROWS_AS(bad.add_continuous("a", "", ContinuousTransform::minmax), ConfigError);
}

TEST_CASE("schema: json round trip", "[journal]") {
  const auto s = desk_schema();
  REQUIRE(AttributeSchema::from_json(s.to_json()) == s);
}

TEST_CASE("load_csv: three rows against a schema", "[journal]") {
  std::istringstream in(kThreeRows);
  const auto ds = parse_csv(in, {small_schema(), false});
  REQUIRE(ds.size() == 3);
  REQUIRE(ds.entries[1].categorical[0] == 1);
  REQUIRE(ds.entries[2].continuous[0] == 47632.45);
  REQUIRE(ds.stats.min[0] == std::log1p(100.5));
  REQUIRE(ds.stats.max[0] == std::log1p(47632.45));
}

TEST_CASE("load_csv: unseen value in strict mode names the value", "[journal]") {
  std::istringstream in("gl_account,currency_key,amount_local\nB1,C7,1\nB99,C7,2\n");
  try {
    parse_csv(in, {small_schema(), false});
    FAIL("expected a vocabulary error");
  } catch (const VocabularyError& e) {
    REQUIRE(e.value() == "B99");
    REQUIRE(std::string(e.what()).find("B99") != std::string::npos);
  }
  std::istringstream again("gl_account,currency_key,amount_local\nB1,C7,1\nB99,C7,2\n");
  const auto ds = parse_csv(again, {small_schema(), true});
  REQUIRE(ds.schema.categorical()[0].vocabulary.back() == "B99");
  REQUIRE(ds.entries[1].categorical[0] == 3);
}

TEST_CASE("load_csv: malformed rows report their line", "[journal]") {
  std::istringstream short_row("gl_account,currency_key,amount_local\nB1,C7,1\nB2,C6\n");
  try {
    parse_csv(short_row, {small_schema(), false});
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    REQUIRE(e.line() == 3);
  }
  std::istringstream bad_number("gl_account,currency_key,amount_local\nB1,C7,abc\n");
  REQUIRE_THROWS_AS(parse_csv(bad_number, {small_schema(), false}), ParseError);
  std::istringstream open_quote("gl_account,currency_key,amount_local\n\"B1,C7,1\n");
  REQUIRE_THROWS_AS(parse_csv(open_quote, {small_schema(), false}), ParseError);
  std::istringstream empty("");
  REQUIRE_THROWS_AS(parse_csv(empty), ParseError);
}

TEST_CASE("load_csv: schema inference", "[journal]") {
  std::istringstream in(kThreeRows);
  const auto ds = parse_csv(in);
  REQUIRE(ds.schema.categorical().size() == 2);
  REQUIRE(ds.schema.continuous().size() == 1);
  REQUIRE(ds.schema.categorical()[0].vocabulary == std::vector<std::string>{"B1", "B2"});
}

TEST_CASE("degenerate continuous attribute", "[journal]") {
  std::istringstream in("gl_account,currency_key,amount_local\nB1,C7,5\nB2,C6,5\n");
  REQUIRE_THROWS_AS(parse_csv(in, {small_schema(), false}), DataError);
}

TEST_CASE("encode: one-hot blocks and unit interval", "[journal]") {
  std::istringstream in(kThreeRows);
  const auto ds = parse_csv(in, {small_schema(), false});
  for (const auto& e : ds.entries) {
    const auto enc = encode_entry(ds.schema, ds.stats, e);
    REQUIRE(enc.values.segment(0, 3).sum() == 1.0);
    REQUIRE(enc.values.segment(3, 2).sum() == 1.0);
    REQUIRE(enc.x_con().minCoeff() >= 0.0);
    REQUIRE(enc.x_con().maxCoeff() <= 1.0);
  }
  const auto lo = encode_entry(ds.schema, ds.stats, ds.entries[0]);
  const auto hi = encode_entry(ds.schema, ds.stats, ds.entries[2]);
  REQUIRE(lo.x_con()(0) == 0.0);
  REQUIRE(hi.x_con()(0) == 1.0);

  JournalEntry outside{{0, 1}, {1e9}};
  EncodeDiagnostics diag;
  const auto clamped = encode_entry(ds.schema, ds.stats, outside, &diag);
  REQUIRE(clamped.x_con()(0) == 1.0);
  REQUIRE(diag.clamped == 1);
}

TEST_CASE("decode: argmax with lowest-index ties and confidence", "[journal]") {
  std::istringstream in(kThreeRows);
  const auto ds = parse_csv(in, {small_schema(), false});
  std::vector<double> x{0.2, 0.6, 0.2, 0.5, 0.5, 1.0};
  const auto d = decode_vector(ds.schema, ds.stats, x);
  REQUIRE(d.entry.categorical[0] == 1);
  REQUIRE(d.entry.categorical[1] == 0);
  REQUIRE_THAT(d.confidence[0], WithinAbs(0.6, 1e-12));
  REQUIRE_THAT(d.confidence[1], WithinAbs(0.5, 1e-12));
  REQUIRE_THAT(d.entry.continuous[0], WithinAbs(47632.45, 1e-6));
  REQUIRE_THROWS_AS(decode_vector(ds.schema, ds.stats, std::vector<double>(5, 0.1)), DimensionError);
}

TEST_CASE("encode/decode round trip", "[journal]") {
  const auto ds = synth_generate(desk_synth_spec(), 500, 4);
  for (const auto& e : ds.entries) {
    const auto enc = encode_entry(ds.schema, ds.stats, e);
    const auto dec = decode_vector(ds.schema, ds.stats, {enc.values.data(), static_cast<std::size_t>(enc.values.size())});
    REQUIRE(dec.entry.categorical == e.categorical);
    for (std::size_t i = 0; i < e.continuous.size(); ++i)
      REQUIRE_THAT(dec.entry.continuous[i], WithinAbs(e.continuous[i], 1e-6 * e.continuous[i]));
  }
}

TEST_CASE("csv write/read round trip", "[journal]") {
  const auto ds = synth_generate(desk_synth_spec(), 200, 9);
  std::ostringstream out;
  write_csv(out, ds.schema, ds.entries);
  std::istringstream in(out.str());
  const auto back = parse_csv(in, {ds.schema, false});
  REQUIRE(back.entries == ds.entries);
}

TEST_CASE("csv quoting", "[journal][csv]") {
  REQUIRE(csv::quote("plain") == "plain");
  REQUIRE(csv::quote("a,b") == "\"a,b\"");
  REQUIRE(csv::quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
  const auto f = csv::split("x,\"a,b\",\"q\"\"q\"");
  REQUIRE(f);
  REQUIRE(*f == std::vector<std::string>{"x", "a,b", "q\"q"});
  REQUIRE_FALSE(csv::split("\"open"));
  REQUIRE(csv::format_double(0.1) == "0.1");
  REQUIRE(csv::parse_double("2.5e3") == 2500.0);
  REQUIRE_FALSE(csv::parse_double("12x"));
}

TEST_CASE("anonymize: consistent tokens, amounts untouched", "[journal]") {
  AttributeSchema s;
  s.add_categorical("vendor", {"V-17", "V-18"});
  s.add_continuous("amount_local", "EUR", ContinuousTransform::log1p_minmax);
  Dataset ds;
  ds.schema = s;
  ds.entries = {{{0}, {10.0}}, {{1}, {20.0}}, {{0}, {30.0}}};
  ds.refit();
  const auto a = anonymize(ds, "pepper");
  const auto& vocab = a.schema.categorical()[0].vocabulary;
  REQUIRE(vocab.size() == 2);
  REQUIRE(vocab[0] != "V-17");
  REQUIRE(vocab[0].size() == 10);
  REQUIRE(vocab[0] != vocab[1]);
  REQUIRE(attribute_text(a.schema, a.entries[0], {AttributeKind::categorical, 0}) ==
          attribute_text(a.schema, a.entries[2], {AttributeKind::categorical, 0}));
  for (std::size_t i = 0; i < ds.size(); ++i) REQUIRE(a.entries[i].continuous == ds.entries[i].continuous);

  REQUIRE(anonymize(ds, "pepper").schema == a.schema);
  REQUIRE_FALSE(anonymize(ds, "salt").schema == a.schema);
}

TEST_CASE("synth: deterministic and labelled", "[journal][synth]") {
  const auto a = synth_generate(desk_synth_spec(), 1000, 1);
  const auto b = synth_generate(desk_synth_spec(), 1000, 1);
  const auto c = synth_generate(desk_synth_spec(), 1000, 2);
  REQUIRE(a.entries == b.entries);
  REQUIRE_FALSE(a.entries == c.entries);
  REQUIRE(a.labels.size() == 1000);
  REQUIRE(a.provenance == Provenance::synthetic);
  for (const auto& e : a.entries) {
    REQUIRE_NOTHROW(validate_entry(a.schema, e));
    REQUIRE(e.continuous[0] == std::round(e.continuous[0] * 100.0) / 100.0);
  }
}

TEST_CASE("synth: frequencies within 4 sigma of the spec", "[journal][synth]") {
  const auto spec = desk_synth_spec();
  const std::size_t n = 20000;
  const auto ds = synth_generate(spec, n, 77);
  std::vector<std::size_t> per_process(spec.processes.size(), 0);
  for (int l : ds.labels) ++per_process[static_cast<std::size_t>(l)];
  for (std::size_t k = 0; k < spec.processes.size(); ++k) {
    const double p = spec.processes[k].weight;
    REQUIRE(std::abs(static_cast<double>(per_process[k]) - n * p) <= 3.0 * std::sqrt(n * p * (1 - p)));
  }
  // ~50 per-category checks, so 4 sigma keeps the family-wise false alarm rate low
  for (std::size_t k = 0; k < spec.processes.size(); ++k) {
    const double m = static_cast<double>(per_process[k]);
    for (std::size_t a = 0; a < spec.schema.categorical().size(); ++a) {
      std::map<std::uint32_t, std::size_t> counts;
      for (std::size_t i = 0; i < n; ++i)
        if (ds.labels[i] == static_cast<int>(k)) ++counts[ds.entries[i].categorical[a]];
      for (const auto& [code, p] : spec.processes[k].categorical[a]) {
        REQUIRE(std::abs(static_cast<double>(counts[code]) - m * p) <= 4.0 * std::sqrt(m * p * (1 - p)) + 1e-9);
      }
    }
  }
}

TEST_CASE("synth: variants and spec validation", "[journal][synth]") {
  const auto schema = small_schema();
  json j{{"schema", schema.to_json()},
         {"processes",
          {{{"name", "p"},
            {"weight", 1.0},
            {"categorical", {{"currency_key", {{"C7", 1.0}}}}},
            {"continuous", {{"amount_local", {{"mu", 5.0}, {"sigma", 0.5}}}}},
            {"variants",
             {{{"name", "a"}, {"weight", 0.5}, {"categorical", {{"gl_account", {{"B1", 1.0}}}}}},
              {{"name", "b"}, {"weight", 0.5}, {"categorical", {{"gl_account", {{"B2", 1.0}}}}}}}}}}}};
  const auto spec = SynthSpec::from_json(j);
  const auto ds = synth_generate(spec, 2000, 3);
  std::size_t b1 = 0;
  for (const auto& e : ds.entries) {
    REQUIRE(e.categorical[1] == 1);
    REQUIRE(e.categorical[0] != 2);
    b1 += e.categorical[0] == 0;
  }
  REQUIRE(std::abs(static_cast<double>(b1) - 1000.0) <= 3.0 * std::sqrt(500.0));
  REQUIRE(SynthSpec::from_json(spec.to_json()).to_json() == spec.to_json());

  auto bad = j;
  bad["processes"][0]["weight"] = 0.7;
  REQUIRE_THROWS_AS(SynthSpec::from_json(bad), ConfigError);
  bad = j;
  bad["processes"][0]["variants"][0]["categorical"]["gl_account"] = {{"B1", 0.5}};
  REQUIRE_THROWS_AS(SynthSpec::from_json(bad), ConfigError);
  bad = j;
  bad["processes"][0]["variants"][0]["categorical"]["gl_account"] = {{"B77", 1.0}};
  REQUIRE_THROWS_AS(SynthSpec::from_json(bad), VocabularyError);
}

TEST_CASE("desk spec: B24 is never generated", "[journal][synth]") {
  const auto ds = synth_generate(desk_synth_spec(), 5000, 12);
  const auto b24 = *ds.schema.code_of(3, "B24");
  for (const auto& e : ds.entries) REQUIRE(e.categorical[3] != b24);
}
