#pragma once

// Computer-assisted audit techniques: rule-based red-flag scans, attribute
// rarity, Benford first-digit test, and an attack evaluation harness.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "aae/attack.hpp"

namespace aae {

// ---------------------------------------------------------------------------
// Rules

struct AmountThresholdRule {
  std::string attribute;
  double border = 0.0;
  bool inclusive = false;  // flag amount >= border instead of amount > border
};

struct SetMembershipRule {
  std::string attribute;
  std::vector<std::string> values;
  bool required = false;  // true: flag values outside the set; false: flag values inside
};

struct PairCooccurrenceRule {
  std::string first;
  std::string second;
  std::vector<std::pair<std::string, std::string>> allowed;
};

struct Rule {
  std::string id;
  std::variant<AmountThresholdRule, SetMembershipRule, PairCooccurrenceRule> body;
};

struct RuleSet {
  std::vector<Rule> rules;

  static RuleSet from_json(const json& j) {
    RuleSet rs;
    std::set<std::string> ids;
    for (const auto& r : j.at("rules")) {
      Rule rule;
      rule.id = r.at("id").get<std::string>();
      if (!ids.insert(rule.id).second) throw ConfigError("duplicate rule id '" + rule.id + "'");
      const auto kind = r.at("kind").get<std::string>();
      if (kind == "amount_threshold") {
        rule.body = AmountThresholdRule{r.at("attribute").get<std::string>(), r.at("border").get<double>(),
                                        r.value("inclusive", false)};
      } else if (kind == "set_membership") {
        const auto mode = r.value("mode", std::string("forbidden"));
        if (mode != "forbidden" && mode != "required") throw ConfigError("set_membership mode must be forbidden|required");
        rule.body = SetMembershipRule{r.at("attribute").get<std::string>(),
                                      r.at("values").get<std::vector<std::string>>(), mode == "required"};
      } else if (kind == "pair_cooccurrence") {
        PairCooccurrenceRule p{r.at("first").get<std::string>(), r.at("second").get<std::string>(), {}};
        for (const auto& pair : r.at("allowed")) p.allowed.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
        rule.body = std::move(p);
      } else {
        throw ConfigError("unknown rule kind '" + kind + "'");
      }
      rs.rules.push_back(std::move(rule));
    }
    return rs;
  }

  static RuleSet load(const std::string& path) {
    try {
      return from_json(load_json(path));
    } catch (const json::exception& e) {
      throw ConfigError("rule set '" + path + "': " + e.what());
    }
  }
};

namespace detail {

inline std::uint32_t require_value(const AttributeSchema& schema, const AttributeRef& ref, const std::string& value,
                                   const std::string& rule_id) {
  auto code = schema.code_of(ref.index, value);
  if (!code) throw ConfigError("rule '" + rule_id + "': value '" + value + "' not in vocabulary of '" + schema.name(ref) + "'");
  return *code;
}

inline AttributeRef require_kind(const AttributeSchema& schema, const std::string& name, AttributeKind kind,
                                 const std::string& rule_id) {
  auto ref = schema.find(name);
  if (!ref) throw ConfigError("rule '" + rule_id + "' references unknown attribute '" + name + "'");
  if (ref->kind != kind) {
    throw ConfigError("rule '" + rule_id + "': attribute '" + name + "' must be " +
                      (kind == AttributeKind::categorical ? "categorical" : "continuous"));
  }
  return *ref;
}

/// A rule compiled against a schema: a predicate over entries.
struct CompiledRule {
  std::string id;
  std::function<bool(const JournalEntry&)> flags;
};

inline CompiledRule compile(const AttributeSchema& schema, const Rule& rule) {
  return std::visit(
      [&](const auto& r) -> CompiledRule {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, AmountThresholdRule>) {
          const auto ref = require_kind(schema, r.attribute, AttributeKind::continuous, rule.id);
          return {rule.id, [i = ref.index, border = r.border, inclusive = r.inclusive](const JournalEntry& e) {
                    return inclusive ? e.continuous[i] >= border : e.continuous[i] > border;
                  }};
        } else if constexpr (std::is_same_v<T, SetMembershipRule>) {
          const auto ref = require_kind(schema, r.attribute, AttributeKind::categorical, rule.id);
          std::set<std::uint32_t> codes;
          for (const auto& v : r.values) codes.insert(require_value(schema, ref, v, rule.id));
          return {rule.id, [i = ref.index, codes, required = r.required](const JournalEntry& e) {
                    return codes.count(e.categorical[i]) != 0 ? !required : required;
                  }};
        } else {
          const auto a = require_kind(schema, r.first, AttributeKind::categorical, rule.id);
          const auto b = require_kind(schema, r.second, AttributeKind::categorical, rule.id);
          std::set<std::pair<std::uint32_t, std::uint32_t>> allowed;
          for (const auto& [x, y] : r.allowed) {
            allowed.emplace(require_value(schema, a, x, rule.id), require_value(schema, b, y, rule.id));
          }
          return {rule.id, [ia = a.index, ib = b.index, allowed](const JournalEntry& e) {
                    return allowed.count({e.categorical[ia], e.categorical[ib]}) == 0;
                  }};
        }
      },
      rule.body);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Reports

struct Flag {
  std::size_t row = 0;
  std::string rule_id;
  std::string detector;
  friend bool operator==(const Flag&, const Flag&) = default;
};

struct DetectorReport {
  std::string detector;
  std::size_t size = 0;
  std::vector<Flag> flags;  // sorted by (row, rule)

  /// Rows with at least one flag.
  std::vector<std::size_t> flagged_rows() const {
    std::vector<std::size_t> rows;
    for (const auto& f : flags)
      if (rows.empty() || rows.back() != f.row) rows.push_back(f.row);
    return rows;
  }
  std::size_t flagged_count() const { return flagged_rows().size(); }
  double flag_rate() const { return size == 0 ? 0.0 : static_cast<double>(flagged_count()) / static_cast<double>(size); }
  std::map<std::string, std::size_t> per_rule() const {
    std::map<std::string, std::size_t> m;
    for (const auto& f : flags) ++m[f.rule_id];
    return m;
  }

  void merge(const DetectorReport& other) {
    flags.insert(flags.end(), other.flags.begin(), other.flags.end());
    std::stable_sort(flags.begin(), flags.end(), [](const Flag& a, const Flag& b) { return a.row < b.row; });
  }

  friend bool operator==(const DetectorReport& a, const DetectorReport& b) {
    return a.detector == b.detector && a.size == b.size && a.flags == b.flags;
  }
};

inline DetectorReport red_flag_scan(const AttributeSchema& schema, const std::vector<JournalEntry>& entries,
                                    const RuleSet& rules) {
  std::vector<detail::CompiledRule> compiled;
  for (const auto& r : rules.rules) compiled.push_back(detail::compile(schema, r));
  DetectorReport rep{"red_flag", entries.size(), {}};
  for (std::size_t row = 0; row < entries.size(); ++row) {
    for (const auto& c : compiled)
      if (c.flags(entries[row])) rep.flags.push_back({row, c.id, "red_flag"});
  }
  return rep;
}

inline DetectorReport red_flag_scan(const Dataset& ds, const RuleSet& rules) {
  return red_flag_scan(ds.schema, ds.entries, rules);
}

/// Flags entries whose value of `attribute` occurs fewer than `min_count` times.
inline DetectorReport rarity_scan(const AttributeSchema& schema, const std::vector<JournalEntry>& entries,
                                  const std::string& attribute, std::size_t min_count) {
  const auto ref = schema.find(attribute);
  if (!ref) throw ConfigError("rarity_scan: unknown attribute '" + attribute + "'");
  if (ref->kind != AttributeKind::categorical) throw ConfigError("rarity_scan: attribute '" + attribute + "' is continuous");
  std::vector<std::size_t> counts(schema.categorical()[ref->index].vocabulary.size(), 0);
  for (const auto& e : entries) ++counts[e.categorical[ref->index]];
  DetectorReport rep{"rarity", entries.size(), {}};
  const std::string id = "rarity:" + attribute;
  for (std::size_t row = 0; row < entries.size(); ++row) {
    if (counts[entries[row].categorical[ref->index]] < min_count) rep.flags.push_back({row, id, "rarity"});
  }
  return rep;
}

inline DetectorReport rarity_scan(const Dataset& ds, const std::string& attribute, std::size_t min_count) {
  return rarity_scan(ds.schema, ds.entries, attribute, min_count);
}

// ---------------------------------------------------------------------------
// Benford

inline constexpr double kBenfordCritical = 15.507;
inline constexpr std::size_t kBenfordMinSamples = 100;

inline double benford_expected(int digit) { return std::log10(1.0 + 1.0 / digit); }

/// First significant digit of |x|; 0 for zero or non-finite x.
inline int first_digit(double x) {
  x = std::abs(x);
  if (!(x > 0.0) || !std::isfinite(x)) return 0;
  // scientific formatting sidesteps log10 rounding at exact powers of ten
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.14e", x);
  return buf[0] - '0';
}

struct BenfordResult {
  std::array<double, 9> observed{};
  std::array<double, 9> expected{};
  std::size_t n = 0;
  double statistic = 0.0;
  double critical_value = kBenfordCritical;
  bool pass = false;
};

inline BenfordResult benford_test(const std::vector<double>& amounts, double critical_value = kBenfordCritical) {
  BenfordResult r;
  r.critical_value = critical_value;
  std::array<std::size_t, 9> counts{};
  for (double a : amounts) {
    const int d = first_digit(a);
    if (d == 0) continue;
    ++counts[static_cast<std::size_t>(d - 1)];
    ++r.n;
  }
  if (r.n < kBenfordMinSamples) {
    throw DataError("benford_test: " + std::to_string(r.n) + " non-zero amounts, need at least " +
                    std::to_string(kBenfordMinSamples));
  }
  for (int d = 1; d <= 9; ++d) {
    const auto i = static_cast<std::size_t>(d - 1);
    r.observed[i] = static_cast<double>(counts[i]) / static_cast<double>(r.n);
    r.expected[i] = benford_expected(d);
    r.statistic += (r.observed[i] - r.expected[i]) * (r.observed[i] - r.expected[i]) / r.expected[i];
  }
  r.statistic *= static_cast<double>(r.n);
  r.pass = r.statistic < critical_value;
  return r;
}

inline std::vector<double> amounts_of(const AttributeSchema& schema, const std::vector<JournalEntry>& entries,
                                      const std::string& attribute) {
  const auto ref = schema.find(attribute);
  if (!ref || ref->kind != AttributeKind::continuous) throw ConfigError("'" + attribute + "' is not a continuous attribute");
  std::vector<double> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.continuous[ref->index]);
  return out;
}

inline BenfordResult benford_test(const Dataset& ds, const std::string& attribute,
                                  double critical_value = kBenfordCritical) {
  return benford_test(amounts_of(ds.schema, ds.entries, attribute), critical_value);
}

// ---------------------------------------------------------------------------
// Detector suite and attack evaluation

struct RarityCheck {
  std::string attribute;
  std::size_t min_count = 5;
};

struct BenfordCheck {
  std::string attribute = "amount_local";
  double critical_value = kBenfordCritical;
};

struct DetectorSuite {
  RuleSet rules;
  std::vector<RarityCheck> rarity;
  std::optional<BenfordCheck> benford;
  std::string amount_attribute = "amount_local";  // trial balance column

  static DetectorSuite from_json(const json& j) {
    DetectorSuite s;
    if (j.contains("rules")) s.rules = RuleSet::from_json(j);
    for (const auto& r : j.value("rarity", json::array())) {
      s.rarity.push_back({r.at("attribute").get<std::string>(), r.value("min_count", std::size_t{5})});
    }
    if (j.contains("benford")) {
      const auto& b = j.at("benford");
      s.benford = BenfordCheck{b.value("attribute", std::string("amount_local")), b.value("critical_value", kBenfordCritical)};
    }
    s.amount_attribute = j.value("amount_attribute", s.amount_attribute);
    return s;
  }

  static DetectorSuite load(const std::string& path) {
    try {
      return from_json(load_json(path));
    } catch (const json::exception& e) {
      throw ConfigError("detector suite '" + path + "': " + e.what());
    }
  }
};

struct SuiteRun {
  std::vector<DetectorReport> reports;  // red_flag, then one per rarity check
  std::optional<BenfordResult> benford;

  DetectorReport combined(std::size_t size) const {
    DetectorReport all{"all", size, {}};
    for (const auto& r : reports) all.merge(r);
    return all;
  }
};

inline SuiteRun run_suite(const AttributeSchema& schema, const std::vector<JournalEntry>& entries,
                          const DetectorSuite& suite) {
  SuiteRun run;
  run.reports.push_back(red_flag_scan(schema, entries, suite.rules));
  for (const auto& r : suite.rarity) run.reports.push_back(rarity_scan(schema, entries, r.attribute, r.min_count));
  if (suite.benford) {
    try {
      run.benford = benford_test(amounts_of(schema, entries, suite.benford->attribute), suite.benford->critical_value);
    } catch (const DataError&) {
      // too few amounts: the test does not apply
    }
  }
  return run;
}

struct AttackEvaluation {
  SuiteRun original;
  SuiteRun adversarial;
  std::size_t original_size = 0;
  std::size_t adversarial_size = 0;
  std::size_t baseline_detection = 0;  // removed rows flagged in the original
  std::size_t attack_detection = 0;    // added rows flagged in the adversarial extract
  std::int64_t trial_balance_delta_cents = 0;

  double trial_balance_delta() const { return static_cast<double>(trial_balance_delta_cents) / 100.0; }
};

inline std::int64_t total_cents(const std::vector<JournalEntry>& entries, std::size_t amount_index) {
  std::int64_t sum = 0;
  for (const auto& e : entries) sum += to_cents(e.continuous[amount_index]);
  return sum;
}

/// Checks the manifest against both extracts: removed rows exist in the
/// original with the recorded values, added rows exist in the adversarial
/// extract, and the remaining rows are the original minus the removed ones.
inline void check_manifest(const Dataset& original, const Dataset& adversarial, const ExtractManifest& manifest) {
  if (!(original.schema == adversarial.schema)) throw ConsistencyError("original and adversarial schemas differ");
  std::set<std::size_t> removed;
  for (const auto& r : manifest.removed) {
    if (r.row >= original.size()) throw ConsistencyError("removed row " + std::to_string(r.row) + " not in the original");
    if (!(original.entries[r.row] == r.entry)) {
      throw ConsistencyError("removed row " + std::to_string(r.row) + " does not match the original");
    }
    removed.insert(r.row);
  }
  std::set<std::size_t> added;
  for (const auto& a : manifest.added) {
    if (a.row >= adversarial.size()) throw ConsistencyError("added row " + std::to_string(a.row) + " missing from the adversarial extract");
    if (!(adversarial.entries[a.row] == a.entry.entry)) {
      throw ConsistencyError("added row " + std::to_string(a.row) + " does not match the adversarial extract");
    }
    added.insert(a.row);
  }
  if (adversarial.size() != original.size() - removed.size() + added.size()) {
    throw ConsistencyError("adversarial extract size does not match the manifest");
  }
  std::size_t o = 0;
  for (std::size_t row = 0; row < adversarial.size(); ++row) {
    if (added.count(row)) continue;
    while (o < original.size() && removed.count(o)) ++o;
    if (o >= original.size() || !(original.entries[o] == adversarial.entries[row])) {
      throw ConsistencyError("adversarial row " + std::to_string(row) + " is neither original nor manifest-added");
    }
    ++o;
  }
}

inline AttackEvaluation evaluate_attack(const Dataset& original, const Dataset& adversarial,
                                        const ExtractManifest& manifest, const DetectorSuite& suite) {
  check_manifest(original, adversarial, manifest);
  AttackEvaluation ev;
  ev.original_size = original.size();
  ev.adversarial_size = adversarial.size();
  ev.original = run_suite(original.schema, original.entries, suite);
  ev.adversarial = run_suite(adversarial.schema, adversarial.entries, suite);

  const auto orig_rows = ev.original.combined(original.size()).flagged_rows();
  const auto adv_rows = ev.adversarial.combined(adversarial.size()).flagged_rows();
  const std::set<std::size_t> orig_flagged(orig_rows.begin(), orig_rows.end());
  const std::set<std::size_t> adv_flagged(adv_rows.begin(), adv_rows.end());
  for (const auto& r : manifest.removed) ev.baseline_detection += orig_flagged.count(r.row);
  for (const auto& a : manifest.added) ev.attack_detection += adv_flagged.count(a.row);

  const auto ref = original.schema.find(suite.amount_attribute);
  if (!ref || ref->kind != AttributeKind::continuous) {
    throw ConfigError("trial balance attribute '" + suite.amount_attribute + "' is not continuous");
  }
  ev.trial_balance_delta_cents = total_cents(original.entries, ref->index) - total_cents(adversarial.entries, ref->index);
  return ev;
}

// ---------------------------------------------------------------------------
// Output

inline void write_flags_csv(std::ostream& out, const std::string& extract, const DetectorReport& rep) {
  for (const auto& f : rep.flags) out << csv::join({extract, std::to_string(f.row), f.detector, f.rule_id}) << '\n';
}

inline void write_flags_csv(std::ostream& out, const std::string& extract, const SuiteRun& run) {
  for (const auto& r : run.reports) write_flags_csv(out, extract, r);
}

inline void write_summary(std::ostream& out, const std::string& title, const SuiteRun& run, std::size_t size) {
  out << title << ": " << size << " entries\n";
  for (const auto& r : run.reports) {
    out << "  " << r.detector << ": " << r.flagged_count() << " flagged (rate " << csv::format_fixed(r.flag_rate(), 6)
        << ")\n";
    for (const auto& [id, count] : r.per_rule()) out << "    " << id << ": " << count << '\n';
  }
  if (run.benford) {
    out << "  benford: chi2 " << csv::format_fixed(run.benford->statistic, 4) << " vs "
        << csv::format_fixed(run.benford->critical_value, 3) << " over " << run.benford->n << " amounts -> "
        << (run.benford->pass ? "pass" : "FAIL") << '\n';
  }
}

inline void write_evaluation(std::ostream& out, const AttackEvaluation& ev) {
  write_summary(out, "original", ev.original, ev.original_size);
  write_summary(out, "adversarial", ev.adversarial, ev.adversarial_size);
  out << "baseline detection: " << ev.baseline_detection << '\n'
      << "attack detection: " << ev.attack_detection << '\n'
      << "trial balance delta: " << csv::format_fixed(ev.trial_balance_delta(), 2) << '\n';
}

}  // namespace aae
