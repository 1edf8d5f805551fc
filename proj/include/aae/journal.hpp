#pragma once

// Journal entry schema, datasets, CSV ingestion, anonymization and the
// one-hot / min-max encoding consumed by the autoencoder.

#include <Eigen/Dense>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "aae/csv.hpp"
#include "aae/errors.hpp"

namespace aae {

using json = nlohmann::json;

enum class AttributeKind { categorical, continuous };

enum class ContinuousTransform { log1p_minmax, minmax };

inline std::string to_string(ContinuousTransform t) {
  return t == ContinuousTransform::log1p_minmax ? "log1p-minmax" : "minmax";
}

inline ContinuousTransform parse_transform(const std::string& s) {
  if (s == "log1p-minmax") return ContinuousTransform::log1p_minmax;
  if (s == "minmax") return ContinuousTransform::minmax;
  throw ConfigError("unknown continuous transform '" + s + "'");
}

struct CategoricalAttribute {
  std::string name;
  std::vector<std::string> vocabulary;
};

struct ContinuousAttribute {
  std::string name;
  std::string unit;
  ContinuousTransform transform = ContinuousTransform::log1p_minmax;
};

/// Position of an attribute inside its kind-specific list.
struct AttributeRef {
  AttributeKind kind;
  std::size_t index;
  friend bool operator==(const AttributeRef&, const AttributeRef&) = default;
};

class AttributeSchema {
 public:
  AttributeSchema() = default;

  void add_categorical(std::string name, std::vector<std::string> vocabulary) {
    check_new_name(name);
    CategoricalAttribute attr{std::move(name), std::move(vocabulary)};
    validate_vocab(attr);
    order_.push_back({AttributeKind::categorical, categorical_.size()});
    categorical_.push_back(std::move(attr));
    rebuild_index();
  }

  void add_continuous(std::string name, std::string unit, ContinuousTransform transform) {
    check_new_name(name);
    order_.push_back({AttributeKind::continuous, continuous_.size()});
    continuous_.push_back({std::move(name), std::move(unit), transform});
  }

  /// Appends a value to a vocabulary (extend-mode ingestion); returns its code.
  std::uint32_t extend_vocabulary(std::size_t cat_index, const std::string& value) {
    auto& attr = categorical_.at(cat_index);
    attr.vocabulary.push_back(value);
    value_index_.at(cat_index).emplace(value, static_cast<std::uint32_t>(attr.vocabulary.size() - 1));
    return static_cast<std::uint32_t>(attr.vocabulary.size() - 1);
  }

  void rename_vocabulary(std::size_t cat_index, std::vector<std::string> vocabulary) {
    if (vocabulary.size() != categorical_.at(cat_index).vocabulary.size()) {
      throw DimensionError("rename_vocabulary: size mismatch");
    }
    CategoricalAttribute renamed{categorical_[cat_index].name, std::move(vocabulary)};
    validate_vocab(renamed);
    categorical_[cat_index] = std::move(renamed);
    rebuild_index();
  }

  const std::vector<CategoricalAttribute>& categorical() const { return categorical_; }
  const std::vector<ContinuousAttribute>& continuous() const { return continuous_; }
  const std::vector<AttributeRef>& order() const { return order_; }

  std::size_t attribute_count() const { return order_.size(); }

  const std::string& name(const AttributeRef& ref) const {
    return ref.kind == AttributeKind::categorical ? categorical_.at(ref.index).name : continuous_.at(ref.index).name;
  }

  std::optional<AttributeRef> find(std::string_view name) const {
    for (const auto& ref : order_)
      if (this->name(ref) == name) return ref;
    return std::nullopt;
  }

  AttributeRef require(std::string_view name) const {
    auto ref = find(name);
    if (!ref) throw ConfigError("unknown attribute '" + std::string(name) + "'");
    return *ref;
  }

  std::optional<std::uint32_t> code_of(std::size_t cat_index, const std::string& value) const {
    const auto& idx = value_index_.at(cat_index);
    auto it = idx.find(value);
    if (it == idx.end()) return std::nullopt;
    return it->second;
  }

  /// Σ|vocab| + |continuous|.
  long encoded_dim() const { return categorical_dim() + static_cast<long>(continuous_.size()); }

  long categorical_dim() const {
    long n = 0;
    for (const auto& c : categorical_) n += static_cast<long>(c.vocabulary.size());
    return n;
  }

  /// Offset of categorical block `i` in the encoded vector.
  long block_offset(std::size_t i) const {
    long off = 0;
    for (std::size_t k = 0; k < i; ++k) off += static_cast<long>(categorical_[k].vocabulary.size());
    return off;
  }

  json to_json() const {
    json attrs = json::array();
    for (const auto& ref : order_) {
      if (ref.kind == AttributeKind::categorical) {
        const auto& c = categorical_[ref.index];
        attrs.push_back({{"name", c.name}, {"kind", "categorical"}, {"vocabulary", c.vocabulary}});
      } else {
        const auto& c = continuous_[ref.index];
        attrs.push_back(
            {{"name", c.name}, {"kind", "continuous"}, {"unit", c.unit}, {"transform", to_string(c.transform)}});
      }
    }
    return json{{"attributes", attrs}};
  }

  static AttributeSchema from_json(const json& j) {
    AttributeSchema s;
    try {
      for (const auto& a : j.at("attributes")) {
        const auto kind = a.at("kind").get<std::string>();
        if (kind == "categorical") {
          s.add_categorical(a.at("name").get<std::string>(), a.at("vocabulary").get<std::vector<std::string>>());
        } else if (kind == "continuous") {
          s.add_continuous(a.at("name").get<std::string>(), a.value("unit", std::string{}),
                           parse_transform(a.value("transform", std::string("log1p-minmax"))));
        } else {
          throw ConfigError("attribute kind must be categorical or continuous, got '" + kind + "'");
        }
      }
    } catch (const json::exception& e) {
      throw ConfigError(std::string("schema: ") + e.what());
    }
    return s;
  }

  static AttributeSchema load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open schema '" + path + "'");
    try {
      return from_json(json::parse(in));
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("schema '") + path + "': " + e.what());
    }
  }

  friend bool operator==(const AttributeSchema& a, const AttributeSchema& b) { return a.to_json() == b.to_json(); }

 private:
  void check_new_name(const std::string& name) const {
    if (name.empty()) throw ConfigError("attribute name must not be empty");
    if (find(name)) throw ConfigError("duplicate attribute name '" + name + "'");
  }

  static void validate_vocab(const CategoricalAttribute& c) {
    if (c.vocabulary.empty()) throw ConfigError("vocabulary of '" + c.name + "' is empty");
    std::set<std::string> seen(c.vocabulary.begin(), c.vocabulary.end());
    if (seen.size() != c.vocabulary.size()) throw ConfigError("vocabulary of '" + c.name + "' has duplicates");
  }

  void rebuild_index() {
    value_index_.clear();
    for (const auto& c : categorical_) {
      std::unordered_map<std::string, std::uint32_t> idx;
      for (std::size_t i = 0; i < c.vocabulary.size(); ++i) idx.emplace(c.vocabulary[i], static_cast<std::uint32_t>(i));
      value_index_.push_back(std::move(idx));
    }
  }

  std::vector<CategoricalAttribute> categorical_;
  std::vector<ContinuousAttribute> continuous_;
  std::vector<AttributeRef> order_;
  std::vector<std::unordered_map<std::string, std::uint32_t>> value_index_;
};

/// One line item. Categorical values are vocabulary codes.
struct JournalEntry {
  std::vector<std::uint32_t> categorical;
  std::vector<double> continuous;

  friend bool operator==(const JournalEntry&, const JournalEntry&) = default;
};

inline void validate_entry(const AttributeSchema& schema, const JournalEntry& e) {
  if (e.categorical.size() != schema.categorical().size() || e.continuous.size() != schema.continuous().size()) {
    throw DimensionError("entry does not match schema attribute counts");
  }
  for (std::size_t i = 0; i < e.categorical.size(); ++i) {
    if (e.categorical[i] >= schema.categorical()[i].vocabulary.size()) {
      throw VocabularyError(schema.categorical()[i].name, "#" + std::to_string(e.categorical[i]));
    }
  }
  for (double v : e.continuous)
    if (!std::isfinite(v)) throw NumericError("entry has a non-finite continuous value");
}

/// Value of an attribute rendered as text (vocabulary string or number).
inline std::string attribute_text(const AttributeSchema& schema, const JournalEntry& e, const AttributeRef& ref) {
  if (ref.kind == AttributeKind::categorical) return schema.categorical()[ref.index].vocabulary[e.categorical[ref.index]];
  return csv::format_double(e.continuous[ref.index]);
}

/// Min/max of each continuous attribute in transformed space.
struct FittedStats {
  std::vector<double> min;
  std::vector<double> max;

  bool fitted() const { return !min.empty() || !max.empty(); }

  json to_json() const { return json{{"min", min}, {"max", max}}; }
  static FittedStats from_json(const json& j) {
    return {j.at("min").get<std::vector<double>>(), j.at("max").get<std::vector<double>>()};
  }
  friend bool operator==(const FittedStats&, const FittedStats&) = default;
};

inline double forward_transform(ContinuousTransform t, double x) {
  if (t == ContinuousTransform::log1p_minmax) {
    if (!(x > -1.0)) throw NumericError("log1p transform needs values > -1");
    return std::log1p(x);
  }
  return x;
}

inline double inverse_transform(ContinuousTransform t, double v) {
  return t == ContinuousTransform::log1p_minmax ? std::expm1(v) : v;
}

inline FittedStats fit_stats(const AttributeSchema& schema, const std::vector<JournalEntry>& entries) {
  FittedStats s;
  const auto& cont = schema.continuous();
  if (entries.empty() || cont.empty()) return s;
  s.min.assign(cont.size(), std::numeric_limits<double>::infinity());
  s.max.assign(cont.size(), -std::numeric_limits<double>::infinity());
  for (const auto& e : entries) {
    for (std::size_t i = 0; i < cont.size(); ++i) {
      const double t = forward_transform(cont[i].transform, e.continuous[i]);
      s.min[i] = std::min(s.min[i], t);
      s.max[i] = std::max(s.max[i], t);
    }
  }
  for (std::size_t i = 0; i < cont.size(); ++i) {
    if (!(s.min[i] < s.max[i])) throw DataError("degenerate continuous attribute '" + cont[i].name + "' (min == max)");
  }
  return s;
}

enum class Provenance { real_extract, synthetic };

inline std::string to_string(Provenance p) { return p == Provenance::synthetic ? "synthetic" : "real-extract"; }

struct Dataset {
  AttributeSchema schema;
  std::vector<JournalEntry> entries;
  Provenance provenance = Provenance::real_extract;
  FittedStats stats;
  /// Generating process per entry (synthetic data only; never used in training).
  std::vector<int> labels;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }

  void refit() { stats = fit_stats(schema, entries); }
};

// ---------------------------------------------------------------------------
// Encoding

/// Concatenated one-hot blocks followed by the scaled continuous values.
struct EncodedEntry {
  Eigen::VectorXd values;
  long categorical_dim = 0;

  auto x_cat() const { return values.head(categorical_dim); }
  auto x_con() const { return values.tail(values.size() - categorical_dim); }
};

/// Counts continuous inputs that fell outside the fitted range and were clamped.
struct EncodeDiagnostics {
  std::size_t clamped = 0;
};

inline void encode_into(const AttributeSchema& schema, const FittedStats& stats, const JournalEntry& e,
                        double* out, EncodeDiagnostics* diag = nullptr) {
  validate_entry(schema, e);
  if (!schema.continuous().empty() && !stats.fitted()) throw StateError("encode: continuous stats not fitted");
  long off = 0;
  for (std::size_t i = 0; i < schema.categorical().size(); ++i) {
    const auto n = static_cast<long>(schema.categorical()[i].vocabulary.size());
    std::fill(out + off, out + off + n, 0.0);
    out[off + e.categorical[i]] = 1.0;
    off += n;
  }
  for (std::size_t i = 0; i < schema.continuous().size(); ++i) {
    const double t = forward_transform(schema.continuous()[i].transform, e.continuous[i]);
    double v = (t - stats.min[i]) / (stats.max[i] - stats.min[i]);
    if (v < 0.0 || v > 1.0) {
      v = std::clamp(v, 0.0, 1.0);
      if (diag) ++diag->clamped;
    }
    out[off++] = v;
  }
}

inline EncodedEntry encode_entry(const AttributeSchema& schema, const FittedStats& stats, const JournalEntry& e,
                                 EncodeDiagnostics* diag = nullptr) {
  EncodedEntry enc;
  enc.values.resize(schema.encoded_dim());
  enc.categorical_dim = schema.categorical_dim();
  encode_into(schema, stats, e, enc.values.data(), diag);
  return enc;
}

/// Encodes every entry as one column.
inline Eigen::MatrixXd encode_all(const AttributeSchema& schema, const FittedStats& stats,
                                  const std::vector<JournalEntry>& entries, EncodeDiagnostics* diag = nullptr) {
  Eigen::MatrixXd m(schema.encoded_dim(), static_cast<long>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) encode_into(schema, stats, entries[i], m.col(static_cast<long>(i)).data(), diag);
  return m;
}

struct DecodedEntry {
  JournalEntry entry;
  /// Per categorical attribute: winning probability after block renormalization.
  std::vector<double> confidence;
};

/// Argmax index of a block (lowest index wins ties) and its renormalized mass.
inline std::pair<std::uint32_t, double> block_argmax(const double* block, std::size_t n) {
  std::uint32_t best = 0;
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    sum += block[j];
    if (block[j] > block[best]) best = static_cast<std::uint32_t>(j);
  }
  return {best, sum > 0.0 ? block[best] / sum : 1.0 / static_cast<double>(n)};
}

inline DecodedEntry decode_vector(const AttributeSchema& schema, const FittedStats& stats, std::span<const double> x) {
  if (static_cast<long>(x.size()) != schema.encoded_dim()) {
    throw DimensionError("decode: expected length " + std::to_string(schema.encoded_dim()) + ", got " +
                         std::to_string(x.size()));
  }
  DecodedEntry d;
  std::size_t off = 0;
  for (const auto& c : schema.categorical()) {
    auto [idx, conf] = block_argmax(x.data() + off, c.vocabulary.size());
    d.entry.categorical.push_back(idx);
    d.confidence.push_back(conf);
    off += c.vocabulary.size();
  }
  for (std::size_t i = 0; i < schema.continuous().size(); ++i) {
    const double t = stats.min[i] + x[off++] * (stats.max[i] - stats.min[i]);
    d.entry.continuous.push_back(inverse_transform(schema.continuous()[i].transform, t));
  }
  return d;
}

// ---------------------------------------------------------------------------
// CSV ingestion / export

struct LoadOptions {
  /// When unset the schema is inferred from the file.
  std::optional<AttributeSchema> schema;
  /// Unknown categorical values extend the vocabulary instead of failing.
  bool extend_vocabulary = false;
  /// Fit min/max stats (rejects degenerate continuous attributes).
  bool fit_stats = true;
};

namespace detail {

inline AttributeSchema infer_schema(const std::vector<std::string>& header,
                                    const std::vector<std::vector<std::string>>& rows) {
  AttributeSchema s;
  for (std::size_t c = 0; c < header.size(); ++c) {
    bool numeric = !rows.empty();
    bool non_negative = true;
    for (const auto& r : rows) {
      auto v = csv::parse_double(r[c]);
      if (!v || !std::isfinite(*v)) {
        numeric = false;
        break;
      }
      non_negative = non_negative && *v >= 0.0;
    }
    if (numeric) {
      s.add_continuous(header[c], "", non_negative ? ContinuousTransform::log1p_minmax : ContinuousTransform::minmax);
    } else {
      std::vector<std::string> vocab;
      std::set<std::string> seen;
      for (const auto& r : rows)
        if (seen.insert(r[c]).second) vocab.push_back(r[c]);
      if (vocab.empty()) vocab.push_back("");
      s.add_categorical(header[c], std::move(vocab));
    }
  }
  return s;
}

}  // namespace detail

inline Dataset parse_csv(std::istream& in, LoadOptions opts = {}) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("missing header row", 1);
  ++line_no;
  auto header = csv::split(line);
  if (!header) throw ParseError("malformed header", line_no);

  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = csv::split(line);
    if (!fields) throw ParseError("unterminated quote", line_no);
    if (fields->size() != header->size()) {
      throw ParseError("expected " + std::to_string(header->size()) + " fields, got " + std::to_string(fields->size()),
                       line_no);
    }
    rows.push_back(std::move(*fields));
    row_lines.push_back(line_no);
  }

  Dataset ds;
  ds.schema = opts.schema ? *opts.schema : detail::infer_schema(*header, rows);

  // column index for each schema attribute
  std::vector<std::size_t> column_of(ds.schema.attribute_count());
  for (std::size_t a = 0; a < ds.schema.order().size(); ++a) {
    const auto& name = ds.schema.name(ds.schema.order()[a]);
    auto it = std::find(header->begin(), header->end(), name);
    if (it == header->end()) throw ParseError("header lacks attribute '" + name + "'", 1);
    column_of[a] = static_cast<std::size_t>(it - header->begin());
  }

  ds.entries.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    JournalEntry e;
    e.categorical.resize(ds.schema.categorical().size());
    e.continuous.resize(ds.schema.continuous().size());
    for (std::size_t a = 0; a < ds.schema.order().size(); ++a) {
      const auto& ref = ds.schema.order()[a];
      const auto& text = rows[r][column_of[a]];
      if (ref.kind == AttributeKind::categorical) {
        auto code = ds.schema.code_of(ref.index, text);
        if (!code) {
          if (!opts.extend_vocabulary) throw VocabularyError(ds.schema.categorical()[ref.index].name, text);
          code = ds.schema.extend_vocabulary(ref.index, text);
        }
        e.categorical[ref.index] = *code;
      } else {
        auto v = csv::parse_double(text);
        if (!v || !std::isfinite(*v)) throw ParseError("non-numeric value '" + text + "' for continuous attribute", row_lines[r]);
        e.continuous[ref.index] = *v;
      }
    }
    ds.entries.push_back(std::move(e));
  }
  if (opts.fit_stats) ds.refit();
  return ds;
}

inline Dataset load_csv(const std::string& path, LoadOptions opts = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_csv(in, std::move(opts));
}

inline std::vector<std::string> csv_header(const AttributeSchema& schema) {
  std::vector<std::string> h;
  for (const auto& ref : schema.order()) h.push_back(schema.name(ref));
  return h;
}

inline std::vector<std::string> csv_fields(const AttributeSchema& schema, const JournalEntry& e) {
  std::vector<std::string> f;
  for (const auto& ref : schema.order()) f.push_back(attribute_text(schema, e, ref));
  return f;
}

inline void write_csv(std::ostream& out, const AttributeSchema& schema, const std::vector<JournalEntry>& entries) {
  out << csv::join(csv_header(schema)) << '\n';
  for (const auto& e : entries) out << csv::join(csv_fields(schema, e)) << '\n';
}

inline void save_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_csv(out, ds.schema, ds.entries);
}

inline void save_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Anonymization

namespace detail {

inline std::string hmac_token(const std::string& key, const std::string& message, std::size_t hex_len) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), reinterpret_cast<const unsigned char*>(message.data()),
       message.size(), digest, &len);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len && out.size() < hex_len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  out.resize(std::min(out.size(), hex_len));
  return out;
}

}  // namespace detail

/// Replaces every categorical value by a keyed HMAC-SHA256 token (10 hex
/// chars). Equal values map to equal tokens; continuous values are untouched.
/// On a token collision inside one attribute the attribute is re-keyed.
inline Dataset anonymize(const Dataset& ds, const std::string& salt) {
  Dataset out = ds;
  for (std::size_t i = 0; i < ds.schema.categorical().size(); ++i) {
    const auto& attr = ds.schema.categorical()[i];
    for (int round = 0;; ++round) {
      const std::string key = round == 0 ? salt : salt + "#" + std::to_string(round);
      std::vector<std::string> tokens;
      std::set<std::string> seen;
      for (const auto& v : attr.vocabulary) {
        tokens.push_back(detail::hmac_token(key, attr.name + '\x1f' + v, 10));
        seen.insert(tokens.back());
      }
      if (seen.size() == tokens.size()) {
        out.schema.rename_vocabulary(i, std::move(tokens));
        break;
      }
    }
  }
  return out;
}

}  // namespace aae
