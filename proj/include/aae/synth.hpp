#pragma once

// Synthetic journal entries drawn from a mixture of business processes.
// Each process is itself a mixture of posting variants (templates); within a
// variant the categorical attributes are independent. Every process has a
// log-normal distribution per continuous attribute. A continuous attribute may
// instead be defined relative to another one ("scale_of"), in which case its
// value is base * exp(N(mu, sigma)).

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "aae/journal.hpp"

namespace aae {

struct LogNormalSpec {
  double mu = 0.0;
  double sigma = 1.0;
  std::string scale_of;  // empty: absolute
};

using Distribution = std::vector<std::pair<std::uint32_t, double>>;

struct VariantSpec {
  std::string name;
  double weight = 0.0;
  /// Per categorical attribute (schema order), fully resolved.
  std::vector<Distribution> categorical;
};

struct ProcessSpec {
  std::string name;
  double weight = 0.0;
  /// Per categorical attribute (schema order): (code, probability) pairs.
  /// Used directly when there are no variants, else inherited by variants.
  std::vector<Distribution> categorical;
  /// Per continuous attribute (schema order).
  std::vector<LogNormalSpec> continuous;
  std::vector<VariantSpec> variants;
};

struct SynthSpec {
  AttributeSchema schema;
  std::vector<ProcessSpec> processes;

  void validate() const {
    if (processes.empty()) throw ConfigError("synthetic spec has no processes");
    double total = 0.0;
    for (const auto& p : processes) {
      if (p.weight < 0.0) throw ConfigError("process '" + p.name + "' has a negative weight");
      total += p.weight;
      if (p.categorical.size() != schema.categorical().size() || p.continuous.size() != schema.continuous().size()) {
        throw ConfigError("process '" + p.name + "' does not cover every schema attribute");
      }
      check_distributions(p.name, p.categorical, !p.variants.empty());
      double variant_total = 0.0;
      for (const auto& v : p.variants) {
        if (v.weight < 0.0) throw ConfigError("variant '" + v.name + "' has a negative weight");
        if (v.categorical.size() != schema.categorical().size()) {
          throw ConfigError("variant '" + v.name + "' does not cover every categorical attribute");
        }
        check_distributions(p.name + "/" + v.name, v.categorical);
        variant_total += v.weight;
      }
      if (!p.variants.empty() && std::abs(variant_total - 1.0) > 1e-9) {
        throw ConfigError("variant weights of '" + p.name + "' sum to " + csv::format_double(variant_total));
      }
      for (std::size_t i = 0; i < p.continuous.size(); ++i) {
        const auto& c = p.continuous[i];
        if (!(c.sigma >= 0.0)) throw ConfigError("process '" + p.name + "': sigma must be non-negative");
        if (!c.scale_of.empty()) {
          auto ref = schema.require(c.scale_of);
          if (ref.kind != AttributeKind::continuous || ref.index >= i) {
            throw ConfigError("scale_of must name an earlier continuous attribute");
          }
        }
      }
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw ConfigError("process weights sum to " + csv::format_double(total) + ", expected 1");
    }
  }

  void check_distributions(const std::string& owner, const std::vector<Distribution>& dists,
                           bool allow_empty = false) const {
    for (std::size_t i = 0; i < dists.size(); ++i) {
      if (allow_empty && dists[i].empty()) continue;
      double s = 0.0;
      for (const auto& [code, prob] : dists[i]) {
        if (prob < 0.0 || code >= schema.categorical()[i].vocabulary.size()) {
          throw ConfigError("'" + owner + "': bad distribution for '" + schema.categorical()[i].name + "'");
        }
        s += prob;
      }
      if (std::abs(s - 1.0) > 1e-9) {
        throw ConfigError("'" + owner + "': probabilities of '" + schema.categorical()[i].name + "' sum to " +
                          csv::format_double(s));
      }
    }
  }

  json distributions_json(const std::vector<Distribution>& dists) const {
    json cat = json::object();
    for (std::size_t i = 0; i < dists.size(); ++i) {
      json dist = json::array();
      for (const auto& [code, prob] : dists[i]) dist.push_back(json::array({schema.categorical()[i].vocabulary[code], prob}));
      cat[schema.categorical()[i].name] = dist;
    }
    return cat;
  }

  json to_json() const {
    json procs = json::array();
    for (const auto& p : processes) {
      json con = json::object();
      for (std::size_t i = 0; i < p.continuous.size(); ++i) {
        json c{{"mu", p.continuous[i].mu}, {"sigma", p.continuous[i].sigma}};
        if (!p.continuous[i].scale_of.empty()) c["scale_of"] = p.continuous[i].scale_of;
        con[schema.continuous()[i].name] = c;
      }
      json pj{{"name", p.name}, {"weight", p.weight}, {"categorical", distributions_json(p.categorical)}, {"continuous", con}};
      if (!p.variants.empty()) {
        json vs = json::array();
        for (const auto& v : p.variants)
          vs.push_back({{"name", v.name}, {"weight", v.weight}, {"categorical", distributions_json(v.categorical)}});
        pj["variants"] = vs;
      }
      procs.push_back(pj);
    }
    return json{{"schema", schema.to_json()}, {"processes", procs}};
  }

  static SynthSpec from_json(const json& j) {
    SynthSpec s;
    try {
      s.schema = AttributeSchema::from_json(j.at("schema"));
      for (const auto& pj : j.at("processes")) {
        ProcessSpec p;
        p.name = pj.value("name", std::string{});
        p.weight = pj.at("weight").get<double>();
        auto parse_dist = [&](std::size_t i, const json& items) {
          Distribution dist;
          const auto& attr = s.schema.categorical()[i];
          auto add = [&](const std::string& value, double prob) {
            auto code = s.schema.code_of(i, value);
            if (!code) throw VocabularyError(attr.name, value);
            dist.emplace_back(*code, prob);
          };
          // either {"B1": 0.8, ...} or [["B1", 0.8], ...]
          if (items.is_object()) {
            for (const auto& [value, prob] : items.items()) add(value, prob.get<double>());
          } else {
            for (const auto& item : items) add(item.at(0).get<std::string>(), item.at(1).get<double>());
          }
          return dist;
        };
        const json no_defaults = json::object();
        const auto& defaults = pj.contains("categorical") ? pj.at("categorical") : no_defaults;
        const bool has_variants = pj.contains("variants");
        for (std::size_t i = 0; i < s.schema.categorical().size(); ++i) {
          const auto& name = s.schema.categorical()[i].name;
          // with variants, process-level distributions are optional defaults
          p.categorical.push_back(defaults.contains(name) || !has_variants ? parse_dist(i, defaults.at(name)) : Distribution{});
        }
        for (const auto& vj : pj.value("variants", json::array())) {
          VariantSpec v{vj.value("name", std::string{}), vj.at("weight").get<double>(), {}};
          const auto& own = vj.contains("categorical") ? vj.at("categorical") : no_defaults;
          for (std::size_t i = 0; i < s.schema.categorical().size(); ++i) {
            const auto& name = s.schema.categorical()[i].name;
            if (own.contains(name)) {
              v.categorical.push_back(parse_dist(i, own.at(name)));
            } else if (!p.categorical[i].empty()) {
              v.categorical.push_back(p.categorical[i]);
            } else {
              throw ConfigError("variant '" + v.name + "' has no distribution for '" + name + "'");
            }
          }
          p.variants.push_back(std::move(v));
        }
        for (const auto& attr : s.schema.continuous()) {
          const auto& cj = pj.at("continuous").at(attr.name);
          p.continuous.push_back({cj.at("mu").get<double>(), cj.at("sigma").get<double>(),
                                  cj.value("scale_of", std::string{})});
        }
        s.processes.push_back(std::move(p));
      }
    } catch (const json::exception& e) {
      throw ConfigError(std::string("synthetic spec: ") + e.what());
    }
    s.validate();
    return s;
  }
};

namespace detail {

template <typename Rng>
std::size_t sample_index(Rng& rng, const std::vector<double>& probs) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (r < acc) return i;
  }
  // rounding slack: last index with nonzero mass
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return i;
  return probs.size() - 1;
}

inline double round_cents(double x) { return std::round(x * 100.0) / 100.0; }

}  // namespace detail

/// Draws `n` labeled entries i.i.d. from the process mixture.
inline Dataset synth_generate(const SynthSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::vector<double> weights;
  for (const auto& p : spec.processes) weights.push_back(p.weight);

  Dataset ds;
  ds.schema = spec.schema;
  ds.provenance = Provenance::synthetic;
  ds.entries.reserve(n);
  ds.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = detail::sample_index(rng, weights);
    const auto& proc = spec.processes[k];
    JournalEntry e;
    const auto* dists = &proc.categorical;
    if (!proc.variants.empty()) {
      std::vector<double> vw;
      for (const auto& v : proc.variants) vw.push_back(v.weight);
      dists = &proc.variants[detail::sample_index(rng, vw)].categorical;
    }
    for (const auto& dist : *dists) {
      std::vector<double> probs;
      for (const auto& item : dist) probs.push_back(item.second);
      e.categorical.push_back(dist[detail::sample_index(rng, probs)].first);
    }
    for (const auto& c : proc.continuous) {
      std::normal_distribution<double> normal(c.mu, c.sigma);
      double v = std::exp(normal(rng));
      if (!c.scale_of.empty()) v *= e.continuous[spec.schema.require(c.scale_of).index];
      e.continuous.push_back(detail::round_cents(std::max(v, 0.01)));
    }
    ds.entries.push_back(std::move(e));
    ds.labels.push_back(static_cast<int>(k));
  }
  ds.refit();
  return ds;
}

/// Attribute layout shared by the desk-scale experiments: the line-item
/// columns of an invoice/payment extract plus a document-currency amount.
inline AttributeSchema desk_schema() {
  AttributeSchema s;
  s.add_categorical("company_code", {"C10", "C20", "C30"});
  s.add_categorical("posting_key", {"A1", "A2", "A3", "A4", "A5"});
  s.add_categorical("account_key", {"C1", "C2", "C3", "C4"});
  s.add_categorical("gl_account", {"B1", "B2", "B3", "B10", "B11", "B24", "B30", "B31", "B32"});
  s.add_categorical("profit_center", {"C1", "C3", "C5", "C20", "C21", "C40", "C41"});
  s.add_categorical("currency_key", {"C6", "C7", "C8"});
  s.add_continuous("amount_local", "EUR", ContinuousTransform::log1p_minmax);
  s.add_continuous("amount_document", "DOC", ContinuousTransform::log1p_minmax);
  return s;
}

/// Three-process mixture: vendor invoices, automated payments and material
/// movements. Each process posts through a dominant template with a small
/// share of alternative values. Weights 4:3:2 let each process fill whole
/// modes of a 9-mode prior. GL account B24 exists in the vocabulary but no
/// process posts to it.
inline SynthSpec desk_synth_spec() {
  SynthSpec spec;
  spec.schema = desk_schema();
  const auto& schema = spec.schema;
  auto dist = [&](std::size_t attr, std::initializer_list<std::pair<const char*, double>> items) {
    Distribution d;
    for (const auto& [v, p] : items) d.emplace_back(*schema.code_of(attr, v), p);
    return d;
  };
  auto doc = LogNormalSpec{0.0, 0.02, "amount_local"};

  ProcessSpec invoices{"incoming vendor invoices", 4.0 / 9.0, {}, {}, {}};
  invoices.categorical = {dist(0, {{"C20", 1.0}}), dist(1, {{"A1", 0.97}, {"A5", 0.03}}),
                          dist(2, {{"C1", 1.0}}), dist(3, {{"B1", 0.85}, {"B2", 0.15}}),
                          dist(4, {{"C20", 0.88}, {"C21", 0.12}}), dist(5, {{"C7", 1.0}})};
  invoices.continuous = {{std::log(4000.0), 0.9, ""}, doc};

  ProcessSpec payments{"automated payment postings", 3.0 / 9.0, {}, {}, {}};
  payments.categorical = {dist(0, {{"C10", 1.0}}), dist(1, {{"A2", 1.0}}), dist(2, {{"C2", 1.0}}),
                          dist(3, {{"B10", 0.88}, {"B11", 0.12}}),
                          dist(4, {{"C1", 0.85}, {"C3", 0.10}, {"C5", 0.05}}), dist(5, {{"C8", 0.96}, {"C6", 0.04}})};
  payments.continuous = {{std::log(9000.0), 0.7, ""}, doc};

  ProcessSpec materials{"material movements", 2.0 / 9.0, {}, {}, {}};
  materials.categorical = {dist(0, {{"C30", 1.0}}), dist(1, {{"A3", 0.80}, {"A4", 0.20}}),
                           dist(2, {{"C3", 0.96}, {"C4", 0.04}}),
                           dist(3, {{"B30", 0.80}, {"B31", 0.12}, {"B32", 0.08}}),
                           dist(4, {{"C40", 0.88}, {"C41", 0.12}}), dist(5, {{"C6", 1.0}})};
  materials.continuous = {{std::log(600.0), 1.1, ""}, doc};

  spec.processes = {invoices, payments, materials};
  spec.validate();
  return spec;
}

/// Appends the two audit scenario entries: an invoice above the approval
/// border and a lone payment to GL account B24. Both carry label -1.
inline void append_scenario_entries(Dataset& ds) {
  auto code = [&](const char* attr, const char* value) {
    const auto ref = ds.schema.require(attr);
    auto c = ds.schema.code_of(ref.index, value);
    if (!c) throw ConfigError(std::string("scenario value '") + value + "' missing from '" + attr + "'");
    return *c;
  };
  auto make = [&](std::initializer_list<std::pair<const char*, const char*>> cats, double amount) {
    JournalEntry e;
    e.categorical.resize(ds.schema.categorical().size());
    e.continuous.assign(ds.schema.continuous().size(), amount);
    for (const auto& [attr, value] : cats) e.categorical[ds.schema.require(attr).index] = code(attr, value);
    return e;
  };
  ds.entries.push_back(make({{"company_code", "C20"}, {"posting_key", "A1"}, {"account_key", "C1"},
                             {"gl_account", "B1"}, {"profit_center", "C20"}, {"currency_key", "C7"}},
                            47632.45));
  ds.entries.push_back(make({{"company_code", "C10"}, {"posting_key", "A2"}, {"account_key", "C2"},
                             {"gl_account", "B24"}, {"profit_center", "C1"}, {"currency_key", "C8"}},
                            1834.20));
  ds.labels.push_back(-1);
  ds.labels.push_back(-1);
  ds.refit();
}

}  // namespace aae
