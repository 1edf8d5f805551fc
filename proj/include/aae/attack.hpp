#pragma once

// Adversarial journal entries sampled from an adversarial sampling region:
// latent trajectory traversal, anomaly replacement (split an entry above an
// approval border into several compliant entries with the same total) and
// anomaly augmentation (surround an isolated entry with look-alikes).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "aae/latent.hpp"

namespace aae {

struct AttackProvenance {
  std::size_t region_k = 0;
  double threshold = 0.0;
  std::size_t step = 0;           // traversal step or region member index
  std::string conditioning;       // "none", "filter" or "overwrite"
  Eigen::Vector2d source_z{0, 0}; // latent point the entry was decoded from
};

/// A generated entry. `z` is the latent code of the emitted entry and
/// `robustness` = d(z) under the generating checkpoint.
struct AdversarialEntry {
  JournalEntry entry;
  Eigen::Vector2d z{0, 0};
  double robustness = 0.0;
  bool in_region = true;
  AttackProvenance provenance;
};

inline double round_currency(double amount) { return std::round(amount * 100.0) / 100.0; }
inline std::int64_t to_cents(double amount) { return std::llround(amount * 100.0); }

// ---------------------------------------------------------------------------
// Trajectory traversal

enum class Axis { z1, z2 };

/// Samples a, a + step, ..., b along `axis` with the other coordinate fixed.
/// Samples outside the region are kept and flagged.
inline std::vector<AdversarialEntry> traverse_trajectory(const AAEModel& model, const AdversarialRegion& region,
                                                         Axis axis, double a, double b, double step,
                                                         double fixed_other) {
  if (!(step > 0.0)) throw ConfigError("traversal step must be positive");
  if (!(a <= b)) throw ConfigError("traversal range must satisfy a <= b");
  const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
  std::vector<AdversarialEntry> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = a + static_cast<double>(i) * step;
    const Eigen::Vector2d z = axis == Axis::z1 ? Eigen::Vector2d(t, fixed_other) : Eigen::Vector2d(fixed_other, t);
    AdversarialEntry e;
    e.entry = model.decode_entry(z).entry;
    e.z = z;
    e.robustness = model.discriminate(z);
    e.in_region = region.contains(model.prior, z, e.robustness);
    e.provenance = {region.k, region.threshold, i, "none", z};
    out.push_back(std::move(e));
  }
  return out;
}

/// Spearman rank correlation with average ranks for ties. NaN when either
/// side is constant or fewer than two samples are given.
inline double rank_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionError("rank_correlation: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  auto ranks = [n](const std::vector<double>& v) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return v[i] < v[j]; });
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

/// Rank correlation between closeness to the region mode (negative distance)
/// and robustness, over the in-region traversal samples.
inline double traversal_mode_correlation(const std::vector<AdversarialEntry>& traversal,
                                         const AdversarialRegion& region) {
  if (!region.mode) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::Vector2d mode = region.mode_point();
  std::vector<double> closeness, robustness;
  for (const auto& s : traversal) {
    if (!s.in_region) continue;
    closeness.push_back(-(s.z - mode).norm());
    robustness.push_back(s.robustness);
  }
  return rank_correlation(closeness, robustness);
}

// ---------------------------------------------------------------------------
// Shared helpers

namespace detail {

struct Candidate {
  std::size_t member = 0;  // index into region.members
  Eigen::Vector2d z;
  JournalEntry decoded;
};

inline std::vector<Candidate> decode_region(const AAEModel& model, const AdversarialRegion& region) {
  std::vector<Candidate> out(region.members.size());
  for (std::size_t m = 0; m < region.members.size(); ++m) {
    out[m].member = m;
    out[m].z = region.grid.point(region.members[m]);
    out[m].decoded = model.decode_entry(out[m].z).entry;
  }
  return out;
}

inline void round_amounts(JournalEntry& e) {
  for (auto& v : e.continuous) v = round_currency(v);
}

/// Distributes `total_cents` over `weights` proportionally; the rounding
/// residual goes to the largest share so the sum is exact.
inline std::vector<std::int64_t> proportional_cents(const std::vector<double>& weights, std::int64_t total_cents) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::int64_t> out(weights.size());
  std::int64_t acc = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out[i] = std::llround(static_cast<double>(total_cents) * weights[i] / sum);
    acc += out[i];
  }
  const auto largest = static_cast<std::size_t>(std::max_element(out.begin(), out.end()) - out.begin());
  out[largest] += total_cents - acc;
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Anomaly replacement

struct ReplacementSpec {
  JournalEntry target;
  std::string amount_attribute = "amount_local";
  double approval_border = 25000.0;
  std::size_t n_splits = 5;
  /// Attributes held at the target's values (categorical or continuous).
  std::vector<std::string> conditioned;
  std::size_t retry_budget = 1000;
  /// Desired split magnitudes are target / n_splits * (1 +- jitter).
  double jitter = 0.6;
  std::uint64_t seed = 0;
};

/// Splits `spec.target` into `n_splits` entries sampled from `region` whose
/// amounts add up to the target amount to the cent, each below the border,
/// with conditioned attributes equal to the target's and d(re-encoded) at or
/// above the region threshold.
inline std::vector<AdversarialEntry> replace_anomaly(const AAEModel& model, const AdversarialRegion& region,
                                                     const ReplacementSpec& spec) {
  validate_entry(model.schema, spec.target);
  const auto amount_ref = model.schema.require(spec.amount_attribute);
  if (amount_ref.kind != AttributeKind::continuous) throw ConfigError("amount attribute must be continuous");
  const double total = spec.target.continuous[amount_ref.index];
  if (spec.n_splits < 2) throw ConfigError("replacement needs at least 2 splits");
  if (!(total > spec.approval_border)) throw ConfigError("target amount does not exceed the approval border");
  const std::int64_t total_cents = to_cents(total);
  const std::int64_t border_cents = to_cents(spec.approval_border);
  if (static_cast<std::int64_t>(spec.n_splits) * (border_cents - 1) < total_cents) {
    throw InfeasibleAttackError("attack infeasible: " + std::to_string(spec.n_splits) +
                                " splits cannot each stay below the border of " + csv::format_fixed(spec.approval_border, 2));
  }
  std::vector<AttributeRef> conditioned;
  for (const auto& name : spec.conditioned) {
    auto ref = model.schema.require(name);
    if (ref == amount_ref) throw ConfigError("the split amount attribute cannot be conditioned");
    conditioned.push_back(ref);
  }
  if (region.empty()) {
    throw InfeasibleAttackError("attack infeasible: adversarial region " + std::to_string(region.k) +
                                " is empty (max d in cell " + csv::format_double(region.max_in_cell) + ")");
  }

  auto matches = [&](const JournalEntry& e) {
    for (const auto& ref : conditioned) {
      if (ref.kind == AttributeKind::categorical && e.categorical[ref.index] != spec.target.categorical[ref.index])
        return false;
    }
    return true;
  };
  auto candidates = detail::decode_region(model, region);
  std::string conditioning = "filter";
  std::vector<detail::Candidate> pool;
  for (auto& c : candidates)
    if (matches(c.decoded)) pool.push_back(c);
  if (pool.size() < spec.n_splits) {
    conditioning = "overwrite";
    pool = std::move(candidates);
  }
  for (auto& c : pool) {
    for (const auto& ref : conditioned) {
      if (ref.kind == AttributeKind::categorical) {
        c.decoded.categorical[ref.index] = spec.target.categorical[ref.index];
      } else {
        c.decoded.continuous[ref.index] = spec.target.continuous[ref.index];
      }
    }
  }
  if (pool.size() < spec.n_splits) {
    throw InfeasibleAttackError("attack infeasible: region has " + std::to_string(pool.size()) + " points, need " +
                                std::to_string(spec.n_splits));
  }

  // Walk the amount trajectory: candidates ordered by decoded amount.
  std::sort(pool.begin(), pool.end(), [&](const auto& l, const auto& r) {
    const double a = l.decoded.continuous[amount_ref.index];
    const double b = r.decoded.continuous[amount_ref.index];
    return a != b ? a < b : l.member < r.member;
  });

  std::mt19937_64 rng(nn::mix_seed(spec.seed));
  std::uniform_real_distribution<double> jitter(-spec.jitter, spec.jitter);
  std::vector<bool> rejected(pool.size(), false);
  std::size_t evaluated = 0;
  double best_seen = 0.0;
  std::size_t attempts = 0;

  while (evaluated + spec.n_splits <= spec.retry_budget) {
    ++attempts;
    // pick the closest unused, non-rejected candidate to each desired magnitude
    std::vector<std::size_t> chosen;
    std::vector<bool> taken = rejected;
    for (std::size_t s = 0; s < spec.n_splits; ++s) {
      const double desired = total / static_cast<double>(spec.n_splits) * (1.0 + jitter(rng));
      std::size_t best = pool.size();
      double best_gap = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (taken[i]) continue;
        const double amount = std::max(pool[i].decoded.continuous[amount_ref.index], 0.01);
        const double gap = std::abs(std::log(amount) - std::log(desired));
        if (gap < best_gap) {
          best_gap = gap;
          best = i;
        }
      }
      if (best == pool.size()) break;
      taken[best] = true;
      chosen.push_back(best);
    }
    if (chosen.size() < spec.n_splits) break;

    // rescale every continuous attribute (except conditioned ones) so the
    // amount column adds up to the target exactly
    std::vector<double> weights;
    for (auto i : chosen) weights.push_back(std::max(pool[i].decoded.continuous[amount_ref.index], 0.01));
    const auto cents = detail::proportional_cents(weights, total_cents);
    if (*std::max_element(cents.begin(), cents.end()) >= border_cents) {
      // the largest candidate is too large; skip it in later attempts
      rejected[chosen[static_cast<std::size_t>(std::max_element(cents.begin(), cents.end()) - cents.begin())]] = true;
      evaluated += spec.n_splits;
      continue;
    }

    std::vector<AdversarialEntry> out;
    bool ok = true;
    for (std::size_t s = 0; s < chosen.size(); ++s) {
      const auto& cand = pool[chosen[s]];
      AdversarialEntry adv;
      adv.entry = cand.decoded;
      const double factor = static_cast<double>(cents[s]) / 100.0 / weights[s];
      for (std::size_t c = 0; c < adv.entry.continuous.size(); ++c) {
        const AttributeRef ref{AttributeKind::continuous, c};
        if (std::find(conditioned.begin(), conditioned.end(), ref) != conditioned.end()) continue;
        adv.entry.continuous[c] = c == amount_ref.index ? static_cast<double>(cents[s]) / 100.0
                                                        : round_currency(adv.entry.continuous[c] * factor);
      }
      adv.z = model.encode(adv.entry);
      adv.robustness = model.discriminate(adv.z);
      adv.in_region = region.contains(model.prior, adv.z, adv.robustness);
      adv.provenance = {region.k, region.threshold, cand.member, conditioning, cand.z};
      best_seen = std::max(best_seen, adv.robustness);
      ++evaluated;
      if (adv.robustness < region.threshold) {
        rejected[chosen[s]] = true;
        ok = false;
      }
      out.push_back(std::move(adv));
    }
    if (ok) return out;
  }
  throw InfeasibleAttackError("attack infeasible: no split set met the constraints after " + std::to_string(attempts) +
                              " attempts (" + std::to_string(evaluated) + " points, " + std::to_string(pool.size()) +
                              " candidates, " + conditioning + " conditioning, best robustness " +
                              csv::format_double(best_seen) + ", threshold " + csv::format_double(region.threshold) + ")");
}

// ---------------------------------------------------------------------------
// Anomaly augmentation

struct AugmentationSpec {
  JournalEntry target;
  std::string conditioned_attribute = "gl_account";
  std::size_t n_samples = 15;
  double min_robustness = 0.5;
  std::size_t retry_budget = 1000;
  std::uint64_t seed = 0;
};

/// Generates `n_samples` entries sharing the target's value of the
/// conditioned attribute. Candidates introducing a new combination of the
/// other categorical attributes are preferred so the batch varies.
inline std::vector<AdversarialEntry> augment_anomaly(const AAEModel& model, const AdversarialRegion& region,
                                                     const AugmentationSpec& spec) {
  validate_entry(model.schema, spec.target);
  const auto ref = model.schema.require(spec.conditioned_attribute);
  if (ref.kind != AttributeKind::categorical) throw ConfigError("conditioned attribute must be categorical");
  if (spec.n_samples < 1) throw ConfigError("augmentation needs n_samples >= 1");
  if (!(spec.min_robustness >= 0.0 && spec.min_robustness <= 1.0)) {
    throw ConfigError("min_robustness must lie in [0, 1]");
  }
  if (region.members.size() < spec.n_samples) {
    throw InfeasibleAttackError("attack infeasible: region " + std::to_string(region.k) + " has " +
                                std::to_string(region.members.size()) + " points, need " +
                                std::to_string(spec.n_samples));
  }
  const auto value = spec.target.categorical[ref.index];

  std::vector<std::size_t> order(region.members.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(nn::mix_seed(spec.seed));
  std::shuffle(order.begin(), order.end(), rng);

  struct Passing {
    AdversarialEntry entry;
    std::vector<std::uint32_t> others;
  };
  std::vector<Passing> passing;
  const std::size_t budget = std::min(spec.retry_budget, order.size());
  double best_seen = 0.0;
  std::set<std::vector<std::uint32_t>> seen_combos;
  std::vector<AdversarialEntry> out;
  for (std::size_t i = 0; i < budget && out.size() < spec.n_samples; ++i) {
    const auto m = order[i];
    const Eigen::Vector2d z = region.grid.point(region.members[m]);
    AdversarialEntry adv;
    adv.entry = model.decode_entry(z).entry;
    const bool native = adv.entry.categorical[ref.index] == value;
    adv.entry.categorical[ref.index] = value;
    detail::round_amounts(adv.entry);
    adv.z = model.encode(adv.entry);
    adv.robustness = model.discriminate(adv.z);
    adv.in_region = region.contains(model.prior, adv.z, adv.robustness);
    adv.provenance = {region.k, region.threshold, m, native ? "filter" : "overwrite", z};
    best_seen = std::max(best_seen, adv.robustness);
    if (adv.robustness < spec.min_robustness) continue;
    auto others = adv.entry.categorical;
    others.erase(others.begin() + static_cast<long>(ref.index));
    if (seen_combos.insert(others).second) {
      out.push_back(std::move(adv));
    } else {
      passing.push_back({std::move(adv), std::move(others)});
    }
  }
  for (std::size_t i = 0; out.size() < spec.n_samples && i < passing.size(); ++i) out.push_back(passing[i].entry);
  if (out.size() < spec.n_samples) {
    throw InfeasibleAttackError("attack infeasible: only " + std::to_string(out.size()) + " of " +
                                std::to_string(spec.n_samples) + " samples reached robustness " +
                                csv::format_double(spec.min_robustness) + " (best " + csv::format_double(best_seen) + ")");
  }
  // keep region order so results read like a traversal
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.provenance.step < b.provenance.step; });
  return out;
}

// ---------------------------------------------------------------------------
// Adversarial extract

struct ExtractManifest {
  struct Removed {
    std::size_t row = 0;  // row id in the original dataset
    JournalEntry entry;
  };
  struct Added {
    std::size_t row = 0;  // row id in the adversarial extract
    AdversarialEntry entry;
  };
  std::vector<Removed> removed;
  std::vector<Added> added;
};

/// Original rows minus `removed_rows`, followed by `added`.
inline std::pair<std::vector<JournalEntry>, ExtractManifest> build_adversarial_extract(
    const Dataset& original, const std::vector<std::size_t>& removed_rows, const std::vector<AdversarialEntry>& added) {
  std::set<std::size_t> removed(removed_rows.begin(), removed_rows.end());
  if (removed.size() != removed_rows.size()) throw ConsistencyError("a row is removed twice");
  ExtractManifest manifest;
  for (auto r : removed) {
    if (r >= original.size()) throw ConsistencyError("removed row " + std::to_string(r) + " not in the original extract");
    manifest.removed.push_back({r, original.entries[r]});
  }
  std::vector<JournalEntry> rows;
  rows.reserve(original.size() - removed.size() + added.size());
  for (std::size_t i = 0; i < original.size(); ++i)
    if (!removed.count(i)) rows.push_back(original.entries[i]);
  for (const auto& a : added) {
    validate_entry(original.schema, a.entry);
    manifest.added.push_back({rows.size(), a});
    rows.push_back(a.entry);
  }
  return {std::move(rows), std::move(manifest)};
}

/// Finds the row ids of `entries` in the original (first unused exact match).
inline std::vector<std::size_t> find_rows(const Dataset& original, const std::vector<JournalEntry>& entries) {
  std::vector<std::size_t> rows;
  std::set<std::size_t> used;
  for (const auto& e : entries) {
    std::size_t found = original.size();
    for (std::size_t i = 0; i < original.size(); ++i) {
      if (!used.count(i) && original.entries[i] == e) {
        found = i;
        break;
      }
    }
    if (found == original.size()) throw ConsistencyError("removed entry not found in the original extract");
    used.insert(found);
    rows.push_back(found);
  }
  return rows;
}

inline std::vector<std::string> manifest_header(const AttributeSchema& schema) {
  std::vector<std::string> h{"action", "row", "z1", "z2", "robustness", "region_k", "threshold", "step", "conditioning"};
  for (auto& name : csv_header(schema)) h.push_back(name);
  return h;
}

inline void write_manifest(std::ostream& out, const AttributeSchema& schema, const ExtractManifest& m) {
  out << csv::join(manifest_header(schema)) << '\n';
  for (const auto& r : m.removed) {
    std::vector<std::string> f{"removed", std::to_string(r.row), "", "", "", "", "", "", ""};
    for (auto& v : csv_fields(schema, r.entry)) f.push_back(v);
    out << csv::join(f) << '\n';
  }
  for (const auto& a : m.added) {
    const auto& e = a.entry;
    std::vector<std::string> f{"added",
                               std::to_string(a.row),
                               csv::format_double(e.z.x()),
                               csv::format_double(e.z.y()),
                               csv::format_double(e.robustness),
                               std::to_string(e.provenance.region_k),
                               csv::format_double(e.provenance.threshold),
                               std::to_string(e.provenance.step),
                               e.provenance.conditioning};
    for (auto& v : csv_fields(schema, e.entry)) f.push_back(v);
    out << csv::join(f) << '\n';
  }
}

inline ExtractManifest read_manifest(std::istream& in, const AttributeSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty manifest", 1);
  auto header = csv::split(line);
  const auto expected = manifest_header(schema);
  if (!header || *header != expected) throw ParseError("manifest header does not match the schema", 1);
  ExtractManifest m;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = csv::split(line);
    if (!f || f->size() != expected.size()) throw ParseError("malformed manifest row", line_no);
    std::stringstream row_csv;
    row_csv << csv::join(csv_header(schema)) << '\n'
            << csv::join(std::vector<std::string>(f->begin() + 9, f->end())) << '\n';
    const auto parsed = parse_csv(row_csv, LoadOptions{schema, false, false});
    JournalEntry entry = parsed.entries.at(0);
    const auto num = [&](std::size_t i) {
      auto v = csv::parse_double((*f)[i]);
      if (!v) throw ParseError("bad number in manifest column " + expected[i], line_no);
      return *v;
    };
    const auto row = static_cast<std::size_t>(num(1));
    if ((*f)[0] == "removed") {
      m.removed.push_back({row, std::move(entry)});
    } else if ((*f)[0] == "added") {
      AdversarialEntry a;
      a.entry = std::move(entry);
      a.z = {num(2), num(3)};
      a.robustness = num(4);
      a.provenance.region_k = static_cast<std::size_t>(num(5));
      a.provenance.threshold = num(6);
      a.provenance.step = static_cast<std::size_t>(num(7));
      a.provenance.conditioning = (*f)[8];
      m.added.push_back({row, std::move(a)});
    } else {
      throw ParseError("unknown manifest action '" + (*f)[0] + "'", line_no);
    }
  }
  return m;
}

/// Writes the extract CSV (same header as the original) and the manifest
/// sidecar. Returns the manifest.
inline ExtractManifest emit_adversarial_extract(const Dataset& original, const std::vector<std::size_t>& removed_rows,
                                                const std::vector<AdversarialEntry>& added,
                                                const std::string& extract_path, const std::string& manifest_path) {
  auto [rows, manifest] = build_adversarial_extract(original, removed_rows, added);
  {
    std::ofstream out(extract_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + extract_path + "' for writing");
    write_csv(out, original.schema, rows);
  }
  {
    std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + manifest_path + "' for writing");
    write_manifest(out, original.schema, manifest);
  }
  return manifest;
}

}  // namespace aae
