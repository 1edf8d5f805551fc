#pragma once

// Equidistant probing of the 2-D latent plane: combination maps (decoder
// argmax per attribute), robustness maps (discriminator value), adversarial
// sampling regions and the aggregated posterior of a dataset.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "aae/model.hpp"

namespace aae {

inline constexpr std::size_t kDefaultPointBudget = 100'000'000;

// ---------------------------------------------------------------------------
// Sample grid

/// Square lattice over [lower, upper]^2 with spacing delta. Point index
/// row * side + col, where col walks z1 and row walks z2.
struct SampleGrid {
  double lower = -1.0;
  double upper = 1.0;
  double delta = 1e-2;
  long side = 0;

  std::size_t size() const { return static_cast<std::size_t>(side) * static_cast<std::size_t>(side); }
  long row(std::size_t idx) const { return static_cast<long>(idx / static_cast<std::size_t>(side)); }
  long col(std::size_t idx) const { return static_cast<long>(idx % static_cast<std::size_t>(side)); }
  std::size_t index(long row, long col) const { return static_cast<std::size_t>(row * side + col); }

  Eigen::Vector2d point(std::size_t idx) const {
    return {lower + static_cast<double>(col(idx)) * delta, lower + static_cast<double>(row(idx)) * delta};
  }

  /// Bytes for one double per point plus coordinates.
  std::size_t memory_estimate() const { return size() * 3 * sizeof(double); }

  /// Up to four lattice neighbours (left, right, down, up).
  template <typename Fn>
  void for_each_neighbor(std::size_t idx, Fn&& fn) const {
    const long r = row(idx);
    const long c = col(idx);
    if (c > 0) fn(index(r, c - 1));
    if (c + 1 < side) fn(index(r, c + 1));
    if (r > 0) fn(index(r - 1, c));
    if (r + 1 < side) fn(index(r + 1, c));
  }
};

inline SampleGrid build_grid(double lower, double upper, double delta, std::size_t point_budget = kDefaultPointBudget) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("grid spacing delta must be positive");
  if (!(lower < upper)) throw ConfigError("grid bounds must satisfy lower < upper");
  const double steps = std::floor((upper - lower) / delta + 1e-9);
  const double side = steps + 1.0;
  if (side * side > static_cast<double>(point_budget)) {
    const double suggested = (upper - lower) / (std::floor(std::sqrt(static_cast<double>(point_budget))) - 1.0);
    throw BudgetError("grid of " + csv::format_double(side) + "^2 points exceeds the budget of " +
                      std::to_string(point_budget) + "; use delta >= " + csv::format_double(suggested));
  }
  return SampleGrid{lower, upper, delta, static_cast<long>(side)};
}

// ---------------------------------------------------------------------------
// Parallel evaluation

/// Calls fn(i) for every i in [0, n). Each index is written by exactly one
/// worker into its own slot, so results do not depend on `workers`.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  constexpr std::size_t kChunk = 256;
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::size_t start = next.fetch_add(kChunk);
      if (start >= n) return;
      const std::size_t stop = std::min(n, start + kChunk);
      for (std::size_t i = start; i < stop; ++i) fn(i);
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
}

// ---------------------------------------------------------------------------
// Aggregated posterior

struct PosteriorSummary {
  std::vector<Eigen::Vector2d> z;
  std::vector<std::size_t> mode;
  std::vector<std::size_t> counts;  // per prior mode

  std::size_t occupied() const {
    return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
  }
};

inline void require_same_schema(const AAEModel& model, const AttributeSchema& schema) {
  if (schema.encoded_dim() != model.schema.encoded_dim() || !(schema == model.schema)) {
    throw DimensionError("dataset schema does not match the model schema");
  }
}

/// Encodes every entry (with the model's fitted stats) and assigns it to the
/// nearest prior mean.
inline PosteriorSummary aggregated_posterior(const AAEModel& model, const Dataset& dataset, unsigned workers = 1) {
  require_same_schema(model, dataset.schema);
  if (dataset.empty()) throw DataError("aggregated posterior needs a non-empty dataset");
  PosteriorSummary s;
  s.z.resize(dataset.size());
  s.mode.resize(dataset.size());
  parallel_for(dataset.size(), workers, [&](std::size_t i) {
    s.z[i] = model.encode(dataset.entries[i]);
    s.mode[i] = model.prior.nearest_mode(s.z[i]);
  });
  s.counts.assign(model.prior.means.size(), 0);
  for (auto k : s.mode) ++s.counts[k];
  return s;
}

struct PurityReport {
  std::vector<double> purity;  // per occupied mode, in mode order
  std::vector<std::size_t> modes;
  double min_purity = 1.0;
  std::size_t occupied = 0;
};

/// For each occupied mode: fraction of its entries carrying the majority label.
inline PurityReport mode_purity(const PosteriorSummary& posterior, const std::vector<int>& labels) {
  if (labels.size() != posterior.mode.size()) throw DimensionError("labels do not match posterior size");
  std::map<std::size_t, std::map<int, std::size_t>> table;
  for (std::size_t i = 0; i < labels.size(); ++i) ++table[posterior.mode[i]][labels[i]];
  PurityReport r;
  for (const auto& [k, by_label] : table) {
    std::size_t total = 0;
    std::size_t majority = 0;
    for (const auto& [label, n] : by_label) {
      total += n;
      majority = std::max(majority, n);
    }
    r.modes.push_back(k);
    r.purity.push_back(static_cast<double>(majority) / static_cast<double>(total));
    r.min_purity = std::min(r.min_purity, r.purity.back());
  }
  r.occupied = table.size();
  return r;
}

// ---------------------------------------------------------------------------
// Combination map

struct CombinationMap {
  std::string attribute;
  bool banded = false;  // continuous attribute: labels are quantile bands
  SampleGrid grid;
  std::vector<std::uint32_t> label;  // argmax vocabulary index or band index
  std::vector<double> confidence;    // categorical: renormalized block max
  std::vector<double> value;         // banded: decoded value in data units
  std::vector<double> band_edges;    // banded: ascending interior edges
  std::vector<std::size_t> boundary; // ascending grid indices
};

/// Indices whose label differs from at least one 4-neighbour.
inline std::vector<std::size_t> label_boundary(const SampleGrid& grid, const std::vector<std::uint32_t>& label) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    bool edge = false;
    grid.for_each_neighbor(i, [&](std::size_t j) { edge = edge || label[j] != label[i]; });
    if (edge) out.push_back(i);
  }
  return out;
}

/// Linear-interpolated quantile of an ascending sequence.
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline CombinationMap combination_map(const AAEModel& model, const SampleGrid& grid, const std::string& attribute,
                                      std::size_t bands = 10, unsigned workers = 1) {
  const auto ref = model.schema.require(attribute);
  CombinationMap map;
  map.attribute = attribute;
  map.grid = grid;
  map.label.resize(grid.size());
  if (ref.kind == AttributeKind::categorical) {
    const long off = model.schema.block_offset(ref.index);
    const auto n = model.schema.categorical()[ref.index].vocabulary.size();
    map.confidence.resize(grid.size());
    parallel_for(grid.size(), workers, [&](std::size_t i) {
      const Eigen::VectorXd x = model.decode(grid.point(i));
      auto [idx, conf] = block_argmax(x.data() + off, n);
      map.label[i] = idx;
      map.confidence[i] = conf;
    });
  } else {
    if (bands < 2) throw ConfigError("banded maps need at least 2 bands");
    map.banded = true;
    map.value.resize(grid.size());
    const long row = model.schema.categorical_dim() + static_cast<long>(ref.index);
    const auto& attr = model.schema.continuous()[ref.index];
    parallel_for(grid.size(), workers, [&](std::size_t i) {
      const Eigen::VectorXd x = model.decode(grid.point(i));
      const double t = model.stats.min[ref.index] + x(row) * (model.stats.max[ref.index] - model.stats.min[ref.index]);
      map.value[i] = inverse_transform(attr.transform, t);
    });
    std::vector<double> sorted = map.value;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t b = 1; b < bands; ++b)
      map.band_edges.push_back(sorted_quantile(sorted, static_cast<double>(b) / static_cast<double>(bands)));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      map.label[i] = static_cast<std::uint32_t>(
          std::upper_bound(map.band_edges.begin(), map.band_edges.end(), map.value[i]) - map.band_edges.begin());
    }
  }
  map.boundary = label_boundary(grid, map.label);
  return map;
}

// ---------------------------------------------------------------------------
// Robustness map

enum class ChangeRule {
  absolute,  // |d(n) - d(z)| >= rho
  increase,  // d(n) >= d(z) + rho
};

struct RobustnessMap {
  SampleGrid grid;
  std::vector<double> value;
  double rho = 0.05;
  ChangeRule rule = ChangeRule::absolute;
  std::vector<std::pair<double, double>> contours;  // (quantile, level)
  std::vector<std::size_t> significant;             // ascending grid indices
};

inline RobustnessMap robustness_map(const AAEModel& model, const SampleGrid& grid, double rho = 0.05,
                                    ChangeRule rule = ChangeRule::absolute,
                                    const std::vector<double>& contour_quantiles = {0.25, 0.5, 0.75, 0.9},
                                    unsigned workers = 1) {
  if (!(rho >= 0.0)) throw ConfigError("rho must be non-negative");
  RobustnessMap map;
  map.grid = grid;
  map.rho = rho;
  map.rule = rule;
  map.value.resize(grid.size());
  parallel_for(grid.size(), workers, [&](std::size_t i) { map.value[i] = model.discriminate(grid.point(i)); });
  std::vector<double> sorted = map.value;
  std::sort(sorted.begin(), sorted.end());
  for (double q : contour_quantiles) {
    if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("contour quantiles must lie in [0, 1]");
    map.contours.emplace_back(q, sorted_quantile(sorted, q));
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    bool hit = false;
    grid.for_each_neighbor(i, [&](std::size_t j) {
      const double diff = map.value[j] - map.value[i];
      hit = hit || (rule == ChangeRule::absolute ? std::abs(diff) >= rho : diff >= rho);
    });
    if (hit) map.significant.push_back(i);
  }
  return map;
}

// ---------------------------------------------------------------------------
// Adversarial sampling region

struct AdversarialRegion {
  std::size_t k = 0;
  double threshold = 0.0;
  SampleGrid grid;
  std::vector<std::size_t> members;  // ascending grid indices
  std::vector<double> robustness;    // per member
  std::optional<std::size_t> mode;   // grid index of the highest-d member
  /// Highest d found among the grid points nearest to mean k (diagnostic for empty regions).
  double max_in_cell = 0.0;

  bool empty() const { return members.empty(); }
  Eigen::Vector2d mode_point() const { return grid.point(mode.value()); }

  bool contains(const PriorGrid& prior, const Eigen::Vector2d& z, double d) const {
    return d >= threshold && prior.nearest_mode(z) == k;
  }
};

/// Region from precomputed discriminator values over `grid`.
inline AdversarialRegion adversarial_region(const PriorGrid& prior, const RobustnessMap& rmap, std::size_t k,
                                            double threshold) {
  if (k >= prior.means.size()) throw ConfigError("region mode k out of range");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("region threshold must lie in [0, 1]");
  AdversarialRegion r;
  r.k = k;
  r.threshold = threshold;
  r.grid = rmap.grid;
  double best = -1.0;
  for (std::size_t i = 0; i < rmap.grid.size(); ++i) {
    if (prior.nearest_mode(rmap.grid.point(i)) != k) continue;
    const double d = rmap.value[i];
    r.max_in_cell = std::max(r.max_in_cell, d);
    if (d < threshold) continue;
    r.members.push_back(i);
    r.robustness.push_back(d);
    if (d > best) {
      best = d;
      r.mode = i;
    }
  }
  return r;
}

/// Quantile `q` of d over the grid points whose nearest prior mean is k.
/// Used to pick a region threshold when the absolute d scale is unknown.
inline double cell_quantile(const PriorGrid& prior, const RobustnessMap& rmap, std::size_t k, double q) {
  if (k >= prior.means.size()) throw ConfigError("region mode k out of range");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile must lie in [0, 1]");
  std::vector<double> cell;
  for (std::size_t i = 0; i < rmap.grid.size(); ++i)
    if (prior.nearest_mode(rmap.grid.point(i)) == k) cell.push_back(rmap.value[i]);
  if (cell.empty()) throw ConfigError("no grid point falls into the cell of mode " + std::to_string(k));
  std::sort(cell.begin(), cell.end());
  return sorted_quantile(cell, q);
}

inline AdversarialRegion adversarial_region(const AAEModel& model, const SampleGrid& grid, std::size_t k,
                                            double threshold, unsigned workers = 1) {
  return adversarial_region(model.prior, robustness_map(model, grid, 0.0, ChangeRule::absolute, {}, workers), k,
                            threshold);
}

// ---------------------------------------------------------------------------
// Export

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

inline void write_points(std::ostream& out, const SampleGrid& grid, const std::vector<std::size_t>& idx) {
  out << "z1,z2\n";
  for (auto i : idx) {
    const auto z = grid.point(i);
    out << csv::format_double(z.x()) << ',' << csv::format_double(z.y()) << '\n';
  }
}

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// 12-colour qualitative palette for indexed maps.
inline constexpr std::uint8_t kPalette[12][3] = {
    {31, 119, 180}, {255, 127, 14}, {44, 160, 44},  {214, 39, 40},   {148, 103, 189}, {140, 86, 75},
    {227, 119, 194}, {127, 127, 127}, {188, 189, 34}, {23, 190, 207}, {174, 199, 232}, {255, 187, 120}};

}  // namespace detail

inline void write_map_csv(std::ostream& out, const AAEModel& model, const CombinationMap& map) {
  const auto ref = model.schema.require(map.attribute);
  out << (map.banded ? "z1,z2,value,band\n" : "z1,z2,value\n");
  for (std::size_t i = 0; i < map.grid.size(); ++i) {
    const auto z = map.grid.point(i);
    out << csv::format_double(z.x()) << ',' << csv::format_double(z.y()) << ',';
    if (map.banded) {
      out << csv::format_double(map.value[i]) << ',' << map.label[i] << '\n';
    } else {
      out << csv::quote(model.schema.categorical()[ref.index].vocabulary[map.label[i]]) << '\n';
    }
  }
}

inline void write_map_csv(std::ostream& out, const RobustnessMap& map) {
  out << "z1,z2,value\n";
  for (std::size_t i = 0; i < map.grid.size(); ++i) {
    const auto z = map.grid.point(i);
    out << csv::format_double(z.x()) << ',' << csv::format_double(z.y()) << ',' << csv::format_double(map.value[i])
        << '\n';
  }
}

/// Binary PGM (P5); the top image row is the largest z2.
inline void write_pixmap(std::ostream& out, const RobustnessMap& map) {
  const long side = map.grid.side;
  out << "P5\n" << side << ' ' << side << "\n255\n";
  for (long r = side - 1; r >= 0; --r)
    for (long c = 0; c < side; ++c) out.put(static_cast<char>(detail::to_byte(map.value[map.grid.index(r, c)])));
}

/// Binary PPM (P6) with one palette colour per label.
inline void write_pixmap(std::ostream& out, const CombinationMap& map) {
  const long side = map.grid.side;
  out << "P6\n" << side << ' ' << side << "\n255\n";
  for (long r = side - 1; r >= 0; --r) {
    for (long c = 0; c < side; ++c) {
      const auto& rgb = detail::kPalette[map.label[map.grid.index(r, c)] % 12];
      out.write(reinterpret_cast<const char*>(rgb), 3);
    }
  }
}

inline void write_boundary_csv(std::ostream& out, const CombinationMap& map) {
  detail::write_points(out, map.grid, map.boundary);
}

inline void write_significant_csv(std::ostream& out, const RobustnessMap& map) {
  detail::write_points(out, map.grid, map.significant);
}

inline void write_contours_csv(std::ostream& out, const RobustnessMap& map) {
  out << "quantile,level\n";
  for (const auto& [q, level] : map.contours) out << csv::format_double(q) << ',' << csv::format_double(level) << '\n';
}

/// One row per member: k, threshold, z1, z2, robustness, is_mode.
inline void write_region_csv(std::ostream& out, const AdversarialRegion& region) {
  out << "k,threshold,z1,z2,robustness,is_mode\n";
  for (std::size_t m = 0; m < region.members.size(); ++m) {
    const auto z = region.grid.point(region.members[m]);
    out << region.k << ',' << csv::format_double(region.threshold) << ',' << csv::format_double(z.x()) << ','
        << csv::format_double(z.y()) << ',' << csv::format_double(region.robustness[m]) << ','
        << (region.mode == region.members[m] ? 1 : 0) << '\n';
  }
}

enum class MapFormat { csv, pixmap };

template <typename Map>
void export_map(const Map& map, const std::string& path, MapFormat format) {
  auto out = detail::open_out(path);
  if (format == MapFormat::pixmap) {
    write_pixmap(out, map);
  } else {
    write_map_csv(out, map);
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline void export_map(const AAEModel& model, const CombinationMap& map, const std::string& path, MapFormat format) {
  auto out = detail::open_out(path);
  if (format == MapFormat::pixmap) {
    write_pixmap(out, map);
  } else {
    write_map_csv(out, model, map);
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace aae
