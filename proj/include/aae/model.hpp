#pragma once

// Adversarial autoencoder over encoded journal entries.
//
// encoder       q(z|x): encoded_dim -> ... -> 2, Tanh output
// decoder       p(x|z): 2 -> ... -> encoded_dim, Sigmoid output
// discriminator d(z):   2 -> ... -> 1, Sigmoid output
//
// The prior is an equidistant sqrt(tau) x sqrt(tau) grid of isotropic
// Gaussians inside the latent bounds. Training runs, per mini-batch, a
// reconstruction step (encoder + decoder), a discriminator step on fresh prior
// samples vs. encoded data, and a generator step that moves the encoder
// towards fooling the discriminator.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "aae/checkpoint.hpp"
#include "aae/journal.hpp"
#include "aae/neural.hpp"

namespace aae {

inline constexpr double kProbabilityFloor = 1e-7;

// ---------------------------------------------------------------------------
// Prior

struct PriorGrid {
  int tau = 0;
  int side = 0;
  double lower = -1.0;
  double upper = 1.0;
  double spacing = 0.0;
  double sigma = 0.0;
  std::vector<Eigen::Vector2d> means;  // k = row * side + col, col runs along z1

  /// Nearest mean in Euclidean distance; ties go to the lowest k.
  std::size_t nearest_mode(const Eigen::Vector2d& z) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < means.size(); ++k) {
      const double d = (z - means[k]).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return best;
  }

  json to_json() const { return {{"tau", tau}, {"lower", lower}, {"upper", upper}, {"sigma", sigma}}; }
};

/// Lattice of `tau` means with equal margins inside [lower, upper]^2. A
/// negative sigma selects the default spacing / 6.
inline PriorGrid build_prior_grid(int tau, double lower = -1.0, double upper = 1.0, double sigma = -1.0) {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(std::max(tau, 0)))));
  if (tau < 4 || side * side != tau) {
    throw ConfigError("tau must be a perfect square >= 4, got " + std::to_string(tau));
  }
  if (!(lower < upper)) throw ConfigError("prior bounds must satisfy lower < upper");
  PriorGrid g;
  g.tau = tau;
  g.side = side;
  g.lower = lower;
  g.upper = upper;
  g.spacing = (upper - lower) / side;
  g.sigma = sigma < 0.0 ? g.spacing / 6.0 : sigma;
  for (int row = 0; row < side; ++row)
    for (int col = 0; col < side; ++col)
      g.means.emplace_back(lower + g.spacing * (col + 0.5), lower + g.spacing * (row + 0.5));
  return g;
}

inline PriorGrid prior_from_json(const json& j) {
  return build_prior_grid(j.at("tau").get<int>(), j.at("lower").get<double>(), j.at("upper").get<double>(),
                          j.at("sigma").get<double>());
}

/// Uniform mode choice plus isotropic Gaussian noise; one column per sample.
template <typename Rng>
Eigen::Matrix2Xd sample_prior(const PriorGrid& grid, std::size_t n, Rng& rng) {
  Eigen::Matrix2Xd z(2, static_cast<long>(n));
  std::uniform_int_distribution<std::size_t> mode(0, grid.means.size() - 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (long i = 0; i < static_cast<long>(n); ++i) {
    const auto& mu = grid.means[mode(rng)];
    const double e1 = noise(rng);
    const double e2 = noise(rng);
    z(0, i) = mu.x() + grid.sigma * e1;
    z(1, i) = mu.y() + grid.sigma * e2;
  }
  return z;
}

inline Eigen::Matrix2Xd sample_prior(const PriorGrid& grid, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_prior(grid, n, rng);
}

// ---------------------------------------------------------------------------
// Losses

/// Where each one-hot block and the continuous tail sit in an encoded vector.
struct EncodingLayout {
  std::vector<std::pair<long, long>> blocks;  // (offset, size)
  long categorical_dim = 0;
  long continuous_dim = 0;

  static EncodingLayout of(const AttributeSchema& schema) {
    EncodingLayout l;
    for (const auto& c : schema.categorical()) {
      l.blocks.emplace_back(l.categorical_dim, static_cast<long>(c.vocabulary.size()));
      l.categorical_dim += static_cast<long>(c.vocabulary.size());
    }
    l.continuous_dim = static_cast<long>(schema.continuous().size());
    return l;
  }
  long dim() const { return categorical_dim + continuous_dim; }
};

struct LossAndGradient {
  double loss = 0.0;
  Eigen::MatrixXd gradient;  // d loss / d prediction, same shape as the batch
};

inline void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
}

/// L_RE = -gamma * mean_i sum_blocks x log(x_hat / block_sum)
///        + (1 - gamma) * mean_i sum (x_con - x_hat_con)^2
/// over the columns of `target` / `prediction`.
inline LossAndGradient reconstruction_loss_grad(const EncodingLayout& layout, const Eigen::MatrixXd& target,
                                                const Eigen::MatrixXd& prediction, double gamma) {
  check_gamma(gamma);
  if (target.rows() != layout.dim() || prediction.rows() != layout.dim() || target.cols() != prediction.cols()) {
    throw DimensionError("reconstruction loss: shape mismatch");
  }
  const long n = target.cols();
  LossAndGradient out;
  out.gradient = Eigen::MatrixXd::Zero(prediction.rows(), n);
  if (n == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(n);
  double cat = 0.0;
  double con = 0.0;
  for (long i = 0; i < n; ++i) {
    for (const auto& [off, size] : layout.blocks) {
      double sum = 0.0;
      double mass = 0.0;
      for (long j = 0; j < size; ++j) {
        sum += prediction(off + j, i);
        mass += target(off + j, i);
      }
      for (long j = 0; j < size; ++j) {
        const double x = target(off + j, i);
        const double xh = prediction(off + j, i);
        if (x != 0.0) cat -= x * std::log(std::clamp(xh / sum, kProbabilityFloor, 1.0));
        out.gradient(off + j, i) = gamma * inv_n * (mass / sum - (x != 0.0 ? x / std::max(xh, 1e-300) : 0.0));
      }
    }
    for (long c = 0; c < layout.continuous_dim; ++c) {
      const long r = layout.categorical_dim + c;
      const double diff = target(r, i) - prediction(r, i);
      con += diff * diff;
      out.gradient(r, i) = -2.0 * (1.0 - gamma) * inv_n * diff;
    }
  }
  out.loss = gamma * cat * inv_n + (1.0 - gamma) * con * inv_n;
  return out;
}

inline double reconstruction_loss(const EncodingLayout& layout, const Eigen::MatrixXd& target,
                                  const Eigen::MatrixXd& prediction, double gamma) {
  return reconstruction_loss_grad(layout, target, prediction, gamma).loss;
}

/// L_DI = -mean log d(z_prior) - mean log(1 - d(q(x))), probabilities
/// clamped to [1e-7, 1 - 1e-7].
inline double adversarial_loss(std::span<const double> d_on_prior, std::span<const double> d_on_posterior) {
  auto clamp = [](double d) { return std::clamp(d, kProbabilityFloor, 1.0 - kProbabilityFloor); };
  double a = 0.0;
  double b = 0.0;
  for (double d : d_on_prior) a -= std::log(clamp(d));
  for (double d : d_on_posterior) b -= std::log(1.0 - clamp(d));
  if (!d_on_prior.empty()) a /= static_cast<double>(d_on_prior.size());
  if (!d_on_posterior.empty()) b /= static_cast<double>(d_on_posterior.size());
  return a + b;
}

// ---------------------------------------------------------------------------
// Configuration

struct AAEConfig {
  double gamma = 0.5;
  /// "fixed" uses `gamma`; "schema" uses dim(x_cat) / (dim(x_cat) + dim(x_con)).
  std::string gamma_mode = "fixed";
  std::size_t batch_size = 128;
  std::size_t max_epochs = 10000;
  double eta_encoder = 1e-4;
  double eta_decoder = 1e-4;
  double eta_discriminator = 1e-5;
  std::size_t patience = 20;
  double tolerance = 1e-4;
  int tau = 25;
  double sigma = -1.0;  // < 0: lattice spacing / 6
  std::uint64_t seed = 0;
  double lrelu_alpha = 0.4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-9;
  std::vector<long> encoder_hidden{256, 128, 64, 32, 16, 8};
  std::vector<long> decoder_hidden{8, 16, 32, 64, 128, 256};
  std::vector<long> discriminator_hidden{128, 64, 32, 16};

  void validate() const {
    check_gamma(gamma);
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(std::max(tau, 0)))));
    if (tau < 4 || side * side != tau) throw ConfigError("tau must be a perfect square >= 4, got " + std::to_string(tau));
    if (gamma_mode != "fixed" && gamma_mode != "schema") throw ConfigError("gamma_mode must be 'fixed' or 'schema'");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (!(eta_encoder >= 0.0) || !(eta_decoder >= 0.0) || !(eta_discriminator >= 0.0)) {
      throw ConfigError("learning rates must be non-negative");
    }
    if (!(tolerance >= 0.0)) throw ConfigError("tolerance must be non-negative");
    if (!(lrelu_alpha > 0.0)) throw ConfigError("lrelu_alpha must be positive");
    for (const auto* layers : {&encoder_hidden, &decoder_hidden, &discriminator_hidden})
      for (long w : *layers)
        if (w < 1) throw ConfigError("hidden layer widths must be positive");
    nn::AdamHyper{1.0, adam_beta1, adam_beta2, adam_epsilon}.validate();
  }

  double effective_gamma(const AttributeSchema& schema) const {
    if (gamma_mode == "schema") {
      return static_cast<double>(schema.categorical_dim()) / static_cast<double>(schema.encoded_dim());
    }
    return gamma;
  }

  json to_json() const {
    return {{"gamma", gamma},
            {"gamma_mode", gamma_mode},
            {"batch_size", batch_size},
            {"max_epochs", max_epochs},
            {"eta_encoder", eta_encoder},
            {"eta_decoder", eta_decoder},
            {"eta_discriminator", eta_discriminator},
            {"patience", patience},
            {"tolerance", tolerance},
            {"tau", tau},
            {"sigma", sigma},
            {"seed", seed},
            {"lrelu_alpha", lrelu_alpha},
            {"adam_beta1", adam_beta1},
            {"adam_beta2", adam_beta2},
            {"adam_epsilon", adam_epsilon},
            {"encoder_hidden", encoder_hidden},
            {"decoder_hidden", decoder_hidden},
            {"discriminator_hidden", discriminator_hidden}};
  }

  /// Overlays the keys present in `j`; unknown keys are rejected.
  void merge_json(const json& j) {
    const json known = to_json();
    for (const auto& [key, value] : j.items()) {
      if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    try {
      auto take = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
      };
      take("gamma", gamma);
      take("gamma_mode", gamma_mode);
      take("batch_size", batch_size);
      take("max_epochs", max_epochs);
      take("eta_encoder", eta_encoder);
      take("eta_decoder", eta_decoder);
      take("eta_discriminator", eta_discriminator);
      take("patience", patience);
      take("tolerance", tolerance);
      take("tau", tau);
      take("sigma", sigma);
      take("seed", seed);
      take("lrelu_alpha", lrelu_alpha);
      take("adam_beta1", adam_beta1);
      take("adam_beta2", adam_beta2);
      take("adam_epsilon", adam_epsilon);
      take("encoder_hidden", encoder_hidden);
      take("decoder_hidden", decoder_hidden);
      take("discriminator_hidden", discriminator_hidden);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    validate();
  }

  static AAEConfig from_json(const json& j) {
    AAEConfig c;
    c.merge_json(j);
    return c;
  }
};

// ---------------------------------------------------------------------------
// Model

struct AAEModel {
  AttributeSchema schema;
  FittedStats stats;
  PriorGrid prior;
  nn::Network encoder;
  nn::Network decoder;
  nn::Network discriminator;

  Eigen::Vector2d encode_vector(std::span<const double> x) const {
    Eigen::VectorXd z = encoder.evaluate(x);
    return {z(0), z(1)};
  }

  Eigen::Vector2d encode(const JournalEntry& e) const {
    const auto enc = encode_entry(schema, stats, e);
    return encode_vector(std::span<const double>(enc.values.data(), static_cast<std::size_t>(enc.values.size())));
  }

  Eigen::VectorXd decode(const Eigen::Vector2d& z) const {
    return decoder.evaluate(std::span<const double>(z.data(), 2));
  }

  DecodedEntry decode_entry(const Eigen::Vector2d& z) const {
    const Eigen::VectorXd x = decode(z);
    return decode_vector(schema, stats, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  }

  double discriminate(const Eigen::Vector2d& z) const {
    return discriminator.evaluate(std::span<const double>(z.data(), 2))(0);
  }

  /// d(encode(e)): how well a concrete entry complies with the learned factors.
  double robustness_of(const JournalEntry& e) const { return discriminate(encode(e)); }
};

inline AAEModel build_model(const AttributeSchema& schema, const FittedStats& stats, const AAEConfig& config) {
  config.validate();
  const long dim = schema.encoded_dim();
  if (dim < 1) throw DimensionError("schema encodes to zero dimensions");
  const auto hidden = nn::Activation::lrelu(config.lrelu_alpha);
  AAEModel m;
  m.schema = schema;
  m.stats = stats;
  m.prior = build_prior_grid(config.tau, -1.0, 1.0, config.sigma);
  m.encoder = nn::Network::build(dim, config.encoder_hidden, 2, hidden, nn::Activation::tanh(), nn::mix_seed(config.seed) + 1000);
  m.decoder = nn::Network::build(2, config.decoder_hidden, dim, hidden, nn::Activation::sigmoid(), nn::mix_seed(config.seed) + 2000);
  m.discriminator = nn::Network::build(2, config.discriminator_hidden, 1, hidden, nn::Activation::sigmoid(),
                                       nn::mix_seed(config.seed) + 3000);
  return m;
}

// ---------------------------------------------------------------------------
// Training

struct TrainingLog {
  struct Row {
    std::size_t epoch = 0;
    double reconstruction = 0.0;
    double adversarial = 0.0;
    double seconds = 0.0;
  };
  std::vector<Row> rows;
  std::size_t best_epoch = 0;
  std::optional<std::size_t> early_stop_epoch;

  void write_csv(std::ostream& out) const {
    out << "epoch,L_RE,L_DI,seconds\n";
    for (const auto& r : rows) {
      out << r.epoch << ',' << csv::format_double(r.reconstruction) << ',' << csv::format_double(r.adversarial) << ','
          << csv::format_fixed(r.seconds, 3) << '\n';
    }
  }
};

class TrainingDivergedError : public DivergenceError {
 public:
  TrainingDivergedError(const std::string& what, std::size_t epoch, std::size_t batch, TrainingLog log)
      : DivergenceError(what, epoch, batch), log_(std::move(log)) {}
  const TrainingLog& log() const noexcept { return log_; }

 private:
  TrainingLog log_;
};

struct EpochLosses {
  double reconstruction = 0.0;
  double adversarial = 0.0;
  std::size_t reconstruction_steps = 0;
  std::size_t regularization_steps = 0;
};

/// Optimizer state and randomness owned by one training run.
struct TrainingState {
  nn::AdamState encoder;
  nn::AdamState decoder;
  nn::AdamState discriminator;
  std::mt19937_64 rng;

  TrainingState(const AAEModel& m, const AAEConfig& c)
      : encoder(nn::AdamState::for_network(m.encoder, {c.eta_encoder, c.adam_beta1, c.adam_beta2, c.adam_epsilon})),
        decoder(nn::AdamState::for_network(m.decoder, {c.eta_decoder, c.adam_beta1, c.adam_beta2, c.adam_epsilon})),
        discriminator(nn::AdamState::for_network(
            m.discriminator, {c.eta_discriminator, c.adam_beta1, c.adam_beta2, c.adam_epsilon})),
        rng(nn::mix_seed(c.seed) ^ 0x5eedULL) {}
};

namespace detail {

inline void require_finite(double v, const char* what, std::size_t epoch, std::size_t batch) {
  if (!std::isfinite(v)) throw DivergenceError(std::string("non-finite ") + what, epoch, batch);
}

}  // namespace detail

/// One pass over `data` (one encoded entry per column) in shuffled
/// mini-batches. `epoch` is only used for error reporting.
inline EpochLosses train_epoch(AAEModel& model, TrainingState& state, const Eigen::MatrixXd& data,
                               const AAEConfig& config, std::size_t epoch = 0) {
  if (data.rows() != model.encoder.input_dim()) throw DimensionError("training data does not match encoder input");
  const auto layout = EncodingLayout::of(model.schema);
  const double gamma = config.effective_gamma(model.schema);
  const auto n = static_cast<std::size_t>(data.cols());
  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0L);
  std::shuffle(order.begin(), order.end(), state.rng);

  EpochLosses out;
  std::size_t batch_index = 0;
  for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_index) {
    const std::size_t size = std::min(config.batch_size, n - start);
    const double inv = 1.0 / static_cast<double>(size);
    Eigen::MatrixXd x(data.rows(), static_cast<long>(size));
    for (std::size_t i = 0; i < size; ++i) x.col(static_cast<long>(i)) = data.col(order[start + i]);

    // (1) reconstruction phase
    {
      auto enc = model.encoder.forward(x);
      auto dec = model.decoder.forward(enc.output);
      auto rec = reconstruction_loss_grad(layout, x, dec.output, gamma);
      detail::require_finite(rec.loss, "reconstruction loss", epoch, batch_index);
      auto g_dec = model.decoder.backward(dec, rec.gradient);
      auto g_enc = model.encoder.backward(enc, g_dec.input);
      nn::adam_step(model.decoder, g_dec, state.decoder);
      nn::adam_step(model.encoder, g_enc, state.encoder);
      out.reconstruction += rec.loss * static_cast<double>(size);
      ++out.reconstruction_steps;
    }

    // (2) regularization phase: discriminator, then encoder as generator
    {
      const Eigen::MatrixXd z_prior = sample_prior(model.prior, size, state.rng);
      auto enc = model.encoder.forward(x);
      auto d_prior = model.discriminator.forward(z_prior);
      auto d_post = model.discriminator.forward(enc.output);
      const auto span_of = [](const Eigen::MatrixXd& m) {
        return std::span<const double>(m.data(), static_cast<std::size_t>(m.size()));
      };
      const double l_di = adversarial_loss(span_of(d_prior.output), span_of(d_post.output));
      detail::require_finite(l_di, "adversarial loss", epoch, batch_index);

      const auto clamp = [](double d) { return std::clamp(d, kProbabilityFloor, 1.0 - kProbabilityFloor); };
      Eigen::MatrixXd g_prior = d_prior.output.unaryExpr([&](double d) { return -inv / clamp(d); });
      Eigen::MatrixXd g_post = d_post.output.unaryExpr([&](double d) { return inv / (1.0 - clamp(d)); });
      auto g_disc = model.discriminator.backward(d_prior, g_prior);
      g_disc += model.discriminator.backward(d_post, g_post);
      nn::adam_step(model.discriminator, g_disc, state.discriminator);

      // non-saturating generator objective: minimise -mean log d(q(x))
      auto d_fake = model.discriminator.forward(enc.output);
      Eigen::MatrixXd g_fake = d_fake.output.unaryExpr([&](double d) { return -inv / clamp(d); });
      auto g_through = model.discriminator.backward(d_fake, g_fake);
      auto g_gen = model.encoder.backward(enc, g_through.input);
      nn::adam_step(model.encoder, g_gen, state.encoder);
      out.adversarial += l_di * static_cast<double>(size);
      ++out.regularization_steps;
    }
  }
  if (n > 0) {
    out.reconstruction /= static_cast<double>(n);
    out.adversarial /= static_cast<double>(n);
  }
  return out;
}

struct TrainResult {
  AAEModel model;  // parameters of the best-L_RE epoch
  TrainingLog log;
};

using EpochCallback = std::function<void(const TrainingLog::Row&)>;

/// Trains from a fresh initialisation. Stops after `max_epochs` or once the
/// best L_RE has not improved by a relative `tolerance` for `patience`
/// consecutive epochs (patience 0 disables early stopping).
inline TrainResult train(const Dataset& dataset, const AAEConfig& config, const EpochCallback& on_epoch = {}) {
  config.validate();
  if (dataset.empty()) throw DataError("cannot train on an empty dataset");
  AAEModel model = build_model(dataset.schema, dataset.stats, config);
  const Eigen::MatrixXd data = encode_all(dataset.schema, dataset.stats, dataset.entries);
  TrainingState state(model, config);

  TrainResult result{model, {}};
  double best = std::numeric_limits<double>::infinity();
  std::size_t stalled = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochLosses losses;
    try {
      losses = train_epoch(model, state, data, config, epoch);
    } catch (const DivergenceError& e) {
      throw TrainingDivergedError("training diverged", e.epoch(), e.batch(), result.log);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    TrainingLog::Row row{epoch, losses.reconstruction, losses.adversarial, secs};
    result.log.rows.push_back(row);
    if (on_epoch) on_epoch(row);

    const bool improved = !std::isfinite(best) || (best - losses.reconstruction) > config.tolerance * std::abs(best);
    if (losses.reconstruction < best) {
      best = losses.reconstruction;
      result.model = model;
      result.log.best_epoch = epoch;
    }
    stalled = improved ? 0 : stalled + 1;
    if (config.patience > 0 && stalled >= config.patience) {
      result.log.early_stop_epoch = epoch;
      break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints

struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
  AAEConfig config;
};

inline std::string schema_hash(const AttributeSchema& schema, const FittedStats& stats) {
  return io::hex64(io::fnv1a(schema.to_json().dump() + stats.to_json().dump()));
}

inline void save_checkpoint(const std::string& path, const AAEModel& model, const CheckpointMeta& meta) {
  io::SectionFile f;
  json j{{"format", "aae-checkpoint"},
         {"version", 1},
         {"schema", model.schema.to_json()},
         {"stats", model.stats.to_json()},
         {"prior", model.prior.to_json()},
         {"config", meta.config.to_json()},
         {"seed", meta.seed},
         {"epoch", meta.epoch},
         {"schema_hash", schema_hash(model.schema, model.stats)}};
  f.add("meta", j.dump());
  f.add("encoder", io::encode_network(model.encoder));
  f.add("decoder", io::encode_network(model.decoder));
  f.add("discriminator", io::encode_network(model.discriminator));
  f.save(path);
}

inline std::pair<AAEModel, CheckpointMeta> load_checkpoint(const std::string& path) {
  const auto f = io::SectionFile::load(path);
  json j;
  try {
    j = json::parse(f.at("meta"));
  } catch (const json::parse_error& e) {
    throw DataError(std::string("checkpoint meta: ") + e.what());
  }
  AAEModel m;
  CheckpointMeta meta;
  try {
    m.schema = AttributeSchema::from_json(j.at("schema"));
    m.stats = FittedStats::from_json(j.at("stats"));
    m.prior = prior_from_json(j.at("prior"));
    meta.config = AAEConfig::from_json(j.at("config"));
    meta.seed = j.at("seed").get<std::uint64_t>();
    meta.epoch = j.at("epoch").get<std::size_t>();
    if (j.at("schema_hash").get<std::string>() != schema_hash(m.schema, m.stats)) {
      throw DataError("checkpoint schema hash mismatch");
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint meta: ") + e.what());
  }
  m.encoder = io::decode_network(f.at("encoder"));
  m.decoder = io::decode_network(f.at("decoder"));
  m.discriminator = io::decode_network(f.at("discriminator"));
  if (m.encoder.input_dim() != m.schema.encoded_dim() || m.decoder.output_dim() != m.schema.encoded_dim() ||
      m.encoder.output_dim() != 2 || m.decoder.input_dim() != 2 || m.discriminator.input_dim() != 2) {
    throw DimensionError("checkpoint networks do not match the stored schema");
  }
  return {std::move(m), meta};
}

}  // namespace aae
