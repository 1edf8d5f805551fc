#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "aae/model.hpp"
#include "aae/synth.hpp"

using namespace aae;
using Catch::Matchers::WithinAbs;

namespace {

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

bool same_network(const nn::Network& a, const nn::Network& b) {
  if (a.layers().size() != b.layers().size()) return false;
  for (std::size_t i = 0; i < a.layers().size(); ++i) {
    const auto& x = a.layers()[i];
    const auto& y = b.layers()[i];
    if (x.weights != y.weights || x.bias != y.bias || x.activation.kind != y.activation.kind ||
        x.activation.alpha != y.activation.alpha)
      return false;
  }
  return true;
}

AAEConfig tiny_config() {
  AAEConfig c;
  c.tau = 9;
  c.encoder_hidden = {16, 8};
  c.decoder_hidden = {8, 16};
  c.discriminator_hidden = {8};
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("prior: equidistant square lattices", "[model][prior]") {
  for (int tau : {9, 25, 36, 49, 64, 81}) {
    const auto g = build_prior_grid(tau);
    const int side = static_cast<int>(std::lround(std::sqrt(tau)));
    REQUIRE(g.side == side);
    REQUIRE(g.means.size() == static_cast<std::size_t>(tau));
    const double spacing = 2.0 / side;
    for (std::size_t k = 0; k < g.means.size(); ++k) {
      double nearest = 1e9;
      for (std::size_t j = 0; j < g.means.size(); ++j)
        if (j != k) nearest = std::min(nearest, (g.means[k] - g.means[j]).norm());
      REQUIRE_THAT(nearest, WithinAbs(spacing, 1e-12));
    }
    // equal margins: first and last mean sit half a spacing inside the bounds
    REQUIRE_THAT(g.means.front().x(), WithinAbs(-1.0 + spacing / 2, 1e-12));
    REQUIRE_THAT(g.means.back().y(), WithinAbs(1.0 - spacing / 2, 1e-12));
  }
  REQUIRE_THROWS_AS(build_prior_grid(10), ConfigError);
  REQUIRE_THROWS_AS(build_prior_grid(1), ConfigError);
}

TEST_CASE("prior: k layout and nearest mode", "[model][prior]") {
  const auto g = build_prior_grid(9);
  // k = row * side + col, col along z1
  REQUIRE(g.means[1].x() > g.means[0].x());
  REQUIRE(g.means[1].y() == g.means[0].y());
  REQUIRE(g.means[3].y() > g.means[0].y());
  for (std::size_t k = 0; k < 9; ++k) REQUIRE(g.nearest_mode(g.means[k]) == k);
  // midpoint between modes 0 and 1 ties to the lower index
  REQUIRE(g.nearest_mode((g.means[0] + g.means[1]) / 2) == 0);
}

TEST_CASE("prior: sampling matches mixture moments", "[model][prior]") {
  const auto g = build_prior_grid(25);
  const std::size_t n = 50000;
  const auto z = sample_prior(g, n, 42);
  std::vector<std::size_t> counts(25, 0);
  double sq = 0.0;
  for (long i = 0; i < z.cols(); ++i) {
    const auto k = g.nearest_mode(z.col(i));
    ++counts[k];
    sq += (Eigen::Vector2d(z.col(i)) - g.means[k]).squaredNorm();
  }
  const double p = 1.0 / 25;
  for (auto c : counts) REQUIRE(std::abs(static_cast<double>(c) - n * p) <= 4.0 * std::sqrt(n * p * (1 - p)));
  // sigma = spacing / 6: almost every sample stays in its cell, E|e|^2 = 2 sigma^2
  REQUIRE_THAT(std::sqrt(sq / (2.0 * n)), WithinAbs(g.sigma, 0.02 * g.sigma));
  REQUIRE(sample_prior(g, 10, 7) == sample_prior(g, 10, 7));
}

TEST_CASE("losses: unit values", "[model][loss]") {
  std::vector<double> half(64, 0.5);
  REQUIRE_THAT(adversarial_loss(half, half), WithinAbs(2.0 * std::log(2.0), 1e-9));

  AttributeSchema s;
  s.add_categorical("a", {"x", "y"});
  s.add_categorical("b", {"p", "q", "r"});
  s.add_continuous("c", "", ContinuousTransform::minmax);
  const auto layout = EncodingLayout::of(s);
  Eigen::MatrixXd x(6, 2);
  x << 1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0.3, 0.9;
  REQUIRE_THAT(reconstruction_loss(layout, x, x, 0.5), WithinAbs(0.0, 1e-9));
  REQUIRE_THAT(reconstruction_loss(layout, x, x, 0.0), WithinAbs(0.0, 1e-9));
  REQUIRE_THAT(reconstruction_loss(layout, x, x, 1.0), WithinAbs(0.0, 1e-9));

  AttributeSchema one;
  one.add_categorical("a", {"x", "y"});
  Eigen::MatrixXd t(2, 1), pred(2, 1);
  t << 1, 0;
  pred << 0.5, 0.5;
  REQUIRE_THAT(reconstruction_loss(EncodingLayout::of(one), t, pred, 1.0), WithinAbs(std::log(2.0), 1e-9));

  REQUIRE_THROWS_AS(reconstruction_loss(layout, x, x, 1.5), ConfigError);
}

TEST_CASE("losses: gradient matches finite differences", "[model][loss]") {
  const auto ds = synth_generate(desk_synth_spec(), 20, 1);
  const auto layout = EncodingLayout::of(ds.schema);
  const auto x = encode_all(ds.schema, ds.stats, ds.entries);
  Eigen::MatrixXd xh = (Eigen::MatrixXd::Random(x.rows(), x.cols()).array() * 0.45 + 0.5).matrix();
  const auto r = reconstruction_loss_grad(layout, x, xh, 0.3);
  const double h = 1e-6;
  for (long k = 0; k < xh.size(); ++k) {
    Eigen::MatrixXd up = xh, down = xh;
    up.data()[k] += h;
    down.data()[k] -= h;
    const double fd = (reconstruction_loss(layout, x, up, 0.3) - reconstruction_loss(layout, x, down, 0.3)) / (2 * h);
    REQUIRE_THAT(r.gradient.data()[k], WithinAbs(fd, 1e-6 * std::max(1.0, std::abs(fd))));
  }
}

TEST_CASE("config: defaults, json and validation", "[model][config]") {
  AAEConfig c;
  REQUIRE(c.batch_size == 128);
  REQUIRE(c.max_epochs == 10000);
  REQUIRE(c.eta_encoder == 1e-4);
  REQUIRE(c.eta_discriminator == 1e-5);
  REQUIRE(c.lrelu_alpha == 0.4);
  REQUIRE(c.adam_epsilon == 1e-9);
  const auto back = AAEConfig::from_json(c.to_json());
  REQUIRE(back.to_json() == c.to_json());
  REQUIRE_THROWS_AS(AAEConfig::from_json({{"gama", 0.5}}), ConfigError);
  REQUIRE_THROWS_AS(AAEConfig::from_json({{"gamma", 2.0}}), ConfigError);
  REQUIRE_THROWS_AS(AAEConfig::from_json({{"batch_size", 0}}), ConfigError);
  REQUIRE_THROWS_AS(AAEConfig::from_json({{"tau", 10}}).validate(), ConfigError);
  c.gamma_mode = "schema";
  REQUIRE_THAT(c.effective_gamma(desk_schema()), WithinAbs(31.0 / 33.0, 1e-15));
}

TEST_CASE("model: architecture follows the config", "[model]") {
  const auto schema = desk_schema();
  const auto ds = synth_generate(desk_synth_spec(), 100, 1);
  AAEConfig c;
  c.tau = 9;
  const auto m = build_model(schema, ds.stats, c);
  REQUIRE(m.encoder.input_dim() == 33);
  REQUIRE(m.encoder.output_dim() == 2);
  REQUIRE(m.encoder.layers().size() == 7);
  REQUIRE(m.encoder.layers()[0].out_dim() == 256);
  REQUIRE(m.encoder.layers().back().activation.kind == nn::ActivationKind::tanh);
  REQUIRE(m.decoder.layers().back().activation.kind == nn::ActivationKind::sigmoid);
  REQUIRE(m.decoder.output_dim() == 33);
  REQUIRE(m.discriminator.output_dim() == 1);
  REQUIRE(m.discriminator.layers().size() == 5);
  for (const auto& l : m.encoder.layers()) REQUIRE(l.bias.isZero(0.0));
  REQUIRE(m.encoder.layers()[0].activation.alpha == 0.4);
}

TEST_CASE("train_epoch: two steps per phase for 256 entries", "[model][train]") {
  const auto ds = synth_generate(desk_synth_spec(), 256, 5);
  const auto c = tiny_config();
  auto m = build_model(ds.schema, ds.stats, c);
  TrainingState st(m, c);
  const auto data = encode_all(ds.schema, ds.stats, ds.entries);
  const auto l = train_epoch(m, st, data, c, 1);
  REQUIRE(l.reconstruction_steps == 2);
  REQUIRE(l.regularization_steps == 2);
  REQUIRE(std::isfinite(l.reconstruction));
  REQUIRE(std::isfinite(l.adversarial));
}

TEST_CASE("train_epoch: zero learning rates leave parameters bit-identical", "[model][train]") {
  const auto ds = synth_generate(desk_synth_spec(), 300, 5);
  auto c = tiny_config();
  c.eta_encoder = c.eta_decoder = c.eta_discriminator = 0.0;
  auto m = build_model(ds.schema, ds.stats, c);
  const auto before = m;
  TrainingState st(m, c);
  train_epoch(m, st, encode_all(ds.schema, ds.stats, ds.entries), c, 1);
  REQUIRE(same_network(m.encoder, before.encoder));
  REQUIRE(same_network(m.decoder, before.decoder));
  REQUIRE(same_network(m.discriminator, before.discriminator));
}

TEST_CASE("train: early stopping on a forced plateau", "[model][train]") {
  const auto ds = synth_generate(desk_synth_spec(), 300, 5);
  auto c = tiny_config();
  c.eta_encoder = c.eta_decoder = c.eta_discriminator = 0.0;
  c.patience = 10;
  c.tolerance = 1e-4;
  c.max_epochs = 100;
  const auto r = train(ds, c);
  REQUIRE(r.log.early_stop_epoch == 11);
  REQUIRE(r.log.rows.size() == 11);

  c.max_epochs = 1;
  REQUIRE(train(ds, c).log.rows.size() == 1);
}

TEST_CASE("train: empty dataset is a data error", "[model][train]") {
  auto ds = synth_generate(desk_synth_spec(), 10, 5);
  ds.entries.clear();
  REQUIRE_THROWS_AS(train(ds, tiny_config()), DataError);
}

TEST_CASE("train: loss decreases and runs are reproducible", "[model][train]") {
  const auto ds = synth_generate(desk_synth_spec(), 1000, 6);
  auto c = tiny_config();
  c.max_epochs = 15;
  c.patience = 0;
  c.eta_encoder = c.eta_decoder = 1e-3;
  const auto a = train(ds, c);
  const auto b = train(ds, c);
  REQUIRE(a.log.rows.size() == 15);
  REQUIRE(a.log.rows.back().reconstruction < a.log.rows.front().reconstruction);
  for (const auto& row : a.log.rows) {
    REQUIRE(std::isfinite(row.reconstruction));
    REQUIRE(std::isfinite(row.adversarial));
  }
  REQUIRE(same_network(a.model.encoder, b.model.encoder));
  REQUIRE(same_network(a.model.discriminator, b.model.discriminator));
  const auto best = std::min_element(a.log.rows.begin(), a.log.rows.end(),
                                     [](const auto& x, const auto& y) { return x.reconstruction < y.reconstruction; });
  REQUIRE(a.log.best_epoch == best->epoch);
}

TEST_CASE("training log csv", "[model][train]") {
  TrainingLog log;
  log.rows = {{1, 0.5, 1.25, 0.1}, {2, 0.25, 1.5, 0.2}};
  std::ostringstream out;
  log.write_csv(out);
  REQUIRE(out.str() == "epoch,L_RE,L_DI,seconds\n1,0.5,1.25,0.100\n2,0.25,1.5,0.200\n");
}

TEST_CASE("checkpoint: bit-exact round trip", "[model][checkpoint]") {
  const auto ds = synth_generate(desk_synth_spec(), 200, 5);
  auto c = tiny_config();
  auto m = build_model(ds.schema, ds.stats, c);
  TrainingState st(m, c);
  train_epoch(m, st, encode_all(ds.schema, ds.stats, ds.entries), c, 1);

  const auto dir = std::filesystem::temp_directory_path() / "aae_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto p1 = (dir / "a.aae").string();
  const auto p2 = (dir / "b.aae").string();
  save_checkpoint(p1, m, {c.seed, 1, c});
  const auto [back, meta] = load_checkpoint(p1);
  REQUIRE(same_network(back.encoder, m.encoder));
  REQUIRE(same_network(back.decoder, m.decoder));
  REQUIRE(same_network(back.discriminator, m.discriminator));
  REQUIRE(back.schema == m.schema);
  REQUIRE(back.stats.min == m.stats.min);
  REQUIRE(back.prior.sigma == m.prior.sigma);
  REQUIRE(meta.epoch == 1);
  REQUIRE(meta.config.to_json() == c.to_json());
  save_checkpoint(p2, back, meta);
  REQUIRE(read_bytes(p1) == read_bytes(p2));

  // truncated and corrupted files are rejected
  auto bytes = read_bytes(p1);
  std::ofstream(p2, std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  REQUIRE_THROWS_AS(load_checkpoint(p2), DataError);
  std::ofstream(p2, std::ios::binary) << "not a checkpoint";
  REQUIRE_THROWS_AS(load_checkpoint(p2), DataError);
  REQUIRE_THROWS_AS(load_checkpoint((dir / "missing.aae").string()), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("model: robustness is d of the encoding", "[model]") {
  const auto ds = synth_generate(desk_synth_spec(), 50, 5);
  const auto m = build_model(ds.schema, ds.stats, tiny_config());
  for (const auto& e : ds.entries) {
    const double d = m.robustness_of(e);
    REQUIRE(d == m.discriminate(m.encode(e)));
    REQUIRE(d > 0.0);
    REQUIRE(d < 1.0);
  }
}
