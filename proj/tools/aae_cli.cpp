// aae: synth -> train -> analyze -> attack -> audit -> report

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aae/aae.hpp"

namespace fs = std::filesystem;
using aae::json;

namespace {

// ---------------------------------------------------------------------------
// helpers

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw aae::IoError(std::string(what) + " '" + path + "' does not exist");
}

std::string out_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw aae::IoError("cannot create output directory '" + dir + "'");
}

template <typename Fn>
void write_file(const std::string& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw aae::IoError("cannot open '" + path + "' for writing");
  fn(out);
  if (!out) throw aae::IoError("write failed for '" + path + "'");
}

/// Records everything needed to rerun the subcommand. No timestamps, so two
/// identical runs produce identical manifests.
void write_run_manifest(const std::string& dir, const std::string& subcommand, const json& args,
                        std::optional<std::uint64_t> seed) {
  json m{{"tool", "aae"},
         {"version", aae::kVersion},
         {"subcommand", subcommand},
         {"args", args},
         {"config_hash", aae::io::hex64(aae::io::fnv1a(args.dump()))}};
  m["seed"] = seed ? json(*seed) : json(nullptr);
  write_file(out_path(dir, "run_manifest.json"), [&](std::ostream& o) { o << m.dump(2) << '\n'; });
}

aae::Dataset load_data(const std::string& path, const std::optional<aae::AttributeSchema>& schema, bool fit = true) {
  require_file(path, "data file");
  aae::LoadOptions opts;
  opts.schema = schema;
  opts.fit_stats = fit;
  return aae::load_csv(path, opts);
}

std::optional<aae::AttributeSchema> load_schema(const std::string& path) {
  if (path.empty()) return std::nullopt;
  require_file(path, "schema file");
  return aae::AttributeSchema::load(path);
}

std::vector<int> load_labels(const std::string& path, std::size_t n) {
  require_file(path, "labels file");
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = aae::csv::split(line);
    if (!f || f->size() != 2) throw aae::ParseError("labels file: expected row,label", line_no);
    auto v = aae::csv::parse_double((*f)[1]);
    if (!v) throw aae::ParseError("labels file: bad label", line_no);
    labels.push_back(static_cast<int>(*v));
  }
  if (labels.size() != n) throw aae::DimensionError("labels file does not match the dataset size");
  return labels;
}

aae::ChangeRule parse_rule(const std::string& s) {
  if (s == "absolute") return aae::ChangeRule::absolute;
  if (s == "increase") return aae::ChangeRule::increase;
  throw aae::ConfigError("rho rule must be 'absolute' or 'increase'");
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string spec;
  bool scenario = false;
  std::string out;
};

void cmd_synth(const SynthArgs& a) {
  if (!a.spec.empty()) require_file(a.spec, "synthetic spec");
  if (a.n < 1) throw aae::ConfigError("--n must be >= 1");
  prepare_out(a.out);
  const auto spec = a.spec.empty() ? aae::desk_synth_spec() : aae::SynthSpec::from_json(aae::load_json(a.spec));
  auto ds = aae::synth_generate(spec, a.n, a.seed);
  if (a.scenario) aae::append_scenario_entries(ds);
  aae::save_csv(out_path(a.out, "journal.csv"), ds);
  aae::save_json(out_path(a.out, "schema.json"), ds.schema.to_json());
  write_file(out_path(a.out, "labels.csv"), [&](std::ostream& o) {
    o << "row,label\n";
    for (std::size_t i = 0; i < ds.labels.size(); ++i) o << i << ',' << ds.labels[i] << '\n';
  });
  write_run_manifest(a.out, "synth", {{"n", a.n}, {"spec", a.spec}, {"scenario_anomalies", a.scenario}, {"out", a.out}},
                     a.seed);
  std::cout << "wrote " << ds.size() << " entries to " << out_path(a.out, "journal.csv") << '\n';
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data, schema, config, out;
  std::uint64_t seed = 0;
  std::optional<int> tau;
  std::optional<std::size_t> max_epochs, patience, batch_size;
  std::optional<double> tolerance, gamma, eta_encoder, eta_decoder, eta_discriminator;
  std::optional<std::string> gamma_mode;
  std::vector<double> sweep_eta;
  bool quiet = false;
};

aae::AAEConfig resolve_config(const TrainArgs& a) {
  json j = json::object();
  if (!a.config.empty()) {
    require_file(a.config, "config file");
    j = aae::load_json(a.config);
  }
  // flags override the config file
  if (a.tau) j["tau"] = *a.tau;
  if (a.max_epochs) j["max_epochs"] = *a.max_epochs;
  if (a.patience) j["patience"] = *a.patience;
  if (a.batch_size) j["batch_size"] = *a.batch_size;
  if (a.tolerance) j["tolerance"] = *a.tolerance;
  if (a.gamma) j["gamma"] = *a.gamma;
  if (a.gamma_mode) j["gamma_mode"] = *a.gamma_mode;
  if (a.eta_encoder) j["eta_encoder"] = *a.eta_encoder;
  if (a.eta_decoder) j["eta_decoder"] = *a.eta_decoder;
  if (a.eta_discriminator) j["eta_discriminator"] = *a.eta_discriminator;
  j["seed"] = a.seed;
  return aae::AAEConfig::from_json(j);
}

/// Returns the best L_RE reached.
double train_one(const aae::Dataset& ds, const aae::AAEConfig& config, const std::string& dir, bool quiet) {
  prepare_out(dir);
  auto on_epoch = [&](const aae::TrainingLog::Row& r) {
    if (!quiet) {
      std::cerr << "epoch " << r.epoch << " L_RE " << aae::csv::format_fixed(r.reconstruction, 6) << " L_DI "
                << aae::csv::format_fixed(r.adversarial, 6) << '\n';
    }
  };
  aae::TrainResult result;
  try {
    result = aae::train(ds, config, on_epoch);
  } catch (const aae::TrainingDivergedError& e) {
    write_file(out_path(dir, "training_log.csv"), [&](std::ostream& o) { e.log().write_csv(o); });
    throw;
  }
  aae::save_checkpoint(out_path(dir, "checkpoint.aae"), result.model, {config.seed, result.log.best_epoch, config});
  write_file(out_path(dir, "training_log.csv"), [&](std::ostream& o) { result.log.write_csv(o); });
  aae::save_json(out_path(dir, "config.json"), config.to_json());
  const auto& best = result.log.rows.at(result.log.best_epoch - 1);
  std::cout << "best epoch " << result.log.best_epoch << " L_RE " << aae::csv::format_fixed(best.reconstruction, 6);
  if (result.log.early_stop_epoch) std::cout << " (early stop at epoch " << *result.log.early_stop_epoch << ")";
  std::cout << '\n';
  return best.reconstruction;
}

void cmd_train(const TrainArgs& a) {
  const auto schema = load_schema(a.schema);
  require_file(a.data, "data file");
  const auto config = resolve_config(a);
  prepare_out(a.out);
  const auto ds = load_data(a.data, schema);
  json args{{"data", a.data}, {"schema", a.schema}, {"config", config.to_json()}, {"out", a.out}};
  if (a.sweep_eta.empty()) {
    train_one(ds, config, a.out, a.quiet);
  } else {
    args["sweep_eta"] = a.sweep_eta;
    std::ostringstream table;
    table << "eta,best_L_RE,dir\n";
    for (std::size_t i = 0; i < a.sweep_eta.size(); ++i) {
      auto c = config;
      c.eta_encoder = c.eta_decoder = a.sweep_eta[i];
      c.validate();
      const auto dir = "eta_" + std::to_string(i);
      const double best = train_one(ds, c, out_path(a.out, dir), a.quiet);
      table << aae::csv::format_double(a.sweep_eta[i]) << ',' << aae::csv::format_double(best) << ',' << dir << '\n';
    }
    write_file(out_path(a.out, "sweep.csv"), [&](std::ostream& o) { o << table.str(); });
  }
  write_run_manifest(a.out, "train", args, a.seed);
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  std::string checkpoint, data, labels, out;
  double lower = -1.0, upper = 1.0, delta = 0.01;
  double rho = 0.05;
  std::string rho_rule = "absolute";
  std::vector<std::string> attributes;
  std::size_t bands = 10;
  std::vector<std::size_t> ks;
  std::optional<double> threshold;
  double threshold_quantile = 0.75;
  std::string format = "both";
  unsigned workers = 1;
};

void cmd_analyze(const AnalyzeArgs& a) {
  require_file(a.checkpoint, "checkpoint");
  if (!a.labels.empty() && a.data.empty()) throw aae::ConfigError("--labels needs --data");
  if (!a.data.empty()) require_file(a.data, "data file");
  if (a.format != "csv" && a.format != "pixmap" && a.format != "both") {
    throw aae::ConfigError("--format must be csv, pixmap or both");
  }
  const auto rule = parse_rule(a.rho_rule);
  prepare_out(a.out);
  const auto [model, meta] = aae::load_checkpoint(a.checkpoint);
  const auto grid = aae::build_grid(a.lower, a.upper, a.delta);
  const bool csv = a.format != "pixmap";
  const bool pix = a.format != "csv";

  if (!a.data.empty()) {
    const auto ds = load_data(a.data, model.schema, false);
    const auto post = aae::aggregated_posterior(model, ds, a.workers);
    write_file(out_path(a.out, "posterior.csv"), [&](std::ostream& o) {
      o << "row,z1,z2,mode\n";
      for (std::size_t i = 0; i < post.z.size(); ++i) {
        o << i << ',' << aae::csv::format_double(post.z[i].x()) << ',' << aae::csv::format_double(post.z[i].y()) << ','
          << post.mode[i] << '\n';
      }
    });
    write_file(out_path(a.out, "posterior_counts.csv"), [&](std::ostream& o) {
      o << "mode,count\n";
      for (std::size_t k = 0; k < post.counts.size(); ++k) o << k << ',' << post.counts[k] << '\n';
    });
    if (!a.labels.empty()) {
      const auto purity = aae::mode_purity(post, load_labels(a.labels, ds.size()));
      write_file(out_path(a.out, "purity.csv"), [&](std::ostream& o) {
        o << "mode,purity\n";
        for (std::size_t i = 0; i < purity.modes.size(); ++i)
          o << purity.modes[i] << ',' << aae::csv::format_double(purity.purity[i]) << '\n';
      });
    }
  }

  std::vector<std::string> attributes = a.attributes;
  if (attributes.empty())
    for (const auto& c : model.schema.categorical()) attributes.push_back(c.name);
  for (const auto& attr : attributes) {
    const auto map = aae::combination_map(model, grid, attr, a.bands, a.workers);
    if (csv) aae::export_map(model, map, out_path(a.out, "combination_" + attr + ".csv"), aae::MapFormat::csv);
    if (pix) aae::export_map(model, map, out_path(a.out, "combination_" + attr + ".ppm"), aae::MapFormat::pixmap);
    write_file(out_path(a.out, "boundary_" + attr + ".csv"), [&](std::ostream& o) { aae::write_boundary_csv(o, map); });
  }

  const auto rmap = aae::robustness_map(model, grid, a.rho, rule, {0.25, 0.5, 0.75, 0.9}, a.workers);
  if (csv) aae::export_map(rmap, out_path(a.out, "robustness.csv"), aae::MapFormat::csv);
  if (pix) aae::export_map(rmap, out_path(a.out, "robustness.pgm"), aae::MapFormat::pixmap);
  write_file(out_path(a.out, "significant.csv"), [&](std::ostream& o) { aae::write_significant_csv(o, rmap); });
  write_file(out_path(a.out, "contours.csv"), [&](std::ostream& o) { aae::write_contours_csv(o, rmap); });

  for (auto k : a.ks) {
    const double thr = a.threshold ? *a.threshold : aae::cell_quantile(model.prior, rmap, k, a.threshold_quantile);
    const auto region = aae::adversarial_region(model.prior, rmap, k, thr);
    write_file(out_path(a.out, "region_k" + std::to_string(k) + ".csv"),
               [&](std::ostream& o) { aae::write_region_csv(o, region); });
    std::cout << "region k=" << k << " threshold " << aae::csv::format_fixed(thr, 6) << ": " << region.members.size()
              << " points" << (region.empty() ? " (empty)" : "") << '\n';
  }

  json args{{"checkpoint", a.checkpoint}, {"data", a.data},     {"labels", a.labels},   {"lower", a.lower},
            {"upper", a.upper},           {"delta", a.delta},   {"rho", a.rho},         {"rho_rule", a.rho_rule},
            {"attributes", attributes},   {"bands", a.bands},   {"k", a.ks},            {"format", a.format},
            {"threshold_quantile", a.threshold_quantile},       {"out", a.out}};
  args["threshold"] = a.threshold ? json(*a.threshold) : json(nullptr);
  // worker count does not affect outputs and is left out of the manifest hash
  write_run_manifest(a.out, "analyze", args, meta.seed);
}

// ---------------------------------------------------------------------------
// attack

struct AttackArgs {
  std::string checkpoint, data, spec, out;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

void cmd_attack(const AttackArgs& a) {
  require_file(a.checkpoint, "checkpoint");
  require_file(a.data, "data file");
  require_file(a.spec, "attack spec");
  const json spec = aae::load_json(a.spec);
  prepare_out(a.out);
  const auto [model, meta] = aae::load_checkpoint(a.checkpoint);
  const auto ds = load_data(a.data, model.schema, false);
  try {
    const auto kind = spec.at("attack").get<std::string>();
    const auto row = spec.at("target_row").get<std::size_t>();
    if (row >= ds.size()) throw aae::ConfigError("target_row " + std::to_string(row) + " outside the extract");
    const auto& target = ds.entries[row];

    const json rj = spec.value("region", json::object());
    const auto grid = aae::build_grid(rj.value("lower", -1.0), rj.value("upper", 1.0), rj.value("delta", 0.01));
    const auto rmap = aae::robustness_map(model, grid, 0.0, aae::ChangeRule::absolute, {}, a.workers);
    const std::size_t k = rj.contains("k") && rj.at("k").is_number_unsigned()
                              ? rj.at("k").get<std::size_t>()
                              : model.prior.nearest_mode(model.encode(target));
    const double thr = rj.contains("threshold") && rj.at("threshold").is_number()
                           ? rj.at("threshold").get<double>()
                           : aae::cell_quantile(model.prior, rmap, k, rj.value("threshold_quantile", 0.75));
    const auto region = aae::adversarial_region(model.prior, rmap, k, thr);
    write_file(out_path(a.out, "region.csv"), [&](std::ostream& o) { aae::write_region_csv(o, region); });

    std::vector<aae::AdversarialEntry> added;
    if (kind == "replacement") {
      aae::ReplacementSpec rs;
      rs.target = target;
      rs.amount_attribute = spec.value("amount_attribute", rs.amount_attribute);
      rs.approval_border = spec.value("border", rs.approval_border);
      rs.n_splits = spec.value("n_splits", rs.n_splits);
      rs.conditioned = spec.value("conditioned", std::vector<std::string>{});
      rs.retry_budget = spec.value("retry_budget", rs.retry_budget);
      rs.jitter = spec.value("jitter", rs.jitter);
      rs.seed = a.seed;
      added = aae::replace_anomaly(model, region, rs);
    } else if (kind == "augmentation") {
      aae::AugmentationSpec as;
      as.target = target;
      as.conditioned_attribute = spec.value("conditioned_attribute", as.conditioned_attribute);
      as.n_samples = spec.value("n_samples", as.n_samples);
      as.min_robustness = spec.value("min_robustness", thr);
      as.retry_budget = spec.value("retry_budget", as.retry_budget);
      as.seed = a.seed;
      added = aae::augment_anomaly(model, region, as);
    } else {
      throw aae::ConfigError("attack must be 'replacement' or 'augmentation'");
    }
    // replacement removes the anomaly; augmentation keeps it and hides it in a crowd
    const std::vector<std::size_t> removed = kind == "replacement" ? std::vector<std::size_t>{row} : std::vector<std::size_t>{};
    aae::emit_adversarial_extract(ds, removed, added, out_path(a.out, "adversarial_extract.csv"),
                                  out_path(a.out, "manifest.csv"));
    std::cout << kind << ": region k=" << k << " threshold " << aae::csv::format_fixed(thr, 6) << ", "
              << added.size() << " entries generated\n";
  } catch (const json::exception& e) {
    throw aae::ConfigError(std::string("attack spec: ") + e.what());
  }
  write_run_manifest(a.out, "attack",
                     {{"checkpoint", a.checkpoint}, {"data", a.data}, {"attack_spec", spec}, {"out", a.out}}, a.seed);
}

// ---------------------------------------------------------------------------
// audit / report

struct AuditArgs {
  std::string data, schema, rules, out;
};

void cmd_audit(const AuditArgs& a) {
  const auto schema = load_schema(a.schema);
  require_file(a.data, "data file");
  require_file(a.rules, "rule set");
  const auto suite = aae::DetectorSuite::load(a.rules);
  prepare_out(a.out);
  const auto ds = load_data(a.data, schema, false);
  const auto run = aae::run_suite(ds.schema, ds.entries, suite);
  write_file(out_path(a.out, "flags.csv"), [&](std::ostream& o) {
    o << "extract,row,detector,rule\n";
    aae::write_flags_csv(o, "data", run);
  });
  std::ostringstream summary;
  aae::write_summary(summary, "data", run, ds.size());
  write_file(out_path(a.out, "summary.txt"), [&](std::ostream& o) { o << summary.str(); });
  std::cout << summary.str();
  write_run_manifest(a.out, "audit", {{"data", a.data}, {"schema", a.schema}, {"rules", a.rules}, {"out", a.out}},
                     std::nullopt);
}

struct ReportArgs {
  std::string original, adversarial, manifest, schema, rules, out;
};

void cmd_report(const ReportArgs& a) {
  const auto schema = load_schema(a.schema);
  require_file(a.original, "original extract");
  require_file(a.adversarial, "adversarial extract");
  require_file(a.manifest, "manifest");
  require_file(a.rules, "rule set");
  const auto suite = aae::DetectorSuite::load(a.rules);
  prepare_out(a.out);
  const auto original = load_data(a.original, schema, false);
  const auto adversarial = load_data(a.adversarial, original.schema, false);
  std::ifstream min(a.manifest);
  const auto manifest = aae::read_manifest(min, original.schema);
  const auto ev = aae::evaluate_attack(original, adversarial, manifest, suite);
  write_file(out_path(a.out, "flags.csv"), [&](std::ostream& o) {
    o << "extract,row,detector,rule\n";
    aae::write_flags_csv(o, "original", ev.original);
    aae::write_flags_csv(o, "adversarial", ev.adversarial);
  });
  std::ostringstream summary;
  aae::write_evaluation(summary, ev);
  write_file(out_path(a.out, "report.txt"), [&](std::ostream& o) { o << summary.str(); });
  std::cout << summary.str();
  write_run_manifest(a.out, "report",
                     {{"original", a.original},
                      {"adversarial", a.adversarial},
                      {"manifest", a.manifest},
                      {"schema", a.schema},
                      {"rules", a.rules},
                      {"out", a.out}},
                     std::nullopt);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial autoencoder attacks on journal entry audits"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "generate a synthetic journal extract");
  synth->add_option("--n", sa.n, "number of entries")->required();
  synth->add_option("--seed", sa.seed)->required();
  synth->add_option("--spec", sa.spec, "process spec JSON (default: built-in desk spec)");
  synth->add_flag("--scenario-anomalies", sa.scenario, "append the approval-border and rare-GL scenario entries");
  synth->add_option("--out", sa.out, "output directory")->required();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train the adversarial autoencoder");
  train->add_option("--data", ta.data)->required();
  train->add_option("--schema", ta.schema);
  train->add_option("--config", ta.config, "training config JSON");
  train->add_option("--seed", ta.seed)->required();
  train->add_option("--tau", ta.tau);
  train->add_option("--max-epochs", ta.max_epochs);
  train->add_option("--patience", ta.patience);
  train->add_option("--tolerance", ta.tolerance);
  train->add_option("--batch-size", ta.batch_size);
  train->add_option("--gamma", ta.gamma);
  train->add_option("--gamma-mode", ta.gamma_mode);
  train->add_option("--eta-encoder", ta.eta_encoder);
  train->add_option("--eta-decoder", ta.eta_decoder);
  train->add_option("--eta-discriminator", ta.eta_discriminator);
  train->add_option("--sweep-eta", ta.sweep_eta, "train once per encoder/decoder learning rate")->delimiter(',');
  train->add_flag("--quiet", ta.quiet);
  train->add_option("--out", ta.out)->required();

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze", "latent maps and adversarial regions");
  analyze->add_option("--checkpoint", aa.checkpoint)->required();
  analyze->add_option("--data", aa.data, "extract for the aggregated posterior");
  analyze->add_option("--labels", aa.labels, "row,label CSV for mode purity");
  analyze->add_option("--lower", aa.lower);
  analyze->add_option("--upper", aa.upper);
  analyze->add_option("--delta", aa.delta);
  analyze->add_option("--rho", aa.rho);
  analyze->add_option("--rho-rule", aa.rho_rule)->check(CLI::IsMember({"absolute", "increase"}));
  analyze->add_option("--attribute", aa.attributes, "attributes to map (default: all categorical)");
  analyze->add_option("--bands", aa.bands);
  analyze->add_option("--k", aa.ks, "prior modes to extract regions for");
  analyze->add_option("--threshold", aa.threshold);
  analyze->add_option("--threshold-quantile", aa.threshold_quantile);
  analyze->add_option("--format", aa.format)->check(CLI::IsMember({"csv", "pixmap", "both"}));
  analyze->add_option("--workers", aa.workers);
  analyze->add_option("--out", aa.out)->required();

  AttackArgs ka;
  auto* attack = app.add_subcommand("attack", "generate an adversarial extract");
  attack->add_option("--checkpoint", ka.checkpoint)->required();
  attack->add_option("--data", ka.data)->required();
  attack->add_option("--attack-spec", ka.spec)->required();
  attack->add_option("--seed", ka.seed)->required();
  attack->add_option("--workers", ka.workers);
  attack->add_option("--out", ka.out)->required();

  AuditArgs da;
  auto* audit = app.add_subcommand("audit", "run the detector suite on one extract");
  audit->add_option("--data", da.data)->required();
  audit->add_option("--schema", da.schema);
  audit->add_option("--rules", da.rules)->required();
  audit->add_option("--out", da.out)->required();

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "compare detectors on original and adversarial extracts");
  report->add_option("--original", ra.original)->required();
  report->add_option("--adversarial", ra.adversarial)->required();
  report->add_option("--manifest", ra.manifest)->required();
  report->add_option("--schema", ra.schema);
  report->add_option("--rules", ra.rules)->required();
  report->add_option("--out", ra.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(aae::ExitCode::usage);
  }

  try {
    if (*synth) cmd_synth(sa);
    if (*train) cmd_train(ta);
    if (*analyze) cmd_analyze(aa);
    if (*attack) cmd_attack(ka);
    if (*audit) cmd_audit(da);
    if (*report) cmd_report(ra);
  } catch (const aae::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return static_cast<int>(aae::ExitCode::internal);
  }
  return 0;
}
