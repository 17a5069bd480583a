// fedlam: experiment runner for latency-aware layer-wise modulation in FL.
//
//   fedlam run         --config c.json [--out dir] [--seed s] [--scheme x] [--deterministic]
//   fedlam compare     --config c.json [--out dir] [--seed s] [--schemes a,b,...] [--jobs n]
//   fedlam ber-table   [--config c.json] [--out file] [--min x] [--max y] [--points n]
//   fedlam importance  --config c.json [--out file] [--seed s] [--warmup r]
//
// Exit status: 0 success, 1 configuration error, 2 runtime error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fedlam/fedlam.hpp"

namespace fs = std::filesystem;
using namespace fedlam;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string scheme;
  bool deterministic = false;
};

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (!f.scheme.empty()) cfg.scheme = Scheme::parse(f.scheme);
  if (f.deterministic) {
    cfg.deterministic = true;
    cfg.threads = 1;
  }
  cfg.validate();
  return cfg;
}

void print_row(const SummaryRow& row) {
  if (row.reached) {
    std::printf("%-12s reached target in %d rounds, %.4g s\n", row.scheme.c_str(), row.rounds_to_target,
                row.latency_to_target);
  } else {
    std::printf("%-12s target not reached, final accuracy %.4f\n", row.scheme.c_str(), row.final_accuracy);
  }
}

int cmd_run(const CommonFlags& f) {
  const ExperimentConfig cfg = resolve(f);
  const TrainTest data = load_data(cfg.dataset);
  const ExperimentResult res = run_experiment(cfg, data.train, data.test);
  const fs::path dir = f.out.empty() ? fs::path("out") : fs::path(f.out);
  write_outputs(res, cfg, dir);
  std::ofstream(dir / "config.json") << serialize_config(cfg);
  print_row(summarize(cfg.scheme.to_string(), res));
  std::printf("outputs written to %s\n", dir.string().c_str());
  return kExitOk;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_compare(const CommonFlags& f, const std::string& schemes_arg, int jobs) {
  ExperimentConfig base = resolve(f);
  std::vector<ExperimentConfig> cfgs;
  for (const auto& name : split_list(schemes_arg)) {
    ExperimentConfig c = base;
    c.scheme = Scheme::parse(name);
    c.validate();
    cfgs.push_back(c);
  }
  if (cfgs.empty()) throw ConfigError("--schemes must name at least one scheme");
  if (jobs < 1) throw ConfigError("--jobs must be >= 1");
  if (base.deterministic) jobs = 1;

  const TrainTest data = load_data(base.dataset);
  const fs::path dir = f.out.empty() ? fs::path("out") : fs::path(f.out);
  std::vector<SummaryRow> rows(cfgs.size());
  auto one = [&](std::size_t i) {
    const ExperimentResult res = run_experiment(cfgs[i], data.train, data.test);
    write_outputs(res, cfgs[i], dir / cfgs[i].scheme.to_string());
    rows[i] = summarize(cfgs[i].scheme.to_string(), res);
  };
  for (std::size_t start = 0; start < cfgs.size(); start += static_cast<std::size_t>(jobs)) {
    std::vector<std::future<void>> pending;
    const std::size_t stop = std::min(cfgs.size(), start + static_cast<std::size_t>(jobs));
    for (std::size_t i = start; i < stop; ++i) pending.push_back(std::async(std::launch::async, one, i));
    for (auto& p : pending) p.get();
  }
  write_summary(rows, dataset_label(base), base.target_accuracy, dir / "summary.txt");
  std::ofstream(dir / "config.json") << serialize_config(base);
  for (const auto& r : rows) print_row(r);
  std::cout << "\n" << format_summary(rows, dataset_label(base), base.target_accuracy);
  return kExitOk;
}

int cmd_ber_table(const CommonFlags& f, double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2) {
    throw ConfigError("ber-table needs 0 < --min < --max and --points >= 2");
  }
  const ExperimentConfig cfg = resolve(f);
  std::ostringstream os;
  os << "es_n0,es_n0_db";
  for (int m : cfg.channel.candidate_levels) os << ",M" << m;
  os << "\n";
  char buf[64];
  for (int i = 0; i < points; ++i) {
    const double x = lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
    std::snprintf(buf, sizeof buf, "%.10g,%.6f", x, 10.0 * std::log10(x));
    os << buf;
    for (int m : cfg.channel.candidate_levels) {
      std::snprintf(buf, sizeof buf, ",%.10e", ber(m, x));
      os << buf;
    }
    os << "\n";
  }
  if (f.out.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream out(f.out);
    if (!out) throw IoError("cannot open " + f.out + " for writing");
    out << os.str();
  }
  return kExitOk;
}

int cmd_importance(const CommonFlags& f, int warmup) {
  ExperimentConfig cfg = resolve(f);
  if (warmup < 0) throw ConfigError("--warmup must be >= 0");
  cfg.rounds = warmup;
  cfg.target_accuracy = 0.0;
  const TrainTest data = load_data(cfg.dataset);
  Simulator sim(cfg, data.train, data.test);
  for (int r = 0; r < warmup; ++r) sim.run_round();
  const LayerImportance imp = sim.compute_importance(warmup);

  nlohmann::json layers = nlohmann::json::array();
  std::printf("%-8s %10s %14s %10s\n", "layer", "params", "eigenvalue", "weight");
  for (std::size_t k = 0; k < imp.weights.size(); ++k) {
    const Layer& layer = sim.global_model().layer(k);
    std::printf("%-8s %10zu %14.6g %10.4f\n", layer.name().c_str(), layer.params.size(), imp.eigenvalues[k],
                imp.weights[k]);
    layers.push_back({{"name", layer.name()},
                      {"D_k", layer.params.size()},
                      {"eigenvalue", imp.eigenvalues[k]},
                      {"weight", imp.weights[k]}});
  }
  if (!f.out.empty()) {
    std::ofstream out(f.out);
    if (!out) throw IoError("cannot open " + f.out + " for writing");
    out << nlohmann::json{{"model", cfg.model}, {"seed", cfg.seed}, {"round", warmup}, {"layers", layers}}.dump(2)
        << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latency-aware layer-wise modulation for federated learning"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* c = sub->add_option("--config", flags.config, "experiment config (JSON)");
    if (need_config) c->required();
    sub->add_option("--out", flags.out, "output directory or file");
    sub->add_option("--seed", flags.seed, "override the config seed");
    sub->add_option("--scheme", flags.scheme, "layerwise | am | fixed<M> | grouped<g>");
    sub->add_flag("--deterministic", flags.deterministic, "force single-threaded deterministic execution");
  };

  auto* run = app.add_subcommand("run", "run one experiment");
  add_common(run, true);

  std::string schemes = "layerwise,am,fixed2,fixed4,fixed8,fixed16";
  int jobs = 1;
  auto* compare = app.add_subcommand("compare", "run one config across several schemes");
  add_common(compare, true);
  compare->add_option("--schemes", schemes, "comma-separated scheme list")->capture_default_str();
  compare->add_option("--jobs", jobs, "schemes run concurrently (non-deterministic mode only)");

  double lo = 1e-2, hi = 1e3;
  int points = 20;
  auto* table = app.add_subcommand("ber-table", "tabulate M-PSK bit error rates");
  add_common(table, false);
  table->add_option("--min", lo, "smallest Es/N0 (linear)")->capture_default_str();
  table->add_option("--max", hi, "largest Es/N0 (linear)")->capture_default_str();
  table->add_option("--points", points, "log-spaced grid points")->capture_default_str();

  int warmup = 0;
  auto* importance = app.add_subcommand("importance", "report per-layer Hessian importance");
  add_common(importance, true);
  importance->add_option("--warmup", warmup, "training rounds before the estimate")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(flags);
    if (*compare) return cmd_compare(flags, schemes, jobs);
    if (*table) return cmd_ber_table(flags, lo, hi, points);
    if (*importance) return cmd_importance(flags, warmup);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}
