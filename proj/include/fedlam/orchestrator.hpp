#ifndef FEDLAM_ORCHESTRATOR_HPP
#define FEDLAM_ORCHESTRATOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fedlam/dataset.hpp"
#include "fedlam/errors.hpp"
#include "fedlam/hessian.hpp"
#include "fedlam/latency.hpp"
#include "fedlam/learner.hpp"
#include "fedlam/model.hpp"
#include "fedlam/modem.hpp"
#include "fedlam/planner.hpp"
#include "fedlam/rng.hpp"

namespace fedlam {

/// How each client picks its per-layer modulation levels.
struct Scheme {
  enum class Kind { kLayerwise, kGrouped, kAm, kFixed };

  Kind kind = Kind::kLayerwise;
  int level = 0;            // kFixed
  std::size_t groups = 0;   // kGrouped

  static Scheme layerwise() { return {}; }
  static Scheme am() { return {Kind::kAm, 0, 0}; }
  static Scheme fixed(int m) { return {Kind::kFixed, m, 0}; }
  static Scheme grouped(std::size_t g) { return {Kind::kGrouped, 0, g}; }

  /// Accepts "layerwise", "am", "fixed<M>" and "grouped<g>" (an optional ':' may
  /// separate the number, e.g. "grouped:5").
  static Scheme parse(const std::string& text) {
    auto number_after = [&](std::size_t prefix) -> long {
      std::string rest = text.substr(prefix);
      if (!rest.empty() && rest.front() == ':') rest.erase(0, 1);
      if (rest.empty() || rest.find_first_not_of("0123456789") != std::string::npos) {
        throw ConfigError("scheme '" + text + "': expected a positive integer suffix");
      }
      return std::stol(rest);
    };
    if (text == "layerwise") return layerwise();
    if (text == "am") return am();
    if (text.rfind("fixed", 0) == 0) {
      const long m = number_after(5);
      if (!is_supported_level(static_cast<int>(m))) throw ConfigError("scheme '" + text + "': unsupported level");
      return fixed(static_cast<int>(m));
    }
    if (text.rfind("grouped", 0) == 0) {
      const long g = number_after(7);
      if (g < 1) throw ConfigError("scheme '" + text + "': group count must be >= 1");
      return grouped(static_cast<std::size_t>(g));
    }
    throw ConfigError("unknown scheme '" + text + "' (expected layerwise, am, fixed<M>, grouped<g>)");
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::kLayerwise: return "layerwise";
      case Kind::kAm: return "am";
      case Kind::kFixed: return "fixed" + std::to_string(level);
      case Kind::kGrouped: return "grouped" + std::to_string(groups);
    }
    return "?";
  }

  bool needs_importance() const { return kind != Kind::kFixed; }
  bool operator==(const Scheme&) const = default;
};

struct DatasetSpec {
  std::string kind = "synthetic";  // "synthetic" or "mnist-idx"
  std::string train_images, train_labels, test_images, test_labels;
  std::size_t train_samples = 10000;  // synthetic count, or cap on IDX rows (0 = all)
  std::size_t test_samples = 2000;
  std::size_t dims = 784;
  int classes = 10;
  double margin = 6.0;
  double noise = 1.0;
  std::uint64_t data_seed = 2024;
};

struct ExperimentConfig {
  int rounds = 100;
  std::uint64_t seed = 1;
  std::string model = "mlp-small";
  Scheme scheme;
  TrainingHyperparams hp;
  ChannelConfig channel;
  ComputeConfig compute;
  DatasetSpec dataset;
  int eval_every = 1;
  double target_accuracy = 0.0;  // 0 disables early stopping
  int importance_period = 5;
  std::size_t importance_batch = 64;
  PowerIterationConfig power;
  std::size_t enumeration_limit = kDefaultEnumerationLimit;
  std::size_t fallback_groups = 5;
  std::size_t train_eval_samples = 2000;
  bool deterministic = true;
  int threads = 1;

  int n_clients() const { return hp.n_clients; }

  void validate() const {
    if (rounds < 0) throw ConfigError("rounds must be >= 0");
    hp.validate();
    channel.validate();
    compute.validate();
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
    if (!(target_accuracy >= 0.0 && target_accuracy <= 1.0)) throw ConfigError("target_accuracy must be in [0, 1]");
    if (importance_period < 1) throw ConfigError("importance_period must be >= 1");
    if (importance_batch < 1) throw ConfigError("importance_batch must be >= 1");
    if (!(power.tol > 0.0) || power.max_iters < 1) throw ConfigError("power iteration tol/max_iters invalid");
    if (!(power.hvp_scale > 0.0)) throw ConfigError("power.hvp_scale must be > 0");
    if (fallback_groups < 1) throw ConfigError("fallback_groups must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (scheme.kind == Scheme::Kind::kFixed &&
        std::find(channel.candidate_levels.begin(), channel.candidate_levels.end(), scheme.level) ==
            channel.candidate_levels.end()) {
      throw ConfigError("scheme " + scheme.to_string() + " uses a level outside channel.candidate_levels");
    }
  }
};

struct LayerReport {
  std::string name;
  int level = 0;
  double weight = 0.0;
  std::size_t size = 0;
  double step = 0.0;
  double ber = 0.0;
  double predicted_error = 0.0;  // E||received - sent||^2
  double realized_error = 0.0;   // ||received - sent||^2 this round
};

struct ClientReport {
  int client = 0;
  double grad_sq_sum = 0.0;
  ScoredPlan scored;
  std::vector<LayerReport> layers;
};

struct RoundRecord {
  int round = 0;
  bool evaluated = false;
  double train_loss = std::numeric_limits<double>::quiet_NaN();
  double test_accuracy = std::numeric_limits<double>::quiet_NaN();
  LatencyBreakdown latency;
  double cumulative_latency = 0.0;
  std::vector<ClientReport> clients;
  std::vector<double> realized_error;  // per layer, summed over clients
  std::optional<LayerImportance> importance;  // set on rounds that recomputed it
};

struct ExperimentResult {
  double initial_accuracy = 0.0;
  double initial_loss = 0.0;
  std::vector<RoundRecord> records;
  bool reached_target = false;
  double latency_to_target = std::numeric_limits<double>::quiet_NaN();
  int rounds_to_target = -1;
};

/// Synchronous FedAvg over a noisy uplink with per-client modulation planning.
class Simulator {
 public:
  Simulator(ExperimentConfig cfg, const Dataset& train, const Dataset& test)
      : cfg_(std::move(cfg)), train_(train), test_(test) {
    cfg_.validate();
    specs_ = architecture(cfg_.model, train_.dim, static_cast<std::size_t>(train_.classes));
    global_ = make_model(specs_, cfg_.seed);
    shards_ = split_iid(train_, static_cast<std::size_t>(cfg_.n_clients()), cfg_.seed);
    test_idx_ = all_indices(test_);
    const std::size_t n_eval = std::min(cfg_.train_eval_samples == 0 ? train_.size() : cfg_.train_eval_samples,
                                        train_.size());
    train_eval_idx_.resize(n_eval);
    for (std::size_t i = 0; i < n_eval; ++i) train_eval_idx_[i] = i;
    const Schema s = global_.schema();
    importance_ = importance_weights(std::vector<double>(s.layer_count(), 1.0));
  }

  const ExperimentConfig& config() const { return cfg_; }
  const LayeredModel& global_model() const { return global_; }
  void set_global_model(LayeredModel m) { global_ = std::move(m); }
  const std::vector<IndexList>& shards() const { return shards_; }
  int round() const { return round_; }
  double cumulative_latency() const { return cumulative_latency_; }
  const LayerImportance& importance() const { return importance_; }

  double test_accuracy() const { return evaluate(global_, test_, test_idx_); }
  double train_loss() const { return mean_loss(global_, train_, train_eval_idx_); }

  /// Server-side importance estimate on one mini-batch of client 0's shard.
  LayerImportance compute_importance(int round) const {
    const IndexList& ref = shards_.front();
    IndexList batch(ref.begin(), ref.end());
    Rng rng = make_rng(cfg_.seed, Stream::kImportance, {static_cast<std::uint64_t>(round)});
    std::shuffle(batch.begin(), batch.end(), rng);
    batch.resize(std::min(batch.size(), cfg_.importance_batch));
    const auto est = layer_eigenvalues(global_, train_, batch, cfg_.power,
                                       derive_seed(cfg_.seed, Stream::kPower, {static_cast<std::uint64_t>(round)}));
    std::vector<double> eig;
    for (const auto& e : est) eig.push_back(e.lambda);
    return importance_weights(eig, round);
  }

  RoundRecord run_round() {
    const int r = round_;
    RoundRecord rec;
    rec.round = r;
    if (cfg_.scheme.needs_importance() && r % cfg_.importance_period == 0) {
      importance_ = compute_importance(r);
      rec.importance = importance_;
    }

    const auto n = static_cast<std::size_t>(cfg_.n_clients());
    std::vector<ClientOutcome> outcomes(n);
    auto work = [&](std::size_t i) { outcomes[i] = run_client(r, i); };
    if (!cfg_.deterministic && cfg_.threads > 1) {
      for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg_.threads)) {
        std::vector<std::future<void>> jobs;
        const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg_.threads));
        for (std::size_t i = start; i < end; ++i) jobs.push_back(std::async(std::launch::async, work, i));
        for (auto& j : jobs) j.get();
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) work(i);
    }

    // Ordered reduction keeps aggregation independent of worker scheduling.
    LayerArrays sum = global_.zeros_like();
    rec.realized_error.assign(global_.layer_count(), 0.0);
    double t_u = 0.0;
    double max_shard = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto& o = outcomes[i];
      for (std::size_t k = 0; k < sum.size(); ++k) {
        for (std::size_t j = 0; j < sum[k].size(); ++j) sum[k][j] += o.received[k][j];
        rec.realized_error[k] += o.report.layers[k].realized_error;
      }
      t_u = std::max(t_u, o.report.scored.uplink);
      max_shard = std::max(max_shard, static_cast<double>(shards_[i].size()));
      rec.clients.push_back(std::move(o.report));
    }
    global_.axpy(1.0 / static_cast<double>(n), sum);

    const Schema schema = global_.schema();
    rec.latency = LatencyBreakdown::of(downlink_latency(schema.total, cfg_.channel.N_bits, cfg_.channel.B_d),
                                       compute_latency(resolved_compute(max_shard)), t_u);
    cumulative_latency_ += rec.latency.T_round;
    rec.cumulative_latency = cumulative_latency_;

    ++round_;
    if (round_ % cfg_.eval_every == 0 || round_ == cfg_.rounds) {
      rec.evaluated = true;
      rec.train_loss = train_loss();
      rec.test_accuracy = test_accuracy();
    }
    return rec;
  }

  ExperimentResult run() {
    ExperimentResult res;
    res.initial_accuracy = test_accuracy();
    res.initial_loss = train_loss();
    while (round_ < cfg_.rounds) {
      RoundRecord rec = run_round();
      const bool hit = cfg_.target_accuracy > 0.0 && rec.evaluated && rec.test_accuracy >= cfg_.target_accuracy;
      res.records.push_back(std::move(rec));
      if (hit) {
        res.reached_target = true;
        res.latency_to_target = res.records.back().cumulative_latency;
        res.rounds_to_target = res.records.back().round + 1;
        break;
      }
    }
    return res;
  }

 private:
  struct ClientOutcome {
    ClientReport report;
    LayerArrays received;
  };

  ComputeConfig resolved_compute(double shard_size) const {
    ComputeConfig cc = cfg_.compute;
    if (cc.V == 0.0) cc.V = shard_size;
    return cc;
  }

  ScoredPlan choose_plan(const PlannerInputs& in) const {
    const std::size_t l = in.layer_count();
    switch (cfg_.scheme.kind) {
      case Scheme::Kind::kFixed: return round_objective(plan_fixed(cfg_.scheme.level, l), in);
      case Scheme::Kind::kAm: return plan_am(in);
      case Scheme::Kind::kGrouped:
        return plan_grouped(in, group_layers(in.importance, std::min(cfg_.scheme.groups, l)));
      case Scheme::Kind::kLayerwise:
        if (l <= cfg_.enumeration_limit) return plan_enumerate(in, cfg_.enumeration_limit);
        return plan_grouped(in, group_layers(in.importance, std::min(cfg_.fallback_groups, l)));
    }
    throw std::logic_error("unhandled scheme");
  }

  ClientOutcome run_client(int r, std::size_t i) const {
    const auto ur = static_cast<std::uint64_t>(r);
    Rng train_rng = make_rng(cfg_.seed, Stream::kTrain, {ur, i});
    LocalTrainResult local;
    try {
      local = local_train(global_, train_, shards_[i], cfg_.hp, train_rng);
    } catch (const NumericError& e) {
      throw NumericError("round " + std::to_string(r) + ", client " + std::to_string(i) + ": " + e.what());
    }
    const LayerArrays& delta = local.stats.per_layer_update;
    const std::size_t l = delta.size();
    const int nb = cfg_.channel.N_bits;

    std::vector<QuantizedLayer> sent;
    sent.reserve(l);
    PlannerInputs in;
    in.grad_sq_sum = local.stats.sq_norm_sum;
    in.importance = importance_;
    in.hp = cfg_.hp;
    in.channel = cfg_.channel;
    in.compute = resolved_compute(static_cast<double>(shards_[i].size()));
    for (std::size_t k = 0; k < l; ++k) {
      sent.push_back(quantize_update(delta[k], nb));
      in.layer_sizes.push_back(delta[k].size());
      in.steps.push_back(sent.back().step);
      in.code_moments.push_back(code_moment(sent.back()));
    }

    ClientOutcome out;
    out.report.client = static_cast<int>(i);
    out.report.grad_sq_sum = in.grad_sq_sum;
    out.report.scored = choose_plan(in);
    out.received.resize(l);
    for (std::size_t k = 0; k < l; ++k) {
      LayerReport lr;
      lr.name = global_.layer(k).name();
      lr.level = out.report.scored.plan.levels[k];
      lr.weight = importance_.weights[k];
      lr.size = delta[k].size();
      lr.step = sent[k].step;
      lr.ber = effective_ber(cfg_.channel, lr.level);
      lr.predicted_error = expected_sq_error(lr.size, lr.step, nb, lr.ber, in.code_moments[k]);
      if (cfg_.channel.exact_uplink) {
        out.received[k] = delta[k];
      } else {
        Rng ch = make_rng(cfg_.seed, Stream::kChannel, {ur, i, k});
        const QuantizedLayer rx = transmit(sent[k], lr.ber, ch);
        out.received[k] = dequantize(rx);
        const std::vector<double> tx = dequantize(sent[k]);
        for (std::size_t j = 0; j < tx.size(); ++j) {
          const double e = out.received[k][j] - tx[j];
          lr.realized_error += e * e;
        }
      }
      out.report.layers.push_back(std::move(lr));
    }
    return out;
  }

  ExperimentConfig cfg_;
  const Dataset& train_;
  const Dataset& test_;
  std::vector<LayerSpec> specs_;
  LayeredModel global_;
  std::vector<IndexList> shards_;
  IndexList test_idx_;
  IndexList train_eval_idx_;
  LayerImportance importance_;
  int round_ = 0;
  double cumulative_latency_ = 0.0;
};

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& train, const Dataset& test) {
  Simulator sim(cfg, train, test);
  return sim.run();
}

}  // namespace fedlam

#endif  // FEDLAM_ORCHESTRATOR_HPP
