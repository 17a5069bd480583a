#ifndef FEDLAM_PLANNER_HPP
#define FEDLAM_PLANNER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fedlam/errors.hpp"
#include "fedlam/hessian.hpp"
#include "fedlam/latency.hpp"
#include "fedlam/learner.hpp"
#include "fedlam/modem.hpp"

namespace fedlam {

struct ModulationPlan {
  std::vector<int> levels;  // one modulation order per layer

  auto operator<=>(const ModulationPlan&) const = default;
};

/// Everything one client needs to score plans for the current round.
struct PlannerInputs {
  double grad_sq_sum = 0.0;
  LayerImportance importance;
  std::vector<std::size_t> layer_sizes;  // D_k
  std::vector<double> steps;             // quantizer step per layer
  /// Per-layer code_moment of the quantized update. Left empty, the planner
  /// assumes uniformly distributed code bits.
  std::vector<double> code_moments;
  TrainingHyperparams hp;
  ChannelConfig channel;
  ComputeConfig compute;  // V already resolved

  std::size_t layer_count() const { return layer_sizes.size(); }
};

struct ScoredPlan {
  ModulationPlan plan;
  double numerator = 0.0;    // predicted loss drop
  double denominator = 0.0;  // round latency, seconds
  double score = 0.0;
  double uplink = 0.0;  // uplink share of the denominator
  std::size_t plans_scored = 0;
};

inline double effective_ber(const ChannelConfig& ch, int level) {
  return ch.force_zero_ber ? 0.0 : ber(level, ch.es_n0);
}

/// Per-layer, per-candidate tables shared by every scoring path so that all
/// searches evaluate a given plan with identical arithmetic.
class ObjectiveTable {
 public:
  explicit ObjectiveTable(const PlannerInputs& in) : levels_(in.channel.candidate_levels) {
    const std::size_t l = in.layer_count();
    if (l == 0) throw SchemaError("planner: no layers");
    if (in.steps.size() != l || in.importance.weights.size() != l) {
      throw SchemaError("planner: steps / importance weights do not match layer count");
    }
    if (!in.code_moments.empty() && in.code_moments.size() != l) {
      throw SchemaError("planner: code moments do not match layer count");
    }
    if (!(in.grad_sq_sum >= 0.0)) throw ConfigError("planner: grad_sq_sum must be >= 0");
    in.channel.validate();

    const auto& hp = in.hp;
    const double n = hp.n_clients;
    const double tau = hp.tau;
    const double L = hp.L_smooth;
    const double eta = hp.eta;
    const double drift = L * L * (n + 1.0) * tau * (tau - 1.0) * eta * eta * eta * hp.sigma_sq / (2.0 * n);
    const double variance = L * tau * eta * eta * hp.sigma_sq / (2.0 * n);
    base_ = eta / 2.0 * in.grad_sq_sum - drift - variance;

    std::size_t total = 0;
    for (std::size_t d : in.layer_sizes) total += d;
    fixed_time_ = downlink_latency(total, in.channel.N_bits, in.channel.B_d) + compute_latency(in.compute);

    std::vector<double> bers;
    for (int m : levels_) bers.push_back(effective_ber(in.channel, m));
    const std::size_t c = levels_.size();
    penalty_.resize(l * c);
    uplink_.resize(l * c);
    for (std::size_t k = 0; k < l; ++k) {
      for (std::size_t j = 0; j < c; ++j) {
        const double err =
            in.code_moments.empty()
                ? expected_sq_error(in.layer_sizes[k], in.steps[k], in.channel.N_bits, bers[j])
                : expected_sq_error(in.layer_sizes[k], in.steps[k], in.channel.N_bits, bers[j], in.code_moments[k]);
        penalty_[k * c + j] = L / (2.0 * n) * in.importance.weights[k] * err;
        uplink_[k * c + j] = layer_uplink_latency(in.layer_sizes[k], in.channel.N_bits, in.channel.B_u, levels_[j]);
      }
    }
  }

  std::size_t layer_count() const { return penalty_.size() / levels_.size(); }
  std::size_t candidate_count() const { return levels_.size(); }
  int level(std::size_t j) const { return levels_[j]; }

  std::size_t index_of(int level) const {
    const auto it = std::find(levels_.begin(), levels_.end(), level);
    if (it == levels_.end()) throw ConfigError("plan level " + std::to_string(level) + " is not a candidate level");
    return static_cast<std::size_t>(it - levels_.begin());
  }

  /// Scores a plan given as candidate indices per layer.
  ScoredPlan score(std::span<const std::size_t> idx) const {
    const std::size_t c = levels_.size();
    ScoredPlan s;
    s.plan.levels.resize(idx.size());
    double num = base_;
    double up = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      num -= penalty_[k * c + idx[k]];
      up += uplink_[k * c + idx[k]];
      s.plan.levels[k] = levels_[idx[k]];
    }
    s.numerator = num;
    s.uplink = up;
    s.denominator = fixed_time_ + up;
    if (!(s.denominator > 0.0)) throw std::logic_error("planner: non-positive round latency");
    s.score = num / s.denominator;
    return s;
  }

  double penalty(std::size_t k, std::size_t j) const { return penalty_[k * levels_.size() + j]; }

 private:
  std::vector<int> levels_;
  double base_ = 0.0;
  double fixed_time_ = 0.0;
  std::vector<double> penalty_;
  std::vector<double> uplink_;
};

/// Strict preference: higher score, then lower uplink latency, then the
/// lexicographically smaller level vector.
inline bool better_plan(const ScoredPlan& a, const ScoredPlan& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.uplink != b.uplink) return a.uplink < b.uplink;
  return a.plan.levels < b.plan.levels;
}

inline ScoredPlan round_objective(const ModulationPlan& plan, const PlannerInputs& in) {
  const ObjectiveTable table(in);
  if (plan.levels.size() != table.layer_count()) {
    throw SchemaError("round_objective: plan covers " + std::to_string(plan.levels.size()) + " of " +
                      std::to_string(table.layer_count()) + " layers");
  }
  std::vector<std::size_t> idx(plan.levels.size());
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = table.index_of(plan.levels[k]);
  ScoredPlan s = table.score(idx);
  s.plans_scored = 1;
  return s;
}

namespace detail {

/// Walks every assignment of `slots` digits in base `table.candidate_count()`,
/// expanding each into a per-layer plan via `slot_of`.
inline ScoredPlan search(const ObjectiveTable& table, std::size_t slots, std::span<const std::size_t> slot_of) {
  const std::size_t c = table.candidate_count();
  std::vector<std::size_t> digit(slots, 0);
  std::vector<std::size_t> idx(slot_of.size(), 0);
  ScoredPlan best;
  bool have = false;
  std::size_t scored = 0;
  while (true) {
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = digit[slot_of[k]];
    ScoredPlan s = table.score(idx);
    ++scored;
    if (!have || better_plan(s, best)) {
      best = std::move(s);
      have = true;
    }
    bool wrapped = true;
    for (std::size_t pos = slots; pos-- > 0;) {
      if (++digit[pos] < c) {
        wrapped = false;
        break;
      }
      digit[pos] = 0;
    }
    if (wrapped) break;
  }
  best.plans_scored = scored;
  return best;
}

}  // namespace detail

constexpr std::size_t kDefaultEnumerationLimit = 12;

/// Exhaustive search over all per-layer plans. Refuses more than `max_layers`
/// layers; use plan_grouped for deep models.
inline ScoredPlan plan_enumerate(const PlannerInputs& in, std::size_t max_layers = kDefaultEnumerationLimit) {
  const ObjectiveTable table(in);
  const std::size_t l = table.layer_count();
  if (l > max_layers) {
    throw ConfigError("plan_enumerate: " + std::to_string(l) + " layers exceeds the enumeration limit of " +
                      std::to_string(max_layers) + "; use plan_grouped");
  }
  std::vector<std::size_t> slot_of(l);
  for (std::size_t k = 0; k < l; ++k) slot_of[k] = k;
  return detail::search(table, l, slot_of);
}

/// Searches plans that share one level per importance group.
inline ScoredPlan plan_grouped(const PlannerInputs& in, const LayerGrouping& grouping) {
  const ObjectiveTable table(in);
  if (grouping.group_of.size() != table.layer_count()) throw SchemaError("plan_grouped: grouping/layer mismatch");
  for (std::size_t g : grouping.group_of) {
    if (g >= grouping.groups) throw SchemaError("plan_grouped: group index out of range");
  }
  return detail::search(table, grouping.groups, grouping.group_of);
}

/// Model-wide adaptive modulation: one level for every layer.
inline ScoredPlan plan_am(const PlannerInputs& in) {
  const ObjectiveTable table(in);
  const std::vector<std::size_t> slot_of(table.layer_count(), 0);
  return detail::search(table, 1, slot_of);
}

inline ModulationPlan plan_fixed(int level, std::size_t layers) {
  bits_per_symbol(level);
  return ModulationPlan{std::vector<int>(layers, level)};
}

}  // namespace fedlam

#endif  // FEDLAM_PLANNER_HPP
