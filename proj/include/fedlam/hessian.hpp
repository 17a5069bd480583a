#ifndef FEDLAM_HESSIAN_HPP
#define FEDLAM_HESSIAN_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fedlam/dataset.hpp"
#include "fedlam/errors.hpp"
#include "fedlam/learner.hpp"
#include "fedlam/model.hpp"
#include "fedlam/rng.hpp"

namespace fedlam {

/// Matrix-free symmetric operator: returns H * v.
using HvpOracle = std::function<std::vector<double>(std::span<const double>)>;

struct EigenEstimate {
  double lambda = 0.0;  // signed Rayleigh quotient
  int iters = 0;
  bool converged = false;
};

/// Power iteration for the dominant (largest-magnitude) eigenvalue. Stops once
/// successive Rayleigh quotients agree to tol * max(1, |lambda|).
inline EigenEstimate top_eigenvalue(const HvpOracle& hv, std::size_t dim, double tol, int max_iters, Rng& rng) {
  if (dim == 0) throw ConfigError("top_eigenvalue: dim must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("top_eigenvalue: tol must be > 0");
  if (max_iters < 1) throw ConfigError("top_eigenvalue: max_iters must be >= 1");

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(dim);
  double n2 = 0.0;
  while (n2 == 0.0) {
    for (double& x : v) x = gauss(rng);
    n2 = sq_norm(v);
  }
  for (double& x : v) x /= std::sqrt(n2);

  EigenEstimate est;
  double prev = 0.0;
  for (int it = 1; it <= max_iters; ++it) {
    std::vector<double> w = hv(v);
    if (w.size() != dim) throw SchemaError("top_eigenvalue: oracle returned wrong length");
    const double lambda = dot(v, w);
    if (!std::isfinite(lambda)) throw NumericError("top_eigenvalue: non-finite Rayleigh quotient");
    est.lambda = lambda;
    est.iters = it;
    if (it > 1 && std::abs(lambda - prev) <= tol * std::max(1.0, std::abs(lambda))) {
      est.converged = true;
      return est;
    }
    prev = lambda;
    const double wn = std::sqrt(sq_norm(w));
    if (wn == 0.0) {  // v lies in the null space; zero operator as far as we can tell
      est.converged = true;
      return est;
    }
    for (std::size_t i = 0; i < dim; ++i) v[i] = w[i] / wn;
  }
  return est;
}

struct LayerImportance {
  std::vector<double> eigenvalues;
  std::vector<double> weights;
  int round_computed = -1;
};

/// Clamps negative estimates to zero and normalises; all-zero input gives uniform weights.
inline LayerImportance importance_weights(std::span<const double> eigenvalues, int round = -1) {
  if (eigenvalues.empty()) throw ConfigError("importance_weights: need at least one layer");
  LayerImportance imp;
  imp.round_computed = round;
  imp.eigenvalues.assign(eigenvalues.begin(), eigenvalues.end());
  imp.weights.resize(eigenvalues.size());
  double total = 0.0;
  for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
    imp.weights[k] = std::max(0.0, eigenvalues[k]);
    total += imp.weights[k];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    std::fill(imp.weights.begin(), imp.weights.end(), 1.0 / static_cast<double>(eigenvalues.size()));
    return imp;
  }
  for (double& w : imp.weights) w /= total;
  return imp;
}

struct LayerGrouping {
  std::vector<std::size_t> group_of;
  std::size_t groups = 0;
};

/// Sorts layers by descending weight (ties by index) and cuts the order into
/// `g` contiguous runs of near-equal length; leftover layers go to the most
/// important groups. Group 0 holds the most important layers.
inline LayerGrouping group_layers(const LayerImportance& imp, std::size_t g) {
  const std::size_t l = imp.weights.size();
  if (g < 1 || g > l) {
    throw ConfigError("group_layers: group count " + std::to_string(g) + " outside [1, " + std::to_string(l) + "]");
  }
  std::vector<std::size_t> order(l);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return imp.weights[a] > imp.weights[b]; });

  LayerGrouping out;
  out.groups = g;
  out.group_of.assign(l, 0);
  const std::size_t base = l / g, rem = l % g;
  std::size_t pos = 0;
  for (std::size_t grp = 0; grp < g; ++grp) {
    const std::size_t len = base + (grp < rem ? 1 : 0);
    for (std::size_t j = 0; j < len; ++j) out.group_of[order[pos++]] = grp;
  }
  return out;
}

struct PowerIterationConfig {
  double tol = 1e-4;
  int max_iters = 100;
  double hvp_scale = kDefaultHvpScale;
};

/// Top Hessian eigenvalue of every layer's diagonal block on one batch.
inline std::vector<EigenEstimate> layer_eigenvalues(const LayeredModel& model, const Dataset& data,
                                                    std::span<const std::size_t> batch,
                                                    const PowerIterationConfig& pic, std::uint64_t seed) {
  std::vector<EigenEstimate> out;
  out.reserve(model.layer_count());
  for (std::size_t k = 0; k < model.layer_count(); ++k) {
    const std::size_t mask[1] = {k};
    HvpOracle oracle = [&](std::span<const double> v) { return hvp(model, data, batch, v, mask, pic.hvp_scale); };
    Rng rng = make_rng(seed, Stream::kPower, {k});
    out.push_back(top_eigenvalue(oracle, model.layer(k).params.size(), pic.tol, pic.max_iters, rng));
  }
  return out;
}

}  // namespace fedlam

#endif  // FEDLAM_HESSIAN_HPP
