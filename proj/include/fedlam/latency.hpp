#ifndef FEDLAM_LATENCY_HPP
#define FEDLAM_LATENCY_HPP

#include <cstddef>
#include <span>
#include <string>

#include "fedlam/errors.hpp"
#include "fedlam/modem.hpp"

namespace fedlam {

struct ComputeConfig {
  double V = 0.0;  // samples per round; 0 means "use the client's shard size"
  double C = 1e6;  // cycles per sample
  double f_clock = 1e9;

  void validate() const {
    if (!(V >= 0.0)) throw ConfigError("compute.V must be >= 0 (0 selects the shard size)");
    if (!(C > 0.0)) throw ConfigError("compute.C must be > 0");
    if (!(f_clock > 0.0)) throw ConfigError("compute.f must be > 0");
  }
};

struct LatencyBreakdown {
  double T_d = 0.0;
  double T_c = 0.0;
  double T_u = 0.0;
  double T_round = 0.0;

  static LatencyBreakdown of(double t_d, double t_c, double t_u) { return {t_d, t_c, t_u, t_d + t_c + t_u}; }
};

/// Broadcast of D parameters at N bits each over BPSK.
inline double downlink_latency(std::size_t total_params, int n_bits, double b_d) {
  return static_cast<double>(total_params) * n_bits / (2.0 * b_d);
}

inline double layer_uplink_latency(std::size_t d_k, int n_bits, double b_u, int level) {
  return static_cast<double>(d_k) * n_bits / (2.0 * b_u * bits_per_symbol(level));
}

inline double uplink_latency(std::span<const std::size_t> layer_sizes, std::span<const int> levels, int n_bits,
                             double b_u) {
  if (layer_sizes.size() != levels.size()) {
    throw SchemaError("uplink_latency: plan has " + std::to_string(levels.size()) + " levels for " +
                      std::to_string(layer_sizes.size()) + " layers");
  }
  double t = 0.0;
  for (std::size_t k = 0; k < levels.size(); ++k) t += layer_uplink_latency(layer_sizes[k], n_bits, b_u, levels[k]);
  return t;
}

inline double compute_latency(const ComputeConfig& cc) { return cc.V * cc.C / cc.f_clock; }

inline double accumulate(std::span<const LatencyBreakdown> rounds) {
  double t = 0.0;
  for (const auto& r : rounds) t += r.T_round;
  return t;
}

}  // namespace fedlam

#endif  // FEDLAM_LATENCY_HPP
