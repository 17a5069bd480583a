#ifndef FEDLAM_MODEM_HPP
#define FEDLAM_MODEM_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fedlam/errors.hpp"
#include "fedlam/rng.hpp"

namespace fedlam {

inline bool is_supported_level(int m) { return m >= 2 && m <= 1024 && std::has_single_bit(static_cast<unsigned>(m)); }

inline int bits_per_symbol(int m) {
  if (!is_supported_level(m)) throw ConfigError("unsupported modulation order " + std::to_string(m));
  return std::countr_zero(static_cast<unsigned>(m));
}

struct ChannelConfig {
  double es_n0 = 21.6;  // linear Es/N0
  double B_u = 1e6;     // Hz per client
  double B_d = 1e7;     // Hz
  int N_bits = 16;
  std::vector<int> candidate_levels{2, 4, 8, 16};
  /// Regression switches: deliver updates unquantized, or pretend b = 0.
  bool exact_uplink = false;
  bool force_zero_ber = false;

  void validate() const {
    if (!(es_n0 >= 0.0) || !std::isfinite(es_n0)) throw ConfigError("channel.es_n0 must be finite and >= 0");
    if (!(B_u > 0.0)) throw ConfigError("channel.B_u must be > 0");
    if (!(B_d > 0.0)) throw ConfigError("channel.B_d must be > 0");
    if (N_bits < 2 || N_bits > 32) throw ConfigError("channel.N_bits must be in [2, 32]");
    if (candidate_levels.empty()) throw ConfigError("channel.candidate_levels must be non-empty");
    for (std::size_t i = 0; i < candidate_levels.size(); ++i) {
      if (!is_supported_level(candidate_levels[i])) {
        throw ConfigError("channel.candidate_levels: " + std::to_string(candidate_levels[i]) +
                          " is not a power of two >= 2");
      }
      if (i > 0 && candidate_levels[i] <= candidate_levels[i - 1]) {
        throw ConfigError("channel.candidate_levels must be strictly increasing");
      }
    }
  }
};

/// Standard normal tail probability P(Z > x).
inline double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// Approximate M-PSK bit error rate over AWGN, clamped to [0, 0.5].
inline double ber(int m, double es_n0) {
  const int k = bits_per_symbol(m);
  if (!(es_n0 >= 0.0)) throw ConfigError("ber: es_n0 must be >= 0");
  const double amp = std::sqrt(2.0 * es_n0);
  const int terms = std::max(m / 4, 1);
  double sum = 0.0;
  for (int i = 1; i <= terms; ++i) {
    sum += q_function(amp * std::sin((2.0 * i - 1.0) * std::numbers::pi / m));
  }
  const double b = 2.0 / std::max(k, 2) * sum;
  return std::clamp(b, 0.0, 0.5);
}

/// Offset-binary uniform code for one layer's update.
struct QuantizedLayer {
  std::vector<std::uint32_t> codes;
  double v_min = 0.0;
  double step = 0.0;
  int n_bits = 16;

  std::size_t count() const { return codes.size(); }
  std::uint64_t max_code() const { return (std::uint64_t{1} << n_bits) - 1; }
};

inline QuantizedLayer quantize_update(std::span<const double> delta, int n_bits) {
  if (delta.empty()) throw ConfigError("quantize_update: empty array");
  if (n_bits < 2 || n_bits > 32) throw ConfigError("quantize_update: n_bits must be in [2, 32]");
  double lo = delta[0], hi = delta[0];
  for (double v : delta) {
    if (!std::isfinite(v)) throw NumericError("quantize_update: non-finite value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  QuantizedLayer q;
  q.n_bits = n_bits;
  q.v_min = lo;
  const auto levels = static_cast<double>(q.max_code());
  q.step = (hi - lo) / levels;
  q.codes.resize(delta.size(), 0);
  if (q.step > 0.0) {
    for (std::size_t i = 0; i < delta.size(); ++i) {
      const double c = std::round((delta[i] - lo) / q.step);
      q.codes[i] = static_cast<std::uint32_t>(std::clamp(c, 0.0, levels));
    }
  }
  return q;
}

inline std::vector<double> dequantize(const QuantizedLayer& q) {
  std::vector<double> out(q.codes.size());
  for (std::size_t i = 0; i < q.codes.size(); ++i) out[i] = q.v_min + q.step * static_cast<double>(q.codes[i]);
  return out;
}

/// Flips each of the count * n_bits payload bits independently with
/// probability b. Metadata (v_min, step) is delivered intact.
inline QuantizedLayer transmit(const QuantizedLayer& layer, double b, Rng& rng) {
  if (!(b >= 0.0 && b <= 0.5)) throw ConfigError("transmit: bit error rate must be in [0, 0.5]");
  QuantizedLayer out = layer;
  if (b == 0.0) return out;
  const auto nb = static_cast<std::uint64_t>(layer.n_bits);
  const std::uint64_t total = static_cast<std::uint64_t>(layer.codes.size()) * nb;
  // Gap to the next flipped bit is geometric with success probability b.
  std::geometric_distribution<std::uint64_t> gap(b);
  std::uint64_t pos = 0;
  while (true) {
    pos += gap(rng);
    if (pos >= total) break;
    out.codes[pos / nb] ^= std::uint32_t{1} << (pos % nb);
    ++pos;
  }
  return out;
}

/// E||received - sent||^2 for a layer of `d_k` codes when each bit flips with
/// probability b and code bits are uniformly distributed: flipping bit j moves
/// the value by +-2^j * step, and cross-bit terms vanish on average.
inline double expected_sq_error(std::size_t d_k, double step, int n_bits, double b) {
  const double span = (std::pow(4.0, n_bits) - 1.0) / 3.0;
  return static_cast<double>(d_k) * b * step * step * span;
}

/// Sum over codes of (2^N - 1 - 2c)^2, the signed bit-weight magnitude that
/// the cross-bit error terms depend on. Equals d_k * (4^N - 1) / 3 on average
/// over uniformly distributed codes.
inline double code_moment(const QuantizedLayer& q) {
  const double top = static_cast<double>(q.max_code());
  double s = 0.0;
  for (std::uint32_t c : q.codes) {
    const double u = top - 2.0 * static_cast<double>(c);
    s += u * u;
  }
  return s;
}

/// Exact E||received - sent||^2 for this layer's codes:
/// step^2 * [b(1-b) d_k (4^N-1)/3 + b^2 * code_moment].
inline double expected_sq_error(std::size_t d_k, double step, int n_bits, double b, double moment) {
  const double span = (std::pow(4.0, n_bits) - 1.0) / 3.0;
  return step * step * (b * (1.0 - b) * static_cast<double>(d_k) * span + b * b * moment);
}

inline double expected_sq_error(const QuantizedLayer& q, double b) {
  return expected_sq_error(q.codes.size(), q.step, q.n_bits, b, code_moment(q));
}

}  // namespace fedlam

#endif  // FEDLAM_MODEM_HPP
