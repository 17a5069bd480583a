#ifndef FEDLAM_LEARNER_HPP
#define FEDLAM_LEARNER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fedlam/dataset.hpp"
#include "fedlam/errors.hpp"
#include "fedlam/model.hpp"
#include "fedlam/rng.hpp"

namespace fedlam {

struct TrainingHyperparams {
  double eta = 0.01;
  int tau = 5;
  double L_smooth = 1.0;
  double sigma_sq = 0.1;
  int n_clients = 10;
  /// Examples per SGD step; 0 means the whole shard.
  std::size_t batch_size = 32;

  void validate() const {
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw ConfigError("hp.eta must be finite and >= 0");
    if (tau < 1) throw ConfigError("hp.tau must be >= 1");
    if (!(L_smooth > 0.0)) throw ConfigError("hp.L_smooth must be > 0");
    if (!(sigma_sq >= 0.0)) throw ConfigError("hp.sigma_sq must be >= 0");
    if (n_clients < 1) throw ConfigError("hp.n_clients must be >= 1");
  }
};

struct GradientStats {
  double sq_norm_sum = 0.0;    // sum over local steps of ||g_t||^2
  LayerArrays per_layer_update;  // w_end - w_start
};

struct ForwardResult {
  double loss = 0.0;
  std::vector<double> logits;  // batch x classes
};

struct GradientResult {
  double loss = 0.0;
  LayerArrays grads;
};

namespace detail {

inline void dense_forward(const LayerSpec& s, std::span<const double> p, const double* in, double* out,
                          std::size_t batch) {
  const double* w = p.data();
  const double* bias = p.data() + s.weight_count();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* a = in + b * s.in;
    double* z = out + b * s.out;
    for (std::size_t o = 0; o < s.out; ++o) {
      const double* wr = w + o * s.in;
      double acc = 0.0;
      for (std::size_t i = 0; i < s.in; ++i) acc += wr[i] * a[i];
      z[o] = acc + bias[o];
    }
  }
}

inline void dense_backward(const LayerSpec& s, std::span<const double> p, const double* in, const double* dz,
                           double* grad, double* din, std::size_t batch) {
  const double* w = p.data();
  double* gw = grad;
  double* gb = grad + s.weight_count();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* a = in + b * s.in;
    const double* d = dz + b * s.out;
    for (std::size_t o = 0; o < s.out; ++o) {
      const double g = d[o];
      if (g == 0.0) continue;
      double* gr = gw + o * s.in;
      for (std::size_t i = 0; i < s.in; ++i) gr[i] += g * a[i];
      gb[o] += g;
    }
    if (din != nullptr) {
      double* da = din + b * s.in;
      for (std::size_t o = 0; o < s.out; ++o) {
        const double g = d[o];
        if (g == 0.0) continue;
        const double* wr = w + o * s.in;
        for (std::size_t i = 0; i < s.in; ++i) da[i] += g * wr[i];
      }
    }
  }
}

inline void conv_forward(const LayerSpec& s, std::span<const double> p, const double* in, double* out,
                         std::size_t batch) {
  const std::size_t oh = s.out_h(), ow = s.out_w(), k = s.kernel;
  const std::size_t in_sz = s.input_size(), out_sz = s.output_size();
  const double* w = p.data();
  const double* bias = p.data() + s.weight_count();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* x = in + b * in_sz;
    double* z = out + b * out_sz;
    for (std::size_t oc = 0; oc < s.out_channels; ++oc) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double acc = bias[oc];
          for (std::size_t ic = 0; ic < s.in_channels; ++ic) {
            const double* wk = w + ((oc * s.in_channels + ic) * k) * k;
            const double* xc = x + ic * s.in_h * s.in_w;
            for (std::size_t ky = 0; ky < k; ++ky) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s.stride + ky) - static_cast<std::ptrdiff_t>(s.pad);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(s.in_h)) continue;
              for (std::size_t kx = 0; kx < k; ++kx) {
                const std::ptrdiff_t ix =
                    static_cast<std::ptrdiff_t>(ox * s.stride + kx) - static_cast<std::ptrdiff_t>(s.pad);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(s.in_w)) continue;
                acc += wk[ky * k + kx] * xc[static_cast<std::size_t>(iy) * s.in_w + static_cast<std::size_t>(ix)];
              }
            }
          }
          z[(oc * oh + oy) * ow + ox] = acc;
        }
      }
    }
  }
}

inline void conv_backward(const LayerSpec& s, std::span<const double> p, const double* in, const double* dz,
                          double* grad, double* din, std::size_t batch) {
  const std::size_t oh = s.out_h(), ow = s.out_w(), k = s.kernel;
  const std::size_t in_sz = s.input_size(), out_sz = s.output_size();
  const double* w = p.data();
  double* gw = grad;
  double* gb = grad + s.weight_count();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* x = in + b * in_sz;
    const double* d = dz + b * out_sz;
    double* dx = din != nullptr ? din + b * in_sz : nullptr;
    for (std::size_t oc = 0; oc < s.out_channels; ++oc) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const double g = d[(oc * oh + oy) * ow + ox];
          if (g == 0.0) continue;
          gb[oc] += g;
          for (std::size_t ic = 0; ic < s.in_channels; ++ic) {
            const std::size_t wbase = ((oc * s.in_channels + ic) * k) * k;
            const std::size_t xbase = ic * s.in_h * s.in_w;
            for (std::size_t ky = 0; ky < k; ++ky) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s.stride + ky) - static_cast<std::ptrdiff_t>(s.pad);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(s.in_h)) continue;
              for (std::size_t kx = 0; kx < k; ++kx) {
                const std::ptrdiff_t ix =
                    static_cast<std::ptrdiff_t>(ox * s.stride + kx) - static_cast<std::ptrdiff_t>(s.pad);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(s.in_w)) continue;
                const std::size_t xi = xbase + static_cast<std::size_t>(iy) * s.in_w + static_cast<std::size_t>(ix);
                gw[wbase + ky * k + kx] += g * x[xi];
                if (dx != nullptr) dx[xi] += g * w[wbase + ky * k + kx];
              }
            }
          }
        }
      }
    }
  }
}

inline void check_batch(const LayeredModel& model, const Dataset& data, std::span<const std::size_t> batch) {
  if (batch.empty()) throw SchemaError("empty batch");
  if (data.dim != model.input_size()) {
    throw SchemaError("input dimension " + std::to_string(data.dim) + " does not match model input " +
                      std::to_string(model.input_size()));
  }
  const auto classes = static_cast<int>(model.output_size());
  for (std::size_t i : batch) {
    if (i >= data.size()) throw SchemaError("batch index out of range");
    if (data.labels[i] < 0 || data.labels[i] >= classes) throw SchemaError("label outside model output range");
  }
}

/// ReLU on/off pattern per layer (empty for layers without activation).
using GatePattern = std::vector<std::vector<unsigned char>>;

/// Activations kept from a forward pass: acts[k] is the input of layer k,
/// pre[k] its pre-activation output, gate[k] which units passed the ReLU.
struct Tape {
  std::size_t batch = 0;
  std::vector<std::vector<double>> acts;
  std::vector<std::vector<double>> pre;
  GatePattern gate;
};

/// With `fixed` set, ReLU units follow that pattern instead of the sign of
/// their input, which keeps the network on one linear piece.
inline Tape run_forward(const LayeredModel& model, const Dataset& data, std::span<const std::size_t> batch,
                        const GatePattern* fixed = nullptr) {
  check_batch(model, data, batch);
  Tape t;
  t.batch = batch.size();
  const std::size_t L = model.layer_count();
  t.acts.resize(L);
  t.pre.resize(L);
  t.gate.resize(L);
  t.acts[0].resize(batch.size() * data.dim);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    auto r = data.row(batch[b]);
    std::copy(r.begin(), r.end(), t.acts[0].begin() + static_cast<std::ptrdiff_t>(b * data.dim));
  }
  for (std::size_t k = 0; k < L; ++k) {
    const Layer& layer = model.layer(k);
    t.pre[k].resize(t.batch * layer.spec.output_size());
    if (layer.spec.kind == LayerSpec::Kind::kDense) {
      dense_forward(layer.spec, layer.params, t.acts[k].data(), t.pre[k].data(), t.batch);
    } else {
      conv_forward(layer.spec, layer.params, t.acts[k].data(), t.pre[k].data(), t.batch);
    }
    if (k + 1 < L) {
      t.acts[k + 1] = t.pre[k];
      if (layer.spec.relu) {
        auto& g = t.gate[k];
        if (fixed != nullptr) {
          g = (*fixed)[k];
          if (g.size() != t.pre[k].size()) throw SchemaError("gate pattern does not match layer output");
        } else {
          g.resize(t.pre[k].size());
          for (std::size_t j = 0; j < g.size(); ++j) g[j] = t.pre[k][j] > 0.0 ? 1 : 0;
        }
        for (std::size_t j = 0; j < g.size(); ++j) {
          if (!g[j]) t.acts[k + 1][j] = 0.0;
        }
      }
    }
  }
  return t;
}

/// Mean softmax cross-entropy; fills d(loss)/d(logits) when `dlogits` is non-null.
inline double softmax_xent(std::span<const double> logits, std::size_t classes, const Dataset& data,
                           std::span<const std::size_t> batch, std::vector<double>* dlogits) {
  const std::size_t B = batch.size();
  if (dlogits != nullptr) dlogits->assign(B * classes, 0.0);
  double total = 0.0;
  std::vector<double> prob(classes);
  for (std::size_t b = 0; b < B; ++b) {
    const double* z = logits.data() + b * classes;
    const double zmax = *std::max_element(z, z + classes);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      prob[c] = std::exp(z[c] - zmax);
      sum += prob[c];
    }
    const auto y = static_cast<std::size_t>(data.labels[batch[b]]);
    total += std::log(sum) + zmax - z[y];
    if (dlogits != nullptr) {
      double* d = dlogits->data() + b * classes;
      for (std::size_t c = 0; c < classes; ++c) d[c] = prob[c] / sum / static_cast<double>(B);
      d[y] -= 1.0 / static_cast<double>(B);
    }
  }
  return total / static_cast<double>(B);
}

}  // namespace detail

inline ForwardResult forward(const LayeredModel& model, const Dataset& data, std::span<const std::size_t> batch) {
  detail::Tape t = detail::run_forward(model, data, batch);
  ForwardResult r;
  r.logits = std::move(t.pre.back());
  r.loss = detail::softmax_xent(r.logits, model.output_size(), data, batch, nullptr);
  if (!std::isfinite(r.loss)) {
    throw NumericError("non-finite loss on a batch of " + std::to_string(batch.size()) + " examples");
  }
  return r;
}

namespace detail {

inline GradientResult backward_tape(const LayeredModel& model, const Dataset& data, std::span<const std::size_t> batch,
                                    const Tape& t);

}  // namespace detail

/// Loss and per-layer gradients of the mean cross-entropy over `batch`.
inline GradientResult backward(const LayeredModel& model, const Dataset& data, std::span<const std::size_t> batch) {
  return detail::backward_tape(model, data, batch, detail::run_forward(model, data, batch));
}

inline GradientResult detail::backward_tape(const LayeredModel& model, const Dataset& data,
                                            std::span<const std::size_t> batch, const Tape& t) {
  const std::size_t L = model.layer_count();
  GradientResult r;
  std::vector<double> delta;
  r.loss = detail::softmax_xent(t.pre.back(), model.output_size(), data, batch, &delta);
  if (!std::isfinite(r.loss)) {
    throw NumericError("non-finite loss on a batch of " + std::to_string(batch.size()) + " examples");
  }
  r.grads = model.zeros_like();
  for (std::size_t k = L; k-- > 0;) {
    const Layer& layer = model.layer(k);
    // Last layer has no activation; earlier layers gate delta through ReLU.
    if (k + 1 < L && layer.spec.relu) {
      for (std::size_t j = 0; j < delta.size(); ++j) {
        if (!t.gate[k][j]) delta[j] = 0.0;
      }
    }
    std::vector<double> din;
    if (k > 0) din.assign(t.batch * layer.spec.input_size(), 0.0);
    double* din_ptr = k > 0 ? din.data() : nullptr;
    if (layer.spec.kind == LayerSpec::Kind::kDense) {
      detail::dense_backward(layer.spec, layer.params, t.acts[k].data(), delta.data(), r.grads[k].data(), din_ptr,
                             t.batch);
    } else {
      detail::conv_backward(layer.spec, layer.params, t.acts[k].data(), delta.data(), r.grads[k].data(), din_ptr,
                            t.batch);
    }
    delta = std::move(din);
  }
  return r;
}

struct LocalTrainResult {
  LayeredModel model;
  GradientStats stats;
};

/// Runs exactly hp.tau SGD steps on the shard, sampling each mini-batch
/// without replacement from `rng`.
inline LocalTrainResult local_train(const LayeredModel& start, const Dataset& data,
                                    std::span<const std::size_t> shard, const TrainingHyperparams& hp, Rng& rng) {
  if (hp.tau < 1) throw ConfigError("local_train: tau must be >= 1");
  if (shard.empty()) throw ConfigError("local_train: empty shard");
  const bool full = hp.batch_size == 0 || hp.batch_size >= shard.size();
  if (!full && shard.size() < hp.batch_size) throw ConfigError("local_train: shard smaller than batch size");

  LocalTrainResult out{start, GradientStats{}};
  IndexList pool(shard.begin(), shard.end());
  IndexList batch;
  for (int step = 0; step < hp.tau; ++step) {
    std::span<const std::size_t> view;
    if (full) {
      view = pool;
    } else {
      for (std::size_t j = 0; j < hp.batch_size; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, pool.size() - 1);
        std::swap(pool[j], pool[pick(rng)]);
      }
      batch.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(hp.batch_size));
      view = batch;
    }
    GradientResult g = backward(out.model, data, view);
    const double gn = sq_norm(g.grads);
    if (!std::isfinite(gn)) throw NumericError("non-finite gradient at local step " + std::to_string(step));
    out.stats.sq_norm_sum += gn;
    out.model.axpy(-hp.eta, g.grads);
  }
  out.stats.per_layer_update = out.model.params();
  for (std::size_t k = 0; k < start.layer_count(); ++k) {
    const auto& p0 = start.layer(k).params;
    auto& d = out.stats.per_layer_update[k];
    for (std::size_t j = 0; j < d.size(); ++j) {
      d[j] -= p0[j];
      if (!std::isfinite(d[j])) throw NumericError("non-finite update in layer " + start.layer(k).name());
    }
  }
  return out;
}

constexpr double kDefaultHvpScale = 1e-3;

/// Hessian-vector product restricted to the layers in `layer_mask`, by central
/// difference of gradients with step scale * (1 + ||w||_inf) / ||v||_inf.
/// Both shifted gradients reuse the ReLU pattern at `model`, so a step that
/// crosses a kink does not leak a gradient jump into the estimate.
/// `v` is the concatenation of the masked layers' directions in mask order;
/// the result has the same layout.
inline std::vector<double> hvp(const LayeredModel& model, const Dataset& data, std::span<const std::size_t> batch,
                               std::span<const double> v, std::span<const std::size_t> layer_mask,
                               double scale = kDefaultHvpScale) {
  std::size_t dim = 0;
  double w_inf = 0.0;
  for (std::size_t k : layer_mask) {
    if (k >= model.layer_count()) throw SchemaError("hvp: layer mask index out of range");
    dim += model.layer(k).params.size();
    for (double x : model.layer(k).params) w_inf = std::max(w_inf, std::abs(x));
  }
  if (v.size() != dim) throw SchemaError("hvp: direction length does not match masked parameter count");
  double v_inf = 0.0;
  for (double x : v) v_inf = std::max(v_inf, std::abs(x));
  if (v_inf == 0.0) throw ConfigError("hvp: zero direction");

  if (!(scale > 0.0)) throw ConfigError("hvp: step scale must be > 0");
  const double eps = scale * (1.0 + w_inf) / v_inf;
  const detail::GatePattern gates = detail::run_forward(model, data, batch).gate;
  auto shifted = [&](double sign) {
    LayeredModel m = model;
    std::size_t off = 0;
    for (std::size_t k : layer_mask) {
      auto& p = m.layer(k).params;
      for (std::size_t j = 0; j < p.size(); ++j) p[j] += sign * eps * v[off + j];
      off += p.size();
    }
    return detail::backward_tape(m, data, batch, detail::run_forward(m, data, batch, &gates)).grads;
  };
  const LayerArrays gp = shifted(+1.0);
  const LayerArrays gm = shifted(-1.0);

  std::vector<double> out;
  out.reserve(dim);
  for (std::size_t k : layer_mask) {
    for (std::size_t j = 0; j < gp[k].size(); ++j) out.push_back((gp[k][j] - gm[k][j]) / (2.0 * eps));
  }
  return out;
}

/// Fraction of argmax-correct predictions, evaluated in chunks.
inline double evaluate(const LayeredModel& model, const Dataset& data, std::span<const std::size_t> idx) {
  if (idx.empty()) throw ConfigError("evaluate: empty test set");
  constexpr std::size_t kChunk = 256;
  const std::size_t C = model.output_size();
  std::size_t correct = 0;
  for (std::size_t start = 0; start < idx.size(); start += kChunk) {
    const auto part = idx.subspan(start, std::min(kChunk, idx.size() - start));
    detail::Tape t = detail::run_forward(model, data, part);
    const auto& z = t.pre.back();
    for (std::size_t b = 0; b < part.size(); ++b) {
      const auto* row = z.data() + b * C;
      const auto best = static_cast<int>(std::max_element(row, row + C) - row);
      if (best == data.labels[part[b]]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(idx.size());
}

inline double evaluate(const LayeredModel& model, const Dataset& data) {
  const IndexList idx = all_indices(data);
  return evaluate(model, data, idx);
}

/// Mean cross-entropy over `idx`, evaluated in chunks.
inline double mean_loss(const LayeredModel& model, const Dataset& data, std::span<const std::size_t> idx) {
  if (idx.empty()) throw ConfigError("mean_loss: empty index set");
  constexpr std::size_t kChunk = 256;
  double total = 0.0;
  for (std::size_t start = 0; start < idx.size(); start += kChunk) {
    const auto part = idx.subspan(start, std::min(kChunk, idx.size() - start));
    total += forward(model, data, part).loss * static_cast<double>(part.size());
  }
  return total / static_cast<double>(idx.size());
}

}  // namespace fedlam

#endif  // FEDLAM_LEARNER_HPP
