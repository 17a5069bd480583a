#ifndef FEDLAM_MODEL_HPP
#define FEDLAM_MODEL_HPP

#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fedlam/errors.hpp"
#include "fedlam/rng.hpp"

namespace fedlam {

/// One parameterised layer. Dense layers map `in` -> `out`; conv layers read a
/// (in_channels x in_h x in_w) image and use square kernels. Parameters are
/// stored weights first, then one bias per output unit / channel.
struct LayerSpec {
  enum class Kind { kDense, kConv2d };

  Kind kind = Kind::kDense;
  std::string name;
  bool relu = true;

  std::size_t in = 0;
  std::size_t out = 0;

  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t pad = 0;
  std::size_t in_h = 0;
  std::size_t in_w = 0;

  static LayerSpec dense(std::string name, std::size_t in, std::size_t out, bool relu) {
    LayerSpec s;
    s.kind = Kind::kDense;
    s.name = std::move(name);
    s.in = in;
    s.out = out;
    s.relu = relu;
    return s;
  }

  static LayerSpec conv(std::string name, std::size_t in_channels, std::size_t in_h, std::size_t in_w,
                        std::size_t out_channels, std::size_t kernel, std::size_t stride, std::size_t pad) {
    LayerSpec s;
    s.kind = Kind::kConv2d;
    s.name = std::move(name);
    s.in_channels = in_channels;
    s.in_h = in_h;
    s.in_w = in_w;
    s.out_channels = out_channels;
    s.kernel = kernel;
    s.stride = stride;
    s.pad = pad;
    s.relu = true;
    if (in_h + 2 * pad < kernel || in_w + 2 * pad < kernel || stride == 0) {
      throw SchemaError("conv layer " + s.name + ": kernel does not fit input");
    }
    return s;
  }

  std::size_t out_h() const { return (in_h + 2 * pad - kernel) / stride + 1; }
  std::size_t out_w() const { return (in_w + 2 * pad - kernel) / stride + 1; }

  std::size_t input_size() const { return kind == Kind::kDense ? in : in_channels * in_h * in_w; }
  std::size_t output_size() const { return kind == Kind::kDense ? out : out_channels * out_h() * out_w(); }

  std::size_t weight_count() const {
    return kind == Kind::kDense ? in * out : out_channels * in_channels * kernel * kernel;
  }
  std::size_t bias_count() const { return kind == Kind::kDense ? out : out_channels; }
  std::size_t param_count() const { return weight_count() + bias_count(); }

  std::vector<std::size_t> shape() const {
    if (kind == Kind::kDense) return {out, in};
    return {out_channels, in_channels, kernel, kernel};
  }
  std::size_t fan_in() const { return kind == Kind::kDense ? in : in_channels * kernel * kernel; }
  std::size_t fan_out() const { return kind == Kind::kDense ? out : out_channels * kernel * kernel; }
};

struct Layer {
  LayerSpec spec;
  std::vector<double> params;

  const std::string& name() const { return spec.name; }
  std::span<const double> weights() const { return {params.data(), spec.weight_count()}; }
  std::span<const double> biases() const { return {params.data() + spec.weight_count(), spec.bias_count()}; }
};

struct Schema {
  std::vector<std::size_t> layer_sizes;  // D_k
  std::size_t total = 0;                 // D

  std::size_t layer_count() const { return layer_sizes.size(); }
};

/// Per-layer arrays matching a model's schema (gradients, updates, directions).
using LayerArrays = std::vector<std::vector<double>>;

class LayeredModel {
 public:
  LayeredModel() = default;

  explicit LayeredModel(std::vector<LayerSpec> specs) {
    if (specs.empty()) throw SchemaError("model needs at least one layer");
    for (std::size_t k = 0; k < specs.size(); ++k) {
      if (specs[k].param_count() == 0) throw SchemaError("layer " + specs[k].name + " has no parameters");
      if (k > 0 && specs[k].input_size() != specs[k - 1].output_size()) {
        throw SchemaError("layer " + specs[k].name + " expects " + std::to_string(specs[k].input_size()) +
                          " inputs but previous layer produces " + std::to_string(specs[k - 1].output_size()));
      }
      layers_.push_back(Layer{specs[k], std::vector<double>(specs[k].param_count(), 0.0)});
    }
  }

  std::size_t layer_count() const { return layers_.size(); }
  const Layer& layer(std::size_t k) const { return layers_.at(k); }
  Layer& layer(std::size_t k) { return layers_.at(k); }
  const std::vector<Layer>& layers() const { return layers_; }

  std::size_t input_size() const { return layers_.front().spec.input_size(); }
  std::size_t output_size() const { return layers_.back().spec.output_size(); }

  Schema schema() const {
    Schema s;
    for (const auto& l : layers_) {
      s.layer_sizes.push_back(l.params.size());
      s.total += l.params.size();
    }
    return s;
  }

  LayerArrays zeros_like() const {
    LayerArrays out;
    out.reserve(layers_.size());
    for (const auto& l : layers_) out.emplace_back(l.params.size(), 0.0);
    return out;
  }

  LayerArrays params() const {
    LayerArrays out;
    out.reserve(layers_.size());
    for (const auto& l : layers_) out.push_back(l.params);
    return out;
  }

  /// this += scale * delta
  void axpy(double scale, const LayerArrays& delta) {
    check_shape(delta);
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      auto& p = layers_[k].params;
      for (std::size_t j = 0; j < p.size(); ++j) p[j] += scale * delta[k][j];
    }
  }

  void check_shape(const LayerArrays& arrays) const {
    if (arrays.size() != layers_.size()) throw SchemaError("per-layer array count does not match layer count");
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      if (arrays[k].size() != layers_[k].params.size()) {
        throw SchemaError("per-layer array for " + layers_[k].name() + " has wrong length");
      }
    }
  }

  bool operator==(const LayeredModel& other) const {
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      if (layers_[k].params != other.layers_[k].params) return false;
    }
    return true;
  }

 private:
  std::vector<Layer> layers_;
};

/// Glorot-uniform weights, zero biases.
inline void init_glorot(LayeredModel& model, Rng& rng) {
  for (std::size_t k = 0; k < model.layer_count(); ++k) {
    Layer& l = model.layer(k);
    const double limit = std::sqrt(6.0 / static_cast<double>(l.spec.fan_in() + l.spec.fan_out()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    const std::size_t w = l.spec.weight_count();
    for (std::size_t j = 0; j < w; ++j) l.params[j] = dist(rng);
    for (std::size_t j = w; j < l.params.size(); ++j) l.params[j] = 0.0;
  }
}

// Architecture zoo ----------------------------------------------------------

/// Fully connected ReLU network; `widths` includes input and output sizes.
inline std::vector<LayerSpec> mlp_specs(const std::vector<std::size_t>& widths) {
  if (widths.size() < 2) throw ConfigError("mlp needs at least input and output widths");
  std::vector<LayerSpec> specs;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const bool last = k + 2 == widths.size();
    specs.push_back(LayerSpec::dense("fc" + std::to_string(k + 1), widths[k], widths[k + 1], !last));
  }
  return specs;
}

/// Two strided convolutions then two dense layers (CV1, CV2, FC1, FC2).
inline std::vector<LayerSpec> cnn_small_specs(std::size_t side = 28, std::size_t classes = 10) {
  std::vector<LayerSpec> s;
  s.push_back(LayerSpec::conv("cv1", 1, side, side, 8, 5, 2, 0));
  s.push_back(LayerSpec::conv("cv2", 8, s[0].out_h(), s[0].out_w(), 16, 3, 2, 0));
  s.push_back(LayerSpec::dense("fc1", s[1].output_size(), 64, true));
  s.push_back(LayerSpec::dense("fc2", 64, classes, false));
  return s;
}

/// Six 3x3 convolutions (every second one strided) then two dense layers.
inline std::vector<LayerSpec> cnn_plain8_specs(std::size_t side = 28, std::size_t classes = 10) {
  std::vector<LayerSpec> s;
  const std::size_t chans[6] = {8, 8, 16, 16, 32, 32};
  std::size_t c = 1, h = side, w = side;
  for (std::size_t i = 0; i < 6; ++i) {
    const std::size_t stride = (i % 2 == 1) ? 2 : 1;
    s.push_back(LayerSpec::conv("cv" + std::to_string(i + 1), c, h, w, chans[i], 3, stride, 1));
    c = chans[i];
    h = s.back().out_h();
    w = s.back().out_w();
  }
  s.push_back(LayerSpec::dense("fc1", s.back().output_size(), 64, true));
  s.push_back(LayerSpec::dense("fc2", 64, classes, false));
  return s;
}

/// Looks up an architecture by its config name.
inline std::vector<LayerSpec> architecture(const std::string& name, std::size_t input_dim, std::size_t classes) {
  if (name == "mlp-small") return mlp_specs({input_dim, 64, classes});
  if (name == "lenet300") return mlp_specs({input_dim, 300, 100, classes});
  if (name == "cnn-small" || name == "cnn-plain8") {
    const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(input_dim))));
    if (side * side != input_dim) throw ConfigError("model " + name + " needs a square single-channel input");
    return name == "cnn-small" ? cnn_small_specs(side, classes) : cnn_plain8_specs(side, classes);
  }
  throw ConfigError("unknown model '" + name + "' (expected mlp-small, lenet300, cnn-small, cnn-plain8)");
}

inline LayeredModel make_model(const std::vector<LayerSpec>& specs, std::uint64_t seed) {
  LayeredModel m(specs);
  Rng rng = make_rng(seed, Stream::kInit);
  init_glorot(m, rng);
  return m;
}

// Flat helpers over per-layer arrays ----------------------------------------

inline double sq_norm(const LayerArrays& a) {
  double s = 0.0;
  for (const auto& v : a)
    for (double x : v) s += x * x;
  return s;
}

inline double sq_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace fedlam

#endif  // FEDLAM_MODEL_HPP
