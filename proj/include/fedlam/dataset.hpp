#ifndef FEDLAM_DATASET_HPP
#define FEDLAM_DATASET_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fedlam/errors.hpp"
#include "fedlam/rng.hpp"

namespace fedlam {

/// Row-major labelled examples. `features` holds size() * dim values.
struct Dataset {
  std::size_t dim = 0;
  int classes = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * dim, dim}; }
};

/// Indices into a dataset; shards and mini-batches are views, never copies.
using IndexList = std::vector<std::size_t>;

inline IndexList all_indices(const Dataset& data) {
  IndexList idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

/// Random permutation split into `n_clients` shards whose sizes differ by at most one.
inline std::vector<IndexList> split_iid(const Dataset& data, std::size_t n_clients, std::uint64_t seed) {
  if (n_clients == 0) throw ConfigError("split_iid: n_clients must be >= 1");
  if (data.size() < n_clients) {
    throw ConfigError("split_iid: dataset of " + std::to_string(data.size()) + " examples cannot feed " +
                      std::to_string(n_clients) + " clients (empty shard)");
  }
  IndexList perm = all_indices(data);
  Rng rng = make_rng(seed, Stream::kSplit);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<IndexList> shards(n_clients);
  const std::size_t base = data.size() / n_clients;
  const std::size_t rem = data.size() % n_clients;
  std::size_t pos = 0;
  for (std::size_t c = 0; c < n_clients; ++c) {
    const std::size_t len = base + (c < rem ? 1 : 0);
    shards[c].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                     perm.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return shards;
}

struct SyntheticSpec {
  int classes = 10;
  std::size_t dims = 784;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  /// Distance of each class centre from the origin, in units of the per-dimension noise.
  double margin = 6.0;
  double noise = 1.0;
};

/// Gaussian class clusters. Centres are random directions scaled to `margin`;
/// every coordinate carries i.i.d. N(0, noise^2). Labels cycle through the
/// classes before shuffling, so class counts differ by at most one.
inline Dataset gen_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 1 || spec.dims < 1) throw ConfigError("gen_synthetic: classes and dims must be >= 1");
  if (spec.n < static_cast<std::size_t>(spec.classes)) throw ConfigError("gen_synthetic: n must be >= classes");
  Rng rng = make_rng(spec.seed, Stream::kData);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<double> centres(static_cast<std::size_t>(spec.classes) * spec.dims);
  for (int c = 0; c < spec.classes; ++c) {
    double norm = 0.0;
    double* ctr = centres.data() + static_cast<std::size_t>(c) * spec.dims;
    for (std::size_t d = 0; d < spec.dims; ++d) {
      ctr[d] = gauss(rng);
      norm += ctr[d] * ctr[d];
    }
    const double scale = spec.margin * spec.noise / std::sqrt(norm);
    for (std::size_t d = 0; d < spec.dims; ++d) ctr[d] *= scale;
  }

  std::vector<int> labels(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) labels[i] = static_cast<int>(i % static_cast<std::size_t>(spec.classes));
  std::shuffle(labels.begin(), labels.end(), rng);

  Dataset out;
  out.dim = spec.dims;
  out.classes = spec.classes;
  out.labels = std::move(labels);
  out.features.resize(spec.n * spec.dims);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double* ctr = centres.data() + static_cast<std::size_t>(out.labels[i]) * spec.dims;
    double* x = out.features.data() + i * spec.dims;
    for (std::size_t d = 0; d < spec.dims; ++d) x[d] = ctr[d] + spec.noise * gauss(rng);
  }
  return out;
}

/// Copies the selected rows into a new dataset.
inline Dataset subset(const Dataset& data, std::span<const std::size_t> idx) {
  Dataset out;
  out.dim = data.dim;
  out.classes = data.classes;
  out.labels.reserve(idx.size());
  out.features.reserve(idx.size() * data.dim);
  for (std::size_t i : idx) {
    out.labels.push_back(data.labels[i]);
    auto r = data.row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
  }
  return out;
}

}  // namespace fedlam

#endif  // FEDLAM_DATASET_HPP
