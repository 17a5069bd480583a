// Exact Hessian-vector products for dense ReLU networks via Pearlmutter's
// R-operator, written against raw arrays so it shares no code with the
// library's backprop. Used only as a test oracle.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "fedlam/dataset.hpp"
#include "fedlam/model.hpp"

namespace fedlam_test {

struct DenseNet {
  struct L {
    std::size_t in, out;
    bool relu;
    Eigen::MatrixXd W;
    Eigen::VectorXd b;
  };
  std::vector<L> layers;

  explicit DenseNet(const fedlam::LayeredModel& m) {
    for (std::size_t k = 0; k < m.layer_count(); ++k) {
      const auto& ly = m.layer(k);
      L l{ly.spec.in, ly.spec.out, ly.spec.relu, Eigen::MatrixXd(ly.spec.out, ly.spec.in),
          Eigen::VectorXd(ly.spec.out)};
      for (std::size_t o = 0; o < l.out; ++o) {
        for (std::size_t i = 0; i < l.in; ++i) l.W(o, i) = ly.params[o * l.in + i];
        l.b(o) = ly.params[l.out * l.in + o];
      }
      layers.push_back(std::move(l));
    }
  }
};

/// H v for the mean cross-entropy; `v` lives in layer `k`'s flat layout and so
/// does the result.
inline std::vector<double> rop_hvp(const DenseNet& net, const fedlam::Dataset& data,
                                   const std::vector<std::size_t>& batch, std::size_t k,
                                   const std::vector<double>& v) {
  const std::size_t n_layers = net.layers.size();
  const auto& lk = net.layers[k];
  Eigen::MatrixXd dW(lk.out, lk.in);
  Eigen::VectorXd db(lk.out);
  for (std::size_t o = 0; o < lk.out; ++o) {
    for (std::size_t i = 0; i < lk.in; ++i) dW(o, i) = v[o * lk.in + i];
    db(o) = v[lk.out * lk.in + o];
  }
  Eigen::MatrixXd hW = Eigen::MatrixXd::Zero(lk.out, lk.in);
  Eigen::VectorXd hb = Eigen::VectorXd::Zero(lk.out);
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  for (std::size_t idx : batch) {
    std::vector<Eigen::VectorXd> a(n_layers), ra(n_layers), z(n_layers), rz(n_layers), gate(n_layers);
    a[0] = Eigen::Map<const Eigen::VectorXd>(data.row(idx).data(), static_cast<Eigen::Index>(data.dim));
    ra[0] = Eigen::VectorXd::Zero(a[0].size());
    for (std::size_t j = 0; j < n_layers; ++j) {
      const auto& l = net.layers[j];
      z[j] = l.W * a[j] + l.b;
      rz[j] = l.W * ra[j];
      if (j == k) rz[j] += dW * a[j] + db;
      if (j + 1 < n_layers) {
        gate[j] = Eigen::VectorXd::Ones(z[j].size());
        if (l.relu) {
          for (Eigen::Index u = 0; u < z[j].size(); ++u) gate[j](u) = z[j](u) > 0.0 ? 1.0 : 0.0;
        }
        a[j + 1] = gate[j].cwiseProduct(z[j]);
        ra[j + 1] = gate[j].cwiseProduct(rz[j]);
      }
    }
    const Eigen::VectorXd& logits = z.back();
    Eigen::VectorXd p = (logits.array() - logits.maxCoeff()).exp();
    p /= p.sum();
    Eigen::VectorXd delta = p;
    delta(data.labels[idx]) -= 1.0;
    Eigen::VectorXd rdelta = p.cwiseProduct(rz.back()) - p * p.dot(rz.back());
    for (std::size_t j = n_layers; j-- > 0;) {
      const auto& l = net.layers[j];
      if (j == k) {
        hW += inv_b * (rdelta * a[j].transpose() + delta * ra[j].transpose());
        hb += inv_b * rdelta;
        break;
      }
      Eigen::VectorXd back = l.W.transpose() * delta;
      Eigen::VectorXd rback = l.W.transpose() * rdelta;
      delta = gate[j - 1].cwiseProduct(back);
      rdelta = gate[j - 1].cwiseProduct(rback);
    }
  }
  std::vector<double> out(v.size());
  for (std::size_t o = 0; o < lk.out; ++o) {
    for (std::size_t i = 0; i < lk.in; ++i) out[o * lk.in + i] = hW(o, i);
    out[lk.out * lk.in + o] = hb(o);
  }
  return out;
}

/// Dense Hessian block of layer k, assembled column by column.
inline Eigen::MatrixXd dense_block(const DenseNet& net, const fedlam::Dataset& data,
                                   const std::vector<std::size_t>& batch, std::size_t k) {
  const std::size_t d = net.layers[k].out * net.layers[k].in + net.layers[k].out;
  Eigen::MatrixXd H(d, d);
  std::vector<double> e(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    e[c] = 1.0;
    const auto col = rop_hvp(net, data, batch, k, e);
    for (std::size_t r = 0; r < d; ++r) H(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = col[r];
    e[c] = 0.0;
  }
  return H;
}

/// Largest-magnitude eigenvalue of a symmetric matrix (sign kept).
inline double dominant_eigenvalue(const Eigen::MatrixXd& H) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()));
  const auto& ev = es.eigenvalues();
  double best = ev(0);
  for (Eigen::Index i = 1; i < ev.size(); ++i) {
    if (std::abs(ev(i)) > std::abs(best)) best = ev(i);
  }
  return best;
}

}  // namespace fedlam_test
