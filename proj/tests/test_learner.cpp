#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fedlam/dataset.hpp"
#include "fedlam/learner.hpp"
#include "oracles/rop_hessian.hpp"

using namespace fedlam;

namespace {

Dataset tiny_data(std::size_t dims, int classes, std::size_t n, std::uint64_t seed, double margin = 3.0) {
  SyntheticSpec s;
  s.classes = classes;
  s.dims = dims;
  s.n = n;
  s.seed = seed;
  s.margin = margin;
  return gen_synthetic(s);
}

std::vector<LayerSpec> tiny_cnn() {
  std::vector<LayerSpec> s;
  s.push_back(LayerSpec::conv("cv1", 1, 6, 6, 2, 3, 1, 1));
  s.push_back(LayerSpec::conv("cv2", 2, 6, 6, 3, 3, 2, 0));
  s.push_back(LayerSpec::dense("fc1", s[1].output_size(), 3, false));
  return s;
}

double loss_at(const LayeredModel& m, const Dataset& d, const IndexList& b) { return forward(m, d, b).loss; }

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST(Backward, MatchesLossFiniteDifferences) {
  for (int arch = 0; arch < 2; ++arch) {
    const Dataset d = arch == 0 ? tiny_data(5, 3, 12, 1) : tiny_data(36, 3, 8, 2);
    const auto specs = arch == 0 ? mlp_specs({5, 7, 3}) : tiny_cnn();
    LayeredModel m = make_model(specs, 3);
    const IndexList b = all_indices(d);
    const auto g = backward(m, d, b);
    EXPECT_NEAR(g.loss, loss_at(m, d, b), 1e-14);
    const double h = 1e-6;
    for (std::size_t k = 0; k < m.layer_count(); ++k) {
      for (std::size_t j = 0; j < m.layer(k).params.size(); ++j) {
        const double w0 = m.layer(k).params[j];
        m.layer(k).params[j] = w0 + h;
        const double up = loss_at(m, d, b);
        m.layer(k).params[j] = w0 - h;
        const double dn = loss_at(m, d, b);
        m.layer(k).params[j] = w0;
        EXPECT_NEAR(g.grads[k][j], (up - dn) / (2 * h), 1e-6) << "arch " << arch << " layer " << k << " j " << j;
      }
    }
  }
}

TEST(Forward, RejectsMismatchedInput) {
  const Dataset d = tiny_data(5, 3, 6, 1);
  const LayeredModel m = make_model(mlp_specs({4, 3}), 1);
  EXPECT_THROW(forward(m, d, all_indices(d)), SchemaError);
  const LayeredModel ok = make_model(mlp_specs({5, 3}), 1);
  EXPECT_THROW(forward(ok, d, IndexList{}), SchemaError);
  EXPECT_THROW(forward(ok, d, IndexList{99}), SchemaError);
}

TEST(LocalTrain, OneFullBatchStepIsPlainGradientDescent) {
  const Dataset d = tiny_data(5, 3, 20, 4);
  const LayeredModel m = make_model(mlp_specs({5, 6, 3}), 5);
  TrainingHyperparams hp;
  hp.tau = 1;
  hp.batch_size = 0;
  hp.eta = 0.05;
  Rng rng(1);
  const IndexList shard = all_indices(d);
  const auto out = local_train(m, d, shard, hp, rng);
  const auto g = backward(m, d, shard);
  EXPECT_NEAR(out.stats.sq_norm_sum, sq_norm(g.grads), 1e-14);
  for (std::size_t k = 0; k < m.layer_count(); ++k) {
    for (std::size_t j = 0; j < g.grads[k].size(); ++j) {
      EXPECT_NEAR(out.stats.per_layer_update[k][j], -hp.eta * g.grads[k][j], 1e-15);
    }
  }
}

TEST(LocalTrain, DeterministicAndTauSteps) {
  const Dataset d = tiny_data(5, 3, 40, 4);
  const LayeredModel m = make_model(mlp_specs({5, 6, 3}), 5);
  TrainingHyperparams hp;
  hp.tau = 4;
  hp.batch_size = 8;
  Rng a(9), b(9);
  const IndexList shard = all_indices(d);
  const auto ra = local_train(m, d, shard, hp, a);
  const auto rb = local_train(m, d, shard, hp, b);
  EXPECT_TRUE(ra.model == rb.model);
  EXPECT_EQ(ra.stats.sq_norm_sum, rb.stats.sq_norm_sum);
  hp.tau = 0;
  EXPECT_THROW(local_train(m, d, shard, hp, a), ConfigError);
}

TEST(LocalTrain, LinearModelSeparatesWideMarginData) {
  const Dataset d = tiny_data(20, 4, 200, 7, 12.0);
  const LayeredModel m = make_model(mlp_specs({20, 4}), 1);
  TrainingHyperparams hp;
  hp.tau = 50;
  hp.batch_size = 0;
  hp.eta = 0.1;
  Rng rng(1);
  const auto out = local_train(m, d, all_indices(d), hp, rng);
  EXPECT_DOUBLE_EQ(evaluate(out.model, d), 1.0);
}

TEST(Hvp, MatchesRopOracleOnMlp) {
  const Dataset d = tiny_data(6, 3, 16, 11);
  const LayeredModel m = make_model(mlp_specs({6, 8, 5, 3}), 12);
  const fedlam_test::DenseNet net(m);
  const IndexList b = all_indices(d);
  Rng rng(13);
  for (std::size_t k = 0; k < m.layer_count(); ++k) {
    const std::size_t mask[1] = {k};
    for (int t = 0; t < 3; ++t) {
      const auto v = random_vec(m.layer(k).params.size(), rng);
      const auto got = hvp(m, d, b, v, mask);
      const auto want = fedlam_test::rop_hvp(net, d, b, k, v);
      const double scale = std::sqrt(sq_norm(want));
      for (std::size_t j = 0; j < v.size(); ++j) EXPECT_NEAR(got[j], want[j], 1e-5 * scale) << "layer " << k;
    }
  }
}

TEST(Hvp, LinearAndSymmetricOnCnn) {
  const Dataset d = tiny_data(36, 3, 10, 21);
  const LayeredModel m = make_model(tiny_cnn(), 22);
  const IndexList b = all_indices(d);
  Rng rng(23);
  for (std::size_t k = 0; k < m.layer_count(); ++k) {
    const std::size_t mask[1] = {k};
    const std::size_t n = m.layer(k).params.size();
    const auto u = random_vec(n, rng), v = random_vec(n, rng);
    const auto hu = hvp(m, d, b, u, mask), hv = hvp(m, d, b, v, mask);
    std::vector<double> comb(n);
    for (std::size_t j = 0; j < n; ++j) comb[j] = 2.0 * u[j] - 0.5 * v[j];
    const auto hc = hvp(m, d, b, comb, mask);
    const double scale = std::sqrt(sq_norm(hu)) + std::sqrt(sq_norm(hv));
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(hc[j], 2.0 * hu[j] - 0.5 * hv[j], 1e-6 * scale);
    EXPECT_NEAR(dot(u, hv), dot(v, hu), 1e-6 * (std::abs(dot(u, hv)) + 1e-9));
  }
}

TEST(Hvp, AgreesWithLossSecondDifferenceOnCnn) {
  const Dataset d = tiny_data(36, 3, 10, 31);
  LayeredModel m = make_model(tiny_cnn(), 32);
  const IndexList b = all_indices(d);
  Rng rng(33);
  for (std::size_t k = 0; k < m.layer_count(); ++k) {
    const std::size_t mask[1] = {k};
    const std::size_t n = m.layer(k).params.size();
    const auto u = random_vec(n, rng), v = random_vec(n, rng);
    const double uhv = dot(u, hvp(m, d, b, v, mask));
    // Small enough that the probe rarely crosses a ReLU kink.
    const double h = 1e-5;
    auto f = [&](double su, double sv) {
      LayeredModel p = m;
      for (std::size_t j = 0; j < n; ++j) p.layer(k).params[j] += h * (su * u[j] + sv * v[j]);
      return loss_at(p, d, b);
    };
    const double fd = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4 * h * h);
    EXPECT_NEAR(uhv, fd, 1e-3 * std::max(1.0, std::abs(fd))) << "layer " << k;
  }
}

TEST(Hvp, ScaleInsensitiveAcrossDecades) {
  const Dataset d = tiny_data(6, 3, 16, 41);
  const LayeredModel m = make_model(mlp_specs({6, 8, 3}), 42);
  const IndexList b = all_indices(d);
  Rng rng(43);
  const std::size_t mask[1] = {0};
  const auto v = random_vec(m.layer(0).params.size(), rng);
  const auto ref = hvp(m, d, b, v, mask, 1e-3);
  // Central-difference truncation error shrinks with the square of the scale.
  const std::pair<double, double> cases[] = {{1e-2, 1e-3}, {1e-4, 1e-5}, {1e-5, 1e-5}};
  for (const auto& [s, tol] : cases) {
    const auto got = hvp(m, d, b, v, mask, s);
    for (std::size_t j = 0; j < v.size(); ++j) EXPECT_NEAR(got[j], ref[j], tol * std::sqrt(sq_norm(ref))) << s;
  }
}

TEST(Hvp, Errors) {
  const Dataset d = tiny_data(6, 3, 8, 51);
  const LayeredModel m = make_model(mlp_specs({6, 4, 3}), 52);
  const IndexList b = all_indices(d);
  const std::size_t mask[1] = {1};
  EXPECT_THROW(hvp(m, d, b, std::vector<double>(m.layer(1).params.size(), 0.0), mask), ConfigError);
  EXPECT_THROW(hvp(m, d, b, std::vector<double>(3, 1.0), mask), SchemaError);
  const std::size_t bad[1] = {7};
  EXPECT_THROW(hvp(m, d, b, std::vector<double>(3, 1.0), bad), SchemaError);
}

TEST(Evaluate, RangeAndErrors) {
  const Dataset d = tiny_data(6, 3, 30, 61);
  const LayeredModel m = make_model(mlp_specs({6, 4, 3}), 62);
  const double acc = evaluate(m, d);
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 1.0);
  EXPECT_THROW(evaluate(m, d, IndexList{}), ConfigError);
}
