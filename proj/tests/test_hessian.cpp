#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "fedlam/hessian.hpp"
#include "oracles/rop_hessian.hpp"

using namespace fedlam;

namespace {

HvpOracle matrix_oracle(const Eigen::MatrixXd& A) {
  return [A](std::span<const double> v) {
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    const Eigen::VectorXd y = A * x;
    return std::vector<double>(y.data(), y.data() + y.size());
  };
}

Eigen::MatrixXd random_orthogonal(int n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) M(i, j) = g(rng);
  }
  return Eigen::HouseholderQR<Eigen::MatrixXd>(M).householderQ();
}

}  // namespace

TEST(TopEigenvalue, Diagonal2x2) {
  Eigen::MatrixXd A(2, 2);
  A << 3, 0, 0, 1;
  Rng rng(1);
  const auto e = top_eigenvalue(matrix_oracle(A), 2, 1e-6, 100, rng);
  EXPECT_TRUE(e.converged);
  EXPECT_NEAR(e.lambda, 3.0, 1e-5);
}

TEST(TopEigenvalue, RandomSymmetric50) {
  Rng gen(2);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 5; ++t) {
    Eigen::MatrixXd M(50, 50);
    for (int i = 0; i < 50; ++i) {
      for (int j = 0; j < 50; ++j) M(i, j) = g(gen);
    }
    const Eigen::MatrixXd A = 0.5 * (M + M.transpose());
    Rng rng = make_rng(3, Stream::kPower, {static_cast<std::uint64_t>(t)});
    const auto e = top_eigenvalue(matrix_oracle(A), 50, 1e-10, 5000, rng);
    const double want = fedlam_test::dominant_eigenvalue(A);
    EXPECT_NEAR(e.lambda, want, 0.01 * std::abs(want)) << "instance " << t;
  }
}

TEST(TopEigenvalue, PlantedSpectraConvergeWithinBudget) {
  Rng gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    const int n = 20 + t;
    const double top = (u(gen) < 0.3 ? -1.0 : 1.0) * (1.0 + 10.0 * u(gen));
    Eigen::VectorXd ev(n);
    ev(0) = top;
    const double gap = 0.5 + 0.4 * u(gen);  // |lambda_2| / |lambda_1| <= 0.9
    for (int i = 1; i < n; ++i) ev(i) = (2.0 * u(gen) - 1.0) * gap * std::abs(top);
    ev(1) = gap * std::abs(top);
    const Eigen::MatrixXd Q = random_orthogonal(n, gen);
    const Eigen::MatrixXd A = Q * ev.asDiagonal() * Q.transpose();
    Rng rng = make_rng(5, Stream::kPower, {static_cast<std::uint64_t>(t)});
    const auto e = top_eigenvalue(matrix_oracle(A), static_cast<std::size_t>(n), 1e-3, 100, rng);
    EXPECT_TRUE(e.converged) << "instance " << t;
    EXPECT_NEAR(e.lambda, top, 0.02 * std::abs(top)) << "instance " << t;
  }
}

TEST(TopEigenvalue, ReportsNonConvergence) {
  Eigen::MatrixXd A(2, 2);
  A << 1, 0, 0, 0.999;  // ratio 0.999: the estimate creeps up far slower than the tolerance
  Rng rng(6);
  const auto e = top_eigenvalue(matrix_oracle(A), 2, 1e-12, 5, rng);
  EXPECT_EQ(e.iters, 5);
  EXPECT_FALSE(e.converged);
}

TEST(TopEigenvalue, Errors) {
  Rng rng(7);
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_THROW(top_eigenvalue(matrix_oracle(A), 0, 1e-3, 10, rng), ConfigError);
  EXPECT_THROW(top_eigenvalue(matrix_oracle(A), 3, 0.0, 10, rng), ConfigError);
  HvpOracle nan_oracle = [](std::span<const double> v) { return std::vector<double>(v.size(), NAN); };
  EXPECT_THROW(top_eigenvalue(nan_oracle, 3, 1e-3, 10, rng), NumericError);
  HvpOracle short_oracle = [](std::span<const double>) { return std::vector<double>(2, 1.0); };
  EXPECT_THROW(top_eigenvalue(short_oracle, 3, 1e-3, 10, rng), SchemaError);
}

TEST(LayerEigenvalues, MatchExplicitlyAssembledBlocks) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticSpec s;
    s.classes = 3;
    s.dims = 6;
    s.n = 24;
    s.seed = seed;
    s.margin = 2.0;
    const Dataset d = gen_synthetic(s);
    const LayeredModel m = make_model(mlp_specs({6, 12, 6, 3}), seed);  // 84 + 78 + 21 params
    const IndexList batch = all_indices(d);
    PowerIterationConfig pic;
    pic.tol = 1e-7;
    pic.max_iters = 1000;
    const auto est = layer_eigenvalues(m, d, batch, pic, seed);
    const fedlam_test::DenseNet net(m);
    for (std::size_t k = 0; k < m.layer_count(); ++k) {
      const double want = fedlam_test::dominant_eigenvalue(fedlam_test::dense_block(net, d, batch, k));
      EXPECT_NEAR(est[k].lambda, want, 0.02 * std::abs(want)) << "seed " << seed << " layer " << k;
    }
  }
}

TEST(ImportanceWeights, Examples) {
  auto w = importance_weights(std::vector<double>{4, 4}).weights;
  EXPECT_DOUBLE_EQ(w[0], 0.5);
  EXPECT_DOUBLE_EQ(w[1], 0.5);
  w = importance_weights(std::vector<double>{3, 1, 0}).weights;
  EXPECT_DOUBLE_EQ(w[0], 0.75);
  EXPECT_DOUBLE_EQ(w[1], 0.25);
  EXPECT_DOUBLE_EQ(w[2], 0.0);
  w = importance_weights(std::vector<double>{-1, 2}).weights;
  EXPECT_DOUBLE_EQ(w[0], 0.0);
  EXPECT_DOUBLE_EQ(w[1], 1.0);
  w = importance_weights(std::vector<double>{-1, -2, 0}).weights;
  for (double x : w) EXPECT_DOUBLE_EQ(x, 1.0 / 3.0);
  EXPECT_THROW(importance_weights(std::vector<double>{}), ConfigError);
}

TEST(ImportanceWeights, ScaleEquivariantAndNormalised) {
  Rng rng(8);
  std::uniform_real_distribution<double> u(-0.2, 5.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> e(1 + t % 9);
    for (double& x : e) x = u(rng);
    const auto a = importance_weights(e);
    double sum = 0;
    for (double x : a.weights) {
      EXPECT_GE(x, 0.0);
      sum += x;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    for (double& x : e) x *= 7.5;
    const auto b = importance_weights(e);
    for (std::size_t k = 0; k < e.size(); ++k) EXPECT_NEAR(a.weights[k], b.weights[k], 1e-15);
  }
}

TEST(GroupLayers, TwentyLayersFiveGroups) {
  std::vector<double> e(20);
  for (std::size_t k = 0; k < 20; ++k) e[k] = static_cast<double>((k * 7) % 20);
  const auto g = group_layers(importance_weights(e), 5);
  EXPECT_EQ(g.groups, 5u);
  std::vector<int> counts(5, 0);
  for (auto x : g.group_of) ++counts[x];
  for (int c : counts) EXPECT_EQ(c, 4);
  // Group 0 holds the four largest weights.
  for (std::size_t k = 0; k < 20; ++k) {
    if (e[k] >= 16) {
      EXPECT_EQ(g.group_of[k], 0u);
    }
  }
}

TEST(GroupLayers, DegenerateCountsAndRemainder) {
  const auto imp = importance_weights(std::vector<double>{1, 5, 3, 2, 4});
  const auto id = group_layers(imp, 5);
  EXPECT_EQ(id.group_of, (std::vector<std::size_t>{4, 0, 2, 3, 1}));
  const auto one = group_layers(imp, 1);
  EXPECT_EQ(one.group_of, (std::vector<std::size_t>(5, 0)));
  // 5 layers into 2 groups: the extra layer joins the important group.
  const auto two = group_layers(imp, 2);
  EXPECT_EQ(two.group_of, (std::vector<std::size_t>{1, 0, 0, 1, 0}));
  EXPECT_THROW(group_layers(imp, 0), ConfigError);
  EXPECT_THROW(group_layers(imp, 6), ConfigError);
}

TEST(GroupLayers, TiesBrokenByIndexAndStable) {
  const auto imp = importance_weights(std::vector<double>{1, 1, 1, 1});
  const auto a = group_layers(imp, 2);
  EXPECT_EQ(a.group_of, (std::vector<std::size_t>{0, 0, 1, 1}));
  EXPECT_EQ(group_layers(imp, 2).group_of, a.group_of);
}
