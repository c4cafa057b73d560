#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "algaeid/classifier.hpp"
#include "algaeid/error.hpp"
#include "support.hpp"

using namespace algaeid;

namespace {

SvmConfig linear(double c) {
  SvmConfig cfg;
  cfg.kernel = KernelKind::Linear;
  cfg.C = c;
  return cfg;
}

// Four Gaussian clusters in 2D, one per class.
void clusters(int per_class, double spread, std::uint64_t seed, Eigen::MatrixXd& x, std::vector<LabelClass>& y) {
  const double centers[4][2] = {{-3, -3}, {3, -3}, {-3, 3}, {3, 3}};
  Rng rng(seed);
  x.resize(4 * per_class, 2);
  y.clear();
  for (int i = 0; i < 4 * per_class; ++i) {
    const int c = i % 4;
    x(i, 0) = centers[c][0] + spread * rng.normal();
    x(i, 1) = centers[c][1] + spread * rng.normal();
    y.push_back(class_from_index(c));
  }
}

}  // namespace

TEST(Svm, TwoPointMaxMarginBoundary) {
  Eigen::MatrixXd x(2, 2);
  x << 0, 0, 2, 2;
  const std::vector<LabelClass> y{LabelClass::One, LabelClass::Two};
  const SvmModel m = svm_train(x, y, linear(100));
  ASSERT_EQ(m.machines.size(), 1u);
  const BinarySvm& b = m.machines[0];
  EXPECT_EQ(b.positive, LabelClass::One);
  // f(x) = 1 - (x + y) / 2 vanishes on x + y = 2.
  for (const auto& p : {Eigen::Vector2d(1, 1), Eigen::Vector2d(2, 0), Eigen::Vector2d(-1, 3), Eigen::Vector2d(5, -3)}) {
    EXPECT_NEAR(svm_decision(b, m.config, p), 0.0, 1e-3);
  }
  EXPECT_NEAR(svm_decision(b, m.config, Eigen::Vector2d(0, 0)), 1.0, 1e-3);
  EXPECT_NEAR(svm_decision(b, m.config, Eigen::Vector2d(2, 2)), -1.0, 1e-3);
  EXPECT_EQ(svm_predict(m, Eigen::Vector2d(0, 0)), LabelClass::One);
  EXPECT_EQ(svm_predict(m, Eigen::Vector2d(2, 2)), LabelClass::Two);
  // Exactly zero at the midpoint: the smaller label wins.
  EXPECT_EQ(svm_decision(b, m.config, Eigen::Vector2d(1, 1)), 0.0);
  EXPECT_EQ(svm_predict(m, Eigen::Vector2d(1, 1)), LabelClass::One);
}

TEST(Svm, VoteTieGoesToSmallerLabel) {
  // Hand-built cyclic preferences: 1 beats 4, 4 beats 2, 2 beats 1.
  SvmModel m;
  m.config = linear(1);
  m.classes = {LabelClass::One, LabelClass::Two, LabelClass::Four};
  m.dim = 2;
  auto machine = [](LabelClass a, LabelClass b, double bias) {
    BinarySvm s;
    s.positive = a;
    s.negative = b;
    s.support = Eigen::MatrixXd(0, 2);
    s.coef = Eigen::VectorXd(0);
    s.bias = bias;
    return s;
  };
  m.machines = {machine(LabelClass::One, LabelClass::Two, -1), machine(LabelClass::One, LabelClass::Four, 1),
                machine(LabelClass::Two, LabelClass::Four, -1)};
  EXPECT_EQ(svm_predict(m, Eigen::Vector2d(0, 0)), LabelClass::One);
  m.machines[1].bias = -1;  // now 4 has two votes
  EXPECT_EQ(svm_predict(m, Eigen::Vector2d(0, 0)), LabelClass::Four);
}

TEST(Svm, XorWithRbf) {
  Eigen::MatrixXd x(4, 2);
  x << 1, 1, -1, -1, 1, -1, -1, 1;
  const std::vector<LabelClass> y{LabelClass::One, LabelClass::One, LabelClass::Two, LabelClass::Two};
  SvmConfig cfg;
  cfg.kernel = KernelKind::Rbf;
  cfg.gamma = 1.0;
  cfg.C = 100.0;
  const SvmModel m = svm_train(x, y, cfg);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(svm_predict(m, x.row(i).transpose()), y[static_cast<std::size_t>(i)]);
}

TEST(Svm, DualityGapBoxAndEquality) {
  for (int p = 0; p < 20; ++p) {
    Rng rng(derive_seed(77, "svm", static_cast<std::uint64_t>(p)));
    const int n = 20 + static_cast<int>(rng.below(30));
    const int d = 2 + static_cast<int>(rng.below(4));
    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      y(i) = i % 2 ? 1.0 : -1.0;
      for (int j = 0; j < d; ++j) x(i, j) = rng.normal() + (j == 0 ? 0.8 * y(i) : 0.0);
    }
    const double c = std::pow(10.0, rng.uniform(-1.0, 1.0));
    const SmoResult r = smo_solve(kernel_matrix(x, x, linear(c)), y, c, 1e-3, 10'000'000);
    ASSERT_TRUE(r.converged);
    for (int i = 0; i < n; ++i) {
      EXPECT_GE(r.alpha(i), 0.0);
      EXPECT_LE(r.alpha(i), c);
    }
    EXPECT_NEAR(r.alpha.dot(y), 0.0, 1e-8);
    const auto obj = testing_support::svm_objectives(x, y, r.alpha, r.bias, c);
    EXPECT_GE(obj.primal, obj.dual - 1e-9);
    EXPECT_LE(obj.primal - obj.dual, 1e-3 * (1.0 + std::abs(obj.dual))) << "problem " << p;
  }
}

TEST(Svm, WarmStartReachesSameSolution) {
  Rng rng(5);
  const int n = 40;
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    y(i) = i < n / 2 ? 1.0 : -1.0;
    for (int j = 0; j < 3; ++j) x(i, j) = rng.normal() + 0.5 * y(i);
  }
  const Eigen::MatrixXd k = kernel_matrix(x, x, linear(1));
  const SmoResult cold = smo_solve(k, y, 1.0, 1e-3, 10'000'000);
  Eigen::VectorXd start = Eigen::VectorXd::Zero(n);
  start(0) = 0.5;
  start(n - 1) = 0.5;
  const SmoResult warm = smo_solve(k, y, 1.0, 1e-3, 10'000'000, &start);
  ASSERT_TRUE(warm.converged);
  const auto a = testing_support::svm_objectives(x, y, cold.alpha, cold.bias, 1.0);
  const auto b = testing_support::svm_objectives(x, y, warm.alpha, warm.bias, 1.0);
  EXPECT_NEAR(a.dual, b.dual, 1e-3 * (1.0 + std::abs(a.dual)));
}

TEST(Svm, TrainingOrderDoesNotMatter) {
  Eigen::MatrixXd x;
  std::vector<LabelClass> y;
  clusters(6, 0.8, 3, x, y);
  SvmConfig cfg;
  const SvmModel a = svm_train(x, y, cfg);
  std::vector<int> perm(static_cast<std::size_t>(x.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::rotate(perm.begin(), perm.begin() + 5, perm.end());
  Eigen::MatrixXd xs(x.rows(), x.cols());
  std::vector<LabelClass> ys;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    xs.row(static_cast<Eigen::Index>(i)) = x.row(perm[i]);
    ys.push_back(y[static_cast<std::size_t>(perm[i])]);
  }
  const SvmModel b = svm_train(xs, ys, cfg);
  for (double px = -6; px <= 6; px += 0.5) {
    for (double py = -6; py <= 6; py += 0.5) {
      EXPECT_EQ(svm_predict(a, Eigen::Vector2d(px, py)), svm_predict(b, Eigen::Vector2d(px, py)));
    }
  }
}

TEST(Svm, KernelPathMatchesModelPath) {
  Eigen::MatrixXd x;
  std::vector<LabelClass> y;
  clusters(10, 1.6, 8, x, y);
  SvmConfig cfg;
  cfg.C = 3;
  cfg.gamma = 0.4;
  std::vector<int> train, test;
  for (int i = 0; i < x.rows(); ++i) (i % 3 ? train : test).push_back(i);
  const Eigen::MatrixXd k = kernel_matrix(x, x, cfg);
  const auto fast = svm_predict_from_kernel(k, y, train, test, cfg);
  std::vector<LabelClass> ytr;
  for (int i : train) ytr.push_back(y[static_cast<std::size_t>(i)]);
  const SvmModel m = svm_train(select_columns(x.transpose(), train).transpose(), ytr, cfg);
  for (std::size_t t = 0; t < test.size(); ++t) EXPECT_EQ(fast[t], svm_predict(m, x.row(test[t]).transpose()));
}

TEST(Svm, Errors) {
  Eigen::MatrixXd x(3, 2);
  x << 0, 0, 1, 1, 2, 2;
  try {
    svm_train(x, {LabelClass::One, LabelClass::One, LabelClass::One}, SvmConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingleClassInput);
  }
  x(1, 1) = std::nan("");
  try {
    svm_train(x, {LabelClass::One, LabelClass::Two, LabelClass::One}, SvmConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteFeature);
  }
  x(1, 1) = 1;
  const SvmModel m = svm_train(x, {LabelClass::One, LabelClass::Two, LabelClass::One}, SvmConfig{});
  try {
    svm_predict(m, Eigen::Vector3d(0, 0, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(Ann, GradientMatchesFiniteDifferences) {
  Eigen::MatrixXd x(3, 4);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(derive_seed(seed, "batch"));
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
    const std::vector<int> cls{0, static_cast<int>(rng.below(4)), 3};
    for (int tau : {5, 20}) {
      MlpModel m = mlp_init(4, tau, seed);
      Eigen::VectorXd grad;
      mlp_loss_grad(m, x, cls, &grad);
      ASSERT_EQ(grad.size(), MlpModel::parameter_count(4, tau));
      double worst = 0.0;
      const double h = 1e-5;
      for (Eigen::Index p = 0; p < m.theta.size(); ++p) {
        const double keep = m.theta(p);
        m.theta(p) = keep + h;
        const double up = mlp_loss_grad(m, x, cls, nullptr);
        m.theta(p) = keep - h;
        const double down = mlp_loss_grad(m, x, cls, nullptr);
        m.theta(p) = keep;
        const double fd = (up - down) / (2 * h);
        const double scale = std::max({std::abs(fd), std::abs(grad(p)), 1e-6});
        worst = std::max(worst, std::abs(fd - grad(p)) / scale);
      }
      EXPECT_LE(worst, 1e-4) << "seed " << seed << " tau " << tau;
    }
  }
}

TEST(Ann, FourClustersDeterministicAndDescending) {
  Eigen::MatrixXd x;
  std::vector<LabelClass> y;
  clusters(30, 0.7, 11, x, y);
  AnnConfig cfg;
  cfg.tau = 5;
  cfg.seed = 4;
  const MlpModel m = ann_train(x, y, cfg);
  int correct = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) correct += ann_predict(m, x.row(i).transpose()) == y[static_cast<std::size_t>(i)];
  EXPECT_GE(correct, static_cast<int>(std::ceil(0.99 * static_cast<double>(x.rows()))));

  const MlpModel again = ann_train(x, y, cfg);
  ASSERT_EQ(m.theta.size(), again.theta.size());
  for (Eigen::Index p = 0; p < m.theta.size(); ++p) ASSERT_EQ(m.theta(p), again.theta(p));

  ASSERT_EQ(static_cast<int>(m.loss_trace.size()), cfg.epochs);
  for (std::size_t e = 11; e < m.loss_trace.size(); ++e) EXPECT_LE(m.loss_trace[e], m.loss_trace[e - 1]) << "epoch " << e;

  const Eigen::VectorXd prob = m.probabilities(x.row(0).transpose());
  EXPECT_NEAR(prob.sum(), 1.0, 1e-12);
  EXPECT_THROW(ann_predict(m, Eigen::Vector3d(0, 0, 0)), Error);
}

TEST(Ann, InitRange) {
  const MlpModel m = mlp_init(9, 7, 3);
  EXPECT_EQ(m.theta.size(), MlpModel::parameter_count(9, 7));
  EXPECT_EQ(MlpModel::parameter_count(9, 7), 9 * 7 + 7 + 7 * 7 + 7 + 7 * 4 + 4);
  // First block: W1 with fan-in 9.
  for (Eigen::Index p = 0; p < 63; ++p) EXPECT_LE(std::abs(m.theta(p)), 1.0 / 3.0);
}

TEST(Grid, SizesAndOrder) {
  SvmConfig rbf;
  const auto g = grid_configs(rbf);
  ASSERT_EQ(g.size(), 25u);
  EXPECT_EQ(std::get<SvmConfig>(g[0]).C, 1e-2);
  EXPECT_EQ(std::get<SvmConfig>(g[0]).gamma, 1e-2);
  EXPECT_EQ(std::get<SvmConfig>(g[1]).gamma, 1e-1);
  EXPECT_EQ(std::get<SvmConfig>(g[24]).C, 1e2);
  EXPECT_EQ(grid_configs(linear(1)).size(), 5u);
  const auto a = grid_configs(AnnConfig{});
  ASSERT_EQ(a.size(), 12u);
  EXPECT_EQ(std::get<AnnConfig>(a[0]).tau, 5);
  EXPECT_EQ(std::get<AnnConfig>(a[11]).tau, 60);
}

TEST(Grid, AllTiedPicksSmallest) {
  // Perfectly separated clusters: every grid point scores 100%.
  Eigen::MatrixXd x;
  std::vector<LabelClass> y;
  clusters(5, 0.01, 2, x, y);
  const GridResult r = grid_search(x, y, linear(1), 5, 9);
  ASSERT_EQ(r.points.size(), 5u);
  for (const auto& p : r.points) EXPECT_EQ(p.mean, 1.0);
  EXPECT_EQ(r.best_index, 0u);
  EXPECT_EQ(std::get<SvmConfig>(r.best).C, 1e-2);
}

TEST(Classifier, TrainFullAndPredict) {
  Eigen::MatrixXd x2;
  std::vector<LabelClass> y;
  clusters(8, 0.5, 6, x2, y);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(x2.rows(), static_cast<Eigen::Index>(kFeatureDim));
  x.col(10) = x2.col(0) * 100 + Eigen::VectorXd::Constant(x2.rows(), 7);
  x.col(200) = x2.col(1);
  const TrainedModel m = train_full(x, y, {200, 10}, SvmConfig{});
  EXPECT_EQ(m.standardizer.dim(), 2);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    FeatureVector raw{};
    for (std::size_t j = 0; j < kFeatureDim; ++j) raw[j] = x(i, static_cast<Eigen::Index>(j));
    EXPECT_EQ(m.predict(raw), y[static_cast<std::size_t>(i)]);
  }
  EXPECT_FALSE(describe(SvmConfig{}).empty());
}
