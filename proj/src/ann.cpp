#include <cmath>
#include <numeric>

#include "algaeid/classifier.hpp"
#include "algaeid/error.hpp"
#include "algaeid/rng.hpp"

namespace algaeid {

namespace {

using MapM = Eigen::Map<Eigen::MatrixXd>;
using MapV = Eigen::Map<Eigen::VectorXd>;
using CMapM = Eigen::Map<const Eigen::MatrixXd>;
using CMapV = Eigen::Map<const Eigen::VectorXd>;

struct Offsets {
  Eigen::Index w1, b1, w2, b2, w3, b3, end;
};

Offsets offsets(int in, int tau) {
  Offsets o{};
  o.w1 = 0;
  o.b1 = o.w1 + static_cast<Eigen::Index>(tau) * in;
  o.w2 = o.b1 + tau;
  o.b2 = o.w2 + static_cast<Eigen::Index>(tau) * tau;
  o.w3 = o.b2 + tau;
  o.b3 = o.w3 + static_cast<Eigen::Index>(kNumClasses) * tau;
  o.end = o.b3 + kNumClasses;
  return o;
}

struct Forward {
  Eigen::MatrixXd h1, h2, p;  // rows = samples
};

Forward forward(const MlpModel& m, const Eigen::MatrixXd& x) {
  const Offsets o = offsets(m.in, m.tau);
  const double* t = m.theta.data();
  CMapM w1(t + o.w1, m.tau, m.in);
  CMapV b1(t + o.b1, m.tau);
  CMapM w2(t + o.w2, m.tau, m.tau);
  CMapV b2(t + o.b2, m.tau);
  CMapM w3(t + o.w3, kNumClasses, m.tau);
  CMapV b3(t + o.b3, kNumClasses);
  Forward f;
  f.h1 = ((x * w1.transpose()).rowwise() + b1.transpose()).array().tanh();
  f.h2 = ((f.h1 * w2.transpose()).rowwise() + b2.transpose()).array().tanh();
  Eigen::MatrixXd z = (f.h2 * w3.transpose()).rowwise() + b3.transpose();
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double mx = z.row(r).maxCoeff();
    z.row(r) = (z.row(r).array() - mx).exp();
    z.row(r) /= z.row(r).sum();
  }
  f.p = std::move(z);
  return f;
}

}  // namespace

Eigen::Index MlpModel::parameter_count(int in, int tau) { return offsets(in, tau).end; }

Eigen::VectorXd MlpModel::probabilities(const Eigen::VectorXd& x) const {
  if (x.size() != in) throw Error(ErrorCode::DimensionMismatch, "feature vector length differs from model");
  return forward(*this, x.transpose()).p.row(0).transpose();
}

MlpModel mlp_init(int in, int tau, std::uint64_t seed) {
  if (in < 1 || tau < 1) throw Error(ErrorCode::InvalidArgument, "network sizes must be positive");
  MlpModel m;
  m.in = in;
  m.tau = tau;
  const Offsets o = offsets(in, tau);
  m.theta = Eigen::VectorXd::Zero(o.end);
  Rng rng(derive_seed(seed, "ann-init"));
  auto fill = [&](Eigen::Index begin, Eigen::Index count, int fan_in) {
    const double r = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < count; ++i) m.theta(begin + i) = rng.uniform(-r, r);
  };
  fill(o.w1, o.b1 - o.w1, in);
  fill(o.w2, o.b2 - o.w2, tau);
  fill(o.w3, o.b3 - o.w3, tau);
  return m;
}

double mlp_loss_grad(const MlpModel& m, const Eigen::MatrixXd& x, const std::vector<int>& class_idx,
                     Eigen::VectorXd* grad) {
  const Eigen::Index n = x.rows();
  if (n == 0 || static_cast<std::size_t>(n) != class_idx.size()) throw Error(ErrorCode::LengthMismatch, "batch and labels differ");
  const Forward f = forward(m, x);
  double loss = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) loss -= std::log(std::max(f.p(r, class_idx[static_cast<std::size_t>(r)]), 1e-300));
  loss /= static_cast<double>(n);
  if (!grad) return loss;

  const Offsets o = offsets(m.in, m.tau);
  grad->setZero(o.end);
  double* g = grad->data();
  const double* t = m.theta.data();
  CMapM w2(t + o.w2, m.tau, m.tau);
  CMapM w3(t + o.w3, kNumClasses, m.tau);

  Eigen::MatrixXd dz = f.p;
  for (Eigen::Index r = 0; r < n; ++r) dz(r, class_idx[static_cast<std::size_t>(r)]) -= 1.0;
  dz /= static_cast<double>(n);
  MapM(g + o.w3, kNumClasses, m.tau) = dz.transpose() * f.h2;
  MapV(g + o.b3, kNumClasses) = dz.colwise().sum().transpose();
  const Eigen::MatrixXd da2 = ((dz * w3).array() * (1.0 - f.h2.array().square())).matrix();
  MapM(g + o.w2, m.tau, m.tau) = da2.transpose() * f.h1;
  MapV(g + o.b2, m.tau) = da2.colwise().sum().transpose();
  const Eigen::MatrixXd da1 = ((da2 * w2).array() * (1.0 - f.h1.array().square())).matrix();
  MapM(g + o.w1, m.tau, m.in) = da1.transpose() * x;
  MapV(g + o.b1, m.tau) = da1.colwise().sum().transpose();
  return loss;
}

MlpModel ann_train(const Eigen::MatrixXd& x, const std::vector<LabelClass>& y, const AnnConfig& cfg) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error(ErrorCode::LengthMismatch, "samples and labels differ");
  if (cfg.tau < 1 || cfg.epochs < 0 || cfg.batch < 1 || !(cfg.learning_rate > 0.0) || cfg.momentum < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "invalid ANN configuration");
  }
  if (!x.allFinite()) throw Error(ErrorCode::NonFiniteFeature, "training data contains NaN or inf");
  std::vector<int> idx(y.size());
  std::array<bool, kNumClasses> seen{};
  for (std::size_t i = 0; i < y.size(); ++i) {
    idx[i] = class_index(y[i]);
    seen[static_cast<std::size_t>(idx[i])] = true;
  }
  if (std::count(seen.begin(), seen.end(), true) < 2) throw Error(ErrorCode::SingleClassInput, "need at least two classes");

  MlpModel m = mlp_init(static_cast<int>(x.cols()), cfg.tau, cfg.seed);
  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(m.theta.size());
  Eigen::VectorXd grad(m.theta.size());
  Rng rng(derive_seed(cfg.seed, "ann-batches"));
  std::vector<int> order(y.size());
  std::iota(order.begin(), order.end(), 0);
  const auto n = static_cast<Eigen::Index>(y.size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<int>(order));
    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch) {
      const Eigen::Index len = std::min<Eigen::Index>(cfg.batch, n - start);
      Eigen::MatrixXd xb(len, x.cols());
      std::vector<int> yb(static_cast<std::size_t>(len));
      for (Eigen::Index r = 0; r < len; ++r) {
        const int s = order[static_cast<std::size_t>(start + r)];
        xb.row(r) = x.row(s);
        yb[static_cast<std::size_t>(r)] = idx[static_cast<std::size_t>(s)];
      }
      epoch_loss += mlp_loss_grad(m, xb, yb, &grad) * static_cast<double>(len);
      velocity = cfg.momentum * velocity - cfg.learning_rate * grad;
      m.theta += velocity;
    }
    m.loss_trace.push_back(epoch_loss / static_cast<double>(n));
  }
  return m;
}

LabelClass ann_predict(const MlpModel& m, const Eigen::VectorXd& x) {
  const Eigen::VectorXd p = m.probabilities(x);
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < p.size(); ++c) {
    if (p(c) > p(best)) best = c;
  }
  return class_from_index(static_cast<int>(best));
}

}  // namespace algaeid
