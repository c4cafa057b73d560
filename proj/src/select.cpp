#include "algaeid/select.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include "algaeid/error.hpp"
#include "algaeid/evaluate.hpp"
#include "algaeid/rng.hpp"

namespace algaeid {

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
  double m = 0.0;
  for (double a : v) m += a;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double a : v) s += (a - m) * (a - m);
  return {m, v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0};
}

std::vector<std::vector<int>> complements(const std::vector<std::vector<int>>& folds, std::size_t n) {
  std::vector<std::vector<int>> train(folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<bool> held(n);
    for (int i : folds[f]) held[static_cast<std::size_t>(i)] = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (!held[i]) train[f].push_back(static_cast<int>(i));
    }
  }
  return train;
}

double fold_accuracy(const std::vector<LabelClass>& y, const std::vector<int>& test, const std::vector<LabelClass>& pred) {
  long ok = 0;
  for (std::size_t t = 0; t < test.size(); ++t) ok += y[static_cast<std::size_t>(test[t])] == pred[t] ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(test.size());
}

// Scores a kernel computed over all samples for one feature subset.
// Dual solutions per fold and class pair, reused as warm starts.
using WarmState = std::vector<std::vector<Eigen::VectorXd>>;

std::pair<double, double> kernel_score(const Eigen::MatrixXd& k, const std::vector<LabelClass>& y,
                                       const std::vector<std::vector<int>>& folds,
                                       const std::vector<std::vector<int>>& train, const SvmConfig& cfg,
                                       WarmState& warm) {
  std::vector<double> acc;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    acc.push_back(fold_accuracy(y, folds[f], svm_predict_from_kernel(k, y, train[f], folds[f], cfg, &warm[f])));
  }
  return mean_std(acc);
}

// Linear kernels add over features; rbf kernels are exp(-gamma * sum of squared differences).
struct KernelCache {
  const Eigen::MatrixXd& x;
  SvmConfig cfg;
  Eigen::MatrixXd base;  // sum over chosen features of x_f x_f' or (x_fi - x_fj)^2

  KernelCache(const Eigen::MatrixXd& data, const SvmConfig& c)
      : x(data), cfg(c), base(Eigen::MatrixXd::Zero(data.rows(), data.rows())) {}

  Eigen::MatrixXd contribution(int f) const {
    const Eigen::VectorXd col = x.col(f);
    if (cfg.kernel == KernelKind::Linear) return col * col.transpose();
    Eigen::MatrixXd d(col.size(), col.size());
    for (Eigen::Index j = 0; j < col.size(); ++j) d.col(j) = (col.array() - col(j)).square().matrix();
    return d;
  }

  Eigen::MatrixXd kernel_with(int f) const {
    Eigen::MatrixXd s = base + contribution(f);
    if (cfg.kernel == KernelKind::Rbf) s = (-cfg.gamma * s.array()).exp().matrix();
    return s;
  }

  void add(int f) { base += contribution(f); }
};

}  // namespace

std::pair<double, double> subset_score(const Eigen::MatrixXd& x, const std::vector<LabelClass>& y,
                                       const std::vector<int>& features, const std::vector<std::vector<int>>& folds,
                                       const ClassifierConfig& criterion) {
  const auto train_idx = complements(folds, y.size());
  const Eigen::MatrixXd xs = select_columns(x, features);
  std::vector<double> acc;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const Eigen::MatrixXd xtr = xs(train_idx[f], Eigen::all);
    std::vector<LabelClass> ytr;
    for (int i : train_idx[f]) ytr.push_back(y[static_cast<std::size_t>(i)]);
    const Model m = train(xtr, ytr, criterion);
    std::vector<LabelClass> pred;
    for (int i : folds[f]) pred.push_back(predict(m, xs.row(i).transpose()));
    acc.push_back(fold_accuracy(y, folds[f], pred));
  }
  return mean_std(acc);
}

SfsRanking sfs_rank(const Eigen::MatrixXd& x, const std::vector<LabelClass>& y, const SfsOptions& opt) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error(ErrorCode::LengthMismatch, "samples and labels differ");
  if (x.cols() < 1) throw Error(ErrorCode::InvalidArgument, "no features to rank");
  std::vector<std::vector<int>> folds;
  try {
    folds = stratified_folds(y, opt.folds, derive_seed(opt.seed, "sfs"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ClassTooSmall) throw Error(ErrorCode::DegenerateData, "a class has fewer samples than SFS folds");
    throw;
  }
  int present = 0;
  {
    std::array<bool, kNumClasses> seen{};
    for (auto c : y) seen[static_cast<std::size_t>(class_index(c))] = true;
    for (bool s : seen) present += s ? 1 : 0;
  }
  if (present < 2) throw Error(ErrorCode::SingleClassInput, "SFS needs at least two classes");

  const auto train_idx = complements(folds, y.size());
  const auto* svm = std::get_if<SvmConfig>(&opt.criterion);
  std::optional<KernelCache> cache;
  if (svm) cache.emplace(x, *svm);

  const int d = static_cast<int>(x.cols());
  // Candidates start from the duals of the current subset; the winner's become the next start.
  WarmState warm_chosen(folds.size());
  std::vector<WarmState> warm_cand(static_cast<std::size_t>(d));
  SfsRanking r;
  std::vector<bool> chosen(static_cast<std::size_t>(d));
  std::vector<int> current;
  for (int step = 0; step < d; ++step) {
    std::vector<double> means(static_cast<std::size_t>(d), std::numeric_limits<double>::quiet_NaN());
    std::vector<double> stds(static_cast<std::size_t>(d), 0.0);
    std::vector<std::string> errors(static_cast<std::size_t>(d));
    auto evaluate = [&](int f) {
      if (chosen[static_cast<std::size_t>(f)]) return;
      try {
        std::pair<double, double> s;
        if (svm) {
          WarmState& w = warm_cand[static_cast<std::size_t>(f)];
          w = warm_chosen;
          s = kernel_score(cache->kernel_with(f), y, folds, train_idx, *svm, w);
        } else {
          std::vector<int> feats = current;
          feats.push_back(f);
          s = subset_score(x, y, feats, folds, opt.criterion);
        }
        means[static_cast<std::size_t>(f)] = s.first;
        stds[static_cast<std::size_t>(f)] = s.second;
      } catch (const Error& e) {
        errors[static_cast<std::size_t>(f)] = e.what();
      }
    };
    if (opt.parallel) {
#pragma omp parallel for schedule(dynamic)
      for (int f = 0; f < d; ++f) evaluate(f);
    } else {
      for (int f = 0; f < d; ++f) evaluate(f);
    }
    for (const auto& e : errors) {
      if (!e.empty()) throw Error(ErrorCode::DegenerateData, "SFS candidate failed: " + e);
    }
    int best = -1;
    for (int f = 0; f < d; ++f) {
      if (chosen[static_cast<std::size_t>(f)]) continue;
      if (best < 0 || means[static_cast<std::size_t>(f)] > means[static_cast<std::size_t>(best)]) best = f;
    }
    chosen[static_cast<std::size_t>(best)] = true;
    current.push_back(best);
    if (cache) {
      cache->add(best);
      warm_chosen = std::move(warm_cand[static_cast<std::size_t>(best)]);
    }
    r.order.push_back(best);
    r.score_curve.push_back(means[static_cast<std::size_t>(best)]);
    r.std_curve.push_back(stds[static_cast<std::size_t>(best)]);
    r.step_scores.push_back(std::move(means));
  }
  return r;
}

LChoice choose_l(const SfsRanking& ranking) {
  LChoice c;
  for (std::size_t i = 0; i < ranking.score_curve.size(); ++i) {
    if (c.l == 0 || ranking.score_curve[i] > c.accuracy) {
      c.l = static_cast<int>(i) + 1;
      c.accuracy = ranking.score_curve[i];
      c.std = i < ranking.std_curve.size() ? ranking.std_curve[i] : 0.0;
    }
  }
  return c;
}

}  // namespace algaeid
