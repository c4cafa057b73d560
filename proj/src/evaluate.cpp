#include "algaeid/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "algaeid/error.hpp"
#include "algaeid/rng.hpp"

namespace algaeid {

HooverCounts& HooverCounts::operator+=(const HooverCounts& o) {
  correct += o.correct;
  over += o.over;
  under += o.under;
  missed += o.missed;
  noise += o.noise;
  gt_regions += o.gt_regions;
  ms_regions += o.ms_regions;
  return *this;
}

HooverCounts hoover_counts(const LabelMap& gt, const LabelMap& ms, double tolerance, std::vector<HooverClass>* gt_class,
                           std::vector<HooverClass>* ms_class) {
  if (gt.width() != ms.width() || gt.height() != ms.height()) {
    throw Error(ErrorCode::DimensionMismatch, "ground truth and segmentation differ in size");
  }
  if (!(tolerance > 0.5) || tolerance > 1.0) throw Error(ErrorCode::InvalidArgument, "tolerance must be in (0.5, 1]");

  int n_gt = 0, n_ms = 0;
  for (auto v : gt.pixels()) {
    if (v < 0) throw Error(ErrorCode::InvalidArgument, "negative region label");
    n_gt = std::max(n_gt, v);
  }
  for (auto v : ms.pixels()) {
    if (v < 0) throw Error(ErrorCode::InvalidArgument, "negative region label");
    n_ms = std::max(n_ms, v);
  }
  std::vector<long> size_gt(static_cast<std::size_t>(n_gt) + 1), size_ms(static_cast<std::size_t>(n_ms) + 1);
  std::map<std::pair<int, int>, long> overlap;
  for (std::size_t i = 0; i < gt.pixels().size(); ++i) {
    const int a = gt.pixels()[i];
    const int b = ms.pixels()[i];
    ++size_gt[static_cast<std::size_t>(a)];
    ++size_ms[static_cast<std::size_t>(b)];
    if (a > 0 && b > 0) ++overlap[{a, b}];
  }
  // Labels that never occur are not regions.
  std::vector<bool> gt_live(size_gt.size()), ms_live(size_ms.size());
  HooverCounts c;
  for (int m = 1; m <= n_gt; ++m) {
    gt_live[static_cast<std::size_t>(m)] = size_gt[static_cast<std::size_t>(m)] > 0;
    c.gt_regions += gt_live[static_cast<std::size_t>(m)] ? 1 : 0;
  }
  for (int n = 1; n <= n_ms; ++n) {
    ms_live[static_cast<std::size_t>(n)] = size_ms[static_cast<std::size_t>(n)] > 0;
    c.ms_regions += ms_live[static_cast<std::size_t>(n)] ? 1 : 0;
  }

  std::vector<int> gt_state(size_gt.size(), -1), ms_state(size_ms.size(), -1);
  const double t = tolerance;
  auto gsz = [&](int m) { return static_cast<double>(size_gt[static_cast<std::size_t>(m)]); };
  auto msz = [&](int n) { return static_cast<double>(size_ms[static_cast<std::size_t>(n)]); };

  for (const auto& [key, o] : overlap) {
    const auto [m, n] = key;
    if (o >= t * gsz(m) && o >= t * msz(n)) {
      gt_state[static_cast<std::size_t>(m)] = static_cast<int>(HooverClass::Correct);
      ms_state[static_cast<std::size_t>(n)] = static_cast<int>(HooverClass::Correct);
    }
  }
  // Over-segmentation: one GT region covered by several MS regions, each mostly inside it.
  for (int m = 1; m <= n_gt; ++m) {
    if (!gt_live[static_cast<std::size_t>(m)] || gt_state[static_cast<std::size_t>(m)] >= 0) continue;
    std::vector<int> parts;
    double covered = 0.0;
    for (auto it = overlap.lower_bound({m, 0}); it != overlap.end() && it->first.first == m; ++it) {
      const int n = it->first.second;
      if (ms_state[static_cast<std::size_t>(n)] >= 0) continue;
      if (it->second >= t * msz(n)) {
        parts.push_back(n);
        covered += static_cast<double>(it->second);
      }
    }
    if (parts.size() >= 2 && covered >= t * gsz(m)) {
      gt_state[static_cast<std::size_t>(m)] = static_cast<int>(HooverClass::Over);
      for (int n : parts) ms_state[static_cast<std::size_t>(n)] = static_cast<int>(HooverClass::Over);
    }
  }
  // Under-segmentation: one MS region covering several GT regions.
  std::map<int, std::vector<std::pair<int, long>>> by_ms;
  for (const auto& [key, o] : overlap) by_ms[key.second].emplace_back(key.first, o);
  for (int n = 1; n <= n_ms; ++n) {
    if (!ms_live[static_cast<std::size_t>(n)] || ms_state[static_cast<std::size_t>(n)] >= 0) continue;
    std::vector<int> parts;
    double covered = 0.0;
    for (const auto& [m, o] : by_ms[n]) {
      if (gt_state[static_cast<std::size_t>(m)] >= 0) continue;
      if (static_cast<double>(o) >= t * gsz(m)) {
        parts.push_back(m);
        covered += static_cast<double>(o);
      }
    }
    if (parts.size() >= 2 && covered >= t * msz(n)) {
      ms_state[static_cast<std::size_t>(n)] = static_cast<int>(HooverClass::Under);
      for (int m : parts) gt_state[static_cast<std::size_t>(m)] = static_cast<int>(HooverClass::Under);
    }
  }

  if (gt_class) gt_class->assign(size_gt.size(), HooverClass::Missed);
  if (ms_class) ms_class->assign(size_ms.size(), HooverClass::Noise);
  for (int m = 1; m <= n_gt; ++m) {
    if (!gt_live[static_cast<std::size_t>(m)]) continue;
    const int s = gt_state[static_cast<std::size_t>(m)];
    const HooverClass h = s < 0 ? HooverClass::Missed : static_cast<HooverClass>(s);
    if (gt_class) (*gt_class)[static_cast<std::size_t>(m)] = h;
    switch (h) {
      case HooverClass::Correct: ++c.correct; break;
      case HooverClass::Over: ++c.over; break;
      case HooverClass::Under: ++c.under; break;
      default: ++c.missed; break;
    }
  }
  for (int n = 1; n <= n_ms; ++n) {
    if (!ms_live[static_cast<std::size_t>(n)]) continue;
    const int s = ms_state[static_cast<std::size_t>(n)];
    if (ms_class) (*ms_class)[static_cast<std::size_t>(n)] = s < 0 ? HooverClass::Noise : static_cast<HooverClass>(s);
    if (s < 0) ++c.noise;
  }
  return c;
}

std::vector<double> default_tolerances() {
  std::vector<double> t;
  for (int i = 51; i <= 100; ++i) t.push_back(i / 100.0);
  return t;
}

HooverCurves curves_from_counts(const std::vector<double>& tolerances, const std::vector<HooverCounts>& counts) {
  HooverCurves h;
  h.tolerances = tolerances;
  h.counts = counts;
  auto frac = [](int a, int b) { return b > 0 ? static_cast<double>(a) / b : 0.0; };
  for (const auto& c : counts) {
    h.correct.push_back(frac(c.correct, c.gt_regions));
    h.over_segmented.push_back(frac(c.over, c.gt_regions));
    h.under_segmented.push_back(frac(c.under, c.gt_regions));
    h.missed.push_back(frac(c.missed, c.gt_regions));
    h.noise.push_back(frac(c.noise, c.ms_regions));
  }
  return h;
}

HooverCurves hoover_curves(const LabelMap& gt, const LabelMap& ms, const std::vector<double>& tolerances) {
  std::vector<HooverCounts> counts;
  for (double t : tolerances) counts.push_back(hoover_counts(gt, ms, t));
  return curves_from_counts(tolerances, counts);
}

LabelMap label_components(const BinaryMask& mask) {
  LabelMap labels(mask.width(), mask.height(), 0);
  int next = 0;
  std::vector<Point> stack;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y) || labels(x, y) != 0) continue;
      labels(x, y) = ++next;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const Point p = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int qx = p.x + dx, qy = p.y + dy;
            if (mask.contains(qx, qy) && mask(qx, qy) && labels(qx, qy) == 0) {
              labels(qx, qy) = next;
              stack.push_back({qx, qy});
            }
          }
        }
      }
    }
  }
  return labels;
}

Prf pixel_prf(const BinaryMask& gt, const BinaryMask& ms) {
  if (gt.width() != ms.width() || gt.height() != ms.height()) {
    throw Error(ErrorCode::DimensionMismatch, "masks differ in size");
  }
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < gt.pixels().size(); ++i) {
    const bool g = gt.pixels()[i] != 0;
    const bool m = ms.pixels()[i] != 0;
    tp += (g && m) ? 1 : 0;
    fp += (!g && m) ? 1 : 0;
    fn += (g && !m) ? 1 : 0;
  }
  Prf r;
  if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  else r.precision_undefined = true;
  if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  else r.recall_undefined = true;
  if (r.precision + r.recall > 0.0) r.f_measure = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  else r.f_undefined = true;
  return r;
}

Confusion confusion_matrix(const std::vector<LabelClass>& truth, const std::vector<LabelClass>& predicted) {
  if (truth.size() != predicted.size()) throw Error(ErrorCode::LengthMismatch, "truth and prediction lengths differ");
  Confusion c{};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++c[static_cast<std::size_t>(class_index(truth[i]))][static_cast<std::size_t>(class_index(predicted[i]))];
  }
  return c;
}

std::vector<std::vector<int>> stratified_folds(const std::vector<LabelClass>& y, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "k must be at least 2");
  std::array<std::vector<int>, kNumClasses> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[static_cast<std::size_t>(class_index(y[i]))].push_back(static_cast<int>(i));
  for (const auto& members : by_class) {
    if (!members.empty() && members.size() < static_cast<std::size_t>(k)) {
      throw Error(ErrorCode::ClassTooSmall, "a class has fewer samples than folds");
    }
  }
  Rng rng(derive_seed(seed, "folds"));
  std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
  std::size_t next = 0;
  for (auto& members : by_class) {
    rng.shuffle(std::span<int>(members));
    for (int i : members) {
      folds[next % static_cast<std::size_t>(k)].push_back(i);
      ++next;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

CVReport kfold_cv(const Eigen::MatrixXd& x, const std::vector<LabelClass>& y, int k, const ClassifierConfig& cfg,
                  std::uint64_t seed, bool parallel) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error(ErrorCode::LengthMismatch, "samples and labels differ");
  const auto folds = stratified_folds(y, k, seed);
  std::vector<std::vector<int>> train_idx(folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<bool> held(y.size());
    for (int i : folds[f]) held[static_cast<std::size_t>(i)] = true;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (!held[i]) train_idx[f].push_back(static_cast<int>(i));
    }
  }

  struct FoldOut {
    std::vector<LabelClass> pred;
    double train_mean = 0.0;
    std::string error;
    ErrorCode code = ErrorCode::InvalidArgument;
  };
  std::vector<FoldOut> out(folds.size());
  auto run_fold = [&](std::size_t f) {
    try {
      const Eigen::MatrixXd xtr_raw = x(train_idx[f], Eigen::all);
      const Eigen::MatrixXd xte_raw = x(folds[f], Eigen::all);
      std::vector<LabelClass> ytr;
      for (int i : train_idx[f]) ytr.push_back(y[static_cast<std::size_t>(i)]);
      const Standardizer st = Standardizer::fit(xtr_raw);
      const Eigen::MatrixXd xtr = st.apply_rows(xtr_raw);
      const Eigen::MatrixXd xte = st.apply_rows(xte_raw);
      out[f].train_mean = xtr.colwise().mean().cwiseAbs().maxCoeff();
      const Model model = train(xtr, ytr, cfg);
      for (Eigen::Index r = 0; r < xte.rows(); ++r) out[f].pred.push_back(predict(model, xte.row(r).transpose()));
    } catch (const Error& e) {
      out[f].error = e.what();
      out[f].code = e.code();
    }
  };
  const auto nf = static_cast<std::ptrdiff_t>(folds.size());
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t f = 0; f < nf; ++f) run_fold(static_cast<std::size_t>(f));
  } else {
    for (std::ptrdiff_t f = 0; f < nf; ++f) run_fold(static_cast<std::size_t>(f));
  }
  for (const auto& o : out) {
    if (!o.error.empty()) throw Error(o.code, "cross-validation fold failed: " + o.error);
  }

  CVReport r;
  r.k = k;
  r.predictions.resize(y.size());
  std::array<std::array<std::vector<double>, kNumClasses>, kNumClasses> cells;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<LabelClass> truth;
    long correct = 0;
    for (std::size_t t = 0; t < folds[f].size(); ++t) {
      const auto i = static_cast<std::size_t>(folds[f][t]);
      truth.push_back(y[i]);
      r.predictions[i] = out[f].pred[t];
      correct += y[i] == out[f].pred[t] ? 1 : 0;
    }
    r.fold_accuracies.push_back(static_cast<double>(correct) / static_cast<double>(folds[f].size()));
    r.total_correct += correct;
    r.total += static_cast<long>(folds[f].size());
    r.max_train_mean = std::max(r.max_train_mean, out[f].train_mean);
    const Confusion c = confusion_matrix(truth, out[f].pred);
    for (std::size_t a = 0; a < kNumClasses; ++a) {
      long row = 0;
      for (std::size_t b = 0; b < kNumClasses; ++b) {
        row += c[a][b];
        r.confusion_total[a][b] += c[a][b];
      }
      if (row == 0) continue;  // class absent from this fold
      for (std::size_t b = 0; b < kNumClasses; ++b) cells[a][b].push_back(100.0 * static_cast<double>(c[a][b]) / static_cast<double>(row));
    }
  }
  auto mean_std = [](const std::vector<double>& v, double& mean, double& sd) {
    mean = sd = 0.0;
    if (v.empty()) return;
    for (double a : v) mean += a;
    mean /= static_cast<double>(v.size());
    if (v.size() < 2) return;
    for (double a : v) sd += (a - mean) * (a - mean);
    sd = std::sqrt(sd / static_cast<double>(v.size() - 1));
  };
  mean_std(r.fold_accuracies, r.mean, r.std);
  for (std::size_t a = 0; a < kNumClasses; ++a) {
    for (std::size_t b = 0; b < kNumClasses; ++b) mean_std(cells[a][b], r.confusion_mean[a][b], r.confusion_std[a][b]);
  }
  return r;
}

}  // namespace algaeid
