#include <cmath>
#include <sstream>

#include "algaeid/classifier.hpp"
#include "algaeid/error.hpp"
#include "algaeid/evaluate.hpp"

namespace algaeid {

Model train(const Eigen::MatrixXd& x, const std::vector<LabelClass>& y, const ClassifierConfig& cfg) {
  if (const auto* s = std::get_if<SvmConfig>(&cfg)) return svm_train(x, y, *s);
  return ann_train(x, y, std::get<AnnConfig>(cfg));
}

LabelClass predict(const Model& m, const Eigen::VectorXd& x) {
  if (const auto* s = std::get_if<SvmModel>(&m)) return svm_predict(*s, x);
  return ann_predict(std::get<MlpModel>(m), x);
}

std::string describe(const ClassifierConfig& cfg) {
  std::ostringstream os;
  if (const auto* s = std::get_if<SvmConfig>(&cfg)) {
    os << "svm kernel=" << (s->kernel == KernelKind::Linear ? "linear" : "rbf") << " C=" << s->C;
    if (s->kernel == KernelKind::Rbf) os << " gamma=" << s->gamma;
  } else {
    const auto& a = std::get<AnnConfig>(cfg);
    os << "ann tau=" << a.tau << " epochs=" << a.epochs;
  }
  return os.str();
}

Eigen::VectorXd TrainedModel::prepare(const FeatureVector& raw) const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(selected.size()));
  for (std::size_t i = 0; i < selected.size(); ++i) v(static_cast<Eigen::Index>(i)) = raw[static_cast<std::size_t>(selected[i])];
  return standardizer.apply(v);
}

LabelClass TrainedModel::predict(const FeatureVector& raw) const { return algaeid::predict(payload, prepare(raw)); }

TrainedModel train_full(const Eigen::MatrixXd& x_all, const std::vector<LabelClass>& y, const std::vector<int>& selected,
                        const ClassifierConfig& cfg) {
  if (selected.empty()) throw Error(ErrorCode::InvalidArgument, "no features selected");
  const Eigen::MatrixXd xs = select_columns(x_all, selected);
  TrainedModel tm;
  tm.selected = selected;
  tm.standardizer = Standardizer::fit(xs);
  tm.payload = train(tm.standardizer.apply_rows(xs), y, cfg);
  return tm;
}

std::vector<ClassifierConfig> grid_configs(const ClassifierConfig& base) {
  std::vector<ClassifierConfig> out;
  const double powers[] = {1e-2, 1e-1, 1.0, 1e1, 1e2};
  if (const auto* s = std::get_if<SvmConfig>(&base)) {
    for (double c : powers) {
      if (s->kernel == KernelKind::Linear) {
        SvmConfig p = *s;
        p.C = c;
        out.emplace_back(p);
        continue;
      }
      for (double g : powers) {
        SvmConfig p = *s;
        p.C = c;
        p.gamma = g;
        out.emplace_back(p);
      }
    }
  } else {
    for (int tau = 5; tau <= 60; tau += 5) {
      AnnConfig p = std::get<AnnConfig>(base);
      p.tau = tau;
      out.emplace_back(p);
    }
  }
  return out;
}

GridResult grid_search(const Eigen::MatrixXd& x, const std::vector<LabelClass>& y, const ClassifierConfig& base, int k,
                       std::uint64_t seed) {
  GridResult r;
  for (const auto& cfg : grid_configs(base)) {
    const CVReport rep = kfold_cv(x, y, k, cfg, seed);
    r.points.push_back({cfg, rep.mean, rep.std});
  }
  for (std::size_t i = 1; i < r.points.size(); ++i) {
    if (r.points[i].mean > r.points[r.best_index].mean) r.best_index = i;
  }
  r.best = r.points[r.best_index].config;
  return r;
}

Eigen::MatrixXd to_matrix(const LabeledDataset& ds) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(kFeatureDim));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < kFeatureDim; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = ds[i].features[j];
  }
  return x;
}

std::vector<LabelClass> labels_of(const LabeledDataset& ds) {
  std::vector<LabelClass> y;
  y.reserve(ds.size());
  for (const auto& s : ds.samples()) y.push_back(s.label);
  return y;
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x, const std::vector<int>& cols) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] < 0 || cols[j] >= x.cols()) throw Error(ErrorCode::InvalidArgument, "column index out of range");
    out.col(static_cast<Eigen::Index>(j)) = x.col(cols[j]);
  }
  return out;
}

}  // namespace algaeid
