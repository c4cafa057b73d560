#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "algaeid/classifier.hpp"

namespace algaeid {

struct SfsOptions {
  ClassifierConfig criterion = SvmConfig{1.0, KernelKind::Linear, 0.1, 1e-3, 10'000'000};
  int folds = 5;
  std::uint64_t seed = 1;
  bool parallel = true;  // candidates of one step evaluated concurrently
};

struct SfsRanking {
  std::vector<int> order;          // feature indices in the order they were added
  std::vector<double> score_curve;  // mean internal-CV accuracy after each addition
  std::vector<double> std_curve;
  /// step_scores[k][f]: score of adding f at step k; NaN for features already chosen.
  std::vector<std::vector<double>> step_scores;
};

/// Mean and sample std of the criterion's accuracy over the given folds using
/// only `features` (columns of x).
std::pair<double, double> subset_score(const Eigen::MatrixXd& x, const std::vector<LabelClass>& y,
                                       const std::vector<int>& features, const std::vector<std::vector<int>>& folds,
                                       const ClassifierConfig& criterion);

/// Greedy forward selection from the empty set over all columns of x (expected
/// to be standardized). Ties go to the lowest feature index.
SfsRanking sfs_rank(const Eigen::MatrixXd& x, const std::vector<LabelClass>& y, const SfsOptions& opt);

struct LChoice {
  int l = 0;
  double accuracy = 0.0;
  double std = 0.0;
};

/// Prefix length with the best mean accuracy; ties go to the shorter prefix.
LChoice choose_l(const SfsRanking& ranking);

}  // namespace algaeid
