#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "algaeid/classifier.hpp"
#include "algaeid/image.hpp"
#include "algaeid/types.hpp"

namespace algaeid {

// Segmentation -----------------------------------------------------------------

enum class HooverClass { Correct, Over, Under, Missed, Noise };

struct HooverCounts {
  int correct = 0;  // GT regions
  int over = 0;     // GT regions split into several MS regions
  int under = 0;    // GT regions merged into one MS region
  int missed = 0;   // GT regions
  int noise = 0;    // MS regions
  int gt_regions = 0;
  int ms_regions = 0;

  HooverCounts& operator+=(const HooverCounts& o);
};

/// Classification of every region at one tolerance T in (0.5, 1]. Priority is
/// correct > over > under; leftovers are missed (GT) or noise (MS). The
/// optional outputs receive the class of each GT / MS label (index = label).
HooverCounts hoover_counts(const LabelMap& gt, const LabelMap& ms, double tolerance,
                           std::vector<HooverClass>* gt_class = nullptr, std::vector<HooverClass>* ms_class = nullptr);

struct HooverCurves {
  std::vector<double> tolerances;
  std::vector<double> correct, over_segmented, under_segmented, missed, noise;
  std::vector<HooverCounts> counts;
};

/// 0.51, 0.52, ..., 1.00.
std::vector<double> default_tolerances();
HooverCurves hoover_curves(const LabelMap& gt, const LabelMap& ms, const std::vector<double>& tolerances);
/// Fractions from accumulated counts; 0 when a denominator is 0.
HooverCurves curves_from_counts(const std::vector<double>& tolerances, const std::vector<HooverCounts>& counts);

/// Connected components (8-connectivity) of a mask, labelled 1..n in raster order.
LabelMap label_components(const BinaryMask& mask);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f_undefined = false;
};

Prf pixel_prf(const BinaryMask& gt, const BinaryMask& ms);

// Classification ---------------------------------------------------------------

using Confusion = std::array<std::array<long, kNumClasses>, kNumClasses>;

/// Rows true class, columns predicted, order 1, 2, 4, 8.
Confusion confusion_matrix(const std::vector<LabelClass>& truth, const std::vector<LabelClass>& predicted);

/// Seeded stratified assignment; returns the sample indices of each fold.
std::vector<std::vector<int>> stratified_folds(const std::vector<LabelClass>& y, int k, std::uint64_t seed);

struct CVReport {
  int k = 0;
  std::vector<double> fold_accuracies;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over folds
  std::array<std::array<double, kNumClasses>, kNumClasses> confusion_mean{};  // row percents
  std::array<std::array<double, kNumClasses>, kNumClasses> confusion_std{};
  Confusion confusion_total{};
  long total_correct = 0;
  long total = 0;
  double max_train_mean = 0.0;  // largest |column mean| of any standardized training split
  std::vector<LabelClass> predictions;  // per sample, from the fold that held it out
};

/// Standardizer fitted on each training split only. Folds run concurrently
/// when `parallel` is set; results do not depend on it.
CVReport kfold_cv(const Eigen::MatrixXd& x, const std::vector<LabelClass>& y, int k, const ClassifierConfig& cfg,
                  std::uint64_t seed, bool parallel = true);

}  // namespace algaeid
