#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "algaeid/standardize.hpp"
#include "algaeid/types.hpp"

namespace algaeid {

// SVM -----------------------------------------------------------------------

enum class KernelKind { Linear, Rbf };

struct SvmConfig {
  double C = 1.0;
  KernelKind kernel = KernelKind::Rbf;
  double gamma = 0.1;  // rbf only
  double tol = 1e-3;   // maximal KKT violation at convergence
  long max_iter = 10'000'000;
};

/// Kernel matrix between the rows of a and the rows of b.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const SvmConfig& cfg);

struct SmoResult {
  Eigen::VectorXd alpha;
  double bias = 0.0;  // decision f(x) = sum_i alpha_i y_i K(x_i, x) + bias
  long iterations = 0;
  bool converged = false;
};

/// Soft-margin dual on a precomputed kernel, y in {+1, -1}. Working set uses
/// second-order selection; stops when the maximal KKT violation is <= tol.
/// `start`, if given, must be feasible (box and sum_i alpha_i y_i = 0).
SmoResult smo_solve(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, double c, double tol, long max_iter,
                    const Eigen::VectorXd* start = nullptr);

struct BinarySvm {
  LabelClass positive;  // the smaller label; f(x) >= 0 votes for it
  LabelClass negative;
  Eigen::MatrixXd support;  // rows
  Eigen::VectorXd coef;     // alpha_i * y_i
  double bias = 0.0;
};

struct SvmModel {
  SvmConfig config;
  std::vector<LabelClass> classes;  // present classes, ascending
  std::vector<BinarySvm> machines;  // (a, b) pairs with a < b, lexicographic
  Eigen::Index dim = 0;
};

/// Rows of x are samples. Throws SingleClassInput, NonFiniteFeature, LengthMismatch.
SvmModel svm_train(const Eigen::MatrixXd& x, const std::vector<LabelClass>& y, const SvmConfig& cfg);
double svm_decision(const BinarySvm& m, const SvmConfig& cfg, const Eigen::VectorXd& x);
LabelClass svm_predict(const SvmModel& model, const Eigen::VectorXd& x);

/// One-vs-one train-and-predict using a kernel precomputed over all samples;
/// `train` and `test` index into it. Equivalent to svm_train + svm_predict.
/// `warm`, if given, holds one dual vector per class pair: used as starting
/// points when sizes match, and overwritten with the new solutions.
std::vector<LabelClass> svm_predict_from_kernel(const Eigen::MatrixXd& k, const std::vector<LabelClass>& y,
                                                const std::vector<int>& train, const std::vector<int>& test,
                                                const SvmConfig& cfg, std::vector<Eigen::VectorXd>* warm = nullptr);

// ANN -----------------------------------------------------------------------

struct AnnConfig {
  int tau = 20;
  double learning_rate = 0.01;
  double momentum = 0.9;
  int epochs = 300;
  int batch = 32;
  std::uint64_t seed = 1;
};

/// in -> tau -> tau -> 4 with tanh hidden units and softmax output. Parameters
/// live in one flat vector: W1, b1, W2, b2, W3, b3 (weights column-major, out x in).
struct MlpModel {
  int in = 0;
  int tau = 0;
  Eigen::VectorXd theta;
  std::vector<double> loss_trace;  // mean training loss per epoch

  static Eigen::Index parameter_count(int in, int tau);
  Eigen::VectorXd probabilities(const Eigen::VectorXd& x) const;
};

MlpModel mlp_init(int in, int tau, std::uint64_t seed);
/// Mean cross-entropy over the rows of x and its gradient w.r.t. theta.
double mlp_loss_grad(const MlpModel& m, const Eigen::MatrixXd& x, const std::vector<int>& class_idx,
                     Eigen::VectorXd* grad);
MlpModel ann_train(const Eigen::MatrixXd& x, const std::vector<LabelClass>& y, const AnnConfig& cfg);
LabelClass ann_predict(const MlpModel& m, const Eigen::VectorXd& x);

// Common ----------------------------------------------------------------------

using ClassifierConfig = std::variant<SvmConfig, AnnConfig>;
using Model = std::variant<SvmModel, MlpModel>;

Model train(const Eigen::MatrixXd& x, const std::vector<LabelClass>& y, const ClassifierConfig& cfg);
LabelClass predict(const Model& m, const Eigen::VectorXd& x);
std::string describe(const ClassifierConfig& cfg);

/// Everything needed to classify a raw 215-dim feature vector.
struct TrainedModel {
  Standardizer standardizer;  // over the selected dimensions
  std::vector<int> selected;
  Model payload;

  LabelClass predict(const FeatureVector& raw) const;
  Eigen::VectorXd prepare(const FeatureVector& raw) const;
};

/// Fits the standardizer on the selected columns of x, then trains.
TrainedModel train_full(const Eigen::MatrixXd& x_all, const std::vector<LabelClass>& y, const std::vector<int>& selected,
                        const ClassifierConfig& cfg);

// Grid search -------------------------------------------------------------------

struct GridPoint {
  ClassifierConfig config;
  double mean = 0.0;
  double std = 0.0;
};

struct GridResult {
  ClassifierConfig best;
  std::vector<GridPoint> points;
  std::size_t best_index = 0;
};

/// C in {1e-2..1e2} (and gamma likewise for rbf), or tau in {5, 10, ..., 60};
/// other fields come from `base`.
std::vector<ClassifierConfig> grid_configs(const ClassifierConfig& base);
/// Each point scored by k-fold CV; argmax mean, ties to the earlier (smaller) point.
GridResult grid_search(const Eigen::MatrixXd& x, const std::vector<LabelClass>& y, const ClassifierConfig& base, int k,
                       std::uint64_t seed);

// Helpers ---------------------------------------------------------------------

Eigen::MatrixXd to_matrix(const LabeledDataset& ds);
std::vector<LabelClass> labels_of(const LabeledDataset& ds);
Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x, const std::vector<int>& cols);

}  // namespace algaeid
