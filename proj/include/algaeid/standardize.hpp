#pragma once

#include <Eigen/Dense>
#include <vector>

namespace algaeid {

/// Per-dimension z-score with population standard deviation. Dimensions whose
/// training std is (numerically) zero map to 0.
class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(Eigen::VectorXd mean, Eigen::VectorXd std);

  /// Rows are samples. Throws TooFewSamples below 2 rows.
  static Standardizer fit(const Eigen::MatrixXd& x);

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& x) const;

  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::VectorXd& std() const noexcept { return std_; }
  Eigen::Index dim() const noexcept { return mean_.size(); }

  /// Restricts to the given dimensions, in order.
  Standardizer subset(const std::vector<int>& dims) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd std_;
};

}  // namespace algaeid
