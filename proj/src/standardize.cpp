#include "algaeid/standardize.hpp"

#include <cmath>

#include "algaeid/error.hpp"

namespace algaeid {

namespace {

// Relative to the dimension's magnitude, so constant columns whose mean picks
// up rounding noise are still treated as constant.
bool negligible(double sd, double mean) { return !(sd > 1e-12 * (1.0 + std::abs(mean))); }

}  // namespace

Standardizer::Standardizer(Eigen::VectorXd mean, Eigen::VectorXd std) : mean_(std::move(mean)), std_(std::move(std)) {
  if (mean_.size() != std_.size()) throw Error(ErrorCode::DimensionMismatch, "mean and std lengths differ");
  for (Eigen::Index i = 0; i < std_.size(); ++i) {
    if (!(std_(i) >= 0.0) || !std::isfinite(mean_(i))) throw Error(ErrorCode::InvalidArgument, "invalid standardizer entry");
  }
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  if (x.rows() < 2) throw Error(ErrorCode::TooFewSamples, "standardizer needs at least 2 samples");
  const Eigen::VectorXd mean = x.colwise().mean().transpose();
  Eigen::VectorXd sd(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - mean(j)).square().mean();
    sd(j) = std::sqrt(var);
  }
  return Standardizer(mean, sd);
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& v) const {
  if (v.size() != mean_.size()) throw Error(ErrorCode::DimensionMismatch, "vector length differs from standardizer");
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out(i) = negligible(std_(i), mean_(i)) ? 0.0 : (v(i) - mean_(i)) / std_(i);
  }
  return out;
}

Eigen::MatrixXd Standardizer::apply_rows(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean_.size()) throw Error(ErrorCode::DimensionMismatch, "matrix width differs from standardizer");
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (negligible(std_(j), mean_(j))) {
      out.col(j).setZero();
    } else {
      out.col(j) = (x.col(j).array() - mean_(j)) / std_(j);
    }
  }
  return out;
}

Standardizer Standardizer::subset(const std::vector<int>& dims) const {
  Eigen::VectorXd m(static_cast<Eigen::Index>(dims.size()));
  Eigen::VectorXd s(static_cast<Eigen::Index>(dims.size()));
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (dims[k] < 0 || dims[k] >= mean_.size()) throw Error(ErrorCode::InvalidArgument, "subset index out of range");
    m(static_cast<Eigen::Index>(k)) = mean_(dims[k]);
    s(static_cast<Eigen::Index>(k)) = std_(dims[k]);
  }
  return Standardizer(m, s);
}

}  // namespace algaeid
