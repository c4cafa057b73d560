#include <algorithm>
#include <cmath>
#include <limits>

#include "algaeid/classifier.hpp"
#include "algaeid/error.hpp"

namespace algaeid {

namespace {

void check_config(const SvmConfig& cfg) {
  if (!(cfg.C > 0.0)) throw Error(ErrorCode::InvalidArgument, "SVM C must be > 0");
  if (cfg.kernel == KernelKind::Rbf && !(cfg.gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "SVM gamma must be > 0");
  if (!(cfg.tol > 0.0) || cfg.max_iter < 1) throw Error(ErrorCode::InvalidArgument, "SVM tolerance/iterations invalid");
}

std::vector<LabelClass> present_classes(const std::vector<LabelClass>& y, const std::vector<int>& idx) {
  std::array<bool, kNumClasses> seen{};
  for (int i : idx) seen[static_cast<std::size_t>(class_index(y[static_cast<std::size_t>(i)]))] = true;
  std::vector<LabelClass> out;
  for (int c = 0; c < kNumClasses; ++c) {
    if (seen[static_cast<std::size_t>(c)]) out.push_back(class_from_index(c));
  }
  return out;
}

LabelClass vote(const std::vector<LabelClass>& classes, const std::array<int, kNumClasses>& votes) {
  LabelClass best = classes.front();
  int best_votes = -1;
  for (LabelClass c : classes) {  // ascending, so strict > keeps the smaller label on ties
    const int v = votes[static_cast<std::size_t>(class_index(c))];
    if (v > best_votes) {
      best_votes = v;
      best = c;
    }
  }
  return best;
}

}  // namespace

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const SvmConfig& cfg) {
  if (a.cols() != b.cols()) throw Error(ErrorCode::DimensionMismatch, "kernel operands differ in width");
  Eigen::MatrixXd k = a * b.transpose();
  if (cfg.kernel == KernelKind::Rbf) {
    const Eigen::VectorXd na = a.rowwise().squaredNorm();
    const Eigen::VectorXd nb = b.rowwise().squaredNorm();
    for (Eigen::Index j = 0; j < k.cols(); ++j) {
      for (Eigen::Index i = 0; i < k.rows(); ++i) {
        const double d2 = std::max(0.0, na(i) + nb(j) - 2.0 * k(i, j));
        k(i, j) = std::exp(-cfg.gamma * d2);
      }
    }
  }
  return k;
}

SmoResult smo_solve(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, double c, double tol, long max_iter,
                    const Eigen::VectorXd* start) {
  const Eigen::Index n = y.size();
  if (k.rows() != n || k.cols() != n) throw Error(ErrorCode::DimensionMismatch, "kernel/label size mismatch");
  constexpr double kTau = 1e-12;
  // Q = diag(y) K diag(y), column-major so every column access below is contiguous.
  const Eigen::MatrixXd qm = y.asDiagonal() * k * y.asDiagonal();
  const Eigen::VectorXd qd = qm.diagonal();
  SmoResult r;
  r.alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd& a = r.alpha;
  Eigen::VectorXd g = Eigen::VectorXd::Constant(n, -1.0);  // gradient of 1/2 a'Qa - e'a
  if (start) {
    if (start->size() != n) throw Error(ErrorCode::DimensionMismatch, "warm start size mismatch");
    double balance = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!((*start)(t) >= 0.0 && (*start)(t) <= c)) throw Error(ErrorCode::InvalidArgument, "warm start outside the box");
      balance += (*start)(t) * y(t);
    }
    if (std::abs(balance) > 1e-9 * (1.0 + c * static_cast<double>(n))) {
      throw Error(ErrorCode::InvalidArgument, "warm start violates the equality constraint");
    }
    a = *start;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (a(t) != 0.0) g += a(t) * qm.col(t);
    }
  }
  const double* yp = y.data();
  double* ap = a.data();
  double* gp = g.data();

  for (r.iterations = 0; r.iterations < max_iter; ++r.iterations) {
    // i: maximal violator in I_up; j: second-order choice in I_low (largest
    // guaranteed decrease of the dual for the pair).
    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      const bool up = yp[t] > 0 ? ap[t] < c : ap[t] > 0.0;
      if (up && -yp[t] * gp[t] > gmax) {
        gmax = -yp[t] * gp[t];
        i = t;
      }
    }
    if (i < 0) {
      r.converged = true;
      break;
    }
    const double* qi = qm.col(i).data();
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best_obj = std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      const bool low = yp[t] > 0 ? ap[t] > 0.0 : ap[t] < c;
      if (!low) continue;
      const double v = yp[t] * gp[t];
      gmax2 = std::max(gmax2, v);
      const double grad_diff = gmax + v;
      if (grad_diff > 0.0) {
        // K_ii + K_tt - 2 K_it, with K_it = y_i y_t Q_it.
        double quad = qd(i) + qd(t) - 2.0 * yp[i] * yp[t] * qi[t];
        if (quad <= 0.0) quad = kTau;
        const double obj = -(grad_diff * grad_diff) / quad;
        if (obj < best_obj) {
          best_obj = obj;
          j = t;
        }
      }
    }
    if (j < 0 || gmax + gmax2 <= tol) {
      r.converged = true;
      break;
    }
    const double* qj = qm.col(j).data();
    const double ai = ap[i], aj = ap[j];
    if (yp[i] != yp[j]) {
      double quad = qd(i) + qd(j) + 2.0 * qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (-gp[i] - gp[j]) / quad;
      const double diff = ap[i] - ap[j];
      ap[i] += delta;
      ap[j] += delta;
      if (diff > 0.0) {
        if (ap[j] < 0.0) {
          ap[j] = 0.0;
          ap[i] = diff;
        }
      } else if (ap[i] < 0.0) {
        ap[i] = 0.0;
        ap[j] = -diff;
      }
      if (diff > 0.0) {
        if (ap[i] > c) {
          ap[i] = c;
          ap[j] = c - diff;
        }
      } else if (ap[j] > c) {
        ap[j] = c;
        ap[i] = c + diff;
      }
    } else {
      double quad = qd(i) + qd(j) - 2.0 * qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (gp[i] - gp[j]) / quad;
      const double sum = ap[i] + ap[j];
      ap[i] -= delta;
      ap[j] += delta;
      if (sum > c) {
        if (ap[i] > c) {
          ap[i] = c;
          ap[j] = sum - c;
        }
      } else if (ap[j] < 0.0) {
        ap[j] = 0.0;
        ap[i] = sum;
      }
      if (sum > c) {
        if (ap[j] > c) {
          ap[j] = c;
          ap[i] = sum - c;
        }
      } else if (ap[i] < 0.0) {
        ap[i] = 0.0;
        ap[j] = sum;
      }
    }
    const double di = ap[i] - ai;
    const double dj = ap[j] - aj;
    for (Eigen::Index t = 0; t < n; ++t) gp[t] += qi[t] * di + qj[t] * dj;
  }

  // Offset from free vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  int n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y(t) * g(t);
    if (a(t) >= c) {
      if (y(t) < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (a(t) <= 0.0) {
      if (y(t) > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  double rho = 0.0;
  if (n_free > 0) {
    rho = sum_free / n_free;
  } else if (std::isfinite(ub) && std::isfinite(lb)) {
    rho = 0.5 * (ub + lb);
  } else if (std::isfinite(ub)) {
    rho = ub;
  } else if (std::isfinite(lb)) {
    rho = lb;
  }
  r.bias = -rho;
  return r;
}

SvmModel svm_train(const Eigen::MatrixXd& x, const std::vector<LabelClass>& y, const SvmConfig& cfg) {
  check_config(cfg);
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error(ErrorCode::LengthMismatch, "samples and labels differ");
  if (!x.allFinite()) throw Error(ErrorCode::NonFiniteFeature, "training data contains NaN or inf");
  std::vector<int> all(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) all[i] = static_cast<int>(i);
  SvmModel model;
  model.config = cfg;
  model.dim = x.cols();
  model.classes = present_classes(y, all);
  if (model.classes.size() < 2) throw Error(ErrorCode::SingleClassInput, "need at least two classes");
  const Eigen::MatrixXd k = kernel_matrix(x, x, cfg);
  for (std::size_t p = 0; p < model.classes.size(); ++p) {
    for (std::size_t q = p + 1; q < model.classes.size(); ++q) {
      std::vector<Eigen::Index> idx;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == model.classes[p] || y[i] == model.classes[q]) idx.push_back(static_cast<Eigen::Index>(i));
      }
      const auto n = static_cast<Eigen::Index>(idx.size());
      Eigen::MatrixXd kp(n, n);
      Eigen::VectorXd yv(n);
      for (Eigen::Index a = 0; a < n; ++a) {
        yv(a) = y[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])] == model.classes[p] ? 1.0 : -1.0;
        for (Eigen::Index b = 0; b < n; ++b) kp(a, b) = k(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
      }
      const SmoResult s = smo_solve(kp, yv, cfg.C, cfg.tol, cfg.max_iter);
      BinarySvm m{model.classes[p], model.classes[q], {}, {}, s.bias};
      std::vector<Eigen::Index> sv;
      for (Eigen::Index a = 0; a < n; ++a) {
        if (s.alpha(a) > 0.0) sv.push_back(a);
      }
      m.support.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
      m.coef.resize(static_cast<Eigen::Index>(sv.size()));
      for (std::size_t r = 0; r < sv.size(); ++r) {
        m.support.row(static_cast<Eigen::Index>(r)) = x.row(idx[static_cast<std::size_t>(sv[r])]);
        m.coef(static_cast<Eigen::Index>(r)) = s.alpha(sv[r]) * yv(sv[r]);
      }
      model.machines.push_back(std::move(m));
    }
  }
  return model;
}

double svm_decision(const BinarySvm& m, const SvmConfig& cfg, const Eigen::VectorXd& x) {
  double f = m.bias;
  for (Eigen::Index r = 0; r < m.support.rows(); ++r) {
    const auto sv = m.support.row(r);
    double kv;
    if (cfg.kernel == KernelKind::Linear) {
      kv = sv.dot(x.transpose());
    } else {
      kv = std::exp(-cfg.gamma * (sv - x.transpose()).squaredNorm());
    }
    f += m.coef(r) * kv;
  }
  return f;
}

LabelClass svm_predict(const SvmModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.dim) throw Error(ErrorCode::DimensionMismatch, "feature vector length differs from model");
  std::array<int, kNumClasses> votes{};
  for (const auto& m : model.machines) {
    const LabelClass w = svm_decision(m, model.config, x) >= 0.0 ? m.positive : m.negative;
    ++votes[static_cast<std::size_t>(class_index(w))];
  }
  return vote(model.classes, votes);
}

std::vector<LabelClass> svm_predict_from_kernel(const Eigen::MatrixXd& k, const std::vector<LabelClass>& y,
                                                const std::vector<int>& train, const std::vector<int>& test,
                                                const SvmConfig& cfg, std::vector<Eigen::VectorXd>* warm) {
  check_config(cfg);
  const std::vector<LabelClass> classes = present_classes(y, train);
  if (classes.size() < 2) throw Error(ErrorCode::SingleClassInput, "need at least two classes");
  std::vector<std::array<int, kNumClasses>> votes(test.size());
  const std::size_t n_pairs = classes.size() * (classes.size() - 1) / 2;
  const bool use_warm = warm && warm->size() == n_pairs;
  if (warm && !use_warm) warm->assign(n_pairs, Eigen::VectorXd());
  std::size_t pair = 0;
  for (std::size_t p = 0; p < classes.size(); ++p) {
    for (std::size_t q = p + 1; q < classes.size(); ++q) {
      std::vector<int> idx;
      for (int i : train) {
        const LabelClass c = y[static_cast<std::size_t>(i)];
        if (c == classes[p] || c == classes[q]) idx.push_back(i);
      }
      const auto n = static_cast<Eigen::Index>(idx.size());
      Eigen::MatrixXd kp(n, n);
      Eigen::VectorXd yv(n);
      for (Eigen::Index a = 0; a < n; ++a) {
        yv(a) = y[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])] == classes[p] ? 1.0 : -1.0;
        for (Eigen::Index b = 0; b < n; ++b) kp(a, b) = k(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
      }
      const Eigen::VectorXd* start = use_warm && (*warm)[pair].size() == n ? &(*warm)[pair] : nullptr;
      const SmoResult s = smo_solve(kp, yv, cfg.C, cfg.tol, cfg.max_iter, start);
      if (warm) (*warm)[pair] = s.alpha;
      ++pair;
      for (std::size_t t = 0; t < test.size(); ++t) {
        double f = s.bias;
        for (Eigen::Index a = 0; a < n; ++a) {
          if (s.alpha(a) > 0.0) f += s.alpha(a) * yv(a) * k(idx[static_cast<std::size_t>(a)], test[t]);
        }
        const LabelClass w = f >= 0.0 ? classes[p] : classes[q];
        ++votes[t][static_cast<std::size_t>(class_index(w))];
      }
    }
  }
  std::vector<LabelClass> out;
  out.reserve(test.size());
  for (const auto& v : votes) out.push_back(vote(classes, v));
  return out;
}

}  // namespace algaeid
