#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "eotx/units.hpp"

namespace eotx {

struct FitResult {
  std::string parameter;
  std::string unit;
  double estimate = 0;
  double std_error = 0;
  double residual_norm = 0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> residual_history; // weighted residual norm after each accepted step
  std::vector<std::pair<std::string, double>> extras;
  std::vector<std::string> warnings;

  double extra(const std::string& key) const {
    for (auto& [k, v] : extras)
      if (k == key) return v;
    return std::numeric_limits<double>::quiet_NaN();
  }
};

/// Weighted residual vector r_i = (model_i(x) - y_i) / sigma_i.
using ResidualFn = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& r)>;

struct LeastSquaresResult {
  Eigen::VectorXd x;
  Eigen::MatrixXd covariance;
  double residual_norm = 0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> history;
};

namespace detail {

struct ResidualFunctor {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  ResidualFunctor() = default;
  ResidualFunctor(const ResidualFn* f, int n_in, int n_out) : fn(f), n_in(n_in), n_out(n_out) {}
  int inputs() const { return n_in; }
  int values() const { return n_out; }
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
    r.resize(n_out);
    (*fn)(x, r);
    return r.allFinite() ? 0 : -1;
  }

  const ResidualFn* fn = nullptr;
  int n_in = 0, n_out = 0;
};

} // namespace detail

/// Levenberg-Marquardt (MINPACK) driven step by step so the residual history is kept.
inline LeastSquaresResult least_squares(const ResidualFn& fn, Eigen::VectorXd x0, int n_residuals,
                                        int max_iterations = 200) {
  using Functor = Eigen::NumericalDiff<detail::ResidualFunctor, Eigen::Central>;
  Functor f(detail::ResidualFunctor(&fn, static_cast<int>(x0.size()), n_residuals));
  Eigen::LevenbergMarquardt<Functor> lm(f);
  lm.parameters.maxfev = 50 * max_iterations;
  lm.parameters.xtol = 1e-12;
  lm.parameters.ftol = 1e-12;

  LeastSquaresResult out;
  auto status = lm.minimizeInit(x0);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters)
    throw DomainError("least squares: improper input");
  out.history.push_back(lm.fnorm);
  int it = 0;
  do {
    status = lm.minimizeOneStep(x0);
    out.history.push_back(lm.fnorm);
    ++it;
  } while (status == Eigen::LevenbergMarquardtSpace::Running && it < max_iterations);

  using namespace Eigen::LevenbergMarquardtSpace;
  out.converged = status == RelativeReductionTooSmall || status == RelativeErrorTooSmall ||
                  status == RelativeErrorAndReductionTooSmall || status == CosinusTooSmall ||
                  status == FtolTooSmall || status == XtolTooSmall || status == GtolTooSmall;
  out.iterations = it;
  out.x = x0;

  Eigen::VectorXd r(n_residuals);
  fn(x0, r);
  out.residual_norm = r.norm();
  out.converged = out.converged && std::isfinite(out.residual_norm);

  Eigen::MatrixXd jac(n_residuals, x0.size());
  f.df(x0, jac);
  const int dof = std::max(1, n_residuals - static_cast<int>(x0.size()));
  const double s2 = r.squaredNorm() / dof;
  out.covariance = (jac.transpose() * jac).completeOrthogonalDecomposition().pseudoInverse() * s2;
  return out;
}

/// Minimum of f over a lin- or log-spaced grid on [lo, hi].
inline double grid_scan(const std::function<double(double)>& f, double lo, double hi, int points,
                        bool log_scale) {
  double best_x = lo, best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / (points - 1);
    const double x = log_scale ? lo * std::pow(hi / lo, t) : lo + t * (hi - lo);
    const double v = f(x);
    if (v < best) best = v, best_x = x;
  }
  return best_x;
}

inline FitResult make_fit_result(std::string name, std::string unit,
                                 const LeastSquaresResult& ls, int index = 0) {
  FitResult r;
  r.parameter = std::move(name);
  r.unit = std::move(unit);
  r.estimate = ls.x(index);
  r.std_error = std::sqrt(std::max(0.0, ls.covariance(index, index)));
  r.residual_norm = ls.residual_norm;
  r.converged = ls.converged && std::isfinite(r.std_error);
  r.iterations = ls.iterations;
  r.residual_history = ls.history;
  return r;
}

} // namespace eotx
