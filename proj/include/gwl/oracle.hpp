#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "gwl/model.hpp"

namespace gwl {

struct QuadratureOptions {
  double resolution = 16.0;  // grid points per min(sigma, prior scale)
  double extent = 50.0;      // half-width in units of max(sigma, prior scale)
};

struct MarginalResult {
  double value = 0.0;
  bool boundary_warning = false;  // integrand mass at the grid edge > 1e-8 of total
};

/// sum_k log int N(y_k | v, sigma2) p(v | f) dv for the 1-D Student's t prior,
/// trapezoidal rule over v. f = +inf gives the pure-noise likelihood.
MarginalResult marginal_loglik_1d(std::span<const double> y, double f, double a, double sigma2,
                                  const QuadratureOptions& opt = {});

/// Same quantity integrated over the log mixing scale instead of v:
/// y | s ~ N(0, sigma2 + s / f), s ~ InvGamma(a, 1). The integrand is smooth
/// and light-tailed in log s, so a coarse trapezoid is already exact to
/// rounding; used by the grid search where thousands of tasks are scored.
double marginal_loglik_1d_scale_mixture(std::span<const double> y, double f, double a,
                                        double sigma2, double step = 0.25);

/// The candidate set of the grid-search study: n log-spaced values in [lo, hi].
std::vector<double> log_spaced(double lo, double hi, int n);

struct GridSearchResult {
  double best_f = 0.0;
  std::vector<double> scores;  // marginal loglik + K beta log f, per candidate
};

/// argmax over candidates of marginal_loglik + K beta log f.
GridSearchResult grid_search_f(std::span<const double> y, std::span<const double> candidates,
                               double a, double sigma2, double beta);

struct DensePosterior {
  Eigen::VectorXd v;         // all blocks; irrelevant blocks are zero
  Eigen::MatrixXd sigma;     // covariance over relevant blocks, in family order
  std::vector<double> stat;  // |v_A|^2 + tr Sigma_AA
  double log_det_sigma = 0.0;
  double fit_trace = 0.0;
};

/// Posterior of v for fixed zeta, f, sigma2 by materializing M and inverting
/// the precision matrix directly. Limited to fewer than 2000 coordinates.
DensePosterior dense_posterior(const Task& task, const GroupFamily& family,
                               std::span<const double> zeta, double sigma2);

}  // namespace gwl
