#include "gwl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>
#include <Eigen/LU>
#include <boost/math/special_functions/gamma.hpp>

#include "gwl/priors.hpp"

namespace gwl {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_normal(double y, double var) { return -0.5 * (kLog2Pi + std::log(var) + y * y / var); }

// log sum_i w_i exp(l_i) with trapezoid weights (half at both ends), times h.
double log_trapezoid(const std::vector<double>& l, double h) {
  const double m = *std::max_element(l.begin(), l.end());
  double s = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) {
    const double w = (i == 0 || i + 1 == l.size()) ? 0.5 : 1.0;
    s += w * std::exp(l[i] - m);
  }
  return m + std::log(s * h);
}

}  // namespace

MarginalResult marginal_loglik_1d(std::span<const double> y, double f, double a, double sigma2,
                                  const QuadratureOptions& opt) {
  if (!(sigma2 > 0.0) || !(f > 0.0) || !(a > 0.0)) throw std::domain_error("invalid parameters");
  MarginalResult out;
  if (is_irrelevant(f)) {
    for (double yk : y) out.value += log_normal(yk, sigma2);
    return out;
  }
  const PriorConfig prior = PriorConfig::student_t(a);
  const double sigma = std::sqrt(sigma2);
  const double prior_scale = 1.0 / std::sqrt(f * (a > 1.0 ? a - 1.0 : a));
  const double h = std::min(sigma, prior_scale) / opt.resolution;
  const double half = opt.extent * std::max(sigma, prior_scale);
  const double lp0 = log_density_sq(prior, 1, f, 0.0);

  std::vector<double> l;
  for (double yk : y) {
    const double lo = std::min(0.0, yk) - half;
    const double hi = std::max(0.0, yk) + half;
    const long n = static_cast<long>(std::ceil((hi - lo) / h));
    l.resize(n + 1);
    for (long i = 0; i <= n; ++i) {
      const double v = lo + i * h;
      const double lp = lp0 - (a + 0.5) * std::log1p(0.5 * f * v * v);
      l[i] = log_normal(yk - v, sigma2) + lp;
    }
    const double total = log_trapezoid(l, h);
    const double edge = std::max(l.front(), l.back()) + std::log(h);
    if (edge - total > std::log(1e-8)) out.boundary_warning = true;
    out.value += total;
  }
  return out;
}

double marginal_loglik_1d_scale_mixture(std::span<const double> y, double f, double a,
                                        double sigma2, double step) {
  if (!(sigma2 > 0.0) || !(f > 0.0) || !(a > 0.0)) throw std::domain_error("invalid parameters");
  double out = 0.0;
  if (is_irrelevant(f)) {
    for (double yk : y) out += log_normal(yk, sigma2);
    return out;
  }
  const double lga = boost::math::lgamma(a);
  // log density of t = log s: -a t - exp(-t) - lgamma(a). Negligible below
  // t = -5 (exp(-e^5) ~ 1e-65); the upper end follows the data scale.
  std::vector<double> l;
  for (double yk : y) {
    const double t_peak = std::log(std::max(f * (yk * yk + sigma2), 1e-300));
    const double lo = -5.0;
    const double hi = std::max(40.0, t_peak + 40.0);
    const long n = static_cast<long>(std::ceil((hi - lo) / step));
    l.resize(n + 1);
    for (long i = 0; i <= n; ++i) {
      const double t = lo + i * step;
      l[i] = log_normal(yk, sigma2 + std::exp(t) / f) - a * t - std::exp(-t) - lga;
    }
    out += log_trapezoid(l, step);
  }
  return out;
}

std::vector<double> log_spaced(double lo, double hi, int n) {
  if (n < 1 || !(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("invalid log grid");
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i)
    out[i] = n == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1));
  return out;
}

GridSearchResult grid_search_f(std::span<const double> y, std::span<const double> candidates,
                               double a, double sigma2, double beta) {
  if (candidates.empty()) throw std::invalid_argument("empty candidate list");
  GridSearchResult out;
  const double K = static_cast<double>(y.size());
  double best = -std::numeric_limits<double>::infinity();
  for (double f : candidates) {
    const double score =
        marginal_loglik_1d_scale_mixture(y, f, a, sigma2) + K * beta * std::log(f);
    out.scores.push_back(score);
    // Ties resolve to the smaller f so the result does not depend on order.
    if (score > best || (score == best && f < out.best_f)) {
      best = score;
      out.best_f = f;
    }
  }
  return out;
}

DensePosterior dense_posterior(const Task& task, const GroupFamily& family,
                               std::span<const double> zeta, double sigma2) {
  if (zeta.size() != family.size()) throw StructuralError("one zeta per group required");
  std::vector<std::size_t> active;
  int D = 0;
  for (std::size_t a = 0; a < family.size(); ++a)
    if (!is_irrelevant(family.weight(a))) {
      active.push_back(a);
      D += family.card(a);
    }
  if (D >= 2000) throw StructuralError("dense posterior limited to fewer than 2000 coordinates");

  const int P = family.num_vars();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(P, D);
  Eigen::VectorXd prior_prec(D);
  int col = 0;
  for (std::size_t a : active)
    for (int i : family.group(a)) {
      M(i, col) = 1.0;
      prior_prec[col] = family.weight(a) / zeta[a];
      ++col;
    }
  const Eigen::MatrixXd X =
      task.is_identity() ? Eigen::MatrixXd::Identity(P, P) : Eigen::MatrixXd(task.X());
  const Eigen::MatrixXd XM = X * M;
  const Eigen::MatrixXd C = XM.transpose() * XM;
  Eigen::MatrixXd prec = C / sigma2;
  prec.diagonal() += prior_prec;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(prec);
  DensePosterior out;
  out.sigma = lu.inverse();
  const Eigen::VectorXd v_act = out.sigma * XM.transpose() * task.y() / sigma2;
  double log_det_prec = 0.0;
  const Eigen::MatrixXd& LU = lu.matrixLU();
  for (int j = 0; j < D; ++j) log_det_prec += std::log(std::abs(LU(j, j)));
  out.log_det_sigma = -log_det_prec;
  out.fit_trace = (C * out.sigma).trace();

  out.v = Eigen::VectorXd::Zero(family.total_size());
  out.stat.assign(family.size(), 0.0);
  col = 0;
  for (std::size_t a : active) {
    const int n = family.card(a);
    out.v.segment(family.offset(a), n) = v_act.segment(col, n);
    out.stat[a] = v_act.segment(col, n).squaredNorm() + out.sigma.block(col, col, n, n).trace();
    col += n;
  }
  return out;
}

}  // namespace gwl
