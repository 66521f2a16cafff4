#include "gwl/priors.hpp"

#include <cassert>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/minima.hpp>

namespace gwl {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double lgam(double x) { return boost::math::lgamma(x); }

void check_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw std::domain_error(std::string("non-finite ") + what);
}

// log of the normalizer of exp(-|x|^gamma) over R^d.
double gg_log_norm(double gamma, int d) {
  return std::log(gamma / 2.0) + lgam(d / 2.0) - 0.5 * d * std::log(std::numbers::pi) -
         lgam(d / gamma);
}

// phi(z) for the generalized Gaussian is -log C + kappa * z^r.
double gg_kappa(double gamma) {
  return (1.0 / gamma - 0.5) * std::pow(gamma, 2.0 / (2.0 - gamma));
}

}  // namespace

PriorConfig PriorConfig::student_t(double a) {
  PriorConfig p{PriorFamily::StudentT, a};
  p.validate();
  return p;
}

PriorConfig PriorConfig::generalized_gaussian(double gamma) {
  PriorConfig p{PriorFamily::GeneralizedGaussian, gamma};
  p.validate();
  return p;
}

void PriorConfig::validate() const {
  if (!std::isfinite(shape) || shape <= 0.0)
    throw std::domain_error("prior shape must be positive and finite");
  if (family == PriorFamily::GeneralizedGaussian && shape >= 2.0)
    throw std::domain_error("generalized Gaussian shape must lie in (0, 2)");
}

std::string PriorConfig::name() const {
  return family == PriorFamily::StudentT ? "student_t" : "generalized_gaussian";
}

PriorFamily parse_prior_family(const std::string& name) {
  if (name == "student_t" || name == "studentt" || name == "t") return PriorFamily::StudentT;
  if (name == "generalized_gaussian" || name == "gg") return PriorFamily::GeneralizedGaussian;
  throw std::invalid_argument("unknown prior family '" + name + "'");
}

double log_density_sq(const PriorConfig& prior, int card, double f, double sq_norm) {
  check_finite(f, "inverse scale");
  check_finite(sq_norm, "block norm");
  if (f <= 0.0) throw std::domain_error("inverse scale must be positive");
  if (card < 1) throw std::domain_error("group cardinality must be >= 1");
  const double d = card;
  const double u2 = sq_norm * f;
  if (prior.family == PriorFamily::StudentT) {
    const double a = prior.shape;
    const double b = a + 0.5 * d;
    return 0.5 * d * std::log(f) + lgam(b) - lgam(a) - 0.5 * d * kLog2Pi -
           b * std::log1p(0.5 * u2);
  }
  const double g = prior.shape;
  return 0.5 * d * std::log(f) + gg_log_norm(g, card) - std::pow(u2, 0.5 * g);
}

double log_density(const PriorConfig& prior, double f, std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) {
    check_finite(x, "block entry");
    sq += x * x;
  }
  return log_density_sq(prior, static_cast<int>(v.size()), f, sq);
}

double phi_offset(const PriorConfig& prior, int card) {
  const double d = card;
  if (prior.family == PriorFamily::StudentT) {
    const double a = prior.shape;
    const double b = a + 0.5 * d;
    return 0.5 * d * kLog2Pi - b + b * std::log(b) - lgam(b) + lgam(a);
  }
  return -gg_log_norm(prior.shape, card);
}

double phi_varying(const PriorConfig& prior, int card, double zeta) {
  if (prior.family == PriorFamily::StudentT)
    return 1.0 / zeta + (prior.shape + 0.5 * card) * std::log(zeta);
  const double g = prior.shape;
  return gg_kappa(g) * std::pow(zeta, g / (2.0 - g));
}

double phi(const PriorConfig& prior, int card, double zeta) {
  if (!(zeta > 0.0) || !std::isfinite(zeta)) throw std::domain_error("zeta must be positive");
  return phi_offset(prior, card) + phi_varying(prior, card, zeta);
}

namespace detail {

double gg_zeta_closed_form(double gamma, double fs) {
  return std::pow(fs, 0.5 * (2.0 - gamma)) / gamma;
}

double zeta_argmin_numeric(const PriorConfig& prior, int card, double f, double s) {
  const double fs = f * s;
  auto obj = [&](double log_z) {
    const double z = std::exp(log_z);
    return phi(prior, card, z) + 0.5 * fs / z;
  };
  auto [lz, val] = boost::math::tools::brent_find_minima(obj, -60.0, 60.0, 52);
  (void)val;
  return std::exp(lz);
}

}  // namespace detail

double zeta_argmin(const PriorConfig& prior, int card, double f, double s) {
  check_finite(f, "inverse scale");
  check_finite(s, "block statistic");
  if (s < 0.0) throw std::domain_error("block statistic must be nonnegative");
  if (prior.family == PriorFamily::StudentT)
    return (1.0 + 0.5 * f * s) / (prior.shape + 0.5 * card);

  const double z = detail::gg_zeta_closed_form(prior.shape, f * s);
  if (!(z > 0.0) || !std::isfinite(z)) return detail::zeta_argmin_numeric(prior, card, f, s);
#ifndef NDEBUG
  {
    const double zn = detail::zeta_argmin_numeric(prior, card, f, s);
    assert(std::abs(std::log(zn / z)) < 1e-4);
  }
#endif
  return z;
}

double expected_sq_norm(const PriorConfig& prior, int card, double f) {
  if (!(f > 0.0)) throw std::domain_error("inverse scale must be positive");
  if (std::isinf(f)) return 0.0;
  const double d = card;
  if (prior.family == PriorFamily::StudentT) {
    if (prior.shape <= 1.0)
      throw std::domain_error("infinite variance: Student's t second moment needs a > 1");
    return d / (f * (prior.shape - 1.0));
  }
  const double g = prior.shape;
  return std::exp(lgam(d / g + 2.0 / g) - lgam(d / g)) / f;
}

Eigen::VectorXd sample(const PriorConfig& prior, int card, double f, Rng& rng) {
  if (!(f > 0.0) || !std::isfinite(f)) throw std::domain_error("inverse scale must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(card);
  for (int i = 0; i < card; ++i) v[i] = normal(rng);

  if (prior.family == PriorFamily::StudentT) {
    // Inverse-gamma(shape a, rate 1) mixing scale, divided by f.
    std::gamma_distribution<double> gamma(prior.shape, 1.0);
    const double s = 1.0 / gamma(rng);
    return v * std::sqrt(s / f);
  }
  // |u|^gamma ~ Gamma(card / gamma, 1) with a uniform direction.
  const double g = prior.shape;
  std::gamma_distribution<double> radial(card / g, 1.0);
  const double r = std::pow(radial(rng), 1.0 / g);
  return v.normalized() * (r / std::sqrt(f));
}

double collapsed_group_cost(const PriorConfig& prior, int card) {
  const double d = card;
  if (prior.family == PriorFamily::StudentT) {
    const double a = prior.shape;
    const double b = a + 0.5 * d;
    return a - a * std::log(a) - b + b * std::log(b) - lgam(b) + lgam(a);
  }
  const double g = prior.shape;
  const double r = g / (2.0 - g);
  const double kappa = gg_kappa(g);
  // kappa r z^r = d / 2 at the minimum.
  const double zr = d / (2.0 * kappa * r);
  return kappa * zr - 0.5 * d * std::log(zr) / r - gg_log_norm(g, card) - 0.5 * d * kLog2Pi;
}

double unit_scale(const PriorConfig& prior) {
  if (prior.family == PriorFamily::StudentT)
    return prior.shape > 1.0 ? 1.0 / (prior.shape - 1.0) : 1.0 / prior.shape;
  return expected_sq_norm(prior, 1, 1.0);
}

}  // namespace gwl
