#pragma once

#include <random>
#include <span>
#include <string>

#include <Eigen/Core>

namespace gwl {

using Rng = std::mt19937_64;

enum class PriorFamily { StudentT, GeneralizedGaussian };

// Isotropic super-Gaussian prior on a group block v_A, parameterized by a
// shape and, at call sites, by the group's inverse scale f(A). The density
// depends on the group only through its cardinality.
struct PriorConfig {
  PriorFamily family = PriorFamily::StudentT;
  double shape = 1.5;  // a for Student's t, gamma in (0, 2) for generalized Gaussian

  static PriorConfig student_t(double a);
  static PriorConfig generalized_gaussian(double gamma);

  // Throws std::domain_error when the shape is outside the family's range.
  void validate() const;
  std::string name() const;
};

PriorFamily parse_prior_family(const std::string& name);

/// log p(v | f) for a block of length |v| = card.
double log_density(const PriorConfig& prior, double f, std::span<const double> v);

/// Same as log_density, evaluated from the squared norm only.
double log_density_sq(const PriorConfig& prior, int card, double f, double sq_norm);

/// Conjugate function phi_A(zeta) of the variational representation
///   log p(v|f) = (card/2) log f + sup_zeta [ -|v|^2 f / (2 zeta) - phi(zeta) ].
double phi(const PriorConfig& prior, int card, double zeta);

/// phi splits as phi_offset(card) + phi_varying(card, zeta); hot loops cache
/// the offset once per group.
double phi_offset(const PriorConfig& prior, int card);
double phi_varying(const PriorConfig& prior, int card, double zeta);

/// argmin_{z > 0} phi(z) + f s / (2 z), with s = |v_A|^2 + tr Sigma_AA.
double zeta_argmin(const PriorConfig& prior, int card, double f, double s);

/// E |v_A|^2 under p(.|f). Throws std::domain_error for Student's t with a <= 1.
double expected_sq_norm(const PriorConfig& prior, int card, double f);

/// Draw one block v_A ~ p(.|f).
Eigen::VectorXd sample(const PriorConfig& prior, int card, double f, Rng& rng);

/// Per-task objective contribution of a group whose inverse scale has gone to
/// infinity: min_z [ phi(z) - (card/2) log(2 pi z) ]. This is the limit of the
/// group's own terms when its posterior collapses onto its prior.
double collapsed_group_cost(const PriorConfig& prior, int card);

/// Typical per-coordinate scale of the standardized prior, used for
/// initialization: E u^2 per coordinate when finite, 1/a otherwise.
double unit_scale(const PriorConfig& prior);

namespace detail {
// Closed-form minimizer for the generalized Gaussian and the numeric fallback,
// exposed for tests.
double gg_zeta_closed_form(double gamma, double fs);
double zeta_argmin_numeric(const PriorConfig& prior, int card, double f, double s);
}  // namespace detail

}  // namespace gwl
