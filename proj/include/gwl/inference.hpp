#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gwl/model.hpp"
#include "gwl/priors.hpp"

namespace gwl {

enum class UpdatePath { Auto, Naive, WoodburyP, WoodburyN, IdentityDesign };

UpdatePath parse_update_path(const std::string& name);
std::string to_string(UpdatePath path);

struct FitConfig {
  int max_sweeps = 500;
  double rel_tol = 1e-7;  // stop when |J_t - J_{t-1}| < rel_tol |J_{t-1}|
  UpdatePath path = UpdatePath::Auto;  // woodbury-p falls back to auto once coverage is lost
  bool tie_f = false;       // one shared f for every group (LASSO-like)
  bool warm_start = false;  // take the family's weights as the initial f
  double f_cap = 1e12;      // f above this is promoted to +inf
  double zeta_floor = 1e-12;
  void validate() const;
};

// Result of solving the Gaussian part (Sigma, v) of one task for fixed
// zeta, f and sigma2. Irrelevant groups have zero blocks and zero statistics.
struct TaskSolution {
  Eigen::VectorXd v;         // concatenated blocks
  std::vector<double> stat;  // |v_A|^2 + tr Sigma_AA
  double log_det_sigma = 0.0;
  double fit_trace = 0.0;    // tr(M^T X^T X M Sigma)
  double residual_sq = 0.0;  // |y - X M v|^2
};

// Extra terms the identity-design objective is written with.
struct IdentityTerms {
  double sum_log_noise_plus_xi = 0.0;  // sum_i log(sigma2 + xi_i)
  double sum_xi_ratio = 0.0;           // sum_i xi_i / (xi_i + sigma2)
};

enum class WoodburyMode { P, N };

/// Dense solve of the (sum |A|)-dimensional system.
TaskSolution update_task_naive(const Task& task, const GroupFamily& family,
                               std::span<const double> zeta, double sigma2);

/// Matrix-inversion-lemma solve through a P x P or N x N system.
TaskSolution update_task_woodbury(const Task& task, const GroupFamily& family,
                                  std::span<const double> zeta, double sigma2, WoodburyMode mode);

/// X = I: all posterior quantities are diagonal, no factorization.
TaskSolution update_task_identity_design(const Task& task, const GroupFamily& family,
                                         std::span<const double> zeta, double sigma2,
                                         IdentityTerms* terms = nullptr);

UpdatePath select_path(const Task& task, const GroupFamily& family);

TaskSolution update_task(const Task& task, const GroupFamily& family,
                         std::span<const double> zeta, double sigma2, UpdatePath path);

/// Regularized type-II MAP update f = K (beta + card/2) / (sum_k stat/zeta / 2);
/// a zero denominator yields +inf.
double update_f(double sum_stat_over_zeta, int num_tasks, int card, double beta);

/// Shared f across all groups: K sum_A (beta + |A|/2) / (sum_k sum_A stat/zeta / 2).
double update_f_tied(double total_stat_over_zeta, int num_tasks, int total_card, int num_groups,
                     double beta);

/// sigma2 = sum_k (|r_k|^2 + trace_k) / sum_k N_k, floored at machine epsilon.
double update_sigma2(double total_residual_plus_trace, long total_obs);

struct FitResult {
  GroupFamily family;  // with learned f
  VariationalState state;
  std::vector<double> objective_trace;  // one entry per sweep
  std::vector<Eigen::VectorXd> w;       // posterior means per task
  int sweeps = 0;
  bool converged = false;
  double sigma2 = 0.0;
};

/// Default initial f: every group's per-coordinate prior variance equals
/// the empirical second moment of y divided by the number of groups.
std::vector<double> default_initial_weights(const Dataset& data, const GroupFamily& family,
                                            const PriorConfig& prior);

FitResult fit(const Dataset& data, const GroupFamily& family, const PriorConfig& prior,
              const HyperParams& hp, const FitConfig& cfg);

}  // namespace gwl
