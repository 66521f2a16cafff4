#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "gwl/priors.hpp"

namespace gwl {

// Raised when shapes, index sets or coverage do not line up.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when the fitted state becomes non-finite.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sorted, duplicate-free, 0-based variable indices.
using Group = std::vector<int>;

/// Inverse scale of an irrelevant group.
inline constexpr double kIrrelevant = std::numeric_limits<double>::infinity();

inline bool is_irrelevant(double f) { return std::isinf(f); }

// Ordered family of variable groups over {0..P-1}, each carrying an inverse
// scale f(A) in (0, +inf]. Block offsets realize the expansion map M: the
// concatenated latent vector v has the blocks laid out in family order.
class GroupFamily {
 public:
  GroupFamily() = default;
  GroupFamily(int num_vars, std::vector<Group> groups, std::vector<double> f = {});

  int num_vars() const { return num_vars_; }
  std::size_t size() const { return groups_.size(); }
  const std::vector<Group>& groups() const { return groups_; }
  const Group& group(std::size_t i) const { return groups_[i]; }
  int card(std::size_t i) const { return static_cast<int>(groups_[i].size()); }
  int offset(std::size_t i) const { return offsets_[i]; }
  int total_size() const { return total_size_; }

  const std::vector<double>& weights() const { return f_; }
  double weight(std::size_t i) const { return f_[i]; }
  void set_weight(std::size_t i, double f);
  void set_weights(std::vector<double> f);

  bool covers_all() const;
  /// Every variable is covered by at least one group with finite f.
  bool covers_all_finite() const;
  std::optional<std::size_t> find(const Group& g) const;

  static GroupFamily singletons(int num_vars);

 private:
  int num_vars_ = 0;
  std::vector<Group> groups_;
  std::vector<double> f_;
  std::vector<int> offsets_;
  int total_size_ = 0;
};

/// Normalize an index list into a Group (sort, reject duplicates/out of range).
Group make_group(std::vector<int> indices, int num_vars);

// One regression task. An empty design means X = I (denoising); then N = P.
class Task {
 public:
  static Task identity(Eigen::VectorXd y);
  static Task regression(Eigen::MatrixXd X, Eigen::VectorXd y);

  bool is_identity() const { return !design_.has_value(); }
  int num_obs() const { return static_cast<int>(y_.size()); }
  int num_vars() const { return is_identity() ? num_obs() : static_cast<int>(design_->cols()); }
  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::MatrixXd& X() const;
  const Eigen::MatrixXd& gram() const;  // X^T X
  const Eigen::VectorXd& Xty() const;   // X^T y

  /// X w (or w for identity designs).
  Eigen::VectorXd predict(const Eigen::VectorXd& w) const;

 private:
  Task() = default;
  std::optional<Eigen::MatrixXd> design_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd xty_;
  Eigen::VectorXd y_;
};

using Dataset = std::vector<Task>;

struct HyperParams {
  double sigma2 = 1.0;  // noise variance
  double beta = 0.0;    // hyperprior exponent, p(f) ~ f^beta
  bool learn_sigma2 = false;
  void validate() const;
};

// Per-task variational quantities. Sigma is never stored: only its block
// traces and the two scalar summaries the objective needs.
struct TaskState {
  Eigen::VectorXd v;          // concatenated blocks, family order
  std::vector<double> zeta;   // one per group
  std::vector<double> stat;   // |v_A|^2 + tr Sigma_AA, one per group
  double log_det_sigma = 0.0;
  double fit_trace = 0.0;     // tr(M^T X^T X M Sigma)
};

struct VariationalState {
  std::vector<TaskState> tasks;
};

/// w = M v as an index scatter.
Eigen::VectorXd expand(const GroupFamily& family, const Eigen::VectorXd& v);

/// Variational objective (to be minimized), including the hyperprior term
/// -K beta sum_A log f(A). Groups with f = +inf contribute
/// K * collapsed_group_cost - K beta log(f_cap): their data terms at the
/// f -> inf limit and the hyperprior charged at the promotion cap.
double objective(const VariationalState& state, const Dataset& data, const GroupFamily& family,
                 const PriorConfig& prior, const HyperParams& hp, double f_cap = 1e12);

/// E|v_A|^2 per group under the learned prior (0 for irrelevant groups).
std::vector<double> explained_variance(const GroupFamily& family, const PriorConfig& prior);

/// explained_variance normalized to sum to 1 (all zeros if nothing is explained).
std::vector<double> explained_variance_share(const GroupFamily& family, const PriorConfig& prior);

}  // namespace gwl
