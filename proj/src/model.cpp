#include "gwl/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace gwl {
namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

Group make_group(std::vector<int> indices, int num_vars) {
  if (indices.empty()) throw StructuralError("empty group");
  std::sort(indices.begin(), indices.end());
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end())
    throw StructuralError("duplicate index in group");
  if (indices.front() < 0 || indices.back() >= num_vars)
    throw StructuralError("group index out of range [1, " + std::to_string(num_vars) + "]");
  return indices;
}

GroupFamily::GroupFamily(int num_vars, std::vector<Group> groups, std::vector<double> f)
    : num_vars_(num_vars), groups_(std::move(groups)), f_(std::move(f)) {
  if (num_vars_ < 1) throw StructuralError("family needs at least one variable");
  if (f_.empty()) f_.assign(groups_.size(), 1.0);
  if (f_.size() != groups_.size()) throw StructuralError("one weight per group required");
  std::set<Group> seen;
  offsets_.reserve(groups_.size());
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    Group& g = groups_[i];
    g = make_group(std::move(g), num_vars_);
    if (!seen.insert(g).second) throw StructuralError("duplicate group in family");
    if (!(f_[i] > 0.0)) throw StructuralError("group weights must be positive");
    offsets_.push_back(total_size_);
    total_size_ += static_cast<int>(g.size());
  }
}

void GroupFamily::set_weight(std::size_t i, double f) {
  if (!(f > 0.0)) throw StructuralError("group weights must be positive");
  f_.at(i) = f;
}

void GroupFamily::set_weights(std::vector<double> f) {
  if (f.size() != groups_.size()) throw StructuralError("one weight per group required");
  for (double x : f)
    if (!(x > 0.0)) throw StructuralError("group weights must be positive");
  f_ = std::move(f);
}

bool GroupFamily::covers_all() const {
  std::vector<char> hit(num_vars_, 0);
  for (const auto& g : groups_)
    for (int i : g) hit[i] = 1;
  return std::all_of(hit.begin(), hit.end(), [](char c) { return c != 0; });
}

bool GroupFamily::covers_all_finite() const {
  std::vector<char> hit(num_vars_, 0);
  for (std::size_t a = 0; a < groups_.size(); ++a)
    if (!is_irrelevant(f_[a]))
      for (int i : groups_[a]) hit[i] = 1;
  return std::all_of(hit.begin(), hit.end(), [](char c) { return c != 0; });
}

std::optional<std::size_t> GroupFamily::find(const Group& g) const {
  auto it = std::find(groups_.begin(), groups_.end(), g);
  if (it == groups_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - groups_.begin());
}

GroupFamily GroupFamily::singletons(int num_vars) {
  std::vector<Group> groups;
  groups.reserve(num_vars);
  for (int i = 0; i < num_vars; ++i) groups.push_back({i});
  return GroupFamily(num_vars, std::move(groups));
}

Task Task::identity(Eigen::VectorXd y) {
  if (y.size() < 1) throw StructuralError("task needs at least one observation");
  if (!y.allFinite()) throw StructuralError("non-finite response");
  Task t;
  t.y_ = std::move(y);
  return t;
}

Task Task::regression(Eigen::MatrixXd X, Eigen::VectorXd y) {
  if (y.size() < 1) throw StructuralError("task needs at least one observation");
  if (X.rows() != y.size()) throw StructuralError("design rows must match response length");
  if (!X.allFinite() || !y.allFinite()) throw StructuralError("non-finite task data");
  Task t;
  t.gram_ = X.transpose() * X;
  t.xty_ = X.transpose() * y;
  t.design_ = std::move(X);
  t.y_ = std::move(y);
  return t;
}

const Eigen::MatrixXd& Task::X() const {
  if (!design_) throw StructuralError("identity task has no explicit design");
  return *design_;
}

const Eigen::MatrixXd& Task::gram() const {
  if (!design_) throw StructuralError("identity task has no explicit design");
  return gram_;
}

const Eigen::VectorXd& Task::Xty() const {
  if (!design_) throw StructuralError("identity task has no explicit design");
  return xty_;
}

Eigen::VectorXd Task::predict(const Eigen::VectorXd& w) const {
  if (design_) return (*design_) * w;
  return w;
}

void HyperParams::validate() const {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw std::domain_error("sigma2 must be positive");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::domain_error("beta must be >= 0");
}

Eigen::VectorXd expand(const GroupFamily& family, const Eigen::VectorXd& v) {
  if (v.size() != family.total_size())
    throw StructuralError("block vector length does not match the family");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(family.num_vars());
  for (std::size_t a = 0; a < family.size(); ++a) {
    const Group& g = family.group(a);
    const int off = family.offset(a);
    for (std::size_t j = 0; j < g.size(); ++j) w[g[j]] += v[off + static_cast<int>(j)];
  }
  return w;
}

double objective(const VariationalState& state, const Dataset& data, const GroupFamily& family,
                 const PriorConfig& prior, const HyperParams& hp, double f_cap) {
  if (state.tasks.size() != data.size()) throw StructuralError("state/task count mismatch");
  const double K = static_cast<double>(data.size());
  const double s2 = hp.sigma2;
  const double log_s2 = std::log(s2);

  // Per-group constants that do not depend on the task.
  std::vector<double> const_terms(family.size(), 0.0);
  std::vector<double> phi_const(family.size(), 0.0);
  double active_size = 0.0;
  for (std::size_t a = 0; a < family.size(); ++a) {
    const int d = family.card(a);
    const double f = family.weight(a);
    if (is_irrelevant(f)) {
      const_terms[a] = collapsed_group_cost(prior, d);
    } else {
      const_terms[a] = -0.5 * d * (std::log(f) + kLog2Pi);
      phi_const[a] = phi_offset(prior, d);
      active_size += d;
    }
  }

  double total = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const Task& task = data[k];
    const TaskState& ts = state.tasks[k];
    if (ts.v.size() != family.total_size() || ts.zeta.size() != family.size() ||
        ts.stat.size() != family.size())
      throw StructuralError("task state shape does not match the family");
    const Eigen::VectorXd w = expand(family, ts.v);
    const double resid = (task.y() - task.predict(w)).squaredNorm();
    const double n = task.num_obs();

    double t = (resid + ts.fit_trace) / (2.0 * s2) - 0.5 * ts.log_det_sigma +
               0.5 * n * (log_s2 + kLog2Pi) - 0.5 * active_size;
    for (std::size_t a = 0; a < family.size(); ++a) {
      const double f = family.weight(a);
      t += const_terms[a];
      if (is_irrelevant(f)) continue;
      const double z = ts.zeta[a];
      if (!(z > 0.0)) throw NumericalError("non-positive zeta in objective");
      t += 0.5 * f / z * ts.stat[a] + phi_const[a] + phi_varying(prior, family.card(a), z);
    }
    total += t;
  }

  double reg = 0.0;
  for (std::size_t a = 0; a < family.size(); ++a) {
    const double f = family.weight(a);
    reg += std::log(is_irrelevant(f) ? f_cap : f);
  }
  return total - K * hp.beta * reg;
}

std::vector<double> explained_variance(const GroupFamily& family, const PriorConfig& prior) {
  std::vector<double> out(family.size());
  for (std::size_t a = 0; a < family.size(); ++a)
    out[a] = expected_sq_norm(prior, family.card(a), family.weight(a));
  return out;
}

std::vector<double> explained_variance_share(const GroupFamily& family, const PriorConfig& prior) {
  std::vector<double> out = explained_variance(family, prior);
  double total = 0.0;
  for (double x : out) total += x;
  if (total > 0.0)
    for (double& x : out) x /= total;
  return out;
}

}  // namespace gwl
