#include "gwl/datagen.hpp"

#include <cmath>
#include <stdexcept>

namespace gwl {

Scenario parse_scenario(const std::string& name) {
  if (name == "one-var") return Scenario::OneVar;
  if (name == "two-var") return Scenario::TwoVar;
  if (name == "singletons") return Scenario::Singletons;
  if (name == "one-group") return Scenario::OneGroup;
  if (name == "overlapping") return Scenario::Overlapping;
  if (name == "custom") return Scenario::Custom;
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::OneVar: return "one-var";
    case Scenario::TwoVar: return "two-var";
    case Scenario::Singletons: return "singletons";
    case Scenario::OneGroup: return "one-group";
    case Scenario::Overlapping: return "overlapping";
    case Scenario::Custom: return "custom";
  }
  return "custom";
}

GroupFamily prefix_family(int P) {
  std::vector<Group> groups;
  for (int i = 0; i < P; ++i) groups.push_back({i});
  for (int q = 2; q <= P; ++q) {
    Group g(q);
    for (int i = 0; i < q; ++i) g[i] = i;
    groups.push_back(std::move(g));
  }
  return GroupFamily(P, std::move(groups));
}

GroupFamily true_family(const ScenarioSpec& spec) {
  switch (spec.scenario) {
    case Scenario::OneVar:
      return GroupFamily(1, {{0}}, {spec.f_relevant});
    case Scenario::TwoVar:
      return GroupFamily(2, {{0}, {1}, {0, 1}}, {spec.f_relevant, spec.f_relevant, spec.f_pair});
    case Scenario::Custom:
      return spec.custom;
    default: break;
  }
  if (spec.P < 5) throw std::invalid_argument("the prefix scenarios need P >= 5");
  GroupFamily fam = prefix_family(spec.P);
  std::vector<double> f(fam.size(), spec.f_irrelevant);
  for (std::size_t a = 0; a < fam.size(); ++a) {
    const Group& g = fam.group(a);
    bool relevant = false;
    if (spec.scenario == Scenario::Singletons)
      relevant = a < static_cast<std::size_t>(spec.P) && g[0] < 5;
    else if (spec.scenario == Scenario::OneGroup)
      relevant = a >= static_cast<std::size_t>(spec.P) && g.size() == 5;
    else
      relevant = g.front() == 0 && g.size() <= 5;  // {1}, {1,2}, ..., {1..5}
    if (relevant) f[a] = spec.f_relevant;
  }
  fam.set_weights(std::move(f));
  return fam;
}

double total_signal_variance(const GroupFamily& family, const PriorConfig& prior) {
  double total = 0.0;
  for (double v : explained_variance(family, prior)) total += v;
  return total;
}

GeneratedData gen_tasks(const ScenarioSpec& spec) {
  if (spec.K < 1) throw std::invalid_argument("K must be >= 1");
  GeneratedData out;
  out.family = true_family(spec);
  out.sigma2 = spec.sigma2 > 0.0
                   ? spec.sigma2
                   : total_signal_variance(out.family, spec.prior) / out.family.num_vars();
  Rng rng(spec.seed);
  std::normal_distribution<double> noise(0.0, std::sqrt(out.sigma2));
  const GroupFamily& fam = out.family;
  out.tasks.reserve(spec.K);
  out.w.reserve(spec.K);
  for (int k = 0; k < spec.K; ++k) {
    Eigen::VectorXd v(fam.total_size());
    for (std::size_t a = 0; a < fam.size(); ++a)
      v.segment(fam.offset(a), fam.card(a)) = sample(spec.prior, fam.card(a), fam.weight(a), rng);
    Eigen::VectorXd w = expand(fam, v);
    Eigen::VectorXd y = w;
    for (int i = 0; i < y.size(); ++i) y[i] += noise(rng);
    out.tasks.push_back(Task::identity(std::move(y)));
    out.w.push_back(std::move(w));
  }
  return out;
}

std::vector<Eigen::VectorXd> add_noise(const std::vector<Eigen::VectorXd>& signals, double sigma2,
                                       Rng& rng) {
  if (sigma2 < 0.0) throw std::domain_error("noise variance must be >= 0");
  std::normal_distribution<double> noise(0.0, std::sqrt(sigma2));
  std::vector<Eigen::VectorXd> out = signals;
  if (sigma2 == 0.0) return out;
  for (Eigen::VectorXd& s : out)
    for (int i = 0; i < s.size(); ++i) s[i] += noise(rng);
  return out;
}

ErrorSummary squared_error(const std::vector<Eigen::VectorXd>& truth,
                           const std::vector<Eigen::VectorXd>& estimate) {
  if (truth.size() != estimate.size() || truth.empty())
    throw std::invalid_argument("signal lists must be nonempty and of equal length");
  const double n = static_cast<double>(truth.size());
  double sum = 0.0, sq = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double e = (truth[k] - estimate[k]).squaredNorm();
    sum += e;
    sq += e * e;
  }
  ErrorSummary out;
  out.mean = sum / n;
  const double var = n > 1 ? (sq - n * out.mean * out.mean) / (n - 1) : 0.0;
  out.half_width = 1.96 * std::sqrt(std::max(var, 0.0) / n);
  return out;
}

}  // namespace gwl
