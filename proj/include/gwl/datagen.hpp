#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "gwl/model.hpp"
#include "gwl/priors.hpp"

namespace gwl {

enum class Scenario { OneVar, TwoVar, Singletons, OneGroup, Overlapping, Custom };

Scenario parse_scenario(const std::string& name);
std::string to_string(Scenario s);

struct ScenarioSpec {
  Scenario scenario = Scenario::Singletons;
  int K = 1000;
  int P = 10;
  PriorConfig prior = PriorConfig::student_t(1.5);
  double f_relevant = 0.2;
  double f_irrelevant = 200.0;
  // OneVar: the single group uses f_relevant. TwoVar: the pair uses f_pair,
  // both singletons use f_relevant.
  double f_pair = 1.0;
  double sigma2 = 0.0;  // <= 0: total noise variance P sigma2 equals the total signal variance
  unsigned long long seed = 1;
  GroupFamily custom;  // Custom: groups and their true f
};

/// Groups {1},...,{P} followed by the prefixes {1..Q}, Q = 2..P.
GroupFamily prefix_family(int P);

/// The generating family with its true f for a scenario.
GroupFamily true_family(const ScenarioSpec& spec);

/// sum_A E|v_A|^2 under the true family.
double total_signal_variance(const GroupFamily& family, const PriorConfig& prior);

struct GeneratedData {
  Dataset tasks;
  std::vector<Eigen::VectorXd> w;  // clean signals
  GroupFamily family;              // true family
  double sigma2 = 0.0;             // noise variance actually used
};

/// y^k = w^k + N(0, sigma2 I) with identity design, w^k = sum_A scatter(v_A^k)
/// and v_A^k drawn from the prior with the true f(A).
GeneratedData gen_tasks(const ScenarioSpec& spec);

/// Element-wise i.i.d. N(0, sigma2) noise added to every signal.
std::vector<Eigen::VectorXd> add_noise(const std::vector<Eigen::VectorXd>& signals, double sigma2,
                                       Rng& rng);

/// Mean over tasks of |w - w_hat|^2, with the 1.96 standard-error half-width.
struct ErrorSummary {
  double mean = 0.0;
  double half_width = 0.0;
};
ErrorSummary squared_error(const std::vector<Eigen::VectorXd>& truth,
                           const std::vector<Eigen::VectorXd>& estimate);

}  // namespace gwl
