#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "gwl/inference.hpp"
#include "gwl/model.hpp"
#include "helpers.hpp"

using namespace gwl;

namespace {

// Negative of the collapsed bound: -log N(y | 0, X M Z F^-1 M' X' + s2 I)
// - sum_A [ |A|/2 log f + |A|/2 log(2 pi zeta/f) - phi(zeta) ].
double collapsed_bound(const Task& task, const GroupFamily& fam, const std::vector<double>& zeta,
                       const PriorConfig& prior, double s2) {
  const int P = fam.num_vars();
  const Eigen::MatrixXd X =
      task.is_identity() ? Eigen::MatrixXd::Identity(P, P) : Eigen::MatrixXd(task.X());
  Eigen::MatrixXd cov = s2 * Eigen::MatrixXd::Identity(X.rows(), X.rows());
  for (std::size_t a = 0; a < fam.size(); ++a) {
    // each coordinate of v_A contributes one column of X M
    for (int i : fam.group(a)) {
      Eigen::VectorXd col = X.col(i);
      cov += (zeta[a] / fam.weight(a)) * col * col.transpose();
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  const Eigen::VectorXd& y = task.y();
  const double quad = y.dot(llt.solve(y));
  const double logdet = 2 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  const double n = static_cast<double>(y.size());
  double out = 0.5 * quad + 0.5 * logdet + 0.5 * n * std::log(2 * std::numbers::pi);
  for (std::size_t a = 0; a < fam.size(); ++a) {
    const int d = fam.card(a);
    const double f = fam.weight(a);
    out -= 0.5 * d * std::log(f) + 0.5 * d * std::log(2 * std::numbers::pi * zeta[a] / f) -
           phi(prior, d, zeta[a]);
  }
  return out;
}

TaskState state_from(const TaskSolution& sol, const std::vector<double>& zeta) {
  return {sol.v, zeta, sol.stat, sol.log_det_sigma, sol.fit_trace};
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("expand scatters and sums") {
  GroupFamily f1(3, {{0}, {1, 2}});
  Eigen::VectorXd v(3);
  v << 5, 1, 2;
  CHECK(expand(f1, v) == Eigen::Vector3d(5, 1, 2));

  GroupFamily f2(2, {{0}, {1}, {0, 1}});
  Eigen::VectorXd u(4);
  u << 1, 1, 1, 1;
  CHECK(expand(f2, u) == Eigen::Vector2d(2, 2));
  CHECK(expand(f2, Eigen::VectorXd::Zero(4)).isZero());
  CHECK_THROWS_AS(expand(f2, Eigen::VectorXd::Zero(3)), StructuralError);
}

TEST_CASE("expand is linear") {
  Rng rng(3);
  GroupFamily fam = testutil::random_family(8, 6, 4, rng);
  const Eigen::VectorXd a = testutil::randn(fam.total_size(), rng);
  const Eigen::VectorXd b = testutil::randn(fam.total_size(), rng);
  const Eigen::VectorXd lhs = expand(fam, 2.5 * a - 0.5 * b);
  const Eigen::VectorXd rhs = 2.5 * expand(fam, a) - 0.5 * expand(fam, b);
  CHECK((lhs - rhs).norm() < 1e-12);
}

TEST_CASE("family invariants") {
  CHECK_THROWS_AS(GroupFamily(3, {{0}, {0}}), StructuralError);
  CHECK_THROWS_AS(GroupFamily(3, {{}}), StructuralError);
  CHECK_THROWS_AS(GroupFamily(3, {{3}}), StructuralError);
  CHECK_THROWS_AS(GroupFamily(3, {{0}}, {0.0}), StructuralError);
  GroupFamily f(3, {{2, 0}, {1}}, {1.0, kIrrelevant});
  CHECK(f.group(0) == Group{0, 2});
  CHECK(f.covers_all());
  CHECK_FALSE(f.covers_all_finite());
  CHECK(f.find({1}).value() == 1);
}

TEST_CASE("objective of the one-variable example") {
  // K=1, X=I, P=1, y=0, v=0, zeta=f=sigma2=1, beta=0, a=1.5; Sigma = 1/2.
  const PriorConfig prior = PriorConfig::student_t(1.5);
  GroupFamily fam(1, {{0}}, {1.0});
  Dataset data{Task::identity(Eigen::VectorXd::Zero(1))};
  VariationalState st;
  st.tasks.push_back({Eigen::VectorXd::Zero(1), {1.0}, {0.5}, std::log(0.5), 0.5});
  HyperParams hp;
  const double log2pi = std::log(2 * std::numbers::pi);
  const double phi1 = 1 + 0.5 * log2pi - 2 + 2 * std::log(2.0) + std::lgamma(1.5);
  // resid/2 + f s/(2 zeta) - logdet/2 + N/2 log 2pi + tr/2 - |A|/2 - |A|/2 log f - |A|/2 log 2pi + phi
  const double expect = 0 + 0.25 + 0.5 * std::log(2.0) + 0.5 * log2pi + 0.25 - 0.5 - 0 -
                        0.5 * log2pi + phi1;
  CHECK(objective(st, data, fam, prior, hp) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(expect == doctest::Approx(0.5 * std::log(2.0) + phi1));

  Dataset twice{data[0], data[0]};
  VariationalState st2;
  st2.tasks = {st.tasks[0], st.tasks[0]};
  CHECK(objective(st2, twice, fam, prior, hp) == doctest::Approx(2 * expect).epsilon(1e-14));
}

TEST_CASE("minimizing over v and Sigma recovers the collapsed bound") {
  Rng rng(11);
  const PriorConfig prior = PriorConfig::student_t(1.5);
  for (int rep = 0; rep < 30; ++rep) {
    auto inst = testutil::random_instance(rng, rep % 2 == 0, 8);
    const TaskSolution sol = update_task_naive(inst.task, inst.family, inst.zeta, inst.sigma2);
    VariationalState st;
    st.tasks.push_back(state_from(sol, inst.zeta));
    HyperParams hp;
    hp.sigma2 = inst.sigma2;
    const double J = objective(st, {inst.task}, inst.family, prior, hp);
    const double ref = collapsed_bound(inst.task, inst.family, inst.zeta, prior, inst.sigma2);
    CHECK(testutil::rel_diff(J, ref) < 1e-9);
  }
}

TEST_CASE("objective is stationary in v at the update") {
  Rng rng(5);
  const PriorConfig prior = PriorConfig::student_t(2.0);
  for (int rep = 0; rep < 10; ++rep) {
    auto inst = testutil::random_instance(rng, rep % 2 == 1, 6);
    const TaskSolution sol = update_task_naive(inst.task, inst.family, inst.zeta, inst.sigma2);
    HyperParams hp;
    hp.sigma2 = inst.sigma2;
    const Dataset data{inst.task};
    auto J = [&](const Eigen::VectorXd& v) {
      TaskState ts = state_from(sol, inst.zeta);
      ts.v = v;
      for (std::size_t a = 0; a < inst.family.size(); ++a) {
        const int off = inst.family.offset(a), n = inst.family.card(a);
        ts.stat[a] += v.segment(off, n).squaredNorm() - sol.v.segment(off, n).squaredNorm();
      }
      VariationalState st;
      st.tasks.push_back(ts);
      return objective(st, data, inst.family, prior, hp);
    };
    const double h = 1e-5;
    double gmax = 0;
    for (int j = 0; j < sol.v.size(); ++j) {
      Eigen::VectorXd vp = sol.v, vm = sol.v;
      vp[j] += h;
      vm[j] -= h;
      gmax = std::max(gmax, std::abs(J(vp) - J(vm)) / (2 * h));
    }
    CHECK(gmax < 1e-6);
  }
}

TEST_CASE("explained variance") {
  const PriorConfig prior = PriorConfig::student_t(1.5);
  GroupFamily one(3, {{0, 1, 2}}, {0.7});
  CHECK(explained_variance_share(one, prior)[0] == doctest::Approx(1.0));

  GroupFamily two(2, {{0}, {1}}, {0.2, 200.0});
  const auto v = explained_variance(two, prior);
  CHECK(v[0] == doctest::Approx(10.0));
  CHECK(v[1] == doctest::Approx(0.01));
  const auto s = explained_variance_share(two, prior);
  CHECK(s[0] == doctest::Approx(10.0 / 10.01));
  CHECK(s[0] > 0.998);

  GroupFamily scaled(2, {{0}, {1}}, {0.6, 600.0});
  const auto s2 = explained_variance_share(scaled, prior);
  CHECK(s2[0] == doctest::Approx(s[0]).epsilon(1e-14));
  CHECK(explained_variance(scaled, prior)[0] == doctest::Approx(v[0] / 3));

  CHECK_THROWS_AS(explained_variance(one, PriorConfig::student_t(1.0)), std::domain_error);
}

}  // TEST_SUITE
