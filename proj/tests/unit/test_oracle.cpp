#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gwl/oracle.hpp"
#include "gwl/priors.hpp"
#include "helpers.hpp"

using namespace gwl;

TEST_SUITE("oracle") {

TEST_CASE("sentinel f gives the noise likelihood") {
  std::vector<double> y{0.3, -1.2, 2.0};
  double ref = 0;
  for (double v : y) ref += -0.5 * std::log(2 * std::numbers::pi * 2.0) - v * v / 4.0;
  CHECK(marginal_loglik_1d(y, kIrrelevant, 1.5, 2.0).value == doctest::Approx(ref));
  CHECK(marginal_loglik_1d_scale_mixture(y, kIrrelevant, 1.5, 2.0) == doctest::Approx(ref));
}

TEST_CASE("quadrature is stable under refinement") {
  for (double yv : {0.0, 1.5, -7.0, 40.0}) {
    std::vector<double> y{yv};
    for (double f : {0.02, 1.0, 50.0}) {
      QuadratureOptions coarse, fine;
      fine.resolution = 2 * coarse.resolution;
      const auto a = marginal_loglik_1d(y, f, 1.5, 1.0, coarse);
      const auto b = marginal_loglik_1d(y, f, 1.5, 1.0, fine);
      CHECK(std::abs(a.value - b.value) < 1e-6);
      CHECK_FALSE(a.boundary_warning);
    }
  }
}

TEST_CASE("narrow grids are flagged") {
  std::vector<double> y{0.0};
  QuadratureOptions narrow;
  narrow.extent = 1.0;
  CHECK(marginal_loglik_1d(y, 1.0, 1.5, 1.0, narrow).boundary_warning);
}

TEST_CASE("symmetric in y") {
  std::vector<double> y{1.7}, my{-1.7};
  CHECK(marginal_loglik_1d(y, 0.5, 1.5, 1.0).value ==
        doctest::Approx(marginal_loglik_1d(my, 0.5, 1.5, 1.0).value).epsilon(1e-12));
}

TEST_CASE("v-space and scale-space integrals agree") {
  Rng rng(3);
  const PriorConfig prior = PriorConfig::student_t(1.5);
  for (double f : {0.02, 0.3, 5.0, 50.0}) {
    std::vector<double> y;
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int k = 0; k < 20; ++k) y.push_back(sample(prior, 1, f, rng)[0] + noise(rng));
    const double a = marginal_loglik_1d(y, f, 1.5, 1.0).value;
    const double b = marginal_loglik_1d_scale_mixture(y, f, 1.5, 1.0);
    CHECK(std::abs(a - b) < 1e-7 * std::max(1.0, std::abs(a)));
  }
}

TEST_CASE("grid search") {
  std::vector<double> zeros(100, 0.0);
  std::vector<double> cands = log_spaced(0.02, 50, 14);
  cands.push_back(1e5);
  CHECK(grid_search_f(zeros, cands, 1.5, 1.0, 0.1).best_f == 1e5);
  std::vector<double> one{3.0};
  CHECK(grid_search_f(zeros, one, 1.5, 1.0, 0.0).best_f == 3.0);

  std::vector<double> rev(cands.rbegin(), cands.rend());
  std::vector<double> y{0.5, -3.0, 10.0, 0.1, 2.2};
  CHECK(grid_search_f(y, cands, 1.5, 1.0, 0.01).best_f == grid_search_f(y, rev, 1.5, 1.0, 0.01).best_f);

  // A strong signal is recovered at or next to the truth.
  Rng rng(8);
  const PriorConfig prior = PriorConfig::student_t(1.5);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> data;
  for (int k = 0; k < 10000; ++k) data.push_back(sample(prior, 1, cands[0], rng)[0] + noise(rng));
  const double best = grid_search_f(data, cands, 1.5, 1.0, 0.0).best_f;
  CHECK(best <= cands[1] * 1.0000001);
}

TEST_CASE("log spaced grid") {
  const auto g = log_spaced(0.02, 50, 14);
  CHECK(g.size() == 14);
  CHECK(g.front() == doctest::Approx(0.02));
  CHECK(g.back() == doctest::Approx(50));
  for (std::size_t i = 2; i < g.size(); ++i)
    CHECK(g[i] / g[i - 1] == doctest::Approx(g[1] / g[0]));
}

TEST_CASE("dense posterior one-variable case") {
  Eigen::MatrixXd X(1, 1);
  X << 1.0;
  Eigen::VectorXd y(1);
  y << 2.0;
  std::vector<double> zeta{1.0};
  const DensePosterior d = dense_posterior(Task::regression(X, y), GroupFamily(1, {{0}}, {1.0}), zeta, 1.0);
  CHECK(d.sigma(0, 0) == doctest::Approx(0.5));
  CHECK(d.v[0] == doctest::Approx(1.0));
}

TEST_CASE("dense posterior size guard") {
  GroupFamily big = GroupFamily::singletons(2000);
  std::vector<double> zeta(2000, 1.0);
  CHECK_THROWS_AS(dense_posterior(Task::identity(Eigen::VectorXd::Zero(2000)), big, zeta, 1.0),
                  StructuralError);
}

}  // TEST_SUITE
