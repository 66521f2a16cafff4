#pragma once

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "gwl/model.hpp"
#include "gwl/priors.hpp"

namespace testutil {

struct Instance {
  gwl::Task task;
  gwl::GroupFamily family;
  std::vector<double> zeta;
  double sigma2;
};

// Random overlapping family covering {0..P-1}: all singletons plus `extra`
// random groups of size 2..max_size.
inline gwl::GroupFamily random_family(int P, int extra, int max_size, gwl::Rng& rng) {
  std::set<gwl::Group> gs;
  for (int i = 0; i < P; ++i) gs.insert({i});
  std::uniform_int_distribution<int> size(2, std::max(2, std::min(max_size, P)));
  std::vector<int> idx(P);
  for (int i = 0; i < P; ++i) idx[i] = i;
  int tries = 0;
  while (static_cast<int>(gs.size()) < P + extra && P > 1 && ++tries < 1000) {
    std::shuffle(idx.begin(), idx.end(), rng);
    gwl::Group g(idx.begin(), idx.begin() + size(rng));
    std::sort(g.begin(), g.end());
    gs.insert(g);
  }
  std::vector<gwl::Group> groups(gs.begin(), gs.end());
  std::shuffle(groups.begin(), groups.end(), rng);
  std::uniform_real_distribution<double> lf(-2.0, 2.0);
  std::vector<double> f(groups.size());
  for (double& x : f) x = std::exp(lf(rng));
  return gwl::GroupFamily(P, groups, f);
}

inline std::vector<double> random_zeta(std::size_t n, gwl::Rng& rng) {
  std::uniform_real_distribution<double> lz(-1.5, 1.5);
  std::vector<double> z(n);
  for (double& x : z) x = std::exp(lz(rng));
  return z;
}

inline Eigen::VectorXd randn(int n, gwl::Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

inline gwl::Task random_task(int N, int P, bool identity, gwl::Rng& rng) {
  if (identity) return gwl::Task::identity(randn(P, rng, 2.0));
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd X(N, P);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < P; ++j) X(i, j) = g(rng);
  return gwl::Task::regression(X, randn(N, rng, 2.0));
}

inline Instance random_instance(gwl::Rng& rng, bool identity, int max_P = 20) {
  std::uniform_int_distribution<int> pd(1, max_P), nd(1, 2 * max_P), ed(0, 12);
  const int P = pd(rng);
  const int N = identity ? P : nd(rng);
  gwl::GroupFamily fam = random_family(P, ed(rng), 5, rng);
  auto zeta = random_zeta(fam.size(), rng);
  std::uniform_real_distribution<double> ls(-1.0, 1.0);
  return {random_task(N, P, identity, rng), fam, zeta, std::exp(ls(rng))};
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline double rel_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).lpNorm<Eigen::Infinity>() / std::max(1.0, b.lpNorm<Eigen::Infinity>());
}

}  // namespace testutil
