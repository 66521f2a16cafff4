#include "gwl/inference.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace gwl {
namespace {

constexpr int kNaiveMaxSize = 2000;

// zeta/f per group; zero for irrelevant groups.
std::vector<double> prior_scales(const GroupFamily& family, std::span<const double> zeta) {
  if (zeta.size() != family.size()) throw StructuralError("one zeta per group required");
  std::vector<double> h(family.size(), 0.0);
  for (std::size_t a = 0; a < family.size(); ++a) {
    const double f = family.weight(a);
    if (!is_irrelevant(f)) h[a] = zeta[a] / f;
  }
  return h;
}

Eigen::VectorXd coverage(const GroupFamily& family, const std::vector<double>& h) {
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(family.num_vars());
  for (std::size_t a = 0; a < family.size(); ++a)
    for (int i : family.group(a)) xi[i] += h[a];
  return xi;
}

double log_det_prior(const GroupFamily& family, const std::vector<double>& h) {
  double out = 0.0;
  for (std::size_t a = 0; a < family.size(); ++a)
    if (h[a] > 0.0) out += family.card(a) * std::log(h[a]);
  return out;
}

void check_dims(const Task& task, const GroupFamily& family) {
  if (task.num_vars() != family.num_vars())
    throw StructuralError("task has " + std::to_string(task.num_vars()) +
                          " variables, family has " + std::to_string(family.num_vars()));
}

double residual(const Task& task, const GroupFamily& family, const Eigen::VectorXd& v) {
  return (task.y() - task.predict(expand(family, v))).squaredNorm();
}

}  // namespace

UpdatePath parse_update_path(const std::string& name) {
  if (name == "auto") return UpdatePath::Auto;
  if (name == "naive") return UpdatePath::Naive;
  if (name == "woodbury-p" || name == "woodbury_p") return UpdatePath::WoodburyP;
  if (name == "woodbury-n" || name == "woodbury_n") return UpdatePath::WoodburyN;
  if (name == "identity") return UpdatePath::IdentityDesign;
  throw std::invalid_argument("unknown update path '" + name + "'");
}

std::string to_string(UpdatePath path) {
  switch (path) {
    case UpdatePath::Auto: return "auto";
    case UpdatePath::Naive: return "naive";
    case UpdatePath::WoodburyP: return "woodbury-p";
    case UpdatePath::WoodburyN: return "woodbury-n";
    case UpdatePath::IdentityDesign: return "identity";
  }
  return "auto";
}

void FitConfig::validate() const {
  if (max_sweeps < 1) throw std::invalid_argument("max_sweeps must be >= 1");
  if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be > 0");
  if (!(f_cap > 0.0)) throw std::invalid_argument("f_cap must be > 0");
  if (!(zeta_floor > 0.0)) throw std::invalid_argument("zeta_floor must be > 0");
}

TaskSolution update_task_naive(const Task& task, const GroupFamily& family,
                               std::span<const double> zeta, double sigma2) {
  check_dims(task, family);
  const std::vector<double> h = prior_scales(family, zeta);

  // Active coordinates of v: variable index and diagonal of sigma2 F Z^-1.
  std::vector<int> var_of, block_of;
  for (std::size_t a = 0; a < family.size(); ++a) {
    if (h[a] == 0.0) continue;
    for (int i : family.group(a)) {
      var_of.push_back(i);
      block_of.push_back(static_cast<int>(a));
    }
  }
  const int D = static_cast<int>(var_of.size());
  if (D >= kNaiveMaxSize)
    throw StructuralError("naive path limited to fewer than 2000 latent coordinates");

  TaskSolution out;
  out.v = Eigen::VectorXd::Zero(family.total_size());
  out.stat.assign(family.size(), 0.0);
  if (D == 0) {
    out.residual_sq = task.y().squaredNorm();
    return out;
  }

  Eigen::MatrixXd G(D, D);
  Eigen::VectorXd rhs(D), prec(D);
  for (int j = 0; j < D; ++j) {
    prec[j] = sigma2 / h[block_of[j]];
    rhs[j] = task.is_identity() ? task.y()[var_of[j]] : task.Xty()[var_of[j]];
    for (int l = 0; l < D; ++l) {
      G(j, l) = task.is_identity() ? (var_of[j] == var_of[l] ? 1.0 : 0.0)
                                   : task.gram()(var_of[j], var_of[l]);
    }
    G(j, j) += prec[j];
  }

  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) throw NumericalError("naive system is not positive definite");
  const Eigen::VectorXd v_act = llt.solve(rhs);
  const Eigen::MatrixXd Ginv = llt.solve(Eigen::MatrixXd::Identity(D, D));

  double log_det_G = 0.0;
  const Eigen::MatrixXd L = llt.matrixL();
  for (int j = 0; j < D; ++j) log_det_G += 2.0 * std::log(L(j, j));

  double prec_trace = 0.0;
  int j = 0;
  for (std::size_t a = 0; a < family.size(); ++a) {
    if (h[a] == 0.0) continue;
    const int off = family.offset(a);
    double s = 0.0;
    for (int c = 0; c < family.card(a); ++c, ++j) {
      out.v[off + c] = v_act[j];
      s += v_act[j] * v_act[j] + sigma2 * Ginv(j, j);
      prec_trace += prec[j] * Ginv(j, j);
    }
    out.stat[a] = s;
  }
  out.log_det_sigma = D * std::log(sigma2) - log_det_G;
  // G^-1 (G - diag(prec)) = I gives tr(M'X'XM G^-1) = D - sum_j prec_j Ginv_jj.
  out.fit_trace = sigma2 * (D - prec_trace);
  out.residual_sq = residual(task, family, out.v);
  return out;
}

TaskSolution update_task_woodbury(const Task& task, const GroupFamily& family,
                                  std::span<const double> zeta, double sigma2, WoodburyMode mode) {
  check_dims(task, family);
  const std::vector<double> h = prior_scales(family, zeta);
  const Eigen::VectorXd xi = coverage(family, h);
  const int P = family.num_vars();
  const int N = task.num_obs();

  TaskSolution out;
  out.v = Eigen::VectorXd::Zero(family.total_size());
  out.stat.assign(family.size(), 0.0);

  if (mode == WoodburyMode::P) {
    for (int i = 0; i < P; ++i)
      if (!(xi[i] > 0.0))
        throw StructuralError("variable " + std::to_string(i + 1) +
                              " is not covered by a relevant group (P x P path)");
    const Eigen::VectorXd inv_xi = xi.cwiseInverse();
    Eigen::MatrixXd B = task.is_identity() ? Eigen::MatrixXd::Identity(P, P) : task.gram();
    B.diagonal() += sigma2 * inv_xi;
    Eigen::LLT<Eigen::MatrixXd> llt(B);
    if (llt.info() != Eigen::Success) throw NumericalError("P x P system is not positive definite");
    const Eigen::VectorXd rhs = task.is_identity() ? task.y() : task.Xty();
    const Eigen::VectorXd u = llt.solve(rhs);  // equals w = M v
    const Eigen::MatrixXd Binv = llt.solve(Eigen::MatrixXd::Identity(P, P));

    for (std::size_t a = 0; a < family.size(); ++a) {
      if (h[a] == 0.0) continue;
      const Group& g = family.group(a);
      const int off = family.offset(a);
      const double ha = h[a];
      double vv = 0.0, inv_sum = 0.0, quad = 0.0;
      for (std::size_t p = 0; p < g.size(); ++p) {
        const int i = g[p];
        const double vi = ha * u[i] * inv_xi[i];
        out.v[off + static_cast<int>(p)] = vi;
        vv += vi * vi;
        inv_sum += inv_xi[i];
        quad += Binv(i, i) * inv_xi[i] * inv_xi[i];
      }
      out.stat[a] = vv + g.size() * ha - ha * ha * inv_sum + sigma2 * ha * ha * quad;
    }

    double log_det_B = 0.0;
    const Eigen::MatrixXd L = llt.matrixL();
    for (int i = 0; i < P; ++i) log_det_B += 2.0 * std::log(L(i, i));
    out.log_det_sigma =
        log_det_prior(family, h) - xi.array().log().sum() + P * std::log(sigma2) - log_det_B;
    out.fit_trace = sigma2 * (P - sigma2 * (Binv.diagonal().array() * inv_xi.array()).sum());
    out.residual_sq = (task.y() - task.predict(u)).squaredNorm();
    return out;
  }

  // N x N: Kn = X Xi X^T + sigma2 I.
  Eigen::MatrixXd Kn;
  if (task.is_identity()) {
    Kn = xi.asDiagonal();
  } else {
    const Eigen::MatrixXd& X = task.X();
    Kn = X * xi.asDiagonal() * X.transpose();
  }
  Kn.diagonal().array() += sigma2;
  Eigen::LLT<Eigen::MatrixXd> llt(Kn);
  if (llt.info() != Eigen::Success) throw NumericalError("N x N system is not positive definite");
  const Eigen::VectorXd alpha = llt.solve(task.y());
  const Eigen::MatrixXd Linv =
      llt.matrixL().solve(Eigen::MatrixXd::Identity(N, N));  // L^-1
  Eigen::VectorXd r;       // X^T Kn^-1 y
  Eigen::VectorXd q_diag;  // diag(X^T Kn^-1 X)
  if (task.is_identity()) {
    r = alpha;
    q_diag = Linv.colwise().squaredNorm().transpose();
  } else {
    r = task.X().transpose() * alpha;
    const Eigen::MatrixXd Y = Linv * task.X();
    q_diag = Y.colwise().squaredNorm().transpose();
  }

  for (std::size_t a = 0; a < family.size(); ++a) {
    if (h[a] == 0.0) continue;
    const Group& g = family.group(a);
    const int off = family.offset(a);
    const double ha = h[a];
    double vv = 0.0, qsum = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
      const double vi = ha * r[g[p]];
      out.v[off + static_cast<int>(p)] = vi;
      vv += vi * vi;
      qsum += q_diag[g[p]];
    }
    out.stat[a] = vv + g.size() * ha - ha * ha * qsum;
  }
  double log_det_K = 0.0;
  for (int i = 0; i < N; ++i) log_det_K -= 2.0 * std::log(Linv(i, i));
  out.log_det_sigma = log_det_prior(family, h) + N * std::log(sigma2) - log_det_K;
  out.fit_trace = sigma2 * N - sigma2 * sigma2 * Linv.squaredNorm();
  const Eigen::VectorXd w = xi.cwiseProduct(r);
  out.residual_sq = (task.y() - task.predict(w)).squaredNorm();
  return out;
}

TaskSolution update_task_identity_design(const Task& task, const GroupFamily& family,
                                         std::span<const double> zeta, double sigma2,
                                         IdentityTerms* terms) {
  if (!task.is_identity()) throw StructuralError("identity-design path needs X = I");
  check_dims(task, family);
  const std::vector<double> h = prior_scales(family, zeta);
  const Eigen::VectorXd xi = coverage(family, h);
  const Eigen::VectorXd& y = task.y();
  const int P = family.num_vars();

  const Eigen::ArrayXd denom = xi.array() + sigma2;
  const Eigen::ArrayXd inv = denom.inverse();
  const Eigen::ArrayXd gain = y.array() * inv;  // y_i / (xi_i + sigma2)

  TaskSolution out;
  out.v = Eigen::VectorXd::Zero(family.total_size());
  out.stat.assign(family.size(), 0.0);
  for (std::size_t a = 0; a < family.size(); ++a) {
    const double ha = h[a];
    if (ha == 0.0) continue;
    const Group& g = family.group(a);
    const int off = family.offset(a);
    double vv = 0.0, inv_sum = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
      const int i = g[p];
      const double vi = ha * gain[i];
      out.v[off + static_cast<int>(p)] = vi;
      vv += vi * vi;
      inv_sum += inv[i];
    }
    // tr Sigma_AA = |A| h - h^2 sum 1/xi + sigma2 h^2 sum 1/(xi (xi + sigma2)), simplified.
    out.stat[a] = vv + g.size() * ha - ha * ha * inv_sum;
  }

  const double sum_log = denom.log().sum();
  const double sum_ratio = (xi.array() * inv).sum();
  out.log_det_sigma = P * std::log(sigma2) - sum_log + log_det_prior(family, h);
  out.fit_trace = sigma2 * sum_ratio;
  out.residual_sq = (y.array() - xi.array() * gain).square().sum();
  if (terms) *terms = {sum_log, sum_ratio};
  return out;
}

UpdatePath select_path(const Task& task, const GroupFamily& family) {
  if (task.is_identity()) return UpdatePath::IdentityDesign;
  const int P = family.num_vars();
  const int N = task.num_obs();
  int D = 0;
  for (std::size_t a = 0; a < family.size(); ++a)
    if (!is_irrelevant(family.weight(a))) D += family.card(a);
  if (P <= N && P <= D && family.covers_all_finite()) return UpdatePath::WoodburyP;
  if (N < P) return UpdatePath::WoodburyN;
  return D < kNaiveMaxSize ? UpdatePath::Naive : UpdatePath::WoodburyN;
}

TaskSolution update_task(const Task& task, const GroupFamily& family,
                         std::span<const double> zeta, double sigma2, UpdatePath path) {
  if (path == UpdatePath::Auto) path = select_path(task, family);
  switch (path) {
    case UpdatePath::Naive: return update_task_naive(task, family, zeta, sigma2);
    case UpdatePath::WoodburyP:
      return update_task_woodbury(task, family, zeta, sigma2, WoodburyMode::P);
    case UpdatePath::WoodburyN:
      return update_task_woodbury(task, family, zeta, sigma2, WoodburyMode::N);
    case UpdatePath::IdentityDesign:
      return update_task_identity_design(task, family, zeta, sigma2);
    case UpdatePath::Auto: break;
  }
  throw std::logic_error("unreachable update path");
}

double update_f(double sum_stat_over_zeta, int num_tasks, int card, double beta) {
  if (sum_stat_over_zeta < 0.0) throw std::domain_error("negative f-update denominator");
  if (sum_stat_over_zeta == 0.0) return kIrrelevant;
  return num_tasks * (beta + 0.5 * card) / (0.5 * sum_stat_over_zeta);
}

double update_f_tied(double total_stat_over_zeta, int num_tasks, int total_card, int num_groups,
                     double beta) {
  if (total_stat_over_zeta < 0.0) throw std::domain_error("negative f-update denominator");
  if (total_stat_over_zeta == 0.0) return kIrrelevant;
  return num_tasks * (num_groups * beta + 0.5 * total_card) / (0.5 * total_stat_over_zeta);
}

double update_sigma2(double total_residual_plus_trace, long total_obs) {
  if (total_obs <= 0) throw std::domain_error("no observations");
  return std::max(total_residual_plus_trace / static_cast<double>(total_obs),
                  std::numeric_limits<double>::epsilon());
}

std::vector<double> default_initial_weights(const Dataset& data, const GroupFamily& family,
                                            const PriorConfig& prior) {
  double sq = 0.0;
  long n = 0;
  for (const Task& t : data) {
    sq += t.y().squaredNorm();
    n += t.num_obs();
  }
  double var_y = n > 0 ? sq / static_cast<double>(n) : 1.0;
  if (!std::isfinite(var_y)) throw NumericalError("second moment of the responses overflows");
  if (!(var_y > 0.0)) var_y = 1.0;
  const double per_group = var_y / static_cast<double>(std::max<std::size_t>(family.size(), 1));
  return std::vector<double>(family.size(), unit_scale(prior) / per_group);
}

FitResult fit(const Dataset& data, const GroupFamily& family, const PriorConfig& prior,
              const HyperParams& hp, const FitConfig& cfg) {
  prior.validate();
  hp.validate();
  cfg.validate();
  if (data.empty()) throw StructuralError("no tasks to fit");
  if (!family.covers_all()) throw StructuralError("group family does not cover every variable");
  for (const Task& t : data) check_dims(t, family);

  const int K = static_cast<int>(data.size());
  const std::size_t G = family.size();

  FitResult res;
  res.family = family;
  if (!cfg.warm_start) {
    res.family.set_weights(default_initial_weights(data, family, prior));
  } else {
    for (double f : family.weights())
      if (is_irrelevant(f)) throw StructuralError("warm start needs finite initial weights");
  }
  if (cfg.tie_f) {
    const double f0 = res.family.weight(0);
    res.family.set_weights(std::vector<double>(G, f0));
  }
  GroupFamily& fam = res.family;
  double sigma2 = hp.sigma2;

  res.state.tasks.resize(K);
  for (TaskState& ts : res.state.tasks) {
    ts.zeta.assign(G, 1.0);
    ts.v = Eigen::VectorXd::Zero(fam.total_size());
    ts.stat.assign(G, 0.0);
  }
  std::vector<double> resid(K, 0.0);

  // Sigma / v for every task under the current family, zeta and sigma2.
  auto solve_all = [&]() {
    // Once a group is switched off the P x P path may lose coverage.
    const UpdatePath path = cfg.path == UpdatePath::WoodburyP && !fam.covers_all_finite()
                                ? UpdatePath::Auto
                                : cfg.path;
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
    for (int k = 0; k < K; ++k) {
      try {
        TaskState& ts = res.state.tasks[k];
        TaskSolution sol = update_task(data[k], fam, ts.zeta, sigma2, path);
        ts.v = std::move(sol.v);
        ts.stat = std::move(sol.stat);
        ts.log_det_sigma = sol.log_det_sigma;
        ts.fit_trace = sol.fit_trace;
        resid[k] = sol.residual_sq;
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  };

  HyperParams hp_cur = hp;
  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    solve_all();
    for (int k = 0; k < K; ++k) {
      const TaskState& ts = res.state.tasks[k];
      for (std::size_t a = 0; a < G; ++a) {
        if (!std::isfinite(ts.stat[a])) {
          std::ostringstream msg;
          msg << "non-finite block statistic at sweep " << sweep << ", task " << k + 1
              << ", group " << a + 1;
          throw NumericalError(msg.str());
        }
      }
      if (!std::isfinite(ts.log_det_sigma) || !std::isfinite(resid[k]))
        throw NumericalError("non-finite posterior summary at sweep " + std::to_string(sweep) +
                             ", task " + std::to_string(k + 1));
    }

    // zeta.
    for (int k = 0; k < K; ++k) {
      TaskState& ts = res.state.tasks[k];
      for (std::size_t a = 0; a < G; ++a) {
        const double f = fam.weight(a);
        if (is_irrelevant(f)) continue;
        ts.zeta[a] = std::max(cfg.zeta_floor, zeta_argmin(prior, fam.card(a), f, ts.stat[a]));
      }
    }

    // sigma2.
    if (hp.learn_sigma2) {
      double num = 0.0;
      long n = 0;
      for (int k = 0; k < K; ++k) {
        num += resid[k] + res.state.tasks[k].fit_trace;
        n += data[k].num_obs();
      }
      sigma2 = update_sigma2(num, n);
    }

    // f.
    std::vector<double> ratio(G, 0.0);
    for (int k = 0; k < K; ++k) {
      const TaskState& ts = res.state.tasks[k];
      for (std::size_t a = 0; a < G; ++a)
        if (!is_irrelevant(fam.weight(a))) ratio[a] += ts.stat[a] / ts.zeta[a];
    }
    std::vector<double> f_new = fam.weights();
    if (cfg.tie_f) {
      double total = 0.0;
      int card = 0, n_active = 0;
      for (std::size_t a = 0; a < G; ++a) {
        if (is_irrelevant(fam.weight(a))) continue;
        total += ratio[a];
        card += fam.card(a);
        ++n_active;
      }
      if (n_active > 0) {
        const double f = update_f_tied(total, K, card, n_active, hp.beta);
        for (std::size_t a = 0; a < G; ++a)
          if (!is_irrelevant(fam.weight(a))) f_new[a] = f;
      }
    } else {
      for (std::size_t a = 0; a < G; ++a)
        if (!is_irrelevant(fam.weight(a)))
          f_new[a] = update_f(ratio[a], K, fam.card(a), hp.beta);
    }
    bool promoted = false;
    for (std::size_t a = 0; a < G; ++a) {
      if (is_irrelevant(fam.weight(a))) continue;
      if (!(f_new[a] > 0.0) || std::isnan(f_new[a]))
        throw NumericalError("invalid f update for group " + std::to_string(a + 1));
      if (f_new[a] > cfg.f_cap) {
        f_new[a] = kIrrelevant;
        promoted = true;
      }
    }
    fam.set_weights(std::move(f_new));
    // A promoted group leaves the Gaussian part; re-solve so that v, log det
    // Sigma and the fit trace describe the reduced model.
    if (promoted) solve_all();

    hp_cur.sigma2 = sigma2;
    const double J = objective(res.state, data, fam, prior, hp_cur, cfg.f_cap);
    if (!std::isfinite(J)) throw NumericalError("non-finite objective at sweep " + std::to_string(sweep));
    res.objective_trace.push_back(J);
    res.sweeps = sweep;
    if (sweep > 1) {
      const double prev = res.objective_trace[res.objective_trace.size() - 2];
      if (std::abs(prev - J) < cfg.rel_tol * std::max(std::abs(prev), 1e-300)) {
        res.converged = true;
        break;
      }
    }
  }

  res.w.reserve(K);
  for (const TaskState& ts : res.state.tasks) res.w.push_back(expand(fam, ts.v));
  res.sigma2 = sigma2;
  return res;
}

}  // namespace gwl
