#include "gwl/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gwl/image.hpp"
#include "gwl/oracle.hpp"
#include "gwl/wavelet.hpp"

namespace gwl {
namespace {

using nlohmann::json;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double variance_of(const PriorConfig& prior, int card, double f) {
  return expected_sq_norm(prior, card, f);
}

std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream o;
  o.precision(12);
  o << x;
  return o.str();
}

std::string weights_field(const GroupFamily& fam) {
  std::string out;
  for (std::size_t a = 0; a < fam.size(); ++a) out += (a ? ";" : "") + num(fam.weight(a));
  return out;
}

std::string groups_field(const GroupFamily& fam) {
  std::string out;
  for (std::size_t a = 0; a < fam.size(); ++a) {
    out += a ? ";" : "";
    for (std::size_t j = 0; j < fam.group(a).size(); ++j)
      out += (j ? " " : "") + std::to_string(fam.group(a)[j] + 1);
  }
  return out;
}

std::string shares_field(const std::vector<double>& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ";" : "") + num(s[i]);
  return out;
}

std::vector<double> shares_or_empty(const GroupFamily& fam, const PriorConfig& prior) {
  if (prior.family == PriorFamily::StudentT && prior.shape <= 1.0) return {};
  return explained_variance_share(fam, prior);
}

ActiveSetConfig as_config(int P, int T, int D, int rounds) {
  return {T > 0 ? T : 4 * P, D > 0 ? D : 2 * P, rounds};
}

template <class T>
std::vector<T> slice(const std::vector<T>& v, std::size_t lo, std::size_t hi) {
  return std::vector<T>(v.begin() + lo, v.begin() + hi);
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

FitConfig fit_config_from(Config& c) {
  FitConfig f;
  f.max_sweeps = static_cast<int>(c.get_int("max_sweeps", f.max_sweeps));
  f.rel_tol = c.get_double("rel_tol", f.rel_tol);
  f.path = parse_update_path(c.get_string("path", to_string(f.path)));
  f.validate();
  return f;
}

RowMat as_patch(const Eigen::VectorXd& v, int side) { return Eigen::Map<const RowMat>(v.data(), side, side); }

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
  RowMat r = m;
  return Eigen::Map<const Eigen::VectorXd>(r.data(), r.size());
}

}  // namespace

ModelKind parse_model_kind(const std::string& name) {
  if (name == "lasso") return ModelKind::Lasso;
  if (name == "wlasso") return ModelKind::WLasso;
  if (name == "structured") return ModelKind::Structured;
  if (name == "structured-as") return ModelKind::StructuredAS;
  throw std::invalid_argument("unknown model '" + name + "'");
}

std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::Lasso: return "lasso";
    case ModelKind::WLasso: return "wlasso";
    case ModelKind::Structured: return "structured";
    case ModelKind::StructuredAS: return "structured-as";
  }
  return "lasso";
}

FitResult fit_model(ModelKind model, const Dataset& data, const GroupFamily& structured,
                    const PriorConfig& prior, const HyperParams& hp, const FitConfig& cfg,
                    const ActiveSetConfig& as_cfg) {
  const int P = data.front().num_vars();
  FitConfig c = cfg;
  c.warm_start = false;
  switch (model) {
    case ModelKind::Lasso:
      c.tie_f = true;
      return fit(data, GroupFamily::singletons(P), prior, hp, c);
    case ModelKind::WLasso:
      return fit(data, GroupFamily::singletons(P), prior, hp, c);
    case ModelKind::Structured:
      return fit(data, structured, prior, hp, c);
    case ModelKind::StructuredAS:
      return active_set_fit(data, prior, hp, c, as_cfg).fit;
  }
  throw std::logic_error("unreachable model kind");
}

std::vector<P1Row> run_p1_scale(const P1Options& opt) {
  const PriorConfig prior = PriorConfig::student_t(opt.a);
  const std::vector<double> f_true = opt.f_true.empty() ? log_spaced(0.02, 50.0, 14) : opt.f_true;
  std::vector<double> candidates = f_true;
  candidates.push_back(opt.grid_extra);

  std::vector<P1Row> rows;
  for (int rep = 0; rep < opt.reps; ++rep) {
    for (std::size_t i = 0; i < f_true.size(); ++i) {
      ScenarioSpec spec;
      spec.scenario = Scenario::OneVar;
      spec.K = opt.K;
      spec.P = 1;
      spec.prior = prior;
      spec.f_relevant = f_true[i];
      spec.sigma2 = opt.sigma2;
      spec.seed = opt.seed + 1000ULL * rep + i;
      const GeneratedData gd = gen_tasks(spec);

      std::vector<double> y(gd.tasks.size());
      for (std::size_t k = 0; k < y.size(); ++k) y[k] = gd.tasks[k].y()[0];
      std::vector<double> ll(candidates.size());
      for (std::size_t c = 0; c < candidates.size(); ++c)
        ll[c] = marginal_loglik_1d_scale_mixture(y, candidates[c], opt.a, opt.sigma2);

      for (double beta : opt.betas) {
        HyperParams hp;
        hp.sigma2 = opt.sigma2;
        hp.beta = beta;
        const FitResult fr =
            fit(gd.tasks, GroupFamily::singletons(1), prior, hp, opt.fit);
        double best = -std::numeric_limits<double>::infinity(), f_grid = candidates.front();
        for (std::size_t c = 0; c < candidates.size(); ++c) {
          const double s = ll[c] + opt.K * beta * std::log(candidates[c]);
          if (s > best) {
            best = s;
            f_grid = candidates[c];
          }
        }
        const double f_vi = fr.family.weight(0);
        rows.push_back({beta, f_true[i], variance_of(prior, 1, f_true[i]), rep, f_vi,
                        variance_of(prior, 1, f_vi), f_grid, variance_of(prior, 1, f_grid),
                        fr.sweeps});
      }
    }
  }
  return rows;
}

std::vector<P2Row> run_p2_pair(const P2Options& opt) {
  const PriorConfig prior = PriorConfig::student_t(opt.a);
  const auto fs = opt.f_singletons.empty() ? log_spaced(0.01, 25.0, 14) : opt.f_singletons;
  const auto fp = opt.f_pair.empty() ? log_spaced(0.01, 25.0, 14) : opt.f_pair;
  const GroupFamily model(2, {{0}, {1}, {0, 1}});
  std::vector<P2Row> rows;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    for (std::size_t j = 0; j < fp.size(); ++j) {
      ScenarioSpec spec;
      spec.scenario = Scenario::TwoVar;
      spec.K = opt.K;
      spec.P = 2;
      spec.prior = prior;
      spec.f_relevant = fs[i];
      spec.f_pair = fp[j];
      spec.sigma2 = opt.sigma2;
      spec.seed = opt.seed + 1000ULL * i + j;
      const GeneratedData gd = gen_tasks(spec);
      for (double beta : opt.betas) {
        HyperParams hp;
        hp.sigma2 = opt.sigma2;
        hp.beta = beta;
        const FitResult fr = fit(gd.tasks, model, prior, hp, opt.fit);
        const double vs = variance_of(prior, 1, fr.family.weight(0)) +
                          variance_of(prior, 1, fr.family.weight(1));
        const double vp = variance_of(prior, 2, fr.family.weight(2));
        std::string winner = "noise";
        if (std::max(vs, vp) > 2.0 * opt.sigma2) winner = vp > vs ? "pair" : "singletons";
        rows.push_back({beta, fs[i], fp[j], vs, vp, winner, fr.sweeps});
      }
    }
  }
  return rows;
}

std::vector<ToyCell> run_toy_denoise(const ToyOptions& opt) {
  const PriorConfig prior = PriorConfig::student_t(opt.a);
  const GroupFamily structured = prefix_family(opt.P);
  const ActiveSetConfig as_cfg = as_config(opt.P, opt.as_T, opt.as_D, opt.as_rounds);
  std::vector<ToyCell> cells;
  for (const std::string& scen : opt.scenarios) {
    for (int rep = 0; rep < opt.reps; ++rep) {
      ScenarioSpec spec;
      spec.scenario = parse_scenario(scen);
      spec.K = opt.K;
      spec.P = opt.P;
      spec.prior = prior;
      spec.f_relevant = opt.f_relevant;
      spec.f_irrelevant = opt.f_irrelevant;
      spec.seed = opt.seed + 7919ULL * rep;
      const GeneratedData gd = gen_tasks(spec);
      const std::size_t half = gd.tasks.size() / 2;
      const Dataset sel = slice(gd.tasks, 0, half), test = slice(gd.tasks, half, gd.tasks.size());
      const auto w_sel = slice(gd.w, 0, half), w_test = slice(gd.w, half, gd.w.size());

      for (const std::string& mname : opt.models) {
        const ModelKind mk = parse_model_kind(mname);
        ToyCell cell;
        cell.scenario = scen;
        cell.model = mname;
        cell.rep = rep;
        cell.sigma2 = gd.sigma2;
        HyperParams hp;
        hp.sigma2 = gd.sigma2;
        double best = std::numeric_limits<double>::infinity();
        for (double beta : opt.betas) {
          hp.beta = beta;
          const FitResult fr = fit_model(mk, sel, structured, prior, hp, opt.fit, as_cfg);
          const double mse = squared_error(w_sel, fr.w).mean;
          cell.selection.push_back(
              {beta, mse, fr.family, shares_or_empty(fr.family, prior), fr.sweeps});
          if (mse < best) {
            best = mse;
            cell.best_beta = beta;
          }
        }
        hp.beta = cell.best_beta;
        const FitResult fr = fit_model(mk, test, structured, prior, hp, opt.fit, as_cfg);
        const ErrorSummary err = squared_error(w_test, fr.w);
        cell.test_mse = err.mean;
        cell.test_half_width = err.half_width;
        cell.test_family = fr.family;
        cell.test_shares = shares_or_empty(fr.family, prior);
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

std::vector<ShareRow> run_explained_variance(const ToyOptions& opt, const std::string& scenario) {
  const PriorConfig prior = PriorConfig::student_t(opt.a);
  ScenarioSpec spec;
  spec.scenario = parse_scenario(scenario);
  spec.K = opt.K;
  spec.P = opt.P;
  spec.prior = prior;
  spec.f_relevant = opt.f_relevant;
  spec.f_irrelevant = opt.f_irrelevant;
  spec.seed = opt.seed;
  const GeneratedData gd = gen_tasks(spec);
  std::vector<ShareRow> out;
  for (double beta : opt.betas) {
    HyperParams hp;
    hp.sigma2 = gd.sigma2;
    hp.beta = beta;
    const FitResult fr = fit(gd.tasks, prefix_family(opt.P), prior, hp, opt.fit);
    out.push_back({beta, fr.family, explained_variance_share(fr.family, prior)});
  }
  return out;
}

WaveletRun run_wavelet_denoise(const WaveletOptions& opt, const Eigen::MatrixXd& clean) {
  WaveletRun run;
  run.clean = clean;
  const PatchGrid grid = make_patch_grid(static_cast<int>(clean.rows()),
                                         static_cast<int>(clean.cols()), opt.patch, opt.stride);
  const WaveletTree tree(opt.patch);
  const GroupFamily structured = wavelet_path_groups(tree);
  const int P = tree.size();

  std::vector<Eigen::VectorXd> w;
  for (const Eigen::VectorXd& p : extract_patches(clean, grid))
    w.push_back(haar2d_forward(as_patch(p, opt.patch)));
  Rng rng(opt.seed);
  const std::vector<Eigen::VectorXd> noisy = add_noise(w, opt.sigma2, rng);
  Dataset data;
  for (const Eigen::VectorXd& y : noisy) data.push_back(Task::identity(y));
  run.num_tasks = static_cast<int>(data.size());
  const ActiveSetConfig as_cfg = as_config(P, opt.as_T, opt.as_D, opt.as_rounds);

  for (const std::string& mname : opt.models) {
    const ModelKind mk = parse_model_kind(mname);
    double best = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd best_img;
    for (double a : opt.shapes) {
      const PriorConfig prior = PriorConfig::student_t(a);
      for (double beta : opt.betas) {
        HyperParams hp;
        hp.sigma2 = opt.sigma2;
        hp.beta = beta;
        const FitResult fr = fit_model(mk, data, structured, prior, hp, opt.fit, as_cfg);
        const ErrorSummary err = squared_error(w, fr.w);
        std::vector<Eigen::VectorXd> pix;
        for (const Eigen::VectorXd& c : fr.w) pix.push_back(flatten(haar2d_inverse(c)));
        const Eigen::MatrixXd img = reconstruct(pix, grid);
        const double mse_pix = (img - clean).squaredNorm() / static_cast<double>(clean.size());
        run.rows.push_back({mname, a, beta, err.mean / P, err.half_width / P, mse_pix, fr.sweeps,
                            fr.family.size()});
        if (err.mean < best) {
          best = err.mean;
          best_img = img;
        }
      }
    }
    run.best_images.push_back(best_img);
  }
  return run;
}

double best_mse(const std::vector<WaveletRow>& rows, const std::string& model) {
  double best = std::numeric_limits<double>::infinity();
  for (const WaveletRow& r : rows)
    if (r.model == model) best = std::min(best, r.mse_coeff);
  return best;
}

DenoiseResult denoise_image(const Eigen::MatrixXd& noisy, ModelKind model, const PriorConfig& prior,
                            const HyperParams& hp, const FitConfig& cfg, int patch, int stride,
                            int as_rounds) {
  const PatchGrid grid =
      make_patch_grid(static_cast<int>(noisy.rows()), static_cast<int>(noisy.cols()), patch, stride);
  const WaveletTree tree(patch);
  Dataset data;
  for (const Eigen::VectorXd& p : extract_patches(noisy, grid))
    data.push_back(Task::identity(haar2d_forward(as_patch(p, patch))));
  DenoiseResult out;
  out.fit = fit_model(model, data, wavelet_path_groups(tree), prior, hp, cfg,
                      as_config(tree.size(), 0, 0, as_rounds));
  std::vector<Eigen::VectorXd> pix;
  for (const Eigen::VectorXd& c : out.fit.w) pix.push_back(flatten(haar2d_inverse(c)));
  out.image = reconstruct(pix, grid);
  return out;
}

void run_experiment(const std::string& name, Config& c, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  json summary;
  summary["experiment"] = name;

  // Parse everything before any work so config errors surface immediately.
  if (name == "p1-scale") {
    P1Options o;
    o.K = static_cast<int>(c.get_int("K", o.K));
    o.a = c.get_double("a", o.a);
    o.sigma2 = c.get_double("sigma2", o.sigma2);
    o.f_true = c.get_doubles("f_true", log_spaced(0.02, 50.0, 14));
    o.betas = c.get_doubles("betas", o.betas);
    o.reps = static_cast<int>(c.get_int("reps", o.reps));
    o.seed = static_cast<unsigned long long>(c.get_int("seed", 1));
    o.grid_extra = c.get_double("grid_extra", o.grid_extra);
    o.fit = fit_config_from(c);
    c.check_all_used();
    fs::create_directories(dir);
    open_out(dir / "config.txt") << c.dump();

    const auto rows = run_p1_scale(o);
    auto out = open_out(dir / "rows.csv");
    out << "beta,rep,f_true,var_true,f_vi,var_vi,f_grid,var_grid,sweeps\n";
    std::map<std::pair<double, double>, std::array<double, 3>> avg;
    for (const P1Row& r : rows) {
      out << num(r.beta) << ',' << r.rep << ',' << num(r.f_true) << ',' << num(r.var_true) << ','
          << num(r.f_vi) << ',' << num(r.var_vi) << ',' << num(r.f_grid) << ','
          << num(r.var_grid) << ',' << r.sweeps << "\n";
      auto& acc = avg[{r.beta, r.f_true}];
      acc[0] += r.var_vi / o.reps;
      acc[1] += r.var_grid / o.reps;
      acc[2] = r.var_true;
    }
    json table = json::array();
    for (const auto& [key, v] : avg)
      table.push_back({{"beta", key.first}, {"f_true", key.second}, {"var_true", v[2]},
                       {"var_vi_mean", v[0]}, {"var_grid_mean", v[1]}});
    summary["candidate_f"] = [&] {
      auto cands = o.f_true;
      cands.push_back(o.grid_extra);
      return cands;
    }();
    summary["averaged"] = table;
  } else if (name == "p2-pair") {
    P2Options o;
    o.K = static_cast<int>(c.get_int("K", o.K));
    o.a = c.get_double("a", o.a);
    o.sigma2 = c.get_double("sigma2", o.sigma2);
    o.f_singletons = c.get_doubles("f_singletons", log_spaced(0.01, 25.0, 14));
    o.f_pair = c.get_doubles("f_pair", log_spaced(0.01, 25.0, 14));
    o.betas = c.get_doubles("betas", o.betas);
    o.seed = static_cast<unsigned long long>(c.get_int("seed", 1));
    o.fit = fit_config_from(c);
    c.check_all_used();
    fs::create_directories(dir);
    open_out(dir / "config.txt") << c.dump();

    const auto rows = run_p2_pair(o);
    auto out = open_out(dir / "rows.csv");
    out << "beta,f_singletons,f_pair,var_singletons_est,var_pair_est,winner,sweeps\n";
    json table = json::array();
    for (const P2Row& r : rows) {
      out << num(r.beta) << ',' << num(r.f_single_true) << ',' << num(r.f_pair_true) << ','
          << num(r.var_single_est) << ',' << num(r.var_pair_est) << ',' << r.winner << ','
          << r.sweeps << "\n";
      table.push_back({{"beta", r.beta}, {"f_singletons", r.f_single_true},
                       {"f_pair", r.f_pair_true}, {"winner", r.winner}});
    }
    summary["cells"] = table;
  } else if (name == "toy-denoise") {
    ToyOptions o;
    o.K = static_cast<int>(c.get_int("K", o.K));
    o.P = static_cast<int>(c.get_int("P", o.P));
    o.a = c.get_double("a", o.a);
    o.f_relevant = c.get_double("f_relevant", o.f_relevant);
    o.f_irrelevant = c.get_double("f_irrelevant", o.f_irrelevant);
    o.scenarios = c.get_strings("scenarios", o.scenarios);
    o.models = c.get_strings("models", o.models);
    o.betas = c.get_doubles("betas", o.betas);
    o.reps = static_cast<int>(c.get_int("reps", o.reps));
    o.seed = static_cast<unsigned long long>(c.get_int("seed", 1));
    o.as_T = static_cast<int>(c.get_int("as_T", 4 * o.P));
    o.as_D = static_cast<int>(c.get_int("as_D", 2 * o.P));
    o.as_rounds = static_cast<int>(c.get_int("as_rounds", o.as_rounds));
    o.fit = fit_config_from(c);
    for (const auto& s : o.scenarios) parse_scenario(s);
    for (const auto& m : o.models) parse_model_kind(m);
    c.check_all_used();
    fs::create_directories(dir);
    open_out(dir / "config.txt") << c.dump();

    const auto cells = run_toy_denoise(o);
    auto sel = open_out(dir / "selection.csv");
    sel << "scenario,model,rep,beta,mse,sweeps,groups,f,shares\n";
    auto test = open_out(dir / "test.csv");
    test << "scenario,model,rep,sigma2,best_beta,test_mse,half_width,groups,f,shares\n";
    json table = json::array();
    for (const ToyCell& cell : cells) {
      for (const ToySelection& s : cell.selection)
        sel << cell.scenario << ',' << cell.model << ',' << cell.rep << ',' << num(s.beta) << ','
            << num(s.mse) << ',' << s.sweeps << ',' << groups_field(s.family) << ','
            << weights_field(s.family) << ',' << shares_field(s.shares) << "\n";
      test << cell.scenario << ',' << cell.model << ',' << cell.rep << ',' << num(cell.sigma2)
           << ',' << num(cell.best_beta) << ',' << num(cell.test_mse) << ','
           << num(cell.test_half_width) << ',' << groups_field(cell.test_family) << ','
           << weights_field(cell.test_family) << ',' << shares_field(cell.test_shares) << "\n";
      table.push_back({{"scenario", cell.scenario}, {"model", cell.model}, {"rep", cell.rep},
                       {"best_beta", cell.best_beta}, {"test_mse", cell.test_mse},
                       {"half_width", cell.test_half_width}});
    }
    summary["cells"] = table;
  } else if (name == "wavelet-denoise") {
    WaveletOptions o;
    o.image = c.get_string("image", "");
    o.sigma2 = c.get_double("sigma2", o.sigma2);
    o.patch = static_cast<int>(c.get_int("patch", o.patch));
    o.stride = static_cast<int>(c.get_int("stride", o.stride));
    o.models = c.get_strings("models", o.models);
    o.betas = c.get_doubles("betas", o.betas);
    o.shapes = c.get_doubles("shapes", o.shapes);
    o.seed = static_cast<unsigned long long>(c.get_int("seed", 1));
    o.as_rounds = static_cast<int>(c.get_int("as_rounds", o.as_rounds));
    o.as_T = static_cast<int>(c.get_int("as_T", 4 * o.patch * o.patch));
    o.as_D = static_cast<int>(c.get_int("as_D", 2 * o.patch * o.patch));
    o.fit = fit_config_from(c);
    for (const auto& m : o.models) parse_model_kind(m);
    if (o.image.empty()) throw ConfigError("config key 'image' is required");
    c.check_all_used();
    const Eigen::MatrixXd clean = read_pgm(o.image);
    fs::create_directories(dir);
    open_out(dir / "config.txt") << c.dump();

    const WaveletRun run = run_wavelet_denoise(o, clean);
    auto out = open_out(dir / "rows.csv");
    out << "model,a,beta,mse_coeff,half_width,mse_pixel,sweeps,groups\n";
    for (const WaveletRow& r : run.rows)
      out << r.model << ',' << num(r.a) << ',' << num(r.beta) << ',' << num(r.mse_coeff) << ','
          << num(r.half_width) << ',' << num(r.mse_pixel) << ',' << r.sweeps << ','
          << r.num_groups << "\n";
    json best = json::object();
    for (std::size_t m = 0; m < o.models.size(); ++m) {
      best[o.models[m]] = best_mse(run.rows, o.models[m]);
      write_pgm((dir / ("denoised_" + o.models[m] + ".pgm")).string(), run.best_images[m]);
    }
    summary["num_tasks"] = run.num_tasks;
    summary["best_mse_coeff"] = best;
  } else {
    throw ConfigError("unknown experiment '" + name + "'");
  }
  summary["config"] = c.resolved();
  open_out(dir / "summary.json") << summary.dump(1) << "\n";
}

}  // namespace gwl
