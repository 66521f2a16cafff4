#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include "gwl/config.hpp"
#include "gwl/datagen.hpp"
#include "gwl/experiments.hpp"
#include "gwl/image.hpp"
#include "gwl/io.hpp"

namespace {

constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

void apply_thread_env() {
  if (const char* t = std::getenv("GWL_THREADS")) {
    const int n = std::atoi(t);
    if (n < 1) throw gwl::ConfigError("GWL_THREADS must be a positive integer");
    omp_set_num_threads(n);
  }
}

gwl::PriorConfig make_prior(const std::string& family, double shape) {
  gwl::PriorConfig p{gwl::parse_prior_family(family), shape};
  p.validate();
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group relevance learning for structured sparse multi-task regression"};
  app.require_subcommand(1);

  // experiment
  auto* exp = app.add_subcommand("experiment", "run a named experiment from a config file");
  std::string exp_name, exp_config, exp_out;
  std::vector<std::string> exp_set;
  exp->add_option("name", exp_name, "p1-scale | p2-pair | toy-denoise | wavelet-denoise")->required();
  exp->add_option("--config", exp_config, "key = value config file");
  exp->add_option("--set", exp_set, "override a config entry, key=value");
  exp->add_option("--out", exp_out, "output directory")->required();

  // generate
  auto* gen = app.add_subcommand("generate", "sample synthetic tasks");
  std::string gen_scenario = "singletons", gen_tasks_out, gen_groups_out, gen_truth_out;
  int gen_K = 1000, gen_P = 10;
  double gen_a = 1.5, gen_frel = 0.2, gen_firr = 200.0, gen_fpair = 1.0, gen_sigma2 = 0.0;
  unsigned long long gen_seed = 1;
  gen->add_option("--scenario", gen_scenario, "one-var | two-var | singletons | one-group | overlapping");
  gen->add_option("-K", gen_K, "number of tasks");
  gen->add_option("-P", gen_P, "number of variables (prefix scenarios)");
  gen->add_option("--shape", gen_a, "Student's t shape a");
  gen->add_option("--f-relevant", gen_frel);
  gen->add_option("--f-irrelevant", gen_firr);
  gen->add_option("--f-pair", gen_fpair);
  gen->add_option("--sigma2", gen_sigma2, "noise variance (<= 0: match total signal variance)");
  gen->add_option("--seed", gen_seed);
  gen->add_option("--tasks", gen_tasks_out, "tasks file to write")->required();
  gen->add_option("--groups", gen_groups_out, "true family to write");
  gen->add_option("--truth", gen_truth_out, "clean signals to write (tasks format)");

  // fit
  auto* fitc = app.add_subcommand("fit", "learn group weights");
  std::string fit_tasks, fit_groups, fit_out, fit_family = "student_t", fit_path = "auto";
  double fit_shape = 1.5, fit_beta = 0.0, fit_sigma2 = 1.0, fit_tol = 1e-7;
  int fit_sweeps = 500;
  bool fit_learn = false, fit_tie = false, fit_state = false;
  fitc->add_option("--tasks", fit_tasks)->required();
  fitc->add_option("--groups", fit_groups)->required();
  fitc->add_option("--out", fit_out, "model JSON")->required();
  fitc->add_option("--prior", fit_family, "student_t | generalized_gaussian");
  fitc->add_option("--shape", fit_shape);
  fitc->add_option("--beta", fit_beta);
  fitc->add_option("--sigma2", fit_sigma2);
  fitc->add_flag("--learn-sigma2", fit_learn);
  fitc->add_flag("--tie-f", fit_tie, "one shared f for all groups");
  fitc->add_option("--path", fit_path, "auto | naive | woodbury-p | woodbury-n | identity");
  fitc->add_option("--max-sweeps", fit_sweeps);
  fitc->add_option("--rel-tol", fit_tol);
  fitc->add_flag("--with-state", fit_state, "store the variational state for re-scoring");

  // score
  auto* score = app.add_subcommand("score", "re-evaluate a stored model's objective");
  std::string score_model, score_tasks;
  score->add_option("--model", score_model)->required();
  score->add_option("--tasks", score_tasks)->required();

  // denoise
  auto* den = app.add_subcommand("denoise", "denoise a grayscale PGM image");
  std::string den_in, den_out, den_clean, den_model = "wlasso", den_report;
  double den_sigma2 = 400.0, den_beta = 0.0, den_shape = 1.5;
  int den_patch = 32, den_stride = 16, den_rounds = 2, den_sweeps = 500;
  den->add_option("--input", den_in, "noisy image")->required();
  den->add_option("--out", den_out, "denoised image")->required();
  den->add_option("--sigma2", den_sigma2);
  den->add_option("--model", den_model, "lasso | wlasso | structured | structured-as");
  den->add_option("--beta", den_beta);
  den->add_option("--shape", den_shape);
  den->add_option("--patch", den_patch);
  den->add_option("--stride", den_stride);
  den->add_option("--as-rounds", den_rounds);
  den->add_option("--max-sweeps", den_sweeps);
  den->add_option("--clean", den_clean, "clean image for an MSE report");
  den->add_option("--report", den_report, "JSON report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    apply_thread_env();
    if (*exp) {
      gwl::Config cfg = exp_config.empty() ? gwl::Config() : gwl::Config::load(exp_config);
      for (const std::string& kv : exp_set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw gwl::ConfigError("--set expects key=value");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      gwl::run_experiment(exp_name, cfg, exp_out);
      std::cout << "wrote " << exp_out << "\n";
    } else if (*gen) {
      gwl::ScenarioSpec spec;
      spec.scenario = gwl::parse_scenario(gen_scenario);
      if (spec.scenario == gwl::Scenario::Custom)
        throw gwl::ConfigError("custom scenarios are not available from the command line");
      spec.K = gen_K;
      spec.P = gen_P;
      spec.prior = gwl::PriorConfig::student_t(gen_a);
      spec.f_relevant = gen_frel;
      spec.f_irrelevant = gen_firr;
      spec.f_pair = gen_fpair;
      spec.sigma2 = gen_sigma2;
      spec.seed = gen_seed;
      const gwl::GeneratedData gd = gwl::gen_tasks(spec);
      gwl::write_tasks(gen_tasks_out, gd.tasks);
      if (!gen_groups_out.empty()) gwl::write_groups(gen_groups_out, gd.family);
      if (!gen_truth_out.empty()) {
        gwl::Dataset truth;
        for (const auto& w : gd.w) truth.push_back(gwl::Task::identity(w));
        gwl::write_tasks(gen_truth_out, truth);
      }
      std::cout << "sigma2 " << gd.sigma2 << "\n";
    } else if (*fitc) {
      const gwl::Dataset data = gwl::read_tasks(fit_tasks);
      const gwl::GroupFamily family = gwl::read_groups(fit_groups, data.front().num_vars());
      const gwl::PriorConfig prior = make_prior(fit_family, fit_shape);
      gwl::HyperParams hp;
      hp.sigma2 = fit_sigma2;
      hp.beta = fit_beta;
      hp.learn_sigma2 = fit_learn;
      gwl::FitConfig cfg;
      cfg.max_sweeps = fit_sweeps;
      cfg.rel_tol = fit_tol;
      cfg.tie_f = fit_tie;
      cfg.path = gwl::parse_update_path(fit_path);
      const gwl::FitResult res = gwl::fit(data, family, prior, hp, cfg);
      gwl::write_model(fit_out, gwl::model_from_fit(res, prior, hp, cfg, fit_state));
      std::cout << "sweeps " << res.sweeps << (res.converged ? " converged" : " max-sweeps")
                << " objective " << res.objective_trace.back() << "\n";
    } else if (*score) {
      const gwl::ModelFile m = gwl::read_model(score_model);
      if (!m.state) throw gwl::ConfigError(score_model + ": model has no stored state");
      const gwl::Dataset data = gwl::read_tasks(score_tasks);
      const double J = gwl::objective(*m.state, data, m.family, m.prior, m.hp, m.cfg.f_cap);
      std::cout.precision(17);
      std::cout << "objective " << J << "\n";
      if (!m.objective_trace.empty())
        std::cout << "stored " << m.objective_trace.back() << "\n";
    } else if (*den) {
      const Eigen::MatrixXd noisy = gwl::read_pgm(den_in);
      gwl::HyperParams hp;
      hp.sigma2 = den_sigma2;
      hp.beta = den_beta;
      gwl::FitConfig cfg;
      cfg.max_sweeps = den_sweeps;
      const gwl::DenoiseResult r =
          gwl::denoise_image(noisy, gwl::parse_model_kind(den_model), gwl::PriorConfig::student_t(den_shape),
                             hp, cfg, den_patch, den_stride, den_rounds);
      gwl::write_pgm(den_out, r.image);
      nlohmann::json rep = {{"model", den_model}, {"beta", den_beta}, {"shape", den_shape},
                            {"sigma2", den_sigma2}, {"sweeps", r.fit.sweeps}};
      if (!den_clean.empty()) {
        const Eigen::MatrixXd clean = gwl::read_pgm(den_clean);
        if (clean.rows() != noisy.rows() || clean.cols() != noisy.cols())
          throw gwl::ConfigError("clean and noisy images differ in size");
        const double n = static_cast<double>(clean.size());
        rep["mse_pixel_input"] = (noisy - clean).squaredNorm() / n;
        rep["mse_pixel_output"] = (r.image - clean).squaredNorm() / n;
        std::cout << "mse input " << rep["mse_pixel_input"].get<double>() << " output "
                  << rep["mse_pixel_output"].get<double>() << "\n";
      }
      if (!den_report.empty()) {
        std::ofstream out(den_report);
        if (!out) throw std::runtime_error("cannot write " + den_report);
        out << rep.dump(1) << "\n";
      }
    }
  } catch (const gwl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const gwl::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitConfig;
  } catch (const gwl::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const gwl::StructuralError& e) {
    std::cerr << "structural error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
