#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "gwl/active_set.hpp"
#include "gwl/config.hpp"
#include "gwl/datagen.hpp"
#include "gwl/inference.hpp"

namespace gwl {

enum class ModelKind { Lasso, WLasso, Structured, StructuredAS };

ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind m);

/// Fits one of the four learning models. `structured` is the fixed family of
/// the Structured model; Lasso ties f across singletons; StructuredAS runs
/// the active-set search from singletons.
FitResult fit_model(ModelKind model, const Dataset& data, const GroupFamily& structured,
                    const PriorConfig& prior, const HyperParams& hp, const FitConfig& cfg,
                    const ActiveSetConfig& as_cfg);

// One-variable scale recovery.
struct P1Options {
  int K = 10000;
  double a = 1.5;
  double sigma2 = 1.0;
  std::vector<double> f_true = {};  // empty: 14 log-spaced values in [0.02, 50]
  std::vector<double> betas = {0.0, 0.05, 0.25};
  int reps = 5;
  unsigned long long seed = 1;
  double grid_extra = 1e5;  // appended to the candidate set
  FitConfig fit;
};

struct P1Row {
  double beta, f_true, var_true;
  int rep;
  double f_vi, var_vi, f_grid, var_grid;
  int sweeps;
};

std::vector<P1Row> run_p1_scale(const P1Options& opt);

// Two variables, groups {1}, {2}, {1,2}.
struct P2Options {
  int K = 5000;
  double a = 1.5;
  double sigma2 = 1.0;
  std::vector<double> f_singletons = {};  // empty: 14 log-spaced values in [0.01, 25]
  std::vector<double> f_pair = {};
  std::vector<double> betas = {0.0, 0.03, 0.15};
  unsigned long long seed = 1;
  FitConfig fit;
};

struct P2Row {
  double beta, f_single_true, f_pair_true;
  double var_single_est;  // 1/((a-1) f1) + 1/((a-1) f2)
  double var_pair_est;    // 2/((a-1) f12)
  std::string winner;     // "pair", "singletons" or "noise"
  int sweeps;
};

std::vector<P2Row> run_p2_pair(const P2Options& opt);

// Multi-task toy denoising with held-out selection of beta.
struct ToyOptions {
  int K = 10000;
  int P = 10;
  double a = 1.5;
  double f_relevant = 0.2;
  double f_irrelevant = 200.0;
  std::vector<std::string> scenarios = {"singletons", "one-group", "overlapping"};
  std::vector<std::string> models = {"lasso", "wlasso", "structured", "structured-as"};
  std::vector<double> betas = {0.0, 0.001, 0.003, 0.01, 0.03, 0.1, 0.3};
  int reps = 1;
  unsigned long long seed = 1;
  int as_T = 0, as_D = 0;  // 0: 4P and 2P
  int as_rounds = 5;
  FitConfig fit;
};

struct ToySelection {
  double beta;
  double mse;
  GroupFamily family;
  std::vector<double> shares;
  int sweeps;
};

struct ToyCell {
  std::string scenario, model;
  int rep;
  double sigma2;
  std::vector<ToySelection> selection;  // fits on the first half
  double best_beta;
  double test_mse, test_half_width;
  GroupFamily test_family;
  std::vector<double> test_shares;
};

std::vector<ToyCell> run_toy_denoise(const ToyOptions& opt);

// Explained-variance shares of the Structured model per beta on one scenario.
struct ShareRow {
  double beta;
  GroupFamily family;
  std::vector<double> shares;
};
std::vector<ShareRow> run_explained_variance(const ToyOptions& opt, const std::string& scenario);

// Patch-wise wavelet denoising.
struct WaveletOptions {
  std::string image;  // PGM path
  double sigma2 = 400.0;
  int patch = 32;
  int stride = 16;
  std::vector<std::string> models = {"lasso", "wlasso", "structured", "structured-as"};
  std::vector<double> betas = {0.0, 1e-4, 5e-4, 1e-3, 5e-3, 1e-2};
  std::vector<double> shapes = {1.5};
  unsigned long long seed = 1;
  int as_rounds = 2;
  int as_T = 0, as_D = 0;
  FitConfig fit;
};

struct WaveletRow {
  std::string model;
  double a, beta;
  double mse_coeff;  // per coefficient, averaged over patches
  double half_width;
  double mse_pixel;  // reconstructed image against the clean image
  int sweeps;
  std::size_t num_groups;
};

struct WaveletRun {
  std::vector<WaveletRow> rows;
  int num_tasks = 0;
  Eigen::MatrixXd clean;
  std::vector<Eigen::MatrixXd> best_images;  // per model, at its best (a, beta)
};

WaveletRun run_wavelet_denoise(const WaveletOptions& opt, const Eigen::MatrixXd& clean);

/// Minimum per-model coefficient-space MSE over the rows.
double best_mse(const std::vector<WaveletRow>& rows, const std::string& model);

struct DenoiseResult {
  Eigen::MatrixXd image;
  FitResult fit;
};

/// Patches of a noisy image -> Haar coefficients -> fit -> inverse -> overlap average.
DenoiseResult denoise_image(const Eigen::MatrixXd& noisy, ModelKind model, const PriorConfig& prior,
                            const HyperParams& hp, const FitConfig& cfg, int patch, int stride,
                            int as_rounds);

/// Runs a named experiment from a config and writes its outputs (CSV, JSON
/// summary, resolved config) to out_dir.
void run_experiment(const std::string& name, Config& config, const std::string& out_dir);

}  // namespace gwl
