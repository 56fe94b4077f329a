#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spiked/estimation.hpp"
#include "spiked/model.hpp"

namespace spiked {

enum class DataModel { isotropic, doa };

std::string_view to_string(DataModel m);
DataModel parse_data_model(std::string_view name);

double db_to_sigma2(double db);
double sigma2_to_db(double sigma2);

/// One Monte Carlo configuration. When `alphas` is empty the true spike
/// values are redrawn every trial as a uniformly random strictly decreasing
/// K-subset of the prior support, keeping `mults` fixed.
struct TrialConfig {
  int p = 500;
  int n = 1000;
  std::vector<int> mults{1, 4, 2};
  double sigma2 = 1.0;
  std::vector<double> alphas;
  PriorSpec prior{std::vector<double>{1.0, 3.0, 5.0, 7.0}};
  int k_max = 4;
  int trials = 500;
  std::uint64_t master_seed = 1;
  DataModel data_model = DataModel::doa;
  VarianceConvention convention = VarianceConvention::proposition;
  int j_max = 0;  // 0 selects default_j_max(p)

  int num_spikes() const { return static_cast<int>(mults.size()); }
  void validate() const;
};

struct TrialOutcome {
  std::vector<double> alphas_true;  // descending
  std::vector<int> mults_true;
  int k_hat = 0;
  std::vector<int> mults_hat;
  std::vector<int> mults_known_k;  // estimate with K fixed to the truth
  bool undetectable = false;       // some true alpha is below sigma2*sqrt(gamma)

  bool k_correct() const { return k_hat == static_cast<int>(mults_true.size()); }
  bool mults_correct() const { return k_correct() && mults_hat == mults_true; }
  bool known_k_correct() const { return mults_known_k == mults_true; }
};

/// Fully determined by (config.master_seed, trial_index).
TrialOutcome run_trial(const TrialConfig& config, std::uint64_t trial_index);

/// OpenMP over trials; `threads` <= 0 keeps the OpenMP default. Results are
/// stored by trial index, so the output does not depend on the thread count.
std::vector<TrialOutcome> run_trials(const TrialConfig& config, int threads = 0);

/// Single-threaded reference for run_trials.
std::vector<TrialOutcome> run_trials_serial(const TrialConfig& config);

struct ExperimentRow {
  std::string label;
  int p = 0;
  int n = 0;
  double sigma2 = 0.0;
  std::vector<int> mults;
  int trials = 0;
  double prob_correct = 0.0;
  double std_error = 0.0;          // binomial sqrt(p(1-p)/trials)
  double mult_correct_rate = 0.0;  // P(m_hat = m | k_hat = K); NaN when k_hat never equals K
  double known_k_mult_rate = 0.0;
  int undetectable_trials = 0;
  double seconds = 0.0;
};

ExperimentRow summarize(const TrialConfig& config, std::span<const TrialOutcome> outcomes,
                        std::string label = {});

struct ExperimentResult {
  std::string kind;
  std::vector<ExperimentRow> rows;
};

/// One row per noise level (in dB, sigma2 = 10^(db/10)); all rows share the
/// per-trial random streams of `config.master_seed`.
ExperimentResult sweep_sigma2(const TrialConfig& config, std::span<const double> grid_db,
                              int threads = 0);

struct DimensionModel {
  std::string name;
  std::vector<int> mults;
};

/// One row per (model, p) with n = round(p / gamma).
ExperimentResult sweep_dimension(const TrialConfig& config, std::span<const DimensionModel> models,
                                 std::span<const int> p_grid, double gamma = 0.5,
                                 int threads = 0);

struct CltClusterStats {
  double empirical_mean = 0.0;
  double empirical_variance = 0.0;
  double theoretical_mean = 0.0;
  double theoretical_variance = 0.0;
};

/// Moments of the cluster sums over `trials` isotropic draws of a fixed spec,
/// next to m_k phi(alpha_k) and the variance convention's prediction.
std::vector<CltClusterStats> clt_diagnostic(const SpikeSpec& spec, int trials,
                                            std::uint64_t master_seed,
                                            VarianceConvention convention = VarianceConvention::proposition,
                                            int threads = 0);

}  // namespace spiked
