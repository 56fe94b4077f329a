#include "spiked/montecarlo.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <string>

#include <cblas.h>
#include <omp.h>

#include "spiked/errors.hpp"
#include "spiked/rng.hpp"
#include "spiked/spectrum.hpp"

namespace spiked {

namespace {

template <typename Fn>
void parallel_for_trials(int count, int threads, Fn&& body) {
  // One BLAS thread per trial; concurrency comes from the trial loop.
  openblas_set_num_threads(1);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  const int requested = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(requested)
  for (int t = 0; t < count; ++t) {
    try {
      body(t);
    } catch (...) {
      errors[t] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<double> draw_alphas(const TrialConfig& config, std::uint64_t trial_seed) {
  if (!config.alphas.empty()) return config.alphas;
  const auto tuples = config.prior.tuples(config.num_spikes());
  RandomStream rng(trial_seed, "alphas");
  return tuples[rng.below(tuples.size())];
}

}  // namespace

std::string_view to_string(DataModel m) { return m == DataModel::doa ? "doa" : "isotropic"; }

DataModel parse_data_model(std::string_view name) {
  if (name == "doa") return DataModel::doa;
  if (name == "isotropic") return DataModel::isotropic;
  throw ParameterError("unknown data model '" + std::string(name) + "'");
}

double db_to_sigma2(double db) { return std::pow(10.0, db / 10.0); }
double sigma2_to_db(double sigma2) { return 10.0 * std::log10(sigma2); }

void TrialConfig::validate() const {
  if (trials < 1) throw ParameterError("trial config: trials must be >= 1");
  if (mults.empty()) throw ParameterError("trial config: mults must be nonempty");
  if (prior.size() == 0) throw ParameterError("trial config: prior support is empty");
  if (k_max < 1 || k_max > prior.size())
    throw ParameterError("trial config: k_max must lie in [1, |E|]");
  if (alphas.empty() && num_spikes() > prior.size())
    throw ParameterError("trial config: K exceeds |E|, no true spikes can be drawn");
  if (!(sigma2 > 0.0)) throw ParameterError("trial config: sigma2 must be positive");
  const int jm = j_max > 0 ? j_max : default_j_max(p);
  if (jm > p - 1) throw ParameterError("trial config: j_max must be <= p - 1");
  if (num_spikes() > jm) throw ParameterError("trial config: K exceeds j_max");
  SpikeSpec probe{alphas.empty() ? prior.tuples(num_spikes()).front() : alphas, mults, sigma2, p, n};
  probe.validate();
}

TrialOutcome run_trial(const TrialConfig& config, std::uint64_t trial_index) {
  const std::uint64_t seed = derive_seed(config.master_seed, "trial", trial_index);
  TrialOutcome out;
  out.alphas_true = draw_alphas(config, seed);
  out.mults_true = config.mults;
  const SpikeSpec spec{out.alphas_true, config.mults, config.sigma2, config.p, config.n};
  for (double a : out.alphas_true) out.undetectable |= !detectable(a, spec.sigma2, spec.gamma());

  const ObservationMatrix x =
      config.data_model == DataModel::doa
          ? generate_doa(spec, draw_angles(spec.total_multiplicity(), seed), seed)
          : generate_isotropic(spec, seed);
  const SpectrumSummary summary = eigenvalues_desc(sample_covariance(x), config.n);

  EstimatorOptions options{config.k_max, config.j_max, config.convention};
  const JointEstimate est = estimate_k(summary, config.prior, config.sigma2, options);
  out.k_hat = est.k_hat;
  out.mults_hat = est.mults.mults;
  const int j_max = config.j_max > 0 ? config.j_max : default_j_max(config.p);
  out.mults_known_k = estimate_multiplicities(summary, config.num_spikes(), j_max).mults;
  return out;
}

std::vector<TrialOutcome> run_trials(const TrialConfig& config, int threads) {
  config.validate();
  std::vector<TrialOutcome> out(static_cast<std::size_t>(config.trials));
  parallel_for_trials(config.trials, threads,
                      [&](int t) { out[t] = run_trial(config, static_cast<std::uint64_t>(t)); });
  return out;
}

std::vector<TrialOutcome> run_trials_serial(const TrialConfig& config) {
  config.validate();
  std::vector<TrialOutcome> out;
  out.reserve(static_cast<std::size_t>(config.trials));
  for (int t = 0; t < config.trials; ++t) out.push_back(run_trial(config, static_cast<std::uint64_t>(t)));
  return out;
}

ExperimentRow summarize(const TrialConfig& config, std::span<const TrialOutcome> outcomes,
                        std::string label) {
  ExperimentRow row;
  row.label = std::move(label);
  row.p = config.p;
  row.n = config.n;
  row.sigma2 = config.sigma2;
  row.mults = config.mults;
  row.trials = static_cast<int>(outcomes.size());
  int correct = 0, mults_ok = 0, known_ok = 0;
  for (const auto& o : outcomes) {
    correct += o.k_correct();
    mults_ok += o.mults_correct();
    known_ok += o.known_k_correct();
    row.undetectable_trials += o.undetectable;
  }
  const double t = row.trials;
  row.prob_correct = correct / t;
  row.std_error = std::sqrt(row.prob_correct * (1.0 - row.prob_correct) / t);
  row.mult_correct_rate = correct > 0 ? static_cast<double>(mults_ok) / correct
                                      : std::numeric_limits<double>::quiet_NaN();
  row.known_k_mult_rate = known_ok / t;
  return row;
}

ExperimentResult sweep_sigma2(const TrialConfig& config, std::span<const double> grid_db,
                              int threads) {
  if (grid_db.empty()) throw ParameterError("sweep_sigma2: empty noise grid");
  ExperimentResult result{"sigma2_sweep", {}};
  for (double db : grid_db) {
    TrialConfig c = config;
    c.sigma2 = db_to_sigma2(db);
    const auto start = std::chrono::steady_clock::now();
    const auto outcomes = run_trials(c, threads);
    ExperimentRow row = summarize(c, outcomes, "sigma2");
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.rows.push_back(std::move(row));
  }
  return result;
}

ExperimentResult sweep_dimension(const TrialConfig& config, std::span<const DimensionModel> models,
                                 std::span<const int> p_grid, double gamma, int threads) {
  if (models.empty() || p_grid.empty()) throw ParameterError("sweep_dimension: empty grid");
  if (!(gamma > 0.0)) throw ParameterError("sweep_dimension: gamma must be positive");
  ExperimentResult result{"dimension_sweep", {}};
  for (const auto& model : models) {
    for (int p : p_grid) {
      TrialConfig c = config;
      c.mults = model.mults;
      c.p = p;
      c.n = static_cast<int>(std::lround(p / gamma));
      const auto start = std::chrono::steady_clock::now();
      const auto outcomes = run_trials(c, threads);
      ExperimentRow row = summarize(c, outcomes, model.name);
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

std::vector<CltClusterStats> clt_diagnostic(const SpikeSpec& spec, int trials,
                                            std::uint64_t master_seed,
                                            VarianceConvention convention, int threads) {
  spec.validate();
  if (trials < 2) throw ParameterError("clt_diagnostic: need at least two trials");
  for (double a : spec.alphas)
    if (!detectable(a, spec.sigma2, spec.gamma()))
      throw DomainError("clt_diagnostic: every spike must be detectable");

  const int k = spec.num_spikes();
  const int m = spec.total_multiplicity();
  const ClusterPartition partition(spec.mults);
  std::vector<std::vector<double>> sums(static_cast<std::size_t>(trials));
  parallel_for_trials(trials, threads, [&](int t) {
    const std::uint64_t seed = derive_seed(master_seed, "clt", static_cast<std::uint64_t>(t));
    const ObservationMatrix x = generate_isotropic(spec, seed);
    SpectrumSummary top;
    top.eigenvalues = leading_eigenvalues(sample_covariance(x), m);
    top.p = m;
    top.n = spec.n;
    sums[t] = cluster_sums(top, partition);
  });

  std::vector<CltClusterStats> out(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    double mean = 0.0;
    for (const auto& s : sums) mean += s[c];
    mean /= trials;
    double var = 0.0;
    for (const auto& s : sums) var += (s[c] - mean) * (s[c] - mean);
    var /= (trials - 1);
    out[c].empirical_mean = mean;
    out[c].empirical_variance = var;
    out[c].theoretical_mean = spec.mults[c] * phi(spec.alphas[c], spec.sigma2, spec.gamma());
    out[c].theoretical_variance =
        cluster_variance(spec.alphas[c], spec.sigma2, spec.gamma(), spec.mults[c], spec.n, convention);
  }
  return out;
}

}  // namespace spiked
