#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "spiked/errors.hpp"
#include "spiked/estimation.hpp"
#include "spiked/model.hpp"
#include "spiked/rng.hpp"
#include "spiked/spectrum.hpp"

using namespace spiked;

namespace {

constexpr double kPi = std::numbers::pi;

// Closed-form variance of a cluster sum, written against the normalized parameterization.
double oracle_variance(double alpha, double sigma2, double gamma, int m, int n, double c) {
  const double a = alpha / sigma2 + 1.0;
  const double v2 = 2.0 * a * a * ((a - 1.0) * (a - 1.0) - gamma) / ((a - 1.0) * (a - 1.0));
  return c * m * v2 * sigma2 * sigma2 / n;
}

double oracle_phi(double x, double s2, double g) { return x + s2 + g * s2 * (1.0 + s2 / x); }

double gaussian_density(double x, double mean, double var) {
  return std::exp(-(x - mean) * (x - mean) / (2.0 * var)) / std::sqrt(2.0 * kPi * var);
}

SpectrumSummary simulated(const SpikeSpec& spec, std::uint64_t seed, Basis basis = Basis::identity) {
  return eigenvalues_desc(sample_covariance(generate_isotropic(spec, seed, basis)), spec.n);
}

}  // namespace

TEST(Multiplicities, WorkedExample) {
  const SpectrumSummary s = summarize_eigenvalues({9.0, 6.5, 6.3, 1.2, 1.1, 1.05, 1.0}, 14);
  const std::vector<double> gaps{2.5, 0.2, 5.1, 0.1, 0.05, 0.05};
  ASSERT_EQ(s.gaps.size(), gaps.size());
  for (std::size_t i = 0; i < gaps.size(); ++i) EXPECT_NEAR(s.gaps[i], gaps[i], 1e-12);
  const MultiplicityEstimate est = estimate_multiplicities(s, 2, 6);
  EXPECT_EQ(est.gap_indices, (std::vector<int>{1, 3}));
  EXPECT_EQ(est.mults, (std::vector<int>{1, 2}));
  EXPECT_NEAR(est.gap_values[0], 2.5, 1e-12);
  EXPECT_NEAR(est.gap_values[1], 5.1, 1e-12);

  const MultiplicityEstimate one = estimate_multiplicities(s, 1, 6);
  EXPECT_EQ(one.mults, (std::vector<int>{3}));
}

TEST(Multiplicities, Errors) {
  const SpectrumSummary s = summarize_eigenvalues({5, 4, 3, 2, 1}, 10);
  EXPECT_THROW(estimate_multiplicities(s, 0, 3), ParameterError);
  EXPECT_THROW(estimate_multiplicities(s, 4, 3), ParameterError);
  EXPECT_THROW(estimate_multiplicities(s, 1, 5), ParameterError);
  EXPECT_NO_THROW(estimate_multiplicities(s, 4, 4));
}

TEST(Multiplicities, StructuralInvariantsOnRandomSpectra) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int rep = 0; rep < 200; ++rep) {
    const int p = 5 + static_cast<int>(gen() % 30);
    std::vector<double> ev(static_cast<std::size_t>(p));
    for (double& v : ev) v = u(gen);
    const SpectrumSummary s = summarize_eigenvalues(ev, 2 * p);
    const int j_max = 1 + static_cast<int>(gen() % (p - 1));
    const int k = 1 + static_cast<int>(gen() % j_max);
    const MultiplicityEstimate est = estimate_multiplicities(s, k, j_max);
    ASSERT_EQ(static_cast<int>(est.mults.size()), k);
    int total = 0;
    for (int m : est.mults) {
      EXPECT_GE(m, 1);
      total += m;
    }
    EXPECT_EQ(total, est.gap_indices.back());
    EXPECT_TRUE(std::is_sorted(est.gap_indices.begin(), est.gap_indices.end()));
    EXPECT_EQ(std::adjacent_find(est.gap_indices.begin(), est.gap_indices.end()),
              est.gap_indices.end());

    std::shuffle(ev.begin(), ev.end(), gen);
    const MultiplicityEstimate again = estimate_multiplicities(summarize_eigenvalues(ev, 2 * p), k, j_max);
    EXPECT_EQ(again.mults, est.mults);
    EXPECT_EQ(again.gap_indices, est.gap_indices);
  }
}

TEST(Multiplicities, DegenerateSpectrumFlagsLowContrast) {
  const SpectrumSummary s = eigenvalues_desc(Eigen::MatrixXcd::Identity(12, 12), 24);
  const MultiplicityEstimate est = estimate_multiplicities(s, 3, default_j_max(12));
  EXPECT_EQ(est.gap_indices, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(est.mults, (std::vector<int>{1, 1, 1}));
  EXPECT_TRUE(est.low_contrast);

  const SpectrumSummary sharp = summarize_eigenvalues({9, 5, 1.02, 1.01, 1.0, 0.99, 0.98, 0.97}, 16);
  EXPECT_FALSE(estimate_multiplicities(sharp, 2, 7).low_contrast);
}

TEST(Multiplicities, DefaultJMax) {
  EXPECT_EQ(default_j_max(500), 125);
  EXPECT_EQ(default_j_max(2), 1);
  EXPECT_EQ(default_j_max(4), 1);
  EXPECT_EQ(default_j_max(9), 2);
}

TEST(Multiplicities, KnownKRecoveryOnSimulatedData) {
  const SpikeSpec spec{{7.0, 5.0, 3.0}, {1, 4, 2}, 1.0, 500, 1000};
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto est = estimate_multiplicities(simulated(spec, seed), 3, default_j_max(spec.p));
    hits += est.mults == spec.mults;
  }
  EXPECT_GE(hits, 99);
}

TEST(Multiplicities, KnownKRecoveryImprovesWithDimension) {
  const std::vector<int> mults{1, 4, 2};
  double previous = -1.0;
  for (int p : {100, 200, 500}) {
    const SpikeSpec spec{{7.0, 5.0, 3.0}, mults, 1.0, p, 2 * p};
    int hits = 0;
    const int trials = 60;
    for (int t = 0; t < trials; ++t) {
      const auto s = simulated(spec, derive_seed(5, "consistency", static_cast<std::uint64_t>(p * 1000 + t)));
      hits += estimate_multiplicities(s, 3, default_j_max(p)).mults == mults;
    }
    const double rate = static_cast<double>(hits) / trials;
    EXPECT_GE(rate, previous - 0.05) << "p=" << p;
    previous = rate;
  }
  EXPECT_GE(previous, 0.95);
}

TEST(ClusterVariance, Examples) {
  EXPECT_NEAR(cluster_variance(3.0, 1.0, 0.5, 1, 1000, VarianceConvention::proposition_literal),
              0.060444, 5e-7);
  EXPECT_NEAR(cluster_variance(3.0, 1.0, 0.5, 1, 1000, VarianceConvention::proposition),
              0.060444 / 4.0, 5e-7);
  EXPECT_NEAR(cluster_variance(3.0, 1.0, 0.5, 1, 1000, VarianceConvention::paper_literal),
              30.2222, 5e-4);
  // Vanishing gamma leaves 2 * alpha'^2.
  EXPECT_NEAR(cluster_variance(3.0, 1.0, 1e-14, 1, 1, VarianceConvention::paper_literal), 32.0,
              1e-10);
}

TEST(ClusterVariance, MatchesNormalizedFormula) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  for (int rep = 0; rep < 100; ++rep) {
    const double s2 = u(gen), g = u(gen) / 3.0;
    const double alpha = s2 * std::sqrt(g) * (1.05 + u(gen));
    const int m = 1 + rep % 5, n = 100 + rep;
    EXPECT_NEAR(cluster_variance(alpha, s2, g, m, n, VarianceConvention::proposition_literal) /
                    oracle_variance(alpha, s2, g, m, n, 2.0),
                1.0, 1e-12);
    EXPECT_NEAR(cluster_variance(alpha, s2, g, m, n) / oracle_variance(alpha, s2, g, m, n, 0.5),
                1.0, 1e-12);
  }
}

TEST(ClusterVariance, Errors) {
  EXPECT_THROW(cluster_variance(0.7, 1.0, 0.5, 1, 100), DomainError);
  EXPECT_THROW(cluster_variance(1.0, 1.0, 1.0, 1, 100), DomainError);
  EXPECT_THROW(cluster_variance(3.0, 0.0, 0.5, 1, 100, VarianceConvention::paper_literal),
               DomainError);
  EXPECT_GT(cluster_variance(3.0, 0.0, 0.5, 1, 100), 0.0);
}

TEST(ClusterVariance, ConventionNames) {
  for (auto c : {VarianceConvention::proposition, VarianceConvention::proposition_literal,
                 VarianceConvention::paper_literal})
    EXPECT_EQ(parse_variance_convention(to_string(c)), c);
  EXPECT_THROW(parse_variance_convention("other"), ParameterError);
}

TEST(ClusterLikelihood, ExactMeansLeaveNormalizers) {
  const std::vector<double> alphas{7.0, 3.0};
  const std::vector<int> mults{1, 2};
  const double s2 = 1.0, g = 0.5;
  const int n = 1000;
  std::vector<double> sums;
  double expected = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    sums.push_back(mults[k] * oracle_phi(alphas[k], s2, g));
    expected += -0.5 * std::log(2.0 * kPi * oracle_variance(alphas[k], s2, g, mults[k], n, 0.5));
  }
  EXPECT_NEAR(cluster_log_likelihood(sums, alphas, mults, s2, g, n), expected, 1e-12);
}

TEST(ClusterLikelihood, MatchesProductOfDensities) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const int k = 1 + rep % 3;
    const double s2 = 0.5 + u(gen), g = 0.2 + 0.6 * u(gen);
    const int n = 50 + rep;
    std::vector<double> alphas, sums;
    std::vector<int> mults;
    double product = 1.0;
    for (int i = 0; i < k; ++i) {
      alphas.push_back(s2 * (2.0 + 4.0 * u(gen)));
      mults.push_back(1 + static_cast<int>(gen() % 3));
      const double var = oracle_variance(alphas[i], s2, g, mults[i], n, 0.5);
      const double mean = mults[i] * oracle_phi(alphas[i], s2, g);
      sums.push_back(mean + (u(gen) - 0.5) * 4.0 * std::sqrt(var));
      product *= gaussian_density(sums[i], mean, var);
    }
    const double ll = cluster_log_likelihood(sums, alphas, mults, s2, g, n);
    EXPECT_NEAR(std::exp(ll) / product, 1.0, 1e-12);
  }
}

TEST(ClusterLikelihood, Errors) {
  const std::vector<double> g{5.0};
  const std::vector<double> a{0.5};
  const std::vector<int> m{1};
  EXPECT_THROW(cluster_log_likelihood(g, a, m, 1.0, 0.5, 100), DomainError);
  const std::vector<double> a2{5.0, 3.0};
  EXPECT_THROW(cluster_log_likelihood(g, a2, m, 1.0, 0.5, 100), ParameterError);
}

TEST(PriorSpecTest, TuplesAreDecreasingSubsets) {
  const PriorSpec prior({5.0, 1.0, 7.0, 3.0});
  EXPECT_EQ(prior.support(), (std::vector<double>{1.0, 3.0, 5.0, 7.0}));
  EXPECT_EQ(prior.tuple_count(2), 6);
  EXPECT_EQ(prior.tuple_count(4), 1);
  EXPECT_EQ(prior.tuple_count(5), 0);
  const auto pairs = prior.tuples(2);
  ASSERT_EQ(pairs.size(), 6u);
  EXPECT_EQ(pairs.front(), (std::vector<double>{7.0, 5.0}));
  EXPECT_EQ(pairs.back(), (std::vector<double>{3.0, 1.0}));
  for (const auto& t : pairs) EXPECT_GT(t[0], t[1]);
  EXPECT_TRUE(prior.tuples(5).empty());
  EXPECT_THROW(PriorSpec({1.0, 1.0}), ParameterError);
  EXPECT_THROW(PriorSpec({1.0, -2.0}), ParameterError);
  EXPECT_THROW(PriorSpec(std::vector<double>{}), ParameterError);
}

TEST(MarginalLikelihood, SingletonSupportReducesToConditional) {
  const std::vector<double> g{6.9};
  const std::vector<int> m{1};
  const std::vector<double> a{5.0};
  EXPECT_NEAR(marginal_log_likelihood(g, m, 1, PriorSpec({5.0}), 1.0, 0.5, 1000),
              cluster_log_likelihood(g, a, m, 1.0, 0.5, 1000), 1e-12);
}

TEST(MarginalLikelihood, MatchesBruteForceOverPairs) {
  const std::vector<double> support{1.0, 3.0, 5.0, 7.0};
  const double s2 = 0.4, gam = 0.5;
  const int n = 400;
  const std::vector<int> mults{1, 2};
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int rep = 0; rep < 20; ++rep) {
    const std::vector<double> g{oracle_phi(5.0, s2, gam) + u(gen), 2.0 * oracle_phi(3.0, s2, gam) + u(gen)};
    double total = 0.0;
    int count = 0;
    for (double a : support)
      for (double b : support) {
        if (!(a > b)) continue;
        ++count;
        total += gaussian_density(g[0], oracle_phi(a, s2, gam), oracle_variance(a, s2, gam, 1, n, 0.5)) *
                 gaussian_density(g[1], 2.0 * oracle_phi(b, s2, gam), oracle_variance(b, s2, gam, 2, n, 0.5));
      }
    ASSERT_EQ(count, 6);
    const double ll = marginal_log_likelihood(g, mults, 2, PriorSpec(support), s2, gam, n);
    EXPECT_NEAR(std::exp(ll) / (total / count), 1.0, 1e-12);
  }
}

TEST(MarginalLikelihood, NegligibleSupportValueShiftsByCountRatio) {
  const std::vector<double> g{6.6};
  const std::vector<int> m{1};
  const double base = marginal_log_likelihood(g, m, 1, PriorSpec({5.0, 7.0}), 1.0, 0.5, 1000);
  const double wider = marginal_log_likelihood(g, m, 1, PriorSpec({5.0, 7.0, 500.0}), 1.0, 0.5, 1000);
  EXPECT_NEAR(wider - base, std::log(2.0 / 3.0), 1e-12);
}

TEST(MarginalLikelihood, FiniteFarFromEverySupportPoint) {
  const std::vector<double> g{1e4, 2e4};
  const std::vector<int> m{1, 2};
  const double ll = marginal_log_likelihood(g, m, 2, PriorSpec({1.0, 3.0, 5.0, 7.0}), 1.0, 0.5, 1000);
  EXPECT_TRUE(std::isfinite(ll));
}

TEST(MarginalLikelihood, Errors) {
  const std::vector<double> g{6.6, 6.0};
  const std::vector<int> m{1, 1};
  EXPECT_THROW(marginal_log_likelihood(g, m, 2, PriorSpec({5.0}), 1.0, 0.5, 100), EmptyPriorError);
  EXPECT_THROW(marginal_log_likelihood(g, m, 1, PriorSpec({5.0}), 1.0, 0.5, 100), ParameterError);
}

TEST(EstimateK, ContractOnSimulatedData) {
  const SpikeSpec spec{{7.0, 5.0, 3.0}, {1, 4, 2}, 0.1, 500, 1000};
  const SpectrumSummary s = simulated(spec, 21, Basis::haar);
  const PriorSpec prior({1.0, 3.0, 5.0, 7.0});
  const JointEstimate est = estimate_k(s, prior, spec.sigma2);
  ASSERT_EQ(est.log_marginals.size(), 4u);
  const auto best = std::max_element(est.log_marginals.begin(), est.log_marginals.end());
  EXPECT_EQ(est.k_hat, 1 + (best - est.log_marginals.begin()));
  EXPECT_EQ(est.k_hat, 3);
  EXPECT_EQ(est.mults.mults, spec.mults);
  ASSERT_EQ(est.alphas_hat.size(), 3u);
  EXPECT_TRUE(est.alphas_complete);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(est.alphas_hat[k], spec.alphas[k], 0.12 * spec.alphas[k]);

  EstimatorOptions one;
  one.k_max = 1;
  EXPECT_EQ(estimate_k(s, prior, spec.sigma2, one).log_marginals.size(), 1u);
  EstimatorOptions bad;
  bad.k_max = 5;
  EXPECT_THROW(estimate_k(s, prior, spec.sigma2, bad), ParameterError);
}

TEST(EstimateK, SingleLargeSpike) {
  const SpikeSpec spec{{7.0}, {1}, 0.01, 200, 400};
  const PriorSpec prior({1.0, 3.0, 5.0, 7.0});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const JointEstimate est = estimate_k(simulated(spec, seed), prior, spec.sigma2);
    EXPECT_EQ(est.k_hat, 1) << "seed " << seed;
  }
}

TEST(EstimateK, ScaleEquivariance) {
  // Rescaling by c turns each k-dimensional density into density / c^k, so the
  // log marginals shift by exactly -k log c and the gap ranking is unchanged.
  const SpikeSpec spec{{7.0, 5.0, 3.0}, {1, 4, 2}, 0.3, 300, 600};
  const std::vector<double> support{1.0, 3.0, 5.0, 7.0};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SpectrumSummary s = simulated(spec, seed);
    const JointEstimate base = estimate_k(s, PriorSpec(support), spec.sigma2);
    double margin = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 4; ++k)
      if (k != base.k_hat) margin = std::min(margin, base.log_marginals[base.k_hat - 1] - base.log_marginals[k - 1]);
    for (double c : {0.01, 3.0, 250.0}) {
      std::vector<double> scaled = s.eigenvalues;
      for (double& v : scaled) v *= c;
      std::vector<double> support_c = support;
      for (double& v : support_c) v *= c;
      const JointEstimate est =
          estimate_k(summarize_eigenvalues(scaled, s.n), PriorSpec(support_c), c * spec.sigma2);
      for (int k = 1; k <= 4; ++k) {
        EXPECT_EQ(est.candidates[k - 1].mults, base.candidates[k - 1].mults);
        const double expected = base.log_marginals[k - 1] - k * std::log(c);
        EXPECT_NEAR(est.log_marginals[k - 1], expected, 1e-9 * std::max(1.0, std::abs(expected)));
      }
      if (margin > 3.0 * std::abs(std::log(c))) {
        EXPECT_EQ(est.k_hat, base.k_hat);
        EXPECT_EQ(est.mults.mults, base.mults.mults);
      }
    }
  }
}

TEST(EstimateK, TiesResolveToSmallerK) {
  // Every support value is undetectable at this noise level, so all marginals are -inf.
  const SpikeSpec spec{{30.0}, {1}, 10.0, 40, 80};
  const JointEstimate est = estimate_k(simulated(spec, 1), PriorSpec({1.0, 3.0}), spec.sigma2,
                                       {2, 0, VarianceConvention::proposition});
  ASSERT_EQ(est.log_marginals.size(), 2u);
  EXPECT_EQ(est.log_marginals[0], -std::numeric_limits<double>::infinity());
  EXPECT_EQ(est.log_marginals[1], -std::numeric_limits<double>::infinity());
  EXPECT_EQ(est.k_hat, 1);
}

TEST(EstimateAlphas, RoundTripAndLimits) {
  const double s2 = 1.0, g = 0.5;
  const std::vector<double> alphas{7.0, 5.0, 3.0};
  const std::vector<int> mults{1, 4, 2};
  std::vector<double> ev;
  for (std::size_t k = 0; k < 3; ++k)
    for (int j = 0; j < mults[k]; ++j) ev.push_back(oracle_phi(alphas[k], s2, g));
  for (int j = 0; j < 7; ++j) ev.push_back(1.0);
  const SpectrumSummary s = summarize_eigenvalues(ev, 28);
  const auto hat = estimate_alphas(s, ClusterPartition(mults), s2, g);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(hat[k], alphas[k], 1e-10);

  const auto noiseless = estimate_alphas(summarize_eigenvalues({4.0, 2.0, 1.0, 0.0}, 8),
                                         ClusterPartition({1, 2}), 0.0, 0.5);
  EXPECT_NEAR(noiseless[0], 4.0, 1e-14);
  EXPECT_NEAR(noiseless[1], 1.5, 1e-14);

  EXPECT_THROW(estimate_alphas(summarize_eigenvalues({2.5, 1.0}, 4), ClusterPartition({1}), 1.0, 0.5),
               OutOfRangeError);
}

TEST(EstimateAlphas, SimulatedDoubleSpike) {
  const SpikeSpec spec{{5.0}, {2}, 1.0, 1000, 2000};
  const auto hat = estimate_alphas(simulated(spec, 9), ClusterPartition({2}), 1.0, spec.gamma());
  EXPECT_NEAR(hat[0], 5.0, 0.15);
}
