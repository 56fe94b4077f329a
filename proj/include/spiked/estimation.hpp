#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spiked/spectrum.hpp"

namespace spiked {

/// Multiplicities read off the K largest consecutive-eigenvalue gaps.
struct MultiplicityEstimate {
  std::vector<int> mults;         // m_1..m_K
  std::vector<int> gap_indices;   // selected 1-based gap indices, ascending
  std::vector<double> gap_values; // gap sizes at gap_indices
  /// Largest selected gap is below 10x the median gap of the scanned range.
  bool low_contrast = false;
};

/// How Var(g_k) is derived from the cluster-sum limit law.
///
///   proposition          c * m_k * v_k^2 * sigma2^2 / n with c = 1/2, the
///                        constant that matches complex-valued observations
///   proposition_literal  2 * m_k * v_k^2 * sigma2^2 / n (real-valued constant)
///   paper_literal        v_k^2, no sample-size or noise scaling
///
/// v_k^2 = 2 a'^2 ((a'-1)^2 - gamma) / (a'-1)^2 with a' = alpha/sigma2 + 1.
enum class VarianceConvention { proposition, proposition_literal, paper_literal };

std::string_view to_string(VarianceConvention c);
VarianceConvention parse_variance_convention(std::string_view name);

/// Finite prior support E; the prior over K-tuples is uniform on the strictly
/// decreasing K-subsets of E.
class PriorSpec {
 public:
  PriorSpec() = default;
  explicit PriorSpec(std::vector<double> support);

  /// Ascending, distinct, positive.
  const std::vector<double>& support() const { return support_; }
  int size() const { return static_cast<int>(support_.size()); }

  /// All strictly decreasing k-tuples drawn from the support, in
  /// lexicographic order of the descending support.
  std::vector<std::vector<double>> tuples(int k) const;
  /// C(|E|, k).
  long long tuple_count(int k) const;

 private:
  std::vector<double> support_;
};

struct JointEstimate {
  int k_hat = 0;
  MultiplicityEstimate mults;
  /// phi_inverse of the cluster means; NaN where a cluster mean does not
  /// clear the bulk edge (alphas_complete is then false).
  std::vector<double> alphas_hat;
  bool alphas_complete = true;
  /// log f(g | k) for k = 1..k_max (-inf when k exceeds j_max or no prior
  /// tuple is detectable).
  std::vector<double> log_marginals;
  /// Multiplicity estimate for each candidate k.
  std::vector<MultiplicityEstimate> candidates;
};

struct EstimatorOptions {
  int k_max = 4;
  int j_max = 0;  // 0 selects default_j_max(p)
  VarianceConvention convention = VarianceConvention::proposition;
};

/// min(p - 1, floor(p / 4)), at least 1.
int default_j_max(int p);

MultiplicityEstimate estimate_multiplicities(const SpectrumSummary& summary, int k, int j_max);

/// Var(g_k) under the chosen convention. Requires alpha > sigma2 * sqrt(gamma).
double cluster_variance(double alpha, double sigma2, double gamma, int m_k, int n,
                        VarianceConvention convention = VarianceConvention::proposition);

/// Sum over clusters of the Gaussian log-density of g_k with mean m_k phi(alpha_k).
double cluster_log_likelihood(std::span<const double> g, std::span<const double> alphas,
                              std::span<const int> mults, double sigma2, double gamma, int n,
                              VarianceConvention convention = VarianceConvention::proposition);

/// log of the prior average of exp(cluster_log_likelihood) over the k-tuples
/// of the prior. Tuples containing an undetectable value contribute zero
/// likelihood; returns -inf only if every tuple does.
double marginal_log_likelihood(std::span<const double> g, std::span<const int> mults, int k,
                               const PriorSpec& prior, double sigma2, double gamma, int n,
                               VarianceConvention convention = VarianceConvention::proposition);

JointEstimate estimate_k(const SpectrumSummary& summary, const PriorSpec& prior, double sigma2,
                         const EstimatorOptions& options = {});

std::vector<double> estimate_alphas(const SpectrumSummary& summary,
                                    const ClusterPartition& partition, double sigma2,
                                    double gamma);

}  // namespace spiked
