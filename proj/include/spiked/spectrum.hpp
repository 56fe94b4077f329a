#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spiked/model.hpp"

namespace spiked {

/// Descending sample eigenvalues and the consecutive gaps between them.
/// gaps[j] = eigenvalues[j] - eigenvalues[j + 1] (0-based storage; the gap
/// after the j-th largest eigenvalue, 1-based, is gaps[j - 1]).
struct SpectrumSummary {
  std::vector<double> eigenvalues;
  std::vector<double> gaps;
  int p = 0;
  int n = 0;
  int clamped = 0;  // tiny negative eigenvalues raised to zero

  double gamma() const { return static_cast<double>(p) / static_cast<double>(n); }
};

/// Consecutive blocks of the descending spectrum.
/// Cluster k (0-based) covers eigenvalue indices [begin(k), end(k)).
class ClusterPartition {
 public:
  explicit ClusterPartition(std::vector<int> mults);

  const std::vector<int>& mults() const { return mults_; }
  /// Cumulative sums s_k = m_1 + ... + m_k.
  const std::vector<int>& boundaries() const { return boundaries_; }
  int size() const { return static_cast<int>(mults_.size()); }
  int begin(int k) const { return k == 0 ? 0 : boundaries_[k - 1]; }
  int end(int k) const { return boundaries_[k]; }
  int last_boundary() const { return boundaries_.back(); }

 private:
  std::vector<int> mults_;
  std::vector<int> boundaries_;
};

/// S = X X^H / n through BLAS zherk. Both triangles are filled.
Eigen::MatrixXcd sample_covariance(const Eigen::MatrixXcd& x);
inline Eigen::MatrixXcd sample_covariance(const ObservationMatrix& x) {
  return sample_covariance(x.entries);
}

/// Straightforward triple loop; the reference the BLAS kernel is checked against.
Eigen::MatrixXcd sample_covariance_reference(const Eigen::MatrixXcd& x);

/// Full spectrum of a Hermitian matrix, sorted descending, with gaps.
/// `n` is recorded as the sample count that produced `s` (defaults to p).
SpectrumSummary eigenvalues_desc(const Eigen::MatrixXcd& s, int n = 0);

/// Builds a summary from an already computed (unordered) eigenvalue list.
SpectrumSummary summarize_eigenvalues(std::vector<double> eigenvalues, int n);

/// The `count` largest eigenvalues of a Hermitian matrix, descending.
///
/// Block subspace iteration with Rayleigh-Ritz extraction; converged when the
/// Ritz residuals of the wanted pairs fall below 1e-8 * |lambda_1|. Falls back
/// to the full solver for small problems or when iteration stalls.
std::vector<double> leading_eigenvalues(const Eigen::MatrixXcd& s, int count);

/// Almost-sure limit of the sample eigenvalues attached to a population spike:
/// phi(x) = x + sigma2 + gamma*sigma2*(1 + sigma2/x).
double phi(double x, double sigma2, double gamma);

/// Larger root of x^2 + (sigma2 + gamma*sigma2 - lambda) x + gamma*sigma2^2 = 0.
/// Requires lambda strictly above the upper bulk edge.
double phi_inverse(double lambda, double sigma2, double gamma);

/// Marchenko-Pastur support edges sigma2 * (1 -/+ sqrt(gamma))^2.
std::pair<double, double> mp_bulk_edges(double sigma2, double gamma);

std::vector<double> cluster_sums(const SpectrumSummary& summary, const ClusterPartition& partition);

/// Mean eigenvalue of each cluster.
std::vector<double> cluster_means(const SpectrumSummary& summary, const ClusterPartition& partition);

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  long count = 0;
};

/// Equal-width bins over [0, upper]; upper <= 0 selects 1.05 * lambda_1.
/// Values equal to the upper edge land in the last bin.
std::vector<HistogramBin> eigenvalue_histogram(const SpectrumSummary& summary, int bins = 200,
                                               double upper = 0.0);

}  // namespace spiked
