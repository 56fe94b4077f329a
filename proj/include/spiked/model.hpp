#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace spiked {

/// Ground-truth parameters of a spiked covariance model.
///
/// The population covariance has eigenvalue alphas[k] + sigma2 with
/// multiplicity mults[k] and sigma2 with multiplicity p - m.
struct SpikeSpec {
  std::vector<double> alphas;  // strictly decreasing, > 0
  std::vector<int> mults;      // >= 1 each
  double sigma2 = 1.0;         // >= 0
  int p = 0;
  int n = 0;

  int num_spikes() const { return static_cast<int>(alphas.size()); }
  int total_multiplicity() const;
  double gamma() const { return static_cast<double>(p) / static_cast<double>(n); }

  /// Throws ParameterError when an invariant is violated.
  void validate() const;
};

enum class Basis { identity, haar };

struct ObservationMatrix {
  Eigen::MatrixXcd entries;  // p x n
  SpikeSpec spec;
  std::uint64_t seed = 0;
};

/// Population eigenvalues (alpha_k + sigma2 repeated m_k times, then sigma2).
Eigen::VectorXd population_eigenvalues(const SpikeSpec& spec);

/// Haar-distributed p x p unitary (QR of a complex Gaussian matrix with
/// the phases of diag(R) absorbed into Q).
Eigen::MatrixXcd haar_unitary(int p, std::uint64_t seed);

Eigen::MatrixXcd population_covariance(const SpikeSpec& spec, Basis basis = Basis::identity,
                                       std::uint64_t seed = 0);

/// Spike is visible outside the bulk iff alpha > sigma2 * sqrt(gamma).
bool detectable(double alpha, double sigma2, double gamma);

/// X = Sigma^{1/2} Y with Y i.i.d. standard complex Gaussian.
ObservationMatrix generate_isotropic(const SpikeSpec& spec, std::uint64_t seed,
                                     Basis basis = Basis::identity);

/// Columns p^{-1/2} exp(-i v sin(theta) pi), v = 0..p-1.
Eigen::MatrixXcd steering_matrix(std::span<const double> thetas, int p);

/// m angles i.i.d. uniform on [0, 2pi).
std::vector<double> draw_angles(int m, std::uint64_t seed);

/// X = A(theta) P^{1/2} S + sigma N.
ObservationMatrix generate_doa(const SpikeSpec& spec, std::span<const double> thetas,
                               std::uint64_t seed);

}  // namespace spiked
