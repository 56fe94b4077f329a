#include "spiked/model.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "spiked/errors.hpp"
#include "spiked/rng.hpp"

namespace spiked {

int SpikeSpec::total_multiplicity() const {
  return std::accumulate(mults.begin(), mults.end(), 0);
}

void SpikeSpec::validate() const {
  if (alphas.empty()) throw ParameterError("spike spec: at least one spike is required");
  if (alphas.size() != mults.size())
    throw ParameterError("spike spec: alphas and mults differ in length");
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    if (!(alphas[k] > 0.0) || !std::isfinite(alphas[k]))
      throw ParameterError("spike spec: alphas must be positive and finite");
    if (k > 0 && !(alphas[k] < alphas[k - 1]))
      throw ParameterError("spike spec: alphas must be strictly decreasing");
    if (mults[k] < 1) throw ParameterError("spike spec: multiplicities must be >= 1");
  }
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2))
    throw ParameterError("spike spec: sigma2 must be nonnegative and finite");
  if (p < 1 || n < 1) throw ParameterError("spike spec: p and n must be positive");
  if (total_multiplicity() >= p)
    throw ParameterError("spike spec: total multiplicity m=" +
                         std::to_string(total_multiplicity()) + " must be < p=" +
                         std::to_string(p));
}

Eigen::VectorXd population_eigenvalues(const SpikeSpec& spec) {
  spec.validate();
  Eigen::VectorXd d = Eigen::VectorXd::Constant(spec.p, spec.sigma2);
  int row = 0;
  for (int k = 0; k < spec.num_spikes(); ++k)
    for (int j = 0; j < spec.mults[k]; ++j) d(row++) = spec.alphas[k] + spec.sigma2;
  return d;
}

Eigen::MatrixXcd haar_unitary(int p, std::uint64_t seed) {
  if (p < 1) throw ParameterError("haar_unitary: p must be positive");
  RandomStream rng(seed, "basis");
  Eigen::MatrixXcd g(p, p);
  rng.fill_complex_normal(g);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(p, p);
  const Eigen::MatrixXcd& r = qr.matrixQR();
  for (int j = 0; j < p; ++j) {
    const std::complex<double> d = r(j, j);
    const double mag = std::abs(d);
    if (mag > 0.0) q.col(j) *= d / mag;
  }
  return q;
}

Eigen::MatrixXcd population_covariance(const SpikeSpec& spec, Basis basis, std::uint64_t seed) {
  const Eigen::VectorXd d = population_eigenvalues(spec);
  if (basis == Basis::identity) return d.cast<std::complex<double>>().asDiagonal();
  const Eigen::MatrixXcd u = haar_unitary(spec.p, seed);
  Eigen::MatrixXcd sigma = u * d.cast<std::complex<double>>().asDiagonal() * u.adjoint();
  // Symmetrize away roundoff so the result is exactly Hermitian.
  return 0.5 * (sigma + sigma.adjoint());
}

bool detectable(double alpha, double sigma2, double gamma) {
  return alpha > sigma2 * std::sqrt(gamma);
}

ObservationMatrix generate_isotropic(const SpikeSpec& spec, std::uint64_t seed, Basis basis) {
  const Eigen::VectorXd root = population_eigenvalues(spec).cwiseSqrt();
  ObservationMatrix out{Eigen::MatrixXcd(spec.p, spec.n), spec, seed};
  RandomStream rng(seed, "isotropic");
  rng.fill_complex_normal(out.entries);
  if (basis == Basis::identity) {
    out.entries = root.asDiagonal() * out.entries;
  } else {
    const Eigen::MatrixXcd u = haar_unitary(spec.p, seed);
    out.entries = u * (root.asDiagonal() * (u.adjoint() * out.entries));
  }
  return out;
}

Eigen::MatrixXcd steering_matrix(std::span<const double> thetas, int p) {
  if (thetas.empty()) throw ParameterError("steering_matrix: at least one angle is required");
  if (p < 1) throw ParameterError("steering_matrix: p must be positive");
  if (static_cast<int>(thetas.size()) > p)
    throw ParameterError("steering_matrix: more angles than array elements");
  const double scale = 1.0 / std::sqrt(static_cast<double>(p));
  Eigen::MatrixXcd a(p, static_cast<Eigen::Index>(thetas.size()));
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    const double w = -std::sin(thetas[i]) * std::numbers::pi;
    for (int v = 0; v < p; ++v) a(v, static_cast<Eigen::Index>(i)) = std::polar(scale, w * v);
  }
  return a;
}

std::vector<double> draw_angles(int m, std::uint64_t seed) {
  RandomStream rng(seed, "angles");
  std::vector<double> thetas(static_cast<std::size_t>(m));
  for (double& t : thetas) t = 2.0 * std::numbers::pi * rng.uniform();
  return thetas;
}

ObservationMatrix generate_doa(const SpikeSpec& spec, std::span<const double> thetas,
                               std::uint64_t seed) {
  spec.validate();
  const int m = spec.total_multiplicity();
  if (static_cast<int>(thetas.size()) != m)
    throw ParameterError("generate_doa: need one angle per spike dimension (" +
                         std::to_string(m) + "), got " + std::to_string(thetas.size()));
  const Eigen::MatrixXcd a = steering_matrix(thetas, spec.p);

  Eigen::VectorXd power_root(m);
  int row = 0;
  for (int k = 0; k < spec.num_spikes(); ++k)
    for (int j = 0; j < spec.mults[k]; ++j) power_root(row++) = std::sqrt(spec.alphas[k]);

  Eigen::MatrixXcd s(m, spec.n);
  RandomStream signal(seed, "signal");
  signal.fill_complex_normal(s);

  ObservationMatrix out{Eigen::MatrixXcd(spec.p, spec.n), spec, seed};
  RandomStream noise(seed, "noise");
  noise.fill_complex_normal(out.entries);
  out.entries *= std::sqrt(spec.sigma2);
  out.entries.noalias() += a * (power_root.asDiagonal() * s);
  return out;
}

}  // namespace spiked
