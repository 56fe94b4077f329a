#include "spiked/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include <cblas.h>

#include "spiked/errors.hpp"
#include "spiked/rng.hpp"

namespace spiked {

namespace {

constexpr double kHermitianTol = 1e-8;
constexpr double kClampTol = 1e-10;

void check_hermitian(const Eigen::MatrixXcd& s) {
  if (s.rows() != s.cols()) throw ValidationError("eigenvalues_desc: matrix is not square");
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  const double asym = (s - s.adjoint()).cwiseAbs().maxCoeff();
  if (asym > kHermitianTol * scale)
    throw ValidationError("eigenvalues_desc: matrix is not Hermitian (max |S - S^H| = " +
                          std::to_string(asym) + ")");
}

}  // namespace

ClusterPartition::ClusterPartition(std::vector<int> mults) : mults_(std::move(mults)) {
  if (mults_.empty()) throw ParameterError("cluster partition: no clusters");
  int total = 0;
  for (int m : mults_) {
    if (m < 1) throw ParameterError("cluster partition: multiplicities must be >= 1");
    total += m;
    boundaries_.push_back(total);
  }
}

Eigen::MatrixXcd sample_covariance(const Eigen::MatrixXcd& x) {
  const int p = static_cast<int>(x.rows());
  const int n = static_cast<int>(x.cols());
  if (n < 1) throw ParameterError("sample_covariance: need at least one sample");
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(p, p);
  cblas_zherk(CblasColMajor, CblasLower, CblasNoTrans, p, n, 1.0 / n, x.data(), p, 0.0,
              s.data(), p);
  for (int j = 0; j < p; ++j) {
    s(j, j) = s(j, j).real();
    for (int i = j + 1; i < p; ++i) s(j, i) = std::conj(s(i, j));
  }
  return s;
}

Eigen::MatrixXcd sample_covariance_reference(const Eigen::MatrixXcd& x) {
  const Eigen::Index p = x.rows();
  const Eigen::Index n = x.cols();
  if (n < 1) throw ParameterError("sample_covariance: need at least one sample");
  Eigen::MatrixXcd s(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      std::complex<double> acc = 0.0;
      for (Eigen::Index t = 0; t < n; ++t) acc += x(i, t) * std::conj(x(j, t));
      acc /= static_cast<double>(n);
      s(i, j) = acc;
      s(j, i) = std::conj(acc);
    }
    s(i, i) = s(i, i).real();
  }
  return s;
}

SpectrumSummary summarize_eigenvalues(std::vector<double> eigenvalues, int n) {
  if (eigenvalues.empty()) throw ParameterError("spectrum: no eigenvalues");
  SpectrumSummary out;
  out.p = static_cast<int>(eigenvalues.size());
  out.n = n > 0 ? n : out.p;
  std::stable_sort(eigenvalues.begin(), eigenvalues.end(), std::greater<>());
  double scale = 1.0;
  for (double v : eigenvalues) scale = std::max(scale, std::abs(v));
  for (double& v : eigenvalues) {
    if (v < 0.0 && v >= -kClampTol * scale) {
      v = 0.0;
      ++out.clamped;
    }
  }
  out.gaps.resize(eigenvalues.size() - 1);
  for (std::size_t j = 0; j + 1 < eigenvalues.size(); ++j)
    out.gaps[j] = eigenvalues[j] - eigenvalues[j + 1];
  out.eigenvalues = std::move(eigenvalues);
  return out;
}

SpectrumSummary eigenvalues_desc(const Eigen::MatrixXcd& s, int n) {
  check_hermitian(s);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(s, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ValidationError("eigenvalues_desc: solver failed");
  const Eigen::VectorXd& w = solver.eigenvalues();
  return summarize_eigenvalues(std::vector<double>(w.data(), w.data() + w.size()), n);
}

namespace {

/// Block subspace iteration with Rayleigh-Ritz. `apply(v, w)` must write
/// A v into w for the Hermitian operator A. Returns an empty vector when the
/// iteration does not converge.
template <typename Apply>
std::vector<double> subspace_iteration(int p, int count, int block, Apply&& apply) {
  RandomStream rng(0x5eedULL, "subspace");
  Eigen::MatrixXcd v(p, block);
  rng.fill_complex_normal(v);
  v = Eigen::HouseholderQR<Eigen::MatrixXcd>(v).householderQ() *
      Eigen::MatrixXcd::Identity(p, block);

  Eigen::MatrixXcd w(p, block);
  constexpr int kMaxIterations = 1000;
  for (int it = 0; it < kMaxIterations; ++it) {
    apply(v, w);
    Eigen::MatrixXcd h = v.adjoint() * w;
    h = 0.5 * (h + h.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ritz(h);
    // Ascending Ritz values; the wanted ones are at the tail.
    const Eigen::VectorXd& theta = ritz.eigenvalues();
    const Eigen::MatrixXcd& z = ritz.eigenvectors();
    const Eigen::MatrixXcd sy = w * z;
    const Eigen::MatrixXcd y = v * z;
    const double top = std::max(std::abs(theta(block - 1)), std::abs(theta(0)));
    // Eigenvalue error is of order residual^2 / gap.
    const double tol = 1e-8 * std::max(top, 1e-300);
    bool converged = true;
    for (int i = block - count; i < block && converged; ++i)
      converged = (sy.col(i) - theta(i) * y.col(i)).norm() <= tol;
    if (converged) {
      std::vector<double> out(static_cast<std::size_t>(count));
      for (int i = 0; i < count; ++i) out[i] = theta(block - 1 - i);
      return out;
    }
    v = Eigen::HouseholderQR<Eigen::MatrixXcd>(sy).householderQ() *
        Eigen::MatrixXcd::Identity(p, block);
  }
  return {};
}

int subspace_block(int count) { return count + std::max(8, count / 2); }

}  // namespace

std::vector<double> leading_eigenvalues(const Eigen::MatrixXcd& s, int count) {
  const int p = static_cast<int>(s.rows());
  if (count < 1 || count > p) throw ParameterError("leading_eigenvalues: count out of range");
  const int block = std::min(p, subspace_block(count));
  std::vector<double> out;
  if (2 * block < p) {
    check_hermitian(s);
    const std::complex<double> one(1.0), zero(0.0);
    out = subspace_iteration(p, count, block, [&](const Eigen::MatrixXcd& v, Eigen::MatrixXcd& w) {
      cblas_zgemm(CblasColMajor, CblasNoTrans, CblasNoTrans, p, block, p, &one, s.data(), p,
                  v.data(), p, &zero, w.data(), p);
    });
  }
  if (out.empty()) {
    out = eigenvalues_desc(s).eigenvalues;
    out.resize(static_cast<std::size_t>(count));
  }
  return out;
}

double phi(double x, double sigma2, double gamma) {
  if (x == 0.0) throw DomainError("phi: undefined at x = 0");
  return x + sigma2 + gamma * sigma2 * (1.0 + sigma2 / x);
}

double phi_inverse(double lambda, double sigma2, double gamma) {
  const double edge = mp_bulk_edges(sigma2, gamma).second;
  if (!(lambda > edge))
    throw OutOfRangeError("phi_inverse: lambda=" + std::to_string(lambda) +
                          " is not above the bulk edge " + std::to_string(edge));
  const double b = sigma2 * (1.0 + gamma) - lambda;  // negative above the edge
  const double c = gamma * sigma2 * sigma2;
  const double disc = std::sqrt(b * b - 4.0 * c);
  return 0.5 * (disc - b);
}

std::pair<double, double> mp_bulk_edges(double sigma2, double gamma) {
  if (!(gamma > 0.0)) throw ParameterError("mp_bulk_edges: gamma must be positive");
  const double r = std::sqrt(gamma);
  return {sigma2 * (1.0 - r) * (1.0 - r), sigma2 * (1.0 + r) * (1.0 + r)};
}

std::vector<double> cluster_sums(const SpectrumSummary& summary, const ClusterPartition& partition) {
  if (partition.last_boundary() > summary.p)
    throw ParameterError("cluster_sums: partition covers " +
                         std::to_string(partition.last_boundary()) + " eigenvalues but p=" +
                         std::to_string(summary.p));
  std::vector<double> g(static_cast<std::size_t>(partition.size()));
  for (int k = 0; k < partition.size(); ++k)
    g[k] = std::accumulate(summary.eigenvalues.begin() + partition.begin(k),
                           summary.eigenvalues.begin() + partition.end(k), 0.0);
  return g;
}

std::vector<double> cluster_means(const SpectrumSummary& summary, const ClusterPartition& partition) {
  std::vector<double> g = cluster_sums(summary, partition);
  for (int k = 0; k < partition.size(); ++k) g[k] /= partition.mults()[k];
  return g;
}

std::vector<HistogramBin> eigenvalue_histogram(const SpectrumSummary& summary, int bins,
                                               double upper) {
  if (bins < 1) throw ParameterError("histogram: bins must be >= 1");
  if (!(upper > 0.0)) upper = 1.05 * summary.eigenvalues.front();
  if (!(upper > 0.0)) throw ParameterError("histogram: spectrum has no positive eigenvalue");
  const double width = upper / bins;
  std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    out[b].left = b * width;
    out[b].right = b + 1 == bins ? upper : (b + 1) * width;
  }
  for (double v : summary.eigenvalues) {
    if (v < 0.0 || v > upper) continue;
    int b = static_cast<int>(v / width);
    b = std::min(b, bins - 1);
    ++out[b].count;
  }
  return out;
}

}  // namespace spiked
