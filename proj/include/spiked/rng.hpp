#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

#include <Eigen/Dense>

namespace spiked {

/// Random streams are std::mt19937_64 engines whose seeds are derived with
/// SplitMix64 from (master_seed, purpose, index). The engine and the
/// transforms below are fully specified, so streams are bit-reproducible
/// across platforms and standard libraries (std::*_distribution is not used).
inline constexpr int kRngSchemeVersion = 1;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// FNV-1a of a purpose tag, mixed into stream seeds.
std::uint64_t purpose_hash(std::string_view purpose) noexcept;

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view purpose,
                          std::uint64_t index) noexcept;

class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::string_view purpose, std::uint64_t index = 0)
      : engine_(derive_seed(master_seed, purpose, index)) {}
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  /// Standard complex Gaussian (Marsaglia polar method):
  /// real and imaginary parts independent N(0, 1/2), E|z|^2 = 1.
  std::complex<double> complex_normal();
  /// Standard real Gaussian N(0, 1).
  double normal();

  void fill_complex_normal(Eigen::MatrixXcd& m);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace spiked
