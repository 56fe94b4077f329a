#include "spiked/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace spiked {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t purpose_hash(std::string_view purpose) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : purpose) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view purpose,
                          std::uint64_t index) noexcept {
  std::uint64_t s = splitmix64(master_seed ^ static_cast<std::uint64_t>(kRngSchemeVersion));
  s = splitmix64(s ^ purpose_hash(purpose));
  return splitmix64(s ^ splitmix64(index));
}

double RandomStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomStream::below(std::uint64_t bound) {
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

std::complex<double> RandomStream::complex_normal() {
  // Marsaglia polar method; (u, v) * sqrt(-ln s / s) has independent N(0, 1/2) parts.
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-std::log(s) / s);
  return {u * f, v * f};
}

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const std::complex<double> z = complex_normal();
  has_spare_ = true;
  spare_ = z.imag() * std::numbers::sqrt2;
  return z.real() * std::numbers::sqrt2;
}

void RandomStream::fill_complex_normal(Eigen::MatrixXcd& m) {
  // Column-major fill order is part of the stream contract.
  std::complex<double>* data = m.data();
  const Eigen::Index size = m.size();
  for (Eigen::Index i = 0; i < size; ++i) data[i] = complex_normal();
}

}  // namespace spiked
