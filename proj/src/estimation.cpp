#include "spiked/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "spiked/errors.hpp"

namespace spiked {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> values) {
  double top = kNegInf;
  for (double v : values) top = std::max(top, v);
  if (top == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - top);
  return top + std::log(acc);
}

double median(std::vector<double> values) {
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double m = values[mid];
  if (values.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

}  // namespace

std::string_view to_string(VarianceConvention c) {
  switch (c) {
    case VarianceConvention::proposition:
      return "proposition";
    case VarianceConvention::proposition_literal:
      return "proposition_literal";
    case VarianceConvention::paper_literal:
      return "paper_literal";
  }
  return "proposition";
}

VarianceConvention parse_variance_convention(std::string_view name) {
  if (name == "proposition") return VarianceConvention::proposition;
  if (name == "proposition_literal") return VarianceConvention::proposition_literal;
  if (name == "paper_literal") return VarianceConvention::paper_literal;
  throw ParameterError("unknown variance convention '" + std::string(name) + "'");
}

PriorSpec::PriorSpec(std::vector<double> support) : support_(std::move(support)) {
  if (support_.empty()) throw ParameterError("prior: support is empty");
  std::sort(support_.begin(), support_.end());
  for (std::size_t i = 0; i < support_.size(); ++i) {
    if (!(support_[i] > 0.0) || !std::isfinite(support_[i]))
      throw ParameterError("prior: support values must be positive and finite");
    if (i > 0 && support_[i] == support_[i - 1])
      throw ParameterError("prior: support values must be distinct");
  }
}

long long PriorSpec::tuple_count(int k) const {
  const int e = size();
  if (k < 0 || k > e) return 0;
  long long c = 1;
  for (int i = 1; i <= k; ++i) c = c * (e - k + i) / i;
  return c;
}

std::vector<std::vector<double>> PriorSpec::tuples(int k) const {
  std::vector<std::vector<double>> out;
  const int e = size();
  if (k < 1 || k > e) return out;
  std::vector<double> desc(support_.rbegin(), support_.rend());
  std::vector<int> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    std::vector<double> t(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) t[i] = desc[idx[i]];
    out.push_back(std::move(t));
    int i = k - 1;
    while (i >= 0 && idx[i] == e - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

int default_j_max(int p) { return std::max(1, std::min(p - 1, p / 4)); }

MultiplicityEstimate estimate_multiplicities(const SpectrumSummary& summary, int k, int j_max) {
  if (k < 1) throw ParameterError("estimate_multiplicities: K must be >= 1");
  if (j_max > summary.p - 1)
    throw ParameterError("estimate_multiplicities: j_max=" + std::to_string(j_max) +
                         " exceeds p-1=" + std::to_string(summary.p - 1));
  if (k > j_max)
    throw ParameterError("estimate_multiplicities: K=" + std::to_string(k) +
                         " exceeds j_max=" + std::to_string(j_max));

  std::vector<int> order(static_cast<std::size_t>(j_max));
  std::iota(order.begin(), order.end(), 0);
  // Stable: equal gaps keep the smaller index first.
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return summary.gaps[a] > summary.gaps[b]; });

  MultiplicityEstimate est;
  est.gap_indices.assign(order.begin(), order.begin() + k);
  std::sort(est.gap_indices.begin(), est.gap_indices.end());
  int previous = 0;
  for (int& idx : est.gap_indices) {
    est.gap_values.push_back(summary.gaps[idx]);
    idx += 1;
    est.mults.push_back(idx - previous);
    previous = idx;
  }
  const double top = summary.gaps[order.front()];
  const double med = median(std::vector<double>(summary.gaps.begin(), summary.gaps.begin() + j_max));
  est.low_contrast = !(top > 10.0 * med);
  return est;
}

double cluster_variance(double alpha, double sigma2, double gamma, int m_k, int n,
                        VarianceConvention convention) {
  if (!detectable(alpha, sigma2, gamma))
    throw DomainError("cluster_variance: alpha=" + std::to_string(alpha) +
                      " is not above sigma2*sqrt(gamma)=" + std::to_string(sigma2 * std::sqrt(gamma)));
  if (m_k < 1 || n < 1) throw ParameterError("cluster_variance: m_k and n must be positive");
  // v^2 * sigma2^2 written in unnormalized units, finite at sigma2 = 0.
  const double shifted = alpha + sigma2;
  const double ratio = sigma2 * sigma2 / (alpha * alpha);
  const double scaled_v2 = 2.0 * shifted * shifted * (1.0 - gamma * ratio);
  switch (convention) {
    case VarianceConvention::proposition:
      return 0.5 * m_k * scaled_v2 / n;
    case VarianceConvention::proposition_literal:
      return 2.0 * m_k * scaled_v2 / n;
    case VarianceConvention::paper_literal:
      if (sigma2 == 0.0) throw DomainError("cluster_variance: paper_literal needs sigma2 > 0");
      return scaled_v2 / (sigma2 * sigma2);
  }
  return 0.0;
}

double cluster_log_likelihood(std::span<const double> g, std::span<const double> alphas,
                              std::span<const int> mults, double sigma2, double gamma, int n,
                              VarianceConvention convention) {
  if (g.size() != alphas.size() || g.size() != mults.size())
    throw ParameterError("cluster_log_likelihood: g, alphas and mults differ in length");
  double ll = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double var = cluster_variance(alphas[k], sigma2, gamma, mults[k], n, convention);
    const double r = g[k] - mults[k] * phi(alphas[k], sigma2, gamma);
    ll += -0.5 * std::log(2.0 * std::numbers::pi * var) - r * r / (2.0 * var);
  }
  return ll;
}

double marginal_log_likelihood(std::span<const double> g, std::span<const int> mults, int k,
                               const PriorSpec& prior, double sigma2, double gamma, int n,
                               VarianceConvention convention) {
  if (k > prior.size())
    throw EmptyPriorError("marginal_log_likelihood: k=" + std::to_string(k) +
                          " exceeds the prior support size " + std::to_string(prior.size()));
  if (k < 1 || static_cast<int>(mults.size()) != k || static_cast<int>(g.size()) != k)
    throw ParameterError("marginal_log_likelihood: g and mults must have k entries");
  const auto tuples = prior.tuples(k);
  std::vector<double> terms;
  terms.reserve(tuples.size());
  for (const auto& alphas : tuples) {
    const bool visible = std::all_of(alphas.begin(), alphas.end(),
                                     [&](double a) { return detectable(a, sigma2, gamma); });
    terms.push_back(visible ? cluster_log_likelihood(g, alphas, mults, sigma2, gamma, n, convention)
                            : kNegInf);
  }
  const double lse = log_sum_exp(terms);
  if (lse == kNegInf) return kNegInf;
  return lse - std::log(static_cast<double>(tuples.size()));
}

JointEstimate estimate_k(const SpectrumSummary& summary, const PriorSpec& prior, double sigma2,
                         const EstimatorOptions& options) {
  if (options.k_max < 1 || options.k_max > prior.size())
    throw ParameterError("estimate_k: k_max=" + std::to_string(options.k_max) +
                         " must lie in [1, |E|=" + std::to_string(prior.size()) + "]");
  const int j_max = options.j_max > 0 ? options.j_max : default_j_max(summary.p);
  const double gamma = summary.gamma();

  JointEstimate out;
  out.log_marginals.assign(static_cast<std::size_t>(options.k_max), kNegInf);
  for (int k = 1; k <= options.k_max; ++k) {
    if (k > j_max) {
      out.candidates.emplace_back();
      continue;
    }
    MultiplicityEstimate est = estimate_multiplicities(summary, k, j_max);
    const std::vector<double> g = cluster_sums(summary, ClusterPartition(est.mults));
    out.log_marginals[k - 1] = marginal_log_likelihood(g, est.mults, k, prior, sigma2, gamma,
                                                       summary.n, options.convention);
    out.candidates.push_back(std::move(est));
  }

  // Ties resolve to the smaller k.
  out.k_hat = 1;
  for (int k = 2; k <= options.k_max; ++k)
    if (out.log_marginals[k - 1] > out.log_marginals[out.k_hat - 1]) out.k_hat = k;
  out.mults = out.candidates[out.k_hat - 1];
  if (out.mults.mults.empty()) {
    out.alphas_complete = false;
    return out;
  }

  const ClusterPartition partition(out.mults.mults);
  const double edge = mp_bulk_edges(sigma2, gamma).second;
  for (double mean : cluster_means(summary, partition)) {
    if (mean > edge) {
      out.alphas_hat.push_back(phi_inverse(mean, sigma2, gamma));
    } else {
      out.alphas_hat.push_back(std::numeric_limits<double>::quiet_NaN());
      out.alphas_complete = false;
    }
  }
  return out;
}

std::vector<double> estimate_alphas(const SpectrumSummary& summary,
                                    const ClusterPartition& partition, double sigma2,
                                    double gamma) {
  std::vector<double> out;
  for (double mean : cluster_means(summary, partition)) out.push_back(phi_inverse(mean, sigma2, gamma));
  return out;
}

}  // namespace spiked
