#include "spiked/report.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "spiked/errors.hpp"

namespace spiked {

static_assert(std::endian::native == std::endian::little,
              "observation files are written in native order; big-endian hosts need a byte swap");

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string join_ints(const std::vector<int>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(v[i]);
  }
  return s;
}

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

std::string experiment_csv(const ExperimentResult& result, const nlohmann::json& config,
                           const CsvOptions& options) {
  std::ostringstream out;
  if (options.provenance) out << "# config: " << config.dump() << '\n';
  out << "label,p,n,gamma,sigma2,sigma2_db,K,mults,trials,prob_correct,std_error,"
         "mult_correct_rate,known_k_mult_rate,undetectable_trials,seconds\n";
  for (const auto& r : result.rows) {
    out << r.label << ',' << r.p << ',' << r.n << ','
        << format_double(static_cast<double>(r.p) / r.n) << ',' << format_double(r.sigma2) << ','
        << format_double(sigma2_to_db(r.sigma2)) << ',' << r.mults.size() << ','
        << join_ints(r.mults, ';') << ',' << r.trials << ',' << format_double(r.prob_correct)
        << ',' << format_double(r.std_error) << ',' << format_double(r.mult_correct_rate) << ','
        << format_double(r.known_k_mult_rate) << ',' << r.undetectable_trials << ','
        << format_double(options.timing ? r.seconds : 0.0) << '\n';
  }
  return out.str();
}

nlohmann::json experiment_json(const ExperimentResult& result, const nlohmann::json& config,
                               bool timing) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"label", r.label},
                    {"p", r.p},
                    {"n", r.n},
                    {"sigma2", r.sigma2},
                    {"sigma2_db", sigma2_to_db(r.sigma2)},
                    {"K", r.mults.size()},
                    {"mults", r.mults},
                    {"trials", r.trials},
                    {"prob_correct", r.prob_correct},
                    {"std_error", r.std_error},
                    {"mult_correct_rate", number_or_null(r.mult_correct_rate)},
                    {"known_k_mult_rate", r.known_k_mult_rate},
                    {"undetectable_trials", r.undetectable_trials},
                    {"seconds", timing ? r.seconds : 0.0}});
  }
  return {{"kind", result.kind}, {"config", config}, {"rows", rows}};
}

std::string histogram_csv(const std::vector<HistogramBin>& bins,
                          const std::vector<std::pair<std::string, double>>& references,
                          const nlohmann::json* provenance) {
  std::ostringstream out;
  if (provenance) out << "# config: " << provenance->dump() << '\n';
  out << "bin_left,bin_right,count\n";
  for (const auto& b : bins)
    out << format_double(b.left) << ',' << format_double(b.right) << ',' << b.count << '\n';
  out << "\nreference,value\n";
  for (const auto& [name, value] : references) out << name << ',' << format_double(value) << '\n';
  return out.str();
}

nlohmann::json spike_spec_json(const SpikeSpec& spec) {
  return {{"alphas", spec.alphas},
          {"mults", spec.mults},
          {"sigma2", spec.sigma2},
          {"p", spec.p},
          {"n", spec.n}};
}

SpikeSpec spike_spec_from_json(const nlohmann::json& j) {
  SpikeSpec s;
  s.alphas = j.at("alphas").get<std::vector<double>>();
  s.mults = j.at("mults").get<std::vector<int>>();
  s.sigma2 = j.at("sigma2").get<double>();
  s.p = j.at("p").get<int>();
  s.n = j.at("n").get<int>();
  return s;
}

nlohmann::json joint_estimate_json(const JointEstimate& est) {
  nlohmann::json alphas = nlohmann::json::array();
  for (double a : est.alphas_hat) alphas.push_back(number_or_null(a));
  nlohmann::json marginals = nlohmann::json::array();
  for (double v : est.log_marginals) marginals.push_back(number_or_null(v));
  nlohmann::json candidates = nlohmann::json::array();
  for (std::size_t k = 0; k < est.candidates.size(); ++k) {
    const auto& c = est.candidates[k];
    candidates.push_back({{"k", k + 1},
                          {"mults", c.mults},
                          {"gap_indices", c.gap_indices},
                          {"gap_values", c.gap_values},
                          {"log_marginal", number_or_null(est.log_marginals[k])}});
  }
  return {{"k_hat", est.k_hat},
          {"mults", est.mults.mults},
          {"alphas_hat", alphas},
          {"alphas_complete", est.alphas_complete},
          {"log_marginals", marginals},
          {"gap_indices", est.mults.gap_indices},
          {"gap_values", est.mults.gap_values},
          {"low_gap_contrast", est.mults.low_contrast},
          {"candidates", candidates}};
}

std::filesystem::path sidecar_path(const std::filesystem::path& payload) {
  std::filesystem::path s = payload;
  s += ".json";
  return s;
}

void write_observation(const std::filesystem::path& path, const ObservationMatrix& x,
                       const nlohmann::json& sidecar_extra) {
  const Eigen::Index p = x.entries.rows();
  const Eigen::Index n = x.entries.cols();
  std::vector<double> buf(static_cast<std::size_t>(2 * p * n));
  std::size_t at = 0;
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      buf[at++] = x.entries(i, j).real();
      buf[at++] = x.entries(i, j).imag();
    }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(double)));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
  out.close();

  nlohmann::json sidecar = {{"format", "complex128-le-interleaved-rowmajor"},
                            {"rows", p},
                            {"cols", n},
                            {"seed", x.seed},
                            {"spec", spike_spec_json(x.spec)}};
  if (sidecar_extra.is_object())
    for (const auto& [k, v] : sidecar_extra.items()) sidecar[k] = v;
  write_text_file(sidecar_path(path), sidecar.dump(2) + "\n");
}

LoadedObservation read_observation(const std::filesystem::path& path) {
  LoadedObservation out;
  const std::string side = read_text_file(sidecar_path(path));
  try {
    out.sidecar = nlohmann::json::parse(side);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed sidecar '" + sidecar_path(path).string() + "': " + e.what());
  }
  const auto p = out.sidecar.at("rows").get<Eigen::Index>();
  const auto n = out.sidecar.at("cols").get<Eigen::Index>();
  if (p < 1 || n < 1) throw ValidationError("sidecar dimensions must be positive");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<double> buf(static_cast<std::size_t>(2 * p * n));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(double)))
    throw ValidationError("payload '" + path.string() + "' is shorter than rows*cols*16 bytes");
  if (in.peek() != std::char_traits<char>::eof())
    throw ValidationError("payload '" + path.string() + "' is longer than rows*cols*16 bytes");
  out.entries.resize(p, n);
  std::size_t at = 0;
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < n; ++j, at += 2) out.entries(i, j) = {buf[at], buf[at + 1]};
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace spiked
