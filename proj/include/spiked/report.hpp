#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spiked/estimation.hpp"
#include "spiked/model.hpp"
#include "spiked/montecarlo.hpp"
#include "spiked/spectrum.hpp"

namespace spiked {

/// Shortest round-trip decimal form, locale independent. NaN -> "nan".
std::string format_double(double v);

struct CsvOptions {
  bool timing = true;        // false writes 0 in the seconds column
  bool provenance = true;    // leading "# config: {...}" line
};

std::string experiment_csv(const ExperimentResult& result, const nlohmann::json& config,
                           const CsvOptions& options = {});
nlohmann::json experiment_json(const ExperimentResult& result, const nlohmann::json& config,
                               bool timing = true);

/// Two CSV sections separated by a blank line: `bin_left,bin_right,count`
/// rows, then `reference,value` rows (bulk edges and phi(alpha_k) lines).
std::string histogram_csv(const std::vector<HistogramBin>& bins,
                          const std::vector<std::pair<std::string, double>>& references,
                          const nlohmann::json* provenance = nullptr);

nlohmann::json spike_spec_json(const SpikeSpec& spec);
SpikeSpec spike_spec_from_json(const nlohmann::json& j);

nlohmann::json joint_estimate_json(const JointEstimate& est);

// Observation files: payload of little-endian IEEE-754 binary64 values,
// interleaved (re, im), row-major over the p x n matrix; exactly p*n*16 bytes.
// The sidecar `<path>.json` carries dimensions, seed and the generating spec.

std::filesystem::path sidecar_path(const std::filesystem::path& payload);

void write_observation(const std::filesystem::path& path, const ObservationMatrix& x,
                       const nlohmann::json& sidecar_extra = {});

struct LoadedObservation {
  Eigen::MatrixXcd entries;
  nlohmann::json sidecar;
};

LoadedObservation read_observation(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace spiked
