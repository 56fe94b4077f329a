#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "spiked/errors.hpp"
#include "spiked/estimation.hpp"
#include "spiked/model.hpp"
#include "spiked/montecarlo.hpp"
#include "spiked/report.hpp"
#include "spiked/rng.hpp"
#include "spiked/spectrum.hpp"

namespace spiked::cli {

namespace {

using nlohmann::json;

struct GlobalOptions {
  std::uint64_t seed = 1;
  bool seed_given = false;
  int threads = 0;
  std::string out;
  std::string format = "csv";
  int trials = 0;  // 0 keeps the config value
  bool no_timestamp = false;
  bool no_provenance = false;
};

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    std::istringstream field(token);
    T v{};
    field.imbue(std::locale::classic());
    if (!(field >> v) || !(field >> std::ws).eof())
      throw ValidationError(std::string("cannot parse ") + what + " entry '" + token + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError(std::string(what) + " list is empty");
  return out;
}

json load_json(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError("malformed JSON in '" + path + "': " + e.what());
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

void emit(const GlobalOptions& g, const std::string& text, std::ostream& out,
          const std::string& path_override = {}) {
  const std::string path = path_override.empty() ? g.out : path_override;
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

// --- simulation setup -------------------------------------------------------

struct SimulationSetup {
  SpikeSpec spec;
  DataModel model = DataModel::isotropic;
  Basis basis = Basis::identity;
  std::vector<double> thetas;
  std::uint64_t seed = 1;
};

struct SimulationFlags {
  std::string config;
  std::optional<int> p, n;
  std::optional<std::string> alphas, mults, thetas, model, basis;
  std::optional<double> sigma2;
};

void add_simulation_flags(CLI::App* cmd, SimulationFlags& f) {
  cmd->add_option("--config", f.config, "JSON setup (a simulate sidecar is accepted)");
  cmd->add_option("--p", f.p, "Observation dimension");
  cmd->add_option("--n", f.n, "Sample count");
  cmd->add_option("--alphas", f.alphas, "Spike powers, comma separated, decreasing");
  cmd->add_option("--mults", f.mults, "Multiplicities, comma separated");
  cmd->add_option("--sigma2", f.sigma2, "Noise variance");
  cmd->add_option("--model", f.model, "isotropic | doa");
  cmd->add_option("--basis", f.basis, "identity | haar (isotropic model)");
  cmd->add_option("--thetas", f.thetas, "DOA angles in radians, comma separated");
}

Basis parse_basis(const std::string& s) {
  if (s == "identity") return Basis::identity;
  if (s == "haar") return Basis::haar;
  throw ParameterError("unknown basis '" + s + "'");
}

std::string basis_name(Basis b) { return b == Basis::haar ? "haar" : "identity"; }

SimulationSetup resolve_simulation(const SimulationFlags& f, const GlobalOptions& g) {
  SimulationSetup s;
  s.spec = SpikeSpec{{7.0, 5.0, 3.0}, {1, 4, 2}, 1.0, 500, 1000};
  if (!f.config.empty()) {
    const json j = load_json(f.config);
    try {
      if (j.contains("spec")) s.spec = spike_spec_from_json(j.at("spec"));
      if (j.contains("model")) s.model = parse_data_model(j.at("model").get<std::string>());
      if (j.contains("basis")) s.basis = parse_basis(j.at("basis").get<std::string>());
      if (j.contains("thetas")) s.thetas = j.at("thetas").get<std::vector<double>>();
      if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
      throw ValidationError("bad simulation config '" + f.config + "': " + e.what());
    }
  }
  if (f.p) s.spec.p = *f.p;
  if (f.n) s.spec.n = *f.n;
  if (f.alphas) s.spec.alphas = parse_list<double>(*f.alphas, "alphas");
  if (f.mults) s.spec.mults = parse_list<int>(*f.mults, "mults");
  if (f.sigma2) s.spec.sigma2 = *f.sigma2;
  if (f.model) s.model = parse_data_model(*f.model);
  if (f.basis) s.basis = parse_basis(*f.basis);
  if (f.thetas) s.thetas = parse_list<double>(*f.thetas, "thetas");
  if (g.seed_given || f.config.empty()) s.seed = g.seed;
  s.spec.validate();
  if (s.model == DataModel::doa) {
    const int m = s.spec.total_multiplicity();
    if (s.thetas.empty()) s.thetas = draw_angles(m, s.seed);
    if (static_cast<int>(s.thetas.size()) != m)
      throw ParameterError("doa model needs " + std::to_string(m) + " angles");
  } else {
    s.thetas.clear();
  }
  return s;
}

json setup_json(const SimulationSetup& s) {
  json j = {{"spec", spike_spec_json(s.spec)},
            {"model", to_string(s.model)},
            {"seed", s.seed},
            {"rng_scheme", kRngSchemeVersion}};
  if (s.model == DataModel::doa) {
    j["thetas"] = s.thetas;
  } else {
    j["basis"] = basis_name(s.basis);
  }
  return j;
}

ObservationMatrix simulate(const SimulationSetup& s) {
  return s.model == DataModel::doa ? generate_doa(s.spec, s.thetas, s.seed)
                                   : generate_isotropic(s.spec, s.seed, s.basis);
}

// --- subcommands ------------------------------------------------------------

int cmd_simulate(const SimulationFlags& f, const GlobalOptions& g, std::ostream& err) {
  if (g.out.empty()) throw ParameterError("simulate: --out <payload path> is required");
  const SimulationSetup setup = resolve_simulation(f, g);
  const ObservationMatrix x = simulate(setup);
  write_observation(g.out, x, setup_json(setup));
  err << "wrote " << setup.spec.p << "x" << setup.spec.n << " matrix to " << g.out << " (+ "
      << sidecar_path(g.out).string() << ")\n";
  return kOk;
}

struct EstimateFlags {
  std::string data, spectrum, eigenvalues;
  std::optional<int> n;
  std::optional<double> sigma2;
  std::string prior = "1,3,5,7";
  int k_max = 4;
  int j_max = 0;
  std::string convention = "proposition";
};

std::vector<double> parse_spectrum_text(const std::string& text) {
  std::string cleaned = text;
  for (char& c : cleaned)
    if (c == ',' || c == ';' || c == '\n' || c == '\r' || c == '\t') c = ' ';
  std::istringstream in(cleaned);
  in.imbue(std::locale::classic());
  std::vector<double> out;
  std::string token;
  while (in >> token) {
    std::istringstream field(token);
    field.imbue(std::locale::classic());
    double v;
    if (!(field >> v) || !(field >> std::ws).eof() || !std::isfinite(v))
      throw ValidationError("cannot parse eigenvalue '" + token + "'");
    out.push_back(v);
  }
  if (out.size() < 2) throw ValidationError("spectrum needs at least two eigenvalues");
  return out;
}

int cmd_estimate(const EstimateFlags& f, const GlobalOptions& g, std::ostream& out) {
  const int sources = !f.data.empty() + !f.spectrum.empty() + !f.eigenvalues.empty();
  if (sources != 1)
    throw ParameterError("estimate: give exactly one of --data, --spectrum, --eigenvalues");

  SpectrumSummary summary;
  std::optional<double> sigma2 = f.sigma2;
  json input;
  if (!f.data.empty()) {
    LoadedObservation obs = read_observation(f.data);
    const int n = f.n.value_or(static_cast<int>(obs.entries.cols()));
    if (!sigma2 && obs.sidecar.contains("spec"))
      sigma2 = obs.sidecar.at("spec").at("sigma2").get<double>();
    summary = eigenvalues_desc(sample_covariance(obs.entries), n);
    input = {{"data", f.data}};
  } else {
    const std::string text = f.spectrum.empty() ? f.eigenvalues : read_text_file(f.spectrum);
    if (!f.n) throw ParameterError("estimate: --n is required with a spectrum input");
    summary = summarize_eigenvalues(parse_spectrum_text(text), *f.n);
    input = f.spectrum.empty() ? json{{"eigenvalues", summary.eigenvalues}}
                               : json{{"spectrum", f.spectrum}};
  }
  if (!sigma2 || !(*sigma2 > 0.0)) throw ParameterError("estimate: --sigma2 must be given and > 0");
  if (summary.n < 1) throw ParameterError("estimate: n must be positive");

  const PriorSpec prior(parse_list<double>(f.prior, "prior"));
  if (f.k_max < 1) throw ParameterError("estimate: --k-max must be >= 1");
  if (f.k_max > prior.size())
    throw EmptyPriorError("estimate: k_max=" + std::to_string(f.k_max) +
                          " exceeds the prior support size |E|=" + std::to_string(prior.size()));
  const EstimatorOptions options{f.k_max, f.j_max, parse_variance_convention(f.convention)};
  const int j_max = options.j_max > 0 ? options.j_max : default_j_max(summary.p);
  if (j_max > summary.p - 1) throw ParameterError("estimate: --j-max must be <= p - 1");

  const JointEstimate est = estimate_k(summary, prior, *sigma2, options);
  const auto [lower, upper] = mp_bulk_edges(*sigma2, summary.gamma());

  json report = joint_estimate_json(est);
  report["p"] = summary.p;
  report["n"] = summary.n;
  report["gamma"] = summary.gamma();
  report["sigma2"] = *sigma2;
  report["bulk_edges"] = {{"lower", lower}, {"upper", upper}};
  report["j_max"] = j_max;
  report["clamped_eigenvalues"] = summary.clamped;
  std::vector<double> scanned(summary.gaps.begin(), summary.gaps.begin() + j_max);
  report["gap_diagnostics"] = {{"largest_gap", *std::max_element(scanned.begin(), scanned.end())},
                               {"selected_gap_indices", est.mults.gap_indices},
                               {"low_contrast", est.mults.low_contrast}};
  if (!g.no_provenance)
    report["config"] = {{"input", input},
                        {"sigma2", *sigma2},
                        {"prior", prior.support()},
                        {"k_max", f.k_max},
                        {"j_max", j_max},
                        {"variance_convention", to_string(options.convention)}};
  if (!g.no_timestamp) report["generated_at"] = utc_timestamp();
  emit(g, report.dump(2) + "\n", out);
  return kOk;
}

struct ExperimentFlags {
  std::string config;
};

json resolved_experiment_config(const json& raw, const GlobalOptions& g) {
  const TrialConfig defaults;
  json c = {{"experiment", "sigma2_sweep"},
            {"p", defaults.p},
            {"n", defaults.n},
            {"mults", defaults.mults},
            {"prior", defaults.prior.support()},
            {"k_max", defaults.k_max},
            {"trials", defaults.trials},
            {"seed", defaults.master_seed},
            {"data_model", to_string(defaults.data_model)},
            {"variance_convention", to_string(defaults.convention)},
            {"j_max", defaults.j_max},
            {"alphas", json::array()}};
  for (const auto& [k, v] : raw.items()) c[k] = v;
  if (g.trials > 0) c["trials"] = g.trials;
  if (g.seed_given) c["seed"] = g.seed;
  c["rng_scheme"] = kRngSchemeVersion;
  const std::string kind = c.at("experiment").get<std::string>();
  if (kind == "sigma2_sweep") {
    if (!c.contains("sigma2_db_grid")) throw ParameterError("sigma2_sweep needs sigma2_db_grid");
  } else if (kind == "dimension_sweep") {
    if (!c.contains("sigma2_db")) c["sigma2_db"] = -10.0;
    if (!c.contains("gamma")) c["gamma"] = 0.5;
    if (!c.contains("p_grid") || !c.contains("models"))
      throw ParameterError("dimension_sweep needs p_grid and models");
  } else {
    throw ParameterError("unknown experiment '" + kind + "'");
  }
  return c;
}

TrialConfig trial_config_from(const json& c) {
  TrialConfig t;
  t.p = c.at("p").get<int>();
  t.n = c.at("n").get<int>();
  t.mults = c.at("mults").get<std::vector<int>>();
  t.prior = PriorSpec(c.at("prior").get<std::vector<double>>());
  t.k_max = c.at("k_max").get<int>();
  t.trials = c.at("trials").get<int>();
  t.master_seed = c.at("seed").get<std::uint64_t>();
  t.data_model = parse_data_model(c.at("data_model").get<std::string>());
  t.convention = parse_variance_convention(c.at("variance_convention").get<std::string>());
  t.j_max = c.at("j_max").get<int>();
  t.alphas = c.at("alphas").get<std::vector<double>>();
  if (c.contains("sigma2_db")) t.sigma2 = db_to_sigma2(c.at("sigma2_db").get<double>());
  return t;
}

int cmd_experiment(const ExperimentFlags& f, const GlobalOptions& g, std::ostream& out,
                   std::ostream& err) {
  if (f.config.empty()) throw ParameterError("experiment: --config is required");
  if (g.format != "csv" && g.format != "json") throw ParameterError("--format must be csv or json");
  json config;
  TrialConfig base;
  std::vector<double> grid;
  std::vector<DimensionModel> models;
  std::vector<int> p_grid;
  double gamma = 0.5;
  try {
    config = resolved_experiment_config(load_json(f.config), g);
    base = trial_config_from(config);
    if (config["experiment"] == "sigma2_sweep") {
      grid = config.at("sigma2_db_grid").get<std::vector<double>>();
      if (grid.empty()) throw ParameterError("sigma2_db_grid is empty");
      for (double db : grid) {
        TrialConfig probe = base;
        probe.sigma2 = db_to_sigma2(db);
        probe.validate();
      }
    } else {
      gamma = config.at("gamma").get<double>();
      p_grid = config.at("p_grid").get<std::vector<int>>();
      for (const auto& m : config.at("models"))
        models.push_back({m.at("name").get<std::string>(), m.at("mults").get<std::vector<int>>()});
      if (p_grid.empty() || models.empty()) throw ParameterError("empty p_grid or models");
      if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");
      for (const auto& m : models)
        for (int p : p_grid) {
          TrialConfig probe = base;
          probe.mults = m.mults;
          probe.p = p;
          probe.n = static_cast<int>(std::lround(p / gamma));
          probe.validate();
        }
    }
  } catch (const json::exception& e) {
    throw ValidationError("bad experiment config '" + f.config + "': " + e.what());
  }

  const ExperimentResult result = config["experiment"] == "sigma2_sweep"
                                      ? sweep_sigma2(base, grid, g.threads)
                                      : sweep_dimension(base, models, p_grid, gamma, g.threads);
  for (const auto& r : result.rows) {
    err << r.label << " p=" << r.p << " n=" << r.n << " sigma2_db=" << format_double(sigma2_to_db(r.sigma2))
        << " P(K_hat=K)=" << format_double(r.prob_correct) << " (+/- " << format_double(r.std_error)
        << ") trials=" << r.trials << "\n";
  }

  const CsvOptions csv_opts{!g.no_timestamp, !g.no_provenance};
  const std::string csv = experiment_csv(result, config, csv_opts);
  json doc = experiment_json(result, config, !g.no_timestamp);
  if (!g.no_timestamp) doc["generated_at"] = utc_timestamp();
  const std::string js = doc.dump(2) + "\n";
  if (g.out.empty() || g.out == "-") {
    out << (g.format == "csv" ? csv : js);
  } else {
    std::filesystem::path prefix(g.out);
    if (prefix.extension() == ".csv" || prefix.extension() == ".json") prefix.replace_extension();
    std::filesystem::path csv_path = prefix, json_path = prefix;
    csv_path += ".csv";
    json_path += ".json";
    write_text_file(csv_path, csv);
    write_text_file(json_path, js);
  }
  return kOk;
}

struct HistogramFlags {
  SimulationFlags sim;
  std::string data;
  int bins = 200;
  double upper = 0.0;
};

int cmd_histogram(const HistogramFlags& f, const GlobalOptions& g, std::ostream& out) {
  SpectrumSummary summary;
  SpikeSpec spec;
  json provenance;
  if (!f.data.empty()) {
    const LoadedObservation obs = read_observation(f.data);
    spec = spike_spec_from_json(obs.sidecar.at("spec"));
    if (f.sim.sigma2) spec.sigma2 = *f.sim.sigma2;
    summary = eigenvalues_desc(sample_covariance(obs.entries), static_cast<int>(obs.entries.cols()));
    provenance = {{"data", f.data}, {"sidecar", obs.sidecar}};
  } else {
    const SimulationSetup setup = resolve_simulation(f.sim, g);
    spec = setup.spec;
    summary = eigenvalues_desc(sample_covariance(simulate(setup)), spec.n);
    provenance = setup_json(setup);
  }
  provenance["bins"] = f.bins;
  if (f.upper > 0.0) provenance["upper"] = f.upper;

  const auto bins = eigenvalue_histogram(summary, f.bins, f.upper);
  const double gamma = summary.gamma();
  const auto [lower, upper] = mp_bulk_edges(spec.sigma2, gamma);
  std::vector<std::pair<std::string, double>> refs{{"mp_lower", lower}, {"mp_upper", upper}};
  for (std::size_t k = 0; k < spec.alphas.size(); ++k)
    if (detectable(spec.alphas[k], spec.sigma2, gamma))
      refs.emplace_back("phi_alpha_" + std::to_string(k + 1), phi(spec.alphas[k], spec.sigma2, gamma));
  emit(g, histogram_csv(bins, refs, g.no_provenance ? nullptr : &provenance), out);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spiked covariance simulation and joint spike estimation"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--threads", g.threads, "Worker threads for Monte Carlo trials (0 = default)");
  app.add_option("--out", g.out, "Output path (prefix for experiment results)");
  app.add_option("--format", g.format, "csv | json (experiment stdout format)");
  app.add_option("--trials", g.trials, "Override the configured trial count");
  app.add_flag("--no-timestamp", g.no_timestamp, "Omit timestamps and wall times");
  app.add_flag("--no-provenance", g.no_provenance, "Do not embed the resolved config");

  SimulationFlags sim_flags;
  auto* simulate_cmd = app.add_subcommand("simulate", "Generate an observation matrix");
  add_simulation_flags(simulate_cmd, sim_flags);

  EstimateFlags est_flags;
  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate K, multiplicities and spike values");
  estimate_cmd->add_option("--data", est_flags.data, "Observation payload written by simulate");
  estimate_cmd->add_option("--spectrum", est_flags.spectrum, "Text file of eigenvalues");
  estimate_cmd->add_option("--eigenvalues", est_flags.eigenvalues, "Inline eigenvalues, comma separated");
  estimate_cmd->add_option("--n", est_flags.n, "Sample count behind the spectrum");
  estimate_cmd->add_option("--sigma2", est_flags.sigma2, "Known noise variance");
  estimate_cmd->add_option("--prior", est_flags.prior, "Prior support E, comma separated");
  estimate_cmd->add_option("--k-max", est_flags.k_max, "Largest candidate K");
  estimate_cmd->add_option("--j-max", est_flags.j_max, "Largest gap index scanned (0 = floor(p/4))");
  estimate_cmd->add_option("--variance-convention", est_flags.convention,
                           "proposition | proposition_literal | paper_literal");

  ExperimentFlags exp_flags;
  auto* experiment_cmd = app.add_subcommand("experiment", "Run a Monte Carlo sweep");
  experiment_cmd->add_option("--config", exp_flags.config, "Experiment JSON")->required();

  HistogramFlags hist_flags;
  auto* histogram_cmd = app.add_subcommand("histogram", "Histogram of sample eigenvalues");
  add_simulation_flags(histogram_cmd, hist_flags.sim);
  histogram_cmd->add_option("--data", hist_flags.data, "Observation payload written by simulate");
  histogram_cmd->add_option("--bins", hist_flags.bins, "Number of bins");
  histogram_cmd->add_option("--upper", hist_flags.upper, "Upper edge (default 1.05 * lambda_1)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  g.seed_given = app.get_option("--seed")->count() > 0;

  try {
    if (*simulate_cmd) return cmd_simulate(sim_flags, g, err);
    if (*estimate_cmd) return cmd_estimate(est_flags, g, out);
    if (*experiment_cmd) return cmd_experiment(exp_flags, g, out, err);
    if (*histogram_cmd) return cmd_histogram(hist_flags, g, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kDomain;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace spiked::cli
