#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qdcascade/config.hpp"
#include "qdcascade/fitting.hpp"
#include "qdcascade/io.hpp"
#include "qdcascade/reproduce.hpp"

namespace {

using qdc::Channel;
using qdc::PolarizationBasis;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

qdc::RunConfig load_config(const std::string& preset, const std::string& config_path,
                           std::uint64_t seed, int workers, double duration_s,
                           const std::string& out_dir) {
  nlohmann::json overrides = nlohmann::json::object();
  if (!config_path.empty()) overrides = nlohmann::json::parse(slurp(config_path));
  if (!overrides.contains("preset") && !preset.empty()) overrides["preset"] = preset;
  if (seed != 0) overrides["run"]["seed"] = seed;
  if (workers > 0) overrides["run"]["workers"] = workers;
  if (duration_s > 0.0) overrides["run"]["duration_s"] = duration_s;
  if (!out_dir.empty()) overrides["output_dir"] = out_dir;
  return qdc::parse_config(overrides.dump());
}

qdc::Metadata stream_metadata(const qdc::RunConfig& config, const std::string& role) {
  return {{"seed", std::to_string(config.experiment.seed)},
          {"role", role},
          {"rep_period_ps", std::to_string(config.experiment.source.rep_period_ps)},
          {"duration_s", std::to_string(config.experiment.duration_s)},
          {"config_hash", std::to_string(qdc::fnv1a_hash(config.canonical_json()))}};
}

void write_stream_pair(const qdc::RunConfig& config, const qdc::TimeTagStream& a,
                       const qdc::TimeTagStream& b, const std::string& stem, bool binary) {
  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  const char* extension = binary ? ".ttb" : ".tags";
  qdc::write_timetags(a, (dir / (stem + "_det0" + extension)).string(),
                      stream_metadata(config, stem + "/det0"), binary);
  qdc::write_timetags(b, (dir / (stem + "_det1" + extension)).string(),
                      stream_metadata(config, stem + "/det1"), binary);
  std::cout << "wrote " << (dir / (stem + "_det0" + extension)).string() << " ("
            << a.size() << " tags) and " << (dir / (stem + "_det1" + extension)).string()
            << " (" << b.size() << " tags)\n";
}

qdc::CoincidenceHistogram correlate_files(const std::string& path_a,
                                          const std::string& path_b,
                                          std::int64_t bin_ps, std::int64_t window_ps,
                                          bool allow_unsorted) {
  const auto file_a = qdc::read_timetags(path_a, allow_unsorted);
  const auto file_b = qdc::read_timetags(path_b, allow_unsorted);
  qdc::CoincidenceHistogram h = qdc::correlate(file_a.stream, file_b.stream, bin_ps, window_ps);
  auto it = file_a.metadata.find("duration_s");
  if (it != file_a.metadata.end()) {
    const double duration = std::stod(it->second);
    if (duration > 0.0) {
      h.integration_time_s = duration;
      h.singles_rates_cps = {file_a.stream.size() / duration, file_b.stream.size() / duration};
    }
  }
  it = file_a.metadata.find("rep_period_ps");
  if (it != file_a.metadata.end()) h.period_ps = std::stod(it->second);
  return h;
}

int run_simulate(const qdc::RunConfig& config, bool binary) {
  using qdc::ExperimentKind;
  switch (config.kind) {
    case ExperimentKind::kHbt: {
      const auto [a, b] = qdc::run_hbt(config.experiment, config.channel);
      write_stream_pair(config, a, b,
                        std::string("hbt_") + qdc::channel_name(config.channel), binary);
      return 0;
    }
    case ExperimentKind::kTomography: {
      const auto [a, b] =
          qdc::run_tomography(config.experiment, config.basis, config.co_polarized);
      const std::string basis = config.basis == PolarizationBasis::kLinear      ? "linear"
                                : config.basis == PolarizationBasis::kDiagonal ? "diagonal"
                                                                               : "circular";
      write_stream_pair(config, a, b,
                        "tomography_" + basis + (config.co_polarized ? "_co" : "_cross"),
                        binary);
      return 0;
    }
    case ExperimentKind::kTpi: {
      const auto [a, b] =
          qdc::run_tpi(config.experiment, config.channel, config.parallel_polarized);
      write_stream_pair(config, a, b,
                        std::string("tpi_") + qdc::channel_name(config.channel) +
                            (config.parallel_polarized ? "_parallel" : "_cross"),
                        binary);
      return 0;
    }
    case ExperimentKind::kLifetime: {
      const auto h = qdc::run_lifetime(config.experiment, config.channel,
                                       config.analysis.lifetime_bin_ps,
                                       config.analysis.lifetime_range_ps);
      const std::filesystem::path dir(config.output_dir);
      std::filesystem::create_directories(dir);
      const std::string path =
          (dir / (std::string("lifetime_") + qdc::channel_name(config.channel) + ".csv"))
              .string();
      qdc::write_histogram(h, path, {{"channel", qdc::channel_name(config.channel)}});
      std::cout << "wrote " << path << "\n";
      return 0;
    }
    case ExperimentKind::kPowerSeries: {
      std::vector<double> thetas;
      for (int i = 1; i <= 48; ++i) thetas.push_back(i * 4.0 * M_PI / 48.0);
      const auto series = qdc::run_power_series(config.experiment, thetas, 20000);
      std::vector<std::pair<double, double>> xx_curve, x_curve;
      for (const auto& p : series) {
        xx_curve.emplace_back(p.theta, static_cast<double>(p.counts_xx));
        x_curve.emplace_back(p.theta, static_cast<double>(p.counts_x));
      }
      const std::filesystem::path dir(config.output_dir);
      std::filesystem::create_directories(dir);
      qdc::write_xy_csv(xx_curve, (dir / "power_series_xx.csv").string(), "theta_rad",
                        "counts");
      qdc::write_xy_csv(x_curve, (dir / "power_series_x.csv").string(), "theta_rad",
                        "counts");
      std::cout << "wrote " << (dir / "power_series_xx.csv").string() << " and "
                << (dir / "power_series_x.csv").string() << "\n";
      return 0;
    }
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo simulator and analysis pipeline for a quantum-dot "
               "biexciton-exciton cascade photon-pair source"};
  app.require_subcommand(1);

  // Shared options.
  std::string preset = "desk";
  std::string config_path;
  std::uint64_t seed = 0;
  int workers = 0;
  double duration_s = 0.0;
  std::string out_dir;
  bool binary = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--preset", preset, "configuration preset (see `preset list`)");
    cmd->add_option("--config", config_path, "JSON config file with overrides");
    cmd->add_option("--seed", seed, "master seed (nonzero overrides the preset)");
    cmd->add_option("--workers", workers, "worker thread count");
    cmd->add_option("--duration", duration_s, "simulated wall time in seconds");
    cmd->add_option("--out", out_dir, "output directory");
  };

  // simulate -----------------------------------------------------------------
  auto* simulate = app.add_subcommand("simulate", "run one virtual experiment");
  std::string experiment = "hbt";
  std::string channel = "X";
  std::string basis = "linear";
  bool cross_polarized = false;
  simulate->add_option("experiment", experiment,
                       "hbt | tomography | tpi | lifetime | power")
      ->required();
  simulate->add_option("--channel", channel, "cascade channel: X or XX");
  simulate->add_option("--basis", basis, "tomography basis: linear | diagonal | circular");
  simulate->add_flag("--cross", cross_polarized,
                     "orthogonal polarizations (tomography/tpi); default parallel");
  simulate->add_flag("--binary", binary, "write binary time tags instead of CSV");
  add_common(simulate);

  // analyze ------------------------------------------------------------------
  auto* analyze = app.add_subcommand("analyze", "compute results from recorded files");
  std::string task = "g2";
  std::vector<std::string> files;
  double dark_rate = 0.0;
  std::int64_t bin_ps = 256;
  std::int64_t half_window_ps = 700;
  std::int64_t period_ps = 13158;
  std::int64_t sub_delay_ps = 4000;
  double mode_overlap = 0.95;
  double g2_residual_opt = 0.0;
  double irf_sigma = 50.0;
  bool allow_unsorted = false;
  int window_periods = 8;
  analyze->add_option("task", task, "g2 | tomography | tpi | lifetime | coherence | rabi")
      ->required();
  analyze->add_option("files", files, "input files (see README for each task)")->required();
  analyze->add_option("--dark-rate", dark_rate, "detector dark count rate (cps)");
  analyze->add_option("--bin", bin_ps, "correlation bin width (ps)");
  analyze->add_option("--half-window", half_window_ps, "peak integration half window (ps)");
  analyze->add_option("--period", period_ps, "excitation period (ps)");
  analyze->add_option("--sub-delay", sub_delay_ps, "TPI pulse/interferometer delay (ps)");
  analyze->add_option("--window-periods", window_periods, "correlation window (periods)");
  analyze->add_option("--mode-overlap", mode_overlap, "beamsplitter mode overlap (1-eps)");
  analyze->add_option("--g2-residual", g2_residual_opt,
                      "residual multiphoton g2 for the BS correction");
  analyze->add_option("--irf-sigma", irf_sigma, "instrument response sigma (ps)");
  analyze->add_flag("--sort", allow_unsorted, "sort unsorted time tags on read");

  // reproduce ------------------------------------------------------------------
  auto* reproduce = app.add_subcommand(
      "reproduce", "run the full measurement suite and write a report");
  double scale = 1.0;
  reproduce->add_option("--scale", scale, "duration multiplier for every run");
  add_common(reproduce);

  // preset ---------------------------------------------------------------------
  auto* preset_cmd = app.add_subcommand("preset", "list or show configuration presets");
  std::string preset_action = "list";
  std::string preset_name = "paper-default";
  preset_cmd->add_option("action", preset_action, "list | show")->required();
  preset_cmd->add_option("name", preset_name, "preset name for `show`");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      nlohmann::json overrides;
      if (!config_path.empty()) overrides = nlohmann::json::parse(slurp(config_path));
      if (!overrides.contains("preset")) overrides["preset"] = preset;
      overrides["experiment"]["kind"] = experiment;
      overrides["experiment"]["channel"] = channel;
      overrides["experiment"]["basis"] = basis;
      overrides["experiment"]["co_polarized"] = !cross_polarized;
      overrides["experiment"]["parallel"] = !cross_polarized;
      if (seed != 0) overrides["run"]["seed"] = seed;
      if (workers > 0) overrides["run"]["workers"] = workers;
      if (duration_s > 0.0) overrides["run"]["duration_s"] = duration_s;
      if (!out_dir.empty()) overrides["output_dir"] = out_dir;
      return run_simulate(qdc::parse_config(overrides.dump()), binary);
    }

    if (analyze->parsed()) {
      nlohmann::ordered_json result;
      const std::int64_t window =
          window_periods * period_ps + period_ps / 2;
      if (task == "g2") {
        if (files.size() != 2)
          throw std::runtime_error("analyze g2 needs two time-tag files");
        const auto h = correlate_files(files[0], files[1], bin_ps, window, allow_unsorted);
        const auto report = qdc::hbt_g2(h, dark_rate, period_ps, half_window_ps);
        result = {{"raw", report.raw},
                  {"raw_sigma", report.raw_sigma},
                  {"corrected", report.corrected},
                  {"corrected_sigma", report.corrected_sigma},
                  {"accidental_per_bin", report.accidental_per_bin}};
      } else if (task == "tomography") {
        if (files.size() != 1)
          throw std::runtime_error(
              "analyze tomography takes the directory that holds the six "
              "tomography_<basis>_<co|cross>_det{0,1} files");
        const std::filesystem::path dir(files[0]);
        std::map<PolarizationBasis, qdc::TomographySetting> settings;
        for (auto [pol_basis, name] :
             {std::pair{PolarizationBasis::kLinear, "linear"},
              std::pair{PolarizationBasis::kDiagonal, "diagonal"},
              std::pair{PolarizationBasis::kCircular, "circular"}}) {
          qdc::TomographySetting setting;
          for (bool co : {true, false}) {
            const std::string stem =
                std::string("tomography_") + name + (co ? "_co" : "_cross");
            (co ? setting.co : setting.cross) = correlate_files(
                (dir / (stem + "_det0.tags")).string(),
                (dir / (stem + "_det1.tags")).string(), bin_ps, window, allow_unsorted);
          }
          settings[pol_basis] = setting;
        }
        qdc::TomographyAnalysisParams params;
        params.dark_rate_cps = dark_rate;
        params.spacing_ps = period_ps;
        params.half_window_ps = half_window_ps > 0 ? half_window_ps : 2000;
        const auto tomo = qdc::tomography_pipeline(settings, params);
        for (auto [pol_basis, name] :
             {std::pair{PolarizationBasis::kLinear, "linear"},
              std::pair{PolarizationBasis::kDiagonal, "diagonal"},
              std::pair{PolarizationBasis::kCircular, "circular"}}) {
          const auto& c = tomo.contrasts.at(pol_basis);
          result["contrasts"][name] = {{"value", c.value}, {"sigma", c.sigma}};
        }
        result["fidelity"] = {{"value", tomo.fidelity}, {"sigma", tomo.fidelity_sigma}};
      } else if (task == "tpi") {
        if (files.size() != 4)
          throw std::runtime_error(
              "analyze tpi needs parallel_det0 parallel_det1 cross_det0 cross_det1");
        const auto h_par =
            correlate_files(files[0], files[1], bin_ps, window, allow_unsorted);
        const auto h_crx =
            correlate_files(files[2], files[3], bin_ps, window, allow_unsorted);
        qdc::TpiAnalysisParams params;
        params.dark_rate_cps = dark_rate;
        params.period_ps = period_ps;
        params.sub_delay_ps = sub_delay_ps;
        params.half_window_ps = half_window_ps;
        params.mode_overlap = mode_overlap;
        params.g2_residual = g2_residual_opt;
        const auto v = qdc::tpi_visibility(h_par, h_crx, params, Channel::kXX);
        result = {{"side_peak",
                   {{"raw", v.side_peak.raw},
                    {"apd_corrected", v.side_peak.apd_corrected},
                    {"fully_corrected", v.side_peak.fully_corrected}}},
                  {"cross_pol",
                   {{"raw", v.cross_pol.raw},
                    {"apd_corrected", v.cross_pol.apd_corrected},
                    {"fully_corrected", v.cross_pol.fully_corrected}}}};
      } else if (task == "lifetime") {
        if (files.size() != 1)
          throw std::runtime_error("analyze lifetime needs one histogram CSV");
        const auto h = qdc::read_histogram(files[0]);
        std::string name = std::filesystem::path(files[0]).filename().string();
        const Channel fit_channel =
            name.find("XX") != std::string::npos ? Channel::kXX : Channel::kX;
        const auto fit = qdc::fit_lifetimes(h, fit_channel, irf_sigma);
        for (std::size_t i = 0; i < fit.parameter_names.size(); ++i)
          result[fit.parameter_names[i]] = {
              {"value", fit.values(static_cast<Eigen::Index>(i))},
              {"sigma", fit.std_errors(static_cast<Eigen::Index>(i))}};
        result["model"] = fit.model;
        result["residual_norm"] = fit.residual_norm;
      } else if (task == "coherence") {
        if (files.size() != 1)
          throw std::runtime_error("analyze coherence needs one (tau, contrast) CSV");
        const auto fit = qdc::fit_coherence(qdc::read_xy_csv(files[0]));
        result = {{"model", fit.model},
                  {"t2_ps", fit.value("t2_ps")},
                  {"t2_sigma", fit.std_error("t2_ps")},
                  {"ambiguous", fit.ambiguous}};
      } else if (task == "rabi") {
        if (files.size() != 1)
          throw std::runtime_error("analyze rabi needs one (theta, counts) CSV");
        const auto fit = qdc::fit_rabi(qdc::read_xy_csv(files[0]));
        result = {{"kappa", fit.value("kappa")},
                  {"c", fit.value("c")},
                  {"axis_scale", fit.value("axis_scale")},
                  {"scale", fit.value("scale")}};
      } else {
        throw std::runtime_error("unknown analyze task '" + task + "'");
      }
      std::cout << result.dump(2) << "\n";
      return 0;
    }

    if (reproduce->parsed()) {
      qdc::ReproduceOptions options;
      if (seed != 0) options.seed = seed;
      if (workers > 0) options.workers = workers;
      if (!out_dir.empty()) options.output_dir = out_dir;
      options.scale = scale;
      const auto report = qdc::reproduce_report(options);
      std::cout << report.dump(2) << "\n";
      return 0;
    }

    if (preset_cmd->parsed()) {
      if (preset_action == "list") {
        for (const auto& name : qdc::preset_names()) std::cout << name << "\n";
        return 0;
      }
      if (preset_action == "show") {
        std::cout << qdc::preset_text(preset_name) << "\n";
        return 0;
      }
      throw std::runtime_error("preset action must be list or show");
    }
  } catch (const std::exception& error) {
    nlohmann::json failure = {{"error", error.what()}};
    std::cerr << failure.dump() << "\n";
    return 1;
  }
  return 1;
}
