#include "qdcascade/config.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace qdc {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const std::set<std::string> kTopKeys = {"format",    "preset",      "experiment",
                                        "source",    "state",       "detectors",
                                        "beamsplitter", "run",      "analysis",
                                        "output_dir"};
const std::set<std::string> kExperimentKeys = {"kind", "channel", "basis",
                                               "co_polarized", "parallel"};
const std::set<std::string> kSourceKeys = {
    "t1_xx_ps", "t1_x_ps", "t2_xx_ps", "t2_x_ps", "rabi_kappa", "rabi_c",
    "rep_period_ps", "double_pulse_delay_ps"};
const std::set<std::string> kStateKeys = {"cross_coherence_k", "fss_uev", "background_b"};
const std::set<std::string> kDetectorKeys = {"efficiency", "dark_rate_cps",
                                             "jitter_sigma_ps"};
const std::set<std::string> kBeamsplitterKeys = {"transmittance", "mode_overlap"};
const std::set<std::string> kRunKeys = {"seed", "duration_s", "workers",
                                        "pulse_area_pi", "mzi_delay_ps"};
const std::set<std::string> kAnalysisKeys = {
    "hbt_bin_ps",  "hbt_half_window_ps",  "hbt_window_periods",
    "tomo_bin_ps", "tomo_half_window_ps", "tomo_window_periods",
    "tpi_bin_ps",  "tpi_half_window_ps",  "tpi_window_periods",
    "lifetime_bin_ps", "lifetime_range_ps"};

void reject_unknown_keys(const json& object, const std::set<std::string>& allowed,
                         const std::string& path) {
  for (const auto& [key, value] : object.items()) {
    if (allowed.find(key) == allowed.end())
      throw std::invalid_argument("unknown config key: " + path + key);
  }
}

template <typename T>
void read_field(const json& object, const std::string& path, const char* key, T& out) {
  if (!object.contains(key)) return;
  try {
    out = object.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("bad value type for " + path + key);
  }
}

// Overlays `patch` onto `base` object by object (one level of nesting).
json merge_config(json base, const json& patch) {
  for (const auto& [key, value] : patch.items()) {
    if (value.is_object() && base.contains(key) && base[key].is_object()) {
      for (const auto& [inner_key, inner_value] : value.items())
        base[key][inner_key] = inner_value;
    } else {
      base[key] = value;
    }
  }
  return base;
}

ExperimentKind parse_kind(const std::string& name) {
  if (name == "hbt") return ExperimentKind::kHbt;
  if (name == "tomography") return ExperimentKind::kTomography;
  if (name == "tpi") return ExperimentKind::kTpi;
  if (name == "lifetime") return ExperimentKind::kLifetime;
  if (name == "power") return ExperimentKind::kPowerSeries;
  throw std::invalid_argument("experiment.kind must be one of hbt, tomography, tpi, "
                              "lifetime, power (got '" + name + "')");
}

Channel parse_channel(const std::string& name) {
  if (name == "X" || name == "x") return Channel::kX;
  if (name == "XX" || name == "xx") return Channel::kXX;
  throw std::invalid_argument("experiment.channel must be X or XX (got '" + name + "')");
}

PolarizationBasis parse_basis(const std::string& name) {
  if (name == "linear") return PolarizationBasis::kLinear;
  if (name == "diagonal") return PolarizationBasis::kDiagonal;
  if (name == "circular") return PolarizationBasis::kCircular;
  throw std::invalid_argument(
      "experiment.basis must be linear, diagonal or circular (got '" + name + "')");
}

// Biexciton preparation probability for a pi pulse with the default
// damping; used to derive desk-scale dark rates that preserve the
// dark-to-singles ratio of the measured device (250 / 3000).
double desk_dark_rate_cps(double efficiency) {
  const double prepared = biexciton_population(std::numbers::pi, 0.08, 0.04);
  const double photon_rate = (1e12 / 13158.0) * prepared * 0.5 * efficiency;
  return photon_rate / 11.0;
}

json preset_json(const std::string& name) {
  json config = {
      {"format", "qdcascade-config/1"},
      {"experiment",
       {{"kind", "hbt"}, {"channel", "X"}, {"basis", "linear"},
        {"co_polarized", true}, {"parallel", true}}},
      {"source",
       {{"t1_xx_ps", 220.0}, {"t1_x_ps", 400.0}, {"t2_xx_ps", 192.0},
        {"t2_x_ps", 357.0}, {"rabi_kappa", 0.08}, {"rabi_c", 0.04},
        {"rep_period_ps", 13158.0}, {"double_pulse_delay_ps", 0.0}}},
      {"state",
       {{"cross_coherence_k", 0.781609}, {"fss_uev", 0.0}, {"background_b", 0.13}}},
      {"detectors",
       {{"efficiency", 8.74e-5}, {"dark_rate_cps", 250.0}, {"jitter_sigma_ps", 50.0}}},
      {"beamsplitter", {{"transmittance", 0.5}, {"mode_overlap", 0.95}}},
      {"run",
       {{"seed", 1}, {"duration_s", 1.0}, {"workers", 1}, {"pulse_area_pi", 1.0},
        {"mzi_delay_ps", 4000.0}}},
      {"analysis",
       {{"hbt_bin_ps", 256}, {"hbt_half_window_ps", 700}, {"hbt_window_periods", 8},
        {"tomo_bin_ps", 256}, {"tomo_half_window_ps", 2000}, {"tomo_window_periods", 8},
        {"tpi_bin_ps", 100}, {"tpi_half_window_ps", 1400}, {"tpi_window_periods", 4},
        {"lifetime_bin_ps", 25}, {"lifetime_range_ps", 4000}}},
      {"output_dir", "."},
  };

  if (name == "paper-default") return config;
  if (name == "desk") {
    const double efficiency = 0.25;
    config["detectors"]["efficiency"] = efficiency;
    config["detectors"]["dark_rate_cps"] = desk_dark_rate_cps(efficiency);
    config["run"]["duration_s"] = 0.0263;  // ~2e6 periods
    return config;
  }
  if (name == "ideal") {
    config["state"] = {{"cross_coherence_k", 1.0}, {"fss_uev", 0.0}, {"background_b", 0.0}};
    config["source"]["rabi_kappa"] = 0.0;
    config["source"]["rabi_c"] = 0.0;
    config["source"]["t2_xx_ps"] = 440.0;  // 2*T1: lifetime-limited coherence
    config["source"]["t2_x_ps"] = 800.0;
    config["detectors"] = {{"efficiency", 1.0}, {"dark_rate_cps", 0.0},
                           {"jitter_sigma_ps", 0.0}};
    config["beamsplitter"]["mode_overlap"] = 1.0;
    config["run"]["duration_s"] = 0.00264;  // ~2e5 periods
    return config;
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

}  // namespace

const char* experiment_kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kHbt: return "hbt";
    case ExperimentKind::kTomography: return "tomography";
    case ExperimentKind::kTpi: return "tpi";
    case ExperimentKind::kLifetime: return "lifetime";
    case ExperimentKind::kPowerSeries: return "power";
  }
  return "unknown";
}

void AnalysisParams::validate() const {
  if (hbt_bin_ps <= 0 || tomo_bin_ps <= 0 || tpi_bin_ps <= 0 || lifetime_bin_ps <= 0)
    throw std::invalid_argument("analysis bin widths must be > 0");
  if (hbt_half_window_ps <= 0 || tomo_half_window_ps <= 0 || tpi_half_window_ps <= 0)
    throw std::invalid_argument("analysis half windows must be > 0");
  if (hbt_window_periods < 2 || tomo_window_periods < 2 || tpi_window_periods < 2)
    throw std::invalid_argument("analysis windows need at least 2 periods");
  if (lifetime_range_ps <= 0)
    throw std::invalid_argument("lifetime_range_ps must be > 0");
}

std::string RunConfig::canonical_json() const {
  ordered_json j;
  j["format"] = "qdcascade-config/1";
  j["experiment"] = {{"kind", experiment_kind_name(kind)},
                     {"channel", channel_name(channel)},
                     {"basis", basis == PolarizationBasis::kLinear      ? "linear"
                               : basis == PolarizationBasis::kDiagonal ? "diagonal"
                                                                       : "circular"},
                     {"co_polarized", co_polarized},
                     {"parallel", parallel_polarized}};
  j["source"] = {{"t1_xx_ps", experiment.source.t1_xx_ps},
                 {"t1_x_ps", experiment.source.t1_x_ps},
                 {"t2_xx_ps", experiment.source.t2_xx_ps},
                 {"t2_x_ps", experiment.source.t2_x_ps},
                 {"rabi_kappa", experiment.source.rabi_damping_kappa},
                 {"rabi_c", experiment.source.rabi_incoherent_c},
                 {"rep_period_ps", experiment.source.rep_period_ps},
                 {"double_pulse_delay_ps", experiment.source.double_pulse_delay_ps}};
  j["state"] = {{"cross_coherence_k", experiment.source.state.cross_coherence_k},
                {"fss_uev", experiment.source.state.fss_uev},
                {"background_b", experiment.source.state.background_b}};
  j["detectors"] = {{"efficiency", experiment.detector0.efficiency},
                    {"dark_rate_cps", experiment.detector0.dark_rate_cps},
                    {"jitter_sigma_ps", experiment.detector0.jitter_sigma_ps}};
  j["beamsplitter"] = {{"transmittance", experiment.beamsplitter.transmittance},
                       {"mode_overlap", experiment.beamsplitter.mode_overlap}};
  j["run"] = {{"seed", experiment.seed},
              {"duration_s", experiment.duration_s},
              {"workers", experiment.workers},
              {"pulse_area_pi", experiment.pulse_area / std::numbers::pi},
              {"mzi_delay_ps", experiment.mzi_delay_ps}};
  j["analysis"] = {{"hbt_bin_ps", analysis.hbt_bin_ps},
                   {"hbt_half_window_ps", analysis.hbt_half_window_ps},
                   {"hbt_window_periods", analysis.hbt_window_periods},
                   {"tomo_bin_ps", analysis.tomo_bin_ps},
                   {"tomo_half_window_ps", analysis.tomo_half_window_ps},
                   {"tomo_window_periods", analysis.tomo_window_periods},
                   {"tpi_bin_ps", analysis.tpi_bin_ps},
                   {"tpi_half_window_ps", analysis.tpi_half_window_ps},
                   {"tpi_window_periods", analysis.tpi_window_periods},
                   {"lifetime_bin_ps", analysis.lifetime_bin_ps},
                   {"lifetime_range_ps", analysis.lifetime_range_ps}};
  j["output_dir"] = output_dir;
  return j.dump(2);
}

RunConfig parse_config(const std::string& json_text) {
  json document;
  try {
    document = json::parse(json_text);
  } catch (const json::parse_error& error) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + error.what());
  }
  if (!document.is_object()) throw std::invalid_argument("config must be a JSON object");

  if (document.contains("preset")) {
    const std::string name = document.at("preset").get<std::string>();
    json base = preset_json(name);
    document.erase("preset");
    document = merge_config(base, document);
  }

  reject_unknown_keys(document, kTopKeys, "");
  if (!document.contains("experiment") || !document["experiment"].contains("kind") ||
      document["experiment"]["kind"].get<std::string>().empty())
    throw std::invalid_argument("missing required field: experiment.kind");

  RunConfig config;
  const json& experiment = document["experiment"];
  reject_unknown_keys(experiment, kExperimentKeys, "experiment.");
  config.kind = parse_kind(experiment["kind"].get<std::string>());
  if (experiment.contains("channel"))
    config.channel = parse_channel(experiment["channel"].get<std::string>());
  if (experiment.contains("basis"))
    config.basis = parse_basis(experiment["basis"].get<std::string>());
  read_field(experiment, "experiment.", "co_polarized", config.co_polarized);
  read_field(experiment, "experiment.", "parallel", config.parallel_polarized);

  if (document.contains("source")) {
    const json& source = document["source"];
    reject_unknown_keys(source, kSourceKeys, "source.");
    SourceParams& p = config.experiment.source;
    read_field(source, "source.", "t1_xx_ps", p.t1_xx_ps);
    read_field(source, "source.", "t1_x_ps", p.t1_x_ps);
    read_field(source, "source.", "t2_xx_ps", p.t2_xx_ps);
    read_field(source, "source.", "t2_x_ps", p.t2_x_ps);
    read_field(source, "source.", "rabi_kappa", p.rabi_damping_kappa);
    read_field(source, "source.", "rabi_c", p.rabi_incoherent_c);
    read_field(source, "source.", "rep_period_ps", p.rep_period_ps);
    read_field(source, "source.", "double_pulse_delay_ps", p.double_pulse_delay_ps);
  }
  if (document.contains("state")) {
    const json& state = document["state"];
    reject_unknown_keys(state, kStateKeys, "state.");
    CascadeStateParams& s = config.experiment.source.state;
    read_field(state, "state.", "cross_coherence_k", s.cross_coherence_k);
    read_field(state, "state.", "fss_uev", s.fss_uev);
    read_field(state, "state.", "background_b", s.background_b);
  }
  if (document.contains("detectors")) {
    const json& detectors = document["detectors"];
    reject_unknown_keys(detectors, kDetectorKeys, "detectors.");
    read_field(detectors, "detectors.", "efficiency", config.experiment.detector0.efficiency);
    read_field(detectors, "detectors.", "dark_rate_cps",
               config.experiment.detector0.dark_rate_cps);
    read_field(detectors, "detectors.", "jitter_sigma_ps",
               config.experiment.detector0.jitter_sigma_ps);
    config.experiment.detector1 = config.experiment.detector0;
    config.experiment.detector1.id = 1;
  }
  if (document.contains("beamsplitter")) {
    const json& bs = document["beamsplitter"];
    reject_unknown_keys(bs, kBeamsplitterKeys, "beamsplitter.");
    read_field(bs, "beamsplitter.", "transmittance",
               config.experiment.beamsplitter.transmittance);
    read_field(bs, "beamsplitter.", "mode_overlap",
               config.experiment.beamsplitter.mode_overlap);
  }
  if (document.contains("run")) {
    const json& run = document["run"];
    reject_unknown_keys(run, kRunKeys, "run.");
    read_field(run, "run.", "seed", config.experiment.seed);
    read_field(run, "run.", "duration_s", config.experiment.duration_s);
    read_field(run, "run.", "workers", config.experiment.workers);
    double pulse_area_pi = config.experiment.pulse_area / std::numbers::pi;
    read_field(run, "run.", "pulse_area_pi", pulse_area_pi);
    config.experiment.pulse_area = pulse_area_pi * std::numbers::pi;
    read_field(run, "run.", "mzi_delay_ps", config.experiment.mzi_delay_ps);
  }
  if (document.contains("analysis")) {
    const json& analysis = document["analysis"];
    reject_unknown_keys(analysis, kAnalysisKeys, "analysis.");
    AnalysisParams& a = config.analysis;
    read_field(analysis, "analysis.", "hbt_bin_ps", a.hbt_bin_ps);
    read_field(analysis, "analysis.", "hbt_half_window_ps", a.hbt_half_window_ps);
    read_field(analysis, "analysis.", "hbt_window_periods", a.hbt_window_periods);
    read_field(analysis, "analysis.", "tomo_bin_ps", a.tomo_bin_ps);
    read_field(analysis, "analysis.", "tomo_half_window_ps", a.tomo_half_window_ps);
    read_field(analysis, "analysis.", "tomo_window_periods", a.tomo_window_periods);
    read_field(analysis, "analysis.", "tpi_bin_ps", a.tpi_bin_ps);
    read_field(analysis, "analysis.", "tpi_half_window_ps", a.tpi_half_window_ps);
    read_field(analysis, "analysis.", "tpi_window_periods", a.tpi_window_periods);
    read_field(analysis, "analysis.", "lifetime_bin_ps", a.lifetime_bin_ps);
    read_field(analysis, "analysis.", "lifetime_range_ps", a.lifetime_range_ps);
  }
  read_field(document, "", "output_dir", config.output_dir);

  // TPI runs excite twice per period by default.
  if (config.kind == ExperimentKind::kTpi &&
      config.experiment.source.double_pulse_delay_ps == 0.0)
    config.experiment.source.double_pulse_delay_ps = 4000.0;

  try {
    config.experiment.validate();
    config.analysis.validate();
  } catch (const std::invalid_argument& error) {
    throw std::invalid_argument(std::string("invalid config: ") + error.what());
  }
  return config;
}

std::string preset_text(const std::string& name) { return preset_json(name).dump(2); }

std::vector<std::string> preset_names() { return {"paper-default", "desk", "ideal"}; }

RunConfig preset_config(const std::string& name) {
  json j = preset_json(name);
  return parse_config(j.dump());
}

}  // namespace qdc
