#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qdcascade/experiments.hpp"

namespace qdc {

enum class ExperimentKind { kHbt, kTomography, kTpi, kLifetime, kPowerSeries };

const char* experiment_kind_name(ExperimentKind kind);

struct AnalysisParams {
  std::int64_t hbt_bin_ps = 256;
  std::int64_t hbt_half_window_ps = 700;
  int hbt_window_periods = 8;
  std::int64_t tomo_bin_ps = 256;
  std::int64_t tomo_half_window_ps = 2000;
  int tomo_window_periods = 8;
  std::int64_t tpi_bin_ps = 100;
  std::int64_t tpi_half_window_ps = 1400;
  int tpi_window_periods = 4;
  std::int64_t lifetime_bin_ps = 25;
  std::int64_t lifetime_range_ps = 4000;

  void validate() const;
};

struct RunConfig {
  ExperimentKind kind = ExperimentKind::kHbt;
  ExperimentConfig experiment{};
  AnalysisParams analysis{};
  Channel channel = Channel::kX;
  PolarizationBasis basis = PolarizationBasis::kLinear;
  bool co_polarized = true;
  bool parallel_polarized = true;
  std::string output_dir = ".";

  // Canonical serialized form; hashing it stamps reports with provenance.
  std::string canonical_json() const;
};

// Parses and validates a JSON config document. Unknown keys, missing
// required fields and out-of-range values raise std::invalid_argument
// with the offending field path in the message.
RunConfig parse_config(const std::string& json_text);

// Named presets returned as JSON text that parse_config accepts.
//   paper-default: source physics and detection rates of the measured
//                  device (low efficiency, 250 cps dark rate).
//   desk:          same physics with detection scaled up so that desk-
//                  size runs accumulate enough coincidences; the
//                  dark-to-singles ratio of paper-default is preserved.
//   ideal:         noiseless source and unit-efficiency detection.
std::string preset_text(const std::string& name);
std::vector<std::string> preset_names();

RunConfig preset_config(const std::string& name);

}  // namespace qdc
