#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

namespace qdc {

struct ReproduceOptions {
  std::uint64_t seed = 1;
  std::string output_dir = "reproduce-out";
  int workers = 1;
  // Multiplies all run durations; 1.0 completes in about a minute.
  double scale = 1.0;
};

// Runs the full measurement suite on the desk-scaled default device:
// autocorrelations, six-setting polarization tomography, two-photon
// interference for both channels and both polarization settings,
// time-resolved lifetime fits, coherence-curve fits, the excitation
// power series and the pulse duration-bandwidth check. Writes
// report.json, report.txt and per-measurement plot CSVs into
// output_dir and returns the report document.
nlohmann::ordered_json reproduce_report(const ReproduceOptions& options);

}  // namespace qdc
