#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "qdcascade/analysis.hpp"
#include "qdcascade/detection_chain.hpp"
#include "qdcascade/source_dynamics.hpp"

namespace qdc {

struct LineshapeModel {
  enum class Kind { kGaussian, kExponential };
  Kind kind = Kind::kExponential;
  double t2_ps = 200.0;

  void validate() const;
};

struct ExperimentConfig {
  SourceParams source{};
  DetectorParams detector0{};
  DetectorParams detector1{};
  BeamsplitterParams beamsplitter{};
  double pulse_area = 3.14159265358979323846;
  double duration_s = 0.01;
  std::uint64_t seed = 1;
  int workers = 1;
  double mzi_delay_ps = 4000.0;

  std::uint64_t num_periods() const;
  void validate() const;
};

// Hanbury Brown-Twiss autocorrelation of one cascade channel: 50/50
// split onto two detectors, dark counts merged in.
std::pair<TimeTagStream, TimeTagStream> run_hbt(const ExperimentConfig& cfg,
                                                Channel channel);

// Polarization cross-correlation: XX photons projected onto the first
// basis vector, X photons onto the parallel or orthogonal one, each arm
// on its own detector.
std::pair<TimeTagStream, TimeTagStream> run_tomography(const ExperimentConfig& cfg,
                                                       PolarizationBasis basis,
                                                       bool co_polarized);

// Two-photon interference: two excitations per period separated by the
// MZI delay; photons route 50/50 through the short or long arm and
// candidates meeting at the output splitter within the coincidence
// window interfere (parallel) or route independently (cross-polarized).
std::pair<TimeTagStream, TimeTagStream> run_tpi(const ExperimentConfig& cfg,
                                                Channel channel, bool parallel);

// Time-resolved decay histogram (start-stop against the laser pulse).
CoincidenceHistogram run_lifetime(const ExperimentConfig& cfg, Channel channel,
                                  std::int64_t bin_width_ps, std::int64_t range_ps);

struct PowerSeriesPoint {
  double theta = 0.0;
  std::uint64_t counts_x = 0;
  std::uint64_t counts_xx = 0;
};

// Detected X and XX intensities against pulse area.
std::vector<PowerSeriesPoint> run_power_series(const ExperimentConfig& cfg,
                                               const std::vector<double>& theta_grid,
                                               std::uint64_t pulses_per_point);

// First-order coherence decay, normalized to 1 at tau = 0:
// Gaussian exp(-(pi/2)(tau/T2)^2) or exponential exp(-tau/T2).
std::vector<std::pair<double, double>> g1_curve(const LineshapeModel& model,
                                                const std::vector<double>& tau_grid_ps);

// (i_max - i_min) / (i_max + i_min).
double fringe_contrast(double i_max, double i_min);

}  // namespace qdc
