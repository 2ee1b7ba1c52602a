#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qdcascade/detection_chain.hpp"
#include "qdcascade/quantum_state.hpp"

namespace qdc {

// Binned start-multistop coincidence histogram. Bin j spans
// [origin + j*bin_width, origin + (j+1)*bin_width).
struct CoincidenceHistogram {
  std::int64_t bin_width_ps = 0;
  std::int64_t origin_ps = 0;
  std::vector<std::uint64_t> counts;
  double integration_time_s = 0.0;
  std::array<double, 2> singles_rates_cps{0.0, 0.0};
  double period_ps = 0.0;

  std::uint64_t total() const;
  std::int64_t bin_center_ps(std::size_t j) const {
    return origin_ps + static_cast<std::int64_t>(j) * bin_width_ps + bin_width_ps / 2;
  }
};

// All coincidences with (t_b - t_a) inside the symmetric window.
// Both streams must be time-sorted. Singles rates and integration time
// are estimated from the stream spans; callers with exact knowledge may
// overwrite them.
CoincidenceHistogram correlate(const TimeTagStream& a, const TimeTagStream& b,
                               std::int64_t bin_width_ps, std::int64_t window_ps);

// Peak areas keyed by delay index (multiples of the peak spacing),
// center peak at index 0. Fractional after background subtraction.
struct PeakAreas {
  std::map<int, double> areas;
  int bins_per_peak = 0;
  std::int64_t spacing_ps = 0;
  bool clamped = false;  // set when a subtraction clipped an area at zero

  double center() const { return areas.at(0); }
  double side_mean() const;
  int side_count() const;
};

PeakAreas integrate_peaks(const CoincidenceHistogram& h, std::int64_t spacing_ps,
                          std::int64_t half_window_ps);

// Center peak area over the mean side-peak area (the Poisson level).
double g2_zero(const PeakAreas& peaks);

// Uncorrelated coincidences per channel, N_c = (n_s1 + n_s2) * n_dc * tau_c * T.
double dark_coincidence_estimate(double n_s1_cps, double n_s2_cps, double n_dc_cps,
                                 double tau_c_s, double integration_time_s);

// Subtracts per_channel * bins_per_peak from every peak, clamping at zero.
PeakAreas subtract_background(const PeakAreas& peaks, double per_channel_counts,
                              int bins_per_peak);

// (g2_co - g2_cross) / (g2_co + g2_cross).
double contrast(double g2_co, double g2_cross);

// ---------------------------------------------------------------------------
// HBT autocorrelation report

struct G2Report {
  double raw = 0.0;
  double raw_sigma = 0.0;
  double corrected = 0.0;
  double corrected_sigma = 0.0;
  double accidental_per_bin = 0.0;
  PeakAreas raw_areas;
  PeakAreas corrected_areas;
};

G2Report hbt_g2(const CoincidenceHistogram& h, double dark_rate_cps,
                std::int64_t spacing_ps, std::int64_t half_window_ps);

// ---------------------------------------------------------------------------
// Polarization tomography

struct TomographySetting {
  CoincidenceHistogram co;
  CoincidenceHistogram cross;
};

struct TomographyAnalysisParams {
  double dark_rate_cps = 0.0;
  std::int64_t spacing_ps = 13158;
  std::int64_t half_window_ps = 2000;
};

struct ContrastEstimate {
  double value = 0.0;
  double sigma = 0.0;
  double g2_co = 0.0;
  double g2_cross = 0.0;
};

struct TomographyResult {
  std::map<PolarizationBasis, ContrastEstimate> contrasts;
  double fidelity = 0.0;
  double fidelity_sigma = 0.0;
};

// Peak integration, dark-count correction and Poisson normalization for
// all six settings, then contrasts and the Bell-state fidelity bound with
// first-order Poisson error propagation.
TomographyResult tomography_pipeline(
    const std::map<PolarizationBasis, TomographySetting>& settings,
    const TomographyAnalysisParams& params);

// ---------------------------------------------------------------------------
// Two-photon interference

// Areas of the zero-delay five-peak cluster. With the short repetition
// period the outer peaks merge with the neighbouring clusters' peaks;
// a2_star/a4_star then hold the composite areas (A2 + B_L etc).
struct TpiClusterAreas {
  double a1_star = 0.0;
  double a2_star = 0.0;
  double a3 = 0.0;
  double a4_star = 0.0;
  double a5_star = 0.0;
  double delayed_center_mean = 0.0;  // mean area of cluster centers, |m| in 1..3
  double window_width_ps = 0.0;      // integration window width per peak
  bool overlapped = false;
};

TpiClusterAreas integrate_tpi_cluster(const CoincidenceHistogram& h,
                                      std::int64_t period_ps, std::int64_t sub_delay_ps,
                                      std::int64_t half_window_ps);

// Overlap composition: a2 = (2/3) a2_star, a4 = (2/3) a4_star.
std::pair<double, double> rescale_overlapped_peaks(double a2_star, double a4_star);

// V = 1 - a3 / ((a2_star + a4_star) / 3).
double tpi_visibility_sidepeak(double a2_star, double a3, double a4_star);

// V = 1 - g2_parallel(0) / g2_cross(0).
double tpi_visibility_crosspol(double g2_parallel_center, double g2_cross_center);

enum class VisibilityMethod { kSidePeak, kCrossPol };

struct VisibilityReport {
  double raw = 0.0;
  double apd_corrected = 0.0;
  double fully_corrected = 0.0;
  VisibilityMethod method = VisibilityMethod::kSidePeak;
  Channel channel = Channel::kXX;
};

// Correction chain on a raw visibility.
// Stage 1 (APD): every peak area loses `accidental_fraction` of the
// distinguishable reference level, so
//   side-peak method:  v_apd = 1 - (1 - v - alpha) / (1 - 2*alpha/3)
//   cross-pol method:  v_apd = 1 - (1 - v - alpha) / (1 - alpha)
// Stage 2 (BS): v_full = v_apd / (mode_overlap^2 * (1 - 2*g2_residual)),
// capped at 1.
VisibilityReport correct_visibility(double v_raw, double accidental_fraction,
                                    double mode_overlap_1me, double g2_residual,
                                    VisibilityMethod method,
                                    Channel channel = Channel::kXX);

struct TpiVisibilityReport {
  VisibilityReport side_peak;
  VisibilityReport cross_pol;
  TpiClusterAreas parallel_areas;
  TpiClusterAreas cross_areas;
  double accidental_per_window = 0.0;
};

struct TpiAnalysisParams {
  double dark_rate_cps = 0.0;
  std::int64_t period_ps = 13158;
  std::int64_t sub_delay_ps = 4000;
  std::int64_t half_window_ps = 1400;
  double mode_overlap = 0.95;
  double g2_residual = 0.0;
};

// Full evaluation of one parallel/cross histogram pair by both methods,
// with accidental (APD) and beamsplitter corrections.
TpiVisibilityReport tpi_visibility(const CoincidenceHistogram& parallel,
                                   const CoincidenceHistogram& cross,
                                   const TpiAnalysisParams& params, Channel channel);

}  // namespace qdc
