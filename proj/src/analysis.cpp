#include "qdcascade/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qdc {

std::uint64_t CoincidenceHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

CoincidenceHistogram correlate(const TimeTagStream& a, const TimeTagStream& b,
                               std::int64_t bin_width_ps, std::int64_t window_ps) {
  if (bin_width_ps <= 0) throw std::invalid_argument("bin_width_ps must be > 0");
  if (window_ps <= 0) throw std::invalid_argument("window_ps must be > 0");
  if (!is_sorted_stream(a) || !is_sorted_stream(b))
    throw std::invalid_argument("correlate requires time-sorted streams");

  const std::int64_t half_bins = (window_ps + bin_width_ps - 1) / bin_width_ps;
  const std::int64_t nbins = 2 * half_bins;
  const std::int64_t origin = -half_bins * bin_width_ps;
  const std::int64_t lo_delta = origin;
  const std::int64_t hi_delta = origin + nbins * bin_width_ps;

  CoincidenceHistogram h;
  h.bin_width_ps = bin_width_ps;
  h.origin_ps = origin;
  h.counts.assign(static_cast<std::size_t>(nbins), 0);

  std::size_t lo = 0;
  for (const TimeTag& ta : a) {
    while (lo < b.size() && b[lo].timestamp_ps - ta.timestamp_ps < lo_delta) ++lo;
    for (std::size_t j = lo; j < b.size(); ++j) {
      const std::int64_t delta = b[j].timestamp_ps - ta.timestamp_ps;
      if (delta >= hi_delta) break;
      ++h.counts[static_cast<std::size_t>((delta - origin) / bin_width_ps)];
    }
  }

  if (!a.empty() && !b.empty()) {
    const std::int64_t t0 = std::min(a.front().timestamp_ps, b.front().timestamp_ps);
    const std::int64_t t1 = std::max(a.back().timestamp_ps, b.back().timestamp_ps);
    const double span_s = static_cast<double>(t1 - t0 + 1) * 1e-12;
    h.integration_time_s = span_s;
    h.singles_rates_cps = {static_cast<double>(a.size()) / span_s,
                           static_cast<double>(b.size()) / span_s};
  }
  return h;
}

double PeakAreas::side_mean() const {
  double sum = 0.0;
  int n = 0;
  for (const auto& [index, area] : areas) {
    if (index == 0) continue;
    sum += area;
    ++n;
  }
  if (n == 0) throw std::domain_error("no side peaks available");
  return sum / n;
}

int PeakAreas::side_count() const {
  int n = 0;
  for (const auto& [index, area] : areas)
    if (index != 0) ++n;
  return n;
}

namespace {

// Sum of counts in bins whose centers fall inside [center - hw, center + hw].
double window_area(const CoincidenceHistogram& h, std::int64_t center_ps,
                   std::int64_t half_window_ps) {
  double area = 0.0;
  for (std::size_t j = 0; j < h.counts.size(); ++j) {
    const std::int64_t c = h.bin_center_ps(j);
    if (c >= center_ps - half_window_ps && c <= center_ps + half_window_ps)
      area += static_cast<double>(h.counts[j]);
  }
  return area;
}

int bins_in_window(const CoincidenceHistogram& h, std::int64_t center_ps,
                   std::int64_t half_window_ps) {
  int n = 0;
  for (std::size_t j = 0; j < h.counts.size(); ++j) {
    const std::int64_t c = h.bin_center_ps(j);
    if (c >= center_ps - half_window_ps && c <= center_ps + half_window_ps) ++n;
  }
  return n;
}

}  // namespace

PeakAreas integrate_peaks(const CoincidenceHistogram& h, std::int64_t spacing_ps,
                          std::int64_t half_window_ps) {
  if (spacing_ps <= 2 * half_window_ps)
    throw std::invalid_argument("peak windows overlap: need spacing > 2*half_window");
  if (h.counts.empty()) throw std::invalid_argument("empty histogram");

  PeakAreas peaks;
  peaks.spacing_ps = spacing_ps;
  const std::int64_t lo = h.origin_ps;
  const std::int64_t hi =
      h.origin_ps + static_cast<std::int64_t>(h.counts.size()) * h.bin_width_ps;
  for (std::int64_t center = 0;; center += spacing_ps) {
    if (center - half_window_ps < lo || center + half_window_ps >= hi) break;
    peaks.areas[static_cast<int>(center / spacing_ps)] =
        window_area(h, center, half_window_ps);
  }
  for (std::int64_t center = -spacing_ps;; center -= spacing_ps) {
    if (center - half_window_ps < lo || center + half_window_ps >= hi) break;
    peaks.areas[static_cast<int>(center / spacing_ps)] =
        window_area(h, center, half_window_ps);
  }
  peaks.bins_per_peak = bins_in_window(h, 0, half_window_ps);
  return peaks;
}

double g2_zero(const PeakAreas& peaks) {
  if (peaks.areas.find(0) == peaks.areas.end())
    throw std::invalid_argument("no center peak");
  if (peaks.side_count() < 2)
    throw std::invalid_argument("need at least two side peaks for normalization");
  const double level = peaks.side_mean();
  if (level <= 0.0) throw std::domain_error("zero side-peak mean");
  return peaks.center() / level;
}

double dark_coincidence_estimate(double n_s1_cps, double n_s2_cps, double n_dc_cps,
                                 double tau_c_s, double integration_time_s) {
  if (n_s1_cps < 0.0 || n_s2_cps < 0.0 || n_dc_cps < 0.0 || tau_c_s < 0.0 ||
      integration_time_s < 0.0)
    throw std::invalid_argument("rates and times must be >= 0");
  return (n_s1_cps + n_s2_cps) * n_dc_cps * tau_c_s * integration_time_s;
}

PeakAreas subtract_background(const PeakAreas& peaks, double per_channel_counts,
                              int bins_per_peak) {
  if (per_channel_counts < 0.0)
    throw std::invalid_argument("per_channel_counts must be >= 0");
  PeakAreas out = peaks;
  const double subtraction = per_channel_counts * bins_per_peak;
  for (auto& [index, area] : out.areas) {
    area -= subtraction;
    if (area < 0.0) {
      area = 0.0;
      out.clamped = true;
    }
  }
  return out;
}

double contrast(double g2_co, double g2_cross) {
  const double sum = g2_co + g2_cross;
  if (sum <= 0.0) throw std::domain_error("contrast undefined for zero denominator");
  return (g2_co - g2_cross) / sum;
}

G2Report hbt_g2(const CoincidenceHistogram& h, double dark_rate_cps,
                std::int64_t spacing_ps, std::int64_t half_window_ps) {
  G2Report report;
  report.raw_areas = integrate_peaks(h, spacing_ps, half_window_ps);
  report.raw = g2_zero(report.raw_areas);

  const double center = report.raw_areas.center();
  const double side_mean = report.raw_areas.side_mean();
  const int n_sides = report.raw_areas.side_count();
  // Poisson errors: var(center) = center, var(side mean) = side_mean/n.
  const double rel_var = (center > 0.0 ? 1.0 / center : 0.0) +
                         1.0 / (side_mean * n_sides);
  report.raw_sigma = report.raw * std::sqrt(rel_var);

  report.accidental_per_bin = dark_coincidence_estimate(
      h.singles_rates_cps[0], h.singles_rates_cps[1], dark_rate_cps,
      static_cast<double>(h.bin_width_ps) * 1e-12, h.integration_time_s);
  report.corrected_areas = subtract_background(report.raw_areas, report.accidental_per_bin,
                                               report.raw_areas.bins_per_peak);
  report.corrected = g2_zero(report.corrected_areas);
  const double corr_side = report.corrected_areas.side_mean();
  report.corrected_sigma =
      std::sqrt(std::max(center, 1.0)) / corr_side;  // raw-count errors propagate
  return report;
}

// ---------------------------------------------------------------------------
// Tomography

namespace {

struct SettingG2 {
  double g2 = 0.0;
  double sigma = 0.0;
};

SettingG2 corrected_center_g2(const CoincidenceHistogram& h,
                              const TomographyAnalysisParams& params) {
  const PeakAreas raw = integrate_peaks(h, params.spacing_ps, params.half_window_ps);
  const double accidental = dark_coincidence_estimate(
      h.singles_rates_cps[0], h.singles_rates_cps[1], params.dark_rate_cps,
      static_cast<double>(h.bin_width_ps) * 1e-12, h.integration_time_s);
  const PeakAreas corrected = subtract_background(raw, accidental, raw.bins_per_peak);

  SettingG2 result;
  result.g2 = g2_zero(corrected);
  const double side = corrected.side_mean();
  const double var = std::max(raw.center(), 1.0) / (side * side) +
                     result.g2 * result.g2 / (side * raw.side_count());
  result.sigma = std::sqrt(var);
  return result;
}

}  // namespace

TomographyResult tomography_pipeline(
    const std::map<PolarizationBasis, TomographySetting>& settings,
    const TomographyAnalysisParams& params) {
  for (PolarizationBasis basis : {PolarizationBasis::kLinear, PolarizationBasis::kDiagonal,
                                  PolarizationBasis::kCircular})
    if (settings.find(basis) == settings.end())
      throw std::invalid_argument("tomography_pipeline needs all three basis settings");

  TomographyResult result;
  for (const auto& [basis, setting] : settings) {
    const SettingG2 co = corrected_center_g2(setting.co, params);
    const SettingG2 cross = corrected_center_g2(setting.cross, params);

    ContrastEstimate estimate;
    estimate.g2_co = co.g2;
    estimate.g2_cross = cross.g2;
    estimate.value = contrast(co.g2, cross.g2);
    const double sum = co.g2 + cross.g2;
    // d/dco = 2*cross/sum^2, d/dcross = -2*co/sum^2.
    estimate.sigma = 2.0 *
                     std::sqrt(cross.g2 * cross.g2 * co.sigma * co.sigma +
                               co.g2 * co.g2 * cross.sigma * cross.sigma) /
                     (sum * sum);
    result.contrasts[basis] = estimate;
  }

  const ContrastEstimate& lin = result.contrasts[PolarizationBasis::kLinear];
  const ContrastEstimate& diag = result.contrasts[PolarizationBasis::kDiagonal];
  const ContrastEstimate& circ = result.contrasts[PolarizationBasis::kCircular];
  result.fidelity = fidelity_from_contrasts(lin.value, diag.value, circ.value);
  result.fidelity_sigma = 0.25 * std::sqrt(lin.sigma * lin.sigma +
                                           diag.sigma * diag.sigma +
                                           circ.sigma * circ.sigma);
  return result;
}

// ---------------------------------------------------------------------------
// Two-photon interference

TpiClusterAreas integrate_tpi_cluster(const CoincidenceHistogram& h,
                                      std::int64_t period_ps, std::int64_t sub_delay_ps,
                                      std::int64_t half_window_ps) {
  if (period_ps <= 0 || sub_delay_ps <= 0 || half_window_ps <= 0)
    throw std::invalid_argument("period, sub delay and half window must be > 0");
  if (2 * half_window_ps >= sub_delay_ps)
    throw std::invalid_argument("sub-peak windows overlap");

  TpiClusterAreas areas;
  areas.window_width_ps = static_cast<double>(2 * half_window_ps);
  // Offset between an outer peak of the zero-delay cluster and the
  // nearest peak of the neighbouring cluster (1158 ps at 13158/4000).
  const std::int64_t merge_gap = period_ps - 3 * sub_delay_ps;
  areas.overlapped = merge_gap < 2 * half_window_ps;

  auto window = [&](std::int64_t lo, std::int64_t hi) {
    const std::int64_t center = (lo + hi) / 2;
    return window_area(h, center, (hi - lo) / 2);
  };

  areas.a3 = window_area(h, 0, half_window_ps);
  if (areas.overlapped) {
    // Composite windows span both merged peak centers:
    // A2* covers -sub and -(period - 2*sub), A1* covers -2*sub and -(period - sub).
    areas.a2_star = window(-(period_ps - 2 * sub_delay_ps) - half_window_ps,
                           -sub_delay_ps + half_window_ps);
    areas.a4_star = window(sub_delay_ps - half_window_ps,
                           (period_ps - 2 * sub_delay_ps) + half_window_ps);
    areas.a1_star = window(-(period_ps - sub_delay_ps) - half_window_ps,
                           -2 * sub_delay_ps + half_window_ps);
    areas.a5_star = window(2 * sub_delay_ps - half_window_ps,
                           (period_ps - sub_delay_ps) + half_window_ps);
  } else {
    areas.a2_star = window_area(h, -sub_delay_ps, half_window_ps);
    areas.a4_star = window_area(h, sub_delay_ps, half_window_ps);
    areas.a1_star = window_area(h, -2 * sub_delay_ps, half_window_ps);
    areas.a5_star = window_area(h, 2 * sub_delay_ps, half_window_ps);
  }

  double sum = 0.0;
  int n = 0;
  for (int m : {-3, -2, -1, 1, 2, 3}) {
    const std::int64_t center = m * period_ps;
    const std::int64_t hi =
        h.origin_ps + static_cast<std::int64_t>(h.counts.size()) * h.bin_width_ps;
    if (center - half_window_ps < h.origin_ps || center + half_window_ps >= hi) continue;
    sum += window_area(h, center, half_window_ps);
    ++n;
  }
  if (n == 0) throw std::invalid_argument("histogram window too narrow for TPI analysis");
  areas.delayed_center_mean = sum / n;
  return areas;
}

std::pair<double, double> rescale_overlapped_peaks(double a2_star, double a4_star) {
  if (a2_star < 0.0 || a4_star < 0.0)
    throw std::invalid_argument("peak areas must be >= 0");
  return {a2_star * 2.0 / 3.0, a4_star * 2.0 / 3.0};
}

double tpi_visibility_sidepeak(double a2_star, double a3, double a4_star) {
  const double reference = (a2_star + a4_star) / 3.0;
  if (reference <= 0.0) throw std::domain_error("degenerate side-peak reference");
  return 1.0 - a3 / reference;
}

double tpi_visibility_crosspol(double g2_parallel_center, double g2_cross_center) {
  if (g2_cross_center <= 0.0)
    throw std::domain_error("zero cross-polarized reference");
  return 1.0 - g2_parallel_center / g2_cross_center;
}

VisibilityReport correct_visibility(double v_raw, double accidental_fraction,
                                    double mode_overlap_1me, double g2_residual,
                                    VisibilityMethod method, Channel channel) {
  if (accidental_fraction < 0.0 || accidental_fraction >= 1.0)
    throw std::invalid_argument("accidental_fraction must lie in [0, 1)");
  if (mode_overlap_1me <= 0.0 || mode_overlap_1me > 1.0)
    throw std::invalid_argument("mode_overlap_1me must lie in (0, 1]");
  if (g2_residual < 0.0 || g2_residual >= 0.5)
    throw std::invalid_argument("g2_residual must lie in [0, 0.5)");

  VisibilityReport report;
  report.method = method;
  report.channel = channel;
  report.raw = v_raw;

  const double alpha = accidental_fraction;
  const double denominator =
      method == VisibilityMethod::kSidePeak ? 1.0 - 2.0 * alpha / 3.0 : 1.0 - alpha;
  if (denominator <= 0.0) throw std::domain_error("correction denominator <= 0");
  report.apd_corrected = 1.0 - (1.0 - v_raw - alpha) / denominator;

  const double bs_factor =
      mode_overlap_1me * mode_overlap_1me * (1.0 - 2.0 * g2_residual);
  if (bs_factor <= 0.0) throw std::domain_error("beamsplitter correction factor <= 0");
  report.fully_corrected = std::min(report.apd_corrected / bs_factor, 1.0);
  return report;
}

TpiVisibilityReport tpi_visibility(const CoincidenceHistogram& parallel,
                                   const CoincidenceHistogram& cross,
                                   const TpiAnalysisParams& params, Channel channel) {
  TpiVisibilityReport report;
  report.parallel_areas = integrate_tpi_cluster(parallel, params.period_ps,
                                                params.sub_delay_ps, params.half_window_ps);
  report.cross_areas = integrate_tpi_cluster(cross, params.period_ps, params.sub_delay_ps,
                                             params.half_window_ps);

  const double tau_window_s =
      static_cast<double>(2 * params.half_window_ps) * 1e-12;
  report.accidental_per_window = dark_coincidence_estimate(
      parallel.singles_rates_cps[0], parallel.singles_rates_cps[1], params.dark_rate_cps,
      tau_window_s, parallel.integration_time_s);
  const double acc = report.accidental_per_window;

  const TpiClusterAreas& par = report.parallel_areas;
  const TpiClusterAreas& crx = report.cross_areas;

  // Side-peak method on the parallel histogram alone.
  {
    VisibilityReport& v = report.side_peak;
    v.method = VisibilityMethod::kSidePeak;
    v.channel = channel;
    v.raw = tpi_visibility_sidepeak(par.a2_star, par.a3, par.a4_star);
    // APD stage: composite windows hold accidentals for two merged peaks.
    const double acc_composite = par.overlapped ? 2.0 * acc : acc;
    const double v_apd = tpi_visibility_sidepeak(par.a2_star - acc_composite,
                                                 std::max(par.a3 - acc, 0.0),
                                                 par.a4_star - acc_composite);
    v.apd_corrected = v_apd;
    const double bs_factor = params.mode_overlap * params.mode_overlap *
                             (1.0 - 2.0 * params.g2_residual);
    v.fully_corrected = std::min(v_apd / bs_factor, 1.0);
  }

  // Cross-polarization method: parallel vs cross center peaks, each
  // normalized by its own delayed-cluster centers.
  {
    VisibilityReport& v = report.cross_pol;
    v.method = VisibilityMethod::kCrossPol;
    v.channel = channel;
    const double g2_par = par.a3 / par.delayed_center_mean;
    const double g2_crx = crx.a3 / crx.delayed_center_mean;
    v.raw = tpi_visibility_crosspol(g2_par, g2_crx);
    const double g2_par_apd =
        std::max(par.a3 - acc, 0.0) / (par.delayed_center_mean - acc);
    const double acc_cross = dark_coincidence_estimate(
        cross.singles_rates_cps[0], cross.singles_rates_cps[1], params.dark_rate_cps,
        tau_window_s, cross.integration_time_s);
    const double g2_crx_apd =
        std::max(crx.a3 - acc_cross, 0.0) / (crx.delayed_center_mean - acc_cross);
    v.apd_corrected = tpi_visibility_crosspol(g2_par_apd, g2_crx_apd);
    const double bs_factor = params.mode_overlap * params.mode_overlap *
                             (1.0 - 2.0 * params.g2_residual);
    v.fully_corrected = std::min(v.apd_corrected / bs_factor, 1.0);
  }
  return report;
}

}  // namespace qdc
