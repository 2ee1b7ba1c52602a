#include <doctest.h>

#include <cmath>
#include <map>

#include "qdcascade/analysis.hpp"
#include "qdcascade/rng.hpp"

using namespace qdc;

namespace {

TimeTagStream poisson_stream(double rate_cps, std::int64_t duration_ps, int detector,
                             std::uint64_t seed) {
  DetectorParams det{1.0, rate_cps, 0.0, detector};
  Substream rng(seed, 0, 0);
  return dark_counts(det, 0, duration_ps, rng);
}

// Histogram with delta-like peaks of prescribed areas at multiples of
// `spacing`, plus an optional flat floor per bin.
CoincidenceHistogram synthetic_peaks(const std::map<int, double>& areas,
                                     std::int64_t spacing, std::int64_t bin_width,
                                     int half_span_peaks, double floor_per_bin = 0.0) {
  CoincidenceHistogram h;
  h.bin_width_ps = bin_width;
  const std::int64_t window = half_span_peaks * spacing + spacing / 2;
  const std::int64_t half_bins = (window + bin_width - 1) / bin_width;
  h.origin_ps = -half_bins * bin_width;
  h.counts.assign(static_cast<std::size_t>(2 * half_bins), 0);
  for (std::size_t j = 0; j < h.counts.size(); ++j)
    h.counts[j] = static_cast<std::uint64_t>(floor_per_bin);
  for (const auto& [index, area] : areas) {
    const std::int64_t center = index * spacing;
    const std::size_t bin = static_cast<std::size_t>((center - h.origin_ps) / bin_width);
    h.counts[bin] += static_cast<std::uint64_t>(area);
  }
  h.integration_time_s = 1.0;
  h.singles_rates_cps = {1000.0, 1000.0};
  return h;
}

}  // namespace

TEST_CASE("correlate basics") {
  SUBCASE("identical single-tag streams give one count at zero delay") {
    TimeTagStream a{{0, 777}};
    TimeTagStream b{{1, 777}};
    const auto h = correlate(a, b, 100, 1000);
    CHECK(h.total() == 1);
    const std::size_t zero_bin = static_cast<std::size_t>((0 - h.origin_ps) / 100);
    CHECK(h.counts[zero_bin] == 1);
  }

  SUBCASE("unsorted input is rejected") {
    TimeTagStream a{{0, 100}, {0, 50}};
    TimeTagStream b{{1, 60}};
    CHECK_THROWS_AS(correlate(a, b, 10, 100), std::invalid_argument);
  }

  SUBCASE("independent Poisson streams give a flat histogram") {
    const std::int64_t duration = 10LL * 1000 * 1000 * 1000 * 1000;  // 10 s
    const auto a = poisson_stream(1e4, duration, 0, 3);
    const auto b = poisson_stream(1e4, duration, 1, 4);
    const auto h = correlate(a, b, 100000, 2000000);
    const double rate_per_ps = 1e4 * 1e-12;
    const double expected_per_bin =
        static_cast<double>(a.size()) * rate_per_ps * 100000.0;
    for (const auto count : h.counts) {
      CHECK(std::abs(static_cast<double>(count) - expected_per_bin) <
            5.0 * std::sqrt(expected_per_bin));
    }
    const double total_expected = expected_per_bin * static_cast<double>(h.counts.size());
    CHECK(std::abs(static_cast<double>(h.total()) - total_expected) <
          4.0 * std::sqrt(total_expected));
  }

  SUBCASE("correlate(a, b) at +tau equals correlate(b, a) at -tau") {
    // Even a-timestamps and odd b-timestamps make every delta odd, so no
    // pair can land exactly on a bin edge of the even bin width.
    TimeTagStream a, b;
    Substream rng(7, 0, 0);
    std::int64_t t = 0;
    for (int i = 0; i < 4000; ++i) {
      t += 2 + static_cast<std::int64_t>(rng.uniform() * 997) * 2;
      a.push_back({0, t});
      if (rng.chance(0.7)) b.push_back({1, t + 1 + 2 * static_cast<std::int64_t>(
                                                        rng.uniform() * 499)});
    }
    sort_stream(b);
    const auto h_ab = correlate(a, b, 64, 4096);
    const auto h_ba = correlate(b, a, 64, 4096);
    REQUIRE(h_ab.counts.size() == h_ba.counts.size());
    const std::size_t n = h_ab.counts.size();
    for (std::size_t j = 0; j < n; ++j) CHECK(h_ab.counts[j] == h_ba.counts[n - 1 - j]);
  }
}

TEST_CASE("integrate_peaks") {
  SUBCASE("delta peaks are recovered exactly") {
    const std::map<int, double> areas{{-2, 11}, {-1, 7}, {0, 3}, {1, 9}, {2, 13}};
    const auto h = synthetic_peaks(areas, 10000, 100, 3);
    const auto peaks = integrate_peaks(h, 10000, 2000);
    for (const auto& [index, area] : areas)
      CHECK(peaks.areas.at(index) == doctest::Approx(area));
  }

  SUBCASE("flat histogram gives equal areas") {
    const auto h = synthetic_peaks({}, 10000, 100, 3, 5.0);
    const auto peaks = integrate_peaks(h, 10000, 2000);
    const double first = peaks.areas.begin()->second;
    for (const auto& [index, area] : peaks.areas) CHECK(area == doctest::Approx(first));
  }

  SUBCASE("overlapping windows are rejected") {
    const auto h = synthetic_peaks({}, 10000, 100, 3, 1.0);
    CHECK_THROWS_AS(integrate_peaks(h, 10000, 5000), std::invalid_argument);
  }
}

TEST_CASE("g2_zero") {
  SUBCASE("all-equal areas normalize to one") {
    PeakAreas peaks;
    peaks.areas = {{-2, 5.0}, {-1, 5.0}, {0, 5.0}, {1, 5.0}, {2, 5.0}};
    CHECK(g2_zero(peaks) == doctest::Approx(1.0));
  }
  SUBCASE("empty center peak gives zero") {
    PeakAreas peaks;
    peaks.areas = {{-1, 5.0}, {0, 0.0}, {1, 5.0}};
    CHECK(g2_zero(peaks) == doctest::Approx(0.0));
  }
  SUBCASE("degenerate side level throws") {
    PeakAreas peaks;
    peaks.areas = {{-1, 0.0}, {0, 1.0}, {1, 0.0}};
    CHECK_THROWS_AS(g2_zero(peaks), std::domain_error);
  }
  SUBCASE("Poisson streams normalize to one within 3 sigma") {
    const std::int64_t duration = 20LL * 1000 * 1000 * 1000 * 1000;
    const auto a = poisson_stream(5e4, duration, 0, 11);
    const auto b = poisson_stream(5e4, duration, 1, 12);
    const auto h = correlate(a, b, 1000, 35000);
    const auto peaks = integrate_peaks(h, 10000, 3000);
    const double g2 = g2_zero(peaks);
    const double center = peaks.center();
    const double sigma = g2 * std::sqrt(1.0 / center + 1.0 / (peaks.side_mean() *
                                                              peaks.side_count()));
    CHECK(std::abs(g2 - 1.0) < 3.0 * sigma);
  }
}

TEST_CASE("dark_coincidence_estimate follows the accidental formula") {
  CHECK(dark_coincidence_estimate(3000, 3000, 0.0, 1e-9, 1000) == doctest::Approx(0.0));
  // (n_s1 + n_s2) * n_dc * tau_c * T
  CHECK(dark_coincidence_estimate(3000, 3000, 250, 1e-10, 1000) ==
        doctest::Approx(0.15).epsilon(1e-12));
  CHECK(dark_coincidence_estimate(3000, 3000, 250, 1e-7, 1000) ==
        doctest::Approx(150.0).epsilon(1e-12));
}

TEST_CASE("subtract_background") {
  PeakAreas peaks;
  peaks.areas = {{-1, 100.0}, {0, 10.0}, {1, 100.0}};
  peaks.bins_per_peak = 10;

  SUBCASE("zero background is the identity") {
    const auto out = subtract_background(peaks, 0.0, peaks.bins_per_peak);
    CHECK(out.areas.at(0) == doctest::Approx(10.0));
    CHECK(!out.clamped);
  }
  SUBCASE("background equal to the center zeroes the corrected g2") {
    const auto out = subtract_background(peaks, 1.0, peaks.bins_per_peak);
    CHECK(out.areas.at(0) == doctest::Approx(0.0));
    CHECK(g2_zero(out) == doctest::Approx(0.0));
  }
  SUBCASE("over-subtraction clamps and flags") {
    const auto out = subtract_background(peaks, 2.0, peaks.bins_per_peak);
    CHECK(out.areas.at(0) == 0.0);
    CHECK(out.clamped);
  }
}

TEST_CASE("contrast arithmetic matches the tabulated values") {
  CHECK(contrast(2.40, 0.17) == doctest::Approx(0.8677).epsilon(1e-3));
  CHECK(contrast(2.18, 0.43) == doctest::Approx(0.6705).epsilon(1e-3));
  CHECK(contrast(0.31, 1.70) == doctest::Approx(-0.6915).epsilon(1e-3));
  CHECK(contrast(0.5, 0.5) == doctest::Approx(0.0));
  CHECK_THROWS_AS(contrast(0.0, 0.0), std::domain_error);
}

TEST_CASE("tomography_pipeline on synthetic histograms") {
  // Center peaks scaled to the measured zero-delay correlations; the
  // pipeline should return the same contrasts and fidelity.
  auto setting = [&](double g2_co, double g2_cross) {
    TomographySetting s;
    const double side = 100000.0;
    std::map<int, double> co_areas, cross_areas;
    for (int m = -4; m <= 4; ++m) {
      co_areas[m] = m == 0 ? g2_co * side : side;
      cross_areas[m] = m == 0 ? g2_cross * side : side;
    }
    s.co = synthetic_peaks(co_areas, 13158, 250, 5);
    s.cross = synthetic_peaks(cross_areas, 13158, 250, 5);
    return s;
  };

  std::map<PolarizationBasis, TomographySetting> settings;
  settings[PolarizationBasis::kLinear] = setting(2.40, 0.17);
  settings[PolarizationBasis::kDiagonal] = setting(2.18, 0.43);
  settings[PolarizationBasis::kCircular] = setting(0.31, 1.70);

  TomographyAnalysisParams params;
  params.dark_rate_cps = 0.0;
  params.spacing_ps = 13158;
  params.half_window_ps = 2000;

  const auto result = tomography_pipeline(settings, params);
  CHECK(result.contrasts.at(PolarizationBasis::kLinear).value ==
        doctest::Approx(0.8677).epsilon(1e-3));
  CHECK(result.contrasts.at(PolarizationBasis::kDiagonal).value ==
        doctest::Approx(0.6705).epsilon(1e-3));
  CHECK(result.contrasts.at(PolarizationBasis::kCircular).value ==
        doctest::Approx(-0.6915).epsilon(1e-3));
  CHECK(result.fidelity == doctest::Approx(0.81).epsilon(0.01));

  SUBCASE("fidelity is exactly the contrast composition") {
    const double f = fidelity_from_contrasts(
        result.contrasts.at(PolarizationBasis::kLinear).value,
        result.contrasts.at(PolarizationBasis::kDiagonal).value,
        result.contrasts.at(PolarizationBasis::kCircular).value);
    CHECK(result.fidelity == doctest::Approx(f).epsilon(1e-12));
  }

  SUBCASE("a missing setting is rejected") {
    settings.erase(PolarizationBasis::kCircular);
    CHECK_THROWS_AS(tomography_pipeline(settings, params), std::invalid_argument);
  }
}

TEST_CASE("rescale_overlapped_peaks") {
  const auto [a2, a4] = rescale_overlapped_peaks(3.0, 6.0);
  CHECK(a2 == doctest::Approx(2.0));
  CHECK(a4 == doctest::Approx(4.0));
  const auto [z2, z4] = rescale_overlapped_peaks(0.0, 0.0);
  CHECK(z2 == 0.0);
  CHECK(z4 == 0.0);
  // Inverse relation is exact.
  CHECK(a2 * 1.5 == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("tpi visibility estimators") {
  SUBCASE("distinguishable expectation gives zero") {
    CHECK(tpi_visibility_sidepeak(3.0, 2.0, 3.0) == doctest::Approx(0.0));
  }
  SUBCASE("vanishing center gives one") {
    CHECK(tpi_visibility_sidepeak(3.0, 0.0, 3.0) == doctest::Approx(1.0));
  }
  SUBCASE("degenerate reference throws") {
    CHECK_THROWS_AS(tpi_visibility_sidepeak(0.0, 1.0, 0.0), std::domain_error);
  }
  SUBCASE("cross-polarized method") {
    CHECK(tpi_visibility_crosspol(1.0, 1.0) == doctest::Approx(0.0));
    CHECK(tpi_visibility_crosspol(0.0, 1.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(tpi_visibility_crosspol(0.5, 0.0), std::domain_error);
  }
}

TEST_CASE("visibility correction chain reproduces the tabulated stages") {
  // Accidental fractions back-solved from the tabulated correction
  // chains; the full chain must land within +-0.01 of each stage.
  struct Row {
    double raw, apd, full, alpha, g2;
    VisibilityMethod method;
  };
  const Row rows[] = {
      {0.59, 0.77, 0.86, 0.2125984, 0.003, VisibilityMethod::kSidePeak},
      {0.46, 0.63, 0.71, 0.2256637, 0.004, VisibilityMethod::kSidePeak},
      {0.58, 0.75, 0.84, 0.2266667, 0.003, VisibilityMethod::kCrossPol},
      {0.44, 0.61, 0.69, 0.2786885, 0.004, VisibilityMethod::kCrossPol},
  };
  for (const Row& row : rows) {
    const auto report =
        correct_visibility(row.raw, row.alpha, 0.95, row.g2, row.method);
    CHECK(report.raw == doctest::Approx(row.raw));
    CHECK(std::abs(report.apd_corrected - row.apd) < 0.01);
    CHECK(std::abs(report.fully_corrected - row.full) < 0.01);
    CHECK(report.raw <= report.apd_corrected);
    CHECK(report.apd_corrected <= report.fully_corrected);
  }

  SUBCASE("stage two alone matches the tabulated divisor") {
    const auto xx = correct_visibility(0.77, 0.0, 0.95, 0.003, VisibilityMethod::kSidePeak);
    CHECK(xx.fully_corrected == doctest::Approx(0.86).epsilon(0.013));
    const auto x = correct_visibility(0.63, 0.0, 0.95, 0.004, VisibilityMethod::kSidePeak);
    CHECK(x.fully_corrected == doctest::Approx(0.705).epsilon(0.01));
  }

  SUBCASE("identity when there is nothing to correct") {
    const auto report = correct_visibility(0.5, 0.0, 1.0, 0.0, VisibilityMethod::kSidePeak);
    CHECK(report.apd_corrected == doctest::Approx(0.5));
    CHECK(report.fully_corrected == doctest::Approx(0.5));
  }
}

TEST_CASE("integrate_tpi_cluster resolves composite windows") {
  // Non-overlapped geometry: period a multiple of the sub delay.
  SUBCASE("separated clusters") {
    std::map<int, double> areas;
    // zero-delay cluster 1:2:2:2:1 at +-8, +-4, 0 ns (spacing 4000).
    areas[-2] = 100;
    areas[-1] = 200;
    areas[0] = 200;
    areas[1] = 200;
    areas[2] = 100;
    // delayed clusters 1:4:6:4:1 centered at +-24000.
    areas[4] = 100;
    areas[5] = 400;
    areas[6] = 600;
    areas[7] = 400;
    areas[8] = 100;
    areas[-4] = 100;
    areas[-5] = 400;
    areas[-6] = 600;
    areas[-7] = 400;
    areas[-8] = 100;
    const auto h = synthetic_peaks(areas, 4000, 100, 9);
    const auto cluster = integrate_tpi_cluster(h, 24000, 4000, 1400);
    CHECK(!cluster.overlapped);
    CHECK(cluster.a1_star == doctest::Approx(100));
    CHECK(cluster.a2_star == doctest::Approx(200));
    CHECK(cluster.a3 == doctest::Approx(200));
    CHECK(cluster.delayed_center_mean == doctest::Approx(600));
  }

  SUBCASE("overlapped composite peaks at the short period") {
    CoincidenceHistogram h;
    h.bin_width_ps = 100;
    // Window holds the zero-delay cluster and the first delayed clusters.
    const std::int64_t window = 13158 + 6000;
    const std::int64_t half_bins = window / 100;
    h.origin_ps = -half_bins * 100;
    h.counts.assign(static_cast<std::size_t>(2 * half_bins), 0);
    auto put = [&](std::int64_t center, double area) {
      const std::int64_t bin = (center - h.origin_ps) / 100;
      if (bin < 0 || bin >= static_cast<std::int64_t>(h.counts.size())) return;
      h.counts[static_cast<std::size_t>(bin)] += static_cast<std::uint64_t>(area);
    };
    // Zero cluster (1:2:2:2:1), unit 100.
    put(-8000, 100);
    put(-4000, 200);
    put(0, 200);
    put(4000, 200);
    put(8000, 100);
    // Delayed clusters (1:4:6:4:1) at +-13158; the 4th/5th peaks merge
    // into the zero cluster's windows.
    for (int sign : {-1, 1}) {
      put(sign * 13158 - sign * 8000, 100);
      put(sign * 13158 - sign * 4000, 400);
      put(sign * 13158, 600);
      put(sign * 13158 + sign * 4000, 400);
      put(sign * 13158 + sign * 8000, 100);
    }
    h.integration_time_s = 1.0;
    h.singles_rates_cps = {1000.0, 1000.0};

    const auto cluster = integrate_tpi_cluster(h, 13158, 4000, 1400);
    CHECK(cluster.overlapped);
    // A2* = A2 + B_L = 200 + 100 = 3/2 * A2.
    CHECK(cluster.a2_star == doctest::Approx(300));
    CHECK(cluster.a4_star == doctest::Approx(300));
    // A1* = A1 + fourth delayed peak = 100 + 400.
    CHECK(cluster.a1_star == doctest::Approx(500));
    CHECK(cluster.a5_star == doctest::Approx(500));
    CHECK(cluster.a3 == doctest::Approx(200));
    CHECK(cluster.delayed_center_mean == doctest::Approx(600));

    const auto [a2, a4] = rescale_overlapped_peaks(cluster.a2_star, cluster.a4_star);
    CHECK(a2 == doctest::Approx(200));
    CHECK(a4 == doctest::Approx(200));
    CHECK(tpi_visibility_sidepeak(cluster.a2_star, cluster.a3, cluster.a4_star) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
}
