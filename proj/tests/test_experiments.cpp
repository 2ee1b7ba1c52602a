#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qdcascade/config.hpp"
#include "qdcascade/experiments.hpp"

using namespace qdc;

namespace {

ExperimentConfig ideal_config(double duration_s) {
  ExperimentConfig cfg = preset_config("ideal").experiment;
  cfg.duration_s = duration_s;
  return cfg;
}

CoincidenceHistogram correlate_run(const std::pair<TimeTagStream, TimeTagStream>& streams,
                                   const ExperimentConfig& cfg, std::int64_t bin,
                                   int periods) {
  CoincidenceHistogram h = correlate(
      streams.first, streams.second, bin,
      static_cast<std::int64_t>(periods * cfg.source.rep_period_ps +
                                cfg.source.rep_period_ps / 2));
  h.period_ps = cfg.source.rep_period_ps;
  h.integration_time_s = cfg.duration_s;
  h.singles_rates_cps = {streams.first.size() / cfg.duration_s,
                         streams.second.size() / cfg.duration_s};
  return h;
}

}  // namespace

TEST_CASE("run_hbt") {
  SUBCASE("single photons leave the center peak empty") {
    ExperimentConfig cfg = ideal_config(0.0017);  // ~1.3e5 periods
    cfg.seed = 3;
    const auto streams = run_hbt(cfg, Channel::kX);
    const auto h = correlate_run(streams, cfg, 256, 4);
    const auto peaks = integrate_peaks(h, std::llround(cfg.source.rep_period_ps), 2000);
    CHECK(peaks.center() == doctest::Approx(0.0));
    CHECK(peaks.side_mean() > 100.0);
  }

  SUBCASE("zero-efficiency detectors leave only dark counts") {
    ExperimentConfig cfg = ideal_config(0.0005);
    cfg.detector0.efficiency = 0.0;
    cfg.detector1.efficiency = 0.0;
    cfg.detector0.dark_rate_cps = 1e6;
    cfg.detector1.dark_rate_cps = 1e6;
    const auto [a, b] = run_hbt(cfg, Channel::kXX);
    const double expected = 1e6 * cfg.duration_s;
    CHECK(std::abs(static_cast<double>(a.size()) - expected) < 4.0 * std::sqrt(expected));
    CHECK(std::abs(static_cast<double>(b.size()) - expected) < 4.0 * std::sqrt(expected));
  }

  SUBCASE("deterministic and worker-count invariant") {
    ExperimentConfig cfg = preset_config("desk").experiment;
    cfg.duration_s = 0.002;
    cfg.seed = 17;
    cfg.workers = 1;
    const auto first = run_hbt(cfg, Channel::kX);
    const auto second = run_hbt(cfg, Channel::kX);
    CHECK(first.first == second.first);
    CHECK(first.second == second.second);
    cfg.workers = 4;
    const auto parallel = run_hbt(cfg, Channel::kX);
    CHECK(first.first == parallel.first);
    CHECK(first.second == parallel.second);
  }
}

TEST_CASE("run_tomography") {
  SUBCASE("linear co-polarized histograms bunch at zero delay") {
    ExperimentConfig cfg = ideal_config(0.0026);
    cfg.seed = 5;
    const auto streams = run_tomography(cfg, PolarizationBasis::kLinear, true);
    const auto h = correlate_run(streams, cfg, 256, 4);
    const auto peaks = integrate_peaks(h, std::llround(cfg.source.rep_period_ps), 2000);
    CHECK(g2_zero(peaks) > 1.5);
  }

  SUBCASE("circular co-polarized histograms antibunch") {
    ExperimentConfig cfg = ideal_config(0.0026);
    cfg.seed = 7;
    const auto streams = run_tomography(cfg, PolarizationBasis::kCircular, true);
    const auto h = correlate_run(streams, cfg, 256, 4);
    const auto peaks = integrate_peaks(h, std::llround(cfg.source.rep_period_ps), 2000);
    CHECK(g2_zero(peaks) < 0.2);
  }

  SUBCASE("projection outcomes conserve probability across the four settings") {
    // Summing XX-arm singles over the (e0, e1) projections recovers the
    // unprojected emission rate.
    ExperimentConfig cfg = ideal_config(0.00132);  // ~1e5 periods
    cfg.source.state = CascadeStateParams::calibrated_from_contrasts(0.87, 0.67, -0.69);
    std::size_t projected_total = 0;
    int seed = 100;
    for (bool co : {true, false}) {
      cfg.seed = seed++;
      const auto streams = run_tomography(cfg, PolarizationBasis::kDiagonal, co);
      projected_total += streams.second.size();  // X arm: co picks e0, cross picks e1
    }
    const double periods = static_cast<double>(cfg.num_periods());
    CHECK(std::abs(static_cast<double>(projected_total) - periods) <
          4.0 * std::sqrt(periods));
  }
}

TEST_CASE("run_tpi") {
  SUBCASE("cross-polarized cluster ratios at modest statistics") {
    ExperimentConfig cfg = ideal_config(0.00263);  // ~2e5 periods
    cfg.seed = 7;
    cfg.source.double_pulse_delay_ps = 4000.0;
    const auto streams = run_tpi(cfg, Channel::kXX, false);
    const auto h = correlate_run(streams, cfg, 100, 3);
    const auto cluster = integrate_tpi_cluster(h, std::llround(cfg.source.rep_period_ps),
                                               4000, 1400);
    CHECK(cluster.overlapped);
    // 1:2:2:2:1 plus merged delayed peaks: A1* = 5, A2* = 3, A3 = 2 units.
    const double unit = cluster.a3 / 2.0;
    CHECK(cluster.a2_star / unit == doctest::Approx(3.0).epsilon(0.08));
    CHECK(cluster.a4_star / unit == doctest::Approx(3.0).epsilon(0.08));
    CHECK(cluster.a1_star / unit == doctest::Approx(5.0).epsilon(0.08));
    CHECK(cluster.a5_star / unit == doctest::Approx(5.0).epsilon(0.08));
    CHECK(cluster.delayed_center_mean / unit == doctest::Approx(6.0).epsilon(0.08));
  }

  SUBCASE("indistinguishable photons suppress the central peak completely") {
    ExperimentConfig cfg = ideal_config(0.00132);
    cfg.seed = 9;
    cfg.source.double_pulse_delay_ps = 4000.0;
    // Lifetime-limited coherence and XX-channel wavepackets anchored at
    // the pulse make the interfering photons identical.
    const auto streams = run_tpi(cfg, Channel::kXX, true);
    const auto h = correlate_run(streams, cfg, 100, 3);
    const auto cluster = integrate_tpi_cluster(h, std::llround(cfg.source.rep_period_ps),
                                               4000, 1400);
    CHECK(cluster.a3 == doctest::Approx(0.0));
    CHECK(cluster.a2_star > 100.0);
  }

  SUBCASE("deterministic and worker-count invariant") {
    ExperimentConfig cfg = preset_config("desk").experiment;
    cfg.duration_s = 0.0013;  // spans two work chunks
    cfg.seed = 23;
    cfg.source.double_pulse_delay_ps = 4000.0;
    cfg.workers = 1;
    const auto serial = run_tpi(cfg, Channel::kXX, true);
    cfg.workers = 3;
    const auto parallel = run_tpi(cfg, Channel::kXX, true);
    CHECK(serial.first == parallel.first);
    CHECK(serial.second == parallel.second);
  }

  SUBCASE("requires the double-pulse excitation") {
    ExperimentConfig cfg = ideal_config(0.001);
    cfg.source.double_pulse_delay_ps = 0.0;
    CHECK_THROWS_AS(run_tpi(cfg, Channel::kX, true), std::invalid_argument);
  }
}

TEST_CASE("run_lifetime") {
  SUBCASE("XX channel decays mono-exponentially with the right constant") {
    ExperimentConfig cfg = ideal_config(0.00263);
    cfg.seed = 11;
    cfg.detector0.jitter_sigma_ps = 0.0;
    const auto h = run_lifetime(cfg, Channel::kXX, 25, 4000);
    // Log-slope over the tail between 100 and 800 ps.
    double t_lo = 0, c_lo = 0, t_hi = 0, c_hi = 0;
    for (std::size_t j = 0; j < h.counts.size(); ++j) {
      const double t = static_cast<double>(h.bin_center_ps(j));
      if (std::abs(t - 112.5) < 13.0) {
        t_lo = t;
        c_lo = static_cast<double>(h.counts[j]);
      }
      if (std::abs(t - 812.5) < 13.0) {
        t_hi = t;
        c_hi = static_cast<double>(h.counts[j]);
      }
    }
    REQUIRE(c_lo > 0);
    REQUIRE(c_hi > 0);
    const double slope_t1 = (t_hi - t_lo) / std::log(c_lo / c_hi);
    CHECK(slope_t1 == doctest::Approx(220.0).epsilon(0.1));
  }

  SUBCASE("X channel rises before it decays") {
    ExperimentConfig cfg = ideal_config(0.00263);
    cfg.seed = 13;
    const auto h = run_lifetime(cfg, Channel::kX, 25, 4000);
    const auto peak_bin = static_cast<std::size_t>(
        std::max_element(h.counts.begin(), h.counts.end()) - h.counts.begin());
    CHECK(h.bin_center_ps(peak_bin) > 100);
    CHECK(h.bin_center_ps(peak_bin) < 1000);
  }

  SUBCASE("histogram integral equals the number of detected photons") {
    ExperimentConfig cfg = ideal_config(0.00132);
    cfg.seed = 15;
    cfg.detector0.efficiency = 0.8;
    const auto h = run_lifetime(cfg, Channel::kXX, 25, 8000);
    const double detected = h.singles_rates_cps[0] * cfg.duration_s;
    // All detected photons land in the histogram range (8000 ps >> T1).
    CHECK(static_cast<double>(h.total()) == doctest::Approx(detected).epsilon(1e-3));
  }
}

TEST_CASE("run_power_series") {
  ExperimentConfig cfg = ideal_config(0.001);
  cfg.seed = 19;
  cfg.source.rabi_damping_kappa = 0.0;
  cfg.source.rabi_incoherent_c = 0.0;
  std::vector<double> thetas;
  for (int i = 1; i <= 16; ++i) thetas.push_back(i * 2.0 * std::numbers::pi / 16.0);
  const auto series = run_power_series(cfg, thetas, 4000);
  REQUIRE(series.size() == thetas.size());

  SUBCASE("pi pulse maximizes the first oscillation") {
    std::size_t best = 0;
    for (std::size_t i = 0; i < series.size(); ++i)
      if (series[i].counts_xx > series[best].counts_xx) best = i;
    CHECK(series[best].theta == doctest::Approx(std::numbers::pi).epsilon(0.26));
  }

  SUBCASE("undamped oscillation returns to zero at 2 pi") {
    const auto at_2pi = *std::find_if(series.begin(), series.end(), [](const auto& p) {
      return std::abs(p.theta - 2.0 * std::numbers::pi) < 1e-9;
    });
    const auto at_pi = *std::find_if(series.begin(), series.end(), [](const auto& p) {
      return std::abs(p.theta - std::numbers::pi) < 1e-9;
    });
    CHECK(at_2pi.counts_xx < at_pi.counts_xx / 100 + 10);
  }

  SUBCASE("equal efficiencies give matching X and XX intensities") {
    double x_total = 0.0, xx_total = 0.0;
    for (const auto& p : series) {
      x_total += static_cast<double>(p.counts_x);
      xx_total += static_cast<double>(p.counts_xx);
    }
    CHECK(x_total / xx_total == doctest::Approx(1.0).epsilon(0.02));
  }
}

TEST_CASE("g1_curve and fringe_contrast") {
  const std::vector<double> grid{0.0, 100.0, 192.0, 500.0};
  const auto exp_curve = g1_curve({LineshapeModel::Kind::kExponential, 192.0}, grid);
  CHECK(exp_curve[0].second == doctest::Approx(1.0));
  CHECK(exp_curve[2].second == doctest::Approx(std::exp(-1.0)));

  const auto gauss_curve = g1_curve({LineshapeModel::Kind::kGaussian, 192.0}, grid);
  CHECK(gauss_curve[0].second == doctest::Approx(1.0));
  CHECK(gauss_curve[2].second == doctest::Approx(std::exp(-std::numbers::pi / 2.0)));
  CHECK(gauss_curve[2].second == doctest::Approx(0.2079).epsilon(1e-3));

  CHECK(fringe_contrast(1.0, 0.0) == doctest::Approx(1.0));
  CHECK(fringe_contrast(1.0, 1.0) == doctest::Approx(0.0));
  CHECK(fringe_contrast(0.75, 0.25) == doctest::Approx(0.5));
  CHECK_THROWS_AS(fringe_contrast(0.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(fringe_contrast(0.5, 0.7), std::invalid_argument);
}
