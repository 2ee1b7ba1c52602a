#include "qdcascade/reproduce.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "qdcascade/config.hpp"
#include "qdcascade/constants.hpp"
#include "qdcascade/fitting.hpp"
#include "qdcascade/io.hpp"

namespace qdc {

namespace {

using ordered_json = nlohmann::ordered_json;

double round_to(double value, int digits) {
  const double scale = std::pow(10.0, digits);
  return std::round(value * scale) / scale;
}

ordered_json value_with_sigma(double value, double sigma, int digits = 6) {
  return ordered_json{{"value", round_to(value, digits)}, {"sigma", round_to(sigma, digits)}};
}

std::string histogram_path(const std::filesystem::path& dir, const std::string& name) {
  return (dir / (name + ".csv")).string();
}

}  // namespace

ordered_json reproduce_report(const ReproduceOptions& options) {
  const std::filesystem::path outdir(options.output_dir);
  std::filesystem::create_directories(outdir);

  RunConfig base = preset_config("desk");
  base.experiment.workers = options.workers;

  ordered_json report;
  report["format"] = "qdcascade-report/1";

  // ----- autocorrelation (g2) ------------------------------------------------
  ordered_json g2_block;
  double g2_residual[2] = {0.0, 0.0};  // X, XX corrected values feed the TPI stage
  for (Channel channel : {Channel::kX, Channel::kXX}) {
    ExperimentConfig cfg = base.experiment;
    cfg.seed = options.seed + (channel == Channel::kX ? 11 : 12);
    cfg.duration_s = 0.0263 * options.scale;
    const auto [stream0, stream1] = run_hbt(cfg, channel);
    CoincidenceHistogram h = correlate(
        stream0, stream1, base.analysis.hbt_bin_ps,
        static_cast<std::int64_t>(base.analysis.hbt_window_periods *
                                  cfg.source.rep_period_ps +
                                  cfg.source.rep_period_ps / 2));
    h.period_ps = cfg.source.rep_period_ps;
    h.integration_time_s = cfg.duration_s;
    h.singles_rates_cps = {stream0.size() / cfg.duration_s,
                           stream1.size() / cfg.duration_s};
    const G2Report g2 =
        hbt_g2(h, cfg.detector0.dark_rate_cps,
               std::llround(cfg.source.rep_period_ps), base.analysis.hbt_half_window_ps);
    const std::string name = channel_name(channel);
    g2_block[name] = {{"raw", value_with_sigma(g2.raw, g2.raw_sigma)},
                      {"corrected", value_with_sigma(g2.corrected, g2.corrected_sigma)},
                      {"accidental_per_bin", round_to(g2.accidental_per_bin, 6)}};
    g2_residual[channel == Channel::kX ? 0 : 1] = g2.corrected;
    write_histogram(h, histogram_path(outdir, std::string("hbt_") + name),
                    {{"channel", name}});
  }
  report["g2"] = g2_block;

  // ----- polarization tomography --------------------------------------------
  {
    std::map<PolarizationBasis, TomographySetting> settings;
    int setting_index = 0;
    for (PolarizationBasis basis : {PolarizationBasis::kLinear,
                                    PolarizationBasis::kDiagonal,
                                    PolarizationBasis::kCircular}) {
      TomographySetting setting;
      for (bool co : {true, false}) {
        ExperimentConfig cfg = base.experiment;
        cfg.seed = options.seed + 20 + setting_index++;
        cfg.duration_s = 0.01316 * options.scale;  // ~1e6 periods
        const auto [stream_xx, stream_x] = run_tomography(cfg, basis, co);
        CoincidenceHistogram h = correlate(
            stream_xx, stream_x, base.analysis.tomo_bin_ps,
            static_cast<std::int64_t>(base.analysis.tomo_window_periods *
                                      cfg.source.rep_period_ps +
                                      cfg.source.rep_period_ps / 2));
        h.period_ps = cfg.source.rep_period_ps;
        h.integration_time_s = cfg.duration_s;
        h.singles_rates_cps = {stream_xx.size() / cfg.duration_s,
                               stream_x.size() / cfg.duration_s};
        const char* basis_name = basis == PolarizationBasis::kLinear      ? "linear"
                                 : basis == PolarizationBasis::kDiagonal ? "diagonal"
                                                                         : "circular";
        write_histogram(h,
                        histogram_path(outdir, std::string("tomography_") + basis_name +
                                                   (co ? "_co" : "_cross")),
                        {{"basis", basis_name}, {"co_polarized", co ? "1" : "0"}});
        (co ? setting.co : setting.cross) = h;
      }
      settings[basis] = setting;
    }
    TomographyAnalysisParams params;
    params.dark_rate_cps = base.experiment.detector0.dark_rate_cps;
    params.spacing_ps = std::llround(base.experiment.source.rep_period_ps);
    params.half_window_ps = base.analysis.tomo_half_window_ps;
    const TomographyResult tomo = tomography_pipeline(settings, params);

    ordered_json block;
    for (auto [basis, key] :
         {std::pair{PolarizationBasis::kLinear, "linear"},
          std::pair{PolarizationBasis::kDiagonal, "diagonal"},
          std::pair{PolarizationBasis::kCircular, "circular"}}) {
      const ContrastEstimate& c = tomo.contrasts.at(basis);
      block["contrasts"][key] = value_with_sigma(c.value, c.sigma, 4);
      block["g2_center"][key] = {{"co", round_to(c.g2_co, 4)},
                                 {"cross", round_to(c.g2_cross, 4)}};
    }
    block["fidelity"] = value_with_sigma(tomo.fidelity, tomo.fidelity_sigma, 4);
    report["tomography"] = block;
  }

  // ----- two-photon interference ---------------------------------------------
  {
    ordered_json block;
    int run_index = 0;
    for (Channel channel : {Channel::kXX, Channel::kX}) {
      ExperimentConfig cfg = base.experiment;
      cfg.source.double_pulse_delay_ps = 4000.0;
      cfg.duration_s = 0.00658 * options.scale;  // ~5e5 periods
      cfg.seed = options.seed + 40 + run_index;
      const auto [par0, par1] = run_tpi(cfg, channel, true);
      cfg.seed = options.seed + 44 + run_index;
      const auto [crx0, crx1] = run_tpi(cfg, channel, false);
      ++run_index;

      auto histogram_of = [&](const TimeTagStream& a, const TimeTagStream& b) {
        CoincidenceHistogram h = correlate(
            a, b, base.analysis.tpi_bin_ps,
            static_cast<std::int64_t>(base.analysis.tpi_window_periods *
                                      cfg.source.rep_period_ps +
                                      cfg.source.rep_period_ps / 2));
        h.period_ps = cfg.source.rep_period_ps;
        h.integration_time_s = cfg.duration_s;
        h.singles_rates_cps = {a.size() / cfg.duration_s, b.size() / cfg.duration_s};
        return h;
      };
      const CoincidenceHistogram h_par = histogram_of(par0, par1);
      const CoincidenceHistogram h_crx = histogram_of(crx0, crx1);
      const std::string name = channel_name(channel);
      write_histogram(h_par, histogram_path(outdir, std::string("tpi_") + name + "_parallel"),
                      {{"channel", name}, {"polarization", "parallel"}});
      write_histogram(h_crx, histogram_path(outdir, std::string("tpi_") + name + "_cross"),
                      {{"channel", name}, {"polarization", "cross"}});

      TpiAnalysisParams params;
      params.dark_rate_cps = cfg.detector0.dark_rate_cps;
      params.period_ps = std::llround(cfg.source.rep_period_ps);
      params.sub_delay_ps = std::llround(cfg.source.double_pulse_delay_ps);
      params.half_window_ps = base.analysis.tpi_half_window_ps;
      params.mode_overlap = cfg.beamsplitter.mode_overlap;
      params.g2_residual = std::max(g2_residual[channel == Channel::kX ? 0 : 1], 0.0);
      const TpiVisibilityReport v = tpi_visibility(h_par, h_crx, params, channel);

      auto stage_json = [&](const VisibilityReport& r) {
        return ordered_json{{"raw", round_to(r.raw, 4)},
                            {"apd_corrected", round_to(r.apd_corrected, 4)},
                            {"fully_corrected", round_to(r.fully_corrected, 4)}};
      };
      block[name] = {{"side_peak", stage_json(v.side_peak)},
                     {"cross_pol", stage_json(v.cross_pol)},
                     {"g2_residual_used", round_to(params.g2_residual, 4)}};
    }
    report["tpi"] = block;
  }

  // ----- lifetimes -----------------------------------------------------------
  {
    ordered_json block;
    int idx = 0;
    for (Channel channel : {Channel::kXX, Channel::kX}) {
      ExperimentConfig cfg = base.experiment;
      cfg.seed = options.seed + 60 + idx++;
      cfg.duration_s = 0.0079 * options.scale;  // ~6e5 periods
      const CoincidenceHistogram h = run_lifetime(cfg, channel, base.analysis.lifetime_bin_ps,
                                                  base.analysis.lifetime_range_ps);
      const std::string name = channel_name(channel);
      write_histogram(h, histogram_path(outdir, std::string("lifetime_") + name),
                      {{"channel", name}});
      const FitResult fit = fit_lifetimes(h, channel, cfg.detector0.jitter_sigma_ps);
      if (channel == Channel::kXX) {
        block["t1_xx_ps"] =
            value_with_sigma(fit.value("t1_xx_ps"), fit.std_error("t1_xx_ps"), 2);
      } else {
        block["t1_x_ps"] =
            value_with_sigma(fit.value("t1_x_ps"), fit.std_error("t1_x_ps"), 2);
        block["t1_xx_ps_from_x_rise"] =
            value_with_sigma(fit.value("t1_xx_ps"), fit.std_error("t1_xx_ps"), 2);
      }
    }
    report["lifetimes"] = block;
  }

  // ----- coherence curves ----------------------------------------------------
  {
    ordered_json block = ordered_json::array();
    struct Case {
      const char* label;
      LineshapeModel::Kind kind;
      double t2;
    };
    const Case cases[] = {
        {"x_resonant", LineshapeModel::Kind::kGaussian, 357.0},
        {"x_nonresonant", LineshapeModel::Kind::kGaussian, 229.0},
        {"xx_resonant", LineshapeModel::Kind::kExponential, 192.0},
        {"xx_nonresonant", LineshapeModel::Kind::kGaussian, 114.0},
    };
    std::uint64_t noise_seed = options.seed + 70;
    for (const Case& c : cases) {
      std::vector<double> grid;
      for (double tau = 0.0; tau <= 3.0 * c.t2; tau += c.t2 / 40.0) grid.push_back(tau);
      auto curve = g1_curve(LineshapeModel{c.kind, c.t2}, grid);
      // 1% additive noise, as in a fringe-contrast measurement.
      Substream rng(noise_seed++, StreamId::kSource, 0);
      for (auto& [tau, value] : curve) value += rng.normal(0.0, 0.01);
      write_xy_csv(curve, histogram_path(outdir, std::string("coherence_") + c.label),
                   "tau_ps", "fringe_contrast", {{"case", c.label}});
      const FitResult fit = fit_coherence(curve);
      block.push_back({{"case", c.label},
                       {"model", fit.model},
                       {"t2_ps", value_with_sigma(fit.value("t2_ps"),
                                                  fit.std_error("t2_ps"), 2)},
                       {"ambiguous", fit.ambiguous}});
    }
    report["coherence"] = block;
  }

  // ----- excitation power series ---------------------------------------------
  {
    ExperimentConfig cfg = base.experiment;
    cfg.seed = options.seed + 80;
    std::vector<double> thetas;
    for (int i = 1; i <= 48; ++i) thetas.push_back(i * 4.0 * std::numbers::pi / 48.0);
    const std::uint64_t pulses_per_point =
        static_cast<std::uint64_t>(20000 * options.scale);
    const auto series = run_power_series(cfg, thetas, pulses_per_point);

    std::vector<std::pair<double, double>> xx_curve, x_curve;
    for (const auto& point : series) {
      xx_curve.emplace_back(point.theta, static_cast<double>(point.counts_xx));
      x_curve.emplace_back(point.theta, static_cast<double>(point.counts_x));
    }
    write_xy_csv(xx_curve, histogram_path(outdir, "power_series_xx"), "theta_rad", "counts");
    write_xy_csv(x_curve, histogram_path(outdir, "power_series_x"), "theta_rad", "counts");

    const FitResult fit = fit_rabi(xx_curve);
    const double scale = fit.value("scale");
    const double s = fit.value("axis_scale");
    const double kappa = fit.value("kappa");
    const double c = fit.value("c");
    auto model_at = [&](double theta) {
      const double sn = std::sin(0.5 * theta);
      return scale * (sn * sn * std::exp(-kappa * theta) + c * theta);
    };
    const double bound =
        preparation_fidelity_bound(model_at(std::numbers::pi), model_at(2.0 * std::numbers::pi));
    report["rabi"] = {{"kappa", value_with_sigma(kappa, fit.std_error("kappa"), 4)},
                      {"incoherent_c", value_with_sigma(c, fit.std_error("c"), 4)},
                      {"axis_scale", round_to(s, 4)},
                      {"preparation_bound", round_to(bound, 4)}};
  }

  // ----- pulse duration-bandwidth product ------------------------------------
  {
    const PulseParams pulse;
    report["pulse"] = {{"duration_fwhm_ps", pulse.duration_fwhm_ps},
                       {"linewidth_fwhm_uev", pulse.linewidth_fwhm_uev},
                       {"time_bandwidth_product", round_to(time_bandwidth_product(pulse), 4)},
                       {"gaussian_limit", round_to(kGaussianTbpLimit, 4)}};
  }

  // ----- provenance ----------------------------------------------------------
  // Worker count is deliberately absent: the report is identical for any
  // parallelization, so the hash normalizes it away too.
  RunConfig hashed = base;
  hashed.experiment.workers = 1;
  report["provenance"] = {{"seed", options.seed},
                          {"scale", options.scale},
                          {"config_hash", fnv1a_hash(hashed.canonical_json())},
                          {"code_version", "qdcascade/0.1.0"}};

  std::ofstream json_out(outdir / "report.json");
  json_out << report.dump(2) << "\n";

  std::ofstream text_out(outdir / "report.txt");
  text_out << "qdcascade reproduction summary (seed " << options.seed << ")\n\n";
  text_out << "g2(0)  X: raw " << report["g2"]["X"]["raw"]["value"]
           << " corrected " << report["g2"]["X"]["corrected"]["value"] << "\n";
  text_out << "g2(0) XX: raw " << report["g2"]["XX"]["raw"]["value"]
           << " corrected " << report["g2"]["XX"]["corrected"]["value"] << "\n\n";
  text_out << "contrasts: linear "
           << report["tomography"]["contrasts"]["linear"]["value"] << ", diagonal "
           << report["tomography"]["contrasts"]["diagonal"]["value"] << ", circular "
           << report["tomography"]["contrasts"]["circular"]["value"] << "\n";
  text_out << "fidelity to the Bell state: "
           << report["tomography"]["fidelity"]["value"] << " +- "
           << report["tomography"]["fidelity"]["sigma"] << "\n\n";
  for (const char* channel : {"XX", "X"}) {
    text_out << "TPI " << channel << " visibility (side-peak): raw "
             << report["tpi"][channel]["side_peak"]["raw"] << " -> APD "
             << report["tpi"][channel]["side_peak"]["apd_corrected"] << " -> BS "
             << report["tpi"][channel]["side_peak"]["fully_corrected"] << "\n";
    text_out << "TPI " << channel << " visibility (cross-pol): raw "
             << report["tpi"][channel]["cross_pol"]["raw"] << " -> APD "
             << report["tpi"][channel]["cross_pol"]["apd_corrected"] << " -> BS "
             << report["tpi"][channel]["cross_pol"]["fully_corrected"] << "\n";
  }
  text_out << "\nlifetimes: T1_XX "
           << report["lifetimes"]["t1_xx_ps"]["value"] << " ps, T1_X "
           << report["lifetimes"]["t1_x_ps"]["value"] << " ps\n";
  text_out << "preparation bound: " << report["rabi"]["preparation_bound"] << "\n";
  text_out << "duration-bandwidth product: "
           << report["pulse"]["time_bandwidth_product"] << " (Gaussian limit "
           << report["pulse"]["gaussian_limit"] << ")\n";

  return report;
}

}  // namespace qdc
