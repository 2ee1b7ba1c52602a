#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qdcascade/config.hpp"
#include "qdcascade/constants.hpp"
#include "qdcascade/experiments.hpp"
#include "qdcascade/fitting.hpp"

namespace py = pybind11;
using namespace qdc;

namespace {

PolarizationBasis basis_from_name(const std::string& name) {
  if (name == "linear") return PolarizationBasis::kLinear;
  if (name == "diagonal") return PolarizationBasis::kDiagonal;
  if (name == "circular") return PolarizationBasis::kCircular;
  throw std::invalid_argument("basis must be linear, diagonal or circular");
}

Channel channel_from_name(const std::string& name) {
  if (name == "X" || name == "x") return Channel::kX;
  if (name == "XX" || name == "xx") return Channel::kXX;
  throw std::invalid_argument("channel must be X or XX");
}

py::dict fit_to_dict(const FitResult& fit) {
  py::dict out;
  out["model"] = fit.model;
  for (std::size_t i = 0; i < fit.parameter_names.size(); ++i) {
    out[fit.parameter_names[i].c_str()] = fit.values(static_cast<Eigen::Index>(i));
    out[(fit.parameter_names[i] + "_sigma").c_str()] =
        fit.std_errors(static_cast<Eigen::Index>(i));
  }
  out["residual_norm"] = fit.residual_norm;
  out["ambiguous"] = fit.ambiguous;
  return out;
}

// Compact end-to-end helper for scripting: simulate one autocorrelation
// run and return the g2 report.
py::dict simulate_hbt_g2(const std::string& preset, const std::string& channel,
                         double duration_s, std::uint64_t seed, int workers) {
  RunConfig base = preset_config(preset);
  ExperimentConfig cfg = base.experiment;
  cfg.duration_s = duration_s;
  cfg.seed = seed;
  cfg.workers = workers;
  const auto streams = run_hbt(cfg, channel_from_name(channel));
  CoincidenceHistogram h = correlate(
      streams.first, streams.second, base.analysis.hbt_bin_ps,
      static_cast<std::int64_t>(8 * cfg.source.rep_period_ps + cfg.source.rep_period_ps / 2));
  h.integration_time_s = cfg.duration_s;
  h.singles_rates_cps = {streams.first.size() / cfg.duration_s,
                         streams.second.size() / cfg.duration_s};
  const G2Report report = hbt_g2(h, cfg.detector0.dark_rate_cps, 13158,
                                 base.analysis.hbt_half_window_ps);
  py::dict out;
  out["raw"] = report.raw;
  out["raw_sigma"] = report.raw_sigma;
  out["corrected"] = report.corrected;
  out["corrected_sigma"] = report.corrected_sigma;
  out["coincidences"] = h.total();
  return out;
}

py::dict run_tomography_summary(const std::string& preset, double duration_s,
                                std::uint64_t seed, int workers) {
  RunConfig base = preset_config(preset);
  std::map<PolarizationBasis, TomographySetting> settings;
  int offset = 0;
  for (PolarizationBasis basis : {PolarizationBasis::kLinear, PolarizationBasis::kDiagonal,
                                  PolarizationBasis::kCircular}) {
    TomographySetting setting;
    for (bool co : {true, false}) {
      ExperimentConfig cfg = base.experiment;
      cfg.duration_s = duration_s;
      cfg.seed = seed + offset++;
      cfg.workers = workers;
      auto streams = run_tomography(cfg, basis, co);
      CoincidenceHistogram h = correlate(
          streams.first, streams.second, base.analysis.tomo_bin_ps,
          static_cast<std::int64_t>(6 * cfg.source.rep_period_ps +
                                    cfg.source.rep_period_ps / 2));
      h.integration_time_s = cfg.duration_s;
      h.singles_rates_cps = {streams.first.size() / cfg.duration_s,
                             streams.second.size() / cfg.duration_s};
      (co ? setting.co : setting.cross) = h;
    }
    settings[basis] = setting;
  }
  TomographyAnalysisParams params;
  params.dark_rate_cps = base.experiment.detector0.dark_rate_cps;
  params.spacing_ps = std::llround(base.experiment.source.rep_period_ps);
  params.half_window_ps = base.analysis.tomo_half_window_ps;
  const TomographyResult result = tomography_pipeline(settings, params);

  py::dict out;
  out["c_linear"] = result.contrasts.at(PolarizationBasis::kLinear).value;
  out["c_diagonal"] = result.contrasts.at(PolarizationBasis::kDiagonal).value;
  out["c_circular"] = result.contrasts.at(PolarizationBasis::kCircular).value;
  out["fidelity"] = result.fidelity;
  out["fidelity_sigma"] = result.fidelity_sigma;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Quantum-dot cascade photon-pair simulator and analysis core";

  py::class_<PolarizationVector>(m, "PolarizationVector")
      .def_static("h", &PolarizationVector::h)
      .def_static("v", &PolarizationVector::v)
      .def_static("d", &PolarizationVector::d)
      .def_static("a", &PolarizationVector::a)
      .def_static("r", &PolarizationVector::r)
      .def_static("l", &PolarizationVector::l)
      .def("orthogonal", &PolarizationVector::orthogonal)
      .def_property_readonly(
          "amplitudes", [](const PolarizationVector& p) { return p.amplitudes; });

  py::class_<TwoQubitDensity>(m, "TwoQubitDensity")
      .def_property_readonly("matrix",
                             [](const TwoQubitDensity& rho) { return rho.matrix; })
      .def("purity", &TwoQubitDensity::purity)
      .def("is_hermitian", &TwoQubitDensity::is_hermitian, py::arg("tol") = 1e-12)
      .def("is_positive_semidefinite", &TwoQubitDensity::is_positive_semidefinite,
           py::arg("tol") = 1e-10);

  py::class_<CascadeStateParams>(m, "CascadeStateParams")
      .def(py::init([](double k, double fss_uev, double b) {
             CascadeStateParams p{k, fss_uev, b};
             p.validate();
             return p;
           }),
           py::arg("cross_coherence_k") = 1.0, py::arg("fss_uev") = 0.0,
           py::arg("background_b") = 0.0)
      .def_static("calibrated_from_contrasts",
                  &CascadeStateParams::calibrated_from_contrasts, py::arg("c_linear"),
                  py::arg("c_diagonal"), py::arg("c_circular"))
      .def_readonly("cross_coherence_k", &CascadeStateParams::cross_coherence_k)
      .def_readonly("fss_uev", &CascadeStateParams::fss_uev)
      .def_readonly("background_b", &CascadeStateParams::background_b);

  m.def("bell_psi_plus", &bell_psi_plus);
  m.def(
      "cascade_state",
      [](const CascadeStateParams& p, double tau_ps) { return cascade_state(p, tau_ps); },
      py::arg("params"), py::arg("tau_ps") = 0.0);
  m.def("fss_phase", &fss_phase, py::arg("fss_uev"), py::arg("tau_ps"));
  m.def("project_pair", &project_pair, py::arg("rho"), py::arg("pol_xx"), py::arg("pol_x"));
  m.def(
      "expected_contrast",
      [](const TwoQubitDensity& rho, const std::string& basis) {
        return expected_contrast(rho, basis_from_name(basis));
      },
      py::arg("rho"), py::arg("basis"));
  m.def("fidelity_from_contrasts", &fidelity_from_contrasts, py::arg("c_linear"),
        py::arg("c_diagonal"), py::arg("c_circular"));

  m.def("biexciton_population", &biexciton_population, py::arg("theta"), py::arg("kappa"),
        py::arg("c"));
  m.def("preparation_fidelity_bound", &preparation_fidelity_bound, py::arg("i_pi"),
        py::arg("i_2pi"));
  m.def(
      "cascade_populations",
      [](double t_ps, double t1_xx_ps, double t1_x_ps) {
        const auto pops = cascade_populations(t_ps, t1_xx_ps, t1_x_ps);
        return std::make_pair(pops.n_xx, pops.n_x);
      },
      py::arg("t_ps"), py::arg("t1_xx_ps") = 220.0, py::arg("t1_x_ps") = 400.0);
  m.def(
      "time_bandwidth_product",
      [](double duration_fwhm_ps, double linewidth_fwhm_uev) {
        return time_bandwidth_product({duration_fwhm_ps, linewidth_fwhm_uev});
      },
      py::arg("duration_fwhm_ps"), py::arg("linewidth_fwhm_uev"));
  m.def("pure_dephasing_rate", &pure_dephasing_rate, py::arg("t1_ps"), py::arg("t2_ps"));

  m.def(
      "g1_curve",
      [](const std::string& kind, double t2_ps, const std::vector<double>& taus) {
        LineshapeModel model;
        model.kind = kind == "gaussian" ? LineshapeModel::Kind::kGaussian
                                        : LineshapeModel::Kind::kExponential;
        model.t2_ps = t2_ps;
        return g1_curve(model, taus);
      },
      py::arg("kind"), py::arg("t2_ps"), py::arg("tau_grid_ps"));
  m.def("fringe_contrast", &fringe_contrast, py::arg("i_max"), py::arg("i_min"));

  m.def("contrast", &contrast, py::arg("g2_co"), py::arg("g2_cross"));
  m.def("dark_coincidence_estimate", &dark_coincidence_estimate, py::arg("n_s1_cps"),
        py::arg("n_s2_cps"), py::arg("n_dc_cps"), py::arg("tau_c_s"),
        py::arg("integration_time_s"));
  m.def("rescale_overlapped_peaks", &rescale_overlapped_peaks, py::arg("a2_star"),
        py::arg("a4_star"));
  m.def("tpi_visibility_sidepeak", &tpi_visibility_sidepeak, py::arg("a2_star"),
        py::arg("a3"), py::arg("a4_star"));
  m.def("tpi_visibility_crosspol", &tpi_visibility_crosspol, py::arg("g2_parallel_center"),
        py::arg("g2_cross_center"));
  m.def(
      "correct_visibility",
      [](double v_raw, double accidental_fraction, double mode_overlap, double g2_residual,
         const std::string& method) {
        const auto report = correct_visibility(
            v_raw, accidental_fraction, mode_overlap, g2_residual,
            method == "cross_pol" ? VisibilityMethod::kCrossPol
                                  : VisibilityMethod::kSidePeak);
        py::dict out;
        out["raw"] = report.raw;
        out["apd_corrected"] = report.apd_corrected;
        out["fully_corrected"] = report.fully_corrected;
        return out;
      },
      py::arg("v_raw"), py::arg("accidental_fraction"), py::arg("mode_overlap"),
      py::arg("g2_residual"), py::arg("method") = "side_peak");

  m.def(
      "fit_coherence",
      [](const std::vector<std::pair<double, double>>& samples) {
        return fit_to_dict(fit_coherence(samples));
      },
      py::arg("samples"));
  m.def(
      "fit_rabi",
      [](const std::vector<std::pair<double, double>>& series) {
        return fit_to_dict(fit_rabi(series));
      },
      py::arg("series"));

  m.def("simulate_hbt_g2", &simulate_hbt_g2, py::arg("preset") = "desk",
        py::arg("channel") = "X", py::arg("duration_s") = 0.0026, py::arg("seed") = 1,
        py::arg("workers") = 1);
  m.def("run_tomography_summary", &run_tomography_summary, py::arg("preset") = "desk",
        py::arg("duration_s") = 0.0026, py::arg("seed") = 1, py::arg("workers") = 1);

  m.def("preset_names", &preset_names);
  m.def("preset_text", &preset_text, py::arg("name"));

  m.attr("HBAR_UEV_PS") = kHbarUevPs;
  m.attr("PLANCK_UEV_NS") = kPlanckUevNs;
  m.attr("GAUSSIAN_TBP_LIMIT") = kGaussianTbpLimit;
  m.attr("__version__") = "0.1.0";
}
