#include "qdcascade/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qdc {

double FitResult::value(const std::string& name) const {
  for (std::size_t i = 0; i < parameter_names.size(); ++i)
    if (parameter_names[i] == name) return values(static_cast<Eigen::Index>(i));
  throw std::invalid_argument("unknown fit parameter: " + name);
}

double FitResult::std_error(const std::string& name) const {
  for (std::size_t i = 0; i < parameter_names.size(); ++i)
    if (parameter_names[i] == name) return std_errors(static_cast<Eigen::Index>(i));
  throw std::invalid_argument("unknown fit parameter: " + name);
}

namespace {

Eigen::VectorXd weighted_residuals(const ModelFunction& model,
                                   const std::vector<double>& x,
                                   const std::vector<double>& y,
                                   const std::vector<double>& w,
                                   const Eigen::VectorXd& p) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i)
    r(static_cast<Eigen::Index>(i)) = w[i] * (y[i] - model(x[i], p));
  return r;
}

}  // namespace

FitResult fit_least_squares(const ModelFunction& model, const std::vector<double>& x,
                            const std::vector<double>& y, const std::vector<double>& w,
                            const Eigen::VectorXd& initial,
                            const std::vector<std::string>& names,
                            const std::string& model_name,
                            const LevenbergMarquardtOptions& options) {
  if (x.size() != y.size() || x.size() != w.size())
    throw std::invalid_argument("fit inputs must have equal lengths");
  const Eigen::Index n_params = initial.size();
  if (static_cast<Eigen::Index>(x.size()) <= n_params)
    throw std::invalid_argument("not enough data points for the model");

  Eigen::VectorXd p = initial;
  Eigen::VectorXd residuals = weighted_residuals(model, x, y, w, p);
  double chi2 = residuals.squaredNorm();
  double lambda = options.initial_lambda;

  FitResult result;
  result.model = model_name;
  result.parameter_names = names;

  int iteration = 0;
  int accepted_steps = 0;
  for (; iteration < options.max_iterations; ++iteration) {
    // Forward-difference Jacobian of the weighted residuals.
    Eigen::MatrixXd jacobian(residuals.size(), n_params);
    for (Eigen::Index k = 0; k < n_params; ++k) {
      const double step = std::max(1e-7 * std::abs(p(k)), 1e-10);
      Eigen::VectorXd p_step = p;
      p_step(k) += step;
      jacobian.col(k) = (weighted_residuals(model, x, y, w, p_step) - residuals) / step;
    }

    const Eigen::MatrixXd jtj = jacobian.transpose() * jacobian;
    const Eigen::VectorXd gradient = jacobian.transpose() * residuals;

    bool improved = false;
    for (int attempt = 0; attempt < 32; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd delta = damped.ldlt().solve(-gradient);
      const Eigen::VectorXd p_trial = p + delta;
      const Eigen::VectorXd r_trial = weighted_residuals(model, x, y, w, p_trial);
      const double chi2_trial = r_trial.squaredNorm();
      if (std::isfinite(chi2_trial) && chi2_trial <= chi2) {
        const double drop = chi2 - chi2_trial;
        const double step_size = delta.cwiseAbs().maxCoeff();
        p = p_trial;
        residuals = r_trial;
        chi2 = chi2_trial;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        ++accepted_steps;
        if (drop <= options.ftol * std::max(chi2, 1e-300) || step_size <= options.ptol) {
          result.converged = true;
        }
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
    if (!improved) {
      // No damped step improves chi2; treat as a minimum if we moved at all.
      result.converged = accepted_steps > 0;
      break;
    }
    if (result.converged) break;
  }

  result.iterations = iteration + 1;
  result.values = p;
  result.residual_norm = std::sqrt(chi2);

  // Standard errors from the covariance (JtJ)^-1 scaled by chi2/dof.
  Eigen::MatrixXd jacobian(residuals.size(), n_params);
  for (Eigen::Index k = 0; k < n_params; ++k) {
    const double step = std::max(1e-7 * std::abs(p(k)), 1e-10);
    Eigen::VectorXd p_step = p;
    p_step(k) += step;
    jacobian.col(k) = (weighted_residuals(model, x, y, w, p_step) - residuals) / step;
  }
  const double dof = static_cast<double>(x.size()) - static_cast<double>(n_params);
  const double variance = chi2 / std::max(dof, 1.0);
  const Eigen::MatrixXd covariance =
      (jacobian.transpose() * jacobian)
          .ldlt()
          .solve(Eigen::MatrixXd::Identity(n_params, n_params)) *
      variance;
  result.std_errors = covariance.diagonal().cwiseMax(0.0).cwiseSqrt();

  if (!result.converged)
    throw std::runtime_error("fit did not converge: " + model_name);
  return result;
}

double exp_gauss_conv(double t, double tau, double sigma) {
  if (tau <= 0.0) throw std::invalid_argument("tau must be > 0");
  if (sigma <= 0.0) return t >= 0.0 ? std::exp(-t / tau) : 0.0;
  const double a = sigma / tau;
  const double exponent = 0.5 * a * a - t / tau;
  const double erfc_arg = (a - t / sigma) / std::numbers::sqrt2;
  if (erfc_arg > 26.0) return 0.0;  // erfc underflows; the product vanishes
  return 0.5 * std::exp(exponent) * std::erfc(erfc_arg);
}

FitResult fit_lifetimes(const CoincidenceHistogram& h, Channel channel,
                        double irf_sigma_ps) {
  if (h.counts.empty()) throw std::invalid_argument("empty histogram");

  std::vector<double> t, y, w;
  t.reserve(h.counts.size());
  for (std::size_t j = 0; j < h.counts.size(); ++j) {
    t.push_back(static_cast<double>(h.bin_center_ps(j)));
    y.push_back(static_cast<double>(h.counts[j]));
    w.push_back(1.0);
  }

  const double peak = *std::max_element(y.begin(), y.end());
  if (peak <= 0.0) throw std::invalid_argument("histogram has no counts");

  if (channel == Channel::kXX) {
    auto model = [irf_sigma_ps](double time, const Eigen::VectorXd& p) {
      const double tau = std::abs(p(1));
      return p(0) * exp_gauss_conv(time, tau, irf_sigma_ps) + p(2);
    };
    Eigen::VectorXd p0(3);
    p0 << peak, 200.0, 0.0;
    FitResult fit = fit_least_squares(model, t, y, w, p0,
                                      {"amplitude", "t1_xx_ps", "offset"}, "lifetime_xx");
    fit.values(1) = std::abs(fit.values(1));
    return fit;
  }

  // X channel: difference of the two convolved exponentials, amplitudes
  // tied through the cascade rate equations.
  auto model = [irf_sigma_ps](double time, const Eigen::VectorXd& p) {
    const double t_xx = std::abs(p(1));
    const double t_x = std::abs(p(2));
    return p(0) * (exp_gauss_conv(time, t_x, irf_sigma_ps) -
                   exp_gauss_conv(time, t_xx, irf_sigma_ps)) +
           p(3);
  };
  Eigen::VectorXd p0(4);
  p0 << 2.0 * peak, 180.0, 450.0, 0.0;
  FitResult fit =
      fit_least_squares(model, t, y, w, p0,
                        {"amplitude", "t1_xx_ps", "t1_x_ps", "offset"}, "lifetime_x");
  fit.values(1) = std::abs(fit.values(1));
  fit.values(2) = std::abs(fit.values(2));
  return fit;
}

FitResult fit_coherence(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 5)
    throw std::invalid_argument("fit_coherence needs at least 5 samples");

  std::vector<double> x, y, w;
  for (const auto& [tau, g1] : samples) {
    x.push_back(tau);
    y.push_back(g1);
    w.push_back(1.0);
  }

  double t2_guess = x.back() / 2.0;
  for (std::size_t i = 0; i + 1 < y.size(); ++i) {
    if (y[i] >= 0.5 && y[i + 1] < 0.5) {
      t2_guess = std::max(x[i + 1], 1.0);
      break;
    }
  }

  auto gaussian = [](double tau, const Eigen::VectorXd& p) {
    const double t2 = std::abs(p(1));
    const double r = tau / t2;
    return p(0) * std::exp(-0.5 * std::numbers::pi * r * r);
  };
  auto exponential = [](double tau, const Eigen::VectorXd& p) {
    return p(0) * std::exp(-tau / std::abs(p(1)));
  };

  Eigen::VectorXd p0(2);
  p0 << 1.0, t2_guess;
  FitResult gauss_fit =
      fit_least_squares(gaussian, x, y, w, p0, {"amplitude", "t2_ps"}, "g1_gaussian");
  FitResult exp_fit =
      fit_least_squares(exponential, x, y, w, p0, {"amplitude", "t2_ps"}, "g1_exponential");
  gauss_fit.values(1) = std::abs(gauss_fit.values(1));
  exp_fit.values(1) = std::abs(exp_fit.values(1));

  FitResult& winner = gauss_fit.residual_norm <= exp_fit.residual_norm ? gauss_fit : exp_fit;
  FitResult& loser = gauss_fit.residual_norm <= exp_fit.residual_norm ? exp_fit : gauss_fit;
  winner.alternative_model = loser.model;
  winner.alternative_residual_norm = loser.residual_norm;
  if (loser.residual_norm > 0.0 &&
      (loser.residual_norm - winner.residual_norm) < 0.01 * loser.residual_norm)
    winner.ambiguous = true;
  return winner;
}

FitResult fit_rabi(const std::vector<std::pair<double, double>>& series) {
  if (series.size() < 8) throw std::invalid_argument("fit_rabi needs at least 8 points");

  std::vector<double> x, y, w;
  for (const auto& [theta, intensity] : series) {
    x.push_back(theta);
    y.push_back(intensity);
    w.push_back(1.0);
  }

  // First local maximum locates the pi pulse area.
  std::size_t i_max = 1;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    if (y[i] >= y[i - 1] && y[i] >= y[i + 1]) {
      i_max = i;
      break;
    }
  }
  if (y[i_max] <= 0.0 || x[i_max] <= 0.0)
    throw std::invalid_argument("fit_rabi could not locate an oscillation maximum");

  auto model = [](double u, const Eigen::VectorXd& p) {
    const double theta = std::abs(p(1)) * u;
    const double s = std::sin(0.5 * theta);
    return p(0) * (s * s * std::exp(-std::abs(p(2)) * theta) + std::abs(p(3)) * theta);
  };
  Eigen::VectorXd p0(4);
  p0 << y[i_max], std::numbers::pi / x[i_max], 0.05, 0.01;
  FitResult fit = fit_least_squares(model, x, y, w, p0,
                                    {"scale", "axis_scale", "kappa", "c"}, "rabi");
  for (int k = 1; k < 4; ++k) fit.values(k) = std::abs(fit.values(k));
  return fit;
}

}  // namespace qdc
