#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "qdcascade/analysis.hpp"
#include "qdcascade/source_dynamics.hpp"

namespace qdc {

struct FitResult {
  std::string model;
  std::vector<std::string> parameter_names;
  Eigen::VectorXd values;
  Eigen::VectorXd std_errors;
  double residual_norm = 0.0;  // sqrt(sum of squared weighted residuals)
  bool converged = false;
  int iterations = 0;
  // Model selection bookkeeping (fit_coherence): set when the competing
  // model's residual norm is within 1% of the winner's.
  bool ambiguous = false;
  std::string alternative_model;
  double alternative_residual_norm = 0.0;

  double value(const std::string& name) const;
  double std_error(const std::string& name) const;
};

using ModelFunction = std::function<double(double x, const Eigen::VectorXd& p)>;

struct LevenbergMarquardtOptions {
  int max_iterations = 400;
  double initial_lambda = 1e-3;
  double ftol = 1e-14;
  double ptol = 1e-13;
};

// Dense Levenberg-Marquardt with a forward-difference Jacobian.
// Weights w are multiplied into the residuals (pass 1.0 for unweighted).
FitResult fit_least_squares(const ModelFunction& model, const std::vector<double>& x,
                            const std::vector<double>& y, const std::vector<double>& w,
                            const Eigen::VectorXd& initial,
                            const std::vector<std::string>& names,
                            const std::string& model_name,
                            const LevenbergMarquardtOptions& options = {});

// exp(-t/tau) (for t >= 0) convolved with a Gaussian of width sigma.
double exp_gauss_conv(double t, double tau, double sigma);

// Time-resolved decay fit against the three-level cascade model convolved
// with a Gaussian instrument response. The XX histogram determines t1_xx;
// the X histogram determines both t1_xx (rise) and t1_x (decay).
FitResult fit_lifetimes(const CoincidenceHistogram& h, Channel channel,
                        double irf_sigma_ps);

// Fits Gaussian and exponential first-order coherence decays and keeps
// the model with the smaller residual norm.
FitResult fit_coherence(const std::vector<std::pair<double, double>>& samples);

// Damped Rabi oscillation fit: scale*(sin^2(s*x/2) e^(-kappa*s*x) + c*s*x)
// with the axis scaling s mapping the sqrt-power axis onto pulse area.
FitResult fit_rabi(const std::vector<std::pair<double, double>>& series);

}  // namespace qdc
