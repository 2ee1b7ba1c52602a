#include "qdcascade/quantum_state.hpp"

#include <cmath>
#include <stdexcept>

#include "qdcascade/constants.hpp"

namespace qdc {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
const Complex kI{0.0, 1.0};
}  // namespace

PolarizationVector PolarizationVector::h() { return {{Complex{1, 0}, Complex{0, 0}}}; }
PolarizationVector PolarizationVector::v() { return {{Complex{0, 0}, Complex{1, 0}}}; }
PolarizationVector PolarizationVector::d() {
  return {{Complex{kInvSqrt2, 0}, Complex{kInvSqrt2, 0}}};
}
PolarizationVector PolarizationVector::a() {
  return {{Complex{kInvSqrt2, 0}, Complex{-kInvSqrt2, 0}}};
}
PolarizationVector PolarizationVector::r() {
  return {{Complex{kInvSqrt2, 0}, -kI * kInvSqrt2}};
}
PolarizationVector PolarizationVector::l() {
  return {{Complex{kInvSqrt2, 0}, kI * kInvSqrt2}};
}

PolarizationVector PolarizationVector::orthogonal() const {
  PolarizationVector o;
  o.amplitudes(0) = -std::conj(amplitudes(1));
  o.amplitudes(1) = std::conj(amplitudes(0));
  return o;
}

bool PolarizationVector::is_normalized(double tol) const {
  return std::abs(amplitudes.squaredNorm() - 1.0) <= tol;
}

std::pair<PolarizationVector, PolarizationVector> basis_vectors(PolarizationBasis basis) {
  switch (basis) {
    case PolarizationBasis::kLinear:
      return {PolarizationVector::h(), PolarizationVector::v()};
    case PolarizationBasis::kDiagonal:
      return {PolarizationVector::d(), PolarizationVector::a()};
    case PolarizationBasis::kCircular:
      return {PolarizationVector::r(), PolarizationVector::l()};
  }
  throw std::invalid_argument("unknown polarization basis");
}

bool TwoQubitDensity::is_hermitian(double tol) const {
  return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool TwoQubitDensity::has_unit_trace(double tol) const {
  return std::abs(matrix.trace() - Complex{1, 0}) <= tol;
}

bool TwoQubitDensity::is_positive_semidefinite(double tol) const {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(matrix);
  return solver.eigenvalues().minCoeff() >= -tol;
}

double TwoQubitDensity::purity() const { return (matrix * matrix).trace().real(); }

void CascadeStateParams::validate() const {
  if (!(cross_coherence_k >= 0.0 && cross_coherence_k <= 1.0))
    throw std::invalid_argument("cross_coherence_k must lie in [0, 1]");
  if (!(background_b >= 0.0 && background_b <= 1.0))
    throw std::invalid_argument("background_b must lie in [0, 1]");
  if (!std::isfinite(fss_uev)) throw std::invalid_argument("fss_uev must be finite");
}

CascadeStateParams CascadeStateParams::calibrated_from_contrasts(double c_linear,
                                                                 double c_diagonal,
                                                                 double c_circular) {
  if (c_linear <= 0.0 || c_linear > 1.0)
    throw std::invalid_argument("c_linear must lie in (0, 1]");
  CascadeStateParams p;
  p.background_b = 1.0 - c_linear;
  p.cross_coherence_k = 0.5 * (c_diagonal - c_circular) / c_linear;
  p.validate();
  return p;
}

TwoQubitDensity bell_psi_plus() {
  TwoQubitDensity rho;
  rho.matrix.setZero();
  rho.matrix(0, 0) = 0.5;
  rho.matrix(3, 3) = 0.5;
  rho.matrix(0, 3) = 0.5;
  rho.matrix(3, 0) = 0.5;
  return rho;
}

TwoQubitDensity cascade_state(const CascadeStateParams& params, double tau_ps) {
  params.validate();
  if (tau_ps < 0.0) throw std::invalid_argument("tau_ps must be >= 0");

  const double phi = fss_phase(params.fss_uev, tau_ps);
  const Complex coherence =
      0.5 * params.cross_coherence_k * std::exp(kI * phi);

  TwoQubitDensity rho;
  rho.matrix.setZero();
  rho.matrix(0, 0) = 0.5;
  rho.matrix(3, 3) = 0.5;
  rho.matrix(0, 3) = coherence;
  rho.matrix(3, 0) = std::conj(coherence);

  const double b = params.background_b;
  rho.matrix *= (1.0 - b);
  rho.matrix += (b / 4.0) * Eigen::Matrix4cd::Identity();
  return rho;
}

double fss_phase(double fss_uev, double tau_ps) {
  if (tau_ps < 0.0) throw std::invalid_argument("tau_ps must be >= 0");
  return fss_uev * tau_ps / kHbarUevPs;
}

double project_pair(const TwoQubitDensity& rho, const PolarizationVector& pol_xx,
                    const PolarizationVector& pol_x) {
  Eigen::Vector4cd product;
  product << pol_xx.amplitudes(0) * pol_x.amplitudes(0),
      pol_xx.amplitudes(0) * pol_x.amplitudes(1),
      pol_xx.amplitudes(1) * pol_x.amplitudes(0),
      pol_xx.amplitudes(1) * pol_x.amplitudes(1);
  const double p = product.dot(rho.matrix * product).real();
  // Guard against sub-epsilon negatives from rounding.
  return std::clamp(p, 0.0, 1.0);
}

double expected_contrast(const TwoQubitDensity& rho, PolarizationBasis basis) {
  const auto [e0, e1] = basis_vectors(basis);
  const double p_co = project_pair(rho, e0, e0);
  const double p_cross = project_pair(rho, e0, e1);
  if (p_co + p_cross <= 0.0)
    throw std::domain_error("contrast undefined: both projection probabilities vanish");
  return (p_co - p_cross) / (p_co + p_cross);
}

double fidelity_from_contrasts(double c_linear, double c_diagonal, double c_circular) {
  return 0.25 * (1.0 + c_linear + c_diagonal - c_circular);
}

}  // namespace qdc
