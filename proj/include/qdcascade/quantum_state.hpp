#pragma once

#include <Eigen/Dense>
#include <complex>

namespace qdc {

using Complex = std::complex<double>;

// Single-photon polarization state in the (H, V) basis.
//
// Circular convention used throughout: R = (H - iV)/sqrt(2),
// L = (H + iV)/sqrt(2). With this choice the cascade Bell state
// (|HH> + |VV>)/sqrt(2) is anti-correlated in the circular basis
// (negative circular contrast). The opposite handedness would merely
// swap the R and L labels.
struct PolarizationVector {
  Eigen::Vector2cd amplitudes;  // (H, V) components

  static PolarizationVector h();
  static PolarizationVector v();
  static PolarizationVector d();
  static PolarizationVector a();
  static PolarizationVector r();
  static PolarizationVector l();

  // Orthogonal partner, unique up to a global phase.
  PolarizationVector orthogonal() const;

  double norm() const { return amplitudes.norm(); }
  bool is_normalized(double tol = 1e-12) const;
};

enum class PolarizationBasis { kLinear, kDiagonal, kCircular };

// Basis vector and its orthogonal partner: (H,V), (D,A) or (R,L).
std::pair<PolarizationVector, PolarizationVector> basis_vectors(PolarizationBasis basis);

// Two-photon polarization density matrix, basis order {HH, HV, VH, VV}
// with the first index referring to the biexciton (XX) photon.
struct TwoQubitDensity {
  Eigen::Matrix4cd matrix;

  bool is_hermitian(double tol = 1e-12) const;
  bool has_unit_trace(double tol = 1e-12) const;
  bool is_positive_semidefinite(double tol = 1e-10) const;
  double purity() const;
};

// Phenomenological two-knob model of the cascade state: an isotropic
// background fraction b on top of a partially coherent Bell component
// whose HH/VV coherence has magnitude k/2 and phase S*tau/hbar.
struct CascadeStateParams {
  double cross_coherence_k = 1.0;  // in [0, 1]
  double fss_uev = 0.0;            // fine structure splitting S, µeV
  double background_b = 0.0;       // in [0, 1]

  void validate() const;  // throws std::invalid_argument when out of range

  // Solve k and b from measured basis contrasts. The model forces
  // C_diagonal = -C_circular, so those two inputs are averaged:
  // b = 1 - c_linear, k = (c_diagonal - c_circular) / (2 * c_linear).
  static CascadeStateParams calibrated_from_contrasts(double c_linear,
                                                      double c_diagonal,
                                                      double c_circular);
};

// Pure |psi+> = (|HH> + |VV>)/sqrt(2).
TwoQubitDensity bell_psi_plus();

// rho = b*(I/4) + (1-b)*rho_k with rho_k diagonal (1/2,0,0,1/2) and
// <HH|rho_k|VV> = (k/2) exp(i*S*tau/hbar).
TwoQubitDensity cascade_state(const CascadeStateParams& params, double tau_ps);

// Phase accumulated by the exciton coherence: S*tau/hbar (radians).
double fss_phase(double fss_uev, double tau_ps);

// <p_xx (x) p_x | rho | p_xx (x) p_x>, a probability in [0, 1].
double project_pair(const TwoQubitDensity& rho, const PolarizationVector& pol_xx,
                    const PolarizationVector& pol_x);

// (P_co - P_cross) / (P_co + P_cross) for parallel vs orthogonal
// projections in the given basis. Throws when both probabilities vanish.
double expected_contrast(const TwoQubitDensity& rho, PolarizationBasis basis);

// Bell-state fidelity lower bound (1 + C_lin + C_diag - C_circ) / 4.
double fidelity_from_contrasts(double c_linear, double c_diagonal, double c_circular);

}  // namespace qdc
