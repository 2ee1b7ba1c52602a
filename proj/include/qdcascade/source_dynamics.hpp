#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "qdcascade/quantum_state.hpp"
#include "qdcascade/rng.hpp"

namespace qdc {

enum class Channel { kX, kXX };

const char* channel_name(Channel c);

// Quantum-dot model parameters. Times in picoseconds.
struct SourceParams {
  double t1_xx_ps = 220.0;  // biexciton lifetime
  double t1_x_ps = 400.0;   // exciton lifetime
  double t2_xx_ps = 192.0;  // biexciton coherence time
  double t2_x_ps = 357.0;   // exciton coherence time
  double rabi_damping_kappa = 0.08;   // per radian of pulse area
  double rabi_incoherent_c = 0.04;    // per radian of pulse area
  CascadeStateParams state{};
  double rep_period_ps = 13158.0;     // 76 MHz repetition rate
  double double_pulse_delay_ps = 0.0;  // 0 = single excitation per period

  double t1_ps(Channel c) const { return c == Channel::kXX ? t1_xx_ps : t1_x_ps; }
  double t2_ps(Channel c) const { return c == Channel::kXX ? t2_xx_ps : t2_x_ps; }

  void validate() const;  // throws std::invalid_argument
};

// One emitted photon. `emission_time_ps` is the moment the photon would
// click on an ideal detector; `wavepacket_origin_ps` is where its
// exponential envelope starts (pulse time for the XX photon, the XX
// recombination time for the X photon, which inherits the biexciton
// timing jitter).
struct PhotonEvent {
  Channel channel = Channel::kXX;
  std::int64_t emission_time_ps = 0;
  std::int64_t wavepacket_origin_ps = 0;
  double t1_ps = 0.0;
  double t2_ps = 0.0;
  PolarizationVector polarization;
  std::uint64_t pair_id = 0;
  std::uint64_t coherence_seed = 0;
};

struct CascadePair {
  PhotonEvent xx;
  PhotonEvent x;
  double d1_ps = 0.0;  // biexciton decay delay
  double d2_ps = 0.0;  // exciton decay delay
};

struct PulseParams {
  double duration_fwhm_ps = 21.4;
  double linewidth_fwhm_uev = 95.0;
};

// Orthonormal product measurement basis: two projector pairs, one per photon.
struct ProductBasis {
  std::array<PolarizationVector, 2> xx;
  std::array<PolarizationVector, 2> x;

  static ProductBasis from(PolarizationBasis basis);
};

// Biexciton occupation after a pulse of area theta:
// clamp(sin^2(theta/2) exp(-kappa*theta) + c*theta, 0, 1).
double biexciton_population(double theta, double kappa, double c);

// Lower bound I(pi) / (I(pi) + I(2pi)) on the preparation fidelity.
double preparation_fidelity_bound(double i_pi, double i_2pi);

struct CascadePopulations {
  double n_xx = 0.0;
  double n_x = 0.0;
};

// Three-level cascade populations with n_XX(0) = 1, n_X(0) = 0:
//   dn_XX/dt = -n_XX/T1_XX
//   dn_X/dt  = +n_XX/T1_XX - n_X/T1_X
CascadePopulations cascade_populations(double t_ps, double t1_xx_ps, double t1_x_ps);

// Samples one excitation cycle. Returns nothing when the biexciton was
// not prepared. Within a pair the X click is strictly after the XX click.
std::optional<CascadePair> emit_cascade(const SourceParams& params,
                                        std::int64_t pulse_time_ps, bool prepared,
                                        Substream& rng);

// Joint projective sample of the pair polarization in a product basis;
// outcome frequencies follow project_pair.
std::pair<PolarizationVector, PolarizationVector> sample_pair_polarization(
    const TwoQubitDensity& rho, const ProductBasis& basis, Substream& rng);

// Pure dephasing rate gamma* = 1/T2 - 1/(2 T1), per ps.
// Throws when T2 > 2*T1.
double pure_dephasing_rate(double t1_ps, double t2_ps);

// Wiener phase path phi(0), phi(dt), ... with increment variance
// 2*gamma_star*dt, so that <exp(i[phi(t+tau)-phi(t)])> = exp(-gamma_star*tau).
std::vector<double> phase_trajectory(double t1_ps, double t2_ps, double duration_ps,
                                     double dt_ps, Substream& rng);

// duration * bandwidth with the linewidth converted via dnu = dE/h.
double time_bandwidth_product(const PulseParams& pulse);

}  // namespace qdc
