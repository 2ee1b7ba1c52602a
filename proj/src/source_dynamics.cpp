#include "qdcascade/source_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qdcascade/constants.hpp"

namespace qdc {

const char* channel_name(Channel c) { return c == Channel::kXX ? "XX" : "X"; }

void SourceParams::validate() const {
  if (!(t1_xx_ps > 0.0 && t1_x_ps > 0.0 && t2_xx_ps > 0.0 && t2_x_ps > 0.0))
    throw std::invalid_argument("lifetimes and coherence times must be > 0");
  if (t2_x_ps > 2.0 * t1_x_ps)
    throw std::invalid_argument("t2_x_ps must not exceed 2*t1_x_ps");
  if (t2_xx_ps > 2.0 * t1_xx_ps)
    throw std::invalid_argument("t2_xx_ps must not exceed 2*t1_xx_ps");
  if (rabi_damping_kappa < 0.0 || rabi_incoherent_c < 0.0)
    throw std::invalid_argument("rabi damping parameters must be >= 0");
  if (rep_period_ps <= 0.0) throw std::invalid_argument("rep_period_ps must be > 0");
  if (double_pulse_delay_ps < 0.0)
    throw std::invalid_argument("double_pulse_delay_ps must be >= 0");
  state.validate();
}

ProductBasis ProductBasis::from(PolarizationBasis basis) {
  const auto [e0, e1] = basis_vectors(basis);
  return ProductBasis{{e0, e1}, {e0, e1}};
}

double biexciton_population(double theta, double kappa, double c) {
  if (theta < 0.0) throw std::invalid_argument("pulse area must be >= 0");
  const double s = std::sin(0.5 * theta);
  const double value = s * s * std::exp(-kappa * theta) + c * theta;
  return std::clamp(value, 0.0, 1.0);
}

double preparation_fidelity_bound(double i_pi, double i_2pi) {
  if (i_pi <= 0.0) throw std::invalid_argument("i_pi must be > 0");
  if (i_2pi < 0.0) throw std::invalid_argument("i_2pi must be >= 0");
  return i_pi / (i_pi + i_2pi);
}

CascadePopulations cascade_populations(double t_ps, double t1_xx_ps, double t1_x_ps) {
  if (t_ps < 0.0) throw std::invalid_argument("t_ps must be >= 0");
  if (t1_xx_ps <= 0.0 || t1_x_ps <= 0.0)
    throw std::invalid_argument("lifetimes must be > 0");

  const double lam_xx = 1.0 / t1_xx_ps;
  const double lam_x = 1.0 / t1_x_ps;
  CascadePopulations pops;
  pops.n_xx = std::exp(-lam_xx * t_ps);
  if (std::abs(lam_xx - lam_x) < 1e-12 * lam_xx) {
    pops.n_x = lam_xx * t_ps * std::exp(-lam_xx * t_ps);
  } else {
    pops.n_x = lam_xx / (lam_xx - lam_x) *
               (std::exp(-lam_x * t_ps) - std::exp(-lam_xx * t_ps));
  }
  return pops;
}

std::optional<CascadePair> emit_cascade(const SourceParams& params,
                                        std::int64_t pulse_time_ps, bool prepared,
                                        Substream& rng) {
  if (!prepared) return std::nullopt;

  const double d1 = rng.exponential(params.t1_xx_ps);
  const double d2 = rng.exponential(params.t1_x_ps);
  const std::uint64_t pair_id = rng.next_u64();

  // Pair polarizations are sampled in the linear basis; experiments that
  // project in another basis resample from the state directly.
  const TwoQubitDensity rho = cascade_state(params.state, d2);
  const auto [pol_xx, pol_x] =
      sample_pair_polarization(rho, ProductBasis::from(PolarizationBasis::kLinear), rng);

  CascadePair pair;
  pair.d1_ps = d1;
  pair.d2_ps = d2;

  const std::int64_t t_xx = pulse_time_ps + std::llround(d1);
  // Keep the cascade ordering strict even when d2 rounds to zero.
  const std::int64_t t_x = t_xx + std::max<std::int64_t>(1, std::llround(d2));

  std::uint64_t seed_state = pair_id;
  pair.xx = PhotonEvent{Channel::kXX, t_xx,        pulse_time_ps, params.t1_xx_ps,
                        params.t2_xx_ps, pol_xx, pair_id,       splitmix64(seed_state)};
  pair.x = PhotonEvent{Channel::kX,  t_x,         t_xx,          params.t1_x_ps,
                       params.t2_x_ps,  pol_x,  pair_id,       splitmix64(seed_state)};
  return pair;
}

std::pair<PolarizationVector, PolarizationVector> sample_pair_polarization(
    const TwoQubitDensity& rho, const ProductBasis& basis, Substream& rng) {
  double weights[4];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      weights[2 * i + j] = project_pair(rho, basis.xx[i], basis.x[j]);

  const double total = weights[0] + weights[1] + weights[2] + weights[3];
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument(
        "sample_pair_polarization requires an orthonormal product basis");

  const int outcome = rng.categorical(weights, 4);
  return {basis.xx[outcome / 2], basis.x[outcome % 2]};
}

double pure_dephasing_rate(double t1_ps, double t2_ps) {
  if (t1_ps <= 0.0 || t2_ps <= 0.0)
    throw std::invalid_argument("t1_ps and t2_ps must be > 0");
  const double rate = 1.0 / t2_ps - 0.5 / t1_ps;
  if (rate < -1e-15) throw std::invalid_argument("unphysical t2 > 2*t1");
  return std::max(rate, 0.0);
}

std::vector<double> phase_trajectory(double t1_ps, double t2_ps, double duration_ps,
                                     double dt_ps, Substream& rng) {
  if (duration_ps < 0.0 || dt_ps <= 0.0)
    throw std::invalid_argument("duration must be >= 0 and dt > 0");
  const double gamma_star = pure_dephasing_rate(t1_ps, t2_ps);
  const std::size_t steps = static_cast<std::size_t>(std::ceil(duration_ps / dt_ps));

  std::vector<double> phi(steps + 1);
  phi[0] = 0.0;
  if (gamma_star == 0.0) return phi;

  const double sigma = std::sqrt(2.0 * gamma_star * dt_ps);
  for (std::size_t i = 1; i <= steps; ++i) phi[i] = phi[i - 1] + rng.normal(0.0, sigma);
  return phi;
}

double time_bandwidth_product(const PulseParams& pulse) {
  if (pulse.duration_fwhm_ps <= 0.0 || pulse.linewidth_fwhm_uev <= 0.0)
    throw std::invalid_argument("pulse parameters must be > 0");
  // dnu in 1/ns, duration in ns.
  const double dnu = pulse.linewidth_fwhm_uev / kPlanckUevNs;
  return (pulse.duration_fwhm_ps * 1e-3) * dnu;
}

}  // namespace qdc
