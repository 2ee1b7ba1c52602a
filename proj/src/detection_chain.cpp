#include "qdcascade/detection_chain.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace qdc {

void DetectorParams::validate() const {
  if (!(efficiency >= 0.0 && efficiency <= 1.0))
    throw std::invalid_argument("detector efficiency must lie in [0, 1]");
  if (dark_rate_cps < 0.0) throw std::invalid_argument("dark_rate_cps must be >= 0");
  if (jitter_sigma_ps < 0.0) throw std::invalid_argument("jitter_sigma_ps must be >= 0");
}

void BeamsplitterParams::validate() const {
  if (!(transmittance >= 0.0 && transmittance <= 1.0))
    throw std::invalid_argument("transmittance must lie in [0, 1]");
  if (!(mode_overlap >= 0.0 && mode_overlap <= 1.0))
    throw std::invalid_argument("mode_overlap must lie in [0, 1]");
}

void sort_stream(TimeTagStream& stream) { std::sort(stream.begin(), stream.end()); }

bool is_sorted_stream(const TimeTagStream& stream) {
  return std::is_sorted(stream.begin(), stream.end(),
                        [](const TimeTag& a, const TimeTag& b) {
                          return a.timestamp_ps < b.timestamp_ps;
                        });
}

std::optional<TimeTag> detect(const PhotonEvent& event, const DetectorParams& detector,
                              Substream& rng) {
  if (!rng.chance(detector.efficiency)) return std::nullopt;
  double t = static_cast<double>(event.emission_time_ps);
  if (detector.jitter_sigma_ps > 0.0) t = rng.normal(t, detector.jitter_sigma_ps);
  return TimeTag{detector.id, std::llround(t)};
}

TimeTagStream dark_counts(const DetectorParams& detector, std::int64_t t_start_ps,
                          std::int64_t t_end_ps, Substream& rng) {
  if (t_end_ps <= t_start_ps)
    throw std::invalid_argument("dark_counts needs t_end > t_start");
  TimeTagStream tags;
  if (detector.dark_rate_cps <= 0.0) return tags;

  const double mean_gap_ps = 1e12 / detector.dark_rate_cps;
  double t = static_cast<double>(t_start_ps);
  for (;;) {
    t += rng.exponential(mean_gap_ps);
    if (t >= static_cast<double>(t_end_ps)) break;
    tags.push_back(TimeTag{detector.id, std::llround(t)});
  }
  return tags;
}

int route_single(std::int64_t /*tag_time_ps*/, const BeamsplitterParams& bs,
                 Substream& rng) {
  return rng.chance(bs.transmittance) ? 0 : 1;
}

namespace {

// Cumulative phase path on the 1 ps grid, length n+1, seeded per photon.
std::vector<double> photon_phase_path(const PhotonEvent& p, std::size_t n) {
  std::vector<double> phi(n + 1, 0.0);
  const double gamma_star = pure_dephasing_rate(p.t1_ps, p.t2_ps);
  if (gamma_star <= 0.0) return phi;
  Substream rng(p.coherence_seed, StreamId::kPhase, 0);
  const double sigma = std::sqrt(2.0 * gamma_star);  // dt = 1 ps
  for (std::size_t i = 1; i <= n; ++i) phi[i] = phi[i - 1] + rng.normal(0.0, sigma);
  return phi;
}

}  // namespace

double wavepacket_overlap_sq(const PhotonEvent& a, const PhotonEvent& b) {
  if (a.t1_ps <= 0.0 || b.t1_ps <= 0.0)
    throw std::invalid_argument("photon lifetimes must be > 0");

  const std::int64_t oa = a.wavepacket_origin_ps;
  const std::int64_t ob = b.wavepacket_origin_ps;
  const std::int64_t end_a = oa + static_cast<std::int64_t>(std::ceil(8.0 * a.t1_ps));
  const std::int64_t end_b = ob + static_cast<std::int64_t>(std::ceil(8.0 * b.t1_ps));

  const std::int64_t lo = std::max(oa, ob);
  const std::int64_t hi = std::min(end_a, end_b);
  if (hi <= lo) return 0.0;

  // Grid norms over each photon's own window make |O| = 1 exact for
  // identical wavepackets. Geometric series: sum r^k = (1 - r^n)/(1 - r).
  auto grid_norm = [](std::int64_t origin, std::int64_t end, double t1) {
    const double r = std::exp(-1.0 / t1);
    const double n = static_cast<double>(end - origin);
    return std::sqrt((1.0 - std::pow(r, n)) / (1.0 - r));
  };
  const double norm_a = grid_norm(oa, end_a, a.t1_ps);
  const double norm_b = grid_norm(ob, end_b, b.t1_ps);

  const std::size_t na = static_cast<std::size_t>(hi - oa);
  const std::size_t nb = static_cast<std::size_t>(hi - ob);
  const std::vector<double> phi_a = photon_phase_path(a, na);
  const std::vector<double> phi_b = photon_phase_path(b, nb);

  const double decay_a = std::exp(-0.5 / a.t1_ps);
  const double decay_b = std::exp(-0.5 / b.t1_ps);
  double env_a = std::pow(decay_a, static_cast<double>(lo - oa));
  double env_b = std::pow(decay_b, static_cast<double>(lo - ob));

  std::complex<double> overlap{0.0, 0.0};
  for (std::int64_t t = lo; t < hi; ++t) {
    const double dphi = phi_b[static_cast<std::size_t>(t - ob)] -
                        phi_a[static_cast<std::size_t>(t - oa)];
    overlap += env_a * env_b * std::complex<double>(std::cos(dphi), std::sin(dphi));
    env_a *= decay_a;
    env_b *= decay_b;
  }
  overlap /= norm_a * norm_b;
  return std::clamp(std::norm(overlap), 0.0, 1.0);
}

PortPair hom_coalesce(const PhotonEvent& a, const PhotonEvent& b,
                      const BeamsplitterParams& bs, bool parallel, Substream& rng) {
  bs.validate();
  if (!parallel) {
    // Distinguishable case: independent 50/50 routing.
    const int port_a = route_single(a.emission_time_ps, bs, rng);
    const int port_b = route_single(b.emission_time_ps, bs, rng);
    return PortPair{port_a, port_b};
  }

  if (std::abs(bs.transmittance - 0.5) > 1e-9)
    throw std::invalid_argument("two-photon interference assumes a balanced splitter");

  const double m =
      std::clamp(bs.mode_overlap * bs.mode_overlap * wavepacket_overlap_sq(a, b), 0.0, 1.0);
  const double p_coincide = 0.5 * (1.0 - m);
  if (rng.chance(p_coincide)) {
    const bool a_first = rng.chance(0.5);
    return a_first ? PortPair{0, 1} : PortPair{1, 0};
  }
  const int port = rng.chance(0.5) ? 0 : 1;
  return PortPair{port, port};
}

}  // namespace qdc
