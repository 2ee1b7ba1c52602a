#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qdcascade/rng.hpp"
#include "qdcascade/source_dynamics.hpp"

namespace qdc {

struct DetectorParams {
  double efficiency = 1.0;      // in [0, 1]
  double dark_rate_cps = 0.0;   // counts per second
  double jitter_sigma_ps = 0.0;
  int id = 0;

  void validate() const;
};

struct TimeTag {
  std::int32_t detector_id = 0;
  std::int64_t timestamp_ps = 0;

  friend bool operator<(const TimeTag& a, const TimeTag& b) {
    return a.timestamp_ps != b.timestamp_ps ? a.timestamp_ps < b.timestamp_ps
                                            : a.detector_id < b.detector_id;
  }
  friend bool operator==(const TimeTag& a, const TimeTag& b) {
    return a.timestamp_ps == b.timestamp_ps && a.detector_id == b.detector_id;
  }
};

using TimeTagStream = std::vector<TimeTag>;

void sort_stream(TimeTagStream& stream);
bool is_sorted_stream(const TimeTagStream& stream);

struct BeamsplitterParams {
  double transmittance = 0.5;
  double mode_overlap = 1.0;  // the 1 - epsilon of the interference setup

  void validate() const;
};

// Bernoulli thinning by the efficiency plus Gaussian timing jitter.
std::optional<TimeTag> detect(const PhotonEvent& event, const DetectorParams& detector,
                              Substream& rng);

// Homogeneous Poisson process of rate dark_rate_cps over [t_start, t_end).
TimeTagStream dark_counts(const DetectorParams& detector, std::int64_t t_start_ps,
                          std::int64_t t_end_ps, Substream& rng);

// Output port of a lone photon: 0 with probability `transmittance`.
int route_single(std::int64_t tag_time_ps, const BeamsplitterParams& bs, Substream& rng);

// |O_ab|^2 for two exponential wavepackets
//   psi(t) = theta(t - t0) exp(-(t - t0)/(2 T1)) exp(i phi(t)),
// evaluated on a 1 ps grid over an 8*T1 window per photon, each photon's
// pure-dephasing phase path seeded by its coherence_seed. Deterministic.
double wavepacket_overlap_sq(const PhotonEvent& a, const PhotonEvent& b);

struct PortPair {
  int port_a = 0;
  int port_b = 0;
  bool coincided() const { return port_a != port_b; }
};

// Joint routing of two photons meeting at the final beamsplitter.
// Parallel polarizations interfere: the coincidence probability is
// (1 - M)/2 with M = mode_overlap^2 * |O_ab|^2 (balanced splitter).
// Cross-polarized photons are routed independently.
PortPair hom_coalesce(const PhotonEvent& a, const PhotonEvent& b,
                      const BeamsplitterParams& bs, bool parallel, Substream& rng);

}  // namespace qdc
