#include "qdcascade/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace qdc {

namespace {

// Fixed chunk size so that dark-count substreams (keyed by chunk index)
// are independent of the worker count.
constexpr std::uint64_t kPeriodsPerChunk = 1 << 16;

// Candidates closer than this at the output splitter are treated as
// interfering; beyond it the wavepacket overlap is negligible.
constexpr std::int64_t kHomPairingWindowPs = 2000;

struct ChunkStreams {
  TimeTagStream det0;
  TimeTagStream det1;
};

// Runs `fn(chunk_index, first_period, last_period)` over all chunks with
// the requested number of workers and concatenates results in chunk
// order, so the output is identical for any worker count.
template <typename Fn>
std::pair<TimeTagStream, TimeTagStream> run_chunked(const ExperimentConfig& cfg, Fn fn) {
  const std::uint64_t periods = cfg.num_periods();
  const std::uint64_t n_chunks = (periods + kPeriodsPerChunk - 1) / kPeriodsPerChunk;
  std::vector<ChunkStreams> chunks(n_chunks);

  const int workers = std::max(1, cfg.workers);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::uint64_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      const std::uint64_t first = c * kPeriodsPerChunk;
      const std::uint64_t last = std::min(first + kPeriodsPerChunk, periods);
      chunks[c] = fn(c, first, last);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::pair<TimeTagStream, TimeTagStream> out;
  for (auto& c : chunks) {
    out.first.insert(out.first.end(), c.det0.begin(), c.det0.end());
    out.second.insert(out.second.end(), c.det1.begin(), c.det1.end());
  }
  sort_stream(out.first);
  sort_stream(out.second);
  return out;
}

void append_dark_counts(ChunkStreams& streams, const ExperimentConfig& cfg,
                        std::uint64_t chunk, std::uint64_t first, std::uint64_t last) {
  const std::int64_t period = std::llround(cfg.source.rep_period_ps);
  const std::int64_t t0 = static_cast<std::int64_t>(first) * period;
  const std::int64_t t1 = static_cast<std::int64_t>(last) * period;
  if (cfg.detector0.dark_rate_cps > 0.0) {
    Substream rng(cfg.seed, StreamId::kDark0, chunk);
    auto tags = dark_counts(cfg.detector0, t0, t1, rng);
    streams.det0.insert(streams.det0.end(), tags.begin(), tags.end());
  }
  if (cfg.detector1.dark_rate_cps > 0.0) {
    Substream rng(cfg.seed, StreamId::kDark1, chunk);
    auto tags = dark_counts(cfg.detector1, t0, t1, rng);
    streams.det1.insert(streams.det1.end(), tags.begin(), tags.end());
  }
}

const PhotonEvent& channel_photon(const CascadePair& pair, Channel channel) {
  return channel == Channel::kXX ? pair.xx : pair.x;
}

}  // namespace

void LineshapeModel::validate() const {
  if (t2_ps <= 0.0) throw std::invalid_argument("t2_ps must be > 0");
}

std::uint64_t ExperimentConfig::num_periods() const {
  return static_cast<std::uint64_t>(duration_s * 1e12 / source.rep_period_ps);
}

void ExperimentConfig::validate() const {
  source.validate();
  detector0.validate();
  detector1.validate();
  beamsplitter.validate();
  if (duration_s <= 0.0) throw std::invalid_argument("duration_s must be > 0");
  if (pulse_area < 0.0) throw std::invalid_argument("pulse_area must be >= 0");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (mzi_delay_ps <= 0.0) throw std::invalid_argument("mzi_delay_ps must be > 0");
}

std::pair<TimeTagStream, TimeTagStream> run_hbt(const ExperimentConfig& cfg,
                                                Channel channel) {
  cfg.validate();
  const std::int64_t period = std::llround(cfg.source.rep_period_ps);
  const double prepare_probability = biexciton_population(
      cfg.pulse_area, cfg.source.rabi_damping_kappa, cfg.source.rabi_incoherent_c);

  return run_chunked(cfg, [&](std::uint64_t chunk, std::uint64_t first,
                              std::uint64_t last) {
    ChunkStreams streams;
    for (std::uint64_t i = first; i < last; ++i) {
      Substream rng(cfg.seed, StreamId::kSource, i);
      const bool prepared = rng.chance(prepare_probability);
      const auto pair =
          emit_cascade(cfg.source, static_cast<std::int64_t>(i) * period, prepared, rng);
      if (!pair) continue;
      const PhotonEvent& photon = channel_photon(*pair, channel);
      const int port = route_single(photon.emission_time_ps, cfg.beamsplitter, rng);
      const DetectorParams& det = port == 0 ? cfg.detector0 : cfg.detector1;
      if (auto tag = detect(photon, det, rng))
        (port == 0 ? streams.det0 : streams.det1).push_back(*tag);
    }
    append_dark_counts(streams, cfg, chunk, first, last);
    return streams;
  });
}

std::pair<TimeTagStream, TimeTagStream> run_tomography(const ExperimentConfig& cfg,
                                                       PolarizationBasis basis,
                                                       bool co_polarized) {
  cfg.validate();
  const std::int64_t period = std::llround(cfg.source.rep_period_ps);
  const double prepare_probability = biexciton_population(
      cfg.pulse_area, cfg.source.rabi_damping_kappa, cfg.source.rabi_incoherent_c);

  const auto [e0, e1] = basis_vectors(basis);
  const PolarizationVector pol_xx = e0;
  const PolarizationVector pol_x = co_polarized ? e0 : e1;
  const PolarizationVector pol_x_orth = pol_x.orthogonal();

  const PolarizationVector pol_xx_orth = pol_xx.orthogonal();
  return run_chunked(cfg, [&](std::uint64_t chunk, std::uint64_t first,
                              std::uint64_t last) {
    ChunkStreams streams;
    for (std::uint64_t i = first; i < last; ++i) {
      Substream rng(cfg.seed, StreamId::kSource, i);
      const bool prepared = rng.chance(prepare_probability);
      const auto pair =
          emit_cascade(cfg.source, static_cast<std::int64_t>(i) * period, prepared, rng);
      if (!pair) continue;

      // Conditional Bernoulli projection, equivalent to sampling the
      // joint outcome from project_pair.
      const TwoQubitDensity rho = cascade_state(cfg.source.state, pair->d2_ps);
      const double p_joint = project_pair(rho, pol_xx, pol_x);
      const double p_joint_orth = project_pair(rho, pol_xx, pol_x_orth);
      const double p_xx = p_joint + p_joint_orth;  // marginal for the XX arm
      if (rng.chance(p_xx)) {
        if (auto tag = detect(pair->xx, cfg.detector0, rng)) streams.det0.push_back(*tag);
        if (rng.chance(p_joint / p_xx)) {
          if (auto tag = detect(pair->x, cfg.detector1, rng)) streams.det1.push_back(*tag);
        }
      } else {
        // XX photon absorbed by its polarizer; the X photon still meets
        // its own projector with the complementary conditional.
        const double p_x_given_orth =
            project_pair(rho, pol_xx_orth, pol_x) / std::max(1.0 - p_xx, 1e-300);
        if (rng.chance(p_x_given_orth)) {
          if (auto tag = detect(pair->x, cfg.detector1, rng)) streams.det1.push_back(*tag);
        }
      }
    }
    append_dark_counts(streams, cfg, chunk, first, last);
    return streams;
  });
}

std::pair<TimeTagStream, TimeTagStream> run_tpi(const ExperimentConfig& cfg,
                                                Channel channel, bool parallel) {
  cfg.validate();
  if (cfg.source.double_pulse_delay_ps <= 0.0)
    throw std::invalid_argument("run_tpi needs a double-pulse excitation delay");

  const std::int64_t period = std::llround(cfg.source.rep_period_ps);
  const std::int64_t pulse_gap = std::llround(cfg.source.double_pulse_delay_ps);
  const std::int64_t mzi_delay = std::llround(cfg.mzi_delay_ps);
  const double prepare_probability = biexciton_population(
      cfg.pulse_area, cfg.source.rabi_damping_kappa, cfg.source.rabi_incoherent_c);

  return run_chunked(cfg, [&](std::uint64_t chunk, std::uint64_t first,
                              std::uint64_t last) {
    ChunkStreams streams;
    std::vector<PhotonEvent> at_splitter;
    at_splitter.reserve(2);
    for (std::uint64_t i = first; i < last; ++i) {
      Substream rng(cfg.seed, StreamId::kSource, i);
      at_splitter.clear();

      for (int slot = 0; slot < 2; ++slot) {
        const std::int64_t pulse_time =
            static_cast<std::int64_t>(i) * period + slot * pulse_gap;
        const bool prepared = rng.chance(prepare_probability);
        const auto pair = emit_cascade(cfg.source, pulse_time, prepared, rng);
        if (!pair) continue;
        PhotonEvent photon = channel_photon(*pair, channel);
        const bool long_arm = rng.chance(0.5);
        if (long_arm) {
          photon.emission_time_ps += mzi_delay;
          photon.wavepacket_origin_ps += mzi_delay;
        }
        at_splitter.push_back(photon);
      }

      auto detect_into = [&](const PhotonEvent& photon, int port) {
        const DetectorParams& det = port == 0 ? cfg.detector0 : cfg.detector1;
        if (auto tag = detect(photon, det, rng))
          (port == 0 ? streams.det0 : streams.det1).push_back(*tag);
      };

      if (at_splitter.size() == 2 &&
          std::llabs(at_splitter[0].wavepacket_origin_ps -
                     at_splitter[1].wavepacket_origin_ps) < kHomPairingWindowPs) {
        const PortPair ports =
            hom_coalesce(at_splitter[0], at_splitter[1], cfg.beamsplitter, parallel, rng);
        detect_into(at_splitter[0], ports.port_a);
        detect_into(at_splitter[1], ports.port_b);
      } else {
        for (const PhotonEvent& photon : at_splitter)
          detect_into(photon, route_single(photon.emission_time_ps, cfg.beamsplitter, rng));
      }
    }
    append_dark_counts(streams, cfg, chunk, first, last);
    return streams;
  });
}

CoincidenceHistogram run_lifetime(const ExperimentConfig& cfg, Channel channel,
                                  std::int64_t bin_width_ps, std::int64_t range_ps) {
  cfg.validate();
  if (bin_width_ps <= 0 || range_ps <= 0)
    throw std::invalid_argument("bin width and range must be > 0");

  const std::int64_t period = std::llround(cfg.source.rep_period_ps);
  const double prepare_probability = biexciton_population(
      cfg.pulse_area, cfg.source.rabi_damping_kappa, cfg.source.rabi_incoherent_c);

  CoincidenceHistogram h;
  h.bin_width_ps = bin_width_ps;
  // Leave room to the left of the pulse for the jitter-broadened rise.
  h.origin_ps = -((range_ps / 8 + bin_width_ps - 1) / bin_width_ps) * bin_width_ps;
  const std::size_t nbins =
      static_cast<std::size_t>((range_ps - h.origin_ps) / bin_width_ps);
  h.counts.assign(nbins, 0);
  h.period_ps = cfg.source.rep_period_ps;
  h.integration_time_s = cfg.duration_s;

  const std::uint64_t periods = cfg.num_periods();
  std::uint64_t detected = 0;
  for (std::uint64_t i = 0; i < periods; ++i) {
    Substream rng(cfg.seed, StreamId::kSource, i);
    const bool prepared = rng.chance(prepare_probability);
    const auto pair =
        emit_cascade(cfg.source, static_cast<std::int64_t>(i) * period, prepared, rng);
    if (!pair) continue;
    const PhotonEvent& photon = channel_photon(*pair, channel);
    const auto tag = detect(photon, cfg.detector0, rng);
    if (!tag) continue;
    ++detected;
    const std::int64_t delay = tag->timestamp_ps - static_cast<std::int64_t>(i) * period;
    const std::int64_t bin = (delay - h.origin_ps) / bin_width_ps;
    if (delay >= h.origin_ps && bin >= 0 && static_cast<std::size_t>(bin) < nbins)
      ++h.counts[static_cast<std::size_t>(bin)];
  }
  h.singles_rates_cps = {static_cast<double>(detected) / cfg.duration_s, 0.0};
  return h;
}

std::vector<PowerSeriesPoint> run_power_series(const ExperimentConfig& cfg,
                                               const std::vector<double>& theta_grid,
                                               std::uint64_t pulses_per_point) {
  cfg.validate();
  if (theta_grid.empty()) throw std::invalid_argument("theta grid must be nonempty");
  if (pulses_per_point == 0) throw std::invalid_argument("pulses_per_point must be > 0");

  const std::int64_t period = std::llround(cfg.source.rep_period_ps);
  std::vector<PowerSeriesPoint> table;
  table.reserve(theta_grid.size());

  std::uint64_t pulse_index = 0;
  for (const double theta : theta_grid) {
    const double population = biexciton_population(
        theta, cfg.source.rabi_damping_kappa, cfg.source.rabi_incoherent_c);
    PowerSeriesPoint point;
    point.theta = theta;
    for (std::uint64_t k = 0; k < pulses_per_point; ++k, ++pulse_index) {
      Substream rng(cfg.seed, StreamId::kSource, pulse_index);
      const bool prepared = rng.chance(population);
      const auto pair = emit_cascade(
          cfg.source, static_cast<std::int64_t>(pulse_index) * period, prepared, rng);
      if (!pair) continue;
      if (detect(pair->xx, cfg.detector0, rng)) ++point.counts_xx;
      if (detect(pair->x, cfg.detector1, rng)) ++point.counts_x;
    }
    table.push_back(point);
  }
  return table;
}

std::vector<std::pair<double, double>> g1_curve(const LineshapeModel& model,
                                                const std::vector<double>& tau_grid_ps) {
  model.validate();
  if (tau_grid_ps.empty()) throw std::invalid_argument("tau grid must be nonempty");

  std::vector<std::pair<double, double>> curve;
  curve.reserve(tau_grid_ps.size());
  for (const double tau : tau_grid_ps) {
    double value;
    if (model.kind == LineshapeModel::Kind::kGaussian) {
      const double r = tau / model.t2_ps;
      value = std::exp(-0.5 * std::numbers::pi * r * r);
    } else {
      value = std::exp(-tau / model.t2_ps);
    }
    curve.emplace_back(tau, value);
  }
  return curve;
}

double fringe_contrast(double i_max, double i_min) {
  if (i_min < 0.0 || i_max < i_min)
    throw std::invalid_argument("need i_max >= i_min >= 0");
  if (i_max + i_min <= 0.0) throw std::domain_error("fringe contrast undefined at zero intensity");
  return (i_max - i_min) / (i_max + i_min);
}

}  // namespace qdc
