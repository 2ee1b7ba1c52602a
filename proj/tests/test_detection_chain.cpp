#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "qdcascade/detection_chain.hpp"

using namespace qdc;

namespace {

PhotonEvent make_photon(Channel channel, std::int64_t origin, double t1, double t2,
                        std::uint64_t seed) {
  PhotonEvent p;
  p.channel = channel;
  p.emission_time_ps = origin;
  p.wavepacket_origin_ps = origin;
  p.t1_ps = t1;
  p.t2_ps = t2;
  p.coherence_seed = seed;
  return p;
}

}  // namespace

TEST_CASE("detect thinning and jitter") {
  const PhotonEvent photon = make_photon(Channel::kXX, 12345, 220.0, 440.0, 1);

  SUBCASE("unit efficiency and no jitter reproduce the emission time") {
    DetectorParams det{1.0, 0.0, 0.0, 0};
    Substream rng(1, 0, 0);
    const auto tag = detect(photon, det, rng);
    REQUIRE(tag.has_value());
    CHECK(tag->timestamp_ps == 12345);
    CHECK(tag->detector_id == 0);
  }

  SUBCASE("zero efficiency never fires") {
    DetectorParams det{0.0, 0.0, 0.0, 0};
    Substream rng(1, 0, 0);
    for (int i = 0; i < 1000; ++i) CHECK(!detect(photon, det, rng).has_value());
  }

  SUBCASE("jitter standard deviation is reproduced") {
    DetectorParams det{1.0, 0.0, 50.0, 1};
    const int n = 10000;
    double sum = 0.0, sum_sq = 0.0;
    Substream rng(2, 0, 0);
    for (int i = 0; i < n; ++i) {
      const auto tag = detect(photon, det, rng);
      const double d = static_cast<double>(tag->timestamp_ps - 12345);
      sum += d;
      sum_sq += d * d;
    }
    const double mean = sum / n;
    const double std_dev = std::sqrt(sum_sq / n - mean * mean);
    CHECK(std::abs(std_dev - 50.0) < 2.0);
  }

  SUBCASE("thinning never produces more tags than events") {
    DetectorParams det{0.35, 0.0, 0.0, 0};
    Substream rng(3, 0, 0);
    int fired = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i)
      if (detect(photon, det, rng)) ++fired;
    const double p = static_cast<double>(fired) / n;
    CHECK(fired <= n);
    CHECK(std::abs(p - 0.35) < 3.0 * std::sqrt(0.35 * 0.65 / n));
  }
}

TEST_CASE("dark_counts is a homogeneous Poisson process") {
  SUBCASE("zero rate yields nothing") {
    DetectorParams det{1.0, 0.0, 0.0, 0};
    Substream rng(1, 0, 0);
    CHECK(dark_counts(det, 0, 1000000, rng).empty());
  }

  SUBCASE("count matches rate * window within 3 sigma") {
    DetectorParams det{1.0, 250.0, 0.0, 0};
    Substream rng(5, 0, 0);
    // 250 cps over 400 s of simulated time.
    const std::int64_t window_ps = 400LL * 1000000000000LL;
    const auto tags = dark_counts(det, 0, window_ps, rng);
    const double expected = 250.0 * 400.0;
    CHECK(std::abs(static_cast<double>(tags.size()) - expected) <
          3.0 * std::sqrt(expected));
    CHECK(is_sorted_stream(tags));
  }

  SUBCASE("inter-arrival times are exponential (mean and CV)") {
    DetectorParams det{1.0, 1e6, 0.0, 0};
    Substream rng(7, 0, 0);
    const auto tags = dark_counts(det, 0, 20LL * 1000000000000LL, rng);
    REQUIRE(tags.size() > 1000);
    std::vector<double> gaps;
    for (std::size_t i = 1; i < tags.size(); ++i)
      gaps.push_back(static_cast<double>(tags[i].timestamp_ps - tags[i - 1].timestamp_ps));
    const double mean = std::accumulate(gaps.begin(), gaps.end(), 0.0) / gaps.size();
    double var = 0.0;
    for (const double g : gaps) var += (g - mean) * (g - mean);
    var /= (gaps.size() - 1);
    const double expected_mean = 1e12 / 1e6;
    CHECK(std::abs(mean - expected_mean) < 3.0 * expected_mean / std::sqrt(gaps.size()));
    // Exponential: coefficient of variation = 1.
    CHECK(std::sqrt(var) / mean == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("route_single follows the transmittance") {
  for (const double t : {1.0, 0.5, 0.3}) {
    BeamsplitterParams bs{t, 1.0};
    Substream rng(11, 0, 0);
    const int n = 10000;
    int port0 = 0;
    for (int i = 0; i < n; ++i)
      if (route_single(0, bs, rng) == 0) ++port0;
    const double p = static_cast<double>(port0) / n;
    if (t == 1.0) {
      CHECK(port0 == n);
    } else {
      CHECK(std::abs(p - t) < 3.0 * std::sqrt(t * (1.0 - t) / n));
    }
  }
}

TEST_CASE("wavepacket overlap of exponential photons") {
  SUBCASE("identical lifetime-limited wavepackets overlap perfectly") {
    const auto a = make_photon(Channel::kXX, 0, 220.0, 440.0, 1);
    const auto b = make_photon(Channel::kXX, 0, 220.0, 440.0, 2);
    CHECK(wavepacket_overlap_sq(a, b) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("offset wavepackets decay as exp(-|dt|/t1)") {
    for (const std::int64_t offset : {50, 150, 400}) {
      const auto a = make_photon(Channel::kXX, 0, 220.0, 440.0, 1);
      const auto b = make_photon(Channel::kXX, offset, 220.0, 440.0, 2);
      CHECK(wavepacket_overlap_sq(a, b) ==
            doctest::Approx(std::exp(-static_cast<double>(offset) / 220.0))
                .epsilon(0.01));
    }
  }

  SUBCASE("ensemble average with dephasing approaches T2/(2 T1)") {
    const double t1 = 220.0, t2 = 192.0;
    const int n = 4000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto a = make_photon(Channel::kXX, 0, t1, t2, 1000 + 2 * i);
      const auto b = make_photon(Channel::kXX, 0, t1, t2, 1001 + 2 * i);
      const double o = wavepacket_overlap_sq(a, b);
      sum += o;
      sum_sq += o * o;
    }
    const double mean = sum / n;
    const double sem = std::sqrt((sum_sq / n - mean * mean) / n);
    const double analytic = t2 / (2.0 * t1);
    CHECK(std::abs(mean - analytic) < 3.0 * sem + 0.003);
  }

  SUBCASE("emission-time jitter strictly degrades the ensemble overlap") {
    // X photons inherit the biexciton decay jitter in their origins.
    const double t1 = 400.0, t2 = 357.0;
    const int n = 2000;
    double with_jitter = 0.0, without_jitter = 0.0;
    Substream jitter_rng(99, 0, 0);
    for (int i = 0; i < n; ++i) {
      const auto a0 = make_photon(Channel::kX, 0, t1, t2, 5000 + 2 * i);
      auto b0 = make_photon(Channel::kX, 0, t1, t2, 5001 + 2 * i);
      without_jitter += wavepacket_overlap_sq(a0, b0);
      auto a1 = a0;
      auto b1 = b0;
      a1.wavepacket_origin_ps = std::llround(jitter_rng.exponential(220.0));
      b1.wavepacket_origin_ps = std::llround(jitter_rng.exponential(220.0));
      with_jitter += wavepacket_overlap_sq(a1, b1);
    }
    CHECK(with_jitter / n < without_jitter / n);
    // Laplace-distributed origin offsets multiply the mean overlap by
    // roughly E[exp(-|d|/t1)] = (1/220)/(1/220 + 1/400).
    const double expected_factor = (1.0 / 220.0) / (1.0 / 220.0 + 1.0 / 400.0);
    CHECK(with_jitter / without_jitter == doctest::Approx(expected_factor).epsilon(0.1));
  }
}

TEST_CASE("hom_coalesce port statistics") {
  BeamsplitterParams bs{0.5, 1.0};

  SUBCASE("perfect interference never produces a coincidence") {
    const auto a = make_photon(Channel::kXX, 0, 220.0, 440.0, 1);
    const auto b = make_photon(Channel::kXX, 0, 220.0, 440.0, 2);
    Substream rng(13, 0, 0);
    for (int i = 0; i < 2000; ++i) CHECK(!hom_coalesce(a, b, bs, true, rng).coincided());
  }

  SUBCASE("cross-polarized photons coincide half the time") {
    const auto a = make_photon(Channel::kXX, 0, 220.0, 440.0, 1);
    const auto b = make_photon(Channel::kXX, 0, 220.0, 440.0, 2);
    Substream rng(17, 0, 0);
    const int n = 20000;
    int coincidences = 0;
    for (int i = 0; i < n; ++i)
      if (hom_coalesce(a, b, bs, false, rng).coincided()) ++coincidences;
    const double p = static_cast<double>(coincidences) / n;
    CHECK(std::abs(p - 0.5) < 3.0 * std::sqrt(0.25 / n));
  }

  SUBCASE("coincidence probability decreases with mode overlap") {
    const auto a = make_photon(Channel::kXX, 0, 220.0, 440.0, 1);
    const auto b = make_photon(Channel::kXX, 0, 220.0, 440.0, 2);
    double previous = 1.0;
    for (const double overlap : {0.2, 0.6, 0.95, 1.0}) {
      BeamsplitterParams partial{0.5, overlap};
      Substream rng(19, 0, 0);
      const int n = 40000;
      int coincidences = 0;
      for (int i = 0; i < n; ++i)
        if (hom_coalesce(a, b, partial, true, rng).coincided()) ++coincidences;
      const double p = static_cast<double>(coincidences) / n;
      CHECK(p == doctest::Approx(0.5 * (1.0 - overlap * overlap)).epsilon(0.15));
      CHECK(p <= previous + 0.01);
      previous = p;
    }
  }

  SUBCASE("fixed seed reproduces ports bit for bit") {
    const auto a = make_photon(Channel::kX, 0, 400.0, 357.0, 21);
    const auto b = make_photon(Channel::kX, 35, 400.0, 357.0, 22);
    Substream rng_a(23, 0, 5);
    Substream rng_b(23, 0, 5);
    for (int i = 0; i < 50; ++i) {
      const auto ports_a = hom_coalesce(a, b, bs, true, rng_a);
      const auto ports_b = hom_coalesce(a, b, bs, true, rng_b);
      CHECK(ports_a.port_a == ports_b.port_a);
      CHECK(ports_a.port_b == ports_b.port_b);
    }
  }
}
