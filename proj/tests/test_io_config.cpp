#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <unistd.h>

#include <json.hpp>

#include "qdcascade/config.hpp"
#include "qdcascade/io.hpp"
#include "qdcascade/rng.hpp"

using namespace qdc;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("qdcascade_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

TimeTagStream random_stream(std::size_t n, std::uint64_t seed) {
  TimeTagStream stream;
  Substream rng(seed, 0, 0);
  std::int64_t t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    t += static_cast<std::int64_t>(rng.uniform() * 100000);
    stream.push_back({static_cast<std::int32_t>(rng.chance(0.5)), t});
  }
  return stream;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text;
}

}  // namespace

TEST_CASE("time-tag round trips") {
  TempDir dir;
  const auto stream = random_stream(5000, 1);

  SUBCASE("CSV re-serialization is byte-identical") {
    const auto path = dir.file("a.tags");
    write_timetags(stream, path, {{"seed", "1"}});
    const auto loaded = read_timetags(path);
    CHECK(loaded.stream == stream);
    CHECK(loaded.metadata.at("seed") == "1");
    const auto path2 = dir.file("b.tags");
    write_timetags(loaded.stream, path2, loaded.metadata);
    CHECK(slurp(path) == slurp(path2));
  }

  SUBCASE("binary round trip preserves content") {
    const auto path = dir.file("a.ttb");
    write_timetags(stream, path, {{"seed", "1"}, {"note", "binary"}}, true);
    const auto loaded = read_timetags(path);
    CHECK(loaded.stream == stream);
    CHECK(loaded.metadata.at("note") == "binary");
  }

  SUBCASE("empty stream round trips") {
    const auto path = dir.file("empty.tags");
    write_timetags({}, path, {{"seed", "9"}});
    const auto loaded = read_timetags(path);
    CHECK(loaded.stream.empty());
    CHECK(loaded.metadata.at("seed") == "9");
  }

  SUBCASE("corrupted row is reported with its line number") {
    const auto path = dir.file("bad.tags");
    std::ofstream out(path);
    out << "# format=qdcascade-timetags/1\n0,100\n0,banana\n";
    out.close();
    try {
      read_timetags(path);
      FAIL("expected a parse error");
    } catch (const std::runtime_error& error) {
      CHECK(std::string(error.what()).find(":3:") != std::string::npos);
    }
  }

  SUBCASE("unsorted input is rejected unless the sort flag is passed") {
    const auto path = dir.file("unsorted.tags");
    std::ofstream out(path);
    out << "0,100\n0,50\n";
    out.close();
    CHECK_THROWS_AS(read_timetags(path), std::runtime_error);
    const auto loaded = read_timetags(path, true);
    CHECK(loaded.stream.front().timestamp_ps == 50);
  }
}

TEST_CASE("histogram round trips") {
  TempDir dir;
  CoincidenceHistogram h;
  h.bin_width_ps = 250;
  h.origin_ps = -1000;
  h.counts = {1, 0, 42, 7, 0, 3, 12, 9};
  h.integration_time_s = 2.5;
  h.singles_rates_cps = {1234.5, 678.9};
  h.period_ps = 13158.0;

  const auto path = dir.file("h.csv");
  write_histogram(h, path, {{"channel", "X"}});
  const auto loaded = read_histogram(path);
  CHECK(loaded.bin_width_ps == h.bin_width_ps);
  CHECK(loaded.origin_ps == h.origin_ps);
  CHECK(loaded.counts == h.counts);
  CHECK(loaded.integration_time_s == doctest::Approx(h.integration_time_s));
  CHECK(loaded.singles_rates_cps[0] == doctest::Approx(h.singles_rates_cps[0]));
  CHECK(loaded.period_ps == doctest::Approx(h.period_ps));

  SUBCASE("corruption is caught with a line number") {
    const auto bad = dir.file("bad.csv");
    std::ofstream out(bad);
    out << "# bin_width_ps=250\n-1000,5\n-750,oops\n";
    out.close();
    try {
      read_histogram(bad);
      FAIL("expected a parse error");
    } catch (const std::runtime_error& error) {
      CHECK(std::string(error.what()).find(":3:") != std::string::npos);
    }
  }
}

TEST_CASE("xy csv round trip") {
  TempDir dir;
  const std::vector<std::pair<double, double>> rows{{0.0, 1.0}, {0.5, 0.25}, {2.5, -3.75}};
  const auto path = dir.file("curve.csv");
  write_xy_csv(rows, path, "tau_ps", "contrast");
  const auto loaded = read_xy_csv(path);
  REQUIRE(loaded.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(loaded[i].first == doctest::Approx(rows[i].first));
    CHECK(loaded[i].second == doctest::Approx(rows[i].second));
  }
}

TEST_CASE("presets") {
  SUBCASE("the default preset carries the measured device numbers") {
    const RunConfig config = preset_config("paper-default");
    CHECK(config.experiment.source.t1_xx_ps == doctest::Approx(220.0));
    CHECK(config.experiment.source.t1_x_ps == doctest::Approx(400.0));
    CHECK(config.experiment.detector0.dark_rate_cps == doctest::Approx(250.0));
    CHECK(config.experiment.source.rep_period_ps == doctest::Approx(13158.0));
    CHECK(config.experiment.beamsplitter.mode_overlap == doctest::Approx(0.95));
  }

  SUBCASE("desk preset preserves the dark-to-singles ratio") {
    const RunConfig config = preset_config("desk");
    const double prepared = biexciton_population(std::numbers::pi, 0.08, 0.04);
    const double photon_rate =
        (1e12 / 13158.0) * prepared * 0.5 * config.experiment.detector0.efficiency;
    const double singles = photon_rate + config.experiment.detector0.dark_rate_cps;
    CHECK(config.experiment.detector0.dark_rate_cps / singles ==
          doctest::Approx(250.0 / 3000.0).epsilon(1e-6));
  }

  SUBCASE("unknown preset is rejected") {
    CHECK_THROWS_AS(preset_config("no-such-preset"), std::invalid_argument);
  }
}

TEST_CASE("parse_config validation") {
  SUBCASE("minimal document with a preset") {
    const RunConfig config =
        parse_config(R"({"preset": "desk", "experiment": {"kind": "tpi"}})");
    CHECK(config.kind == ExperimentKind::kTpi);
    // TPI defaults to the two-pulse excitation.
    CHECK(config.experiment.source.double_pulse_delay_ps == doctest::Approx(4000.0));
  }

  SUBCASE("missing experiment kind names the field") {
    try {
      parse_config(R"({"preset": "desk", "experiment": {"kind": ""}})");
      FAIL("expected rejection");
    } catch (const std::invalid_argument& error) {
      CHECK(std::string(error.what()).find("experiment.kind") != std::string::npos);
    }
  }

  SUBCASE("unknown keys name the offending path") {
    try {
      parse_config(R"({"preset": "desk", "experiment": {"kind": "hbt"},
                       "source": {"t1_banana_ps": 3}})");
      FAIL("expected rejection");
    } catch (const std::invalid_argument& error) {
      CHECK(std::string(error.what()).find("source.t1_banana_ps") != std::string::npos);
    }
  }

  SUBCASE("unphysical coherence time is rejected with a physics message") {
    try {
      parse_config(R"({"preset": "desk", "experiment": {"kind": "hbt"},
                       "source": {"t2_x_ps": 801.0}})");
      FAIL("expected rejection");
    } catch (const std::invalid_argument& error) {
      CHECK(std::string(error.what()).find("t2_x_ps") != std::string::npos);
      CHECK(std::string(error.what()).find("2*t1_x_ps") != std::string::npos);
    }
  }

  SUBCASE("out-of-range detector efficiency is rejected") {
    CHECK_THROWS_AS(parse_config(R"({"preset": "desk", "experiment": {"kind": "hbt"},
                                     "detectors": {"efficiency": 1.5}})"),
                    std::invalid_argument);
  }

  SUBCASE("canonical form is stable under reparse") {
    const RunConfig config = preset_config("desk");
    const std::string first = config.canonical_json();
    nlohmann::json doc = nlohmann::json::parse(first);
    doc["experiment"]["kind"] = experiment_kind_name(config.kind);
    const RunConfig reparsed = parse_config(doc.dump());
    CHECK(reparsed.canonical_json() == first);
    CHECK(fnv1a_hash(first) == fnv1a_hash(reparsed.canonical_json()));
  }
}
