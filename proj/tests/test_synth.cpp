#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "delaycast/fusion.hpp"
#include "delaycast/rng.hpp"
#include "delaycast/synth.hpp"
#include "doctest.h"

using namespace delaycast;

namespace {

const Timetable& default_network() {
  static const Timetable tt = generate_network(SynthConfig{});
  return tt;
}

const SimResult& default_sim() {
  static const SimResult sim = simulate_day(SynthConfig{}, default_network());
  return sim;
}

SynthConfig quiet_config() {
  SynthConfig cfg;
  cfg.seed = 5;
  cfg.gps_noise_m = 0.0;
  cfg.regime.mean_s = 0.0;
  cfg.regime.noise_s = 0.0;
  cfg.latency_mode_s = 0;
  cfg.latency_max_s = 0;
  return cfg;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(SynthConfig{}.validate());
  SynthConfig bad;
  bad.n_lines = 0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = SynthConfig{};
  bad.n_stops = 1;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = SynthConfig{};
  bad.poll_period_s = 0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = SynthConfig{};
  bad.latency_mode_s = 600;  // above the maximum
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = SynthConfig{};
  bad.stop_spacing_m = 0.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = SynthConfig{};
  bad.nominal_speed_kmh = -3.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = SynthConfig{};
  bad.day_length_s = 0;
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("network generation is deterministic and counts out") {
  const SynthConfig cfg;
  const Timetable a = generate_network(cfg);
  const Timetable b = generate_network(cfg);
  CHECK(timetable_to_json(a) == timetable_to_json(b));

  // Two directions per line.
  REQUIRE(a.routes.size() == 4);
  std::map<std::string, int> per_line;
  for (const auto& r : a.routes) {
    ++per_line[r.line];
    CHECK((r.direction == "0" || r.direction == "1"));
    CHECK(static_cast<int>(r.stops.size()) == cfg.n_stops);
  }
  for (const auto& [line, count] : per_line) CHECK(count == 2);

  SynthConfig other = cfg;
  other.seed = 99;
  const Timetable c = generate_network(other);
  CHECK(timetable_to_json(a) != timetable_to_json(c));
}

TEST_CASE("schedules are increasing and trips fit the service day") {
  const SynthConfig cfg;
  for (const auto& r : default_network().routes) {
    for (std::size_t s = 1; s < r.stops.size(); ++s) {
      CHECK(r.stops[s].offset_s > r.stops[s - 1].offset_s);
    }
    REQUIRE(!r.trip_starts.empty());
    for (std::size_t k = 1; k < r.trip_starts.size(); ++k) {
      CHECK(r.trip_starts[k] - r.trip_starts[k - 1] == cfg.headway_s);
    }
    CHECK(r.trip_starts.front() >= cfg.day_start_s);
    CHECK(static_cast<double>(r.trip_starts.back()) + r.duration_s() <=
          static_cast<double>(cfg.day_start_s + cfg.day_length_s));

    // The nominal speed ties offsets to polyline length. Offsets come from
    // great-circle segment lengths, length_m from the planar frame, so the
    // two agree only to the flat-earth approximation.
    const double speed_ms = cfg.nominal_speed_kmh / 3.6;
    CHECK(r.duration_s() == doctest::Approx(r.length_m() / speed_ms).epsilon(0.005));
  }
}

TEST_CASE("latency model shape: grid, normalization, mode, truncation") {
  const LatencyModel m = LatencyModel::make(180, 480, 30);
  REQUIRE(!m.values.empty());
  double total = 0.0;
  std::size_t argmax = 0;
  for (std::size_t k = 0; k < m.values.size(); ++k) {
    CHECK(m.values[k] % 30 == 0);
    CHECK(m.values[k] >= 0);
    CHECK(m.values[k] <= 480);
    if (k > 0) CHECK(m.values[k] == m.values[k - 1] + 30);
    CHECK(m.pmf[k] > 0.0);
    total += m.pmf[k];
    if (m.pmf[k] > m.pmf[argmax]) argmax = k;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.cdf.back() == 1.0);
  CHECK(m.values[argmax] == 180);
  CHECK(m.max_value() == 480);

  const LatencyModel point = LatencyModel::make(0, 0, 30);
  REQUIRE(point.values.size() == 1);
  CHECK(point.values[0] == 0);
  CHECK(point.pmf[0] == 1.0);
}

TEST_CASE("latency sampling is deterministic and respects the support") {
  const LatencyModel m = LatencyModel::make(180, 480, 30);
  Rng a(17), b(17);
  for (int i = 0; i < 2000; ++i) CHECK(m.sample(a) == m.sample(b));

  Rng rng(21);
  std::map<std::int64_t, int> hist;
  for (int i = 0; i < 20000; ++i) {
    const std::int64_t v = m.sample(rng);
    CHECK(v >= 0);
    CHECK(v <= 480);
    CHECK(v % 30 == 0);
    ++hist[v];
  }
  std::int64_t mode = -1;
  int peak = 0;
  for (const auto& [v, n] : hist) {
    if (n > peak) {
      peak = n;
      mode = v;
    }
  }
  CHECK(std::llabs(mode - 180) <= 30);
}

TEST_CASE("a full day is byte-deterministic") {
  const SynthConfig cfg;
  const Timetable tt = generate_network(cfg);
  const SimResult a = simulate_day(cfg, tt);
  const SimResult b = simulate_day(cfg, tt);
  REQUIRE(a.raw.size() == b.raw.size());
  for (std::size_t k = 0; k < a.raw.size(); ++k) {
    CHECK(a.raw[k].vehicle_id == b.raw[k].vehicle_id);
    CHECK(a.raw[k].t_c == b.raw[k].t_c);
    CHECK(a.raw[k].t_r == b.raw[k].t_r);
    CHECK(a.raw[k].lat == b.raw[k].lat);
    CHECK(a.raw[k].lon == b.raw[k].lon);
  }
  REQUIRE(a.truth.entries.size() == b.truth.entries.size());
  for (std::size_t k = 0; k < a.truth.entries.size(); ++k) {
    CHECK(a.truth.entries[k].delay_s == b.truth.entries[k].delay_s);
  }
}

TEST_CASE("raw stream ordering, duplication volume, and stamp sanity") {
  const SynthConfig cfg;
  const SimResult& sim = default_sim();
  REQUIRE(!sim.raw.empty());
  CHECK(sim.stats.raw_records == static_cast<std::int64_t>(sim.raw.size()));
  CHECK(sim.stats.captures == static_cast<std::int64_t>(sim.truth.entries.size()));

  for (const auto& r : sim.raw) {
    CHECK(r.t_r >= r.t_c);
    CHECK_NOTHROW(r.validate());
  }
  for (std::size_t k = 1; k < sim.raw.size(); ++k) {
    const auto& p = sim.raw[k - 1];
    const auto& q = sim.raw[k];
    CHECK(std::tie(p.t_r, p.vehicle_id, p.t_c) <= std::tie(q.t_r, q.vehicle_id, q.t_c));
  }

  // Repeat service keeps every vehicle visible at (nearly) every poll tick.
  const std::int64_t vehicles = cfg.n_lines * cfg.n_vehicles_per_line;
  const std::int64_t polls = cfg.day_length_s / cfg.poll_period_s;
  CHECK(static_cast<std::int64_t>(sim.raw.size()) >= vehicles * polls);

  // And the same capture really is served multiple times.
  CHECK(static_cast<std::int64_t>(sim.raw.size()) > sim.stats.captures);
}

TEST_CASE("ground truth is sorted, unique, and queryable") {
  const SimResult& sim = default_sim();
  for (std::size_t k = 1; k < sim.truth.entries.size(); ++k) {
    const auto& p = sim.truth.entries[k - 1];
    const auto& q = sim.truth.entries[k];
    CHECK(std::tie(p.vehicle_id, p.t) < std::tie(q.vehicle_id, q.t));
  }
  const GroundTruthEntry& e = sim.truth.entries.front();
  const GroundTruthEntry* found = sim.truth.find(e.vehicle_id, e.t);
  REQUIRE(found != nullptr);
  CHECK(found->delay_s == e.delay_s);
  CHECK(sim.truth.find("no-such-vehicle", e.t) == nullptr);
  CHECK(sim.truth.find(e.vehicle_id, e.t + 1) == nullptr);
}

TEST_CASE("label oracle thresholds the true delay") {
  GroundTruth gt;
  gt.entries.push_back({"v1", 100, {52.2, 21.0}, 0.0});
  gt.entries.push_back({"v1", 130, {52.2, 21.0}, 90.0});
  gt.entries.push_back({"v1", 160, {52.2, 21.0}, -90.0});
  CHECK(label_oracle(gt, "v1", 100, 60.0) == DelayLabel::on_time);
  CHECK(label_oracle(gt, "v1", 130, 60.0) == DelayLabel::delayed);
  CHECK(label_oracle(gt, "v1", 160, 60.0) == DelayLabel::before_time);
  CHECK_THROWS_AS(label_oracle(gt, "v1", 101, 60.0), InputError);
  CHECK_THROWS_AS(label_oracle(gt, "v2", 100, 60.0), InputError);
}

TEST_CASE("the default regime produces all three classes in volume") {
  const SimResult& sim = default_sim();
  std::array<std::int64_t, 3> counts{};
  for (const auto& e : sim.truth.entries) {
    counts[static_cast<std::size_t>(
        encode_label(status_of_delay(e.delay_s, 60.0)))]++;
  }
  const auto total = static_cast<double>(sim.truth.entries.size());
  for (int c = 0; c < 3; ++c) {
    CHECK(static_cast<double>(counts[static_cast<std::size_t>(c)]) / total >= 0.10);
  }
}

TEST_CASE("zero noise and zero latency collapse to the ideal channel") {
  const SynthConfig cfg = quiet_config();
  const Timetable tt = generate_network(cfg);
  const SimResult sim = simulate_day(cfg, tt);
  REQUIRE(!sim.raw.empty());
  // No re-serving: one record per capture, received the instant it was made.
  CHECK(static_cast<std::int64_t>(sim.raw.size()) == sim.stats.captures);
  for (const auto& r : sim.raw) CHECK(r.t_r == r.t_c);
  for (const auto& e : sim.truth.entries) CHECK(e.delay_s == 0.0);
  std::set<std::pair<std::string, std::int64_t>> keys;
  for (const auto& r : sim.raw) keys.emplace(r.vehicle_id, r.t_c);
  CHECK(keys.size() == sim.raw.size());
}

TEST_CASE("a drift event drags the delay process to the new mean") {
  SynthConfig cfg = quiet_config();
  const std::int64_t drift_at = cfg.day_start_s + cfg.day_length_s / 2;
  DelayRegime late;
  late.mean_s = 300.0;
  late.reversion = 0.5;
  late.noise_s = 0.0;
  cfg.drift_events.push_back({drift_at, late});

  const Timetable tt = generate_network(cfg);
  const SimResult sim = simulate_day(cfg, tt);
  double before_max = 0.0, after_max = 0.0;
  for (const auto& e : sim.truth.entries) {
    if (e.t < drift_at) {
      before_max = std::max(before_max, std::abs(e.delay_s));
    } else if (e.t > drift_at + 1800) {
      after_max = std::max(after_max, e.delay_s);
    }
  }
  CHECK(before_max == 0.0);
  CHECK(after_max > 200.0);
}

TEST_CASE("gps noise moves reported positions but not the ground truth") {
  SynthConfig noisy = quiet_config();
  noisy.latency_mode_s = 180;
  noisy.latency_max_s = 480;
  noisy.gps_noise_m = 10.0;
  const SynthConfig quiet = quiet_config();

  const Timetable tt_noisy = generate_network(noisy);
  const Timetable tt_quiet = generate_network(quiet);
  // Same seed, same geometry: noise applies to reports only.
  CHECK(timetable_to_json(tt_noisy) == timetable_to_json(tt_quiet));

  const SimResult a = simulate_day(noisy, tt_noisy);
  const SimResult b = simulate_day(quiet, tt_quiet);
  REQUIRE(a.truth.entries.size() == b.truth.entries.size());
  for (std::size_t k = 0; k < a.truth.entries.size(); ++k) {
    CHECK(a.truth.entries[k].pos.lat == b.truth.entries[k].pos.lat);
    CHECK(a.truth.entries[k].t == b.truth.entries[k].t);
  }
  // Reported coordinates differ from the truth for some records.
  bool moved = false;
  for (const auto& r : a.raw) {
    const GroundTruthEntry* e = a.truth.find(r.vehicle_id, r.t_c);
    REQUIRE(e != nullptr);
    if (r.lat != e->pos.lat || r.lon != e->pos.lon) moved = true;
  }
  CHECK(moved);
}

TEST_CASE("truth files serialize one entry per line") {
  const SynthConfig cfg = quiet_config();
  const SimResult sim = simulate_day(cfg, generate_network(cfg));
  const std::string path = "synth_truth.jsonl";
  write_truth_jsonl(path, sim.truth);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::size_t lines = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) ++lines;
  }
  in.close();
  std::remove(path.c_str());
  CHECK(lines == sim.truth.entries.size());
}
