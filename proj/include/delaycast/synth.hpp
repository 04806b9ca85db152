#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "delaycast/fusion.hpp"
#include "delaycast/rng.hpp"
#include "delaycast/stream_core.hpp"

namespace delaycast {

// Mean-reverting random-walk parameters for the per-vehicle delay process,
// stepped once per poll tick.
struct DelayRegime {
  double mean_s = 0.0;
  double reversion = 0.006;  // per-step pull toward the mean, in (0,1]
  double noise_s = 10.0;     // per-step noise, seconds

  double stationary_std() const;
};

struct DriftEvent {
  std::int64_t at_s = 0;  // absolute time the new regime takes effect
  DelayRegime regime;
};

// Discrete transmission-latency distribution on a fixed bin grid, shaped
// like a gamma density with its peak at mode_s and truncated at max_s.
struct LatencyModel {
  std::vector<std::int64_t> values;  // ascending
  std::vector<double> pmf;           // sums to 1
  std::vector<double> cdf;

  static LatencyModel make(std::int64_t mode_s, std::int64_t max_s,
                           std::int64_t bin_s);
  std::int64_t sample(Rng& rng) const;
  std::int64_t max_value() const { return values.back(); }
};

struct SynthConfig {
  std::uint64_t seed = 1;
  int n_lines = 2;
  int n_vehicles_per_line = 4;  // vehicles alternate directions trip by trip
  int n_stops = 20;
  double stop_spacing_m = 600.0;
  double nominal_speed_kmh = 30.0;
  std::int64_t headway_s = 1800;
  std::int64_t day_start_s = 21600;
  std::int64_t day_length_s = 43200;
  std::int64_t turnaround_s = 600;
  std::int64_t poll_period_s = 30;
  std::int64_t latency_mode_s = 180;
  std::int64_t latency_max_s = 480;
  std::int64_t latency_bin_s = 30;
  double gps_noise_m = 0.0;
  DelayRegime regime;
  std::vector<DriftEvent> drift_events;  // ascending by at_s

  void validate() const;  // throws InputError
};

struct GroundTruthEntry {
  std::string vehicle_id;
  std::int64_t t = 0;  // capture time
  LatLon pos;          // noise-free position
  double delay_s = 0.0;
};

struct GroundTruth {
  std::vector<GroundTruthEntry> entries;  // sorted by (vehicle_id, t)

  const GroundTruthEntry* find(std::string_view vehicle, std::int64_t t) const;
};

// True delay status at a simulated capture, thresholded like the fusion
// pipeline. Throws InputError outside the simulated range.
DelayLabel label_oracle(const GroundTruth& gt, std::string_view vehicle,
                        std::int64_t t, double threshold_s);

struct SimStats {
  std::int64_t captures = 0;
  std::int64_t raw_records = 0;
};

struct SimResult {
  std::vector<LocationRecord> raw;  // ordered by (t_r, vehicle_id, t_c)
  GroundTruth truth;
  SimStats stats;
};

// Deterministic network: per line, a gently wandering polyline of stops in
// both directions, with trips every headway across the service day.
Timetable generate_network(const SynthConfig& cfg);

// Runs the day: vehicles claim trips alternating directions, drag a
// mean-reverting delay along their schedule, and a poller re-serves each
// vehicle's newest arrived capture every tick, so the raw stream carries
// natural duplicates and latency-induced reordering.
SimResult simulate_day(const SynthConfig& cfg, const Timetable& tt);

void write_truth_jsonl(const std::string& path, const GroundTruth& gt);

}  // namespace delaycast
