#include "delaycast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <tuple>

#include "json.hpp"

namespace delaycast {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMetersPerDegree = 6371000.0 * kPi / 180.0;

constexpr std::uint64_t kNetworkStream = 0x4e7;
constexpr std::uint64_t kDelayStream = 0xd31a;
constexpr std::uint64_t kLatencyStream = 0x7a7e;
constexpr std::uint64_t kNoiseStream = 0x6e01;

}  // namespace

double DelayRegime::stationary_std() const {
  if (noise_s == 0.0) return 0.0;
  const double a = 1.0 - reversion;
  return noise_s / std::sqrt(1.0 - a * a);
}

LatencyModel LatencyModel::make(std::int64_t mode_s, std::int64_t max_s,
                                std::int64_t bin_s) {
  if (bin_s < 1) throw InputError("latency bin must be >= 1");
  if (max_s < 0) throw InputError("latency max must be >= 0");
  LatencyModel m;
  if (max_s == 0) {
    m.values = {0};
    m.pmf = {1.0};
    m.cdf = {1.0};
    return m;
  }
  if (mode_s < bin_s || mode_s > max_s) {
    throw InputError("latency mode must lie in [bin, max]");
  }
  // Gamma shape 4: the density peaks at 3 * theta, so theta = mode / 3.
  const double theta = static_cast<double>(mode_s) / 3.0;
  double total = 0.0;
  for (std::int64_t v = bin_s; v <= max_s; v += bin_s) {
    const double z = static_cast<double>(v) / theta;
    const double w = z * z * z * std::exp(-z);
    m.values.push_back(v);
    m.pmf.push_back(w);
    total += w;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < m.pmf.size(); ++i) {
    m.pmf[i] /= total;
    acc += m.pmf[i];
    m.cdf.push_back(acc);
  }
  m.cdf.back() = 1.0;
  return m;
}

std::int64_t LatencyModel::sample(Rng& rng) const {
  const double u = rng.uniform01();
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  const std::size_t i = std::min(static_cast<std::size_t>(it - cdf.begin()),
                                 values.size() - 1);
  return values[i];
}

void SynthConfig::validate() const {
  if (n_lines < 1) throw InputError("n_lines must be >= 1");
  if (n_vehicles_per_line < 1) throw InputError("n_vehicles_per_line must be >= 1");
  if (n_stops < 2) throw InputError("n_stops must be >= 2");
  if (!(stop_spacing_m > 0)) throw InputError("stop_spacing_m must be > 0");
  if (!(nominal_speed_kmh > 0)) throw InputError("nominal_speed_kmh must be > 0");
  if (headway_s < 1) throw InputError("headway_s must be >= 1");
  if (day_length_s < 1) throw InputError("day_length_s must be >= 1");
  if (turnaround_s < 0) throw InputError("turnaround_s must be >= 0");
  if (poll_period_s < 1) throw InputError("poll_period_s must be >= 1");
  if (gps_noise_m < 0) throw InputError("gps_noise_m must be >= 0");
  if (!(regime.reversion > 0) || regime.reversion > 1) {
    throw InputError("regime reversion must be in (0,1]");
  }
  if (regime.noise_s < 0) throw InputError("regime noise must be >= 0");
  for (std::size_t i = 0; i + 1 < drift_events.size(); ++i) {
    if (drift_events[i].at_s > drift_events[i + 1].at_s) {
      throw InputError("drift events out of order");
    }
  }
  LatencyModel::make(latency_mode_s, latency_max_s, latency_bin_s);
}

const GroundTruthEntry* GroundTruth::find(std::string_view vehicle,
                                          std::int64_t t) const {
  const auto it = std::lower_bound(
      entries.begin(), entries.end(), std::make_pair(vehicle, t),
      [](const GroundTruthEntry& e, const std::pair<std::string_view, std::int64_t>& key) {
        return std::tie(e.vehicle_id, e.t) < std::tie(key.first, key.second);
      });
  if (it == entries.end() || it->vehicle_id != vehicle || it->t != t) return nullptr;
  return &*it;
}

DelayLabel label_oracle(const GroundTruth& gt, std::string_view vehicle,
                        std::int64_t t, double threshold_s) {
  const GroundTruthEntry* e = gt.find(vehicle, t);
  if (e == nullptr) {
    throw InputError("no simulated state for vehicle " + std::string(vehicle) +
                     " at t=" + std::to_string(t));
  }
  return status_of_delay(e->delay_s, threshold_s);
}

Timetable generate_network(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(mix_seed(cfg.seed, kNetworkStream));
  const double speed_ms = cfg.nominal_speed_kmh / 3.6;
  Timetable tt;
  for (int li = 0; li < cfg.n_lines; ++li) {
    const double base_lat = 52.10 + 0.05 * li;
    const double base_lon = 20.90 + 0.01 * li;
    const double heading0 = rng.uniform(0.0, 2.0 * kPi);
    double wander = 0.0;
    std::vector<LatLon> pts;
    pts.push_back(LatLon{base_lat, base_lon});
    for (int s = 1; s < cfg.n_stops; ++s) {
      // Bounded wander keeps the polyline advancing in one overall
      // direction, so distinct segments never come near each other.
      wander = std::clamp(wander + rng.uniform(-0.3, 0.3), -1.0, 1.0);
      const double heading = heading0 + wander;
      const double dist = cfg.stop_spacing_m * rng.uniform(0.8, 1.2);
      const LatLon& prev = pts.back();
      const double dlat = dist * std::cos(heading) / kMetersPerDegree;
      const double dlon = dist * std::sin(heading) /
                          (kMetersPerDegree * std::cos(prev.lat * kPi / 180.0));
      pts.push_back(LatLon{prev.lat + dlat, prev.lon + dlon});
    }
    for (int dir = 0; dir < 2; ++dir) {
      Route r;
      r.line = "L" + std::to_string(li);
      r.direction = std::to_string(dir);
      std::vector<LatLon> ordered = pts;
      if (dir == 1) std::reverse(ordered.begin(), ordered.end());
      double offset = 0.0;
      for (std::size_t s = 0; s < ordered.size(); ++s) {
        if (s > 0) offset += haversine_m(ordered[s - 1], ordered[s]) / speed_ms;
        r.stops.push_back(Stop{ordered[s], offset});
      }
      const double duration = r.stops.back().offset_s;
      for (std::int64_t ts = cfg.day_start_s;
           static_cast<double>(ts - cfg.day_start_s) + duration <=
           static_cast<double>(cfg.day_length_s);
           ts += cfg.headway_s) {
        r.trip_starts.push_back(ts);
      }
      if (r.trip_starts.empty()) {
        throw InputError("route longer than the service day; nothing can run");
      }
      r.finalize();
      tt.routes.push_back(std::move(r));
    }
  }
  return tt;
}

namespace {

struct TripAssignment {
  int vehicle = 0;
  std::string line;
  int direction = 0;
  std::int64_t trip_start = 0;
};

struct Capture {
  std::int64_t t = 0;
  LatLon pos;       // with gps noise, what the device reports
  LatLon true_pos;  // noise-free
  double delay_s = 0.0;
  std::string line;
  int direction = 0;
};

const DelayRegime& regime_at(const SynthConfig& cfg, std::int64_t t) {
  const DelayRegime* r = &cfg.regime;
  for (const auto& ev : cfg.drift_events) {
    if (ev.at_s <= t) r = &ev.regime;
    else break;
  }
  return *r;
}

}  // namespace

SimResult simulate_day(const SynthConfig& cfg, const Timetable& tt) {
  cfg.validate();
  const int n_vehicles = cfg.n_lines * cfg.n_vehicles_per_line;

  // Trip claiming: vehicles take the next unclaimed trip of their current
  // direction that starts after they become available, then turn around.
  std::vector<std::vector<bool>> taken(tt.routes.size());
  for (std::size_t r = 0; r < tt.routes.size(); ++r) {
    taken[r].assign(tt.routes[r].trip_starts.size(), false);
  }
  std::vector<std::int64_t> avail(static_cast<std::size_t>(n_vehicles),
                                  cfg.day_start_s);
  std::vector<int> heading_dir(static_cast<std::size_t>(n_vehicles));
  for (int v = 0; v < n_vehicles; ++v) heading_dir[static_cast<std::size_t>(v)] = v % 2;
  std::vector<std::vector<TripAssignment>> plans(
      static_cast<std::size_t>(n_vehicles));
  bool progress = true;
  while (progress) {
    progress = false;
    for (int v = 0; v < n_vehicles; ++v) {
      const int li = v / cfg.n_vehicles_per_line;
      const std::string line = "L" + std::to_string(li);
      const int dir = heading_dir[static_cast<std::size_t>(v)];
      const Route* route = tt.find(line, std::to_string(dir));
      if (route == nullptr) continue;
      const std::size_t ri = static_cast<std::size_t>(route - tt.routes.data());
      for (std::size_t k = 0; k < route->trip_starts.size(); ++k) {
        if (taken[ri][k] || route->trip_starts[k] < avail[static_cast<std::size_t>(v)]) {
          continue;
        }
        taken[ri][k] = true;
        plans[static_cast<std::size_t>(v)].push_back(
            TripAssignment{v, line, dir, route->trip_starts[k]});
        avail[static_cast<std::size_t>(v)] =
            route->trip_starts[k] +
            static_cast<std::int64_t>(std::ceil(route->duration_s())) +
            cfg.turnaround_s;
        heading_dir[static_cast<std::size_t>(v)] = 1 - dir;
        progress = true;
        break;
      }
    }
  }

  const LatencyModel latency =
      LatencyModel::make(cfg.latency_mode_s, cfg.latency_max_s, cfg.latency_bin_s);
  const std::int64_t poll = cfg.poll_period_s;
  const std::int64_t day_end = cfg.day_start_s + cfg.day_length_s;
  const std::int64_t lead_s = 600;

  SimResult out;
  for (int v = 0; v < n_vehicles; ++v) {
    const std::string vehicle_id =
        "L" + std::to_string(v / cfg.n_vehicles_per_line) + "V" +
        std::to_string(v % cfg.n_vehicles_per_line);
    Rng delay_rng(mix_seed(mix_seed(cfg.seed, kDelayStream),
                           static_cast<std::uint64_t>(v)));
    Rng latency_rng(mix_seed(mix_seed(cfg.seed, kLatencyStream),
                             static_cast<std::uint64_t>(v)));
    Rng noise_rng(mix_seed(mix_seed(cfg.seed, kNoiseStream),
                           static_cast<std::uint64_t>(v)));

    std::vector<Capture> captures;
    std::int64_t last_emit_t = cfg.day_start_s - lead_s - poll;
    for (const TripAssignment& trip : plans[static_cast<std::size_t>(v)]) {
      const Route* route = tt.find(trip.line, std::to_string(trip.direction));
      const double duration = route->duration_s();
      const DelayRegime& start_regime = regime_at(cfg, trip.trip_start);
      double d = start_regime.mean_s +
                 start_regime.stationary_std() * delay_rng.normal();
      d = std::clamp(d, start_regime.mean_s - 500.0, start_regime.mean_s + 500.0);

      std::int64_t t0 = trip.trip_start - lead_s;
      t0 = cfg.day_start_s +
           ((t0 - cfg.day_start_s) / poll) * poll;  // align to the tick grid
      t0 = std::max(t0, last_emit_t + poll);
      double s_prev = -std::numeric_limits<double>::infinity();
      const std::int64_t hard_stop =
          trip.trip_start + static_cast<std::int64_t>(duration) + 3600;
      for (std::int64_t t = t0; t <= hard_stop; t += poll) {
        if (t > t0) {
          const DelayRegime& reg = regime_at(cfg, t);
          d += reg.reversion * (reg.mean_s - d) + reg.noise_s * delay_rng.normal();
        }
        const double elapsed = static_cast<double>(t - trip.trip_start);
        // Vehicles never back up: a delay jump holds the position instead.
        const double s = std::max(s_prev, elapsed - d);
        if (s >= duration) break;
        if (s > 0.0) {
          Capture c;
          c.t = t;
          c.true_pos = route->pos_at_progress(route->progress_at_elapsed(s));
          c.pos = c.true_pos;
          if (cfg.gps_noise_m > 0.0) {
            const double coslat = std::cos(c.true_pos.lat * kPi / 180.0);
            c.pos.lat += cfg.gps_noise_m * noise_rng.normal() / kMetersPerDegree;
            c.pos.lon += cfg.gps_noise_m * noise_rng.normal() /
                         (kMetersPerDegree * coslat);
          }
          c.delay_s = elapsed - s;
          c.line = trip.line;
          c.direction = trip.direction;
          captures.push_back(std::move(c));
          last_emit_t = t;
        }
        s_prev = s;
      }
    }
    out.stats.captures += static_cast<std::int64_t>(captures.size());

    for (const Capture& c : captures) {
      out.truth.entries.push_back(
          GroundTruthEntry{vehicle_id, c.t, c.true_pos, c.delay_s});
    }

    // Poll loop. Every tick serves the captures that just arrived plus a
    // repeat of the newest known one, so consumers see the same capture
    // many times until a fresher one lands.
    struct Arrival {
      std::int64_t t_arr;
      std::size_t idx;
    };
    std::vector<Arrival> arrivals;
    arrivals.reserve(captures.size());
    for (std::size_t ci = 0; ci < captures.size(); ++ci) {
      arrivals.push_back(Arrival{captures[ci].t + latency.sample(latency_rng), ci});
    }
    std::stable_sort(arrivals.begin(), arrivals.end(),
                     [](const Arrival& a, const Arrival& b) {
                       return std::tie(a.t_arr, a.idx) < std::tie(b.t_arr, b.idx);
                     });
    const std::int64_t drain_end = day_end + latency.max_value() + poll;
    std::size_t next_arrival = 0;
    bool have_newest = false;
    std::size_t newest = 0;
    for (std::int64_t tick = cfg.day_start_s; tick <= drain_end; tick += poll) {
      bool newest_served = false;
      std::vector<std::size_t> fresh;
      while (next_arrival < arrivals.size() &&
             arrivals[next_arrival].t_arr <= tick) {
        fresh.push_back(arrivals[next_arrival].idx);
        ++next_arrival;
      }
      std::sort(fresh.begin(), fresh.end());
      for (std::size_t ci : fresh) {
        if (!have_newest || captures[ci].t > captures[newest].t) {
          have_newest = true;
          newest = ci;
        }
      }
      for (std::size_t ci : fresh) {
        const Capture& c = captures[ci];
        out.raw.push_back(LocationRecord{vehicle_id, c.line,
                                         std::to_string(c.direction), c.t, tick,
                                         c.pos.lat, c.pos.lon});
        if (ci == newest) newest_served = true;
      }
      // Repeat service is a latency artifact: the backend keeps listing a
      // stale position only because fresher ones are still in flight. An
      // ideal zero-latency channel therefore injects no repeats.
      if (have_newest && !newest_served && latency.max_value() > 0) {
        const Capture& c = captures[newest];
        out.raw.push_back(LocationRecord{vehicle_id, c.line,
                                         std::to_string(c.direction), c.t, tick,
                                         c.pos.lat, c.pos.lon});
      }
    }
  }

  out.stats.raw_records = static_cast<std::int64_t>(out.raw.size());
  std::sort(out.raw.begin(), out.raw.end(),
            [](const LocationRecord& a, const LocationRecord& b) {
              return std::tie(a.t_r, a.vehicle_id, a.t_c) <
                     std::tie(b.t_r, b.vehicle_id, b.t_c);
            });
  std::sort(out.truth.entries.begin(), out.truth.entries.end(),
            [](const GroundTruthEntry& a, const GroundTruthEntry& b) {
              return std::tie(a.vehicle_id, a.t) < std::tie(b.vehicle_id, b.t);
            });
  return out;
}

void write_truth_jsonl(const std::string& path, const GroundTruth& gt) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write truth file: " + path);
  for (const auto& e : gt.entries) {
    nlohmann::ordered_json j;
    j["vehicle_id"] = e.vehicle_id;
    j["t"] = e.t;
    j["lat"] = e.pos.lat;
    j["lon"] = e.pos.lon;
    j["delay_s"] = e.delay_s;
    out << j.dump() << '\n';
  }
}

}  // namespace delaycast
