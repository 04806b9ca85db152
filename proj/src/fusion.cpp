#include "delaycast/fusion.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace delaycast {

namespace {

constexpr double kEarthRadiusM = 6371000.0;
constexpr double kPi = 3.14159265358979323846;
constexpr double kMetersPerDegree = kEarthRadiusM * kPi / 180.0;

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw InvariantError("double formatting failed");
  return std::string(buf, end);
}

double parse_double(std::string_view s, const char* what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw InputError(std::string("bad ") + what + ": '" + std::string(s) + "'");
  }
  return v;
}

std::int64_t parse_int(std::string_view s, const char* what) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw InputError(std::string("bad ") + what + ": '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

void LocationRecord::validate() const {
  if (vehicle_id.empty()) throw InputError("record with empty vehicle_id");
  if (t_r < t_c) {
    throw InputError("record received before capture: vehicle " + vehicle_id +
                     " t_c=" + std::to_string(t_c) + " t_r=" + std::to_string(t_r));
  }
  if (!std::isfinite(lat) || !std::isfinite(lon)) {
    throw InputError("non-finite coordinates for vehicle " + vehicle_id);
  }
  if (std::abs(lat) > 90.0 || std::abs(lon) > 180.0) {
    throw InputError("coordinates out of range for vehicle " + vehicle_id);
  }
}

double haversine_m(const LatLon& a, const LatLon& b) {
  const double phi1 = a.lat * kPi / 180.0;
  const double phi2 = b.lat * kPi / 180.0;
  const double dphi = phi2 - phi1;
  const double dlam = (b.lon - a.lon) * kPi / 180.0;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlam / 2.0);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

void Route::finalize() {
  if (line.empty() || direction.empty()) {
    throw InputError("route with empty line or direction");
  }
  if (stops.size() < 2) {
    throw InputError("route " + line + "/" + direction + " needs at least 2 stops");
  }
  if (trip_starts.empty()) {
    throw InputError("route " + line + "/" + direction + " lists no trips");
  }
  if (!std::is_sorted(trip_starts.begin(), trip_starts.end())) {
    throw InputError("route " + line + "/" + direction + " trips out of order");
  }
  lat0_ = stops.front().pos.lat;
  lon0_ = stops.front().pos.lon;
  coslat0_ = std::cos(lat0_ * kPi / 180.0);
  cum_m.assign(stops.size(), 0.0);
  for (std::size_t i = 0; i + 1 < stops.size(); ++i) {
    if (!(stops[i + 1].offset_s > stops[i].offset_s)) {
      throw InputError("route " + line + "/" + direction +
                       " offsets not strictly increasing");
    }
    double ax, ay, bx, by;
    to_xy(stops[i].pos, ax, ay);
    to_xy(stops[i + 1].pos, bx, by);
    const double seg = std::hypot(bx - ax, by - ay);
    if (!(seg > 0.0)) {
      throw InputError("route " + line + "/" + direction +
                       " has coincident consecutive stops");
    }
    cum_m[i + 1] = cum_m[i] + seg;
  }
}

void Route::to_xy(const LatLon& p, double& x, double& y) const {
  x = (p.lon - lon0_) * coslat0_ * kMetersPerDegree;
  y = (p.lat - lat0_) * kMetersPerDegree;
}

LatLon Route::pos_at_progress(double m) const {
  m = std::clamp(m, 0.0, length_m());
  std::size_t i = static_cast<std::size_t>(
      std::upper_bound(cum_m.begin(), cum_m.end(), m) - cum_m.begin());
  if (i == 0) i = 1;
  if (i >= cum_m.size()) i = cum_m.size() - 1;
  const double f = (m - cum_m[i - 1]) / (cum_m[i] - cum_m[i - 1]);
  const LatLon& a = stops[i - 1].pos;
  const LatLon& b = stops[i].pos;
  return LatLon{a.lat + f * (b.lat - a.lat), a.lon + f * (b.lon - a.lon)};
}

double Route::progress_at_elapsed(double s) const {
  s = std::clamp(s, stops.front().offset_s, stops.back().offset_s);
  std::size_t i = 1;
  while (i + 1 < stops.size() && stops[i].offset_s < s) ++i;
  const double o0 = stops[i - 1].offset_s;
  const double o1 = stops[i].offset_s;
  const double f = (s - o0) / (o1 - o0);
  return cum_m[i - 1] + f * (cum_m[i] - cum_m[i - 1]);
}

double Route::elapsed_at_progress(double m) const {
  m = std::clamp(m, 0.0, length_m());
  std::size_t i = 1;
  while (i + 1 < stops.size() && cum_m[i] < m) ++i;
  const double f = (m - cum_m[i - 1]) / (cum_m[i] - cum_m[i - 1]);
  return stops[i - 1].offset_s + f * (stops[i].offset_s - stops[i - 1].offset_s);
}

Route::Projection Route::project(const LatLon& p) const {
  double px, py;
  to_xy(p, px, py);
  Projection best;
  best.distance_m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < stops.size(); ++i) {
    double ax, ay, bx, by;
    to_xy(stops[i].pos, ax, ay);
    to_xy(stops[i + 1].pos, bx, by);
    const double dx = bx - ax;
    const double dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double f = ((px - ax) * dx + (py - ay) * dy) / len2;
    f = std::clamp(f, 0.0, 1.0);
    const double qx = ax + f * dx;
    const double qy = ay + f * dy;
    const double d = std::hypot(px - qx, py - qy);
    if (d < best.distance_m) {
      best.distance_m = d;
      best.progress_m = cum_m[i] + f * std::sqrt(len2);
    }
  }
  return best;
}

const Route* Timetable::find(std::string_view line, std::string_view direction) const {
  for (const auto& r : routes) {
    if (r.line == line && r.direction == direction) return &r;
  }
  return nullptr;
}

const char* movement_name(MovementStatus m) {
  return m == MovementStatus::moving ? "moving" : "stationary";
}

MovementStatus movement_from_name(std::string_view name) {
  if (name == "moving") return MovementStatus::moving;
  if (name == "stationary") return MovementStatus::stationary;
  throw InputError("unknown movement status '" + std::string(name) + "'");
}

void FusionConfig::validate() const {
  if (!(max_speed_kmh > 0)) throw InputError("max_speed_kmh must be > 0");
  if (jitter_m < 0) throw InputError("jitter_m must be >= 0");
  if (!(status_threshold_s > 0)) throw InputError("status_threshold_s must be > 0");
  if (moving_threshold_m < 0) throw InputError("moving_threshold_m must be >= 0");
  if (!(max_route_distance_m > 0)) throw InputError("max_route_distance_m must be > 0");
  if (window_k < 1) throw InputError("window_k must be >= 1");
  if (step_s < 1) throw InputError("step_s must be >= 1");
  if (horizon_s < 1) throw InputError("horizon_s must be >= 1");
}

DelayLabel status_of_delay(double delay_seconds, double threshold_s) {
  if (delay_seconds > threshold_s) return DelayLabel::delayed;
  if (delay_seconds < -threshold_s) return DelayLabel::before_time;
  return DelayLabel::on_time;
}

DedupResult deduplicate(const std::vector<LocationRecord>& raw) {
  DedupResult out;
  std::set<std::pair<std::string, std::int64_t>> seen;
  for (const auto& r : raw) {
    if (seen.insert({r.vehicle_id, r.t_c}).second) {
      out.records.push_back(r);
    } else {
      ++out.removed;
    }
  }
  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const LocationRecord& a, const LocationRecord& b) {
                     return std::tie(a.vehicle_id, a.t_c) <
                            std::tie(b.vehicle_id, b.t_c);
                   });
  return out;
}

std::vector<LocationRecord> denoise(std::vector<LocationRecord> records,
                                    const FusionConfig& cfg) {
  const double vmax_ms = cfg.max_speed_kmh / 3.6;
  std::size_t i = 0;
  while (i < records.size()) {
    std::size_t j = i;
    while (j < records.size() && records[j].vehicle_id == records[i].vehicle_id) ++j;
    // [i, j) is one vehicle. The first point anchors; afterwards a point
    // survives only if it is a plausible move: beyond the jitter radius and
    // below the speed gate relative to the last surviving point.
    LatLon good{records[i].lat, records[i].lon};
    std::int64_t good_t = records[i].t_c;
    for (std::size_t k = i + 1; k < j; ++k) {
      const LatLon cur{records[k].lat, records[k].lon};
      const double d = haversine_m(good, cur);
      const double dt = static_cast<double>(records[k].t_c - good_t);
      const bool spike = dt <= 0.0 || d / dt > vmax_ms;
      if (spike || d < cfg.jitter_m) {
        records[k].lat = good.lat;
        records[k].lon = good.lon;
      } else {
        good = cur;
        good_t = records[k].t_c;
      }
    }
    i = j;
  }
  return records;
}

std::optional<DelayResult> compute_delay(const Route& r, std::int64_t trip_start,
                                         const LatLon& pos, std::int64_t t_c,
                                         const FusionConfig& cfg) {
  const Route::Projection proj = r.project(pos);
  if (proj.distance_m > cfg.max_route_distance_m) return std::nullopt;
  const double elapsed = r.elapsed_at_progress(proj.progress_m);
  DelayResult out;
  out.delay_seconds = static_cast<double>(t_c - trip_start) - elapsed;
  out.delay_status = status_of_delay(out.delay_seconds, cfg.status_threshold_s);
  out.route_distance_m = proj.distance_m;
  return out;
}

std::int64_t assign_trip(const Route& r, const LatLon& pos, std::int64_t t_c) {
  const double elapsed = r.elapsed_at_progress(r.project(pos).progress_m);
  std::int64_t best = r.trip_starts.front();
  double best_abs = std::numeric_limits<double>::infinity();
  for (std::int64_t ts : r.trip_starts) {
    const double dev = std::abs(static_cast<double>(t_c - ts) - elapsed);
    if (dev < best_abs) {
      best_abs = dev;
      best = ts;
    }
  }
  return best;
}

EnrichResult enrich(const std::vector<LocationRecord>& records,
                    const Timetable& tt, const FusionConfig& cfg) {
  cfg.validate();
  EnrichResult out;
  std::size_t i = 0;
  while (i < records.size()) {
    // One (vehicle, line, direction) run: consecutive records of a vehicle
    // until any of the three identifiers changes.
    std::size_t j = i;
    while (j < records.size() && records[j].vehicle_id == records[i].vehicle_id &&
           records[j].line == records[i].line &&
           records[j].direction == records[i].direction) {
      ++j;
    }
    const Route* route = tt.find(records[i].line, records[i].direction);
    if (route == nullptr) {
      out.dropped_unknown_route += static_cast<std::int64_t>(j - i);
      i = j;
      continue;
    }
    std::optional<std::int64_t> trip;
    std::vector<std::pair<std::int64_t, LatLon>> emitted;  // (t_c, pos) in run
    for (std::size_t k = i; k < j; ++k) {
      const LocationRecord& rec = records[k];
      const LatLon pos{rec.lat, rec.lon};
      const Route::Projection proj = route->project(pos);
      if (proj.distance_m > cfg.max_route_distance_m) {
        ++out.dropped_far_from_route;
        continue;
      }
      const double elapsed = route->elapsed_at_progress(proj.progress_m);
      if (!trip) trip = assign_trip(*route, pos, rec.t_c);
      EnrichedInstance e;
      e.vehicle_id = rec.vehicle_id;
      e.line = rec.line;
      e.direction = rec.direction;
      e.t_c = rec.t_c;
      e.t_r = rec.t_r;
      e.pos = pos;
      e.delay_seconds = static_cast<double>(rec.t_c - *trip) - elapsed;
      e.delay_status = status_of_delay(e.delay_seconds, cfg.status_threshold_s);
      e.movement = MovementStatus::stationary;
      for (auto it = emitted.rbegin(); it != emitted.rend(); ++it) {
        if (it->first <= rec.t_c - cfg.step_s) {
          if (haversine_m(it->second, pos) > cfg.moving_threshold_m) {
            e.movement = MovementStatus::moving;
          }
          break;
        }
      }
      emitted.emplace_back(rec.t_c, pos);
      out.instances.push_back(std::move(e));
    }
    i = j;
  }
  return out;
}

namespace {

// Index of the run sample nearest to the slot time, if within half a step.
// Equidistant neighbours resolve to the earlier sample.
std::optional<std::size_t> find_slot(const std::vector<EnrichedInstance>& run,
                                     std::size_t lo, std::size_t hi,
                                     std::int64_t slot, std::int64_t step) {
  auto begin = run.begin() + static_cast<std::ptrdiff_t>(lo);
  auto end = run.begin() + static_cast<std::ptrdiff_t>(hi);
  auto it = std::lower_bound(begin, end, slot,
                             [](const EnrichedInstance& e, std::int64_t t) {
                               return e.t_c < t;
                             });
  std::optional<std::size_t> best;
  std::int64_t best_diff = 0;
  if (it != begin) {
    best = static_cast<std::size_t>(it - run.begin()) - 1;
    best_diff = slot - run[*best].t_c;
  }
  if (it != end) {
    const std::int64_t diff = run[static_cast<std::size_t>(it - run.begin())].t_c - slot;
    if (!best || diff < best_diff) {
      best = static_cast<std::size_t>(it - run.begin());
      best_diff = diff;
    }
  }
  if (!best || 2 * best_diff > step) return std::nullopt;
  return best;
}

}  // namespace

WindowResult build_windows(const std::vector<EnrichedInstance>& u,
                           const FusionConfig& cfg) {
  cfg.validate();
  WindowResult out;
  const int K = cfg.window_k;
  std::size_t i = 0;
  while (i < u.size()) {
    std::size_t j = i;
    while (j < u.size() && u[j].vehicle_id == u[i].vehicle_id &&
           u[j].line == u[i].line && u[j].direction == u[i].direction) {
      ++j;
    }
    for (std::size_t a = i; a < j; ++a) {
      const std::int64_t t = u[a].t_c;
      std::vector<std::size_t> picks;
      picks.reserve(static_cast<std::size_t>(K) + 2);
      bool complete = true;
      for (int k = K; k >= 1 && complete; --k) {
        auto idx = find_slot(u, i, j, t - k * cfg.step_s, cfg.step_s);
        if (idx) picks.push_back(*idx); else complete = false;
      }
      auto label_idx = find_slot(u, i, j, t + cfg.horizon_s, cfg.step_s);
      if (!complete || !label_idx) {
        ++out.incomplete;
        continue;
      }
      picks.push_back(a);
      WindowedInstance w;
      w.vehicle_id = u[a].vehicle_id;
      w.direction = u[a].direction;
      w.t = t;
      for (std::size_t p : picks) {
        w.coords.push_back(u[p].pos);
        w.delays.push_back(u[p].delay_seconds);
        w.statuses.push_back(u[p].delay_status);
      }
      w.label = u[*label_idx].delay_status;
      w.validate();
      out.windows.push_back(std::move(w));
    }
    i = j;
  }
  std::sort(out.windows.begin(), out.windows.end(),
            [](const WindowedInstance& a, const WindowedInstance& b) {
              return std::tie(a.t, a.vehicle_id, a.direction) <
                     std::tie(b.t, b.vehicle_id, b.direction);
            });
  return out;
}

std::vector<LocationRecord> read_raw_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open raw file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty raw file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "vehicle_id,line,direction,t_c,t_r,lat,lon") {
    throw InputError("unexpected raw CSV header: '" + line + "'");
  }
  std::vector<LocationRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view sv(line);
    std::size_t start = 0;
    for (std::size_t p = 0; p <= sv.size(); ++p) {
      if (p == sv.size() || sv[p] == ',') {
        f.push_back(sv.substr(start, p - start));
        start = p + 1;
      }
    }
    if (f.size() != 7) {
      throw InputError("raw CSV line " + std::to_string(lineno) + ": expected 7 fields, got " +
                       std::to_string(f.size()));
    }
    LocationRecord r;
    r.vehicle_id = std::string(f[0]);
    r.line = std::string(f[1]);
    r.direction = std::string(f[2]);
    r.t_c = parse_int(f[3], "t_c");
    r.t_r = parse_int(f[4], "t_r");
    r.lat = parse_double(f[5], "lat");
    r.lon = parse_double(f[6], "lon");
    r.validate();
    out.push_back(std::move(r));
  }
  return out;
}

void write_raw_csv(const std::string& path,
                   const std::vector<LocationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write raw file: " + path);
  out << "vehicle_id,line,direction,t_c,t_r,lat,lon\n";
  for (const auto& r : records) {
    out << r.vehicle_id << ',' << r.line << ',' << r.direction << ',' << r.t_c
        << ',' << r.t_r << ',' << format_double(r.lat) << ','
        << format_double(r.lon) << '\n';
  }
}

std::string record_to_json(const LocationRecord& r) {
  nlohmann::ordered_json j;
  j["vehicle_id"] = r.vehicle_id;
  j["line"] = r.line;
  j["direction"] = r.direction;
  j["t_c"] = r.t_c;
  j["t_r"] = r.t_r;
  j["lat"] = r.lat;
  j["lon"] = r.lon;
  return j.dump();
}

LocationRecord record_from_json(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("bad record line: ") + e.what());
  }
  LocationRecord r;
  try {
    r.vehicle_id = j.at("vehicle_id").get<std::string>();
    r.line = j.at("line").get<std::string>();
    r.direction = j.at("direction").get<std::string>();
    r.t_c = j.at("t_c").get<std::int64_t>();
    r.t_r = j.at("t_r").get<std::int64_t>();
    r.lat = j.at("lat").get<double>();
    r.lon = j.at("lon").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad record line: ") + e.what());
  }
  r.validate();
  return r;
}

std::vector<LocationRecord> read_raw_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open raw file: " + path);
  std::vector<LocationRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(record_from_json(line));
  }
  return out;
}

void write_raw_jsonl(const std::string& path,
                     const std::vector<LocationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write raw file: " + path);
  for (const auto& r : records) out << record_to_json(r) << '\n';
}

std::vector<LocationRecord> read_raw_records(const std::string& path) {
  if (path.ends_with(".csv")) return read_raw_csv(path);
  if (path.ends_with(".jsonl")) return read_raw_jsonl(path);
  throw InputError("raw file must end in .csv or .jsonl: " + path);
}

void write_raw_records(const std::string& path,
                       const std::vector<LocationRecord>& records) {
  if (path.ends_with(".csv")) return write_raw_csv(path, records);
  if (path.ends_with(".jsonl")) return write_raw_jsonl(path, records);
  throw InputError("raw file must end in .csv or .jsonl: " + path);
}

std::string timetable_to_json(const Timetable& tt) {
  nlohmann::ordered_json routes = nlohmann::ordered_json::array();
  for (const auto& r : tt.routes) {
    nlohmann::ordered_json stops = nlohmann::ordered_json::array();
    for (const auto& s : r.stops) {
      stops.push_back({{"lat", s.pos.lat}, {"lon", s.pos.lon}, {"offset_s", s.offset_s}});
    }
    routes.push_back({{"line", r.line},
                      {"direction", r.direction},
                      {"stops", std::move(stops)},
                      {"trip_starts", r.trip_starts}});
  }
  nlohmann::ordered_json j;
  j["format"] = "delaycast-timetable";
  j["version"] = 1;
  j["routes"] = std::move(routes);
  return j.dump(2);
}

Timetable timetable_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("bad timetable JSON: ") + e.what());
  }
  Timetable tt;
  try {
    if (j.at("format").get<std::string>() != "delaycast-timetable") {
      throw InputError("not a timetable file");
    }
    for (const auto& rj : j.at("routes")) {
      Route r;
      r.line = rj.at("line").get<std::string>();
      r.direction = rj.at("direction").get<std::string>();
      for (const auto& sj : rj.at("stops")) {
        Stop s;
        s.pos.lat = sj.at("lat").get<double>();
        s.pos.lon = sj.at("lon").get<double>();
        s.offset_s = sj.at("offset_s").get<double>();
        r.stops.push_back(s);
      }
      r.trip_starts = rj.at("trip_starts").get<std::vector<std::int64_t>>();
      r.finalize();
      tt.routes.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad timetable JSON: ") + e.what());
  }
  return tt;
}

void save_timetable(const std::string& path, const Timetable& tt) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write timetable file: " + path);
  out << timetable_to_json(tt) << '\n';
}

Timetable load_timetable(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open timetable file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return timetable_from_json(ss.str());
}

std::string enriched_to_json(const EnrichedInstance& e) {
  nlohmann::ordered_json j;
  j["vehicle_id"] = e.vehicle_id;
  j["line"] = e.line;
  j["direction"] = e.direction;
  j["t_c"] = e.t_c;
  j["t_r"] = e.t_r;
  j["lat"] = e.pos.lat;
  j["lon"] = e.pos.lon;
  j["movement_status"] = movement_name(e.movement);
  j["delay_seconds"] = e.delay_seconds;
  j["delay_status"] = label_name(e.delay_status);
  return j.dump();
}

EnrichedInstance enriched_from_json(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("bad enriched line: ") + e.what());
  }
  EnrichedInstance e;
  try {
    e.vehicle_id = j.at("vehicle_id").get<std::string>();
    e.line = j.at("line").get<std::string>();
    e.direction = j.at("direction").get<std::string>();
    e.t_c = j.at("t_c").get<std::int64_t>();
    e.t_r = j.at("t_r").get<std::int64_t>();
    e.pos.lat = j.at("lat").get<double>();
    e.pos.lon = j.at("lon").get<double>();
    e.movement = movement_from_name(j.at("movement_status").get<std::string>());
    e.delay_seconds = j.at("delay_seconds").get<double>();
    e.delay_status = label_from_name(j.at("delay_status").get<std::string>());
  } catch (const nlohmann::json::exception& ex) {
    throw InputError(std::string("bad enriched line: ") + ex.what());
  }
  return e;
}

std::vector<EnrichedInstance> read_enriched_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open enriched file: " + path);
  std::vector<EnrichedInstance> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(enriched_from_json(line));
  }
  return out;
}

void write_enriched_jsonl(const std::string& path,
                          const std::vector<EnrichedInstance>& instances) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write enriched file: " + path);
  for (const auto& e : instances) out << enriched_to_json(e) << '\n';
}

}  // namespace delaycast
