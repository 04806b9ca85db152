#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "delaycast/stream_core.hpp"

namespace delaycast {

// One raw position report as served by the vehicle-location API. The same
// capture can be served many times with increasing receive stamps.
struct LocationRecord {
  std::string vehicle_id;
  std::string line;
  std::string direction;
  std::int64_t t_c = 0;  // capture time, Unix seconds
  std::int64_t t_r = 0;  // receive time, Unix seconds; never before t_c
  double lat = 0.0;
  double lon = 0.0;

  void validate() const;  // throws InputError
};

double haversine_m(const LatLon& a, const LatLon& b);

struct Stop {
  LatLon pos;
  double offset_s = 0.0;  // scheduled seconds from trip start
};

// A directed route: the stop sequence doubles as the polyline. Scheduled
// offsets increase strictly along the trip; every listed trip uses the same
// offsets shifted by its start time.
struct Route {
  std::string line;
  std::string direction;
  std::vector<Stop> stops;
  std::vector<std::int64_t> trip_starts;  // ascending, at least one

  void finalize();  // derives cum_m, validates; throws InputError
  double length_m() const { return cum_m.back(); }
  double duration_s() const { return stops.back().offset_s; }

  LatLon pos_at_progress(double m) const;
  // Scheduled route progress after the given seconds into a trip; clamped
  // to the endpoints outside [0, duration].
  double progress_at_elapsed(double s) const;
  double elapsed_at_progress(double m) const;

  struct Projection {
    double progress_m = 0.0;
    double distance_m = 0.0;
  };
  // Nearest point of the polyline; ties keep the earliest progress.
  Projection project(const LatLon& p) const;

  std::vector<double> cum_m;  // cumulative polyline meters per stop

 private:
  double lat0_ = 0.0;  // anchor of the local planar frame
  double lon0_ = 0.0;
  double coslat0_ = 1.0;
  void to_xy(const LatLon& p, double& x, double& y) const;
};

struct Timetable {
  std::vector<Route> routes;

  const Route* find(std::string_view line, std::string_view direction) const;
};

enum class MovementStatus { stationary, moving };
const char* movement_name(MovementStatus m);
MovementStatus movement_from_name(std::string_view name);  // throws InputError

// One element of the enriched stream: a cleaned position with its schedule
// deviation and derived statuses.
struct EnrichedInstance {
  std::string vehicle_id;
  std::string line;
  std::string direction;
  std::int64_t t_c = 0;
  std::int64_t t_r = 0;
  LatLon pos;
  MovementStatus movement = MovementStatus::stationary;
  double delay_seconds = 0.0;  // positive = behind schedule
  DelayLabel delay_status = DelayLabel::on_time;
};

struct FusionConfig {
  double max_speed_kmh = 90.0;         // speed gate for position spikes
  double jitter_m = 15.0;              // stationary snap radius
  double status_threshold_s = 60.0;    // |delay| band that still counts as on time
  double moving_threshold_m = 25.0;    // displacement over one step that means moving
  double max_route_distance_m = 200.0; // beyond this the record is off-route
  int window_k = 5;                    // steps preceding the anchor
  std::int64_t step_s = 60;            // slot spacing
  std::int64_t horizon_s = 300;        // label lead time

  void validate() const;  // throws InputError
};

// Thresholds a signed schedule deviation into the three-class status.
DelayLabel status_of_delay(double delay_seconds, double threshold_s);

struct DedupResult {
  std::vector<LocationRecord> records;  // ordered by (vehicle_id, t_c)
  std::int64_t removed = 0;
};

// Keeps the first received copy of every (vehicle_id, t_c). Input must be
// ordered by t_r.
DedupResult deduplicate(const std::vector<LocationRecord>& raw);

// Cleans coordinates per vehicle: a point implying a speed above the gate
// is replaced by the previous accepted position, and sub-jitter wobble is
// snapped onto it. Input ordered by (vehicle_id, t_c).
std::vector<LocationRecord> denoise(std::vector<LocationRecord> records,
                                    const FusionConfig& cfg);

struct DelayResult {
  double delay_seconds = 0.0;
  DelayLabel delay_status = DelayLabel::on_time;
  double route_distance_m = 0.0;
};

// Schedule deviation of a position at t_c against one trip of a route.
// Empty when the position is farther than max_route_distance_m off-route.
std::optional<DelayResult> compute_delay(const Route& r, std::int64_t trip_start,
                                         const LatLon& pos, std::int64_t t_c,
                                         const FusionConfig& cfg);

// The trip whose schedule the position deviates least from, by |delay|;
// ties go to the earlier start.
std::int64_t assign_trip(const Route& r, const LatLon& pos, std::int64_t t_c);

struct EnrichResult {
  std::vector<EnrichedInstance> instances;  // ordered by (vehicle_id, t_c)
  std::int64_t dropped_unknown_route = 0;
  std::int64_t dropped_far_from_route = 0;
};

// Timetable integration: assigns a trip per (vehicle, direction) run at its
// first usable record and keeps it until the direction changes; computes
// delay, delay status, and movement status per record. Off-route and
// unknown-route records are dropped and counted.
EnrichResult enrich(const std::vector<LocationRecord>& records,
                    const Timetable& tt, const FusionConfig& cfg);

struct WindowResult {
  std::vector<WindowedInstance> windows;  // ordered by (t, vehicle_id, direction)
  std::int64_t incomplete = 0;
};

// Assembles lag windows: an instance is emitted for every enriched sample
// that has a sample within half a step of each of the K preceding slots and
// of the label slot one horizon ahead, all inside one (vehicle, direction)
// run. Incomplete anchors are skipped and counted.
WindowResult build_windows(const std::vector<EnrichedInstance>& u,
                           const FusionConfig& cfg);

// Raw record files. CSV header is exactly:
// vehicle_id,line,direction,t_c,t_r,lat,lon
std::vector<LocationRecord> read_raw_csv(const std::string& path);
void write_raw_csv(const std::string& path,
                   const std::vector<LocationRecord>& records);
std::string record_to_json(const LocationRecord& r);
LocationRecord record_from_json(const std::string& line);
std::vector<LocationRecord> read_raw_jsonl(const std::string& path);
void write_raw_jsonl(const std::string& path,
                     const std::vector<LocationRecord>& records);
// Dispatch on the file extension: .csv or .jsonl.
std::vector<LocationRecord> read_raw_records(const std::string& path);
void write_raw_records(const std::string& path,
                       const std::vector<LocationRecord>& records);

std::string timetable_to_json(const Timetable& tt);
Timetable timetable_from_json(const std::string& text);
void save_timetable(const std::string& path, const Timetable& tt);
Timetable load_timetable(const std::string& path);

std::string enriched_to_json(const EnrichedInstance& e);
EnrichedInstance enriched_from_json(const std::string& line);
std::vector<EnrichedInstance> read_enriched_jsonl(const std::string& path);
void write_enriched_jsonl(const std::string& path,
                          const std::vector<EnrichedInstance>& instances);

}  // namespace delaycast
