#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace delaycast {

// Bad input data or arguments; the CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A broken internal contract; the CLI maps this to exit code 3.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Three-class delay status. The order is fixed: it defines the integer
// encoding used everywhere (model outputs, JSON, confusion matrices).
enum class DelayLabel : int { before_time = 0, on_time = 1, delayed = 2 };

inline constexpr int kNumLabels = 3;

int encode_label(DelayLabel l);
DelayLabel decode_label(int index);  // throws InputError outside {0,1,2}

const char* label_name(DelayLabel l);
DelayLabel label_from_name(std::string_view name);  // throws InputError

struct LatLon {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees
  bool operator==(const LatLon&) const = default;
};

// One element of the windowed stream: K+1 time steps of position and delay
// for a single (vehicle, direction) run, plus the ground-truth label that
// becomes known horizon seconds after t.
struct WindowedInstance {
  std::string vehicle_id;
  std::string direction;
  std::int64_t t = 0;  // Unix seconds of the newest step
  std::vector<LatLon> coords;        // oldest -> newest, K+1 entries
  std::vector<double> delays;        // seconds, positive = behind schedule
  std::vector<DelayLabel> statuses;  // thresholded delays, K+1 entries
  DelayLabel label = DelayLabel::on_time;

  int window_k() const;    // K, i.e. steps - 1
  void validate() const;   // throws InputError on empty id, length, finiteness
};

struct FeatureVector {
  std::vector<double> values;
  std::size_t arity() const { return values.size(); }
};

// A classifier verdict: hard label plus normalized class scores.
struct Prediction {
  DelayLabel label = DelayLabel::before_time;
  std::array<double, 3> scores{0.0, 0.0, 0.0};
};

// Argmax with ties broken toward the lowest label index.
DelayLabel argmax_label(const std::array<double, 3>& scores);

enum class SelectorMode { all, coords_only, delays_only };

// Chooses which blocks of a WindowedInstance become model features.
struct FeatureSelector {
  SelectorMode mode = SelectorMode::delays_only;

  // Arity is a pure function of (mode, K).
  int arity(int k) const;
  const char* name() const;
  static FeatureSelector parse(std::string_view name);  // "all"|"coords"|"delays"
};

// Flattens a window into a feature vector. Ordering is fixed: coordinates
// first (lat,lon per step, oldest->newest), then delays (oldest->newest).
FeatureVector select_features(const WindowedInstance& w, FeatureSelector sel);

// JSON-lines serialization. One object per line, fields:
// vehicle_id, direction, t, coords ([[lat,lon],...]), delays, statuses, label.
std::string window_to_json(const WindowedInstance& w);
WindowedInstance window_from_json(const std::string& line);

std::vector<WindowedInstance> read_windows_jsonl(const std::string& path);
void write_windows_jsonl(const std::string& path,
                         const std::vector<WindowedInstance>& windows);

}  // namespace delaycast
