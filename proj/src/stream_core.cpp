#include "delaycast/stream_core.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace delaycast {

int encode_label(DelayLabel l) { return static_cast<int>(l); }

DelayLabel decode_label(int index) {
  if (index < 0 || index >= kNumLabels) {
    throw InputError("label index out of range: " + std::to_string(index));
  }
  return static_cast<DelayLabel>(index);
}

const char* label_name(DelayLabel l) {
  switch (l) {
    case DelayLabel::before_time: return "before_time";
    case DelayLabel::on_time: return "on_time";
    case DelayLabel::delayed: return "delayed";
  }
  throw InvariantError("corrupt DelayLabel value");
}

DelayLabel label_from_name(std::string_view name) {
  if (name == "before_time") return DelayLabel::before_time;
  if (name == "on_time") return DelayLabel::on_time;
  if (name == "delayed") return DelayLabel::delayed;
  throw InputError("unknown label name: " + std::string(name));
}

int WindowedInstance::window_k() const {
  return static_cast<int>(coords.size()) - 1;
}

void WindowedInstance::validate() const {
  if (vehicle_id.empty()) throw InputError("window with empty vehicle_id");
  const std::size_t steps = coords.size();
  if (steps == 0) throw InputError("window has zero steps");
  if (delays.size() != steps || statuses.size() != steps) {
    throw InputError("window blocks disagree on length: coords=" +
                     std::to_string(coords.size()) + " delays=" +
                     std::to_string(delays.size()) + " statuses=" +
                     std::to_string(statuses.size()));
  }
  for (const auto& c : coords) {
    if (!std::isfinite(c.lat) || !std::isfinite(c.lon)) {
      throw InputError("non-finite coordinate in window");
    }
  }
  for (double d : delays) {
    if (!std::isfinite(d)) throw InputError("non-finite delay in window");
  }
}

int FeatureSelector::arity(int k) const {
  const int steps = k + 1;
  switch (mode) {
    case SelectorMode::all: return 3 * steps;
    case SelectorMode::coords_only: return 2 * steps;
    case SelectorMode::delays_only: return steps;
  }
  throw InvariantError("corrupt SelectorMode value");
}

const char* FeatureSelector::name() const {
  switch (mode) {
    case SelectorMode::all: return "all";
    case SelectorMode::coords_only: return "coords";
    case SelectorMode::delays_only: return "delays";
  }
  throw InvariantError("corrupt SelectorMode value");
}

FeatureSelector FeatureSelector::parse(std::string_view name) {
  if (name == "all") return {SelectorMode::all};
  if (name == "coords") return {SelectorMode::coords_only};
  if (name == "delays") return {SelectorMode::delays_only};
  throw InputError("unknown feature selector: " + std::string(name));
}

DelayLabel argmax_label(const std::array<double, 3>& scores) {
  int arg = 0;
  for (int c = 1; c < 3; ++c) {
    if (scores[static_cast<std::size_t>(c)] >
        scores[static_cast<std::size_t>(arg)]) {
      arg = c;
    }
  }
  return decode_label(arg);
}

FeatureVector select_features(const WindowedInstance& w, FeatureSelector sel) {
  w.validate();
  FeatureVector fv;
  fv.values.reserve(static_cast<std::size_t>(sel.arity(w.window_k())));
  if (sel.mode != SelectorMode::delays_only) {
    for (const auto& c : w.coords) {
      fv.values.push_back(c.lat);
      fv.values.push_back(c.lon);
    }
  }
  if (sel.mode != SelectorMode::coords_only) {
    fv.values.insert(fv.values.end(), w.delays.begin(), w.delays.end());
  }
  return fv;
}

std::string window_to_json(const WindowedInstance& w) {
  nlohmann::ordered_json j;
  j["vehicle_id"] = w.vehicle_id;
  j["direction"] = w.direction;
  j["t"] = w.t;
  auto coords = nlohmann::ordered_json::array();
  for (const auto& c : w.coords) coords.push_back({c.lat, c.lon});
  j["coords"] = std::move(coords);
  j["delays"] = w.delays;
  auto statuses = nlohmann::ordered_json::array();
  for (DelayLabel s : w.statuses) statuses.push_back(label_name(s));
  j["statuses"] = std::move(statuses);
  j["label"] = label_name(w.label);
  return j.dump();
}

WindowedInstance window_from_json(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("bad window JSON: ") + e.what());
  }
  WindowedInstance w;
  try {
    w.vehicle_id = j.at("vehicle_id").get<std::string>();
    w.direction = j.at("direction").get<std::string>();
    w.t = j.at("t").get<std::int64_t>();
    for (const auto& c : j.at("coords")) {
      w.coords.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
    }
    w.delays = j.at("delays").get<std::vector<double>>();
    for (const auto& s : j.at("statuses")) {
      w.statuses.push_back(label_from_name(s.get<std::string>()));
    }
    w.label = label_from_name(j.at("label").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad window JSON: ") + e.what());
  }
  w.validate();
  return w;
}

std::vector<WindowedInstance> read_windows_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open windows file: " + path);
  std::vector<WindowedInstance> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(window_from_json(line));
  }
  return out;
}

void write_windows_jsonl(const std::string& path,
                         const std::vector<WindowedInstance>& windows) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write windows file: " + path);
  for (const auto& w : windows) out << window_to_json(w) << '\n';
}

}  // namespace delaycast
