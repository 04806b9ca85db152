#include "delaycast/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "delaycast/stream_core.hpp"
#include "json.hpp"

namespace delaycast {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '.';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file for hashing: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return fnv1a64(ss.str());
}

ConfigMap ConfigMap::parse_text(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line(raw);
    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InputError("config line " + std::to_string(lineno) +
                       ": expected 'key = value'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (!valid_key(key)) {
      throw InputError("config line " + std::to_string(lineno) + ": bad key '" +
                       std::string(key) + "'");
    }
    out.entries_[std::string(key)] = std::string(value);
  }
  return out;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

void ConfigMap::set(const std::string& key, std::string value) {
  if (!valid_key(key)) throw InputError("bad config key '" + key + "'");
  entries_[key] = std::move(value);
}

bool ConfigMap::has(const std::string& key) const {
  return entries_.count(key) != 0;
}

void ConfigMap::merge_from(const ConfigMap& overrides) {
  for (const auto& [k, v] : overrides.entries_) entries_[k] = v;
}

std::string ConfigMap::get_string(const std::string& key,
                                  const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

std::int64_t ConfigMap::get_int(const std::string& key,
                                std::int64_t fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::int64_t v = 0;
  const char* b = it->second.data();
  const char* e = b + it->second.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e) {
    throw InputError("config key '" + key + "': '" + it->second +
                     "' is not an integer");
  }
  return v;
}

std::uint64_t ConfigMap::get_u64(const std::string& key,
                                 std::uint64_t fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::uint64_t v = 0;
  const char* b = it->second.data();
  const char* e = b + it->second.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e) {
    throw InputError("config key '" + key + "': '" + it->second +
                     "' is not an unsigned integer");
  }
  return v;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  double v = 0.0;
  const char* b = it->second.data();
  const char* e = b + it->second.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e) {
    throw InputError("config key '" + key + "': '" + it->second +
                     "' is not a number");
  }
  return v;
}

void ConfigMap::restrict_keys(const std::vector<std::string>& allowed) const {
  for (const auto& [k, v] : entries_) {
    (void)v;
    bool ok = false;
    for (const auto& a : allowed) {
      if (k == a) {
        ok = true;
        break;
      }
    }
    if (!ok) throw InputError("unknown config key '" + k + "'");
  }
}

std::string ConfigMap::dump() const {
  std::ostringstream out;
  for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
  return out.str();
}

std::string ConfigMap::hash_hex() const { return hex64(fnv1a64(dump())); }

void write_manifest(const std::string& path, const std::string& command,
                    const std::vector<std::string>& argv,
                    const ConfigMap& resolved,
                    const std::vector<std::pair<std::string, std::string>>& inputs,
                    const std::vector<std::string>& outputs) {
  nlohmann::ordered_json j;
  j["format"] = "delaycast-manifest";
  j["version"] = 1;
  j["command"] = command;
  j["argv"] = argv;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : resolved.entries()) cfg[k] = v;
  j["config"] = std::move(cfg);
  j["config_hash"] = resolved.hash_hex();
  nlohmann::ordered_json ins = nlohmann::ordered_json::object();
  for (const auto& [p, h] : inputs) ins[p] = h;
  j["inputs"] = std::move(ins);
  j["outputs"] = outputs;
  std::ofstream out(path);
  if (!out) throw InputError("cannot write manifest: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace delaycast
