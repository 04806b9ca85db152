#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace delaycast {

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);
std::uint64_t hash_file(const std::string& path);  // throws InputError

// Flat "key = value" configuration. '#' starts a comment, blank lines are
// skipped, later assignments win. Entries sort by key, which fixes the dump
// and therefore the hash.
class ConfigMap {
 public:
  static ConfigMap parse_text(const std::string& text);
  static ConfigMap parse_file(const std::string& path);

  void set(const std::string& key, std::string value);
  bool has(const std::string& key) const;
  // Overlays every entry of overrides on top of this map.
  void merge_from(const ConfigMap& overrides);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;

  // Rejects any present key outside the allowed set.
  void restrict_keys(const std::vector<std::string>& allowed) const;

  std::string dump() const;      // canonical "key = value" lines
  std::string hash_hex() const;  // fnv1a64 of dump()
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

// Reproducibility record written next to a command's outputs: the argv, the
// fully resolved configuration and its hash, and a content hash per input.
void write_manifest(const std::string& path, const std::string& command,
                    const std::vector<std::string>& argv,
                    const ConfigMap& resolved,
                    const std::vector<std::pair<std::string, std::string>>& inputs,
                    const std::vector<std::string>& outputs);

}  // namespace delaycast
