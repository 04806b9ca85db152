#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "delaycast/csann.hpp"

namespace delaycast {

// Instance indices at which cumulative accuracy is tabulated.
inline constexpr std::array<std::int64_t, 7> kCheckpoints{1000, 2000, 3000,
                                                          4000, 5000, 6000,
                                                          8000};

struct Report {
  std::string stream_id;
  std::string method;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::int64_t first_index = 1;
  // accuracy[j] is A at instance first_index + j, in percent. For a trace
  // that starts past instance 1 the average runs from first_index only.
  std::vector<double> accuracy;
  std::vector<std::optional<double>> checkpoints;  // aligned with kCheckpoints
  std::vector<int> sources;                        // chosen model per instance
  std::array<std::array<std::int64_t, 3>, 3> confusion{};  // [truth][pred]
};

// Cumulative accuracy per instance. Counts stay integral; the percentage is
// formed fresh at every index, never by accumulating floats.
std::vector<double> cumulative_accuracy(const RunTrace& trace);

Report make_report(const RunTrace& trace, const std::string& stream_id,
                   const std::string& method, const std::string& config_hash,
                   std::uint64_t seed);

// Fixed-point rendering used by every table: two decimals, or "-" when the
// value is absent.
std::string format_accuracy(const std::optional<double>& a);

struct CheckpointTable {
  std::string csv;
  std::string text;  // aligned columns
};

// One row per report: stream, method, then A at each checkpoint.
CheckpointTable checkpoint_table(const std::vector<Report>& reports);

// Per-instance curve, CSV columns: i, A, c.
void write_curve_csv(const std::string& path, const Report& report);

std::string report_to_json(const Report& report);
void save_report(const std::string& path, const Report& report);

// Runs the incremental tree once per selector over the same instance
// sequence and reports each run.
std::vector<Report> feature_comparison(const std::vector<WindowedInstance>& stream,
                                       const std::vector<FeatureSelector>& selectors,
                                       const CSaNNConfig& cfg,
                                       const std::string& stream_id,
                                       const std::string& config_hash);

}  // namespace delaycast
