#include "delaycast/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace delaycast {

std::vector<double> cumulative_accuracy(const RunTrace& trace) {
  if (trace.verdicts.empty()) throw InputError("empty trace");
  std::vector<double> out;
  out.reserve(trace.verdicts.size());
  std::int64_t correct = 0;
  std::int64_t seen = 0;
  for (const auto& v : trace.verdicts) {
    ++seen;
    if (v.pred == v.truth) ++correct;
    out.push_back(100.0 * static_cast<double>(correct) /
                  static_cast<double>(seen));
  }
  return out;
}

Report make_report(const RunTrace& trace, const std::string& stream_id,
                   const std::string& method, const std::string& config_hash,
                   std::uint64_t seed) {
  trace.validate();
  Report r;
  r.stream_id = stream_id;
  r.method = method;
  r.config_hash = config_hash;
  r.seed = seed;
  r.first_index = trace.first_index;
  r.accuracy = cumulative_accuracy(trace);
  for (std::int64_t cp : kCheckpoints) {
    const std::int64_t j = cp - trace.first_index;
    if (j >= 0 && j < static_cast<std::int64_t>(r.accuracy.size())) {
      r.checkpoints.emplace_back(r.accuracy[static_cast<std::size_t>(j)]);
    } else {
      r.checkpoints.emplace_back(std::nullopt);
    }
  }
  r.sources.reserve(trace.verdicts.size());
  for (const auto& v : trace.verdicts) {
    r.sources.push_back(v.source);
    r.confusion[static_cast<std::size_t>(encode_label(v.truth))]
               [static_cast<std::size_t>(encode_label(v.pred))] += 1;
  }
  return r;
}

std::string format_accuracy(const std::optional<double>& a) {
  if (!a) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", *a);
  return buf;
}

CheckpointTable checkpoint_table(const std::vector<Report>& reports) {
  if (reports.empty()) throw InputError("no reports to tabulate");
  for (const auto& r : reports) {
    if (r.checkpoints.size() != kCheckpoints.size()) {
      throw InputError("report '" + r.method + "' has a mismatched checkpoint grid");
    }
  }
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"stream", "method"};
  for (std::int64_t cp : kCheckpoints) header.push_back(std::to_string(cp));
  rows.push_back(header);
  for (const auto& r : reports) {
    std::vector<std::string> row{r.stream_id, r.method};
    for (const auto& c : r.checkpoints) row.push_back(format_accuracy(c));
    rows.push_back(std::move(row));
  }

  CheckpointTable out;
  std::ostringstream csv;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) csv << ',';
      csv << row[i];
    }
    csv << '\n';
  }
  out.csv = csv.str();

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      width[i] = std::max(width[i], row[i].size());
    }
  }
  std::ostringstream text;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) text << "  ";
      text << row[i];
      for (std::size_t pad = row[i].size(); pad < width[i]; ++pad) text << ' ';
    }
    text << '\n';
  }
  out.text = text.str();
  return out;
}

void write_curve_csv(const std::string& path, const Report& report) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write curve file: " + path);
  out << "i,A,c\n";
  for (std::size_t j = 0; j < report.accuracy.size(); ++j) {
    out << (report.first_index + static_cast<std::int64_t>(j)) << ','
        << format_accuracy(report.accuracy[j]) << ',' << report.sources[j]
        << '\n';
  }
}

std::string report_to_json(const Report& report) {
  nlohmann::ordered_json j;
  j["format"] = "delaycast-report";
  j["version"] = 1;
  j["stream_id"] = report.stream_id;
  j["method"] = report.method;
  j["config_hash"] = report.config_hash;
  j["seed"] = report.seed;
  j["first_index"] = report.first_index;
  j["instances"] = report.accuracy.size();
  j["final_accuracy"] =
      report.accuracy.empty() ? nlohmann::ordered_json(nullptr)
                              : nlohmann::ordered_json(report.accuracy.back());
  nlohmann::ordered_json cps = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < kCheckpoints.size(); ++k) {
    cps[std::to_string(kCheckpoints[k])] =
        report.checkpoints[k] ? nlohmann::ordered_json(*report.checkpoints[k])
                              : nlohmann::ordered_json(nullptr);
  }
  j["checkpoints"] = std::move(cps);
  nlohmann::ordered_json conf = nlohmann::ordered_json::array();
  for (int truth = 0; truth < kNumLabels; ++truth) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int pred = 0; pred < kNumLabels; ++pred) {
      row.push_back(report.confusion[static_cast<std::size_t>(truth)]
                                    [static_cast<std::size_t>(pred)]);
    }
    conf.push_back(std::move(row));
  }
  j["confusion"] = std::move(conf);
  std::int64_t switches = 0;
  for (std::size_t k = 1; k < report.sources.size(); ++k) {
    if (report.sources[k] != report.sources[k - 1]) ++switches;
  }
  j["source_switches"] = switches;
  return j.dump(2);
}

void save_report(const std::string& path, const Report& report) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write report file: " + path);
  out << report_to_json(report) << '\n';
}

std::vector<Report> feature_comparison(const std::vector<WindowedInstance>& stream,
                                       const std::vector<FeatureSelector>& selectors,
                                       const CSaNNConfig& cfg,
                                       const std::string& stream_id,
                                       const std::string& config_hash) {
  std::vector<Report> out;
  for (const FeatureSelector& sel : selectors) {
    CSaNNConfig c = cfg;
    c.selector = sel;
    const RunTrace trace = run_prequential(stream, RunMethod::ht, c);
    out.push_back(make_report(trace, stream_id, std::string("ht-") + sel.name(),
                              config_hash, 0));
  }
  return out;
}

}  // namespace delaycast
