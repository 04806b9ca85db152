#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "delaycast/config.hpp"
#include "delaycast/csann.hpp"
#include "delaycast/fusion.hpp"
#include "delaycast/report.hpp"
#include "delaycast/stream_core.hpp"
#include "delaycast/synth.hpp"

namespace fs = std::filesystem;
using namespace delaycast;

namespace {

std::string fmt(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw InvariantError("double formatting failed");
  return std::string(buf, end);
}

const std::vector<std::string> kSynthKeys{
    "seed", "n_lines", "n_vehicles_per_line", "n_stops", "stop_spacing_m",
    "nominal_speed_kmh", "headway_s", "day_start_s", "day_length_s",
    "turnaround_s", "poll_period_s", "latency_mode_s", "latency_max_s",
    "latency_bin_s", "gps_noise_m", "delay_mean_s", "delay_reversion",
    "delay_noise_s", "drift_events"};

const std::vector<std::string> kFusionKeys{
    "max_speed_kmh", "jitter_m", "status_threshold_s", "moving_threshold_m",
    "max_route_distance_m", "window_k", "step_s", "horizon_s"};

const std::vector<std::string> kRunKeys{
    "method", "selector", "N", "L", "ht_delta", "ht_grace_period", "ht_tau",
    "ht_leaf_prediction", "ht_numeric_bins", "mlp_hidden_neurons",
    "mlp_learning_rate", "mlp_epochs", "mlp_seed", "mlp_l2", "mlp_batch_size"};

std::vector<std::string> all_keys() {
  std::vector<std::string> keys = kSynthKeys;
  keys.insert(keys.end(), kFusionKeys.begin(), kFusionKeys.end());
  keys.insert(keys.end(), kRunKeys.begin(), kRunKeys.end());
  return keys;
}

// Defaults for a command, already stringified so the manifest shows every
// resolved value.
ConfigMap synth_defaults() {
  const SynthConfig c;
  ConfigMap m;
  m.set("seed", std::to_string(c.seed));
  m.set("n_lines", std::to_string(c.n_lines));
  m.set("n_vehicles_per_line", std::to_string(c.n_vehicles_per_line));
  m.set("n_stops", std::to_string(c.n_stops));
  m.set("stop_spacing_m", fmt(c.stop_spacing_m));
  m.set("nominal_speed_kmh", fmt(c.nominal_speed_kmh));
  m.set("headway_s", std::to_string(c.headway_s));
  m.set("day_start_s", std::to_string(c.day_start_s));
  m.set("day_length_s", std::to_string(c.day_length_s));
  m.set("turnaround_s", std::to_string(c.turnaround_s));
  m.set("poll_period_s", std::to_string(c.poll_period_s));
  m.set("latency_mode_s", std::to_string(c.latency_mode_s));
  m.set("latency_max_s", std::to_string(c.latency_max_s));
  m.set("latency_bin_s", std::to_string(c.latency_bin_s));
  m.set("gps_noise_m", fmt(c.gps_noise_m));
  m.set("delay_mean_s", fmt(c.regime.mean_s));
  m.set("delay_reversion", fmt(c.regime.reversion));
  m.set("delay_noise_s", fmt(c.regime.noise_s));
  m.set("drift_events", "");
  return m;
}

ConfigMap fusion_defaults() {
  const FusionConfig c;
  ConfigMap m;
  m.set("max_speed_kmh", fmt(c.max_speed_kmh));
  m.set("jitter_m", fmt(c.jitter_m));
  m.set("status_threshold_s", fmt(c.status_threshold_s));
  m.set("moving_threshold_m", fmt(c.moving_threshold_m));
  m.set("max_route_distance_m", fmt(c.max_route_distance_m));
  m.set("window_k", std::to_string(c.window_k));
  m.set("step_s", std::to_string(c.step_s));
  m.set("horizon_s", std::to_string(c.horizon_s));
  return m;
}

ConfigMap run_defaults() {
  const CSaNNConfig c;
  ConfigMap m;
  m.set("method", "csann");
  m.set("selector", c.selector.name());
  m.set("N", std::to_string(c.N));
  m.set("L", std::to_string(c.L));
  m.set("ht_delta", fmt(c.ht_cfg.delta));
  m.set("ht_grace_period", std::to_string(c.ht_cfg.grace_period));
  m.set("ht_tau", fmt(c.ht_cfg.tau));
  m.set("ht_leaf_prediction",
        c.ht_cfg.leaf_prediction == LeafPrediction::majority_class
            ? "majority_class"
            : "naive_bayes");
  m.set("ht_numeric_bins", std::to_string(c.ht_cfg.numeric_bins));
  m.set("mlp_hidden_neurons", std::to_string(c.mlp_cfg.hidden_neurons));
  m.set("mlp_learning_rate", fmt(c.mlp_cfg.learning_rate));
  m.set("mlp_epochs", std::to_string(c.mlp_cfg.epochs));
  m.set("mlp_seed", std::to_string(c.mlp_cfg.seed));
  m.set("mlp_l2", fmt(c.mlp_cfg.l2));
  m.set("mlp_batch_size", std::to_string(c.mlp_cfg.batch_size));
  return m;
}

// Overlays the config file on the defaults, keeping only keys the command
// understands; the file itself may hold keys for the other commands too.
void overlay_file(ConfigMap& resolved, const std::string& config_path,
                  const std::vector<std::string>& command_keys) {
  if (config_path.empty()) return;
  const ConfigMap file = ConfigMap::parse_file(config_path);
  file.restrict_keys(all_keys());
  for (const auto& key : command_keys) {
    if (file.has(key)) resolved.set(key, file.get_string(key, ""));
  }
}

std::vector<DriftEvent> parse_drift_events(const std::string& text) {
  std::vector<DriftEvent> out;
  if (text.empty()) return out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(';', start);
    if (end == std::string::npos) end = text.size();
    const std::string item = text.substr(start, end - start);
    std::vector<std::string> parts;
    std::size_t s = 0;
    while (s <= item.size()) {
      std::size_t e = item.find(':', s);
      if (e == std::string::npos) e = item.size();
      parts.push_back(item.substr(s, e - s));
      s = e + 1;
    }
    if (parts.size() != 4) {
      throw InputError("drift event '" + item +
                       "': expected at:mean:reversion:noise");
    }
    DriftEvent ev;
    const auto num = [&](const std::string& v, const char* what) {
      double d = 0.0;
      auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
      if (ec != std::errc{} || p != v.data() + v.size()) {
        throw InputError(std::string("drift event: bad ") + what + " '" + v + "'");
      }
      return d;
    };
    ev.at_s = static_cast<std::int64_t>(num(parts[0], "time"));
    ev.regime.mean_s = num(parts[1], "mean");
    ev.regime.reversion = num(parts[2], "reversion");
    ev.regime.noise_s = num(parts[3], "noise");
    out.push_back(ev);
    start = end + 1;
  }
  return out;
}

SynthConfig build_synth_config(const ConfigMap& m) {
  SynthConfig c;
  c.seed = m.get_u64("seed", c.seed);
  c.n_lines = static_cast<int>(m.get_int("n_lines", c.n_lines));
  c.n_vehicles_per_line =
      static_cast<int>(m.get_int("n_vehicles_per_line", c.n_vehicles_per_line));
  c.n_stops = static_cast<int>(m.get_int("n_stops", c.n_stops));
  c.stop_spacing_m = m.get_double("stop_spacing_m", c.stop_spacing_m);
  c.nominal_speed_kmh = m.get_double("nominal_speed_kmh", c.nominal_speed_kmh);
  c.headway_s = m.get_int("headway_s", c.headway_s);
  c.day_start_s = m.get_int("day_start_s", c.day_start_s);
  c.day_length_s = m.get_int("day_length_s", c.day_length_s);
  c.turnaround_s = m.get_int("turnaround_s", c.turnaround_s);
  c.poll_period_s = m.get_int("poll_period_s", c.poll_period_s);
  c.latency_mode_s = m.get_int("latency_mode_s", c.latency_mode_s);
  c.latency_max_s = m.get_int("latency_max_s", c.latency_max_s);
  c.latency_bin_s = m.get_int("latency_bin_s", c.latency_bin_s);
  c.gps_noise_m = m.get_double("gps_noise_m", c.gps_noise_m);
  c.regime.mean_s = m.get_double("delay_mean_s", c.regime.mean_s);
  c.regime.reversion = m.get_double("delay_reversion", c.regime.reversion);
  c.regime.noise_s = m.get_double("delay_noise_s", c.regime.noise_s);
  c.drift_events = parse_drift_events(m.get_string("drift_events", ""));
  c.validate();
  return c;
}

FusionConfig build_fusion_config(const ConfigMap& m) {
  FusionConfig c;
  c.max_speed_kmh = m.get_double("max_speed_kmh", c.max_speed_kmh);
  c.jitter_m = m.get_double("jitter_m", c.jitter_m);
  c.status_threshold_s = m.get_double("status_threshold_s", c.status_threshold_s);
  c.moving_threshold_m = m.get_double("moving_threshold_m", c.moving_threshold_m);
  c.max_route_distance_m =
      m.get_double("max_route_distance_m", c.max_route_distance_m);
  c.window_k = static_cast<int>(m.get_int("window_k", c.window_k));
  c.step_s = m.get_int("step_s", c.step_s);
  c.horizon_s = m.get_int("horizon_s", c.horizon_s);
  c.validate();
  return c;
}

CSaNNConfig build_csann_config(const ConfigMap& m) {
  CSaNNConfig c;
  c.N = m.get_int("N", c.N);
  c.L = m.get_int("L", c.L);
  c.selector = FeatureSelector::parse(m.get_string("selector", c.selector.name()));
  c.ht_cfg.delta = m.get_double("ht_delta", c.ht_cfg.delta);
  c.ht_cfg.grace_period =
      static_cast<int>(m.get_int("ht_grace_period", c.ht_cfg.grace_period));
  c.ht_cfg.tau = m.get_double("ht_tau", c.ht_cfg.tau);
  const std::string leaf = m.get_string("ht_leaf_prediction", "majority_class");
  if (leaf == "majority_class") {
    c.ht_cfg.leaf_prediction = LeafPrediction::majority_class;
  } else if (leaf == "naive_bayes") {
    c.ht_cfg.leaf_prediction = LeafPrediction::naive_bayes;
  } else {
    throw InputError("ht_leaf_prediction must be majority_class or naive_bayes");
  }
  c.ht_cfg.numeric_bins =
      static_cast<int>(m.get_int("ht_numeric_bins", c.ht_cfg.numeric_bins));
  c.mlp_cfg.hidden_neurons =
      static_cast<int>(m.get_int("mlp_hidden_neurons", c.mlp_cfg.hidden_neurons));
  c.mlp_cfg.learning_rate = m.get_double("mlp_learning_rate", c.mlp_cfg.learning_rate);
  c.mlp_cfg.epochs = static_cast<int>(m.get_int("mlp_epochs", c.mlp_cfg.epochs));
  c.mlp_cfg.seed = m.get_u64("mlp_seed", c.mlp_cfg.seed);
  c.mlp_cfg.l2 = m.get_double("mlp_l2", c.mlp_cfg.l2);
  c.mlp_cfg.batch_size =
      static_cast<int>(m.get_int("mlp_batch_size", c.mlp_cfg.batch_size));
  c.validate();
  return c;
}

std::string default_manifest_path(const std::string& primary_output) {
  return primary_output + ".manifest.json";
}

std::vector<std::pair<std::string, std::string>> hash_inputs(
    const std::vector<std::string>& paths) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& p : paths) {
    if (!p.empty()) out.emplace_back(p, hex64(hash_file(p)));
  }
  return out;
}

struct GenerateArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_raw = "raw.csv";
  std::string out_timetable = "timetable.json";
  std::string out_truth;
  std::string manifest;
};

int cmd_generate(const GenerateArgs& a, const std::vector<std::string>& argv) {
  ConfigMap resolved = synth_defaults();
  overlay_file(resolved, a.config_path, kSynthKeys);
  if (a.seed_set) resolved.set("seed", std::to_string(a.seed));
  const SynthConfig cfg = build_synth_config(resolved);

  const Timetable tt = generate_network(cfg);
  const SimResult sim = simulate_day(cfg, tt);
  write_raw_records(a.out_raw, sim.raw);
  save_timetable(a.out_timetable, tt);
  std::vector<std::string> outputs{a.out_raw, a.out_timetable};
  if (!a.out_truth.empty()) {
    write_truth_jsonl(a.out_truth, sim.truth);
    outputs.push_back(a.out_truth);
  }
  const std::string manifest =
      a.manifest.empty() ? default_manifest_path(a.out_raw) : a.manifest;
  write_manifest(manifest, "generate", argv, resolved,
                 hash_inputs({a.config_path}), outputs);

  std::cout << "routes: " << tt.routes.size() << "\n";
  std::int64_t trips = 0;
  for (const auto& r : tt.routes) trips += static_cast<std::int64_t>(r.trip_starts.size());
  std::cout << "scheduled trips: " << trips << "\n";
  std::cout << "captures: " << sim.stats.captures << "\n";
  std::cout << "raw records: " << sim.stats.raw_records << "\n";
  std::cout << "wrote " << a.out_raw << ", " << a.out_timetable << "\n";
  return 0;
}

struct FuseArgs {
  std::string raw_path;
  std::string timetable_path;
  std::string config_path;
  std::string out_windows = "windows.jsonl";
  std::string out_enriched;
  std::string manifest;
};

int cmd_fuse(const FuseArgs& a, const std::vector<std::string>& argv) {
  ConfigMap resolved = fusion_defaults();
  overlay_file(resolved, a.config_path, kFusionKeys);
  const FusionConfig cfg = build_fusion_config(resolved);

  const std::vector<LocationRecord> raw = read_raw_records(a.raw_path);
  const Timetable tt = load_timetable(a.timetable_path);
  const DedupResult dedup = deduplicate(raw);
  const std::vector<LocationRecord> clean = denoise(dedup.records, cfg);
  const EnrichResult enriched = enrich(clean, tt, cfg);
  const WindowResult windows = build_windows(enriched.instances, cfg);

  write_windows_jsonl(a.out_windows, windows.windows);
  std::vector<std::string> outputs{a.out_windows};
  if (!a.out_enriched.empty()) {
    write_enriched_jsonl(a.out_enriched, enriched.instances);
    outputs.push_back(a.out_enriched);
  }
  const std::string manifest =
      a.manifest.empty() ? default_manifest_path(a.out_windows) : a.manifest;
  write_manifest(manifest, "fuse", argv, resolved,
                 hash_inputs({a.raw_path, a.timetable_path, a.config_path}),
                 outputs);

  std::cout << "raw records: " << raw.size() << "\n";
  std::cout << "duplicates removed: " << dedup.removed << "\n";
  std::cout << "dropped (unknown route): " << enriched.dropped_unknown_route << "\n";
  std::cout << "dropped (off route): " << enriched.dropped_far_from_route << "\n";
  std::cout << "enriched instances: " << enriched.instances.size() << "\n";
  std::cout << "incomplete windows skipped: " << windows.incomplete << "\n";
  std::cout << "windows: " << windows.windows.size() << "\n";
  std::cout << "wrote " << a.out_windows << "\n";
  return 0;
}

struct RunArgs {
  std::string windows_path;
  std::string config_path;
  std::string method;
  std::string selector;
  std::int64_t N = 0;
  bool n_set = false;
  std::int64_t L = 0;
  bool l_set = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_trace = "trace.jsonl";
  std::string manifest;
};

int cmd_run(const RunArgs& a, const std::vector<std::string>& argv) {
  ConfigMap resolved = run_defaults();
  overlay_file(resolved, a.config_path, kRunKeys);
  if (!a.method.empty()) resolved.set("method", a.method);
  if (!a.selector.empty()) resolved.set("selector", a.selector);
  if (a.n_set) resolved.set("N", std::to_string(a.N));
  if (a.l_set) resolved.set("L", std::to_string(a.L));
  if (a.seed_set) resolved.set("mlp_seed", std::to_string(a.seed));

  const RunMethod method = parse_method(resolved.get_string("method", "csann"));
  const CSaNNConfig cfg = build_csann_config(resolved);
  const std::vector<WindowedInstance> stream = read_windows_jsonl(a.windows_path);

  const RunTrace trace = run_prequential(stream, method, cfg);
  write_trace_jsonl(a.out_trace, trace);
  const std::string manifest =
      a.manifest.empty() ? default_manifest_path(a.out_trace) : a.manifest;
  write_manifest(manifest, "run", argv, resolved,
                 hash_inputs({a.windows_path, a.config_path}), {a.out_trace});

  const std::vector<double> acc = cumulative_accuracy(trace);
  std::int64_t switches = 0;
  for (std::size_t i = 1; i < trace.verdicts.size(); ++i) {
    if (trace.verdicts[i].source != trace.verdicts[i - 1].source) ++switches;
  }
  std::cout << "method: " << method_name(method) << "\n";
  std::cout << "instances: " << stream.size() << "\n";
  std::cout << "trace: " << trace.verdicts.size() << " verdicts from i="
            << trace.first_index << "\n";
  std::cout << "final cumulative accuracy: " << format_accuracy(acc.back())
            << "\n";
  std::cout << "source switches: " << switches << "\n";
  std::cout << "wrote " << a.out_trace << "\n";
  return 0;
}

struct ReportArgs {
  std::vector<std::string> traces;
  std::string stream_id = "stream";
  std::string out_dir = ".";
  std::string manifest;
};

int cmd_report(const ReportArgs& a, const std::vector<std::string>& argv) {
  if (a.traces.empty()) throw InputError("report needs at least one --trace");
  fs::create_directories(a.out_dir);
  std::vector<Report> reports;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  for (const auto& arg : a.traces) {
    std::string label;
    std::string path;
    const std::size_t eq = arg.find('=');
    if (eq == std::string::npos) {
      path = arg;
      label = fs::path(arg).stem().string();
    } else {
      label = arg.substr(0, eq);
      path = arg.substr(eq + 1);
    }
    if (label.empty() || path.empty()) {
      throw InputError("bad --trace '" + arg + "': expected [label=]path");
    }
    const RunTrace trace = read_trace_jsonl(path);
    reports.push_back(
        make_report(trace, a.stream_id, label, hex64(hash_file(path)), 0));
    inputs.push_back(path);
    const std::string curve = (fs::path(a.out_dir) / (label + "-curve.csv")).string();
    const std::string rep = (fs::path(a.out_dir) / (label + "-report.json")).string();
    write_curve_csv(curve, reports.back());
    save_report(rep, reports.back());
    outputs.push_back(curve);
    outputs.push_back(rep);
  }
  const CheckpointTable table = checkpoint_table(reports);
  const std::string csv_path = (fs::path(a.out_dir) / "checkpoints.csv").string();
  const std::string txt_path = (fs::path(a.out_dir) / "checkpoints.txt").string();
  {
    std::ofstream csv(csv_path);
    if (!csv) throw InputError("cannot write " + csv_path);
    csv << table.csv;
    std::ofstream txt(txt_path);
    if (!txt) throw InputError("cannot write " + txt_path);
    txt << table.text;
  }
  outputs.push_back(csv_path);
  outputs.push_back(txt_path);

  ConfigMap resolved;
  resolved.set("stream_id", a.stream_id);
  const std::string manifest =
      a.manifest.empty() ? (fs::path(a.out_dir) / "report.manifest.json").string()
                         : a.manifest;
  write_manifest(manifest, "report", argv, resolved, hash_inputs(inputs), outputs);

  std::cout << table.text;
  return 0;
}

struct CompareArgs {
  std::string windows_path;
  std::string config_path;
  std::string selectors = "all,coords,delays";
  std::string stream_id = "stream";
  std::string out_dir = ".";
  std::string manifest;
};

int cmd_compare(const CompareArgs& a, const std::vector<std::string>& argv) {
  ConfigMap resolved = run_defaults();
  overlay_file(resolved, a.config_path, kRunKeys);
  const CSaNNConfig cfg = build_csann_config(resolved);

  std::vector<FeatureSelector> selectors;
  std::size_t start = 0;
  while (start <= a.selectors.size()) {
    std::size_t end = a.selectors.find(',', start);
    if (end == std::string::npos) end = a.selectors.size();
    const std::string name = a.selectors.substr(start, end - start);
    if (!name.empty()) selectors.push_back(FeatureSelector::parse(name));
    start = end + 1;
  }
  if (selectors.empty()) throw InputError("no selectors given");

  const std::vector<WindowedInstance> stream = read_windows_jsonl(a.windows_path);
  fs::create_directories(a.out_dir);
  const std::vector<Report> reports = feature_comparison(
      stream, selectors, cfg, a.stream_id, resolved.hash_hex());

  std::vector<std::string> outputs;
  for (const auto& r : reports) {
    const std::string curve =
        (fs::path(a.out_dir) / (r.method + "-curve.csv")).string();
    const std::string rep =
        (fs::path(a.out_dir) / (r.method + "-report.json")).string();
    write_curve_csv(curve, r);
    save_report(rep, r);
    outputs.push_back(curve);
    outputs.push_back(rep);
  }
  const CheckpointTable table = checkpoint_table(reports);
  const std::string csv_path =
      (fs::path(a.out_dir) / "feature-checkpoints.csv").string();
  const std::string txt_path =
      (fs::path(a.out_dir) / "feature-checkpoints.txt").string();
  {
    std::ofstream csv(csv_path);
    if (!csv) throw InputError("cannot write " + csv_path);
    csv << table.csv;
    std::ofstream txt(txt_path);
    if (!txt) throw InputError("cannot write " + txt_path);
    txt << table.text;
  }
  outputs.push_back(csv_path);
  outputs.push_back(txt_path);

  const std::string manifest =
      a.manifest.empty()
          ? (fs::path(a.out_dir) / "compare-features.manifest.json").string()
          : a.manifest;
  write_manifest(manifest, "compare-features", argv, resolved,
                 hash_inputs({a.windows_path, a.config_path}), outputs);

  std::cout << table.text;
  for (const auto& r : reports) {
    std::cout << r.method << " final accuracy: "
              << format_accuracy(r.accuracy.empty()
                                     ? std::optional<double>{}
                                     : std::optional<double>{r.accuracy.back()})
              << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> argv_copy(argv, argv + argc);

  CLI::App app{"delaycast: synthetic transit streams, data fusion, and "
               "online delay-status prediction"};
  app.require_subcommand(1);

  GenerateArgs gen;
  CLI::App* generate = app.add_subcommand(
      "generate", "Generate a synthetic day of raw location records");
  generate->add_option("--config", gen.config_path, "key = value config file");
  CLI::Option* gen_seed = generate->add_option("--seed", gen.seed, "master seed");
  generate->add_option("--out-raw", gen.out_raw,
                       "raw records output (.csv or .jsonl)");
  generate->add_option("--out-timetable", gen.out_timetable, "timetable output");
  generate->add_option("--out-truth", gen.out_truth,
                       "optional true per-capture delay output (.jsonl)");
  generate->add_option("--manifest", gen.manifest, "manifest path");

  FuseArgs fuse;
  CLI::App* fuse_cmd = app.add_subcommand(
      "fuse", "Raw records to enriched stream to windowed instances");
  fuse_cmd->add_option("--raw", fuse.raw_path, "raw records (.csv or .jsonl)")
      ->required();
  fuse_cmd->add_option("--timetable", fuse.timetable_path, "timetable JSON")
      ->required();
  fuse_cmd->add_option("--config", fuse.config_path, "key = value config file");
  fuse_cmd->add_option("--out-windows", fuse.out_windows, "windowed instances output");
  fuse_cmd->add_option("--out-enriched", fuse.out_enriched,
                       "optional enriched stream output");
  fuse_cmd->add_option("--manifest", fuse.manifest, "manifest path");

  RunArgs run;
  CLI::App* run_cmd =
      app.add_subcommand("run", "Prequential run over a windowed stream");
  run_cmd->add_option("--windows", run.windows_path, "windowed instances (.jsonl)")
      ->required();
  run_cmd->add_option("--method", run.method, "ht, mlp, or csann")
      ->check(CLI::IsMember({"ht", "mlp", "csann"}));
  run_cmd->add_option("--selector", run.selector, "all, coords, or delays")
      ->check(CLI::IsMember({"all", "coords", "delays"}));
  CLI::Option* run_n = run_cmd->add_option("--N", run.N, "training prefix size");
  CLI::Option* run_l = run_cmd->add_option("--L", run.L, "accuracy window size");
  CLI::Option* run_seed =
      run_cmd->add_option("--seed", run.seed, "network training seed");
  run_cmd->add_option("--config", run.config_path, "key = value config file");
  run_cmd->add_option("--out-trace", run.out_trace, "verdict trace output");
  run_cmd->add_option("--manifest", run.manifest, "manifest path");

  ReportArgs rep;
  CLI::App* report_cmd =
      app.add_subcommand("report", "Tables and curves from stored traces");
  report_cmd->add_option("--trace", rep.traces,
                         "trace file, optionally label=path; repeatable");
  report_cmd->add_option("--stream-id", rep.stream_id, "stream column value");
  report_cmd->add_option("--out-dir", rep.out_dir, "output directory");
  report_cmd->add_option("--manifest", rep.manifest, "manifest path");

  CompareArgs cmp;
  CLI::App* compare_cmd = app.add_subcommand(
      "compare-features", "Run the tree once per feature selector");
  compare_cmd->add_option("--windows", cmp.windows_path, "windowed instances (.jsonl)")
      ->required();
  compare_cmd->add_option("--selectors", cmp.selectors,
                          "comma list from all, coords, delays");
  compare_cmd->add_option("--config", cmp.config_path, "key = value config file");
  compare_cmd->add_option("--stream-id", cmp.stream_id, "stream column value");
  compare_cmd->add_option("--out-dir", cmp.out_dir, "output directory");
  compare_cmd->add_option("--manifest", cmp.manifest, "manifest path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (generate->parsed()) {
      gen.seed_set = gen_seed->count() > 0;
      return cmd_generate(gen, argv_copy);
    }
    if (fuse_cmd->parsed()) return cmd_fuse(fuse, argv_copy);
    if (run_cmd->parsed()) {
      run.n_set = run_n->count() > 0;
      run.l_set = run_l->count() > 0;
      run.seed_set = run_seed->count() > 0;
      return cmd_run(run, argv_copy);
    }
    if (report_cmd->parsed()) return cmd_report(rep, argv_copy);
    if (compare_cmd->parsed()) return cmd_compare(cmp, argv_copy);
    throw InputError("no command given");
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InvariantError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
