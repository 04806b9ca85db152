// Acceptance gate for the whole pipeline. Each numbered criterion prints one
// pass/fail line; the exit code is the number of failures. argv[1] names the
// CLI binary used by the end-to-end determinism check.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "delaycast/csann.hpp"
#include "delaycast/fusion.hpp"
#include "delaycast/hoeffding_tree.hpp"
#include "delaycast/mlp.hpp"
#include "delaycast/report.hpp"
#include "delaycast/rng.hpp"
#include "delaycast/synth.hpp"
#include "fusion_oracles.hpp"
#include "stream_fixtures.hpp"

namespace fs = std::filesystem;
using namespace delaycast;

namespace {

std::string g_cli_path;
int g_failures = 0;

void expect(bool cond, const std::string& what) {
  if (!cond) throw std::runtime_error(what);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void criterion(int num, const char* name, double budget_s,
               const std::function<void()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string err;
  try {
    body();
  } catch (const std::exception& e) {
    err = e.what();
  }
  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (err.empty() && dt > budget_s) {
    err = "exceeded the " + fmt(budget_s) + " s budget";
  }
  std::printf("%2d. %-56s %s  (%.2f s)\n", num, name,
              err.empty() ? "pass" : "FAIL", dt);
  if (!err.empty()) {
    std::printf("    %s\n", err.c_str());
    ++g_failures;
  }
  std::fflush(stdout);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  expect(in.good(), "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void run_cli(const std::string& args) {
  const std::string cmd = g_cli_path + " " + args + " > /dev/null";
  expect(std::system(cmd.c_str()) == 0, "command failed: " + cmd);
}

// ---- 1. Hoeffding bound ---------------------------------------------------

void check_hoeffding_bound() {
  expect(std::abs(hoeffding_bound(1.0, 0.05, 200) - 0.086541) <= 1e-6,
         "eps(1, 0.05, 200) = " + fmt(hoeffding_bound(1.0, 0.05, 200)));
  expect(hoeffding_bound(1.0, 1.0, 200) == 0.0, "delta = 1 must give 0");
  expect(hoeffding_bound(2.5, 1.0, 7) == 0.0, "delta = 1 must give 0");
  Rng rng(12);
  for (int k = 0; k < 1000; ++k) {
    const double r = rng.uniform(0.1, 4.0);
    const double delta = rng.uniform(1e-4, 0.9999);
    const std::int64_t n = 1 + rng.below(1000000);
    const double closed =
        std::sqrt(r * r * std::log(1.0 / delta) / (2.0 * static_cast<double>(n)));
    const double got = hoeffding_bound(r, delta, n);
    expect(std::abs(got - closed) <= 1e-12 * std::max(1.0, std::abs(closed)),
           "case " + std::to_string(k) + ": got " + fmt(got) + ", want " +
               fmt(closed));
  }
}

// ---- 2. MLP gradient vs finite differences --------------------------------

double fd_loss(MLPModel m, std::vector<double> MLPModel::* slot, std::size_t k,
               double h, std::span<const TrainingExample> batch) {
  (m.*slot)[k] += h;
  return mlp_loss(m, batch);
}

void check_gradients() {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(mix_seed(seed, 0xacce));
    TrainingSet train;
    for (int k = 0; k < 40; ++k) {
      FeatureVector x;
      for (int j = 0; j < 6; ++j) x.values.push_back(rng.uniform(-2.0, 2.0));
      train.emplace_back(std::move(x), decode_label(static_cast<int>(rng.below(3))));
    }
    MLPConfig cfg;
    cfg.seed = seed;
    cfg.epochs = 3;  // move the weights off their symmetric init
    const MLPModel m = mlp_train(train, cfg);

    const std::span<const TrainingExample> batch(train.data(), 10);
    const MLPGradient g = mlp_gradient(m, batch);
    const double h = 1e-5;
    double worst = 0.0;
    const std::array<std::pair<std::vector<double> MLPModel::*,
                               const std::vector<double> MLPGradient::*>,
                     4>
        slots{{{&MLPModel::w1, &MLPGradient::w1},
               {&MLPModel::b1, &MLPGradient::b1},
               {&MLPModel::w2, &MLPGradient::w2},
               {&MLPModel::b2, &MLPGradient::b2}}};
    for (const auto& [mslot, gslot] : slots) {
      const std::vector<double>& grad = g.*gslot;
      for (std::size_t k = 0; k < grad.size(); ++k) {
        const double fd = (fd_loss(m, mslot, k, h, batch) -
                           fd_loss(m, mslot, k, -h, batch)) /
                          (2.0 * h);
        const double rel = std::abs(grad[k] - fd) /
                           std::max({std::abs(grad[k]), std::abs(fd), 1e-4});
        worst = std::max(worst, rel);
      }
    }
    expect(worst <= 1e-4,
           "seed " + std::to_string(seed) + ": max relative error " + fmt(worst));
  }
}

// ---- 3. Prequential ordering probe ----------------------------------------

void check_ordering() {
  const auto stream = fixtures::simple_rule_stream(1000, 7);
  CSaNNConfig cfg;
  cfg.N = 400;
  cfg.L = 50;
  cfg.mlp_cfg.epochs = 40;
  std::vector<std::pair<std::int64_t, StepPhase>> events;
  const RunTrace trace = run_prequential(
      stream, RunMethod::csann, cfg,
      [&](std::int64_t i, StepPhase ph) { events.emplace_back(i, ph); });
  expect(trace.verdicts.size() == 1000, "expected 1000 verdicts");
  expect(events.size() == 2000, "expected 2000 probe events, got " +
                                    std::to_string(events.size()));
  for (std::int64_t i = 1; i <= 1000; ++i) {
    const auto& p = events[static_cast<std::size_t>(2 * (i - 1))];
    const auto& u = events[static_cast<std::size_t>(2 * (i - 1) + 1)];
    expect(p.first == i && p.second == StepPhase::predict,
           "instance " + std::to_string(i) + ": predict out of order");
    expect(u.first == i && u.second == StepPhase::update,
           "instance " + std::to_string(i) + ": update out of order");
  }
}

// ---- 4. Window-accuracy oracle --------------------------------------------

double brute_window(const std::vector<bool>& flags, std::int64_t first,
                    std::int64_t i, std::int64_t L, std::int64_t floor) {
  const std::int64_t lo = std::max(i - L, floor + 1);
  std::int64_t cnt = 0;
  for (std::int64_t k = lo; k <= i - 1; ++k) {
    if (flags[static_cast<std::size_t>(k - first)]) ++cnt;
  }
  return static_cast<double>(cnt) / static_cast<double>(i - lo);
}

void check_window_oracle() {
  Rng rng(31);
  std::vector<bool> f1, f2;
  CorrectnessHistory h1(1), h2(2001);
  for (std::int64_t i = 1; i <= 12000; ++i) {
    const bool c = rng.uniform01() < 0.6;
    f1.push_back(c);
    h1.record(i, c);
  }
  for (std::int64_t i = 2001; i <= 4000; ++i) {
    const bool c = rng.uniform01() < 0.4;
    f2.push_back(c);
    h2.record(i, c);
  }
  std::int64_t checked = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    std::int64_t i = 0, L = 0, floor = 0;
    const CorrectnessHistory* h = &h1;
    const std::vector<bool>* f = &f1;
    std::int64_t first = 1;
    switch (trial % 4) {
      case 0:  // generic
        L = 1 + rng.below(300);
        i = 2 + rng.below(11999);
        break;
      case 1:  // startup: i <= L, window clipped at index 1
        L = 200 + rng.below(200);
        i = 2 + rng.below(static_cast<std::uint64_t>(L - 1));
        break;
      case 2:  // clipped at the training boundary: i <= N + L
        floor = 2000;
        L = 1 + rng.below(200);
        i = 2002 + rng.below(299);
        break;
      default:  // shadow history that only starts after the prefix
        h = &h2;
        f = &f2;
        first = 2001;
        floor = 2000;
        L = 1 + rng.below(200);
        i = 2002 + rng.below(1999);
        break;
    }
    const double got = window_accuracy(*h, i, L, floor);
    const double want = brute_window(*f, first, i, L, floor);
    expect(got == want, "trial " + std::to_string(trial) + ": got " + fmt(got) +
                            ", want " + fmt(want));
    ++checked;
  }
  expect(checked == 10000, "trial count");
  bool threw = false;
  try {
    window_accuracy(h1, 2001, 100, 2000);  // empty window
  } catch (const InputError&) {
    threw = true;
  }
  expect(threw, "empty window must throw");
}

// ---- 5. Startup branch and tie rule ---------------------------------------

void check_branch_contract() {
  {
    const auto stream = fixtures::two_regime_stream(2300, 11, 1 << 30);
    CSaNNConfig cfg;  // N = 2000
    cfg.mlp_cfg.epochs = 50;
    const RunTrace trace = run_prequential(stream, RunMethod::csann, cfg);
    for (const auto& v : trace.verdicts) {
      if (v.i <= 2001) {
        expect(v.source == 1,
               "i=" + std::to_string(v.i) + " must use the stream model");
      }
    }
  }
  {
    // A constant-label stream keeps both window accuracies pinned at 1, so
    // every post-startup step is a tie and the stream model must keep winning.
    Rng rng(mix_seed(5, 0xce));
    std::vector<WindowedInstance> stream;
    for (std::int64_t i = 1; i <= 500; ++i) {
      WindowedInstance w = fixtures::random_window(rng, i);
      w.label = DelayLabel::on_time;
      stream.push_back(std::move(w));
    }
    CSaNNConfig cfg;
    cfg.N = 200;
    cfg.L = 50;
    cfg.mlp_cfg.epochs = 60;
    const RunTrace trace = run_prequential(stream, RunMethod::csann, cfg);
    for (const auto& v : trace.verdicts) {
      expect(v.source == 1, "tie at i=" + std::to_string(v.i) +
                                " must fall to the stream model");
      if (v.i > cfg.N + 1) {
        expect(v.omega_h.has_value() && v.omega_p.has_value(),
               "window accuracies missing at i=" + std::to_string(v.i));
        expect(*v.omega_h == 1.0 && *v.omega_p == 1.0,
               "expected a perfect tie at i=" + std::to_string(v.i));
      }
    }
  }
}

// ---- 6. Anytime property ---------------------------------------------------

void check_anytime() {
  HoeffdingTree tree(6, HTConfig{});
  FeatureVector x;
  x.values = {1.0, -2.0, 0.5, 3.0, 0.0, -1.0};
  const Prediction p = tree.predict(x);  // no training has happened yet
  const double sum = p.scores[0] + p.scores[1] + p.scores[2];
  expect(std::abs(sum - 1.0) <= 1e-12, "scores must normalize");

  const auto stream = fixtures::simple_rule_stream(5, 3);
  CSaNNConfig cfg;
  cfg.N = 2;
  cfg.L = 2;
  cfg.mlp_cfg.epochs = 5;
  CsannRunner runner(cfg);
  for (const auto& s : stream) {
    const ModelVerdict v = runner.process_instance(s);
    expect(encode_label(v.pred) >= 0 && encode_label(v.pred) <= 2,
           "prediction must exist at i=" + std::to_string(v.i));
  }
}

// ---- 7. Hybrid beats or matches under drift --------------------------------

void check_hybrid_drift() {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto stream = fixtures::skill_flip_stream(10000, seed, 5000);
    CSaNNConfig cfg;  // N = 2000, L = 100
    const RunTrace hybrid = run_prequential(stream, RunMethod::csann, cfg);
    const RunTrace tree = run_prequential(stream, RunMethod::ht, cfg);
    const RunTrace net = run_prequential(stream, RunMethod::mlp, cfg);
    const double a_hybrid = cumulative_accuracy(hybrid).back();
    const double a_tree = cumulative_accuracy(tree).back();
    const double a_net = cumulative_accuracy(net).back();
    expect(a_hybrid >= std::max(a_tree, a_net) - 1.0,
           "seed " + std::to_string(seed) + ": hybrid " + fmt(a_hybrid) +
               " vs tree " + fmt(a_tree) + ", net " + fmt(a_net));
    std::int64_t switches = 0;
    for (std::size_t k = 1; k < hybrid.verdicts.size(); ++k) {
      if (hybrid.verdicts[k].source != hybrid.verdicts[k - 1].source) ++switches;
    }
    expect(switches >= 1, "seed " + std::to_string(seed) + ": never switched");
  }
}

// ---- 8. Feature-selection ordering -----------------------------------------

void check_feature_ordering() {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto stream = fixtures::delays_signal_stream(4000, seed);
    CSaNNConfig delays_cfg;
    delays_cfg.selector = FeatureSelector{SelectorMode::delays_only};
    CSaNNConfig coords_cfg;
    coords_cfg.selector = FeatureSelector{SelectorMode::coords_only};
    const double a_delays =
        cumulative_accuracy(run_prequential(stream, RunMethod::ht, delays_cfg))
            .back();
    const double a_coords =
        cumulative_accuracy(run_prequential(stream, RunMethod::ht, coords_cfg))
            .back();
    expect(a_delays - a_coords >= 5.0,
           "seed " + std::to_string(seed) + ": delays " + fmt(a_delays) +
               " vs coords " + fmt(a_coords));
  }
}

// ---- 9. End-to-end determinism ---------------------------------------------

void run_pipeline(const fs::path& dir) {
  fs::create_directories(dir);
  const std::string d = dir.string();
  run_cli("generate --seed 1 --out-raw " + d + "/raw.csv --out-timetable " + d +
          "/timetable.json --out-truth " + d + "/truth.jsonl --manifest " + d +
          "/gen.manifest.json");
  run_cli("fuse --raw " + d + "/raw.csv --timetable " + d +
          "/timetable.json --out-windows " + d + "/windows.jsonl --manifest " +
          d + "/fuse.manifest.json");
  run_cli("run --windows " + d + "/windows.jsonl --method csann --out-trace " +
          d + "/trace.jsonl --manifest " + d + "/run.manifest.json");
  run_cli("report --trace run=" + d + "/trace.jsonl --out-dir " + d +
          "/report --manifest " + d + "/report.manifest.json");
}

void check_determinism() {
  expect(!g_cli_path.empty(), "CLI binary path was not passed as argv[1]");
  const fs::path base =
      fs::temp_directory_path() /
      ("delaycast-accept-" + std::to_string(static_cast<std::int64_t>(
                                 std::chrono::steady_clock::now()
                                     .time_since_epoch()
                                     .count())));
  const fs::path a = base / "a";
  const fs::path b = base / "b";
  run_pipeline(a);
  run_pipeline(b);
  for (const char* rel :
       {"windows.jsonl", "trace.jsonl", "report/run-report.json",
        "report/run-curve.csv", "report/checkpoints.csv"}) {
    expect(read_file(a / rel) == read_file(b / rel),
           std::string(rel) + " differs between identical runs");
  }
  fs::remove_all(base);
}

// ---- 10. Fusion vs generator oracle ----------------------------------------

void check_fusion_oracle() {
  SynthConfig cfg;  // gps noise is zero by default
  const Timetable tt = generate_network(cfg);
  const SimResult sim = simulate_day(cfg, tt);

  const DedupResult dedup = deduplicate(sim.raw);
  const std::int64_t want_unique = oracles::dedup_set_count(sim.raw);
  expect(static_cast<std::int64_t>(dedup.records.size()) == want_unique,
         "dedup kept " + std::to_string(dedup.records.size()) + ", oracle says " +
             std::to_string(want_unique));

  FusionConfig fcfg;
  const std::vector<LocationRecord> clean = denoise(dedup.records, fcfg);
  const EnrichResult enriched = enrich(clean, tt, fcfg);
  expect(!enriched.instances.empty(), "enrichment produced nothing");

  std::int64_t agree = 0;
  for (const auto& e : enriched.instances) {
    if (label_oracle(sim.truth, e.vehicle_id, e.t_c, fcfg.status_threshold_s) ==
        e.delay_status) {
      ++agree;
    }
  }
  const double rate = static_cast<double>(agree) /
                      static_cast<double>(enriched.instances.size());
  expect(rate >= 0.98, "status agreement " + fmt(100.0 * rate) + "%");

  const WindowResult got = build_windows(enriched.instances, fcfg);
  const oracles::ScanResult want = oracles::window_scanner(enriched.instances, fcfg);
  expect(got.windows.size() == want.windows.size(),
         "window count " + std::to_string(got.windows.size()) + ", oracle " +
             std::to_string(want.windows.size()));
  expect(got.incomplete == want.incomplete, "incomplete-anchor count differs");
}

// ---- 11. Latency model shape -----------------------------------------------

void check_latency_shape() {
  const LatencyModel m = LatencyModel::make(180, 480, 30);
  Rng rng(2024);
  std::map<std::int64_t, std::int64_t> hist;
  for (int k = 0; k < 100000; ++k) {
    const std::int64_t v = m.sample(rng);
    expect(v <= 480, "sample above the truncation point");
    ++hist[v];
  }
  std::int64_t mode = -1, peak = 0;
  for (const auto& [v, n] : hist) {
    if (n > peak) {
      peak = n;
      mode = v;
    }
  }
  expect(std::llabs(mode - 180) <= 30,
         "empirical mode " + std::to_string(mode) + " s");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_cli_path = argv[1];
  criterion(1, "hoeffding bound closed form", 1.0, check_hoeffding_bound);
  criterion(2, "network gradient vs finite differences", 30.0, check_gradients);
  criterion(3, "predict precedes update per instance", 1.0, check_ordering);
  criterion(4, "window accuracy equals brute force", 10.0, check_window_oracle);
  criterion(5, "startup branch and the tie rule", 120.0, check_branch_contract);
  criterion(6, "anytime predictions from the first instance", 10.0,
            check_anytime);
  criterion(7, "hybrid beats or matches both baselines", 120.0,
            check_hybrid_drift);
  criterion(8, "delay features beat coordinate features", 60.0,
            check_feature_ordering);
  criterion(9, "end-to-end pipeline is byte-deterministic", 60.0,
            check_determinism);
  criterion(10, "fusion agrees with the generator oracle", 60.0,
            check_fusion_oracle);
  criterion(11, "latency histogram peaks at the mode", 5.0, check_latency_shape);
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
