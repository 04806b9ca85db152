#include "delaycast/csann.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace delaycast {

void CSaNNConfig::validate() const {
  if (N < 1) throw InputError("csann N must be >= 1");
  if (L < 1) throw InputError("csann L must be >= 1");
  ht_cfg.validate();
  mlp_cfg.validate();
}

void RunTrace::validate() const {
  std::int64_t expect = first_index;
  for (const auto& v : verdicts) {
    if (v.i != expect) {
      throw InvariantError("trace index gap: expected " + std::to_string(expect) +
                           ", got " + std::to_string(v.i));
    }
    ++expect;
  }
}

CorrectnessHistory::CorrectnessHistory(std::int64_t first_index)
    : first_(first_index) {
  prefix_.push_back(0);
}

void CorrectnessHistory::record(std::int64_t i, bool correct) {
  if (i != first_ + size_) {
    throw InvariantError("history index " + std::to_string(i) +
                         " breaks consecutive order");
  }
  prefix_.push_back(prefix_.back() + (correct ? 1 : 0));
  ++size_;
}

bool CorrectnessHistory::defined_at(std::int64_t i) const {
  return i >= first_ && i < first_ + size_;
}

std::int64_t CorrectnessHistory::correct_in(std::int64_t lo, std::int64_t hi) const {
  if (lo > hi) return 0;
  if (!defined_at(lo) || !defined_at(hi)) {
    throw InvariantError("window [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "] outside recorded history");
  }
  return prefix_[static_cast<std::size_t>(hi - first_ + 1)] -
         prefix_[static_cast<std::size_t>(lo - first_)];
}

double window_accuracy(const CorrectnessHistory& h, std::int64_t i,
                       std::int64_t L, std::int64_t lo_floor) {
  const std::int64_t lo = std::max(i - L, lo_floor + 1);
  const std::int64_t len = i - lo;
  if (len < 1) throw InputError("empty accuracy window at i=" + std::to_string(i));
  return static_cast<double>(h.correct_in(lo, i - 1)) / static_cast<double>(len);
}

CsannRunner::CsannRunner(CSaNNConfig cfg, StepProbe probe)
    : cfg_(std::move(cfg)), probe_(std::move(probe)),
      hist_h_(1), hist_p_(cfg_.N + 1) {
  cfg_.validate();
}

const HoeffdingTree* CsannRunner::stream_model() const {
  return ht_ ? &*ht_ : nullptr;
}

const MLPModel* CsannRunner::neural_model() const {
  return mlp_ ? &*mlp_ : nullptr;
}

ModelVerdict CsannRunner::process_instance(const WindowedInstance& s) {
  const std::int64_t i = i_ + 1;
  const FeatureVector fv = select_features(s, cfg_.selector);
  if (!ht_) {
    ht_.emplace(static_cast<int>(fv.arity()), cfg_.ht_cfg);
  }

  if (probe_) probe_(i, StepPhase::predict);
  ModelVerdict v;
  v.i = i;
  v.shadow_h = ht_->predict(fv).label;
  if (mlp_) v.shadow_p = mlp_predict(*mlp_, fv).label;

  if (i <= cfg_.N + 1) {
    v.pred = v.shadow_h;
    v.source = 1;
  } else {
    if (!v.shadow_p) {
      throw InvariantError("network missing past the startup branch");
    }
    // Exact rational comparison of the two window accuracies; ties keep the
    // incremental tree in charge.
    const std::int64_t lo_h = std::max(i - cfg_.L, std::int64_t{1});
    const std::int64_t lo_p = std::max(i - cfg_.L, cfg_.N + 1);
    const std::int64_t len_h = i - lo_h;
    const std::int64_t len_p = i - lo_p;
    const std::int64_t ch = hist_h_.correct_in(lo_h, i - 1);
    const std::int64_t cp = hist_p_.correct_in(lo_p, i - 1);
    v.omega_h = static_cast<double>(ch) / static_cast<double>(len_h);
    v.omega_p = static_cast<double>(cp) / static_cast<double>(len_p);
    if (ch * len_p >= cp * len_h) {
      v.pred = v.shadow_h;
      v.source = 1;
    } else {
      v.pred = *v.shadow_p;
      v.source = 0;
    }
  }

  if (probe_) probe_(i, StepPhase::update);
  v.truth = s.label;
  hist_h_.record(i, v.shadow_h == v.truth);
  if (v.shadow_p) hist_p_.record(i, *v.shadow_p == v.truth);

  if (i <= cfg_.N) {
    pool_.emplace_back(fv, v.truth);
    if (i == cfg_.N) {
      mlp_ = mlp_train(pool_, cfg_.mlp_cfg);
      pool_.clear();
      pool_.shrink_to_fit();
    }
  }
  ht_->learn(fv, v.truth);
  i_ = i;
  return v;
}

RunMethod parse_method(std::string_view name) {
  if (name == "ht") return RunMethod::ht;
  if (name == "mlp") return RunMethod::mlp;
  if (name == "csann") return RunMethod::csann;
  throw InputError("unknown method '" + std::string(name) +
                   "' (expected ht, mlp, or csann)");
}

const char* method_name(RunMethod m) {
  switch (m) {
    case RunMethod::ht: return "ht";
    case RunMethod::mlp: return "mlp";
    case RunMethod::csann: return "csann";
  }
  throw InvariantError("bad method value");
}

namespace {

RunTrace run_ht(const std::vector<WindowedInstance>& stream,
                const CSaNNConfig& cfg, const StepProbe& probe) {
  RunTrace trace;
  std::optional<HoeffdingTree> ht;
  std::int64_t i = 0;
  for (const auto& s : stream) {
    ++i;
    const FeatureVector fv = select_features(s, cfg.selector);
    if (!ht) ht.emplace(static_cast<int>(fv.arity()), cfg.ht_cfg);
    if (probe) probe(i, StepPhase::predict);
    ModelVerdict v;
    v.i = i;
    v.shadow_h = ht->predict(fv).label;
    v.pred = v.shadow_h;
    v.source = 1;
    if (probe) probe(i, StepPhase::update);
    v.truth = s.label;
    ht->learn(fv, v.truth);
    if (v.pred == v.truth) ++trace.correct;
    trace.verdicts.push_back(std::move(v));
  }
  return trace;
}

RunTrace run_mlp(const std::vector<WindowedInstance>& stream,
                 const CSaNNConfig& cfg, const StepProbe& probe) {
  if (static_cast<std::int64_t>(stream.size()) <= cfg.N) {
    throw InputError("stream of " + std::to_string(stream.size()) +
                     " instances is not longer than the training prefix N=" +
                     std::to_string(cfg.N));
  }
  TrainingSet pool;
  std::int64_t i = 0;
  for (; i < cfg.N; ++i) {
    const auto& s = stream[static_cast<std::size_t>(i)];
    pool.emplace_back(select_features(s, cfg.selector), s.label);
  }
  const MLPModel model = mlp_train(pool, cfg.mlp_cfg);
  RunTrace trace;
  trace.first_index = cfg.N + 1;
  for (; i < static_cast<std::int64_t>(stream.size()); ++i) {
    const auto& s = stream[static_cast<std::size_t>(i)];
    const FeatureVector fv = select_features(s, cfg.selector);
    if (probe) probe(i + 1, StepPhase::predict);
    ModelVerdict v;
    v.i = i + 1;
    v.shadow_p = mlp_predict(model, fv).label;
    v.pred = *v.shadow_p;
    // The frozen network is the only model here; the tree shadow mirrors the
    // emitted prediction so the field stays total.
    v.shadow_h = v.pred;
    v.source = 0;
    if (probe) probe(i + 1, StepPhase::update);
    v.truth = s.label;
    if (v.pred == v.truth) ++trace.correct;
    trace.verdicts.push_back(std::move(v));
  }
  return trace;
}

RunTrace run_csann(const std::vector<WindowedInstance>& stream,
                   const CSaNNConfig& cfg, const StepProbe& probe) {
  RunTrace trace;
  CsannRunner runner(cfg, probe);
  for (const auto& s : stream) {
    ModelVerdict v = runner.process_instance(s);
    if (v.pred == v.truth) ++trace.correct;
    trace.verdicts.push_back(std::move(v));
  }
  return trace;
}

}  // namespace

RunTrace run_prequential(const std::vector<WindowedInstance>& stream,
                         RunMethod method, const CSaNNConfig& cfg,
                         const StepProbe& probe) {
  if (stream.empty()) throw InputError("empty instance stream");
  cfg.validate();
  RunTrace trace;
  switch (method) {
    case RunMethod::ht: trace = run_ht(stream, cfg, probe); break;
    case RunMethod::mlp: trace = run_mlp(stream, cfg, probe); break;
    case RunMethod::csann: trace = run_csann(stream, cfg, probe); break;
  }
  trace.validate();
  return trace;
}

std::string verdict_to_json(const ModelVerdict& v) {
  nlohmann::ordered_json j;
  j["i"] = v.i;
  j["pred"] = label_name(v.pred);
  j["source"] = v.source;
  j["omega_h"] = v.omega_h ? nlohmann::ordered_json(*v.omega_h)
                           : nlohmann::ordered_json(nullptr);
  j["omega_p"] = v.omega_p ? nlohmann::ordered_json(*v.omega_p)
                           : nlohmann::ordered_json(nullptr);
  j["shadow_h"] = label_name(v.shadow_h);
  j["shadow_p"] = v.shadow_p ? nlohmann::ordered_json(label_name(*v.shadow_p))
                             : nlohmann::ordered_json(nullptr);
  j["truth"] = label_name(v.truth);
  return j.dump();
}

ModelVerdict verdict_from_json(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("bad trace line: ") + e.what());
  }
  ModelVerdict v;
  try {
    v.i = j.at("i").get<std::int64_t>();
    v.pred = label_from_name(j.at("pred").get<std::string>());
    v.source = j.at("source").get<int>();
    if (v.source != 0 && v.source != 1) {
      throw InputError("trace source must be 0 or 1");
    }
    if (!j.at("omega_h").is_null()) v.omega_h = j.at("omega_h").get<double>();
    if (!j.at("omega_p").is_null()) v.omega_p = j.at("omega_p").get<double>();
    v.shadow_h = label_from_name(j.at("shadow_h").get<std::string>());
    if (!j.at("shadow_p").is_null()) {
      v.shadow_p = label_from_name(j.at("shadow_p").get<std::string>());
    }
    v.truth = label_from_name(j.at("truth").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad trace line: ") + e.what());
  }
  return v;
}

void write_trace_jsonl(const std::string& path, const RunTrace& trace) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write trace file: " + path);
  for (const auto& v : trace.verdicts) out << verdict_to_json(v) << '\n';
}

RunTrace read_trace_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open trace file: " + path);
  RunTrace trace;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ModelVerdict v = verdict_from_json(line);
    if (first) {
      trace.first_index = v.i;
      first = false;
    }
    if (v.pred == v.truth) ++trace.correct;
    trace.verdicts.push_back(std::move(v));
  }
  if (trace.verdicts.empty()) throw InputError("empty trace file: " + path);
  trace.validate();
  return trace;
}

}  // namespace delaycast
