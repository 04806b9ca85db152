#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "delaycast/hoeffding_tree.hpp"
#include "delaycast/mlp.hpp"
#include "delaycast/stream_core.hpp"

namespace delaycast {

struct CSaNNConfig {
  std::int64_t N = 2000;  // batch training-set size
  std::int64_t L = 100;   // sliding accuracy window
  FeatureSelector selector{SelectorMode::delays_only};
  HTConfig ht_cfg;
  MLPConfig mlp_cfg;

  void validate() const;  // throws InputError
};

// Outcome of one prequential step. source is 1 when the incremental tree
// answered, 0 when the frozen network did. Window accuracies are absent
// while the startup branch is still forced; shadow_p is absent until the
// network exists.
struct ModelVerdict {
  std::int64_t i = 0;
  DelayLabel pred = DelayLabel::before_time;
  int source = 1;
  std::optional<double> omega_h;
  std::optional<double> omega_p;
  DelayLabel shadow_h = DelayLabel::before_time;
  std::optional<DelayLabel> shadow_p;
  DelayLabel truth = DelayLabel::before_time;
};

// Verdicts with consecutive indices starting at first_index. first_index is
// 1 except for the pure network baseline, whose predictions only exist once
// the training prefix has passed.
struct RunTrace {
  std::vector<ModelVerdict> verdicts;
  std::int64_t first_index = 1;
  std::int64_t correct = 0;  // running count of pred == truth

  void validate() const;  // throws InvariantError on index gaps
};

// Per-instance correctness flags with prefix sums, so any window count is
// O(1). Indices must arrive consecutively from first_index.
class CorrectnessHistory {
 public:
  explicit CorrectnessHistory(std::int64_t first_index = 1);

  void record(std::int64_t i, bool correct);
  std::int64_t first_index() const { return first_; }
  std::int64_t last_index() const { return first_ + size_ - 1; }  // first_-1 when empty
  bool defined_at(std::int64_t i) const;
  // Number of correct flags in [lo, hi], both inclusive.
  std::int64_t correct_in(std::int64_t lo, std::int64_t hi) const;

 private:
  std::int64_t first_;
  std::int64_t size_ = 0;
  std::vector<std::int64_t> prefix_;  // prefix_[k] = correct among first k
};

// Accuracy over the window [max(i-L, lo_floor+1), i-1]; the denominator is
// the window length i - max(i-L, lo_floor+1). Throws InputError when the
// window is empty (i < lo_floor + 2).
double window_accuracy(const CorrectnessHistory& h, std::int64_t i,
                       std::int64_t L, std::int64_t lo_floor);

enum class StepPhase { predict, update };
// Test instrumentation: invoked with (i, predict) before any model answers
// for instance i and (i, update) before the truth label is first consumed.
using StepProbe = std::function<void(std::int64_t, StepPhase)>;

// Sequential hybrid state machine. For each instance: predict with the tree
// (and the network once it exists), pick a source, then reveal the truth,
// extend both correctness histories, update the tree, and train the network
// when the training prefix completes.
class CsannRunner {
 public:
  explicit CsannRunner(CSaNNConfig cfg, StepProbe probe = {});

  ModelVerdict process_instance(const WindowedInstance& s);

  std::int64_t instances_processed() const { return i_; }
  const HoeffdingTree* stream_model() const;
  const MLPModel* neural_model() const;  // null until trained

 private:
  CSaNNConfig cfg_;
  StepProbe probe_;
  std::optional<HoeffdingTree> ht_;  // created at first instance (arity known)
  std::optional<MLPModel> mlp_;
  TrainingSet pool_;  // first N examples
  CorrectnessHistory hist_h_;
  CorrectnessHistory hist_p_;
  std::int64_t i_ = 0;  // last processed index
};

enum class RunMethod { ht, mlp, csann };

RunMethod parse_method(std::string_view name);  // "ht"|"mlp"|"csann"
const char* method_name(RunMethod m);

// Prequential run over a full stream: predict first, then reveal and train,
// for every instance. csann uses CsannRunner; ht runs the tree alone
// (source fixed to 1); mlp trains on the first N instances and predicts the
// rest frozen (source fixed to 0, trace starts at N+1).
RunTrace run_prequential(const std::vector<WindowedInstance>& stream,
                         RunMethod method, const CSaNNConfig& cfg,
                         const StepProbe& probe = {});

// JSON-lines trace serialization, one verdict per line with a fixed key set;
// absent fields are written as explicit nulls.
std::string verdict_to_json(const ModelVerdict& v);
ModelVerdict verdict_from_json(const std::string& line);
void write_trace_jsonl(const std::string& path, const RunTrace& trace);
RunTrace read_trace_jsonl(const std::string& path);

}  // namespace delaycast
