#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "delaycast/stream_core.hpp"

namespace delaycast {

enum class LeafPrediction { majority_class, naive_bayes };

struct HTConfig {
  double delta = 0.05;        // split confidence
  int grace_period = 200;     // instances between split attempts at a leaf
  double tau = 0.05;          // tie threshold
  LeafPrediction leaf_prediction = LeafPrediction::majority_class;
  int numeric_bins = 10;      // candidate thresholds per attribute

  void validate() const;  // throws InputError
};

// Hoeffding bound for a merit with range R after n observations.
// eps = sqrt(R^2 * ln(1/delta) / (2n)). delta = 1 is allowed and gives 0.
double hoeffding_bound(double range, double delta, std::int64_t n);

// Range of the information-gain merit for a 3-class problem.
double info_gain_range();

// Entropy gain of a binary split, log base 2. left + right must equal
// parent elementwise and parent must be non-empty; throws InputError
// otherwise. An empty child contributes zero.
double info_gain(const std::array<std::int64_t, 3>& parent,
                 const std::array<std::int64_t, 3>& left,
                 const std::array<std::int64_t, 3>& right);

// Fractional-count variant used with distribution-estimated child counts.
double info_gain_est(const std::array<double, 3>& parent,
                     const std::array<double, 3>& left,
                     const std::array<double, 3>& right);

// Per-class running Gaussian fit of one attribute (Welford form).
struct GaussianEstimator {
  std::int64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;  // sum of squared deviations, never negative

  void add(double x);
  double variance() const;
  double stddev() const;
  // P(X <= x) under the fitted Gaussian; a step at the mean when degenerate.
  double cdf(double x) const;
};

// Sufficient statistics held by one leaf.
struct LeafStats {
  // Counts inherited from the parent at split time; carry no attribute info.
  std::array<std::int64_t, 3> seed_counts{0, 0, 0};
  // Counts of instances absorbed at this leaf; observers saw exactly these.
  std::array<std::int64_t, 3> obs_counts{0, 0, 0};
  std::vector<std::array<GaussianEstimator, 3>> observers;  // [attribute][class]
  std::vector<double> attr_min;
  std::vector<double> attr_max;
  std::int64_t since_last_attempt = 0;

  explicit LeafStats(int n_attrs = 0);
  int n_attrs() const { return static_cast<int>(observers.size()); }
  void absorb(const FeatureVector& x, DelayLabel y);
  std::array<std::int64_t, 3> class_counts() const;  // seed + observed
  std::int64_t total_count() const;
  std::int64_t observed_count() const;
};

struct SplitDecision {
  bool split = false;
  int attribute = -1;
  double threshold = 0.0;
  double best_gain = 0.0;
  double second_gain = 0.0;
  double epsilon = 0.0;
};

// Candidate thresholds for one attribute: numeric_bins equal-frequency cut
// points of the class-weighted Gaussian mixture fitted by the observers.
std::vector<double> candidate_thresholds(const LeafStats& leaf, int attribute,
                                         int numeric_bins);

// VFDT split test over the leaf's observed statistics. Splits only when the
// best attribute's gain beats the runner-up by more than the Hoeffding bound,
// or the bound has shrunk below tau, and the best gain is positive. Ties are
// broken toward the lowest attribute index, then the lowest threshold.
SplitDecision attempt_split(const LeafStats& leaf, const HTConfig& cfg);

// Incremental three-class decision tree with anytime prediction.
class HoeffdingTree {
 public:
  HoeffdingTree(int n_attrs, HTConfig cfg);

  Prediction predict(const FeatureVector& x) const;
  void learn(const FeatureVector& x, DelayLabel y);

  std::int64_t instances_seen() const { return instances_seen_; }
  int n_attrs() const { return n_attrs_; }
  const HTConfig& config() const { return cfg_; }

  int leaf_count() const;
  int node_count() const;
  int depth() const;
  // Sum of class counts over all leaves; equals instances_seen by design.
  std::int64_t total_leaf_count() const;
  // Deepest internal node splitting on the given attribute exists?
  bool splits_on(int attribute) const;

  std::string to_json() const;  // introspection dump

 private:
  struct Node;
  using NodePtr = std::unique_ptr<Node>;
  struct Node {
    bool is_leaf = true;
    // internal
    int attribute = -1;
    double threshold = 0.0;
    NodePtr left;
    NodePtr right;
    // leaf
    LeafStats stats;
  };

  const Node* route(const FeatureVector& x) const;
  Node* route(const FeatureVector& x);
  void check_arity(const FeatureVector& x) const;
  Prediction predict_at_leaf(const LeafStats& s, const FeatureVector& x) const;
  static void split_leaf(Node& node, const SplitDecision& d, int n_attrs);

  int n_attrs_;
  HTConfig cfg_;
  NodePtr root_;
  std::int64_t instances_seen_ = 0;
};

}  // namespace delaycast
