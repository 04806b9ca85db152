#include "delaycast/hoeffding_tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "json.hpp"

namespace delaycast {

namespace {

constexpr double kLog2e = 1.4426950408889634074;  // 1/ln(2)

double entropy_bits(const std::array<double, 3>& counts, double total) {
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double c : counts) {
    if (c <= 0.0) continue;
    const double p = c / total;
    h -= p * std::log(p) * kLog2e;
  }
  return h;
}

}  // namespace

void HTConfig::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InputError("ht delta must be in (0,1)");
  }
  if (grace_period < 1) throw InputError("ht grace_period must be >= 1");
  if (!(tau >= 0.0)) throw InputError("ht tau must be >= 0");
  if (numeric_bins < 1) throw InputError("ht numeric_bins must be >= 1");
}

double hoeffding_bound(double range, double delta, std::int64_t n) {
  if (!(range > 0.0)) throw InputError("hoeffding bound: range must be > 0");
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw InputError("hoeffding bound: delta must be in (0,1]");
  }
  if (n < 1) throw InputError("hoeffding bound: n must be >= 1");
  return std::sqrt(range * range * std::log(1.0 / delta) /
                   (2.0 * static_cast<double>(n)));
}

double info_gain_range() { return std::log(3.0) * kLog2e; }

double info_gain(const std::array<std::int64_t, 3>& parent,
                 const std::array<std::int64_t, 3>& left,
                 const std::array<std::int64_t, 3>& right) {
  std::array<double, 3> p{}, l{}, r{};
  for (int c = 0; c < 3; ++c) {
    if (parent[c] < 0 || left[c] < 0 || right[c] < 0) {
      throw InputError("info gain: negative class count");
    }
    if (left[c] + right[c] != parent[c]) {
      throw InputError("info gain: children do not partition parent");
    }
    p[c] = static_cast<double>(parent[c]);
    l[c] = static_cast<double>(left[c]);
    r[c] = static_cast<double>(right[c]);
  }
  return info_gain_est(p, l, r);
}

double info_gain_est(const std::array<double, 3>& parent,
                     const std::array<double, 3>& left,
                     const std::array<double, 3>& right) {
  const double n = parent[0] + parent[1] + parent[2];
  if (!(n > 0.0)) throw InputError("info gain: empty parent");
  const double nl = left[0] + left[1] + left[2];
  const double nr = right[0] + right[1] + right[2];
  double gain = entropy_bits(parent, n);
  if (nl > 0.0) gain -= (nl / n) * entropy_bits(left, nl);
  if (nr > 0.0) gain -= (nr / n) * entropy_bits(right, nr);
  return std::max(gain, 0.0);  // clamp float dust on zero-gain splits
}

void GaussianEstimator::add(double x) {
  ++count;
  const double d = x - mean;
  mean += d / static_cast<double>(count);
  m2 += d * (x - mean);
  if (m2 < 0.0) m2 = 0.0;
}

double GaussianEstimator::variance() const {
  return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
}

double GaussianEstimator::stddev() const { return std::sqrt(variance()); }

double GaussianEstimator::cdf(double x) const {
  if (count == 0) return 0.0;
  const double sd = stddev();
  if (sd <= 0.0) return x >= mean ? 1.0 : 0.0;
  return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

LeafStats::LeafStats(int n_attrs)
    : observers(static_cast<std::size_t>(n_attrs)),
      attr_min(static_cast<std::size_t>(n_attrs),
               std::numeric_limits<double>::infinity()),
      attr_max(static_cast<std::size_t>(n_attrs),
               -std::numeric_limits<double>::infinity()) {}

void LeafStats::absorb(const FeatureVector& x, DelayLabel y) {
  const int cls = encode_label(y);
  ++obs_counts[static_cast<std::size_t>(cls)];
  for (int a = 0; a < n_attrs(); ++a) {
    const double v = x.values[static_cast<std::size_t>(a)];
    observers[static_cast<std::size_t>(a)][static_cast<std::size_t>(cls)].add(v);
    attr_min[static_cast<std::size_t>(a)] =
        std::min(attr_min[static_cast<std::size_t>(a)], v);
    attr_max[static_cast<std::size_t>(a)] =
        std::max(attr_max[static_cast<std::size_t>(a)], v);
  }
  ++since_last_attempt;
}

std::array<std::int64_t, 3> LeafStats::class_counts() const {
  return {seed_counts[0] + obs_counts[0], seed_counts[1] + obs_counts[1],
          seed_counts[2] + obs_counts[2]};
}

std::int64_t LeafStats::total_count() const {
  const auto c = class_counts();
  return c[0] + c[1] + c[2];
}

std::int64_t LeafStats::observed_count() const {
  return obs_counts[0] + obs_counts[1] + obs_counts[2];
}

std::vector<double> candidate_thresholds(const LeafStats& leaf, int attribute,
                                         int numeric_bins) {
  const auto& obs = leaf.observers[static_cast<std::size_t>(attribute)];
  const double lo = leaf.attr_min[static_cast<std::size_t>(attribute)];
  const double hi = leaf.attr_max[static_cast<std::size_t>(attribute)];
  if (!(lo <= hi)) return {};  // nothing observed yet

  double total = 0.0;
  for (const auto& g : obs) total += static_cast<double>(g.count);
  if (total <= 0.0) return {};

  const auto mixture_cdf = [&](double x) {
    double f = 0.0;
    for (const auto& g : obs) {
      if (g.count == 0) continue;
      f += (static_cast<double>(g.count) / total) * g.cdf(x);
    }
    return f;
  };

  std::vector<double> thresholds;
  thresholds.reserve(static_cast<std::size_t>(numeric_bins));
  double last = std::numeric_limits<double>::quiet_NaN();
  for (int j = 1; j <= numeric_bins; ++j) {
    const double p =
        static_cast<double>(j) / static_cast<double>(numeric_bins + 1);
    double a = lo, b = hi;
    for (int it = 0; it < 60; ++it) {
      const double m = 0.5 * (a + b);
      if (mixture_cdf(m) < p) {
        a = m;
      } else {
        b = m;
      }
    }
    const double t = 0.5 * (a + b);
    if (!(t == last)) thresholds.push_back(t);
    last = t;
  }
  return thresholds;
}

SplitDecision attempt_split(const LeafStats& leaf, const HTConfig& cfg) {
  SplitDecision d;
  const std::int64_t n = leaf.observed_count();
  if (n < 1) return d;

  std::array<double, 3> parent{};
  for (int c = 0; c < 3; ++c) {
    parent[static_cast<std::size_t>(c)] =
        static_cast<double>(leaf.obs_counts[static_cast<std::size_t>(c)]);
  }

  // Best achievable gain per attribute; the Hoeffding test compares the top
  // two attributes, as in the original VFDT formulation.
  double best = 0.0, second = 0.0;
  int best_attr = -1;
  double best_thr = 0.0;
  for (int a = 0; a < leaf.n_attrs(); ++a) {
    double attr_gain = -1.0;
    double attr_thr = 0.0;
    for (double t : candidate_thresholds(leaf, a, cfg.numeric_bins)) {
      std::array<double, 3> left{}, right{};
      for (int c = 0; c < 3; ++c) {
        const auto& g =
            leaf.observers[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)];
        const double lc = static_cast<double>(g.count) * g.cdf(t);
        left[static_cast<std::size_t>(c)] = lc;
        right[static_cast<std::size_t>(c)] =
            parent[static_cast<std::size_t>(c)] - lc;
      }
      const double gain = info_gain_est(parent, left, right);
      if (gain > attr_gain) {
        attr_gain = gain;
        attr_thr = t;
      }
    }
    if (attr_gain < 0.0) continue;
    if (best_attr < 0 || attr_gain > best) {
      second = best_attr < 0 ? 0.0 : best;
      best = attr_gain;
      best_attr = a;
      best_thr = attr_thr;
    } else if (attr_gain > second) {
      second = attr_gain;
    }
  }
  if (best_attr < 0) return d;

  const double eps = hoeffding_bound(info_gain_range(), cfg.delta, n);
  d.best_gain = best;
  d.second_gain = second;
  d.epsilon = eps;
  if (best > 0.0 && (best - second > eps || eps < cfg.tau)) {
    d.split = true;
    d.attribute = best_attr;
    d.threshold = best_thr;
  }
  return d;
}

HoeffdingTree::HoeffdingTree(int n_attrs, HTConfig cfg)
    : n_attrs_(n_attrs), cfg_(cfg) {
  if (n_attrs < 1) throw InputError("hoeffding tree needs >= 1 attribute");
  cfg_.validate();
  root_ = std::make_unique<Node>();
  root_->stats = LeafStats(n_attrs_);
}

void HoeffdingTree::check_arity(const FeatureVector& x) const {
  if (static_cast<int>(x.arity()) != n_attrs_) {
    throw InputError("feature arity " + std::to_string(x.arity()) +
                     " does not match model arity " + std::to_string(n_attrs_));
  }
}

const HoeffdingTree::Node* HoeffdingTree::route(const FeatureVector& x) const {
  const Node* n = root_.get();
  while (!n->is_leaf) {
    n = x.values[static_cast<std::size_t>(n->attribute)] <= n->threshold
            ? n->left.get()
            : n->right.get();
  }
  return n;
}

HoeffdingTree::Node* HoeffdingTree::route(const FeatureVector& x) {
  return const_cast<Node*>(std::as_const(*this).route(x));
}

Prediction HoeffdingTree::predict_at_leaf(const LeafStats& s,
                                          const FeatureVector& x) const {
  Prediction p;
  const auto counts = s.class_counts();
  const std::int64_t total = counts[0] + counts[1] + counts[2];
  if (total == 0) {
    p.scores = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    p.label = DelayLabel::before_time;
    return p;
  }
  if (cfg_.leaf_prediction == LeafPrediction::naive_bayes &&
      s.observed_count() > 0) {
    // Log-density terms are only comparable across classes when every live
    // class contributes the same attributes, so an attribute is used iff all
    // live classes have a fitted observer for it. Seed-only classes carry no
    // observations and would otherwise win on the bare prior.
    std::array<bool, 3> live{};
    for (int c = 0; c < 3; ++c) {
      live[static_cast<std::size_t>(c)] = counts[static_cast<std::size_t>(c)] > 0;
    }
    const auto attr_usable = [&](int a) {
      for (int c = 0; c < 3; ++c) {
        if (live[static_cast<std::size_t>(c)] &&
            s.observers[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)]
                    .count < 2) {
          return false;
        }
      }
      return true;
    };
    std::array<double, 3> logit{};
    double max_logit = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < 3; ++c) {
      const std::int64_t cc = counts[static_cast<std::size_t>(c)];
      if (cc == 0) continue;
      double ls = std::log(static_cast<double>(cc) / static_cast<double>(total));
      for (int a = 0; a < n_attrs_; ++a) {
        if (!attr_usable(a)) continue;
        const auto& g =
            s.observers[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)];
        const double sd = std::max(g.stddev(), 1e-6);
        const double z = (x.values[static_cast<std::size_t>(a)] - g.mean) / sd;
        ls += -0.5 * z * z - std::log(sd);
      }
      logit[static_cast<std::size_t>(c)] = ls;
      max_logit = std::max(max_logit, ls);
    }
    double z = 0.0;
    for (int c = 0; c < 3; ++c) {
      auto& sc = p.scores[static_cast<std::size_t>(c)];
      sc = live[static_cast<std::size_t>(c)]
               ? std::exp(logit[static_cast<std::size_t>(c)] - max_logit)
               : 0.0;
      z += sc;
    }
    for (auto& sc : p.scores) sc /= z;
  } else {
    for (int c = 0; c < 3; ++c) {
      p.scores[static_cast<std::size_t>(c)] =
          static_cast<double>(counts[static_cast<std::size_t>(c)]) /
          static_cast<double>(total);
    }
  }
  p.label = argmax_label(p.scores);
  return p;
}

Prediction HoeffdingTree::predict(const FeatureVector& x) const {
  check_arity(x);
  return predict_at_leaf(route(x)->stats, x);
}

void HoeffdingTree::split_leaf(Node& node, const SplitDecision& d, int n_attrs) {
  const LeafStats& s = node.stats;
  auto left_leaf = std::make_unique<Node>();
  auto right_leaf = std::make_unique<Node>();
  left_leaf->stats = LeafStats(n_attrs);
  right_leaf->stats = LeafStats(n_attrs);
  // Redistribute the leaf's counts to the children along the estimated split
  // so that class counts stay conserved across the whole tree.
  const auto totals = s.class_counts();
  for (int c = 0; c < 3; ++c) {
    const auto& g = s.observers[static_cast<std::size_t>(d.attribute)]
                               [static_cast<std::size_t>(c)];
    const double frac = g.count > 0 ? g.cdf(d.threshold) : 0.5;
    const std::int64_t total_c = totals[static_cast<std::size_t>(c)];
    std::int64_t lc = std::llround(static_cast<double>(total_c) * frac);
    lc = std::clamp<std::int64_t>(lc, 0, total_c);
    left_leaf->stats.seed_counts[static_cast<std::size_t>(c)] = lc;
    right_leaf->stats.seed_counts[static_cast<std::size_t>(c)] = total_c - lc;
  }
  node.is_leaf = false;
  node.attribute = d.attribute;
  node.threshold = d.threshold;
  node.left = std::move(left_leaf);
  node.right = std::move(right_leaf);
  node.stats = LeafStats(0);
}

void HoeffdingTree::learn(const FeatureVector& x, DelayLabel y) {
  check_arity(x);
  Node* leaf = route(x);
  leaf->stats.absorb(x, y);
  ++instances_seen_;
  if (leaf->stats.since_last_attempt >= cfg_.grace_period) {
    leaf->stats.since_last_attempt = 0;
    const SplitDecision d = attempt_split(leaf->stats, cfg_);
    if (d.split) split_leaf(*leaf, d, n_attrs_);
  }
}

int HoeffdingTree::leaf_count() const {
  int leaves = 0;
  std::vector<const Node*> stack{root_.get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (n->is_leaf) {
      ++leaves;
    } else {
      stack.push_back(n->left.get());
      stack.push_back(n->right.get());
    }
  }
  return leaves;
}

int HoeffdingTree::node_count() const {
  int nodes = 0;
  std::vector<const Node*> stack{root_.get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    ++nodes;
    if (!n->is_leaf) {
      stack.push_back(n->left.get());
      stack.push_back(n->right.get());
    }
  }
  return nodes;
}

int HoeffdingTree::depth() const {
  int deepest = 0;
  std::vector<std::pair<const Node*, int>> stack{{root_.get(), 0}};
  while (!stack.empty()) {
    auto [n, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!n->is_leaf) {
      stack.push_back({n->left.get(), d + 1});
      stack.push_back({n->right.get(), d + 1});
    }
  }
  return deepest;
}

std::int64_t HoeffdingTree::total_leaf_count() const {
  std::int64_t total = 0;
  std::vector<const Node*> stack{root_.get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (n->is_leaf) {
      total += n->stats.total_count();
    } else {
      stack.push_back(n->left.get());
      stack.push_back(n->right.get());
    }
  }
  return total;
}

bool HoeffdingTree::splits_on(int attribute) const {
  std::vector<const Node*> stack{root_.get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!n->is_leaf) {
      if (n->attribute == attribute) return true;
      stack.push_back(n->left.get());
      stack.push_back(n->right.get());
    }
  }
  return false;
}

std::string HoeffdingTree::to_json() const {
  std::function<nlohmann::ordered_json(const Node*)> dump =
      [&](const Node* n) -> nlohmann::ordered_json {
    nlohmann::ordered_json j;
    if (n->is_leaf) {
      j["type"] = "leaf";
      const auto c = n->stats.class_counts();
      j["counts"] = {c[0], c[1], c[2]};
    } else {
      j["type"] = "split";
      j["attribute"] = n->attribute;
      j["threshold"] = n->threshold;
      j["left"] = dump(n->left.get());
      j["right"] = dump(n->right.get());
    }
    return j;
  };
  nlohmann::ordered_json j;
  j["instances_seen"] = instances_seen_;
  j["root"] = dump(root_.get());
  return j.dump();
}

}  // namespace delaycast
