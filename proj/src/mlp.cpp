#include "delaycast/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "delaycast/rng.hpp"
#include "json.hpp"

namespace delaycast {

namespace {

constexpr double kStdFloor = 1e-9;

void check_training_set(const TrainingSet& t) {
  if (t.empty()) throw InputError("mlp: empty training set");
  const std::size_t arity = t.front().first.arity();
  if (arity == 0) throw InputError("mlp: zero-arity features");
  for (const auto& [x, y] : t) {
    (void)y;
    if (x.arity() != arity) {
      throw InputError("mlp: non-uniform feature arity in training set");
    }
    for (double v : x.values) {
      if (!std::isfinite(v)) throw InputError("mlp: non-finite feature value");
    }
  }
}

void softmax3(const double* z, double* p) {
  const double m = std::max(z[0], std::max(z[1], z[2]));
  double sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    p[c] = std::exp(z[c] - m);
    sum += p[c];
  }
  for (int c = 0; c < 3; ++c) p[c] /= sum;
}

struct ForwardScratch {
  std::vector<double> xs;   // scaled input
  std::vector<double> h;    // tanh activations
  double z2[3];
  double p[3];
};

void forward(const MLPModel& m, const FeatureVector& x, ForwardScratch& s) {
  s.xs = m.scaler.transform(x);
  s.h.assign(static_cast<std::size_t>(m.n_hidden), 0.0);
  for (int j = 0; j < m.n_hidden; ++j) {
    double z = m.b1[static_cast<std::size_t>(j)];
    const double* row = &m.w1[static_cast<std::size_t>(j) *
                              static_cast<std::size_t>(m.n_inputs)];
    for (int i = 0; i < m.n_inputs; ++i) z += row[i] * s.xs[static_cast<std::size_t>(i)];
    s.h[static_cast<std::size_t>(j)] = std::tanh(z);
  }
  for (int c = 0; c < 3; ++c) {
    double z = m.b2[static_cast<std::size_t>(c)];
    const double* row = &m.w2[static_cast<std::size_t>(c) *
                              static_cast<std::size_t>(m.n_hidden)];
    for (int j = 0; j < m.n_hidden; ++j) z += row[j] * s.h[static_cast<std::size_t>(j)];
    s.z2[c] = z;
  }
  softmax3(s.z2, s.p);
}

// Accumulates the batch-mean gradient of the full objective into g.
void accumulate_gradient(const MLPModel& m, std::span<const TrainingExample> batch,
                         MLPGradient& g) {
  g.w1.assign(m.w1.size(), 0.0);
  g.b1.assign(m.b1.size(), 0.0);
  g.w2.assign(m.w2.size(), 0.0);
  g.b2.assign(m.b2.size(), 0.0);
  ForwardScratch s;
  std::vector<double> dh(static_cast<std::size_t>(m.n_hidden));
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const auto& [x, y] : batch) {
    forward(m, x, s);
    double dz2[3];
    for (int c = 0; c < 3; ++c) {
      dz2[c] = (s.p[c] - (encode_label(y) == c ? 1.0 : 0.0)) * inv_b;
    }
    for (int c = 0; c < 3; ++c) {
      double* grow = &g.w2[static_cast<std::size_t>(c) *
                           static_cast<std::size_t>(m.n_hidden)];
      for (int j = 0; j < m.n_hidden; ++j) {
        grow[j] += dz2[c] * s.h[static_cast<std::size_t>(j)];
      }
      g.b2[static_cast<std::size_t>(c)] += dz2[c];
    }
    for (int j = 0; j < m.n_hidden; ++j) {
      double v = 0.0;
      for (int c = 0; c < 3; ++c) {
        v += m.w2[static_cast<std::size_t>(c) *
                      static_cast<std::size_t>(m.n_hidden) +
                  static_cast<std::size_t>(j)] *
             dz2[c];
      }
      const double hj = s.h[static_cast<std::size_t>(j)];
      dh[static_cast<std::size_t>(j)] = v * (1.0 - hj * hj);
    }
    for (int j = 0; j < m.n_hidden; ++j) {
      double* grow = &g.w1[static_cast<std::size_t>(j) *
                           static_cast<std::size_t>(m.n_inputs)];
      const double dzj = dh[static_cast<std::size_t>(j)];
      for (int i = 0; i < m.n_inputs; ++i) {
        grow[i] += dzj * s.xs[static_cast<std::size_t>(i)];
      }
      g.b1[static_cast<std::size_t>(j)] += dzj;
    }
  }
  // l2 penalty acts on weights only, with d(l2 * w^2)/dw = 2 * l2 * w.
  for (std::size_t i = 0; i < m.w1.size(); ++i) g.w1[i] += 2.0 * m.cfg.l2 * m.w1[i];
  for (std::size_t i = 0; i < m.w2.size(); ++i) g.w2[i] += 2.0 * m.cfg.l2 * m.w2[i];
}

double data_loss(const MLPModel& m, std::span<const TrainingExample> batch) {
  ForwardScratch s;
  double loss = 0.0;
  for (const auto& [x, y] : batch) {
    forward(m, x, s);
    loss -= std::log(std::max(s.p[encode_label(y)], 1e-300));
  }
  return loss / static_cast<double>(batch.size());
}

}  // namespace

void MLPConfig::validate() const {
  if (hidden_neurons < 0) throw InputError("mlp hidden_neurons must be >= 0");
  if (!(learning_rate > 0.0)) throw InputError("mlp learning_rate must be > 0");
  if (epochs < 0) throw InputError("mlp epochs must be >= 0");
  if (l2 < 0.0) throw InputError("mlp l2 must be >= 0");
  if (batch_size < 1) throw InputError("mlp batch_size must be >= 1");
}

std::vector<double> Scaler::transform(const FeatureVector& x) const {
  if (x.arity() != mean.size()) {
    throw InputError("scaler arity mismatch: " + std::to_string(x.arity()) +
                     " vs " + std::to_string(mean.size()));
  }
  std::vector<double> out(x.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (x.values[i] - mean[i]) / stddev[i];
  }
  return out;
}

Scaler fit_scaler(const TrainingSet& t) {
  check_training_set(t);
  const std::size_t n = t.front().first.arity();
  Scaler s;
  s.mean.assign(n, 0.0);
  s.stddev.assign(n, 0.0);
  for (const auto& [x, y] : t) {
    (void)y;
    for (std::size_t i = 0; i < n; ++i) s.mean[i] += x.values[i];
  }
  for (std::size_t i = 0; i < n; ++i) s.mean[i] /= static_cast<double>(t.size());
  for (const auto& [x, y] : t) {
    (void)y;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x.values[i] - s.mean[i];
      s.stddev[i] += d * d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    s.stddev[i] = std::max(std::sqrt(s.stddev[i] / static_cast<double>(t.size())),
                           kStdFloor);
  }
  return s;
}

MLPModel mlp_train(const TrainingSet& t, const MLPConfig& cfg) {
  cfg.validate();
  check_training_set(t);

  MLPModel m;
  m.n_inputs = static_cast<int>(t.front().first.arity());
  m.hidden_overridden = cfg.hidden_neurons != 0;
  m.n_hidden = m.hidden_overridden ? cfg.hidden_neurons : 2 * m.n_inputs;
  m.cfg = cfg;
  m.cfg.hidden_neurons = m.n_hidden;
  m.scaler = fit_scaler(t);
  m.trained_on = static_cast<std::int64_t>(t.size());

  Rng rng(cfg.seed);
  const auto xavier = [&](std::vector<double>& w, int fan_in, int fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : w) v = rng.uniform(-limit, limit);
  };
  m.w1.assign(static_cast<std::size_t>(m.n_hidden) *
                  static_cast<std::size_t>(m.n_inputs),
              0.0);
  m.b1.assign(static_cast<std::size_t>(m.n_hidden), 0.0);
  m.w2.assign(3 * static_cast<std::size_t>(m.n_hidden), 0.0);
  m.b2.assign(3, 0.0);
  xavier(m.w1, m.n_inputs, m.n_hidden);
  xavier(m.w2, m.n_hidden, 3);

  std::vector<std::size_t> order(t.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<TrainingExample> batch;
  MLPGradient g;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with our own uniform draw keeps the shuffle reproducible.
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
      std::swap(order[i], order[j]);
    }
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(t[order[k]]);
      accumulate_gradient(m, batch, g);
      const double lr = cfg.learning_rate;
      for (std::size_t i = 0; i < m.w1.size(); ++i) m.w1[i] -= lr * g.w1[i];
      for (std::size_t i = 0; i < m.b1.size(); ++i) m.b1[i] -= lr * g.b1[i];
      for (std::size_t i = 0; i < m.w2.size(); ++i) m.w2[i] -= lr * g.w2[i];
      for (std::size_t i = 0; i < m.b2.size(); ++i) m.b2[i] -= lr * g.b2[i];
    }
  }
  m.final_loss = data_loss(m, std::span<const TrainingExample>(t));
  return m;
}

Prediction mlp_predict(const MLPModel& m, const FeatureVector& x) {
  if (static_cast<int>(x.arity()) != m.n_inputs) {
    throw InputError("mlp predict: arity " + std::to_string(x.arity()) +
                     " does not match model arity " + std::to_string(m.n_inputs));
  }
  ForwardScratch s;
  forward(m, x, s);
  Prediction p;
  p.scores = {s.p[0], s.p[1], s.p[2]};
  p.label = argmax_label(p.scores);
  return p;
}

double mlp_loss(const MLPModel& m, std::span<const TrainingExample> batch) {
  if (batch.empty()) throw InputError("mlp loss: empty batch");
  double penalty = 0.0;
  for (double w : m.w1) penalty += w * w;
  for (double w : m.w2) penalty += w * w;
  return data_loss(m, batch) + m.cfg.l2 * penalty;
}

MLPGradient mlp_gradient(const MLPModel& m, std::span<const TrainingExample> batch) {
  if (batch.empty()) throw InputError("mlp gradient: empty batch");
  for (const auto& [x, y] : batch) {
    (void)y;
    if (static_cast<int>(x.arity()) != m.n_inputs) {
      throw InputError("mlp gradient: feature arity mismatch");
    }
  }
  MLPGradient g;
  accumulate_gradient(m, batch, g);
  return g;
}

std::string mlp_to_json(const MLPModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "delaycast-mlp";
  j["version"] = 1;
  j["config"] = {{"hidden_neurons", m.cfg.hidden_neurons},
                 {"learning_rate", m.cfg.learning_rate},
                 {"epochs", m.cfg.epochs},
                 {"seed", m.cfg.seed},
                 {"l2", m.cfg.l2},
                 {"batch_size", m.cfg.batch_size}};
  j["hidden_overridden"] = m.hidden_overridden;
  j["n_inputs"] = m.n_inputs;
  j["n_hidden"] = m.n_hidden;
  j["scaler"] = {{"mean", m.scaler.mean}, {"stddev", m.scaler.stddev}};
  j["w1"] = m.w1;
  j["b1"] = m.b1;
  j["w2"] = m.w2;
  j["b2"] = m.b2;
  j["trained_on"] = m.trained_on;
  j["final_loss"] = m.final_loss;
  return j.dump();
}

MLPModel mlp_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("bad mlp JSON: ") + e.what());
  }
  MLPModel m;
  try {
    if (j.at("format").get<std::string>() != "delaycast-mlp") {
      throw InputError("not an mlp model file");
    }
    const auto& c = j.at("config");
    m.cfg.hidden_neurons = c.at("hidden_neurons").get<int>();
    m.cfg.learning_rate = c.at("learning_rate").get<double>();
    m.cfg.epochs = c.at("epochs").get<int>();
    m.cfg.seed = c.at("seed").get<std::uint64_t>();
    m.cfg.l2 = c.at("l2").get<double>();
    m.cfg.batch_size = c.at("batch_size").get<int>();
    m.hidden_overridden = j.at("hidden_overridden").get<bool>();
    m.n_inputs = j.at("n_inputs").get<int>();
    m.n_hidden = j.at("n_hidden").get<int>();
    m.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
    m.scaler.stddev = j.at("scaler").at("stddev").get<std::vector<double>>();
    m.w1 = j.at("w1").get<std::vector<double>>();
    m.b1 = j.at("b1").get<std::vector<double>>();
    m.w2 = j.at("w2").get<std::vector<double>>();
    m.b2 = j.at("b2").get<std::vector<double>>();
    m.trained_on = j.at("trained_on").get<std::int64_t>();
    m.final_loss = j.at("final_loss").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad mlp JSON: ") + e.what());
  }
  return m;
}

void save_mlp(const std::string& path, const MLPModel& m) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write model file: " + path);
  out << mlp_to_json(m) << '\n';
}

MLPModel load_mlp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return mlp_from_json(ss.str());
}

}  // namespace delaycast
