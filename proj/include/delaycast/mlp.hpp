#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "delaycast/stream_core.hpp"

namespace delaycast {

struct MLPConfig {
  int hidden_neurons = 0;      // 0 = auto: 2 * input arity
  double learning_rate = 0.01;
  int epochs = 300;
  std::uint64_t seed = 1;
  double l2 = 1e-4;            // objective += l2 * sum(w^2), weights only
  int batch_size = 32;

  void validate() const;  // throws InputError
};

// Per-feature standardization fitted on the training set.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> stddev;  // floored at 1e-9

  std::vector<double> transform(const FeatureVector& x) const;
};

using TrainingExample = std::pair<FeatureVector, DelayLabel>;
using TrainingSet = std::vector<TrainingExample>;

Scaler fit_scaler(const TrainingSet& t);

// One hidden layer (tanh), softmax output over the three labels. Frozen
// after training; every member is plain data so models copy and serialize
// freely.
struct MLPModel {
  MLPConfig cfg;  // resolved: hidden_neurons is concrete here
  bool hidden_overridden = false;
  int n_inputs = 0;
  int n_hidden = 0;
  Scaler scaler;
  std::vector<double> w1;  // n_hidden x n_inputs, row-major
  std::vector<double> b1;  // n_hidden
  std::vector<double> w2;  // 3 x n_hidden, row-major
  std::vector<double> b2;  // 3
  std::int64_t trained_on = 0;
  double final_loss = 0.0;  // mean cross-entropy on the training set (no l2)
};

struct MLPGradient {
  std::vector<double> w1, b1, w2, b2;
};

// Batch training by seeded mini-batch gradient descent on softmax
// cross-entropy. Identical (t, cfg) produce bit-identical models.
MLPModel mlp_train(const TrainingSet& t, const MLPConfig& cfg);

Prediction mlp_predict(const MLPModel& m, const FeatureVector& x);

// Mean objective over the batch: cross-entropy plus the l2 penalty.
double mlp_loss(const MLPModel& m, std::span<const TrainingExample> batch);

// Exact analytic gradient of mlp_loss with respect to every parameter.
MLPGradient mlp_gradient(const MLPModel& m, std::span<const TrainingExample> batch);

std::string mlp_to_json(const MLPModel& m);
MLPModel mlp_from_json(const std::string& text);
void save_mlp(const std::string& path, const MLPModel& m);
MLPModel load_mlp(const std::string& path);

}  // namespace delaycast
