#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "synkb/common.hpp"
#include "synkb/concept_space.hpp"
#include "synkb/matrix.hpp"

namespace synkb {

// Dense labeled examples. Labels are +1 / -1.
struct ExampleSet {
  Matrix x;
  std::vector<int> labels;

  ExampleSet() = default;
  explicit ExampleSet(std::size_t feature_count) { x.cols = feature_count; }

  std::size_t size() const { return labels.size(); }
  std::size_t feature_count() const { return x.cols; }

  void add(std::span<const double> features, int label);
};

struct TrainOptions {
  double positive_weight = 100.0;
  double reg_strength = 1e-4;
  unsigned epochs = 10;
  std::uint64_t seed = 1;
  double initial_lr = 0.05;
  // Full-batch gradient descent with backtracking instead of SGD: slower,
  // but the loss is monotone and both modes share one objective.
  bool full_batch = false;
  // Fraction of SGD steps taken before iterate averaging begins.
  double average_start = 0.5;
};

struct LinearModel {
  std::size_t dim = 0;  // embedding dim of the feature layout
  FeatureGroups groups;
  std::uint64_t layout_id = 0;
  std::vector<double> weights;
  double bias = 0.0;

  // No layout check; hot path for callers that validated the layout once.
  double score(const double* f) const {
    double z = bias;
    for (std::size_t i = 0; i < weights.size(); ++i) z += weights[i] * f[i];
    return z;
  }

  void set_layout(std::size_t embedding_dim, const FeatureGroups& g) {
    dim = embedding_dim;
    groups = g;
    layout_id = feature_layout_id(embedding_dim, g);
  }

  void save(const std::string& path, bool binary) const;
  static LinearModel load(const std::string& path);
};

struct Prediction {
  double score = 0.0;
  int label = -1;  // +1 iff score > 0
};

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

// Weighted L2-regularized logistic loss:
//   (reg/2)*|w|^2 + (1/S) * sum_i c_i * log(1 + exp(-y_i z_i))
// with c_i = positive_weight for positives, 1 otherwise, and S = sum c_i.
// Normalizing by S makes "weight k" and "duplicate positives k times"
// literally the same objective.
double objective(const LinearModel& model, const ExampleSet& data, double positive_weight,
                 double reg_strength);

// Minimizes the objective above. SGD visits a per-epoch shuffle with step
// size lr0/(1 + lr0*reg*t) and averaged late iterates; full-batch mode does
// backtracking gradient descent. Requires both classes present. The returned
// model has no layout set; callers stamp it via set_layout.
LinearModel train_linear(const ExampleSet& data, const TrainOptions& opts);

// Layout-checked single prediction. Label is +1 iff score > 0.
Prediction predict(const LinearModel& model, std::span<const double> features,
                   std::uint64_t layout_id);

EvalReport evaluate(const LinearModel& model, const ExampleSet& data);

}  // namespace synkb
