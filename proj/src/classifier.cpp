#include "synkb/classifier.hpp"

#include "synkb/sigmoid.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace synkb {

namespace {

constexpr char kModelMagic[] = "SYNKBLIN1";

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double example_weight(int label, double positive_weight) {
  return label > 0 ? positive_weight : 1.0;
}

}  // namespace

void ExampleSet::add(std::span<const double> features, int label) {
  if (x.cols == 0) x.cols = features.size();
  if (features.size() != x.cols) {
    throw std::invalid_argument("inconsistent feature length in example set");
  }
  if (label != 1 && label != -1) throw std::invalid_argument("label must be +1 or -1");
  x.data.insert(x.data.end(), features.begin(), features.end());
  ++x.rows;
  labels.push_back(label);
}

double objective(const LinearModel& model, const ExampleSet& data, double positive_weight,
                 double reg_strength) {
  double total_weight = 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double z = model.score(data.x.row(i));
    const double c = example_weight(data.labels[i], positive_weight);
    total_weight += c;
    loss += c * softplus(-static_cast<double>(data.labels[i]) * z);
  }
  double reg = 0.0;
  for (double w : model.weights) reg += w * w;
  return 0.5 * reg_strength * reg + loss / total_weight;
}

namespace {

// Gradient of the full objective at (w, b); returns the loss as well.
double full_gradient(const LinearModel& model, const ExampleSet& data,
                     const TrainOptions& opts, std::vector<double>& gw, double& gb) {
  const std::size_t f = data.feature_count();
  gw.assign(f, 0.0);
  gb = 0.0;
  double total_weight = 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double* row = data.x.row(i);
    const double y = data.labels[i];
    const double c = example_weight(data.labels[i], opts.positive_weight);
    total_weight += c;
    const double z = model.score(row);
    loss += c * softplus(-y * z);
    const double g = c * -y * Sigmoid::exact(-y * z);
    for (std::size_t d = 0; d < f; ++d) gw[d] += g * row[d];
    gb += g;
  }
  double reg = 0.0;
  const double inv = 1.0 / total_weight;
  for (std::size_t d = 0; d < f; ++d) {
    gw[d] = gw[d] * inv + opts.reg_strength * model.weights[d];
    reg += model.weights[d] * model.weights[d];
  }
  gb *= inv;
  return 0.5 * opts.reg_strength * reg + loss * inv;
}

LinearModel train_full_batch(const ExampleSet& data, const TrainOptions& opts) {
  LinearModel model;
  model.weights.assign(data.feature_count(), 0.0);
  std::vector<double> gw;
  double gb = 0.0;
  double loss = full_gradient(model, data, opts, gw, gb);
  double step = 1.0;
  LinearModel trial = model;
  for (unsigned epoch = 0; epoch < opts.epochs; ++epoch) {
    step *= 2.0;
    bool improved = false;
    while (step > 1e-14) {
      for (std::size_t d = 0; d < gw.size(); ++d) {
        trial.weights[d] = model.weights[d] - step * gw[d];
      }
      trial.bias = model.bias - step * gb;
      const double trial_loss = objective(trial, data, opts.positive_weight, opts.reg_strength);
      if (trial_loss <= loss) {
        model.weights = trial.weights;
        model.bias = trial.bias;
        loss = trial_loss;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;  // no descent direction step left: converged
    loss = full_gradient(model, data, opts, gw, gb);
  }
  return model;
}

LinearModel train_sgd(const ExampleSet& data, const TrainOptions& opts) {
  const std::size_t n = data.size();
  const std::size_t f = data.feature_count();
  LinearModel model;
  model.weights.assign(f, 0.0);

  double total_weight = 0.0;
  for (int y : data.labels) total_weight += example_weight(y, opts.positive_weight);
  const double scale_n = static_cast<double>(n) / total_weight;

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(opts.seed);

  const std::uint64_t total_steps = static_cast<std::uint64_t>(n) * opts.epochs;
  const std::uint64_t avg_start =
      static_cast<std::uint64_t>(static_cast<double>(total_steps) * opts.average_start);
  std::vector<double> avg_w(f, 0.0);
  double avg_b = 0.0;
  std::uint64_t averaged = 0;

  std::uint64_t t = 0;
  for (unsigned epoch = 0; epoch < opts.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::uint32_t idx : order) {
      const double* row = data.x.row(idx);
      const double y = data.labels[idx];
      const double c = example_weight(data.labels[idx], opts.positive_weight);
      const double lr =
          opts.initial_lr / (1.0 + opts.initial_lr * opts.reg_strength * static_cast<double>(t));
      const double z = model.score(row);
      const double g = scale_n * c * -y * Sigmoid::exact(-y * z);
      const double shrink = 1.0 - lr * opts.reg_strength;
      for (std::size_t d = 0; d < f; ++d) {
        model.weights[d] = model.weights[d] * shrink - lr * g * row[d];
      }
      model.bias -= lr * g;
      ++t;
      if (t > avg_start) {
        ++averaged;
        for (std::size_t d = 0; d < f; ++d) avg_w[d] += model.weights[d];
        avg_b += model.bias;
      }
    }
  }
  if (averaged > 0) {
    const double inv = 1.0 / static_cast<double>(averaged);
    for (std::size_t d = 0; d < f; ++d) model.weights[d] = avg_w[d] * inv;
    model.bias = avg_b * inv;
  }
  return model;
}

}  // namespace

LinearModel train_linear(const ExampleSet& data, const TrainOptions& opts) {
  if (data.size() == 0) throw DataError("empty training set");
  std::size_t pos = 0;
  for (int y : data.labels) pos += y > 0;
  if (pos == 0 || pos == data.size()) {
    throw DataError("training set needs both a positive and a negative example");
  }
  if (!(opts.positive_weight > 0)) throw UsageError("positive weight must be > 0");
  if (!(opts.reg_strength >= 0)) throw UsageError("regularization must be >= 0");
  if (opts.epochs < 1) throw UsageError("epochs must be >= 1");
  return opts.full_batch ? train_full_batch(data, opts) : train_sgd(data, opts);
}

Prediction predict(const LinearModel& model, std::span<const double> features,
                   std::uint64_t layout_id) {
  if (layout_id != model.layout_id) {
    throw DataError("feature layout does not match the model's layout");
  }
  if (features.size() != model.weights.size()) {
    throw DataError("feature vector length does not match model");
  }
  Prediction p;
  p.score = model.score(features.data());
  p.label = p.score > 0 ? 1 : -1;
  return p;
}

EvalReport evaluate(const LinearModel& model, const ExampleSet& data) {
  if (data.feature_count() != model.weights.size()) {
    throw DataError("feature vector length does not match model");
  }
  EvalReport r;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const bool predicted_pos = model.score(data.x.row(i)) > 0;
    const bool actual_pos = data.labels[i] > 0;
    if (predicted_pos && actual_pos) ++r.tp;
    else if (predicted_pos) ++r.fp;
    else if (actual_pos) ++r.fn;
    else ++r.tn;
  }
  if (r.tp + r.fp > 0) r.precision = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp);
  if (r.tp + r.fn > 0) r.recall = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
  if (r.precision + r.recall > 0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  }
  return r;
}

void LinearModel::save(const std::string& path, bool binary) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  char buf[64];
  out << kModelMagic << (binary ? " binary\n" : " text\n");
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(layout_id));
  out << "layout " << buf << '\n';
  out << "dim " << dim << '\n';
  out << "groups " << groups.to_string() << '\n';
  out << "count " << weights.size() << '\n';
  if (binary) {
    out << "data\n";
    out.write(reinterpret_cast<const char*>(&bias), sizeof(double));
    out.write(reinterpret_cast<const char*>(weights.data()),
              static_cast<std::streamsize>(weights.size() * sizeof(double)));
  } else {
    std::snprintf(buf, sizeof(buf), "%.17g", bias);
    out << "bias " << buf << '\n';
    for (double w : weights) {
      std::snprintf(buf, sizeof(buf), "%.17g", w);
      out << buf << '\n';
    }
  }
  if (!out) throw DataError("write failed: " + path);
}

LinearModel LinearModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::string line;

  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line)) throw DataError(path + ": truncated model file");
    return line;
  };
  auto field = [&](const std::string& l, std::string_view key) -> std::string {
    const auto sp = l.find(' ');
    if (sp == std::string::npos || std::string_view(l).substr(0, sp) != key) {
      throw DataError(path + ": expected '" + std::string(key) + "' line, got '" + l + "'");
    }
    return l.substr(sp + 1);
  };

  const std::string head = next_line();
  bool binary = false;
  if (head == std::string(kModelMagic) + " binary") binary = true;
  else if (head != std::string(kModelMagic) + " text") {
    throw DataError(path + ": not a linear model file");
  }

  LinearModel model;
  const std::string layout_hex = field(next_line(), "layout");
  std::uint64_t stored_layout = 0;
  {
    auto [p, ec] = std::from_chars(layout_hex.data(), layout_hex.data() + layout_hex.size(),
                                   stored_layout, 16);
    if (ec != std::errc() || p != layout_hex.data() + layout_hex.size()) {
      throw DataError(path + ": bad layout id '" + layout_hex + "'");
    }
  }
  model.dim = std::stoull(field(next_line(), "dim"));
  model.groups = FeatureGroups::parse(field(next_line(), "groups"));
  const std::size_t count = std::stoull(field(next_line(), "count"));
  model.layout_id = feature_layout_id(model.dim, model.groups);
  if (model.layout_id != stored_layout) {
    throw DataError(path + ": layout id does not match dim/groups header");
  }

  model.weights.resize(count);
  if (binary) {
    if (next_line() != "data") throw DataError(path + ": expected 'data' line");
    in.read(reinterpret_cast<char*>(&model.bias), sizeof(double));
    in.read(reinterpret_cast<char*>(model.weights.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw DataError(path + ": truncated weight block");
  } else {
    try {
      model.bias = std::stod(field(next_line(), "bias"));
      for (std::size_t i = 0; i < count; ++i) model.weights[i] = std::stod(next_line());
    } catch (const DataError&) {
      throw;
    } catch (const std::exception&) {
      throw DataError(path + ": bad number in model file");
    }
  }
  return model;
}

}  // namespace synkb
