#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hitl/blocker/dataset.hpp"

namespace hitl {

struct TrainConfig {
  std::size_t epochs = 60;
  double learning_rate = 0.05;
  double l2 = 1e-4;
};

/// Linear threshold model over standardised features: catastrophic iff
/// w . z + b >= threshold, with z = (x - mean) / scale.
struct ClassifierModel {
  std::vector<double> weights;
  double bias = 0.0;
  double threshold = 0.0;
  std::vector<double> mean;
  std::vector<double> scale;

  double score(const std::vector<double>& x) const {
    if (x.size() != weights.size()) throw UsageError("classifier: feature length mismatch");
    double s = bias;
    for (std::size_t i = 0; i < x.size(); ++i) s += weights[i] * (x[i] - mean[i]) / scale[i];
    return s;
  }

  bool predict_catastrophic(const std::vector<double>& x) const { return score(x) >= threshold; }

  nlohmann::json to_json() const {
    return {{"weights", weights}, {"bias", bias}, {"threshold", threshold}, {"mean", mean}, {"scale", scale}};
  }

  static ClassifierModel from_json(const nlohmann::json& j) {
    ClassifierModel m;
    j.at("weights").get_to(m.weights);
    j.at("bias").get_to(m.bias);
    j.at("threshold").get_to(m.threshold);
    j.at("mean").get_to(m.mean);
    j.at("scale").get_to(m.scale);
    return m;
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigurationError("cannot write model " + path);
    out << to_json().dump(2) << '\n';
  }
};

/// Logistic-loss SGD with class-balanced weights, then the decision threshold
/// is lowered (never raised above 0) until every training positive is flagged.
inline ClassifierModel train_classifier(const std::vector<const LabeledSample*>& train, const TrainConfig& cfg, Rng& rng) {
  if (train.empty()) throw UsageError("train_classifier: empty training set");
  const std::size_t dim = train.front()->features.size();
  ClassifierModel m;
  m.weights.assign(dim, 0.0);
  m.mean.assign(dim, 0.0);
  m.scale.assign(dim, 0.0);
  for (const auto* s : train) {
    for (std::size_t i = 0; i < dim; ++i) m.mean[i] += s->features[i];
  }
  for (double& v : m.mean) v /= static_cast<double>(train.size());
  for (const auto* s : train) {
    for (std::size_t i = 0; i < dim; ++i) m.scale[i] += std::pow(s->features[i] - m.mean[i], 2);
  }
  for (double& v : m.scale) {
    v = std::sqrt(v / static_cast<double>(train.size()));
    if (v < 1e-12) v = 1.0;
  }

  std::size_t positives = 0;
  for (const auto* s : train) positives += s->label == Label::kCatastrophic;
  const std::size_t negatives = train.size() - positives;
  const double w_pos = positives ? 0.5 * static_cast<double>(train.size()) / positives : 0.0;
  const double w_neg = negatives ? 0.5 * static_cast<double>(train.size()) / negatives : 0.0;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> z(dim);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    const double lr = cfg.learning_rate / (1.0 + 0.1 * static_cast<double>(epoch));
    for (std::size_t idx : order) {
      const LabeledSample& s = *train[idx];
      double score = m.bias;
      for (std::size_t i = 0; i < dim; ++i) {
        z[i] = (s.features[i] - m.mean[i]) / m.scale[i];
        score += m.weights[i] * z[i];
      }
      const double y = s.label == Label::kCatastrophic ? 1.0 : 0.0;
      const double p = 1.0 / (1.0 + std::exp(-score));
      const double g = (p - y) * (y > 0.5 ? w_pos : w_neg);
      for (std::size_t i = 0; i < dim; ++i) m.weights[i] -= lr * (g * z[i] + cfg.l2 * m.weights[i]);
      m.bias -= lr * g;
    }
  }

  for (const auto* s : train) {
    if (s->label == Label::kCatastrophic) m.threshold = std::min(m.threshold, m.score(s->features));
  }
  return m;
}

}  // namespace hitl
