#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "hitl/blocker/classifier.hpp"

namespace hitl {

enum class GateStatus { kHumanActive, kClassifierActive };

struct HandoffGate {
  std::size_t min_samples = 2000;
  double holdout_fraction = 0.25;
  std::size_t max_false_negatives = 0;
  GateStatus status = GateStatus::kHumanActive;
};

struct GateResult {
  ClassifierModel model;
  bool passed = false;
  std::size_t holdout_size = 0;
  std::size_t holdout_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t false_positives = 0;
  std::string diagnostic;
};

/// Splits the data (per class, so both labels appear in the holdout), trains
/// on the remainder and passes iff holdout false negatives stay within the
/// gate's allowance. A pass moves the gate to classifier-active; nothing ever
/// moves it back.
inline GateResult train_and_gate(const Dataset& data, HandoffGate& gate, const TrainConfig& cfg, Rng& rng) {
  if (data.size() < gate.min_samples) {
    throw UsageError("train_and_gate: " + std::to_string(data.size()) + " samples, gate needs " +
                     std::to_string(gate.min_samples));
  }
  if (!(gate.holdout_fraction > 0.0 && gate.holdout_fraction < 1.0)) {
    throw ConfigurationError("train_and_gate: holdout fraction must lie in (0, 1)");
  }
  GateResult result;
  std::vector<const LabeledSample*> pos, neg;
  for (const auto& s : data.samples()) (s.label == Label::kCatastrophic ? pos : neg).push_back(&s);
  if (pos.empty() || neg.empty()) {
    result.diagnostic = pos.empty() ? "no positive examples" : "no negative examples";
    return result;
  }

  std::vector<const LabeledSample*> train, holdout;
  auto split = [&](std::vector<const LabeledSample*>& group) {
    for (std::size_t i = group.size(); i > 1; --i) std::swap(group[i - 1], group[rng.index(i)]);
    std::size_t k = static_cast<std::size_t>(std::llround(gate.holdout_fraction * static_cast<double>(group.size())));
    k = std::clamp<std::size_t>(k, 1, group.size() - (group.size() > 1 ? 1 : 0));
    holdout.insert(holdout.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(k));
    train.insert(train.end(), group.begin() + static_cast<std::ptrdiff_t>(k), group.end());
  };
  split(pos);
  split(neg);
  result.holdout_size = holdout.size();

  bool train_has_positive = false;
  for (const auto* s : train) train_has_positive |= s->label == Label::kCatastrophic;
  if (!train_has_positive) {
    result.diagnostic = "too few positive examples to train and hold out";
    return result;
  }

  result.model = train_classifier(train, cfg, rng);
  for (const auto* s : holdout) {
    const bool flagged = result.model.predict_catastrophic(s->features);
    if (s->label == Label::kCatastrophic) {
      ++result.holdout_positives;
      result.false_negatives += !flagged;
    } else {
      result.false_positives += flagged;
    }
  }
  result.passed = result.false_negatives <= gate.max_false_negatives;
  result.diagnostic = std::to_string(result.false_negatives) + " false negatives, " +
                      std::to_string(result.false_positives) + " false positives on " +
                      std::to_string(result.holdout_size) + " held-out samples";
  if (result.passed) gate.status = GateStatus::kClassifierActive;
  return result;
}

}  // namespace hitl
