#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <spdlog/spdlog.h>

#include "hitl/blocker/catcher_features.hpp"
#include "hitl/blocker/gate.hpp"
#include "hitl/protocols/prune.hpp"

namespace hitl {

struct BlockerConfig {
  HandoffGate gate;
  TrainConfig train;
  double r_bad = -200.0;
  int max_requeries = 100;
  /// Once the dataset reaches min_samples, try the gate every this many new samples.
  std::size_t gate_every = 500;
  /// Post-handoff audit period in steps (0 disables). Log-only.
  std::size_t audit_every = 0;
};

struct AuditResult {
  std::size_t step = 0;
  std::size_t checked = 0;
  std::size_t false_negatives = 0;
};

/// Catastrophe blocking with handoff from a human labeller to a classifier.
///
/// While human-active, every proposal is judged by the advisor
/// (catastrophe-label queries) and the verdict is stored as a labelled sample;
/// blocking works exactly like action pruning. Once the gate passes, the
/// trained classifier judges proposals and the human is no longer asked.
class CatastropheBlocker final : public Protocol {
 public:
  CatastropheBlocker(std::unique_ptr<Learner> inner, FeatureFn features, std::shared_ptr<Advisor> human,
                     BlockerConfig config, std::size_t n_actions, std::uint64_t seed)
      : CatastropheBlocker(std::make_shared<State>(std::move(features), std::move(human), config, seed), std::move(inner),
                           n_actions) {}

  void set_observer(StepObserver* observer) override {
    observer_ = observer;
    static_cast<PruneActions&>(inner()).set_observer(observer);
  }

  ActionId act(const Observation& obs, double reward) override {
    const ActionId a = inner().act(obs, reward);
    state_->after_step();
    return a;
  }

  /// Stores a verdict on a proposed (state, action). Human phase only.
  void record_verdict(const Observation& obs, ActionId action, bool catastrophic) {
    state_->record(obs, action, catastrophic);
  }

  /// Runs the gate now on the current dataset; on pass the classifier takes over.
  GateResult try_handoff() { return state_->handoff(); }

  GateStatus status() const { return state_->config.gate.status; }
  const Dataset& dataset() const { return state_->data; }
  const std::optional<ClassifierModel>& model() const { return state_->model; }
  const std::vector<GateResult>& gate_history() const { return state_->attempts; }
  const std::vector<AuditResult>& audits() const { return state_->audits; }
  /// Decisions taken when the gate passed; the classifier judged every later one.
  std::optional<std::size_t> handoff_step() const { return state_->handoff_at; }
  /// Advisor consulted in audit mode after handoff (label queries, log-only).
  void set_auditor(std::shared_ptr<Advisor> auditor) { state_->auditor = std::move(auditor); }

 private:
  struct State {
    State(FeatureFn f, std::shared_ptr<Advisor> h, BlockerConfig c, std::uint64_t seed)
        : features(std::move(f)), human(std::move(h)), config(c), rng(seed) {
      if (!features) throw ConfigurationError("blocker without a feature map");
      if (!human) throw ConfigurationError("blocker needs a human advisor while human-active");
    }

    bool judge(const Observation& obs, ActionId a) {
      if (config.gate.status == GateStatus::kClassifierActive) {
        const auto x = features(obs, a);
        if (config.audit_every) recent.push_back({obs, a});
        return model->predict_catastrophic(x);
      }
      AdviceQuery q;
      q.kind = QueryKind::kCatastropheLabel;
      q.state = obs;
      q.proposed = a;
      const bool catastrophic = human->respond(q).block.value_or(false);
      record(obs, a, catastrophic);
      return catastrophic;
    }

    void record(const Observation& obs, ActionId a, bool catastrophic) {
      if (config.gate.status != GateStatus::kHumanActive) {
        throw UsageError("record_verdict: the classifier is active; the human has retired");
      }
      data.add({features(obs, a), catastrophic ? Label::kCatastrophic : Label::kSafe, SampleSource::kHuman});
    }

    GateResult handoff() {
      GateResult r = train_and_gate(data, config.gate, config.train, rng);
      last_attempt = data.size();
      spdlog::info("blocker gate on {} samples: {} ({})", data.size(), r.passed ? "pass" : "fail", r.diagnostic);
      if (r.passed) {
        model = r.model;
        handoff_at = steps;
      }
      attempts.push_back(r);
      return r;
    }

    void after_step() {
      ++steps;
      if (config.gate.status == GateStatus::kHumanActive) {
        if (data.size() >= config.gate.min_samples && data.size() - last_attempt >= config.gate_every) handoff();
        return;
      }
      ++post_handoff_steps;
      if (config.audit_every && post_handoff_steps % config.audit_every == 0) audit();
    }

    void audit() {
      AuditResult a{steps, 0, 0};
      if (auditor) {
        for (const auto& [obs, action] : recent) {
          AdviceQuery q;
          q.kind = QueryKind::kCatastropheLabel;
          q.state = obs;
          q.proposed = action;
          const bool truth = auditor->respond(q).block.value_or(false);
          ++a.checked;
          a.false_negatives += truth && !model->predict_catastrophic(features(obs, action));
        }
        if (a.false_negatives) spdlog::warn("blocker audit at step {}: {} missed catastrophes", steps, a.false_negatives);
      }
      audits.push_back(a);
      recent.clear();
    }

    FeatureFn features;
    std::shared_ptr<Advisor> human;
    std::shared_ptr<Advisor> auditor;
    BlockerConfig config;
    Rng rng;
    Dataset data;
    std::optional<ClassifierModel> model;
    std::vector<GateResult> attempts;
    std::vector<AuditResult> audits;
    std::vector<std::pair<Observation, ActionId>> recent;
    std::size_t last_attempt = 0;
    std::size_t steps = 0;
    std::size_t post_handoff_steps = 0;
    std::optional<std::size_t> handoff_at;
  };

  CatastropheBlocker(std::shared_ptr<State> state, std::unique_ptr<Learner> inner, std::size_t n_actions)
      : Protocol(std::make_unique<PruneActions>(
            std::move(inner),
            PruneConfig{[s = state.get()](const Observation& o, ActionId a) { return s->judge(o, a); },
                        state->config.r_bad, state->config.max_requeries, false},
            n_actions)),
        state_(std::move(state)) {}

  std::shared_ptr<State> state_;
};

}  // namespace hitl
