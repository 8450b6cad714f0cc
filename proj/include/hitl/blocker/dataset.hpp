#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hitl/core/rng.hpp"
#include "hitl/core/types.hpp"

namespace hitl {

enum class Label { kSafe = 0, kCatastrophic = 1 };
enum class SampleSource { kHuman, kSynthetic };

struct LabeledSample {
  std::vector<double> features;
  Label label = Label::kSafe;
  SampleSource source = SampleSource::kHuman;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

/// Labelled (state, action) feature vectors. A feature vector appears at most
/// once; re-adding it overwrites the label and source. All vectors share one length.
class Dataset {
 public:
  void add(LabeledSample sample) {
    if (!samples_.empty() && sample.features.size() != samples_.front().features.size()) {
      throw UsageError("dataset: feature length " + std::to_string(sample.features.size()) + " differs from " +
                       std::to_string(samples_.front().features.size()));
    }
    if (auto it = index_.find(sample.features); it != index_.end()) {
      samples_[it->second].label = sample.label;
      samples_[it->second].source = sample.source;
      return;
    }
    index_.emplace(sample.features, samples_.size());
    samples_.push_back(std::move(sample));
  }

  bool contains(const std::vector<double>& features) const { return index_.count(features) > 0; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const LabeledSample& operator[](std::size_t i) const { return samples_.at(i); }
  const std::vector<LabeledSample>& samples() const { return samples_; }

  std::size_t count(Label label) const {
    std::size_t n = 0;
    for (const auto& s : samples_) n += s.label == label;
    return n;
  }

  /// CSV: one column per feature, then `label` (0 safe / 1 catastrophic) and `source`.
  void save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigurationError("cannot write dataset " + path);
    const std::size_t dim = samples_.empty() ? 0 : samples_.front().features.size();
    for (std::size_t i = 0; i < dim; ++i) out << 'f' << i << ',';
    out << "label,source\n";
    char buf[32];
    for (const auto& s : samples_) {
      for (double f : s.features) {
        auto r = std::to_chars(buf, buf + sizeof buf, f);
        out.write(buf, r.ptr - buf);
        out << ',';
      }
      out << static_cast<int>(s.label) << ',' << (s.source == SampleSource::kHuman ? "human" : "synthetic") << '\n';
    }
  }

  static Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open dataset " + path);
    Dataset out;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
      if (cells.size() < 2) throw ConfigurationError("dataset row too short in " + path);
      LabeledSample s;
      for (std::size_t i = 0; i + 2 < cells.size(); ++i) {
        double v = 0.0;
        std::from_chars(cells[i].data(), cells[i].data() + cells[i].size(), v);
        s.features.push_back(v);
      }
      s.label = cells[cells.size() - 2] == "1" ? Label::kCatastrophic : Label::kSafe;
      s.source = cells.back() == "synthetic" ? SampleSource::kSynthetic : SampleSource::kHuman;
      out.add(std::move(s));
    }
    return out;
  }

 private:
  std::vector<LabeledSample> samples_;
  std::map<std::vector<double>, std::size_t> index_;
};

/// Appends `count` jittered copies of uniformly drawn existing samples. Each
/// feature moves by U[-noise_scale, noise_scale]; labels are kept. A jittered
/// copy that lands exactly on an existing vector is dropped.
inline void augment_synthetic(Dataset& data, double noise_scale, std::size_t count, Rng& rng) {
  if (data.empty()) throw UsageError("augment_synthetic: empty dataset");
  const std::size_t original = data.size();
  for (std::size_t i = 0; i < count; ++i) {
    LabeledSample s = data[rng.index(original)];
    for (double& f : s.features) f += noise_scale * rng.uniform(-1.0, 1.0);
    s.source = SampleSource::kSynthetic;
    if (!data.contains(s.features)) data.add(std::move(s));
  }
}

}  // namespace hitl
