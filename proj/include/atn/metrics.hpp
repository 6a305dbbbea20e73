#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "atn/error.hpp"
#include "atn/tensor.hpp"

namespace atn {

struct ClassMetrics {
  double precision = 0.0;  // percentages
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct MetricsReport {
  double accuracy = 0.0;  // percentages
  double macro_f1 = 0.0;
  std::vector<ClassMetrics> per_class;
  std::vector<std::vector<std::size_t>> confusion;  // [gold][pred]
  std::size_t total = 0;
};

// Ties in the probability vector break toward the lowest class index.
inline std::size_t argmax_class(const Tensor& probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.numel(); ++i)
    if (probs.v[i] > probs.v[best]) best = i;
  return best;
}

// Standard accuracy / per-class P/R/F1 / macro-F1 from prediction and gold
// index lists. A class with zero precision+recall contributes F1 = 0.
inline MetricsReport score_predictions(const std::vector<std::size_t>& pred,
                                       const std::vector<std::size_t>& gold,
                                       std::size_t num_classes) {
  if (pred.size() != gold.size() || pred.empty())
    throw ArgumentError("score_predictions: bad input sizes");
  MetricsReport r;
  r.total = pred.size();
  r.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] >= num_classes || gold[i] >= num_classes)
      throw ArgumentError("score_predictions: class index out of range");
    ++r.confusion[gold[i]][pred[i]];
    if (pred[i] == gold[i]) ++correct;
  }
  r.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(r.total);

  double f1_sum = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t tp = r.confusion[c][c], fp = 0, fn = 0;
    for (std::size_t k = 0; k < num_classes; ++k) {
      if (k == c) continue;
      fp += r.confusion[k][c];
      fn += r.confusion[c][k];
    }
    ClassMetrics m;
    m.support = tp + fn;
    double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    double rec = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    double f1 = p + rec > 0.0 ? 2.0 * p * rec / (p + rec) : 0.0;
    m.precision = 100.0 * p;
    m.recall = 100.0 * rec;
    m.f1 = 100.0 * f1;
    f1_sum += m.f1;
    r.per_class.push_back(m);
  }
  r.macro_f1 = f1_sum / static_cast<double>(num_classes);
  return r;
}

// forward(sample) must return a probability vector over the classes.
template <class Fn, class Sample>
MetricsReport evaluate(Fn&& forward, const std::vector<Sample>& samples,
                       std::size_t num_classes = 3) {
  if (samples.empty()) throw ArgumentError("evaluate: no samples");
  std::vector<std::size_t> pred, gold;
  pred.reserve(samples.size());
  gold.reserve(samples.size());
  for (const Sample& s : samples) {
    pred.push_back(argmax_class(forward(s)));
    gold.push_back(static_cast<std::size_t>(static_cast<int>(s.label)));
  }
  return score_predictions(pred, gold, num_classes);
}

// Constant classifier predicting the modal training label. Its macro-F1 is
// reported under the published convention for this baseline: the unweighted
// mean of per-class recall, which is exactly 100/k for a constant prediction.
// (The standard per-class-F1 average is still available in per_class.)
inline MetricsReport majority_baseline(const std::vector<std::size_t>& train_gold,
                                       const std::vector<std::size_t>& test_gold,
                                       std::size_t num_classes) {
  if (train_gold.empty() || test_gold.empty())
    throw ArgumentError("majority_baseline: empty input");
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t g : train_gold) {
    if (g >= num_classes) throw ArgumentError("majority_baseline: bad class");
    ++counts[g];
  }
  std::size_t modal = 0;
  for (std::size_t c = 1; c < num_classes; ++c)
    if (counts[c] > counts[modal]) modal = c;

  std::vector<std::size_t> pred(test_gold.size(), modal);
  MetricsReport r = score_predictions(pred, test_gold, num_classes);
  double recall_sum = 0.0;
  for (const ClassMetrics& m : r.per_class) recall_sum += m.recall;
  r.macro_f1 = recall_sum / static_cast<double>(num_classes);
  return r;
}

}  // namespace atn
