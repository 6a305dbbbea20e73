#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "atn/autodiff.hpp"
#include "atn/bilstm.hpp"
#include "atn/corpus.hpp"
#include "atn/params.hpp"

namespace atn {

struct DscConfig {
  std::size_t d_e = 300;
  std::size_t d_h = 300;  // per direction
  static constexpr std::size_t num_classes = 2;
};

// Document-level teacher: BiLSTM, bilinear attention queried by the mean
// hidden state, binary softmax head. The embedding leaf is shared with the
// student and frozen.
struct DscModel {
  DscConfig cfg;
  const Vocabulary* vocab = nullptr;
  Var embedding;
  ParamStore params;
  BiLstmParams enc;
  Var w_attn, b_attn, w_out, b_out;
  bool frozen = false;
  mutable std::uint64_t teacher_calls = 0;
};

inline DscModel make_dsc(const Vocabulary& vocab, Var embedding, DscConfig cfg,
                         Rng& rng) {
  if (embedding->val.rows() != vocab.size() || embedding->val.cols() != cfg.d_e)
    throw ArgumentError("make_dsc: embedding shape mismatch");
  DscModel m;
  m.cfg = cfg;
  m.vocab = &vocab;
  m.embedding = m.params.adopt("embedding", embedding);
  m.enc = make_bilstm(m.params, "enc", cfg.d_e, cfg.d_h, rng);
  std::size_t h2 = 2 * cfg.d_h;
  m.w_attn = m.params.add("attn.w", uniform_init({h2, h2}, rng));
  m.b_attn = m.params.add("attn.b", uniform_init({1}, rng));
  m.w_out = m.params.add("head.w", uniform_init({DscConfig::num_classes, h2}, rng));
  m.b_out = m.params.add("head.b", uniform_init({DscConfig::num_classes}, rng));
  return m;
}

struct DscGraph {
  Var probs;
  Var alpha;
  Var repr;
};

inline DscGraph dsc_forward_graph(const DscModel& m, const std::vector<int>& ids,
                                  bool training = false, Rng* rng = nullptr,
                                  double dropout_p = 0.0) {
  if (ids.empty()) throw ArgumentError("dsc_forward: empty document");
  Var x = embed_lookup(m.embedding, ids);
  if (training && dropout_p > 0.0) x = dropout(x, dropout_p, *rng, true);
  Var h = bilstm_forward(m.enc, x);
  Var h_avg = mean_rows(h, 0, ids.size() - 1);
  Attended a = attend(h, h_avg, m.w_attn, m.b_attn);
  Var probs = classify(a.repr, m.w_out, m.b_out);
  return {probs, a.weights, a.repr};
}

struct DscOutput {
  Tensor probs;
  Tensor alpha;
  Tensor repr;
};

inline DscOutput dsc_forward(const DscModel& m, const std::vector<int>& ids) {
  DscGraph g = dsc_forward_graph(m, ids);
  DscOutput out{g.probs->val, g.alpha->val, g.repr->val};
  release_graph(g.probs);
  return out;
}

inline DscOutput dsc_forward(const DscModel& m,
                             const std::vector<std::string>& tokens) {
  return dsc_forward(m, m.vocab->ids(tokens));
}

inline void freeze(DscModel& m) {
  m.params.freeze_all();
  m.frozen = true;
}

// Teacher attention over an (id-mapped) student sentence. The teacher is
// target-agnostic; the call counter backs the inference-contract tests.
inline AttentionRecord teacher_attention(const DscModel& m,
                                         const std::vector<int>& ids) {
  if (!m.frozen) throw ContractError("teacher_attention: teacher is not frozen");
  if (ids.empty()) throw ArgumentError("teacher_attention: empty sentence");
  ++m.teacher_calls;
  DscOutput out = dsc_forward(m, ids);
  return AttentionRecord{AttentionKind::alpha, std::move(out.alpha)};
}

inline AttentionRecord teacher_attention(const DscModel& m,
                                         const std::vector<std::string>& tokens) {
  return teacher_attention(m, m.vocab->ids(tokens));
}

// ---- pretraining ----------------------------------------------------------

struct DscTrainConfig {
  double lr = 0.1;
  double momentum = 0.9;
  double dropout = 0.5;
  std::size_t epochs = 5;
  std::size_t batch = 64;
  double held_out_fraction = 0.1;
  std::uint64_t seed = 1;
};

struct DscEpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double held_acc = 0.0;  // percent
};

struct DscTrainLog {
  std::vector<DscEpochLog> epochs;
  std::size_t best_epoch = 0;
  double best_acc = 0.0;
};

// Mini-batch SGD with momentum; mean loss per batch; the best held-out-accuracy
// snapshot is restored at the end. Loss going non-finite aborts the run.
inline DscTrainLog pretrain_dsc(DscModel& m, const std::vector<DocSample>& corpus,
                                const DscTrainConfig& cfg) {
  if (m.frozen) throw ContractError("pretrain_dsc: model is frozen");
  if (corpus.empty()) throw ArgumentError("pretrain_dsc: empty corpus");

  std::vector<std::vector<int>> ids(corpus.size());
  std::vector<int> labels(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    ids[i] = m.vocab->ids(corpus[i].tokens);
    labels[i] = static_cast<int>(corpus[i].label);
  }

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::size_t held_n = static_cast<std::size_t>(
      std::llround(cfg.held_out_fraction * static_cast<double>(corpus.size())));
  std::vector<std::size_t> train_idx(order.begin(), order.end() - held_n);
  std::vector<std::size_t> held_idx(order.end() - held_n, order.end());
  if (held_idx.empty()) held_idx = train_idx;  // tiny corpora evaluate in-sample

  auto held_accuracy = [&]() {
    std::size_t correct = 0;
    for (std::size_t i : held_idx) {
      DscOutput out = dsc_forward(m, ids[i]);
      std::size_t pred = out.probs(1) > out.probs(0) ? 1 : 0;
      if (static_cast<int>(pred) == labels[i]) ++correct;
    }
    return 100.0 * static_cast<double>(correct) /
           static_cast<double>(held_idx.size());
  };

  DscTrainLog log;
  log.best_acc = -1.0;  // first epoch always becomes the first candidate
  auto best = m.params.snapshot();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(train_idx);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch) {
      std::size_t stop = std::min(start + cfg.batch, train_idx.size());
      double inv = 1.0 / static_cast<double>(stop - start);
      for (std::size_t k = start; k < stop; ++k) {
        std::size_t i = train_idx[k];
        DscGraph g = dsc_forward_graph(m, ids[i], true, &rng, cfg.dropout);
        Var loss = cross_entropy(g.probs, static_cast<std::size_t>(labels[i]));
        double value = loss->val.item();
        if (!std::isfinite(value)) {
          release_graph(loss);
          throw DivergenceError("pretrain_dsc: non-finite loss at epoch " +
                                std::to_string(epoch));
        }
        loss_sum += value;
        ++seen;
        backward(scale(loss, inv));
      }
      sgd_momentum_step(m.params, cfg.lr, cfg.momentum);
    }
    double acc = held_accuracy();
    log.epochs.push_back(DscEpochLog{
        epoch, seen ? loss_sum / static_cast<double>(seen) : 0.0, acc});
    if (acc > log.best_acc) {
      log.best_acc = acc;
      log.best_epoch = epoch;
      best = m.params.snapshot();
    }
  }
  m.params.restore(best);
  return log;
}

}  // namespace atn
