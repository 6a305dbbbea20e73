#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "atn/autodiff.hpp"
#include "atn/bilstm.hpp"
#include "atn/corpus.hpp"
#include "atn/metrics.hpp"
#include "atn/params.hpp"

namespace atn {

struct AscConfig {
  std::size_t d_e = 300;
  std::size_t d_h = 300;       // per direction
  std::size_t d_p = 100;       // position channel width; 0 ablates it
  std::size_t max_position = 100;  // L: distances are clamped to L-1
  static constexpr std::size_t num_classes = 3;
};

// Aspect-level student: word+position BiLSTM, bilinear attention queried by
// the target representation, 3-way softmax head.
struct AscModel {
  AscConfig cfg;
  const Vocabulary* vocab = nullptr;
  Var embedding;  // frozen, shared with the teacher
  ParamStore params;
  Var pos_table;  // [L, d_p], trainable; null when d_p == 0
  BiLstmParams enc;
  Var w_attn, b_attn, w_out, b_out;
};

inline AscModel make_asc(const Vocabulary& vocab, Var embedding, AscConfig cfg,
                         Rng& rng) {
  if (embedding->val.rows() != vocab.size() || embedding->val.cols() != cfg.d_e)
    throw ArgumentError("make_asc: embedding shape mismatch");
  AscModel m;
  m.cfg = cfg;
  m.vocab = &vocab;
  m.embedding = m.params.adopt("embedding", embedding);
  if (cfg.d_p > 0)
    m.pos_table = m.params.add("pos", uniform_init({cfg.max_position, cfg.d_p}, rng));
  m.enc = make_bilstm(m.params, "enc", cfg.d_e + cfg.d_p, cfg.d_h, rng);
  std::size_t h2 = 2 * cfg.d_h;
  m.w_attn = m.params.add("attn.w", uniform_init({h2, h2}, rng));
  m.b_attn = m.params.add("attn.b", uniform_init({1}, rng));
  m.w_out = m.params.add("head.w", uniform_init({AscConfig::num_classes, h2}, rng));
  m.b_out = m.params.add("head.b", uniform_init({AscConfig::num_classes}, rng));
  return m;
}

// Id-mapped sample, ready for the graph: ids, clamped distance indices, span.
struct IdAspect {
  std::vector<int> ids;
  std::vector<int> pos_ids;
  std::size_t lo = 0;  // 1-based inclusive span
  std::size_t hi = 0;
  int label = 0;
};

inline IdAspect encode_aspect(const AspectSample& s, const Vocabulary& vocab,
                              std::size_t max_position) {
  IdAspect out;
  out.ids = vocab.ids(s.tokens);
  std::vector<int> dist = relative_distances(s.tokens.size(), s.target_lo, s.target_hi);
  out.pos_ids.reserve(dist.size());
  for (int d : dist)
    out.pos_ids.push_back(
        std::min(d, static_cast<int>(max_position) - 1));
  out.lo = s.target_lo;
  out.hi = s.target_hi;
  out.label = static_cast<int>(s.label);
  return out;
}

inline std::vector<IdAspect> encode_aspects(const std::vector<AspectSample>& xs,
                                            const Vocabulary& vocab,
                                            std::size_t max_position) {
  std::vector<IdAspect> out;
  out.reserve(xs.size());
  for (const AspectSample& s : xs) out.push_back(encode_aspect(s, vocab, max_position));
  return out;
}

// Word channel (with dropout when training) concatenated with the position
// channel, then the BiLSTM. d_p = 0 reduces to a plain word-embedding encoder.
inline Var asc_encode(const AscModel& m, const IdAspect& s, bool training = false,
                      Rng* rng = nullptr, double dropout_p = 0.0) {
  Var xw = embed_lookup(m.embedding, s.ids);
  if (training && dropout_p > 0.0) xw = dropout(xw, dropout_p, *rng, true);
  if (m.cfg.d_p == 0) return bilstm_forward(m.enc, xw);
  Var xp = embed_lookup(m.pos_table, s.pos_ids);
  return bilstm_forward(m.enc, hconcat(xw, xp));
}

// Mean of the hidden states over the inclusive target span.
inline Var target_repr(const Var& h, std::size_t target_lo, std::size_t target_hi) {
  if (target_lo < 1 || target_hi < target_lo || target_hi > h->val.rows())
    throw ArgumentError("target_repr: bad span");
  return mean_rows(h, target_lo - 1, target_hi - 1);
}

inline Attended asc_attention(const Var& h, const Var& t, const Var& w_s,
                              const Var& b_s) {
  return attend(h, t, w_s, b_s);
}

struct AscGraph {
  Var probs;
  Var beta;
  Var repr;    // r_s
  Var target;  // t
  Var hidden;  // per-token states, for fusion
};

inline AscGraph asc_forward_graph(const AscModel& m, const IdAspect& s,
                                  bool training = false, Rng* rng = nullptr,
                                  double dropout_p = 0.0) {
  Var h = asc_encode(m, s, training, rng, dropout_p);
  Var t = target_repr(h, s.lo, s.hi);
  Attended a = asc_attention(h, t, m.w_attn, m.b_attn);
  Var probs = classify(a.repr, m.w_out, m.b_out);
  return {probs, a.weights, a.repr, t, h};
}

struct AscOutput {
  Tensor probs;
  Tensor beta;
  Tensor repr;
  Tensor target;
};

inline AscOutput asc_forward(const AscModel& m, const IdAspect& s) {
  AscGraph g = asc_forward_graph(m, s);
  AscOutput out{g.probs->val, g.beta->val, g.repr->val, g.target->val};
  release_graph(g.probs);
  return out;
}

inline AscOutput asc_forward(const AscModel& m, const AspectSample& s) {
  return asc_forward(m, encode_aspect(s, *m.vocab, m.cfg.max_position));
}

// ---- training loop --------------------------------------------------------

struct AscTrainConfig {
  double lr = 0.1;
  double momentum = 0.9;
  double dropout = 0.5;
  std::size_t batch = 32;
  std::size_t epochs = 30;
  double lambda = 0.4;            // guidance weight; ignored by base training
  double stop_at_train_acc = -1.0;  // early stop threshold in percent; <0 disables
};

struct AscEpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double dev_acc = 0.0;
  double dev_f1 = 0.0;
};

struct AscTrainLog {
  std::vector<AscEpochLog> epochs;
  std::size_t best_epoch = 0;
  double best_dev_acc = 0.0;
};

namespace detail {

// Shared schedule for base/AG/AF: shuffled mini-batches, mean batch loss,
// SGD+momentum, per-epoch train/dev metrics, best-dev snapshot restored at
// the end. sample_loss builds one sample's training graph; infer returns
// inference probabilities. Both close over their models, so the three modes
// consume the identical RNG stream whenever their graphs coincide.
template <class LossFn, class InferFn>
AscTrainLog asc_train_loop(ParamStore& params, const std::vector<IdAspect>& train,
                           const std::vector<IdAspect>& dev,
                           const AscTrainConfig& cfg, Rng& rng,
                           LossFn&& sample_loss, InferFn&& infer) {
  if (train.empty() || dev.empty())
    throw ArgumentError("asc_train_loop: empty train or dev set");

  auto metrics_on = [&](const std::vector<IdAspect>& xs) {
    std::vector<std::size_t> pred, gold;
    pred.reserve(xs.size());
    gold.reserve(xs.size());
    for (const IdAspect& s : xs) {
      pred.push_back(argmax_class(infer(s)));
      gold.push_back(static_cast<std::size_t>(s.label));
    }
    return score_predictions(pred, gold, AscConfig::num_classes);
  };

  AscTrainLog log;
  log.best_dev_acc = -1.0;  // first epoch always becomes the first candidate
  auto best = params.snapshot();

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      std::size_t stop = std::min(start + cfg.batch, order.size());
      double inv = 1.0 / static_cast<double>(stop - start);
      for (std::size_t k = start; k < stop; ++k) {
        Var loss = sample_loss(train[order[k]], rng);
        double value = loss->val.item();
        if (!std::isfinite(value)) {
          release_graph(loss);
          throw DivergenceError("asc training: non-finite loss at epoch " +
                                std::to_string(epoch));
        }
        loss_sum += value;
        ++seen;
        backward(scale(loss, inv));
      }
      sgd_momentum_step(params, cfg.lr, cfg.momentum);
    }

    AscEpochLog e;
    e.epoch = epoch;
    e.train_loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
    e.train_acc = metrics_on(train).accuracy;
    MetricsReport devm = metrics_on(dev);
    e.dev_acc = devm.accuracy;
    e.dev_f1 = devm.macro_f1;
    log.epochs.push_back(e);

    if (e.dev_acc > log.best_dev_acc) {
      log.best_dev_acc = e.dev_acc;
      log.best_epoch = epoch;
      best = params.snapshot();
    }
    if (cfg.stop_at_train_acc >= 0.0 && e.train_acc >= cfg.stop_at_train_acc) break;
  }
  params.restore(best);
  return log;
}

}  // namespace detail

inline AscTrainLog train_base_asc(AscModel& m, const std::vector<IdAspect>& train,
                                  const std::vector<IdAspect>& dev,
                                  const AscTrainConfig& cfg, Rng& rng) {
  return detail::asc_train_loop(
      m.params, train, dev, cfg, rng,
      [&](const IdAspect& s, Rng& r) {
        AscGraph g = asc_forward_graph(m, s, true, &r, cfg.dropout);
        return cross_entropy(g.probs, static_cast<std::size_t>(s.label));
      },
      [&](const IdAspect& s) { return asc_forward(m, s).probs; });
}

}  // namespace atn
