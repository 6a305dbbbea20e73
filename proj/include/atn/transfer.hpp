#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "atn/asc.hpp"
#include "atn/dsc.hpp"

namespace atn {

// How the distance-reweighted teacher weights are turned back into a
// distribution. The softmax form is the written one and the default; renorm
// (plain normalization, no exponentiation) exists for ablation only.
enum class ReweightMode { softmax, renorm };

// alpha'_i = alpha_i / 2^(l_i - 1); in-target tokens (l_i = 0) are doubled.
// The scaling is exact (powers of two), so delta is fully determined by the
// softmax/renorm step.
inline Tensor reweight_alpha_values(const Tensor& alpha,
                                    const std::vector<int>& distances,
                                    ReweightMode mode = ReweightMode::softmax) {
  if (alpha.numel() != distances.size())
    throw ArgumentError("reweight_alpha: length mismatch");
  Tensor scaled = alpha;
  for (std::size_t i = 0; i < scaled.numel(); ++i)
    scaled.v[i] = std::ldexp(alpha.v[i], 1 - distances[i]);
  if (mode == ReweightMode::softmax) return softmax_values(scaled);
  double sum = 0.0;
  for (double x : scaled.v) sum += x;
  if (!(sum > 0.0)) throw ArgumentError("reweight_alpha: weights underflowed");
  for (double& x : scaled.v) x /= sum;
  return scaled;
}

inline AttentionRecord reweight_alpha(const AttentionRecord& alpha,
                                      const std::vector<int>& distances,
                                      ReweightMode mode = ReweightMode::softmax) {
  return AttentionRecord{AttentionKind::delta,
                         reweight_alpha_values(alpha.weights, distances, mode)};
}

// L = L_o + lambda * L_a. With lambda = 0 the graph is exactly the base loss.
inline Var guidance_step_loss(const AscGraph& g, const Tensor& delta,
                              std::size_t gold, double lambda) {
  if (lambda < 0.0) throw ArgumentError("guidance_step_loss: negative lambda");
  Var loss = cross_entropy(g.probs, gold);
  if (lambda != 0.0)
    loss = add(loss, scale(guidance_loss(delta, g.beta), lambda));
  return loss;
}

// ---- attention fusion -----------------------------------------------------

// Per-position scalar gate g = sigmoid(W_g . [alpha_i; beta_i]), no bias;
// W_g is shared across positions.
struct FusionGate {
  Var w_g;  // length 2
};

inline FusionGate make_fusion_gate(ParamStore& store, Rng& rng) {
  return FusionGate{store.add("fusion.w_g", uniform_init({2}, rng))};
}

struct FusionOut {
  Var gate;         // g, in (0,1) per position
  Var gamma;        // g*alpha + (1-g)*beta, still a convex combination
  Var gamma_prime;  // softmax(gamma)
};

// Teacher alpha enters as a constant: gradient reaches W_g and beta's
// upstream parameters only.
inline FusionOut fuse_attention(const Tensor& alpha, const Var& beta,
                                const FusionGate& gate) {
  if (alpha.numel() != beta->val.numel())
    throw ArgumentError("fuse_attention: length mismatch");
  Var a = constant(alpha);
  FusionOut out;
  out.gate = sigmoid(matvec(colpair(a, beta), gate.w_g));
  out.gamma = add(beta, mul(out.gate, sub(a, beta)));
  out.gamma_prime = softmax(out.gamma);
  return out;
}

inline AttentionRecord fuse_attention_record(const Tensor& alpha,
                                             const Tensor& beta,
                                             const Tensor& w_g) {
  FusionGate gate{constant(w_g)};
  FusionOut f = fuse_attention(alpha, constant(beta), gate);
  AttentionRecord rec{AttentionKind::gamma, f.gamma_prime->val};
  release_graph(f.gamma_prime);
  return rec;
}

// ---- ATN-AG ---------------------------------------------------------------

// Student training with the auxiliary guidance loss. Teacher attention and
// delta are fixed per sample (frozen teacher), so they are computed once up
// front; with lambda = 0 the teacher is never consulted and the run is
// step-for-step identical to train_base_asc.
inline AscTrainLog atn_ag_train(AscModel& student, const DscModel& teacher,
                                const std::vector<IdAspect>& train,
                                const std::vector<IdAspect>& dev,
                                const AscTrainConfig& cfg, Rng& rng,
                                ReweightMode mode = ReweightMode::softmax) {
  if (!teacher.frozen) throw ContractError("atn_ag_train: teacher is not frozen");

  std::vector<Tensor> deltas;
  if (cfg.lambda != 0.0) {
    deltas.reserve(train.size());
    for (const IdAspect& s : train) {
      AttentionRecord alpha = teacher_attention(teacher, s.ids);
      deltas.push_back(reweight_alpha_values(
          alpha.weights, relative_distances(s.ids.size(), s.lo, s.hi), mode));
    }
  }

  return detail::asc_train_loop(
      student.params, train, dev, cfg, rng,
      [&](const IdAspect& s, Rng& r) {
        AscGraph g = asc_forward_graph(student, s, true, &r, cfg.dropout);
        Var loss = cross_entropy(g.probs, static_cast<std::size_t>(s.label));
        if (cfg.lambda != 0.0) {
          const Tensor& delta = deltas[static_cast<std::size_t>(&s - train.data())];
          loss = add(loss, scale(guidance_loss(delta, g.beta), cfg.lambda));
        }
        return loss;
      },
      [&](const IdAspect& s) { return asc_forward(student, s).probs; });
}

// ---- ATN-AF ---------------------------------------------------------------

struct AfGraph {
  Var probs;
  Tensor alpha;  // teacher attention (constant)
  Var beta;
  FusionOut fusion;
  Var repr;
  Var target;
  Var hidden;
};

// Student forward with the fused attention replacing beta in the sentence
// representation. A null teacher (no pretraining data) contributes a uniform
// alpha.
inline AfGraph atn_af_forward(const AscModel& student, const DscModel* teacher,
                              const FusionGate& gate, const IdAspect& s,
                              bool training = false, Rng* rng = nullptr,
                              double dropout_p = 0.0) {
  if (teacher && !teacher->frozen)
    throw ContractError("atn_af_forward: teacher is not frozen");
  Var h = asc_encode(student, s, training, rng, dropout_p);
  Var t = target_repr(h, s.lo, s.hi);
  Attended att = asc_attention(h, t, student.w_attn, student.b_attn);
  AfGraph g;
  g.alpha = teacher ? teacher_attention(*teacher, s.ids).weights
                    : Tensor::full({s.ids.size()},
                                   1.0 / static_cast<double>(s.ids.size()));
  g.beta = att.weights;
  g.fusion = fuse_attention(g.alpha, g.beta, gate);
  g.repr = weighted_sum(h, g.fusion.gamma_prime);
  g.probs = classify(g.repr, student.w_out, student.b_out);
  g.target = t;
  g.hidden = h;
  return g;
}

struct AfOutput {
  Tensor probs;
  Tensor alpha;
  Tensor beta;
  Tensor gamma;  // gamma_prime
};

inline AfOutput atn_af_predict(const AscModel& student, const DscModel* teacher,
                               const FusionGate& gate, const IdAspect& s) {
  AfGraph g = atn_af_forward(student, teacher, gate, s);
  AfOutput out{g.probs->val, g.alpha, g.beta->val, g.fusion.gamma_prime->val};
  release_graph(g.probs);
  return out;
}

// Joint training of student and gate; the gate lives in the student's
// ParamStore, so one optimizer step covers both.
inline AscTrainLog atn_af_train(AscModel& student, const DscModel* teacher,
                                const FusionGate& gate,
                                const std::vector<IdAspect>& train,
                                const std::vector<IdAspect>& dev,
                                const AscTrainConfig& cfg, Rng& rng) {
  if (teacher && !teacher->frozen)
    throw ContractError("atn_af_train: teacher is not frozen");
  return detail::asc_train_loop(
      student.params, train, dev, cfg, rng,
      [&](const IdAspect& s, Rng& r) {
        AfGraph g = atn_af_forward(student, teacher, gate, s, true, &r, cfg.dropout);
        return cross_entropy(g.probs, static_cast<std::size_t>(s.label));
      },
      [&](const IdAspect& s) {
        return atn_af_predict(student, teacher, gate, s).probs;
      });
}

}  // namespace atn
