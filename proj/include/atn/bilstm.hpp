#pragma once

#include <string>
#include <vector>

#include "atn/autodiff.hpp"
#include "atn/params.hpp"

namespace atn {

// One LSTM direction. Gate order in the stacked preactivation is
// input, forget, candidate, output.
struct LstmDirection {
  Var w_in;   // [4H, D]
  Var w_rec;  // [4H, H]
  Var bias;   // [4H]
};

struct BiLstmParams {
  LstmDirection fwd, bwd;
  std::size_t in_dim = 0;
  std::size_t hidden = 0;  // per direction
};

inline LstmDirection make_lstm_direction(ParamStore& store, const std::string& prefix,
                                         std::size_t in_dim, std::size_t hidden,
                                         Rng& rng) {
  LstmDirection d;
  d.w_in = store.add(prefix + ".w_in", uniform_init({4 * hidden, in_dim}, rng));
  d.w_rec = store.add(prefix + ".w_rec", uniform_init({4 * hidden, hidden}, rng));
  d.bias = store.add(prefix + ".bias", uniform_init({4 * hidden}, rng));
  return d;
}

inline BiLstmParams make_bilstm(ParamStore& store, const std::string& prefix,
                                std::size_t in_dim, std::size_t hidden, Rng& rng) {
  BiLstmParams p;
  p.in_dim = in_dim;
  p.hidden = hidden;
  p.fwd = make_lstm_direction(store, prefix + ".fw", in_dim, hidden, rng);
  p.bwd = make_lstm_direction(store, prefix + ".bw", in_dim, hidden, rng);
  return p;
}

// Runs one direction over the rows of inputs [n, D] with zero initial states.
// Returns the hidden state at every position, indexed by original position.
inline std::vector<Var> lstm_run(const LstmDirection& p, const Var& inputs,
                                 bool reverse) {
  std::size_t n = inputs->val.rows();
  std::size_t hidden = p.w_rec->val.cols();
  // Input contributions for every step in one product.
  Var xpre = matmul_nt(inputs, p.w_in);  // [n, 4H]
  std::vector<Var> out(n);
  Var h_prev, c_prev;
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t t = reverse ? n - 1 - step : step;
    Var pre = add(row(xpre, t), p.bias);
    if (h_prev) pre = add(pre, matvec(p.w_rec, h_prev));
    Var in_gate = sigmoid(slice(pre, 0, hidden));
    Var forget_gate = sigmoid(slice(pre, hidden, hidden));
    Var candidate = tanh_act(slice(pre, 2 * hidden, hidden));
    Var out_gate = sigmoid(slice(pre, 3 * hidden, hidden));
    Var c = h_prev ? add(mul(forget_gate, c_prev), mul(in_gate, candidate))
                   : mul(in_gate, candidate);
    Var h = mul(out_gate, tanh_act(c));
    out[t] = h;
    h_prev = h;
    c_prev = c;
  }
  return out;
}

// Left-to-right and right-to-left passes with independent parameters; the
// per-position outputs are concatenated to [n, 2H].
inline Var bilstm_forward(const BiLstmParams& p, const Var& inputs) {
  if (inputs->val.rank() != 2 || inputs->val.cols() != p.in_dim)
    throw ArgumentError("bilstm_forward: input width mismatch");
  if (inputs->val.rows() == 0) throw ArgumentError("bilstm_forward: empty sequence");
  std::vector<Var> hf = lstm_run(p.fwd, inputs, false);
  std::vector<Var> hb = lstm_run(p.bwd, inputs, true);
  std::vector<Var> rows(hf.size());
  for (std::size_t t = 0; t < hf.size(); ++t) rows[t] = concat(hf[t], hb[t]);
  return stack_rows(rows);
}

}  // namespace atn
