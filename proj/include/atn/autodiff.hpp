#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "atn/error.hpp"
#include "atn/rng.hpp"
#include "atn/tensor.hpp"

// Reverse-mode automatic differentiation over Tensor. Each operation builds a
// Node holding its forward value and a closure that scatters the incoming
// gradient to its parents. The op set is exactly what the two sequence models
// and their losses need; there is no general graph compiler here.

namespace atn {

class Node;
using Var = std::shared_ptr<Node>;

class Node {
 public:
  Tensor val;
  Tensor grad;  // allocated on first use, same shape as val
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backprop;

  Tensor& g() {
    if (grad.numel() == 0) grad = Tensor(val.shape);
    return grad;
  }
  bool has_grad() const { return grad.numel() != 0; }
  void zero_grad() {
    if (has_grad()) grad.fill(0.0);
  }
};

inline Var constant(Tensor t) {
  auto n = std::make_shared<Node>();
  n->val = std::move(t);
  return n;
}

// A leaf the optimizer may update. Non-trainable leaves behave as constants:
// no gradient is ever accumulated into them.
inline Var leaf(Tensor t, bool trainable = true) {
  auto n = std::make_shared<Node>();
  n->val = std::move(t);
  n->requires_grad = trainable;
  return n;
}

namespace detail {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<EMat>;
using CMatMap = Eigen::Map<const EMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using CVecMap = Eigen::Map<const Eigen::VectorXd>;

inline CMatMap mat(const Tensor& t) {
  return CMatMap(t.v.data(), static_cast<Eigen::Index>(t.rows()),
                 static_cast<Eigen::Index>(t.cols()));
}
inline MatMap mat(Tensor& t) {
  return MatMap(t.v.data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}
inline CVecMap vec(const Tensor& t) {
  return CVecMap(t.v.data(), static_cast<Eigen::Index>(t.numel()));
}
inline VecMap vec(Tensor& t) {
  return VecMap(t.v.data(), static_cast<Eigen::Index>(t.numel()));
}

inline Var make_node(Tensor val, std::vector<Var> parents,
                     std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->val = std::move(val);
  for (const auto& p : parents) {
    if (p && p->requires_grad) {
      n->requires_grad = true;
      break;
    }
  }
  n->parents = std::move(parents);
  if (n->requires_grad) n->backprop = std::move(backprop);
  return n;
}

// Post-order of the graph below root; parents appear before children.
inline std::vector<Node*> topo_order(const Var& root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace detail

// Drops all intermediate edges below root so the graph is freed iteratively.
// Leaves (parameters) are untouched.
inline void release_graph(const Var& root) {
  for (Node* n : detail::topo_order(root)) {
    n->parents.clear();
    n->backprop = nullptr;
  }
}

// Accumulates d(root)/d(leaf) into every trainable leaf's grad. root must be
// scalar. Leaf gradients are *not* cleared first, so per-sample losses in a
// batch sum naturally; the optimizer clears them after the step. The graph is
// released afterwards.
inline void backward(const Var& root) {
  if (root->val.numel() != 1) throw ArgumentError("backward() needs a scalar root");
  auto order = detail::topo_order(root);
  root->g()(0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->requires_grad && n->backprop && n->has_grad()) n->backprop(*n);
  }
  for (Node* n : order) {
    if (n->backprop || !n->parents.empty()) {
      n->parents.clear();
      n->backprop = nullptr;
      n->grad = Tensor();
    }
  }
}

// ---- elementwise and linear-algebra primitives ----------------------------

inline Var add(const Var& a, const Var& b) {
  if (!a->val.same_shape(b->val)) throw ArgumentError("add: shape mismatch");
  Tensor out = a->val;
  detail::vec(out) += detail::vec(b->val);
  return detail::make_node(std::move(out), {a, b}, [](Node& self) {
    for (int k = 0; k < 2; ++k) {
      Node* p = self.parents[k].get();
      if (p->requires_grad) detail::vec(p->g()) += detail::vec(self.grad);
    }
  });
}

inline Var sub(const Var& a, const Var& b) {
  if (!a->val.same_shape(b->val)) throw ArgumentError("sub: shape mismatch");
  Tensor out = a->val;
  detail::vec(out) -= detail::vec(b->val);
  return detail::make_node(std::move(out), {a, b}, [](Node& self) {
    Node* a = self.parents[0].get();
    Node* b = self.parents[1].get();
    if (a->requires_grad) detail::vec(a->g()) += detail::vec(self.grad);
    if (b->requires_grad) detail::vec(b->g()) -= detail::vec(self.grad);
  });
}

inline Var mul(const Var& a, const Var& b) {
  if (!a->val.same_shape(b->val)) throw ArgumentError("mul: shape mismatch");
  Tensor out = a->val;
  detail::vec(out).array() *= detail::vec(b->val).array();
  return detail::make_node(std::move(out), {a, b}, [](Node& self) {
    Node* a = self.parents[0].get();
    Node* b = self.parents[1].get();
    if (a->requires_grad)
      detail::vec(a->g()).array() +=
          detail::vec(self.grad).array() * detail::vec(b->val).array();
    if (b->requires_grad)
      detail::vec(b->g()).array() +=
          detail::vec(self.grad).array() * detail::vec(a->val).array();
  });
}

inline Var scale(const Var& a, double c) {
  Tensor out = a->val;
  detail::vec(out) *= c;
  return detail::make_node(std::move(out), {a}, [c](Node& self) {
    Node* a = self.parents[0].get();
    if (a->requires_grad) detail::vec(a->g()) += c * detail::vec(self.grad);
  });
}

// v + s broadcast over every element; s has shape {1}.
inline Var add_scalar(const Var& v, const Var& s) {
  if (s->val.numel() != 1) throw ArgumentError("add_scalar: s must be scalar");
  Tensor out = v->val;
  detail::vec(out).array() += s->val(0);
  return detail::make_node(std::move(out), {v, s}, [](Node& self) {
    Node* v = self.parents[0].get();
    Node* s = self.parents[1].get();
    if (v->requires_grad) detail::vec(v->g()) += detail::vec(self.grad);
    if (s->requires_grad) s->g()(0) += detail::vec(self.grad).sum();
  });
}

inline Var dot(const Var& a, const Var& b) {
  if (a->val.numel() != b->val.numel()) throw ArgumentError("dot: length mismatch");
  double d = detail::vec(a->val).dot(detail::vec(b->val));
  return detail::make_node(Tensor::scalar(d), {a, b}, [](Node& self) {
    Node* a = self.parents[0].get();
    Node* b = self.parents[1].get();
    double gs = self.grad(0);
    if (a->requires_grad) detail::vec(a->g()) += gs * detail::vec(b->val);
    if (b->requires_grad) detail::vec(b->g()) += gs * detail::vec(a->val);
  });
}

// A[m,k] * B[k,n] -> [m,n]
inline Var matmul(const Var& a, const Var& b) {
  if (a->val.rank() != 2 || b->val.rank() != 2 || a->val.cols() != b->val.rows())
    throw ArgumentError("matmul: shape mismatch");
  Tensor out({a->val.rows(), b->val.cols()});
  detail::mat(out) = detail::mat(a->val) * detail::mat(b->val);
  return detail::make_node(std::move(out), {a, b}, [](Node& self) {
    Node* a = self.parents[0].get();
    Node* b = self.parents[1].get();
    auto G = detail::mat(self.grad);
    if (a->requires_grad)
      detail::mat(a->g()) += G * detail::mat(b->val).transpose();
    if (b->requires_grad)
      detail::mat(b->g()) += detail::mat(a->val).transpose() * G;
  });
}

// A[m,k] * B[n,k]^T -> [m,n]
inline Var matmul_nt(const Var& a, const Var& b) {
  if (a->val.rank() != 2 || b->val.rank() != 2 || a->val.cols() != b->val.cols())
    throw ArgumentError("matmul_nt: shape mismatch");
  Tensor out({a->val.rows(), b->val.rows()});
  detail::mat(out) = detail::mat(a->val) * detail::mat(b->val).transpose();
  return detail::make_node(std::move(out), {a, b}, [](Node& self) {
    Node* a = self.parents[0].get();
    Node* b = self.parents[1].get();
    auto G = detail::mat(self.grad);
    if (a->requires_grad) detail::mat(a->g()) += G * detail::mat(b->val);
    if (b->requires_grad)
      detail::mat(b->g()) += G.transpose() * detail::mat(a->val);
  });
}

// A[m,k] * x[k] -> [m]
inline Var matvec(const Var& a, const Var& x) {
  if (a->val.rank() != 2 || a->val.cols() != x->val.numel())
    throw ArgumentError("matvec: shape mismatch");
  Tensor out({a->val.rows()});
  detail::vec(out) = detail::mat(a->val) * detail::vec(x->val);
  return detail::make_node(std::move(out), {a, x}, [](Node& self) {
    Node* a = self.parents[0].get();
    Node* x = self.parents[1].get();
    auto g = detail::vec(self.grad);
    if (a->requires_grad)
      detail::mat(a->g()) += g * detail::vec(x->val).transpose();
    if (x->requires_grad)
      detail::vec(x->g()) += detail::mat(a->val).transpose() * g;
  });
}

inline Var sigmoid(const Var& a) {
  Tensor out = a->val;
  for (double& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
  return detail::make_node(std::move(out), {a}, [](Node& self) {
    Node* a = self.parents[0].get();
    if (!a->requires_grad) return;
    auto y = detail::vec(self.val).array();
    detail::vec(a->g()).array() += detail::vec(self.grad).array() * y * (1.0 - y);
  });
}

inline Var tanh_act(const Var& a) {
  Tensor out = a->val;
  for (double& x : out.v) x = std::tanh(x);
  return detail::make_node(std::move(out), {a}, [](Node& self) {
    Node* a = self.parents[0].get();
    if (!a->requires_grad) return;
    auto y = detail::vec(self.val).array();
    detail::vec(a->g()).array() += detail::vec(self.grad).array() * (1.0 - y * y);
  });
}

// Numerically stabilized softmax over a vector: shifts by the max before
// exponentiating. Output entries are positive and sum to 1.
inline Var softmax(const Var& a) {
  const Tensor& x = a->val;
  if (x.numel() == 0) throw ArgumentError("softmax: empty input");
  Tensor out = x;
  double mx = *std::max_element(out.v.begin(), out.v.end());
  double sum = 0.0;
  for (double& e : out.v) {
    e = std::exp(e - mx);
    sum += e;
  }
  for (double& e : out.v) e /= sum;
  return detail::make_node(std::move(out), {a}, [](Node& self) {
    Node* a = self.parents[0].get();
    if (!a->requires_grad) return;
    auto y = detail::vec(self.val);
    auto g = detail::vec(self.grad);
    double inner = y.dot(g);
    detail::vec(a->g()).array() += y.array() * (g.array() - inner);
  });
}

// Non-graph softmax over raw values, same stabilization as the op above.
inline Tensor softmax_values(const Tensor& x) {
  if (x.numel() == 0) throw ArgumentError("softmax: empty input");
  Tensor out = x;
  double mx = *std::max_element(out.v.begin(), out.v.end());
  double sum = 0.0;
  for (double& e : out.v) {
    e = std::exp(e - mx);
    sum += e;
  }
  for (double& e : out.v) e /= sum;
  return out;
}

// ---- structural ops -------------------------------------------------------

inline Var row(const Var& m, std::size_t i) {
  if (m->val.rank() != 2 || i >= m->val.rows()) throw ArgumentError("row: out of range");
  std::size_t d = m->val.cols();
  Tensor out({d});
  std::copy_n(m->val.v.begin() + i * d, d, out.v.begin());
  return detail::make_node(std::move(out), {m}, [i, d](Node& self) {
    Node* m = self.parents[0].get();
    if (!m->requires_grad) return;
    Tensor& g = m->g();
    for (std::size_t k = 0; k < d; ++k) g.v[i * d + k] += self.grad.v[k];
  });
}

inline Var slice(const Var& v, std::size_t lo, std::size_t len) {
  if (lo + len > v->val.numel()) throw ArgumentError("slice: out of range");
  Tensor out({len});
  std::copy_n(v->val.v.begin() + lo, len, out.v.begin());
  return detail::make_node(std::move(out), {v}, [lo, len](Node& self) {
    Node* v = self.parents[0].get();
    if (!v->requires_grad) return;
    Tensor& g = v->g();
    for (std::size_t k = 0; k < len; ++k) g.v[lo + k] += self.grad.v[k];
  });
}

inline Var concat(const Var& a, const Var& b) {
  std::size_t na = a->val.numel(), nb = b->val.numel();
  Tensor out({na + nb});
  std::copy_n(a->val.v.begin(), na, out.v.begin());
  std::copy_n(b->val.v.begin(), nb, out.v.begin() + na);
  return detail::make_node(std::move(out), {a, b}, [na, nb](Node& self) {
    Node* a = self.parents[0].get();
    Node* b = self.parents[1].get();
    if (a->requires_grad) {
      Tensor& g = a->g();
      for (std::size_t k = 0; k < na; ++k) g.v[k] += self.grad.v[k];
    }
    if (b->requires_grad) {
      Tensor& g = b->g();
      for (std::size_t k = 0; k < nb; ++k) g.v[k] += self.grad.v[na + k];
    }
  });
}

inline Var stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw ArgumentError("stack_rows: empty");
  std::size_t d = rows[0]->val.numel();
  Tensor out({rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i]->val.numel() != d) throw ArgumentError("stack_rows: ragged rows");
    std::copy_n(rows[i]->val.v.begin(), d, out.v.begin() + i * d);
  }
  return detail::make_node(std::move(out), rows, [d](Node& self) {
    for (std::size_t i = 0; i < self.parents.size(); ++i) {
      Node* p = self.parents[i].get();
      if (!p->requires_grad) continue;
      Tensor& g = p->g();
      for (std::size_t k = 0; k < d; ++k) g.v[k] += self.grad.v[i * d + k];
    }
  });
}

// Concatenates two [n,a] and [n,b] matrices row-wise into [n,a+b].
inline Var hconcat(const Var& a, const Var& b) {
  if (a->val.rank() != 2 || b->val.rank() != 2 || a->val.rows() != b->val.rows())
    throw ArgumentError("hconcat: row mismatch");
  std::size_t n = a->val.rows(), da = a->val.cols(), db = b->val.cols();
  Tensor out({n, da + db});
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(a->val.v.begin() + i * da, da, out.v.begin() + i * (da + db));
    std::copy_n(b->val.v.begin() + i * db, db, out.v.begin() + i * (da + db) + da);
  }
  return detail::make_node(std::move(out), {a, b}, [n, da, db](Node& self) {
    Node* a = self.parents[0].get();
    Node* b = self.parents[1].get();
    for (std::size_t i = 0; i < n; ++i) {
      if (a->requires_grad)
        for (std::size_t k = 0; k < da; ++k)
          a->g().v[i * da + k] += self.grad.v[i * (da + db) + k];
      if (b->requires_grad)
        for (std::size_t k = 0; k < db; ++k)
          b->g().v[i * db + k] += self.grad.v[i * (da + db) + da + k];
    }
  });
}

// Two length-n vectors as the columns of an [n,2] matrix.
inline Var colpair(const Var& a, const Var& b) {
  std::size_t n = a->val.numel();
  if (b->val.numel() != n) throw ArgumentError("colpair: length mismatch");
  Tensor out({n, 2});
  for (std::size_t i = 0; i < n; ++i) {
    out.v[2 * i] = a->val.v[i];
    out.v[2 * i + 1] = b->val.v[i];
  }
  return detail::make_node(std::move(out), {a, b}, [n](Node& self) {
    Node* a = self.parents[0].get();
    Node* b = self.parents[1].get();
    for (std::size_t i = 0; i < n; ++i) {
      if (a->requires_grad) a->g().v[i] += self.grad.v[2 * i];
      if (b->requires_grad) b->g().v[i] += self.grad.v[2 * i + 1];
    }
  });
}

// Mean of rows lo..hi inclusive (0-based).
inline Var mean_rows(const Var& m, std::size_t lo, std::size_t hi) {
  if (m->val.rank() != 2 || lo > hi || hi >= m->val.rows())
    throw ArgumentError("mean_rows: bad range");
  std::size_t d = m->val.cols();
  std::size_t k = hi - lo + 1;
  Tensor out({d});
  for (std::size_t i = lo; i <= hi; ++i)
    for (std::size_t c = 0; c < d; ++c) out.v[c] += m->val.v[i * d + c];
  for (double& x : out.v) x /= static_cast<double>(k);
  return detail::make_node(std::move(out), {m}, [lo, hi, d, k](Node& self) {
    Node* m = self.parents[0].get();
    if (!m->requires_grad) return;
    Tensor& g = m->g();
    double inv = 1.0 / static_cast<double>(k);
    for (std::size_t i = lo; i <= hi; ++i)
      for (std::size_t c = 0; c < d; ++c) g.v[i * d + c] += inv * self.grad.v[c];
  });
}

inline Var pick(const Var& v, std::size_t i) {
  if (i >= v->val.numel()) throw ArgumentError("pick: out of range");
  return detail::make_node(Tensor::scalar(v->val.v[i]), {v}, [i](Node& self) {
    Node* v = self.parents[0].get();
    if (v->requires_grad) v->g().v[i] += self.grad(0);
  });
}

// ---- model-facing kernels -------------------------------------------------

// Row gather from an embedding table. The backward pass scatters into the
// table rows only when the table is trainable.
inline Var embed_lookup(const Var& table, const std::vector<int>& ids) {
  if (table->val.rank() != 2) throw ArgumentError("embed_lookup: table must be 2-d");
  std::size_t rows = table->val.rows(), d = table->val.cols();
  for (int id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= rows)
      throw ArgumentError("embed_lookup: id out of range");
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::copy_n(table->val.v.begin() + static_cast<std::size_t>(ids[i]) * d, d,
                out.v.begin() + i * d);
  return detail::make_node(std::move(out), {table}, [ids, d](Node& self) {
    Node* t = self.parents[0].get();
    if (!t->requires_grad) return;
    Tensor& g = t->g();
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t c = 0; c < d; ++c)
        g.v[static_cast<std::size_t>(ids[i]) * d + c] += self.grad.v[i * d + c];
  });
}

// h . W . q + b with scalar bias.
inline Var bilinear_score(const Var& h, const Var& w, const Var& q, const Var& b) {
  return add(dot(h, matvec(w, q)), b);
}

// sum_i w_i * H[i,:] for a weight vector over the rows of H.
inline Var weighted_sum(const Var& h, const Var& w) {
  if (h->val.rank() != 2 || h->val.rows() != w->val.numel())
    throw ArgumentError("weighted_sum: length mismatch");
  std::size_t n = h->val.rows(), d = h->val.cols();
  Tensor out({d});
  for (std::size_t i = 0; i < n; ++i) {
    double wi = w->val.v[i];
    for (std::size_t c = 0; c < d; ++c) out.v[c] += wi * h->val.v[i * d + c];
  }
  return detail::make_node(std::move(out), {h, w}, [n, d](Node& self) {
    Node* h = self.parents[0].get();
    Node* w = self.parents[1].get();
    if (h->requires_grad) {
      Tensor& g = h->g();
      for (std::size_t i = 0; i < n; ++i) {
        double wi = w->val.v[i];
        for (std::size_t c = 0; c < d; ++c) g.v[i * d + c] += wi * self.grad.v[c];
      }
    }
    if (w->requires_grad) {
      Tensor& g = w->g();
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += h->val.v[i * d + c] * self.grad.v[c];
        g.v[i] += s;
      }
    }
  });
}

// Linear map then softmax: the class-probability head.
// Bilinear attention over the rows of H with a single query: weights are
// softmax(H (W q) + b), the representation their weighted sum. Equivalent to
// scoring each row with bilinear_score(h_i, W, q, b).
struct Attended {
  Var weights;
  Var repr;
};

inline Attended attend(const Var& h, const Var& query, const Var& w, const Var& b) {
  Var scores = add_scalar(matvec(h, matvec(w, query)), b);
  Var weights = softmax(scores);
  return {weights, weighted_sum(h, weights)};
}

inline Var classify(const Var& r, const Var& w_out, const Var& b_out) {
  return softmax(add(matvec(w_out, r), b_out));
}

constexpr double kLogFloor = 1e-12;

// -log p[gold]; the probability is clamped below at 1e-12 before the log.
inline Var cross_entropy(const Var& probs, std::size_t gold) {
  if (gold >= probs->val.numel()) throw ArgumentError("cross_entropy: bad class index");
  double p = probs->val.v[gold];
  double pc = std::max(p, kLogFloor);
  return detail::make_node(Tensor::scalar(-std::log(pc)), {probs},
                           [gold](Node& self) {
                             Node* probs = self.parents[0].get();
                             if (!probs->requires_grad) return;
                             double p = probs->val.v[gold];
                             if (p > kLogFloor)
                               probs->g().v[gold] -= self.grad(0) / p;
                           });
}

// Cross-entropy of a predicted distribution under a fixed reference
// distribution: sum_i -ref_i * log(pred_i). The reference is a plain tensor,
// so no gradient can flow into it.
inline Var guidance_loss(const Tensor& ref, const Var& pred) {
  if (ref.numel() != pred->val.numel())
    throw ArgumentError("guidance_loss: length mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < ref.numel(); ++i)
    loss -= ref.v[i] * std::log(std::max(pred->val.v[i], kLogFloor));
  Tensor ref_copy = ref;
  return detail::make_node(Tensor::scalar(loss), {pred},
                           [ref = std::move(ref_copy)](Node& self) {
                             Node* pred = self.parents[0].get();
                             if (!pred->requires_grad) return;
                             Tensor& g = pred->g();
                             double gs = self.grad(0);
                             for (std::size_t i = 0; i < ref.numel(); ++i) {
                               double p = pred->val.v[i];
                               if (p > kLogFloor) g.v[i] -= gs * ref.v[i] / p;
                             }
                           });
}

// Frobenius inner product with a fixed coefficient tensor; reduces any value
// to a scalar for loss composition and gradient checks.
inline Var inner_const(const Var& a, Tensor coeff) {
  if (!a->val.same_shape(coeff)) throw ArgumentError("inner_const: shape mismatch");
  double s = detail::vec(a->val).dot(detail::vec(coeff));
  return detail::make_node(Tensor::scalar(s), {a},
                           [coeff = std::move(coeff)](Node& self) {
                             Node* a = self.parents[0].get();
                             if (!a->requires_grad) return;
                             detail::vec(a->g()) +=
                                 self.grad(0) * detail::vec(coeff);
                           });
}

// Inverted dropout: at train time each element is zeroed with probability p
// and survivors are scaled by 1/(1-p); at inference this is the identity.
inline Var dropout(const Var& x, double p, Rng& rng, bool training) {
  if (p < 0.0 || p >= 1.0) throw ArgumentError("dropout: rate must be in [0, 1)");
  if (!training || p == 0.0) return x;
  Tensor mask(x->val.shape);
  double keep = 1.0 / (1.0 - p);
  for (double& m : mask.v) m = rng.uniform() < p ? 0.0 : keep;
  return mul(x, constant(std::move(mask)));
}

}  // namespace atn
