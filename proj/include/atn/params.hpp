#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "atn/autodiff.hpp"
#include "atn/rng.hpp"
#include "atn/tensor.hpp"

namespace atn {

inline Tensor uniform_init(std::vector<std::size_t> shape, Rng& rng,
                           double lo = -0.1, double hi = 0.1) {
  Tensor t(std::move(shape));
  for (double& x : t.v) x = rng.uniform(lo, hi);
  return t;
}

// Named parameters with their gradients (held on the leaf Vars) and momentum
// buffers. Iteration order is the sorted name order, which fixes the update
// and checksum order.
class ParamStore {
 public:
  struct Entry {
    Var var;
    Tensor momentum;
    bool trainable = true;
  };

  Var add(const std::string& name, Tensor init, bool trainable = true) {
    if (entries_.count(name)) throw ArgumentError("duplicate parameter: " + name);
    Var v = leaf(std::move(init), trainable);
    entries_[name] = Entry{v, Tensor(), trainable};
    return v;
  }

  // Registers an externally created leaf (e.g. a shared embedding table).
  Var adopt(const std::string& name, Var v) {
    if (entries_.count(name)) throw ArgumentError("duplicate parameter: " + name);
    entries_[name] = Entry{v, Tensor(), v->requires_grad};
    return v;
  }

  bool has(const std::string& name) const { return entries_.count(name) != 0; }

  Var get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ArgumentError("unknown parameter: " + name);
    return it->second.var;
  }

  void zero_grads() {
    for (auto& [name, e] : entries_) e.var->zero_grad();
  }

  void freeze_all() {
    for (auto& [name, e] : entries_) {
      e.trainable = false;
      e.var->requires_grad = false;
    }
  }

  bool all_frozen() const {
    for (const auto& [name, e] : entries_)
      if (e.trainable) return false;
    return true;
  }

  std::map<std::string, Tensor> snapshot() const {
    std::map<std::string, Tensor> out;
    for (const auto& [name, e] : entries_) out[name] = e.var->val;
    return out;
  }

  void restore(const std::map<std::string, Tensor>& snap) {
    for (auto& [name, e] : entries_) {
      auto it = snap.find(name);
      if (it == snap.end()) throw ArgumentError("snapshot missing parameter: " + name);
      if (!it->second.same_shape(e.var->val))
        throw ArgumentError("snapshot shape mismatch for " + name);
      e.var->val = it->second;
    }
  }

  std::uint64_t value_checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [name, e] : entries_) {
      h = fnv1a64(name.data(), name.size(), h);
      h = tensor_checksum(e.var->val, h);
    }
    return h;
  }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, Entry> entries_;
};

// v <- mu * v + grad; param <- param - lr * v. Frozen parameters are left
// untouched. All gradients are cleared afterwards.
inline void sgd_momentum_step(ParamStore& store, double lr, double mu) {
  for (auto& [name, e] : store) {
    if (e.trainable && e.var->has_grad()) {
      if (e.momentum.numel() == 0) e.momentum = Tensor(e.var->val.shape);
      for (std::size_t i = 0; i < e.momentum.numel(); ++i) {
        e.momentum.v[i] = mu * e.momentum.v[i] + e.var->grad.v[i];
        e.var->val.v[i] -= lr * e.momentum.v[i];
      }
    }
    e.var->zero_grad();
  }
}

}  // namespace atn
