#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "atn/error.hpp"

namespace atn {

// Row-major dense array of doubles with an explicit shape. Rank is 1 or 2
// everywhere in this project; scalars use shape {1}.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s)
      : shape(std::move(s)), v(numel_of(shape), 0.0) {}
  Tensor(std::vector<std::size_t> s, std::vector<double> values)
      : shape(std::move(s)), v(std::move(values)) {
    if (numel_of(shape) != v.size())
      throw ArgumentError("tensor data does not match shape");
  }

  static std::size_t numel_of(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return s.empty() ? 0 : n;
  }

  static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }
  static Tensor scalar(double x) { return Tensor({1}, {x}); }
  static Tensor vec(std::vector<double> values) {
    std::size_t n = values.size();
    return Tensor({n}, std::move(values));
  }
  static Tensor full(std::vector<std::size_t> s, double x) {
    Tensor t(std::move(s));
    std::fill(t.v.begin(), t.v.end(), x);
    return t;
  }

  std::size_t numel() const { return v.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.size() > 1 ? shape[1] : 1; }

  double& operator()(std::size_t i) { return v[i]; }
  double operator()(std::size_t i) const { return v[i]; }
  double& operator()(std::size_t i, std::size_t j) { return v[i * cols() + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v[i * cols() + j]; }

  double item() const {
    if (numel() != 1) throw ArgumentError("item() on non-scalar tensor");
    return v[0];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }
};

// 64-bit FNV-1a over arbitrary bytes; used for parameter checksums and
// checkpoint integrity.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t tensor_checksum(const Tensor& t, std::uint64_t h = 0xcbf29ce484222325ULL) {
  h = fnv1a64(t.v.data(), t.v.size() * sizeof(double), h);
  return h;
}

}  // namespace atn
