#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace atn {

// Deterministic random stream. All randomness in the project flows through
// this wrapper: the raw mt19937-64 sequence is mapped to doubles and bounded
// integers with fixed arithmetic, so identical seeds give identical draws on
// every platform (std::uniform_real_distribution makes no such promise).
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937-64";

  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t next() {
    ++position_;
    return engine_();
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }

  template <class T>
  void shuffle(std::vector<T>& xs) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(xs[i - 1], xs[j]);
    }
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return position_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::uint64_t position_ = 0;
};

}  // namespace atn
