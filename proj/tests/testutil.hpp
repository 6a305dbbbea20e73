#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "atn/rng.hpp"
#include "atn/tensor.hpp"

namespace testutil {

inline atn::Tensor random_tensor(std::vector<std::size_t> shape, atn::Rng& rng,
                                 double lo = -1.0, double hi = 1.0) {
  atn::Tensor t(std::move(shape));
  for (double& x : t.v) x = rng.uniform(lo, hi);
  return t;
}

// Random point on the probability simplex.
inline atn::Tensor random_simplex(std::size_t n, atn::Rng& rng) {
  atn::Tensor t({n});
  double sum = 0.0;
  for (double& x : t.v) {
    x = rng.uniform(1e-3, 1.0);
    sum += x;
  }
  for (double& x : t.v) x /= sum;
  return t;
}

inline double max_abs_diff(const atn::Tensor& a, const atn::Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i)
    m = std::max(m, std::fabs(a.v[i] - b.v[i]));
  return m;
}

// Fresh scratch directory under the system temp dir; removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& stem) {
    path_ = std::filesystem::temp_directory_path() /
            (stem + "-" + std::to_string(counter_++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
  static inline int counter_ = 0;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace testutil
