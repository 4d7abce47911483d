#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "prunekit/errors.hpp"

namespace prunekit {

/// Dense float tensor, row-major flat storage.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    v.assign(static_cast<std::size_t>(count(shape)), 0.0f);
  }

  static std::int64_t count(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int d : s) n *= d;
    return n;
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

  std::int64_t size() const { return static_cast<std::int64_t>(v.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  int ndim() const { return static_cast<int>(shape.size()); }

  float* data() { return v.data(); }
  const float* data() const { return v.data(); }

  void fill(float value) { std::fill(v.begin(), v.end(), value); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline void require_shape(const Tensor& t, const std::vector<int>& shape,
                          const char* what) {
  if (t.shape != shape) fail(ErrorKind::ShapeMismatch, std::string("unexpected shape for ") + what);
}

}  // namespace prunekit
