#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "graphfuse/graph.hpp"

namespace graphfuse {

struct KernelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Row-major dense matrix of node features or gradients.
template <typename T>
struct DenseMatrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<T> data;

  DenseMatrix() = default;
  DenseMatrix(std::int64_t r, std::int64_t c, T fill = T(0))
      : rows(r), cols(c), data(static_cast<size_t>(r * c), fill) {}

  T* row(std::int64_t r) { return data.data() + r * cols; }
  const T* row(std::int64_t r) const { return data.data() + r * cols; }
  T& at(std::int64_t r, std::int64_t c) { return data[r * cols + c]; }
  T at(std::int64_t r, std::int64_t c) const { return data[r * cols + c]; }
};

/// Per-edge scalar vector aligned to CSR edge order.
template <typename T>
struct EdgeScalars {
  std::vector<T> values;

  EdgeScalars() = default;
  explicit EdgeScalars(EdgeId e, T fill = T(0))
      : values(static_cast<size_t>(e), fill) {}

  EdgeId size() const { return static_cast<EdgeId>(values.size()); }
  T& operator[](EdgeId e) { return values[static_cast<size_t>(e)]; }
  T operator[](EdgeId e) const { return values[static_cast<size_t>(e)]; }
};

enum class SddmmVariant { Dot, Add };

struct SddmmKind {
  SddmmVariant variant = SddmmVariant::Dot;
  double scale = 1.0;              // Dot only
  double leaky_slope = 0.2;        // Add only
  bool l2_normalize_inputs = false;

  static SddmmKind dot(double scale = 1.0, bool l2 = false) {
    return {SddmmVariant::Dot, scale, 0.2, l2};
  }
  static SddmmKind add(double slope = 0.2) {
    return {SddmmVariant::Add, 1.0, slope, false};
  }
};

template <typename T>
bool all_finite(const DenseMatrix<T>& m) {
  for (T v : m.data)
    if (!std::isfinite(v)) return false;
  return true;
}

template <typename T>
bool all_finite(const EdgeScalars<T>& s) {
  for (T v : s.values)
    if (!std::isfinite(v)) return false;
  return true;
}

template <typename T>
DenseMatrix<T> random_matrix(std::int64_t rows, std::int64_t cols,
                             std::uint64_t seed, T lo = T(-1), T hi = T(1)) {
  DenseMatrix<T> m(rows, cols);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (T& v : m.data) v = static_cast<T>(dist(rng));
  return m;
}

} // namespace graphfuse
