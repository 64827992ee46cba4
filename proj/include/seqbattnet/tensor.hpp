#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "seqbattnet/error.hpp"
#include "seqbattnet/rng.hpp"

namespace sbn {

// Dense 64-bit-real array with an optional gradient buffer. Rank 1 or 2;
// matrices are row-major. Tensors own parameter storage; tape Vars reference
// values recorded on a Tape.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until touched by backward()

  Tensor() = default;

  static Tensor zeros(std::vector<int> shape) {
    Tensor t;
    int64_t n = 1;
    for (int d : shape) {
      require(d > 0, Errc::shape, "tensor dimensions must be positive");
      n *= d;
    }
    t.shape = std::move(shape);
    t.values.assign(static_cast<size_t>(n), 0.0);
    return t;
  }

  // Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)).
  static Tensor uniform_fan_in(std::vector<int> shape, int fan_in, Rng& rng) {
    Tensor t = zeros(std::move(shape));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : t.values) v = rng.uniform(-bound, bound);
    return t;
  }

  int64_t size() const { return static_cast<int64_t>(values.size()); }
  int rows() const { return shape.empty() ? 1 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  void zero_grad() { grad.assign(values.size(), 0.0); }
  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  }
  std::span<const double> vals() const { return values; }
};

}  // namespace sbn
