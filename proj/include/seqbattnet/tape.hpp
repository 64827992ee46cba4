#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "seqbattnet/rng.hpp"
#include "seqbattnet/tensor.hpp"

namespace sbn {

class Tape;

// Handle to a value recorded on a tape. Cheap to copy. Invalidated by
// Tape::reset().
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  int len = 0;
  bool valid() const { return tape != nullptr && id >= 0; }
};

enum class Act { sigmoid, tanh, silu, exp, log };

// Reverse-mode tape. Forward values are computed eagerly as operations are
// recorded; backward() sweeps the recorded nodes in reverse and accumulates
// gradients into the leaf tensors' grad buffers.
//
// A tape is single-writer: one forward/backward pass at a time. Distinct
// tapes are independent and may run on distinct threads.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Drops all recorded nodes but keeps allocated capacity.
  void reset();
  int node_count() const { return static_cast<int>(nodes_.size()); }

  // Leaf referencing a parameter tensor; repeated calls with the same tensor
  // return the same node. backward() accumulates into t.grad.
  Var param(Tensor& t);
  Var constant(std::span<const double> v);
  Var constant(double v);

  // y = W x + b with W of shape (k x d), x of length d, b of length k.
  Var affine(Var x, Var W, Var b);
  Var activation(Act kind, Var x);
  Var softmax(Var x);
  Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
  // Inverted dropout; identity when !training or rate == 0. rate must be < 1.
  Var dropout(Var x, double rate, bool training, Rng& rng);
  // Fused GRU cell. Saves the gate activations for the analytic backward.
  Var gru_cell(Var x, Var h, Var Wz, Var Uz, Var bz, Var Wr, Var Ur, Var br,
               Var Wh, Var Uh, Var bh);

  // Elementwise; one operand may be a scalar (length 1), broadcast over the
  // other.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);

  Var scale_shift(Var x, double a, double b);  // a*x + b
  Var pow_const(Var x, double c);              // x^c, x > 0
  // Hard clip; gradient is 1 inside [lo, hi] (boundary inclusive), 0 outside.
  Var clip(Var x, double lo, double hi);
  Var concat(Var a, Var b);
  Var slice(Var x, int start, int len);
  Var pack(std::span<const Var> scalars);  // length-1 vars -> one vector
  Var sum(Var x);                          // -> scalar
  Var dot_const(Var x, std::span<const double> w);
  // Elementwise Huber of (pred - truth) with threshold beta.
  Var huber_const(Var pred, std::span<const double> truth, double beta);

  // View of a var's forward values. Valid until the tape is reset.
  std::span<const double> values(Var v) const;
  double value(Var v) const;  // v must have length 1

  // Reverse sweep from a scalar output; accumulates into every reachable
  // parameter tensor's grad. May be called repeatedly (adjoints reset each
  // call; tensor grads accumulate across calls).
  void backward(Var output);

 private:
  enum class Op : uint8_t {
    leaf,
    constant,
    affine,
    act,
    softmax,
    layer_norm,
    dropout,
    gru,
    add,
    sub,
    mul,
    scale_shift,
    pow_const,
    clip,
    concat,
    slice,
    pack,
    sum,
    dot_const,
    huber_const,
  };

  struct Node {
    Op op;
    int in_ofs = 0, in_n = 0;   // indices into inputs_
    double* val = nullptr;      // chunk storage, contiguous
    int gofs = 0;               // offset into grads_
    int len = 0;
    int aux_ofs = 0, aux_n = 0; // offsets into aux_ (saved data / payload)
    int i0 = 0;                 // op-specific (slice start, affine in-dim, ...)
    double x0 = 0, x1 = 0;      // op-specific scalars
    Tensor* leaf = nullptr;
  };

  Var push(Op op, std::span<const int> inputs, int len);
  double* alloc_values(int len);
  int alloc_aux(int n);
  const Node& node(Var v) const;
  std::span<const double> node_values(const Node& n) const {
    return {n.val, static_cast<size_t>(n.len)};
  }
  static void check_same_tape(const Tape* t, Var v);
  void backward_node(const Node& n);

  std::vector<Node> nodes_;
  std::vector<int> inputs_;
  std::vector<double> aux_;
  std::vector<double> grads_;
  int64_t total_len_ = 0;

  // Value storage in stable chunks so spans survive later recording.
  static constexpr int kChunk = 1 << 14;
  std::vector<std::unique_ptr<double[]>> chunks_;
  int chunk_used_ = kChunk;

  std::unordered_map<const Tensor*, int> param_cache_;
  std::vector<double> scratch_;
};

// Convenience wrappers used throughout the model code.
inline Var sigmoid(Var x) { return x.tape->activation(Act::sigmoid, x); }
inline Var tanh_v(Var x) { return x.tape->activation(Act::tanh, x); }

// Aff-sigma range map: lo + (hi - lo) * sigmoid(x).
inline Var affine_sigmoid(Var x, double lo, double hi) {
  return x.tape->scale_shift(sigmoid(x), hi - lo, lo);
}

}  // namespace sbn
