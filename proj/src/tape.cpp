#include "seqbattnet/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "seqbattnet/error.hpp"

namespace sbn {

namespace {

double sigmoid_stable(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// y += W x with W (k x d) row-major.
void matvec_acc(const double* W, const double* x, double* y, int k, int d) {
  for (int i = 0; i < k; ++i) {
    const double* row = W + static_cast<size_t>(i) * d;
    double acc = 0.0;
    for (int j = 0; j < d; ++j) acc += row[j] * x[j];
    y[i] += acc;
  }
}

// gx += W^T gy; gW += gy x^T.
void matvec_backward(const double* W, const double* x, const double* gy,
                     double* gx, double* gW, int k, int d) {
  for (int i = 0; i < k; ++i) {
    const double g = gy[i];
    if (g == 0.0) continue;
    const double* row = W + static_cast<size_t>(i) * d;
    double* grow = gW + static_cast<size_t>(i) * d;
    for (int j = 0; j < d; ++j) {
      gx[j] += row[j] * g;
      grow[j] += x[j] * g;
    }
  }
}

}  // namespace

Tape::Tape() = default;
Tape::~Tape() = default;

void Tape::reset() {
  nodes_.clear();
  inputs_.clear();
  aux_.clear();
  grads_.clear();
  total_len_ = 0;
  chunk_used_ = kChunk;
  chunks_.clear();
  param_cache_.clear();
}

double* Tape::alloc_values(int len) {
  if (len > kChunk) {
    // Oversized values get a dedicated chunk; the next small allocation
    // starts a fresh regular chunk.
    chunks_.push_back(std::make_unique<double[]>(len));
    chunk_used_ = kChunk;
    return chunks_.back().get();
  }
  if (chunk_used_ + len > kChunk) {
    chunks_.push_back(std::make_unique<double[]>(kChunk));
    chunk_used_ = 0;
  }
  double* p = chunks_.back().get() + chunk_used_;
  chunk_used_ += len;
  return p;
}

int Tape::alloc_aux(int n) {
  const int ofs = static_cast<int>(aux_.size());
  aux_.resize(aux_.size() + n, 0.0);
  return ofs;
}

Var Tape::push(Op op, std::span<const int> inputs, int len) {
  require(len > 0, Errc::shape, "tape op produced empty value");
  Node n;
  n.op = op;
  n.in_ofs = static_cast<int>(inputs_.size());
  n.in_n = static_cast<int>(inputs.size());
  inputs_.insert(inputs_.end(), inputs.begin(), inputs.end());
  n.val = alloc_values(len);
  n.gofs = static_cast<int>(total_len_);
  n.len = len;
  total_len_ += len;
  nodes_.push_back(n);
  return Var{this, static_cast<int>(nodes_.size()) - 1, len};
}

const Tape::Node& Tape::node(Var v) const {
  require(v.tape == this && v.id >= 0 && v.id < static_cast<int>(nodes_.size()),
          Errc::usage, "variable does not belong to this tape");
  return nodes_[v.id];
}

void Tape::check_same_tape(const Tape* t, Var v) {
  require(v.tape == t, Errc::usage, "operands recorded on different tapes");
}

std::span<const double> Tape::values(Var v) const { return node_values(node(v)); }

double Tape::value(Var v) const {
  const Node& n = node(v);
  require(n.len == 1, Errc::usage, "value() requires a scalar variable");
  return n.val[0];
}

Var Tape::param(Tensor& t) {
  auto it = param_cache_.find(&t);
  if (it != param_cache_.end()) {
    const Node& n = nodes_[it->second];
    return Var{this, it->second, n.len};
  }
  Var v = push(Op::leaf, {}, static_cast<int>(t.values.size()));
  nodes_.back().leaf = &t;
  std::memcpy(nodes_.back().val, t.values.data(), t.values.size() * sizeof(double));
  param_cache_.emplace(&t, v.id);
  return v;
}

Var Tape::constant(std::span<const double> vals) {
  Var v = push(Op::constant, {}, static_cast<int>(vals.size()));
  std::memcpy(nodes_.back().val, vals.data(), vals.size() * sizeof(double));
  return v;
}

Var Tape::constant(double v) { return constant(std::span<const double>(&v, 1)); }

Var Tape::affine(Var x, Var W, Var b) {
  check_same_tape(this, x);
  check_same_tape(this, W);
  check_same_tape(this, b);
  const int d = x.len, k = b.len;
  require(W.len == k * d, Errc::shape, "affine: weight shape mismatch");
  const int ins[3] = {x.id, W.id, b.id};
  Var y = push(Op::affine, ins, k);
  Node& n = nodes_.back();
  n.i0 = d;
  std::memcpy(n.val, nodes_[b.id].val, k * sizeof(double));
  matvec_acc(nodes_[W.id].val, nodes_[x.id].val, n.val, k, d);
  return y;
}

Var Tape::activation(Act kind, Var x) {
  check_same_tape(this, x);
  const int ins[1] = {x.id};
  Var y = push(Op::act, ins, x.len);
  Node& n = nodes_.back();
  n.i0 = static_cast<int>(kind);
  const double* xv = nodes_[x.id].val;
  switch (kind) {
    case Act::sigmoid:
      for (int i = 0; i < n.len; ++i) n.val[i] = sigmoid_stable(xv[i]);
      break;
    case Act::tanh:
      for (int i = 0; i < n.len; ++i) n.val[i] = std::tanh(xv[i]);
      break;
    case Act::silu: {
      n.aux_ofs = alloc_aux(n.len);
      n.aux_n = n.len;
      for (int i = 0; i < n.len; ++i) {
        const double s = sigmoid_stable(xv[i]);
        aux_[n.aux_ofs + i] = s;
        n.val[i] = xv[i] * s;
      }
      break;
    }
    case Act::exp:
      for (int i = 0; i < n.len; ++i) n.val[i] = std::exp(xv[i]);
      break;
    case Act::log:
      for (int i = 0; i < n.len; ++i) n.val[i] = std::log(xv[i]);
      break;
  }
  return y;
}

Var Tape::softmax(Var x) {
  check_same_tape(this, x);
  require(x.len >= 1, Errc::shape, "softmax: empty input");
  const int ins[1] = {x.id};
  Var y = push(Op::softmax, ins, x.len);
  Node& n = nodes_.back();
  const double* xv = nodes_[x.id].val;
  double mx = xv[0];
  for (int i = 1; i < n.len; ++i) mx = std::max(mx, xv[i]);
  double total = 0.0;
  for (int i = 0; i < n.len; ++i) {
    n.val[i] = std::exp(xv[i] - mx);
    total += n.val[i];
  }
  for (int i = 0; i < n.len; ++i) n.val[i] /= total;
  return y;
}

Var Tape::layer_norm(Var x, Var gamma, Var beta, double eps) {
  check_same_tape(this, x);
  check_same_tape(this, gamma);
  check_same_tape(this, beta);
  require(gamma.len == x.len && beta.len == x.len, Errc::shape,
          "layer_norm: scale/shift length mismatch");
  const int ins[3] = {x.id, gamma.id, beta.id};
  Var y = push(Op::layer_norm, ins, x.len);
  Node& n = nodes_.back();
  n.x0 = eps;
  n.aux_ofs = alloc_aux(2);  // mean, inv_std
  n.aux_n = 2;
  const double* xv = nodes_[x.id].val;
  const double* gv = nodes_[gamma.id].val;
  const double* bv = nodes_[beta.id].val;
  double mean = 0.0;
  for (int i = 0; i < n.len; ++i) mean += xv[i];
  mean /= n.len;
  double var = 0.0;
  for (int i = 0; i < n.len; ++i) var += (xv[i] - mean) * (xv[i] - mean);
  var /= n.len;
  const double inv_std = 1.0 / std::sqrt(var + eps);
  aux_[n.aux_ofs] = mean;
  aux_[n.aux_ofs + 1] = inv_std;
  for (int i = 0; i < n.len; ++i)
    n.val[i] = gv[i] * (xv[i] - mean) * inv_std + bv[i];
  return y;
}

Var Tape::dropout(Var x, double rate, bool training, Rng& rng) {
  check_same_tape(this, x);
  require(rate >= 0.0 && rate < 1.0, Errc::config, "dropout: rate must be in [0,1)");
  if (!training || rate == 0.0) return x;
  const int ins[1] = {x.id};
  Var y = push(Op::dropout, ins, x.len);
  Node& n = nodes_.back();
  n.aux_ofs = alloc_aux(n.len);  // per-element multiplier (0 or 1/(1-rate))
  n.aux_n = n.len;
  const double keep_scale = 1.0 / (1.0 - rate);
  const double* xv = nodes_[x.id].val;
  for (int i = 0; i < n.len; ++i) {
    const double m = rng.uniform() < rate ? 0.0 : keep_scale;
    aux_[n.aux_ofs + i] = m;
    n.val[i] = xv[i] * m;
  }
  return y;
}

Var Tape::gru_cell(Var x, Var h, Var Wz, Var Uz, Var bz, Var Wr, Var Ur,
                   Var br, Var Wh, Var Uh, Var bh) {
  const int d = x.len, m = h.len;
  for (Var v : {x, h, Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh}) check_same_tape(this, v);
  require(Wz.len == m * d && Wr.len == m * d && Wh.len == m * d, Errc::shape,
          "gru_cell: input weight shape mismatch");
  require(Uz.len == m * m && Ur.len == m * m && Uh.len == m * m, Errc::shape,
          "gru_cell: recurrent weight shape mismatch");
  require(bz.len == m && br.len == m && bh.len == m, Errc::shape,
          "gru_cell: bias length mismatch");
  const int ins[11] = {x.id,  h.id,  Wz.id, Uz.id, bz.id, Wr.id,
                       Ur.id, br.id, Wh.id, Uh.id, bh.id};
  Var y = push(Op::gru, ins, m);
  Node& n = nodes_.back();
  n.i0 = d;
  n.aux_ofs = alloc_aux(4 * m);  // z, r, c, r*h
  n.aux_n = 4 * m;
  double* z = &aux_[n.aux_ofs];
  double* r = z + m;
  double* c = r + m;
  double* rh = c + m;

  const double* xv = nodes_[x.id].val;
  const double* hv = nodes_[h.id].val;
  std::memcpy(z, nodes_[bz.id].val, m * sizeof(double));
  matvec_acc(nodes_[Wz.id].val, xv, z, m, d);
  matvec_acc(nodes_[Uz.id].val, hv, z, m, m);
  std::memcpy(r, nodes_[br.id].val, m * sizeof(double));
  matvec_acc(nodes_[Wr.id].val, xv, r, m, d);
  matvec_acc(nodes_[Ur.id].val, hv, r, m, m);
  for (int i = 0; i < m; ++i) {
    z[i] = sigmoid_stable(z[i]);
    r[i] = sigmoid_stable(r[i]);
    rh[i] = r[i] * hv[i];
  }
  std::memcpy(c, nodes_[bh.id].val, m * sizeof(double));
  matvec_acc(nodes_[Wh.id].val, xv, c, m, d);
  matvec_acc(nodes_[Uh.id].val, rh, c, m, m);
  for (int i = 0; i < m; ++i) {
    c[i] = std::tanh(c[i]);
    n.val[i] = (1.0 - z[i]) * hv[i] + z[i] * c[i];
  }
  return y;
}

Var Tape::add(Var a, Var b) {
  check_same_tape(this, a);
  check_same_tape(this, b);
  require(a.len == b.len || a.len == 1 || b.len == 1, Errc::shape,
          "add: incompatible lengths");
  const int len = std::max(a.len, b.len);
  const int ins[2] = {a.id, b.id};
  Var y = push(Op::add, ins, len);
  Node& n = nodes_.back();
  const double* av = nodes_[a.id].val;
  const double* bv = nodes_[b.id].val;
  for (int i = 0; i < len; ++i)
    n.val[i] = av[a.len == 1 ? 0 : i] + bv[b.len == 1 ? 0 : i];
  return y;
}

Var Tape::sub(Var a, Var b) {
  check_same_tape(this, a);
  check_same_tape(this, b);
  require(a.len == b.len || a.len == 1 || b.len == 1, Errc::shape,
          "sub: incompatible lengths");
  const int len = std::max(a.len, b.len);
  const int ins[2] = {a.id, b.id};
  Var y = push(Op::sub, ins, len);
  Node& n = nodes_.back();
  const double* av = nodes_[a.id].val;
  const double* bv = nodes_[b.id].val;
  for (int i = 0; i < len; ++i)
    n.val[i] = av[a.len == 1 ? 0 : i] - bv[b.len == 1 ? 0 : i];
  return y;
}

Var Tape::mul(Var a, Var b) {
  check_same_tape(this, a);
  check_same_tape(this, b);
  require(a.len == b.len || a.len == 1 || b.len == 1, Errc::shape,
          "mul: incompatible lengths");
  const int len = std::max(a.len, b.len);
  const int ins[2] = {a.id, b.id};
  Var y = push(Op::mul, ins, len);
  Node& n = nodes_.back();
  const double* av = nodes_[a.id].val;
  const double* bv = nodes_[b.id].val;
  for (int i = 0; i < len; ++i)
    n.val[i] = av[a.len == 1 ? 0 : i] * bv[b.len == 1 ? 0 : i];
  return y;
}

Var Tape::scale_shift(Var x, double a, double b) {
  check_same_tape(this, x);
  const int ins[1] = {x.id};
  Var y = push(Op::scale_shift, ins, x.len);
  Node& n = nodes_.back();
  n.x0 = a;
  n.x1 = b;
  const double* xv = nodes_[x.id].val;
  for (int i = 0; i < n.len; ++i) n.val[i] = a * xv[i] + b;
  return y;
}

Var Tape::pow_const(Var x, double c) {
  check_same_tape(this, x);
  const int ins[1] = {x.id};
  Var y = push(Op::pow_const, ins, x.len);
  Node& n = nodes_.back();
  n.x0 = c;
  const double* xv = nodes_[x.id].val;
  for (int i = 0; i < n.len; ++i) n.val[i] = std::pow(xv[i], c);
  return y;
}

Var Tape::clip(Var x, double lo, double hi) {
  check_same_tape(this, x);
  require(lo <= hi, Errc::usage, "clip: lo must not exceed hi");
  const int ins[1] = {x.id};
  Var y = push(Op::clip, ins, x.len);
  Node& n = nodes_.back();
  n.x0 = lo;
  n.x1 = hi;
  const double* xv = nodes_[x.id].val;
  for (int i = 0; i < n.len; ++i) n.val[i] = std::clamp(xv[i], lo, hi);
  return y;
}

Var Tape::concat(Var a, Var b) {
  check_same_tape(this, a);
  check_same_tape(this, b);
  const int ins[2] = {a.id, b.id};
  Var y = push(Op::concat, ins, a.len + b.len);
  Node& n = nodes_.back();
  std::memcpy(n.val, nodes_[a.id].val, a.len * sizeof(double));
  std::memcpy(n.val + a.len, nodes_[b.id].val, b.len * sizeof(double));
  return y;
}

Var Tape::slice(Var x, int start, int len) {
  check_same_tape(this, x);
  require(start >= 0 && len > 0 && start + len <= x.len, Errc::shape,
          "slice: range out of bounds");
  const int ins[1] = {x.id};
  Var y = push(Op::slice, ins, len);
  Node& n = nodes_.back();
  n.i0 = start;
  std::memcpy(n.val, nodes_[x.id].val + start, len * sizeof(double));
  return y;
}

Var Tape::pack(std::span<const Var> scalars) {
  require(!scalars.empty(), Errc::shape, "pack: empty input");
  std::vector<int> ins;
  ins.reserve(scalars.size());
  for (Var v : scalars) {
    check_same_tape(this, v);
    require(v.len == 1, Errc::shape, "pack: inputs must be scalars");
    ins.push_back(v.id);
  }
  Var y = push(Op::pack, ins, static_cast<int>(scalars.size()));
  Node& n = nodes_.back();
  for (size_t i = 0; i < scalars.size(); ++i)
    n.val[i] = nodes_[scalars[i].id].val[0];
  return y;
}

Var Tape::sum(Var x) {
  check_same_tape(this, x);
  const int ins[1] = {x.id};
  Var y = push(Op::sum, ins, 1);
  Node& n = nodes_.back();
  const double* xv = nodes_[x.id].val;
  double acc = 0.0;
  for (int i = 0; i < x.len; ++i) acc += xv[i];
  n.val[0] = acc;
  return y;
}

Var Tape::dot_const(Var x, std::span<const double> w) {
  check_same_tape(this, x);
  require(static_cast<int>(w.size()) == x.len, Errc::shape,
          "dot_const: length mismatch");
  const int ins[1] = {x.id};
  Var y = push(Op::dot_const, ins, 1);
  Node& n = nodes_.back();
  n.aux_ofs = alloc_aux(x.len);
  n.aux_n = x.len;
  const double* xv = nodes_[x.id].val;
  double acc = 0.0;
  for (int i = 0; i < x.len; ++i) {
    aux_[n.aux_ofs + i] = w[i];
    acc += xv[i] * w[i];
  }
  n.val[0] = acc;
  return y;
}

Var Tape::huber_const(Var pred, std::span<const double> truth, double beta) {
  check_same_tape(this, pred);
  require(beta > 0.0, Errc::config, "huber: beta must be positive");
  require(static_cast<int>(truth.size()) == pred.len, Errc::shape,
          "huber: length mismatch");
  const int ins[1] = {pred.id};
  Var y = push(Op::huber_const, ins, pred.len);
  Node& n = nodes_.back();
  n.x0 = beta;
  n.aux_ofs = alloc_aux(pred.len);  // residuals
  n.aux_n = pred.len;
  const double* pv = nodes_[pred.id].val;
  for (int i = 0; i < n.len; ++i) {
    const double d = pv[i] - truth[i];
    aux_[n.aux_ofs + i] = d;
    n.val[i] = std::abs(d) < beta ? d * d / (2.0 * beta) : std::abs(d) - 0.5 * beta;
  }
  return y;
}

void Tape::backward(Var output) {
  const Node& out = node(output);
  require(out.len == 1, Errc::usage, "backward: output must be a scalar");
  grads_.assign(static_cast<size_t>(total_len_), 0.0);
  grads_[out.gofs] = 1.0;
  for (int id = output.id; id >= 0; --id) backward_node(nodes_[id]);
  for (int id = 0; id <= output.id; ++id) {
    Node& n = nodes_[id];
    if (n.op == Op::leaf && n.leaf != nullptr) {
      n.leaf->ensure_grad();
      const double* g = &grads_[n.gofs];
      for (int i = 0; i < n.len; ++i) n.leaf->grad[i] += g[i];
    }
  }
}

void Tape::backward_node(const Node& n) {
  const double* gy = &grads_[n.gofs];
  const int* in = inputs_.data() + n.in_ofs;
  auto gin = [&](int k) { return &grads_[nodes_[in[k]].gofs]; };
  auto vin = [&](int k) { return nodes_[in[k]].val; };
  auto lin = [&](int k) { return nodes_[in[k]].len; };

  switch (n.op) {
    case Op::leaf:
    case Op::constant:
      break;
    case Op::affine: {
      const int k = n.len, d = n.i0;
      matvec_backward(vin(1), vin(0), gy, gin(0), gin(1), k, d);
      double* gb = gin(2);
      for (int i = 0; i < k; ++i) gb[i] += gy[i];
      break;
    }
    case Op::act: {
      double* gx = gin(0);
      const double* xv = vin(0);
      switch (static_cast<Act>(n.i0)) {
        case Act::sigmoid:
          for (int i = 0; i < n.len; ++i)
            gx[i] += gy[i] * n.val[i] * (1.0 - n.val[i]);
          break;
        case Act::tanh:
          for (int i = 0; i < n.len; ++i)
            gx[i] += gy[i] * (1.0 - n.val[i] * n.val[i]);
          break;
        case Act::silu:
          for (int i = 0; i < n.len; ++i) {
            const double s = aux_[n.aux_ofs + i];
            gx[i] += gy[i] * s * (1.0 + xv[i] * (1.0 - s));
          }
          break;
        case Act::exp:
          for (int i = 0; i < n.len; ++i) gx[i] += gy[i] * n.val[i];
          break;
        case Act::log:
          for (int i = 0; i < n.len; ++i) gx[i] += gy[i] / xv[i];
          break;
      }
      break;
    }
    case Op::softmax: {
      double* gx = gin(0);
      double dot = 0.0;
      for (int i = 0; i < n.len; ++i) dot += gy[i] * n.val[i];
      for (int i = 0; i < n.len; ++i) gx[i] += n.val[i] * (gy[i] - dot);
      break;
    }
    case Op::layer_norm: {
      const int k = n.len;
      const double mean = aux_[n.aux_ofs];
      const double inv_std = aux_[n.aux_ofs + 1];
      const double* xv = vin(0);
      const double* gv = vin(1);
      double* gx = gin(0);
      double* gg = gin(1);
      double* gb = gin(2);
      double sum_gxh = 0.0, sum_gxh_xh = 0.0;
      scratch_.resize(2 * k);
      double* xh = scratch_.data();       // normalized input
      double* gxh = scratch_.data() + k;  // adjoint wrt normalized input
      for (int i = 0; i < k; ++i) {
        xh[i] = (xv[i] - mean) * inv_std;
        gxh[i] = gy[i] * gv[i];
        gg[i] += gy[i] * xh[i];
        gb[i] += gy[i];
        sum_gxh += gxh[i];
        sum_gxh_xh += gxh[i] * xh[i];
      }
      for (int i = 0; i < k; ++i)
        gx[i] += inv_std * (gxh[i] - sum_gxh / k - xh[i] * sum_gxh_xh / k);
      break;
    }
    case Op::dropout: {
      double* gx = gin(0);
      for (int i = 0; i < n.len; ++i) gx[i] += gy[i] * aux_[n.aux_ofs + i];
      break;
    }
    case Op::gru: {
      const int m = n.len, d = n.i0;
      const double* z = &aux_[n.aux_ofs];
      const double* r = z + m;
      const double* c = r + m;
      const double* rh = c + m;
      const double* xv = vin(0);
      const double* hv = vin(1);
      scratch_.resize(4 * m);
      double* gaz = scratch_.data();
      double* gar = gaz + m;
      double* gac = gar + m;
      double* grh = gac + m;
      for (int i = 0; i < m; ++i) {
        const double gz = gy[i] * (c[i] - hv[i]);
        const double gc = gy[i] * z[i];
        gaz[i] = gz * z[i] * (1.0 - z[i]);
        gac[i] = gc * (1.0 - c[i] * c[i]);
        grh[i] = 0.0;
      }
      double* gh = gin(1);
      for (int i = 0; i < m; ++i) gh[i] += gy[i] * (1.0 - z[i]);
      // candidate path: ac = Wh x + Uh (r h) + bh
      matvec_backward(vin(9), rh, gac, grh, gin(9), m, m);  // Uh
      matvec_backward(vin(8), xv, gac, gin(0), gin(8), m, d);  // Wh
      for (int i = 0; i < m; ++i) {
        gin(10)[i] += gac[i];  // bh
        gar[i] = grh[i] * hv[i] * r[i] * (1.0 - r[i]);
        gh[i] += grh[i] * r[i];
      }
      // gate paths
      matvec_backward(vin(2), xv, gaz, gin(0), gin(2), m, d);  // Wz
      matvec_backward(vin(3), hv, gaz, gh, gin(3), m, m);      // Uz
      matvec_backward(vin(5), xv, gar, gin(0), gin(5), m, d);  // Wr
      matvec_backward(vin(6), hv, gar, gh, gin(6), m, m);      // Ur
      for (int i = 0; i < m; ++i) {
        gin(4)[i] += gaz[i];  // bz
        gin(7)[i] += gar[i];  // br
      }
      break;
    }
    case Op::add: {
      for (int k = 0; k < 2; ++k) {
        double* g = gin(k);
        if (lin(k) == 1 && n.len > 1) {
          double acc = 0.0;
          for (int i = 0; i < n.len; ++i) acc += gy[i];
          g[0] += acc;
        } else {
          for (int i = 0; i < n.len; ++i) g[i] += gy[i];
        }
      }
      break;
    }
    case Op::sub: {
      double* ga = gin(0);
      if (lin(0) == 1 && n.len > 1) {
        double acc = 0.0;
        for (int i = 0; i < n.len; ++i) acc += gy[i];
        ga[0] += acc;
      } else {
        for (int i = 0; i < n.len; ++i) ga[i] += gy[i];
      }
      double* gb = gin(1);
      if (lin(1) == 1 && n.len > 1) {
        double acc = 0.0;
        for (int i = 0; i < n.len; ++i) acc -= gy[i];
        gb[0] += acc;
      } else {
        for (int i = 0; i < n.len; ++i) gb[i] -= gy[i];
      }
      break;
    }
    case Op::mul: {
      const double* av = vin(0);
      const double* bv = vin(1);
      double* ga = gin(0);
      double* gb = gin(1);
      const bool sa = lin(0) == 1 && n.len > 1;
      const bool sb = lin(1) == 1 && n.len > 1;
      for (int i = 0; i < n.len; ++i) {
        const double a = av[sa ? 0 : i];
        const double b = bv[sb ? 0 : i];
        if (sa)
          ga[0] += gy[i] * b;
        else
          ga[i] += gy[i] * b;
        if (sb)
          gb[0] += gy[i] * a;
        else
          gb[i] += gy[i] * a;
      }
      break;
    }
    case Op::scale_shift: {
      double* gx = gin(0);
      for (int i = 0; i < n.len; ++i) gx[i] += gy[i] * n.x0;
      break;
    }
    case Op::pow_const: {
      double* gx = gin(0);
      const double* xv = vin(0);
      for (int i = 0; i < n.len; ++i)
        gx[i] += gy[i] * n.x0 * std::pow(xv[i], n.x0 - 1.0);
      break;
    }
    case Op::clip: {
      double* gx = gin(0);
      const double* xv = vin(0);
      for (int i = 0; i < n.len; ++i)
        if (xv[i] >= n.x0 && xv[i] <= n.x1) gx[i] += gy[i];
      break;
    }
    case Op::concat: {
      double* ga = gin(0);
      double* gb = gin(1);
      const int la = lin(0);
      for (int i = 0; i < la; ++i) ga[i] += gy[i];
      for (int i = la; i < n.len; ++i) gb[i - la] += gy[i];
      break;
    }
    case Op::slice: {
      double* gx = gin(0);
      for (int i = 0; i < n.len; ++i) gx[n.i0 + i] += gy[i];
      break;
    }
    case Op::pack: {
      for (int i = 0; i < n.in_n; ++i) gin(i)[0] += gy[i];
      break;
    }
    case Op::sum: {
      double* gx = gin(0);
      const int lx = lin(0);
      for (int i = 0; i < lx; ++i) gx[i] += gy[0];
      break;
    }
    case Op::dot_const: {
      double* gx = gin(0);
      const int lx = lin(0);
      for (int i = 0; i < lx; ++i) gx[i] += gy[0] * aux_[n.aux_ofs + i];
      break;
    }
    case Op::huber_const: {
      double* gx = gin(0);
      const double beta = n.x0;
      for (int i = 0; i < n.len; ++i) {
        const double d = aux_[n.aux_ofs + i];
        gx[i] += gy[i] * (std::abs(d) < beta ? d / beta : (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)));
      }
      break;
    }
  }
}

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::io: return "io";
    case Errc::parse: return "parse";
    case Errc::schema: return "schema";
    case Errc::config: return "config";
    case Errc::input: return "input";
    case Errc::usage: return "usage";
    case Errc::domain: return "domain";
    case Errc::shape: return "shape";
    case Errc::divergence: return "divergence";
    case Errc::generation: return "generation";
    case Errc::internal: return "internal";
  }
  return "unknown";
}

}  // namespace sbn
