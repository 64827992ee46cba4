#include "seqbattnet/nn.hpp"

#include <cmath>

#include "seqbattnet/error.hpp"

namespace sbn {

GruParams GruParams::init(int input_dim, int hidden_dim, Rng& rng) {
  require(input_dim > 0 && hidden_dim > 0, Errc::shape,
          "gru: dimensions must be positive");
  GruParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.Wz = Tensor::uniform_fan_in({hidden_dim, input_dim}, input_dim, rng);
  p.Uz = Tensor::uniform_fan_in({hidden_dim, hidden_dim}, hidden_dim, rng);
  p.bz = Tensor::zeros({hidden_dim});
  p.Wr = Tensor::uniform_fan_in({hidden_dim, input_dim}, input_dim, rng);
  p.Ur = Tensor::uniform_fan_in({hidden_dim, hidden_dim}, hidden_dim, rng);
  p.br = Tensor::zeros({hidden_dim});
  p.Wh = Tensor::uniform_fan_in({hidden_dim, input_dim}, input_dim, rng);
  p.Uh = Tensor::uniform_fan_in({hidden_dim, hidden_dim}, hidden_dim, rng);
  p.bh = Tensor::zeros({hidden_dim});
  return p;
}

void GruParams::for_each_param(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".Wz", Wz);
  fn(prefix + ".Uz", Uz);
  fn(prefix + ".bz", bz);
  fn(prefix + ".Wr", Wr);
  fn(prefix + ".Ur", Ur);
  fn(prefix + ".br", br);
  fn(prefix + ".Wh", Wh);
  fn(prefix + ".Uh", Uh);
  fn(prefix + ".bh", bh);
}

Var gru_cell(Tape& tape, Var x, Var h_prev, GruParams& p) {
  require(x.len == p.input_dim, Errc::shape, "gru_cell: input length mismatch");
  require(h_prev.len == p.hidden_dim, Errc::shape,
          "gru_cell: hidden length mismatch");
  return tape.gru_cell(x, h_prev, tape.param(p.Wz), tape.param(p.Uz),
                       tape.param(p.bz), tape.param(p.Wr), tape.param(p.Ur),
                       tape.param(p.br), tape.param(p.Wh), tape.param(p.Uh),
                       tape.param(p.bh));
}

namespace {

double sigmoid_stable(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void matvec_acc(const Tensor& W, const double* x, double* y) {
  const int k = W.rows(), d = W.cols();
  for (int i = 0; i < k; ++i) {
    const double* row = W.values.data() + static_cast<size_t>(i) * d;
    double acc = 0.0;
    for (int j = 0; j < d; ++j) acc += row[j] * x[j];
    y[i] += acc;
  }
}

}  // namespace

void gru_forward_raw(const GruParams& p, std::span<const double> x,
                     std::span<const double> h, std::span<double> h_out,
                     std::span<double> scratch) {
  const int m = p.hidden_dim;
  require(static_cast<int>(x.size()) == p.input_dim &&
              static_cast<int>(h.size()) == m &&
              static_cast<int>(h_out.size()) == m &&
              static_cast<int>(scratch.size()) >= 3 * m,
          Errc::shape, "gru_forward_raw: size mismatch");
  double* z = scratch.data();
  double* r = z + m;
  double* rh = r + m;
  for (int i = 0; i < m; ++i) {
    z[i] = p.bz.values[i];
    r[i] = p.br.values[i];
  }
  matvec_acc(p.Wz, x.data(), z);
  matvec_acc(p.Uz, h.data(), z);
  matvec_acc(p.Wr, x.data(), r);
  matvec_acc(p.Ur, h.data(), r);
  for (int i = 0; i < m; ++i) {
    z[i] = sigmoid_stable(z[i]);
    r[i] = sigmoid_stable(r[i]) * h[i];  // r slot now holds r .* h
  }
  for (int i = 0; i < m; ++i) h_out[i] = p.bh.values[i];
  matvec_acc(p.Wh, x.data(), h_out.data());
  matvec_acc(p.Uh, r, h_out.data());
  for (int i = 0; i < m; ++i) {
    const double c = std::tanh(h_out[i]);
    h_out[i] = (1.0 - z[i]) * h[i] + z[i] * c;
  }
}

FnnParams FnnParams::make_ocv_net(Rng& rng) {
  FnnParams p;
  p.layers.push_back({Tensor::uniform_fan_in({32, 1}, 1, rng), Tensor::zeros({32}), FnnAct::silu});
  p.layers.push_back({Tensor::uniform_fan_in({32, 32}, 32, rng), Tensor::zeros({32}), FnnAct::silu});
  p.layers.push_back({Tensor::uniform_fan_in({1, 32}, 32, rng), Tensor::zeros({1}), FnnAct::sigmoid});
  return p;
}

FnnParams FnnParams::make_rc_net(int e_rc, Rng& rng) {
  require(e_rc > 0, Errc::shape, "rc net: e_rc must be positive");
  FnnParams p;
  p.layers.push_back({Tensor::uniform_fan_in({32, 2}, 2, rng), Tensor::zeros({32}), FnnAct::silu});
  p.layers.push_back({Tensor::uniform_fan_in({e_rc, 32}, 32, rng), Tensor::zeros({e_rc}), FnnAct::sigmoid});
  return p;
}

void FnnParams::for_each_param(const std::string& prefix, const ParamVisitor& fn) {
  for (size_t i = 0; i < layers.size(); ++i) {
    const std::string base = prefix + "." + std::to_string(i);
    fn(base + ".W", layers[i].W);
    fn(base + ".b", layers[i].b);
  }
}

Var fnn_forward(Tape& tape, FnnParams& p, Var x) {
  require(!p.layers.empty(), Errc::usage, "fnn_forward: empty network");
  Var h = x;
  for (FnnLayer& layer : p.layers) {
    h = tape.affine(h, tape.param(layer.W), tape.param(layer.b));
    h = tape.activation(layer.act == FnnAct::silu ? Act::silu : Act::sigmoid, h);
  }
  return h;
}

}  // namespace sbn
