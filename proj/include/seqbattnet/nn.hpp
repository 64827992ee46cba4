#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "seqbattnet/tape.hpp"
#include "seqbattnet/tensor.hpp"

namespace sbn {

// Visits every named parameter tensor of a container, in a fixed order. The
// order is part of the reproducibility contract (checkpoints, optimizer
// state, initialization draws all follow it).
using ParamVisitor = std::function<void(const std::string&, Tensor&)>;

struct GruParams {
  int input_dim = 0, hidden_dim = 0;
  Tensor Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh;

  static GruParams init(int input_dim, int hidden_dim, Rng& rng);
  void for_each_param(const std::string& prefix, const ParamVisitor& fn);
};

// Taped GRU cell over parameter leaves.
Var gru_cell(Tape& tape, Var x, Var h_prev, GruParams& p);

// Value-only GRU forward used by the gradient-free micro-update phase.
// scratch must hold at least 3*hidden_dim doubles.
void gru_forward_raw(const GruParams& p, std::span<const double> x,
                     std::span<const double> h, std::span<double> h_out,
                     std::span<double> scratch);

enum class FnnAct { silu, sigmoid };

struct FnnLayer {
  Tensor W, b;
  FnnAct act = FnnAct::silu;
};

// Small feedforward network; the final layer is sigmoid so outputs live in
// (0,1).
struct FnnParams {
  std::vector<FnnLayer> layers;

  int input_dim() const { return layers.empty() ? 0 : layers.front().W.cols(); }
  int output_dim() const { return layers.empty() ? 0 : layers.back().W.rows(); }

  // OCV shape network: 1 -> 32 -> 32 -> 1 (SiLU, SiLU, Sigmoid).
  static FnnParams make_ocv_net(Rng& rng);
  // RC resistance network: 2 -> 32 -> e_rc (SiLU, Sigmoid).
  static FnnParams make_rc_net(int e_rc, Rng& rng);

  void for_each_param(const std::string& prefix, const ParamVisitor& fn);
};

Var fnn_forward(Tape& tape, FnnParams& p, Var x);

}  // namespace sbn
