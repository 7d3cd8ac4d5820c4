#pragma once

#include <span>
#include <vector>

#include "mgrn/linalg.hpp"
#include "mgrn/model.hpp"

namespace mgrn {

// ---------------------------------------------------------------------------
// Single-step cells on value types. These share their arithmetic kernels with
// the window passes below, so a marginal block inside a full forward pass
// reproduces the standalone step bitwise.
// ---------------------------------------------------------------------------

struct GruParams {
  Mat w_r, w_z, w_h;  // N x M
  Mat u_r, u_z, u_h;  // N x N
  Vec b_r, b_z, b_h;  // N
};

/// r = sigma(W_r x + U_r h + b_r), z likewise,
/// hc = tanh(W_h x + r . (U_h h) + b_h), h' = (1-z) . h + z . hc.
Vec gru_step(const GruParams& p, const Vec& x, const Vec& h_prev);

struct LstmParams {
  Mat w_i, w_f, w_c, w_o;  // N x M
  Mat u_i, u_f, u_c, u_o;  // N x N
  Vec b_i, b_f, b_c, b_o;  // N
};

struct LstmState {
  Vec h;
  Vec c;
};

/// Four-gate LSTM, one bias vector per gate:
/// c' = f . c + i . tanh(W_c x + U_c h + b_c), h' = o . tanh(c').
LstmState lstm_step(const LstmParams& p, const Vec& x, const Vec& h_prev,
                    const Vec& c_prev);

struct MgrnParams {
  std::vector<GruParams> marginal;  // K blocks; block k maps m_k inputs to N~
  Mat joint_w_z;                    // N x M
  Mat joint_u_z;                    // N x N
  std::vector<Mat> joint_u_c;       // K matrices, N x N~
  Vec joint_b_c, joint_b_z;         // N
};

struct MgrnStepResult {
  std::vector<Vec> marginal_h;
  Vec joint_h;
  std::vector<Vec> marginal_candidates;  // the hc~(k) fed to the joint block
};

/// Each marginal block runs a GRU step on its own input slice; the joint
/// candidate is tanh(sum_k U_c(k) hc~(k) + b_c) and the joint update gate
/// blends it with the previous joint state. The joint component sees the
/// marginal candidates, never the final marginal memories.
MgrnStepResult mgrn_step(const MgrnParams& p, const GroupingScheme& grouping,
                         const Vec& x, const std::vector<Vec>& marginal_h_prev,
                         const Vec& joint_h_prev);

struct CwLstmParams {
  std::vector<LstmParams> forward_blocks;   // per group, m_k -> N~
  std::vector<LstmParams> backward_blocks;  // per group, on the reversed slice
  LstmParams joint;                         // 2*K*N~ -> N
};

/// Runs every group's slice through its forward (t = 1..T) and backward
/// (t = T..1) LSTM; at each step the joint LSTM consumes the concatenation
/// [fwd group 1..K, bwd group 1..K], where the bwd part at time t is the
/// backward pass state after consuming x_T..x_t. Returns the joint state
/// after step T. Window is T x M.
Vec cwlstm_forward(const CwLstmParams& p, const GroupingScheme& grouping,
                   const Mat& window);

// ---------------------------------------------------------------------------
// Whole-window passes on the flat parameter vector.
// ---------------------------------------------------------------------------

/// Non-owning view of T consecutive observation rows.
struct WindowView {
  const double* data = nullptr;
  int steps = 0;             // T
  int width = 0;             // input columns consumed per row
  std::size_t stride = 0;    // doubles between consecutive rows, >= width

  std::span<const double> row(int t) const {
    return {data + stride * static_cast<std::size_t>(t),
            static_cast<std::size_t>(width)};
  }
};

WindowView window_view(const Mat& window);

/// Runs the architecture over the window from zero initial states and applies
/// the dense head to the final hidden state.
double forward_window(const ModelSpec& spec, std::span<const double> params,
                      const WindowView& window);

/// Accumulates dL/dtheta for L = (prediction - target)^2 into grad_acc
/// (same flat layout as params, not cleared) and returns the prediction.
double backward_window(const ModelSpec& spec, std::span<const double> params,
                       const WindowView& window, double target,
                       std::span<double> grad_acc);

// Hot-path overloads reusing a precomputed layout (training loops call these
// tens of thousands of times per epoch).
double forward_window(const ModelSpec& spec, const ParamLayout& layout,
                      std::span<const double> params, const WindowView& window);
double backward_window(const ModelSpec& spec, const ParamLayout& layout,
                       std::span<const double> params, const WindowView& window,
                       double target, std::span<double> grad_acc);

/// Convenience wrapper returning a fresh gradient vector.
std::vector<double> window_gradient(const ModelSpec& spec,
                                    std::span<const double> params,
                                    const WindowView& window, double target);

// Extract value-typed parameter structs from the flat vector (test and
// inspection helper; the window passes read the flat storage directly).
GruParams gru_params_from_flat(const ModelSpec& spec, std::span<const double> params);
LstmParams lstm_params_from_flat(const ModelSpec& spec, std::span<const double> params);
MgrnParams mgrn_params_from_flat(const ModelSpec& spec, std::span<const double> params);
CwLstmParams cwlstm_params_from_flat(const ModelSpec& spec, std::span<const double> params);

struct DenseHead {
  Vec weight;  // N
  double bias = 0.0;
};
DenseHead head_from_flat(const ModelSpec& spec, std::span<const double> params);

}  // namespace mgrn
