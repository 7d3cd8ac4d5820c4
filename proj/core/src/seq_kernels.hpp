#pragma once

// Internal forward tapes and backward passes for GRU/LSTM sequences. The
// grouped architectures are assembled from these blocks, so there is exactly
// one implementation of each cell's arithmetic.

#include <span>
#include <vector>

#include "mgrn/linalg.hpp"
#include "mgrn/model.hpp"

namespace mgrn::detail {

template <typename T>
class Cursor {
 public:
  Cursor(const ParamLayout& layout, T* base)
      : tensors_(&layout.tensors()), base_(base) {}

  std::span<T> next() {
    const TensorInfo& t = (*tensors_)[index_++];
    return {base_ + t.offset, t.size()};
  }

 private:
  const std::vector<TensorInfo>* tensors_;
  T* base_;
  std::size_t index_ = 0;
};

struct GruViews {
  std::span<const double> w_r, w_z, w_h, u_r, u_z, u_h, b_r, b_z, b_h;
  int in = 0, n = 0;
};

struct GruGrads {
  std::span<double> w_r, w_z, w_h, u_r, u_z, u_h, b_r, b_z, b_h;
};

struct LstmViews {
  std::span<const double> w[4], u[4], b[4];  // gate order i, f, c, o
  int in = 0, n = 0;
};

struct LstmGrads {
  std::span<double> w[4], u[4], b[4];
};

GruViews next_gru_block(Cursor<const double>& c, int in, int n);
GruGrads next_gru_block(Cursor<double>& c);
LstmViews next_lstm_block(Cursor<const double>& c, int in, int n);
LstmGrads next_lstm_block(Cursor<double>& c);

// One GRU step. All output spans have length v.n and must not alias.
// a caches U_h * h_prev for the backward pass.
void gru_cell_forward(const GruViews& v, std::span<const double> x,
                      std::span<const double> h_prev, std::span<double> r,
                      std::span<double> z, std::span<double> hc,
                      std::span<double> a, std::span<double> h_out);

// One LSTM step; tc caches tanh(c_out).
void lstm_cell_forward(const LstmViews& v, std::span<const double> x,
                       std::span<const double> h_prev,
                       std::span<const double> c_prev, std::span<double> gi,
                       std::span<double> gf, std::span<double> gc,
                       std::span<double> go, std::span<double> c_out,
                       std::span<double> tc, std::span<double> h_out);

struct GruTape {
  std::vector<double> x;             // T*in
  std::vector<double> h;             // (T+1)*n, h[0] = 0
  std::vector<double> r, z, hc, a;   // T*n
  void resize(int steps, int in, int n);
  std::span<double> xrow(int t, int in) { return {x.data() + static_cast<std::size_t>(t) * in, static_cast<std::size_t>(in)}; }
  std::span<double> hrow(int t, int n) { return {h.data() + static_cast<std::size_t>(t) * n, static_cast<std::size_t>(n)}; }
  std::span<const double> xrow(int t, int in) const { return {x.data() + static_cast<std::size_t>(t) * in, static_cast<std::size_t>(in)}; }
  std::span<const double> hrow(int t, int n) const { return {h.data() + static_cast<std::size_t>(t) * n, static_cast<std::size_t>(n)}; }
};

struct LstmTape {
  std::vector<double> x;                  // T*in
  std::vector<double> h, c;               // (T+1)*n
  std::vector<double> gi, gf, gc, go, tc; // T*n
  void resize(int steps, int in, int n);
  std::span<double> xrow(int t, int in) { return {x.data() + static_cast<std::size_t>(t) * in, static_cast<std::size_t>(in)}; }
  std::span<double> hrow(int t, int n) { return {h.data() + static_cast<std::size_t>(t) * n, static_cast<std::size_t>(n)}; }
  std::span<double> crow(int t, int n) { return {c.data() + static_cast<std::size_t>(t) * n, static_cast<std::size_t>(n)}; }
  std::span<const double> xrow(int t, int in) const { return {x.data() + static_cast<std::size_t>(t) * in, static_cast<std::size_t>(in)}; }
  std::span<const double> hrow(int t, int n) const { return {h.data() + static_cast<std::size_t>(t) * n, static_cast<std::size_t>(n)}; }
  std::span<const double> crow(int t, int n) const { return {c.data() + static_cast<std::size_t>(t) * n, static_cast<std::size_t>(n)}; }
};

// tape.x must already hold the inputs; fills the remaining tape fields.
void gru_seq_forward(const GruViews& v, int steps, GruTape& tape);
void lstm_seq_forward(const LstmViews& v, int steps, LstmTape& tape);

// dh_out: per-step gradients w.r.t. h[t+1], length T*n (required; fold the
// final-state gradient into its last row). dhc_ext: optional per-step
// gradients w.r.t. the candidate hc[t]. dx: optional T*in output, overwritten.
void gru_seq_backward(const GruViews& v, const GruGrads& g, int steps,
                      const GruTape& tape, std::span<const double> dh_out,
                      std::span<const double> dhc_ext, std::span<double> dx);

void lstm_seq_backward(const LstmViews& v, const LstmGrads& g, int steps,
                       const LstmTape& tape, std::span<const double> dh_out,
                       std::span<double> dx);

}  // namespace mgrn::detail
