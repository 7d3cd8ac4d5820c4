#include "seq_kernels.hpp"

#include <cmath>

namespace mgrn::detail {

using kernels::add_acc;
using kernels::affine;
using kernels::matvec_acc;
using kernels::matvec_t_acc;
using kernels::outer_acc;
using kernels::sigmoid_inplace;
using kernels::tanh_inplace;

GruViews next_gru_block(Cursor<const double>& c, int in, int n) {
  GruViews v;
  v.w_r = c.next(); v.w_z = c.next(); v.w_h = c.next();
  v.u_r = c.next(); v.u_z = c.next(); v.u_h = c.next();
  v.b_r = c.next(); v.b_z = c.next(); v.b_h = c.next();
  v.in = in; v.n = n;
  return v;
}

GruGrads next_gru_block(Cursor<double>& c) {
  GruGrads g;
  g.w_r = c.next(); g.w_z = c.next(); g.w_h = c.next();
  g.u_r = c.next(); g.u_z = c.next(); g.u_h = c.next();
  g.b_r = c.next(); g.b_z = c.next(); g.b_h = c.next();
  return g;
}

LstmViews next_lstm_block(Cursor<const double>& c, int in, int n) {
  LstmViews v;
  for (auto& w : v.w) w = c.next();
  for (auto& u : v.u) u = c.next();
  for (auto& b : v.b) b = c.next();
  v.in = in; v.n = n;
  return v;
}

LstmGrads next_lstm_block(Cursor<double>& c) {
  LstmGrads g;
  for (auto& w : g.w) w = c.next();
  for (auto& u : g.u) u = c.next();
  for (auto& b : g.b) b = c.next();
  return g;
}

void gru_cell_forward(const GruViews& v, std::span<const double> x,
                      std::span<const double> h_prev, std::span<double> r,
                      std::span<double> z, std::span<double> hc,
                      std::span<double> a, std::span<double> h_out) {
  affine(r, v.w_r, x, v.b_r);
  matvec_acc(r, v.u_r, h_prev);
  sigmoid_inplace(r);

  affine(z, v.w_z, x, v.b_z);
  matvec_acc(z, v.u_z, h_prev);
  sigmoid_inplace(z);

  for (double& ai : a) ai = 0.0;
  matvec_acc(a, v.u_h, h_prev);

  affine(hc, v.w_h, x, v.b_h);
  for (int i = 0; i < v.n; ++i) hc[i] += r[i] * a[i];
  tanh_inplace(hc);

  for (int i = 0; i < v.n; ++i)
    h_out[i] = (1.0 - z[i]) * h_prev[i] + z[i] * hc[i];
}

void lstm_cell_forward(const LstmViews& v, std::span<const double> x,
                       std::span<const double> h_prev,
                       std::span<const double> c_prev, std::span<double> gi,
                       std::span<double> gf, std::span<double> gc,
                       std::span<double> go, std::span<double> c_out,
                       std::span<double> tc, std::span<double> h_out) {
  std::span<double> gates[4] = {gi, gf, gc, go};
  for (int g = 0; g < 4; ++g) {
    affine(gates[g], v.w[g], x, v.b[g]);
    matvec_acc(gates[g], v.u[g], h_prev);
  }
  sigmoid_inplace(gi);
  sigmoid_inplace(gf);
  tanh_inplace(gc);
  sigmoid_inplace(go);
  for (int i = 0; i < v.n; ++i) {
    c_out[i] = gf[i] * c_prev[i] + gi[i] * gc[i];
    tc[i] = std::tanh(c_out[i]);
    h_out[i] = go[i] * tc[i];
  }
}

namespace {
// Size without zero-filling retained storage; every cell below overwrites its
// rows, so only the initial-state row needs explicit clearing.
void ensure(std::vector<double>& v, std::size_t n) {
  if (v.size() != n) v.resize(n);
}
}  // namespace

void GruTape::resize(int steps, int in, int n) {
  ensure(x, static_cast<std::size_t>(steps) * in);
  ensure(h, static_cast<std::size_t>(steps + 1) * n);
  const std::size_t tn = static_cast<std::size_t>(steps) * n;
  ensure(r, tn);
  ensure(z, tn);
  ensure(hc, tn);
  ensure(a, tn);
  for (int i = 0; i < n; ++i) h[i] = 0.0;  // zero initial state
}

void LstmTape::resize(int steps, int in, int n) {
  ensure(x, static_cast<std::size_t>(steps) * in);
  ensure(h, static_cast<std::size_t>(steps + 1) * n);
  ensure(c, static_cast<std::size_t>(steps + 1) * n);
  const std::size_t tn = static_cast<std::size_t>(steps) * n;
  ensure(gi, tn);
  ensure(gf, tn);
  ensure(gc, tn);
  ensure(go, tn);
  ensure(tc, tn);
  for (int i = 0; i < n; ++i) {
    h[i] = 0.0;
    c[i] = 0.0;
  }
}

namespace {
std::span<double> rowof(std::vector<double>& v, int t, int n) {
  return {v.data() + static_cast<std::size_t>(t) * n, static_cast<std::size_t>(n)};
}
std::span<const double> rowof(const std::vector<double>& v, int t, int n) {
  return {v.data() + static_cast<std::size_t>(t) * n, static_cast<std::size_t>(n)};
}
std::span<const double> rowof(std::span<const double> v, int t, int n) {
  return v.subspan(static_cast<std::size_t>(t) * n, static_cast<std::size_t>(n));
}
std::span<double> rowof(std::span<double> v, int t, int n) {
  return v.subspan(static_cast<std::size_t>(t) * n, static_cast<std::size_t>(n));
}
}  // namespace

void gru_seq_forward(const GruViews& v, int steps, GruTape& tape) {
  for (int t = 0; t < steps; ++t) {
    gru_cell_forward(v, tape.xrow(t, v.in), tape.hrow(t, v.n),
                     rowof(tape.r, t, v.n), rowof(tape.z, t, v.n),
                     rowof(tape.hc, t, v.n), rowof(tape.a, t, v.n),
                     tape.hrow(t + 1, v.n));
  }
}

void lstm_seq_forward(const LstmViews& v, int steps, LstmTape& tape) {
  for (int t = 0; t < steps; ++t) {
    lstm_cell_forward(v, tape.xrow(t, v.in), tape.hrow(t, v.n),
                      tape.crow(t, v.n), rowof(tape.gi, t, v.n),
                      rowof(tape.gf, t, v.n), rowof(tape.gc, t, v.n),
                      rowof(tape.go, t, v.n), tape.crow(t + 1, v.n),
                      rowof(tape.tc, t, v.n), tape.hrow(t + 1, v.n));
  }
}

void gru_seq_backward(const GruViews& v, const GruGrads& g, int steps,
                      const GruTape& tape, std::span<const double> dh_out,
                      std::span<const double> dhc_ext, std::span<double> dx) {
  const int n = v.n;
  // calls never nest within a thread, so one scratch block suffices
  static thread_local std::vector<double> scratch;
  ensure(scratch, static_cast<std::size_t>(8) * n);
  double* base = scratch.data();
  std::span<double> dh{base, static_cast<std::size_t>(n)},
      dh_prev{base + n, static_cast<std::size_t>(n)};
  const std::span<double> dz{base + 2 * n, static_cast<std::size_t>(n)},
      dhc{base + 3 * n, static_cast<std::size_t>(n)},
      ds_c{base + 4 * n, static_cast<std::size_t>(n)},
      da{base + 5 * n, static_cast<std::size_t>(n)},
      ds_r{base + 6 * n, static_cast<std::size_t>(n)},
      ds_z{base + 7 * n, static_cast<std::size_t>(n)};
  for (int i = 0; i < n; ++i) dh[i] = 0.0;
  for (int t = steps - 1; t >= 0; --t) {
    const auto x = tape.xrow(t, v.in);
    const auto h_prev = tape.hrow(t, n);
    const auto r = rowof(tape.r, t, n);
    const auto z = rowof(tape.z, t, n);
    const auto hc = rowof(tape.hc, t, n);
    const auto a = rowof(tape.a, t, n);
    const auto dho = rowof(dh_out, t, n);

    for (int i = 0; i < n; ++i) {
      dh[i] += dho[i];
      dz[i] = dh[i] * (hc[i] - h_prev[i]);
      dhc[i] = dh[i] * z[i];
      dh_prev[i] = dh[i] * (1.0 - z[i]);
    }
    if (!dhc_ext.empty()) {
      const auto ext = rowof(dhc_ext, t, n);
      for (int i = 0; i < n; ++i) dhc[i] += ext[i];
    }

    // candidate: hc = tanh(W_h x + r . a + b_h), a = U_h h_prev
    for (int i = 0; i < n; ++i) ds_c[i] = dhc[i] * (1.0 - hc[i] * hc[i]);
    outer_acc(g.w_h, ds_c, x);
    add_acc(g.b_h, ds_c);
    for (int i = 0; i < n; ++i) {
      ds_r[i] = ds_c[i] * a[i];  // dr before the sigmoid derivative
      da[i] = ds_c[i] * r[i];
    }
    matvec_t_acc(dh_prev, v.u_h, da);
    outer_acc(g.u_h, da, h_prev);

    // reset gate
    for (int i = 0; i < n; ++i) ds_r[i] *= r[i] * (1.0 - r[i]);
    outer_acc(g.w_r, ds_r, x);
    outer_acc(g.u_r, ds_r, h_prev);
    add_acc(g.b_r, ds_r);
    matvec_t_acc(dh_prev, v.u_r, ds_r);

    // update gate
    for (int i = 0; i < n; ++i) ds_z[i] = dz[i] * z[i] * (1.0 - z[i]);
    outer_acc(g.w_z, ds_z, x);
    outer_acc(g.u_z, ds_z, h_prev);
    add_acc(g.b_z, ds_z);
    matvec_t_acc(dh_prev, v.u_z, ds_z);

    if (!dx.empty()) {
      auto dxt = rowof(dx, t, v.in);
      for (double& d : dxt) d = 0.0;
      matvec_t_acc(dxt, v.w_h, ds_c);
      matvec_t_acc(dxt, v.w_r, ds_r);
      matvec_t_acc(dxt, v.w_z, ds_z);
    }

    std::swap(dh, dh_prev);
  }
}

void lstm_seq_backward(const LstmViews& v, const LstmGrads& g, int steps,
                       const LstmTape& tape, std::span<const double> dh_out,
                       std::span<double> dx) {
  const int n = v.n;
  static thread_local std::vector<double> scratch;
  ensure(scratch, static_cast<std::size_t>(4) * n);
  double* base = scratch.data();
  std::span<double> dh{base, static_cast<std::size_t>(n)},
      dh_prev{base + n, static_cast<std::size_t>(n)};
  const std::span<double> dc{base + 2 * n, static_cast<std::size_t>(n)},
      ds{base + 3 * n, static_cast<std::size_t>(n)};
  for (int i = 0; i < n; ++i) {
    dh[i] = 0.0;
    dc[i] = 0.0;
  }
  for (int t = steps - 1; t >= 0; --t) {
    const auto x = tape.xrow(t, v.in);
    const auto h_prev = tape.hrow(t, n);
    const auto c_prev = tape.crow(t, n);
    const auto gi = rowof(tape.gi, t, n);
    const auto gf = rowof(tape.gf, t, n);
    const auto gc = rowof(tape.gc, t, n);
    const auto go = rowof(tape.go, t, n);
    const auto tc = rowof(tape.tc, t, n);
    const auto dho = rowof(dh_out, t, n);

    for (int i = 0; i < n; ++i) {
      dh[i] += dho[i];
      dc[i] += dh[i] * go[i] * (1.0 - tc[i] * tc[i]);
    }
    for (double& d : dh_prev) d = 0.0;
    std::span<double> dxt;
    if (!dx.empty()) {
      dxt = rowof(dx, t, v.in);
      for (double& d : dxt) d = 0.0;
    }

    // gate order i, f, c, o; pre-activation gradients one gate at a time
    for (int gate = 0; gate < 4; ++gate) {
      for (int i = 0; i < n; ++i) {
        double dgate;
        switch (gate) {
          case 0: dgate = dc[i] * gc[i]; ds[i] = dgate * gi[i] * (1.0 - gi[i]); break;
          case 1: dgate = dc[i] * c_prev[i]; ds[i] = dgate * gf[i] * (1.0 - gf[i]); break;
          case 2: dgate = dc[i] * gi[i]; ds[i] = dgate * (1.0 - gc[i] * gc[i]); break;
          default: dgate = dh[i] * tc[i]; ds[i] = dgate * go[i] * (1.0 - go[i]); break;
        }
      }
      outer_acc(g.w[gate], ds, x);
      outer_acc(g.u[gate], ds, h_prev);
      add_acc(g.b[gate], ds);
      matvec_t_acc(dh_prev, v.u[gate], ds);
      if (!dxt.empty()) matvec_t_acc(dxt, v.w[gate], ds);
    }

    for (int i = 0; i < n; ++i) dc[i] *= gf[i];
    std::swap(dh, dh_prev);
  }
}

}  // namespace mgrn::detail
