// Whole-window forward passes and backpropagation through time on the flat
// parameter layout.

#include <cmath>

#include "mgrn/cells.hpp"
#include "mgrn/errors.hpp"
#include "seq_kernels.hpp"

namespace mgrn {

namespace {

using detail::Cursor;
using detail::GruTape;
using detail::GruViews;
using detail::LstmTape;
using detail::LstmViews;
using kernels::add_acc;
using kernels::affine;
using kernels::matvec_acc;
using kernels::matvec_t_acc;
using kernels::outer_acc;
using kernels::sigmoid_inplace;
using kernels::tanh_inplace;

std::span<double> rowof(std::vector<double>& v, int t, int n) {
  return {v.data() + static_cast<std::size_t>(t) * n, static_cast<std::size_t>(n)};
}
std::span<const double> rowof(const std::vector<double>& v, int t, int n) {
  return {v.data() + static_cast<std::size_t>(t) * n, static_cast<std::size_t>(n)};
}

void gather_rows(const WindowView& window, std::span<double> dst) {
  for (int t = 0; t < window.steps; ++t) {
    const auto src = window.row(t);
    for (int j = 0; j < window.width; ++j)
      dst[static_cast<std::size_t>(t) * window.width + j] = src[j];
  }
}

void gather_slice(const WindowView& window, const std::vector<int>& idx,
                  std::span<double> dst, bool reversed = false) {
  const int mk = static_cast<int>(idx.size());
  for (int t = 0; t < window.steps; ++t) {
    const auto src = window.row(reversed ? window.steps - 1 - t : t);
    for (int j = 0; j < mk; ++j)
      dst[static_cast<std::size_t>(t) * mk + j] = src[idx[j]];
  }
}

struct HeadViews {
  std::span<const double> w;
  std::span<const double> b;
};

double apply_head(const HeadViews& head, std::span<const double> h) {
  double acc = head.b[0];
  for (std::size_t i = 0; i < h.size(); ++i) acc += head.w[i] * h[i];
  return acc;
}

// --- plain GRU / LSTM -------------------------------------------------------

struct SingleRun {
  GruTape gru;
  LstmTape lstm;
  std::vector<double> dh_out;
};
thread_local SingleRun tls_single;

double gru_forward_impl(const ModelSpec& spec, const ParamLayout& layout,
                        std::span<const double> params,
                        const WindowView& window, GruTape& tape,
                        HeadViews& head, GruViews& views) {
  Cursor<const double> c(layout, params.data());
  views = next_gru_block(c, spec.input_dim, spec.state_dim);
  head.w = c.next();
  head.b = c.next();
  tape.resize(window.steps, spec.input_dim, spec.state_dim);
  gather_rows(window, tape.x);
  detail::gru_seq_forward(views, window.steps, tape);
  return apply_head(head, tape.hrow(window.steps, spec.state_dim));
}

double lstm_forward_impl(const ModelSpec& spec, const ParamLayout& layout,
                         std::span<const double> params,
                         const WindowView& window, LstmTape& tape,
                         HeadViews& head, LstmViews& views) {
  Cursor<const double> c(layout, params.data());
  views = next_lstm_block(c, spec.input_dim, spec.state_dim);
  head.w = c.next();
  head.b = c.next();
  tape.resize(window.steps, spec.input_dim, spec.state_dim);
  gather_rows(window, tape.x);
  detail::lstm_seq_forward(views, window.steps, tape);
  return apply_head(head, tape.hrow(window.steps, spec.state_dim));
}

// --- mGRN -------------------------------------------------------------------

struct MgrnRun {
  std::vector<GruTape> marginal;
  std::vector<double> joint_h;          // (T+1)*N
  std::vector<double> joint_z, joint_hc;  // T*N
  std::vector<double> dhc_ext;          // K*T*nm
  std::vector<double> zero_dh;          // T*nm
  std::vector<double> dh, dh_prev, dz, dhc, ds_c, ds_z;  // N
};
thread_local MgrnRun tls_mgrn;

struct MgrnViews {
  std::vector<GruViews> marginal;
  std::span<const double> w_z, u_z, b_c, b_z;
  std::vector<std::span<const double>> u_c;
  HeadViews head;
};

MgrnViews mgrn_views(const ModelSpec& spec, const ParamLayout& layout,
                     std::span<const double> params) {
  Cursor<const double> c(layout, params.data());
  MgrnViews v;
  const int nm = spec.dims.marginal_dim;
  for (int k = 0; k < spec.grouping.group_count(); ++k)
    v.marginal.push_back(next_gru_block(c, spec.grouping.group_size(k), nm));
  v.w_z = c.next();
  v.u_z = c.next();
  for (int k = 0; k < spec.grouping.group_count(); ++k) v.u_c.push_back(c.next());
  v.b_c = c.next();
  v.b_z = c.next();
  v.head.w = c.next();
  v.head.b = c.next();
  return v;
}

double mgrn_forward_impl(const ModelSpec& spec, const MgrnViews& v,
                         const WindowView& window, MgrnRun& run) {
  const int steps = window.steps;
  const int n = spec.state_dim;
  const int nm = spec.dims.marginal_dim;
  const int k_groups = spec.grouping.group_count();

  run.marginal.resize(k_groups);
  for (int k = 0; k < k_groups; ++k) {
    run.marginal[k].resize(steps, spec.grouping.group_size(k), nm);
    gather_slice(window, spec.grouping.group(k), run.marginal[k].x);
    detail::gru_seq_forward(v.marginal[k], steps, run.marginal[k]);
  }

  run.joint_h.assign(static_cast<std::size_t>(steps + 1) * n, 0.0);
  run.joint_z.assign(static_cast<std::size_t>(steps) * n, 0.0);
  run.joint_hc.assign(static_cast<std::size_t>(steps) * n, 0.0);
  for (int t = 0; t < steps; ++t) {
    auto hc = rowof(run.joint_hc, t, n);
    for (int i = 0; i < n; ++i) hc[i] = v.b_c[i];
    for (int k = 0; k < k_groups; ++k)
      matvec_acc(hc, v.u_c[k], rowof(run.marginal[k].hc, t, nm));
    tanh_inplace(hc);

    auto z = rowof(run.joint_z, t, n);
    const auto h_prev = rowof(run.joint_h, t, n);
    affine(z, v.w_z, window.row(t), v.b_z);
    matvec_acc(z, v.u_z, h_prev);
    sigmoid_inplace(z);

    auto h = rowof(run.joint_h, t + 1, n);
    for (int i = 0; i < n; ++i)
      h[i] = (1.0 - z[i]) * h_prev[i] + z[i] * hc[i];
  }
  return apply_head(v.head, rowof(run.joint_h, steps, n));
}

// --- channel-wise LSTM ------------------------------------------------------

struct CwRun {
  std::vector<LstmTape> fwd, bwd;
  LstmTape joint;
  std::vector<double> du;        // T*joint_in
  std::vector<double> dh_joint;  // T*N
  std::vector<double> dh_block;  // T*nm, reused per marginal block
};
thread_local CwRun tls_cw;

struct CwViews {
  std::vector<LstmViews> fwd, bwd;
  LstmViews joint;
  HeadViews head;
};

CwViews cw_views(const ModelSpec& spec, const ParamLayout& layout,
                 std::span<const double> params) {
  Cursor<const double> c(layout, params.data());
  CwViews v;
  const int nm = spec.dims.marginal_dim;
  for (int k = 0; k < spec.grouping.group_count(); ++k) {
    v.fwd.push_back(next_lstm_block(c, spec.grouping.group_size(k), nm));
    v.bwd.push_back(next_lstm_block(c, spec.grouping.group_size(k), nm));
  }
  v.joint = next_lstm_block(c, 2 * spec.grouping.group_count() * nm, spec.state_dim);
  v.head.w = c.next();
  v.head.b = c.next();
  return v;
}

double cw_forward_impl(const ModelSpec& spec, const CwViews& v,
                       const WindowView& window, CwRun& run) {
  const int steps = window.steps;
  const int n = spec.state_dim;
  const int nm = spec.dims.marginal_dim;
  const int k_groups = spec.grouping.group_count();
  const int joint_in = 2 * k_groups * nm;

  run.fwd.resize(k_groups);
  run.bwd.resize(k_groups);
  for (int k = 0; k < k_groups; ++k) {
    const int mk = spec.grouping.group_size(k);
    run.fwd[k].resize(steps, mk, nm);
    run.bwd[k].resize(steps, mk, nm);
    gather_slice(window, spec.grouping.group(k), run.fwd[k].x);
    gather_slice(window, spec.grouping.group(k), run.bwd[k].x, /*reversed=*/true);
    detail::lstm_seq_forward(v.fwd[k], steps, run.fwd[k]);
    detail::lstm_seq_forward(v.bwd[k], steps, run.bwd[k]);
  }

  run.joint.resize(steps, joint_in, n);
  for (int t = 0; t < steps; ++t) {
    auto row = run.joint.xrow(t, joint_in);
    for (int k = 0; k < k_groups; ++k) {
      const auto hf = run.fwd[k].hrow(t + 1, nm);
      for (int i = 0; i < nm; ++i) row[k * nm + i] = hf[i];
    }
    // backward state aligned to real time t: it has consumed x_T..x_t
    for (int k = 0; k < k_groups; ++k) {
      const auto hb = run.bwd[k].hrow(steps - t, nm);
      for (int i = 0; i < nm; ++i) row[(k_groups + k) * nm + i] = hb[i];
    }
  }
  detail::lstm_seq_forward(v.joint, steps, run.joint);
  return apply_head(v.head, run.joint.hrow(steps, n));
}

void check_window(const ModelSpec& spec, const WindowView& window) {
  detail::require(window.steps >= 1, "forward_window: empty window");
  if (window.width != spec.input_dim)
    detail::length_mismatch("forward_window: window width vs input_dim",
                            window.width, spec.input_dim);
}

}  // namespace

WindowView window_view(const Mat& window) {
  return {window.data(), static_cast<int>(window.rows()),
          static_cast<int>(window.cols()), window.cols()};
}

double forward_window(const ModelSpec& spec, std::span<const double> params,
                      const WindowView& window) {
  return forward_window(spec, ParamLayout(spec), params, window);
}

double forward_window(const ModelSpec& spec, const ParamLayout& layout,
                      std::span<const double> params, const WindowView& window) {
  spec.validate();
  check_window(spec, window);
  if (params.size() != layout.total_size())
    detail::length_mismatch("forward_window: params vs layout", params.size(),
                            layout.total_size());
  switch (spec.arch) {
    case Arch::Gru: {
      HeadViews head;
      GruViews views;
      return gru_forward_impl(spec, layout, params, window, tls_single.gru,
                              head, views);
    }
    case Arch::Lstm: {
      HeadViews head;
      LstmViews views;
      return lstm_forward_impl(spec, layout, params, window, tls_single.lstm,
                               head, views);
    }
    case Arch::Mgrn:
      return mgrn_forward_impl(spec, mgrn_views(spec, layout, params), window,
                               tls_mgrn);
    case Arch::CwLstm:
      return cw_forward_impl(spec, cw_views(spec, layout, params), window,
                             tls_cw);
  }
  return 0.0;
}

double backward_window(const ModelSpec& spec, std::span<const double> params,
                       const WindowView& window, double target,
                       std::span<double> grad_acc) {
  return backward_window(spec, ParamLayout(spec), params, window, target,
                         grad_acc);
}

double backward_window(const ModelSpec& spec, const ParamLayout& layout,
                       std::span<const double> params, const WindowView& window,
                       double target, std::span<double> grad_acc) {
  spec.validate();
  check_window(spec, window);
  if (params.size() != layout.total_size())
    detail::length_mismatch("backward_window: params vs layout", params.size(),
                            layout.total_size());
  if (grad_acc.size() != layout.total_size())
    detail::length_mismatch("backward_window: grad vs layout", grad_acc.size(),
                            layout.total_size());

  const int steps = window.steps;
  const int n = spec.state_dim;

  switch (spec.arch) {
    case Arch::Gru: {
      SingleRun& run = tls_single;
      HeadViews head;
      GruViews views;
      const double pred = gru_forward_impl(spec, layout, params, window, run.gru, head, views);
      const double dpred = 2.0 * (pred - target);

      Cursor<double> gc(layout, grad_acc.data());
      auto grads = next_gru_block(gc);
      auto g_head_w = gc.next();
      auto g_head_b = gc.next();
      const auto h_final = run.gru.hrow(steps, n);
      for (int i = 0; i < n; ++i) g_head_w[i] += dpred * h_final[i];
      g_head_b[0] += dpred;

      run.dh_out.assign(static_cast<std::size_t>(steps) * n, 0.0);
      auto last = rowof(run.dh_out, steps - 1, n);
      for (int i = 0; i < n; ++i) last[i] = dpred * head.w[i];
      detail::gru_seq_backward(views, grads, steps, run.gru, run.dh_out, {}, {});
      return pred;
    }
    case Arch::Lstm: {
      SingleRun& run = tls_single;
      HeadViews head;
      LstmViews views;
      const double pred = lstm_forward_impl(spec, layout, params, window, run.lstm, head, views);
      const double dpred = 2.0 * (pred - target);

      Cursor<double> gc(layout, grad_acc.data());
      auto grads = next_lstm_block(gc);
      auto g_head_w = gc.next();
      auto g_head_b = gc.next();
      const auto h_final = run.lstm.hrow(steps, n);
      for (int i = 0; i < n; ++i) g_head_w[i] += dpred * h_final[i];
      g_head_b[0] += dpred;

      run.dh_out.assign(static_cast<std::size_t>(steps) * n, 0.0);
      auto last = rowof(run.dh_out, steps - 1, n);
      for (int i = 0; i < n; ++i) last[i] = dpred * head.w[i];
      detail::lstm_seq_backward(views, grads, steps, run.lstm, run.dh_out, {});
      return pred;
    }
    case Arch::Mgrn: {
      MgrnRun& run = tls_mgrn;
      const MgrnViews v = mgrn_views(spec, layout, params);
      const double pred = mgrn_forward_impl(spec, v, window, run);
      const double dpred = 2.0 * (pred - target);

      const int nm = spec.dims.marginal_dim;
      const int k_groups = spec.grouping.group_count();

      Cursor<double> gc(layout, grad_acc.data());
      std::vector<detail::GruGrads> g_marginal;
      for (int k = 0; k < k_groups; ++k) g_marginal.push_back(next_gru_block(gc));
      auto g_w_z = gc.next();
      auto g_u_z = gc.next();
      std::vector<std::span<double>> g_u_c;
      for (int k = 0; k < k_groups; ++k) g_u_c.push_back(gc.next());
      auto g_b_c = gc.next();
      auto g_b_z = gc.next();
      auto g_head_w = gc.next();
      auto g_head_b = gc.next();

      const auto h_final = rowof(run.joint_h, steps, n);
      for (int i = 0; i < n; ++i) g_head_w[i] += dpred * h_final[i];
      g_head_b[0] += dpred;

      run.dh.assign(n, 0.0);
      run.dh_prev.assign(n, 0.0);
      run.dz.assign(n, 0.0);
      run.dhc.assign(n, 0.0);
      run.ds_c.assign(n, 0.0);
      run.ds_z.assign(n, 0.0);
      run.dhc_ext.assign(static_cast<std::size_t>(k_groups) * steps * nm, 0.0);
      for (int i = 0; i < n; ++i) run.dh[i] = dpred * v.head.w[i];

      for (int t = steps - 1; t >= 0; --t) {
        const auto h_prev = rowof(run.joint_h, t, n);
        const auto z = rowof(run.joint_z, t, n);
        const auto hc = rowof(run.joint_hc, t, n);
        for (int i = 0; i < n; ++i) {
          run.dz[i] = run.dh[i] * (hc[i] - h_prev[i]);
          run.dhc[i] = run.dh[i] * z[i];
          run.dh_prev[i] = run.dh[i] * (1.0 - z[i]);
          run.ds_c[i] = run.dhc[i] * (1.0 - hc[i] * hc[i]);
        }
        add_acc(g_b_c, run.ds_c);
        for (int k = 0; k < k_groups; ++k) {
          const auto hck = rowof(run.marginal[k].hc, t, nm);
          outer_acc(g_u_c[k], run.ds_c, hck);
          auto ext = std::span<double>(
              run.dhc_ext.data() + (static_cast<std::size_t>(k) * steps + t) * nm,
              static_cast<std::size_t>(nm));
          matvec_t_acc(ext, v.u_c[k], run.ds_c);
        }
        for (int i = 0; i < n; ++i)
          run.ds_z[i] = run.dz[i] * z[i] * (1.0 - z[i]);
        outer_acc(g_w_z, run.ds_z, window.row(t));
        outer_acc(g_u_z, run.ds_z, h_prev);
        add_acc(g_b_z, run.ds_z);
        matvec_t_acc(run.dh_prev, v.u_z, run.ds_z);
        std::swap(run.dh, run.dh_prev);
      }

      run.zero_dh.assign(static_cast<std::size_t>(steps) * nm, 0.0);
      for (int k = 0; k < k_groups; ++k) {
        const std::span<const double> ext(
            run.dhc_ext.data() + static_cast<std::size_t>(k) * steps * nm,
            static_cast<std::size_t>(steps) * nm);
        detail::gru_seq_backward(v.marginal[k], g_marginal[k], steps,
                                 run.marginal[k], run.zero_dh, ext, {});
      }
      return pred;
    }
    case Arch::CwLstm: {
      CwRun& run = tls_cw;
      const CwViews v = cw_views(spec, layout, params);
      const double pred = cw_forward_impl(spec, v, window, run);
      const double dpred = 2.0 * (pred - target);

      const int nm = spec.dims.marginal_dim;
      const int k_groups = spec.grouping.group_count();
      const int joint_in = 2 * k_groups * nm;

      Cursor<double> gc(layout, grad_acc.data());
      std::vector<detail::LstmGrads> g_fwd, g_bwd;
      for (int k = 0; k < k_groups; ++k) {
        g_fwd.push_back(next_lstm_block(gc));
        g_bwd.push_back(next_lstm_block(gc));
      }
      auto g_joint = next_lstm_block(gc);
      auto g_head_w = gc.next();
      auto g_head_b = gc.next();

      const auto h_final = run.joint.hrow(steps, n);
      for (int i = 0; i < n; ++i) g_head_w[i] += dpred * h_final[i];
      g_head_b[0] += dpred;

      run.dh_joint.assign(static_cast<std::size_t>(steps) * n, 0.0);
      auto last = rowof(run.dh_joint, steps - 1, n);
      for (int i = 0; i < n; ++i) last[i] = dpred * v.head.w[i];
      run.du.assign(static_cast<std::size_t>(steps) * joint_in, 0.0);
      detail::lstm_seq_backward(v.joint, g_joint, steps, run.joint,
                                run.dh_joint, run.du);

      for (int k = 0; k < k_groups; ++k) {
        run.dh_block.assign(static_cast<std::size_t>(steps) * nm, 0.0);
        for (int t = 0; t < steps; ++t) {
          const auto du_t = rowof(run.du, t, joint_in);
          auto dst = rowof(run.dh_block, t, nm);
          for (int i = 0; i < nm; ++i) dst[i] = du_t[k * nm + i];
        }
        detail::lstm_seq_backward(v.fwd[k], g_fwd[k], steps, run.fwd[k],
                                  run.dh_block, {});

        run.dh_block.assign(static_cast<std::size_t>(steps) * nm, 0.0);
        // joint input at time t holds the bwd state h[T-t]; that state is the
        // output of the bwd block's own step T-1-t
        for (int t = 0; t < steps; ++t) {
          const auto du_t = rowof(run.du, t, joint_in);
          auto dst = rowof(run.dh_block, steps - 1 - t, nm);
          for (int i = 0; i < nm; ++i) dst[i] = du_t[(k_groups + k) * nm + i];
        }
        detail::lstm_seq_backward(v.bwd[k], g_bwd[k], steps, run.bwd[k],
                                  run.dh_block, {});
      }
      return pred;
    }
  }
  return 0.0;
}

std::vector<double> window_gradient(const ModelSpec& spec,
                                    std::span<const double> params,
                                    const WindowView& window, double target) {
  std::vector<double> grad(ParamLayout(spec).total_size(), 0.0);
  backward_window(spec, params, window, target, grad);
  return grad;
}

}  // namespace mgrn
