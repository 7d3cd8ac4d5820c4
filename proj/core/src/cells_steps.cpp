// Value-typed single-step cells and flat-vector extractors.

#include <cmath>

#include "mgrn/cells.hpp"
#include "mgrn/errors.hpp"
#include "seq_kernels.hpp"

namespace mgrn {

namespace {

detail::GruViews views_of(const GruParams& p, std::size_t in, std::size_t n) {
  if (p.w_r.cols() != in) detail::shape_mismatch("gru_step: W_r*x", p.w_r.rows(), p.w_r.cols(), in);
  if (p.w_r.rows() != n) detail::shape_mismatch("gru_step: W_r vs h", p.w_r.rows(), p.w_r.cols(), n);
  for (const Mat* w : {&p.w_z, &p.w_h})
    if (w->rows() != n || w->cols() != in)
      detail::shape_mismatch("gru_step: W block", w->rows(), w->cols(), in);
  for (const Mat* u : {&p.u_r, &p.u_z, &p.u_h})
    if (u->rows() != n || u->cols() != n)
      detail::shape_mismatch("gru_step: U block", u->rows(), u->cols(), n);
  for (const Vec* b : {&p.b_r, &p.b_z, &p.b_h})
    if (b->size() != n) detail::length_mismatch("gru_step: bias", b->size(), n);
  detail::GruViews v;
  v.w_r = p.w_r.span(); v.w_z = p.w_z.span(); v.w_h = p.w_h.span();
  v.u_r = p.u_r.span(); v.u_z = p.u_z.span(); v.u_h = p.u_h.span();
  v.b_r = p.b_r.span(); v.b_z = p.b_z.span(); v.b_h = p.b_h.span();
  v.in = static_cast<int>(in);
  v.n = static_cast<int>(n);
  return v;
}

detail::LstmViews views_of(const LstmParams& p, std::size_t in, std::size_t n) {
  const Mat* ws[4] = {&p.w_i, &p.w_f, &p.w_c, &p.w_o};
  const Mat* us[4] = {&p.u_i, &p.u_f, &p.u_c, &p.u_o};
  const Vec* bs[4] = {&p.b_i, &p.b_f, &p.b_c, &p.b_o};
  detail::LstmViews v;
  for (int g = 0; g < 4; ++g) {
    if (ws[g]->rows() != n || ws[g]->cols() != in)
      detail::shape_mismatch("lstm_step: W block", ws[g]->rows(), ws[g]->cols(), in);
    if (us[g]->rows() != n || us[g]->cols() != n)
      detail::shape_mismatch("lstm_step: U block", us[g]->rows(), us[g]->cols(), n);
    if (bs[g]->size() != n) detail::length_mismatch("lstm_step: bias", bs[g]->size(), n);
    v.w[g] = ws[g]->span();
    v.u[g] = us[g]->span();
    v.b[g] = bs[g]->span();
  }
  v.in = static_cast<int>(in);
  v.n = static_cast<int>(n);
  return v;
}

void gather(std::span<const double> x, const std::vector<int>& idx,
            std::span<double> out) {
  for (std::size_t j = 0; j < idx.size(); ++j) out[j] = x[idx[j]];
}

}  // namespace

Vec gru_step(const GruParams& p, const Vec& x, const Vec& h_prev) {
  const auto v = views_of(p, x.size(), h_prev.size());
  const std::size_t n = h_prev.size();
  Vec r(n), z(n), hc(n), a(n), h(n);
  detail::gru_cell_forward(v, x.span(), h_prev.span(), r.span(), z.span(),
                           hc.span(), a.span(), h.span());
  return h;
}

LstmState lstm_step(const LstmParams& p, const Vec& x, const Vec& h_prev,
                    const Vec& c_prev) {
  if (c_prev.size() != h_prev.size())
    detail::length_mismatch("lstm_step: c vs h", c_prev.size(), h_prev.size());
  const auto v = views_of(p, x.size(), h_prev.size());
  const std::size_t n = h_prev.size();
  Vec gi(n), gf(n), gc(n), go(n), c(n), tc(n), h(n);
  detail::lstm_cell_forward(v, x.span(), h_prev.span(), c_prev.span(),
                            gi.span(), gf.span(), gc.span(), go.span(),
                            c.span(), tc.span(), h.span());
  return {std::move(h), std::move(c)};
}

MgrnStepResult mgrn_step(const MgrnParams& p, const GroupingScheme& grouping,
                         const Vec& x, const std::vector<Vec>& marginal_h_prev,
                         const Vec& joint_h_prev) {
  const int k_groups = grouping.group_count();
  if (static_cast<int>(x.size()) != grouping.input_dim())
    detail::length_mismatch("mgrn_step: x vs grouping", x.size(), grouping.input_dim());
  if (static_cast<int>(p.marginal.size()) != k_groups ||
      static_cast<int>(marginal_h_prev.size()) != k_groups)
    detail::length_mismatch("mgrn_step: marginal blocks vs groups",
                            p.marginal.size(), k_groups);
  const std::size_t n = joint_h_prev.size();
  if (p.joint_w_z.rows() != n || p.joint_w_z.cols() != x.size())
    detail::shape_mismatch("mgrn_step: joint W_z", p.joint_w_z.rows(),
                           p.joint_w_z.cols(), x.size());

  MgrnStepResult out;
  out.marginal_h.reserve(k_groups);
  out.marginal_candidates.reserve(k_groups);

  for (int k = 0; k < k_groups; ++k) {
    const std::size_t nm = marginal_h_prev[k].size();
    const auto v = views_of(p.marginal[k], grouping.group_size(k), nm);
    Vec slice(grouping.group_size(k));
    gather(x.span(), grouping.group(k), slice.span());
    Vec r(nm), z(nm), hc(nm), a(nm), h(nm);
    detail::gru_cell_forward(v, slice.span(), marginal_h_prev[k].span(),
                             r.span(), z.span(), hc.span(), a.span(), h.span());
    out.marginal_h.push_back(std::move(h));
    out.marginal_candidates.push_back(std::move(hc));
  }

  // joint candidate from the marginal candidates only
  Vec s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = p.joint_b_c[i];
  for (int k = 0; k < k_groups; ++k) {
    if (p.joint_u_c[k].rows() != n || p.joint_u_c[k].cols() != out.marginal_candidates[k].size())
      detail::shape_mismatch("mgrn_step: U_c block", p.joint_u_c[k].rows(),
                             p.joint_u_c[k].cols(), out.marginal_candidates[k].size());
    kernels::matvec_acc(s.span(), p.joint_u_c[k].span(),
                        out.marginal_candidates[k].span());
  }
  kernels::tanh_inplace(s.span());

  Vec z(n);
  kernels::affine(z.span(), p.joint_w_z.span(), x.span(), p.joint_b_z.span());
  kernels::matvec_acc(z.span(), p.joint_u_z.span(), joint_h_prev.span());
  kernels::sigmoid_inplace(z.span());

  out.joint_h = Vec(n);
  for (std::size_t i = 0; i < n; ++i)
    out.joint_h[i] = (1.0 - z[i]) * joint_h_prev[i] + z[i] * s[i];
  return out;
}

Vec cwlstm_forward(const CwLstmParams& p, const GroupingScheme& grouping,
                   const Mat& window) {
  const int k_groups = grouping.group_count();
  const int steps = static_cast<int>(window.rows());
  detail::require(steps >= 1, "cwlstm_forward: window needs at least one step");
  if (static_cast<int>(window.cols()) != grouping.input_dim())
    detail::shape_mismatch("cwlstm_forward: window vs grouping", window.rows(),
                           window.cols(), grouping.input_dim());
  if (static_cast<int>(p.forward_blocks.size()) != k_groups ||
      static_cast<int>(p.backward_blocks.size()) != k_groups)
    detail::length_mismatch("cwlstm_forward: blocks vs groups",
                            p.forward_blocks.size(), k_groups);

  const int nm = static_cast<int>(p.forward_blocks[0].b_i.size());
  const int n = static_cast<int>(p.joint.b_i.size());

  std::vector<detail::LstmTape> fwd(k_groups), bwd(k_groups);
  for (int k = 0; k < k_groups; ++k) {
    const int mk = grouping.group_size(k);
    fwd[k].resize(steps, mk, nm);
    bwd[k].resize(steps, mk, nm);
    for (int t = 0; t < steps; ++t) {
      for (int j = 0; j < mk; ++j) {
        fwd[k].xrow(t, mk)[j] = window(t, grouping.group(k)[j]);
        bwd[k].xrow(t, mk)[j] = window(steps - 1 - t, grouping.group(k)[j]);
      }
    }
    detail::lstm_seq_forward(views_of(p.forward_blocks[k], mk, nm), steps, fwd[k]);
    detail::lstm_seq_forward(views_of(p.backward_blocks[k], mk, nm), steps, bwd[k]);
  }

  const int joint_in = 2 * k_groups * nm;
  detail::LstmTape joint;
  joint.resize(steps, joint_in, n);
  for (int t = 0; t < steps; ++t) {
    auto row = joint.xrow(t, joint_in);
    for (int k = 0; k < k_groups; ++k)
      for (int i = 0; i < nm; ++i) row[k * nm + i] = fwd[k].hrow(t + 1, nm)[i];
    for (int k = 0; k < k_groups; ++k)
      for (int i = 0; i < nm; ++i)
        row[(k_groups + k) * nm + i] = bwd[k].hrow(steps - t, nm)[i];
  }
  detail::lstm_seq_forward(views_of(p.joint, joint_in, n), steps, joint);

  Vec out(n);
  const auto h_final = joint.hrow(steps, n);
  for (int i = 0; i < n; ++i) out[i] = h_final[i];
  return out;
}

namespace {

Mat tensor_to_mat(std::span<const double> flat, const TensorInfo& t) {
  Mat m(t.rows, t.cols);
  for (std::size_t i = 0; i < t.size(); ++i) m.data()[i] = flat[t.offset + i];
  return m;
}

Vec tensor_to_vec(std::span<const double> flat, const TensorInfo& t) {
  Vec v(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) v[i] = flat[t.offset + i];
  return v;
}

class StructCursor {
 public:
  StructCursor(const ParamLayout& layout, std::span<const double> flat)
      : layout_(&layout), flat_(flat) {}
  Mat mat() { return tensor_to_mat(flat_, layout_->tensors()[i_++]); }
  Vec vec() { return tensor_to_vec(flat_, layout_->tensors()[i_++]); }
  GruParams gru_block() {
    GruParams p;
    p.w_r = mat(); p.w_z = mat(); p.w_h = mat();
    p.u_r = mat(); p.u_z = mat(); p.u_h = mat();
    p.b_r = vec(); p.b_z = vec(); p.b_h = vec();
    return p;
  }
  LstmParams lstm_block() {
    LstmParams p;
    p.w_i = mat(); p.w_f = mat(); p.w_c = mat(); p.w_o = mat();
    p.u_i = mat(); p.u_f = mat(); p.u_c = mat(); p.u_o = mat();
    p.b_i = vec(); p.b_f = vec(); p.b_c = vec(); p.b_o = vec();
    return p;
  }

 private:
  const ParamLayout* layout_;
  std::span<const double> flat_;
  std::size_t i_ = 0;
};

void check_flat_size(std::span<const double> params, const ParamLayout& layout) {
  if (params.size() != layout.total_size())
    detail::length_mismatch("params vs layout", params.size(), layout.total_size());
}

}  // namespace

GruParams gru_params_from_flat(const ModelSpec& spec, std::span<const double> params) {
  detail::require(spec.arch == Arch::Gru, "gru_params_from_flat: wrong arch");
  const ParamLayout layout(spec);
  check_flat_size(params, layout);
  StructCursor c(layout, params);
  return c.gru_block();
}

LstmParams lstm_params_from_flat(const ModelSpec& spec, std::span<const double> params) {
  detail::require(spec.arch == Arch::Lstm, "lstm_params_from_flat: wrong arch");
  const ParamLayout layout(spec);
  check_flat_size(params, layout);
  StructCursor c(layout, params);
  return c.lstm_block();
}

MgrnParams mgrn_params_from_flat(const ModelSpec& spec, std::span<const double> params) {
  detail::require(spec.arch == Arch::Mgrn, "mgrn_params_from_flat: wrong arch");
  const ParamLayout layout(spec);
  check_flat_size(params, layout);
  StructCursor c(layout, params);
  MgrnParams p;
  for (int k = 0; k < spec.grouping.group_count(); ++k)
    p.marginal.push_back(c.gru_block());
  p.joint_w_z = c.mat();
  p.joint_u_z = c.mat();
  for (int k = 0; k < spec.grouping.group_count(); ++k)
    p.joint_u_c.push_back(c.mat());
  p.joint_b_c = c.vec();
  p.joint_b_z = c.vec();
  return p;
}

CwLstmParams cwlstm_params_from_flat(const ModelSpec& spec, std::span<const double> params) {
  detail::require(spec.arch == Arch::CwLstm, "cwlstm_params_from_flat: wrong arch");
  const ParamLayout layout(spec);
  check_flat_size(params, layout);
  StructCursor c(layout, params);
  CwLstmParams p;
  for (int k = 0; k < spec.grouping.group_count(); ++k) {
    p.forward_blocks.push_back(c.lstm_block());
    p.backward_blocks.push_back(c.lstm_block());
  }
  p.joint = c.lstm_block();
  return p;
}

DenseHead head_from_flat(const ModelSpec& spec, std::span<const double> params) {
  const ParamLayout layout(spec);
  check_flat_size(params, layout);
  const TensorInfo* w = layout.find("head.W");
  const TensorInfo* b = layout.find("head.b");
  DenseHead head;
  head.weight = Vec(w->size());
  for (std::size_t i = 0; i < w->size(); ++i) head.weight[i] = params[w->offset + i];
  head.bias = params[b->offset];
  return head;
}

}  // namespace mgrn
