#include "mgrn/model.hpp"

#include <cmath>

#include "mgrn/errors.hpp"

namespace mgrn {

std::string_view arch_name(Arch arch) {
  switch (arch) {
    case Arch::Gru: return "gru";
    case Arch::Lstm: return "lstm";
    case Arch::CwLstm: return "cwlstm";
    case Arch::Mgrn: return "mgrn";
  }
  return "?";
}

Arch arch_from_name(std::string_view name) {
  if (name == "gru") return Arch::Gru;
  if (name == "lstm") return Arch::Lstm;
  if (name == "cwlstm") return Arch::CwLstm;
  if (name == "mgrn") return Arch::Mgrn;
  throw ParseError("unknown architecture '" + std::string(name) +
                   "' (expected gru|lstm|cwlstm|mgrn)");
}

void ModelSpec::validate() const {
  detail::require(input_dim > 0, "ModelSpec: input_dim must be positive");
  detail::require(state_dim > 0, "ModelSpec: state_dim must be positive");
  if (grouped()) {
    detail::require(!grouping.empty(), "ModelSpec: grouped arch needs a grouping");
    if (grouping.input_dim() != input_dim)
      detail::length_mismatch("ModelSpec: grouping vs input_dim",
                              grouping.input_dim(), input_dim);
    detail::require(dims.marginal_dim >= 1, "ModelSpec: marginal_dim must be >= 1");
    detail::require(dims.lambda_factor >= 1, "ModelSpec: lambda must be >= 1");
    detail::require(dims.joint_dim == dims.marginal_dim * dims.lambda_factor,
                    "ModelSpec: joint_dim != lambda * marginal_dim");
    detail::require(dims.joint_dim == state_dim,
                    "ModelSpec: state_dim != joint_dim");
  }
}

ModelSpec gru_spec(int input_dim, int state_dim) {
  ModelSpec spec{Arch::Gru, input_dim, state_dim, {}, {}};
  spec.validate();
  return spec;
}

ModelSpec lstm_spec(int input_dim, int state_dim) {
  ModelSpec spec{Arch::Lstm, input_dim, state_dim, {}, {}};
  spec.validate();
  return spec;
}

ModelSpec mgrn_spec(GroupingScheme grouping, int marginal_dim, int lambda_factor) {
  const int joint = marginal_dim * lambda_factor;
  ModelSpec spec{Arch::Mgrn, grouping.input_dim(), joint,
                 {marginal_dim, lambda_factor, joint}, std::move(grouping)};
  spec.validate();
  return spec;
}

ModelSpec cwlstm_spec(GroupingScheme grouping, int marginal_dim, int lambda_factor) {
  const int joint = marginal_dim * lambda_factor;
  ModelSpec spec{Arch::CwLstm, grouping.input_dim(), joint,
                 {marginal_dim, lambda_factor, joint}, std::move(grouping)};
  spec.validate();
  return spec;
}

namespace {

class LayoutBuilder {
 public:
  void add(std::string name, int rows, int cols) {
    tensors_.push_back({std::move(name), rows, cols, offset_});
    offset_ += tensors_.back().size();
  }

  // r/z/h gate triple of a GRU block.
  void add_gru_block(const std::string& prefix, int in, int n) {
    add(prefix + ".W_r", n, in);
    add(prefix + ".W_z", n, in);
    add(prefix + ".W_h", n, in);
    add(prefix + ".U_r", n, n);
    add(prefix + ".U_z", n, n);
    add(prefix + ".U_h", n, n);
    add(prefix + ".b_r", n, 1);
    add(prefix + ".b_z", n, 1);
    add(prefix + ".b_h", n, 1);
  }

  // i/f/c/o gates, one bias vector each.
  void add_lstm_block(const std::string& prefix, int in, int n) {
    for (const char* g : {"i", "f", "c", "o"}) add(prefix + ".W_" + g, n, in);
    for (const char* g : {"i", "f", "c", "o"}) add(prefix + ".U_" + g, n, n);
    for (const char* g : {"i", "f", "c", "o"}) add(prefix + ".b_" + g, n, 1);
  }

  std::vector<TensorInfo> take() { return std::move(tensors_); }
  std::size_t offset() const { return offset_; }

 private:
  std::vector<TensorInfo> tensors_;
  std::size_t offset_ = 0;
};

}  // namespace

ParamLayout::ParamLayout(const ModelSpec& spec) {
  spec.validate();
  LayoutBuilder b;
  const int m = spec.input_dim;
  const int n = spec.state_dim;
  switch (spec.arch) {
    case Arch::Gru:
      b.add_gru_block("gru", m, n);
      break;
    case Arch::Lstm:
      b.add_lstm_block("lstm", m, n);
      break;
    case Arch::Mgrn: {
      const int nm = spec.dims.marginal_dim;
      for (int k = 0; k < spec.grouping.group_count(); ++k)
        b.add_gru_block("mgrn.marginal" + std::to_string(k),
                        spec.grouping.group_size(k), nm);
      b.add("mgrn.joint.W_z", n, m);
      b.add("mgrn.joint.U_z", n, n);
      for (int k = 0; k < spec.grouping.group_count(); ++k)
        b.add("mgrn.joint.U_c" + std::to_string(k), n, nm);
      b.add("mgrn.joint.b_c", n, 1);
      b.add("mgrn.joint.b_z", n, 1);
      break;
    }
    case Arch::CwLstm: {
      const int nm = spec.dims.marginal_dim;
      for (int k = 0; k < spec.grouping.group_count(); ++k) {
        const std::string prefix = "cwlstm.group" + std::to_string(k);
        b.add_lstm_block(prefix + ".fwd", spec.grouping.group_size(k), nm);
        b.add_lstm_block(prefix + ".bwd", spec.grouping.group_size(k), nm);
      }
      b.add_lstm_block("cwlstm.joint", 2 * spec.grouping.group_count() * nm, n);
      break;
    }
  }
  recurrent_ = b.offset();
  b.add("head.W", 1, n);
  b.add("head.b", 1, 1);
  tensors_ = b.take();
  total_ = recurrent_ + n + 1;
}

const TensorInfo* ParamLayout::find(std::string_view name) const {
  for (const auto& t : tensors_)
    if (t.name == name) return &t;
  return nullptr;
}

long count_params(const ModelSpec& spec) {
  spec.validate();
  const long m = spec.input_dim;
  const long n = spec.state_dim;
  switch (spec.arch) {
    case Arch::Gru:
      return 3 * (n * m + n * n + n);
    case Arch::Lstm:
      return 4 * (n * m + n * n + n);
    case Arch::Mgrn: {
      const long nm = spec.dims.marginal_dim;
      const long k = spec.grouping.group_count();
      long marginal = 0;
      for (int i = 0; i < k; ++i)
        marginal += 3 * (nm * spec.grouping.group_size(i) + nm * nm + nm);
      return marginal + n * m + n * n + k * n * nm + 2 * n;
    }
    case Arch::CwLstm: {
      const long nm = spec.dims.marginal_dim;
      const long k = spec.grouping.group_count();
      long marginal = 0;
      for (int i = 0; i < k; ++i)
        marginal += 2 * 4 * (nm * spec.grouping.group_size(i) + nm * nm + nm);
      return marginal + 4 * (n * (2 * k * nm) + n * n + n);
    }
  }
  return 0;
}

std::vector<double> init_params(const ModelSpec& spec, RngStream stream) {
  const ParamLayout layout(spec);
  std::vector<double> params(layout.total_size(), 0.0);
  for (const auto& t : layout.tensors()) {
    const auto dot = t.name.rfind('.');
    const bool is_bias = t.name[dot + 1] == 'b';
    if (is_bias) continue;  // biases stay zero
    const double bound = 1.0 / std::sqrt(static_cast<double>(t.cols));
    for (std::size_t i = 0; i < t.size(); ++i)
      params[t.offset + i] = (2.0 * stream.uniform01() - 1.0) * bound;
  }
  return params;
}

}  // namespace mgrn
