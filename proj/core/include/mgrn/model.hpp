#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mgrn/grouping.hpp"
#include "mgrn/rng.hpp"

namespace mgrn {

enum class Arch { Gru, Lstm, CwLstm, Mgrn };

std::string_view arch_name(Arch arch);
Arch arch_from_name(std::string_view name);  // throws ParseError

/// Joint dimension N is tied to the common marginal dimension: N = lambda * N~.
struct DimPlan {
  int marginal_dim = 0;   // N~, shared by all groups
  int lambda_factor = 0;  // lambda
  int joint_dim = 0;      // N
};

/// Architecture identifier plus everything needed to lay out its parameters.
/// The dense output head (1 x N weight plus scalar bias) is always present.
struct ModelSpec {
  Arch arch = Arch::Gru;
  int input_dim = 0;  // M
  int state_dim = 0;  // N: full state / output width
  DimPlan dims;       // grouped architectures only
  GroupingScheme grouping;

  bool grouped() const { return arch == Arch::CwLstm || arch == Arch::Mgrn; }
  void validate() const;  // throws ShapeError
};

ModelSpec gru_spec(int input_dim, int state_dim);
ModelSpec lstm_spec(int input_dim, int state_dim);
ModelSpec mgrn_spec(GroupingScheme grouping, int marginal_dim, int lambda_factor);
ModelSpec cwlstm_spec(GroupingScheme grouping, int marginal_dim, int lambda_factor);

struct TensorInfo {
  std::string name;  // dotted, e.g. "mgrn.marginal3.W_r"
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

/// Canonical flat layout of all trainable scalars for a spec, head last.
/// Parameter vectors, gradient vectors and optimizer moments all share it.
class ParamLayout {
 public:
  explicit ParamLayout(const ModelSpec& spec);

  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  std::size_t total_size() const { return total_; }
  /// Scalars before the head tensors; equals count_params(spec).
  std::size_t recurrent_size() const { return recurrent_; }
  const TensorInfo* find(std::string_view name) const;

 private:
  std::vector<TensorInfo> tensors_;
  std::size_t total_ = 0;
  std::size_t recurrent_ = 0;
};

/// Closed-form number of trainable parameters, excluding the dense head.
long count_params(const ModelSpec& spec);

/// Weights uniform in +-1/sqrt(fan_in), biases zero. The stream is consumed
/// tensor by tensor in layout order, row-major within each tensor.
std::vector<double> init_params(const ModelSpec& spec, RngStream stream);

}  // namespace mgrn
