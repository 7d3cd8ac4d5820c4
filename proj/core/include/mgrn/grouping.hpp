#pragma once

#include <string>
#include <vector>

namespace mgrn {

/// Ordered partition of the input variables {0..M-1} into K disjoint groups.
/// Groups need not be contiguous index ranges.
class GroupingScheme {
 public:
  GroupingScheme() = default;

  /// Validates that the groups form a partition of {0..M-1} where M is the
  /// total number of listed indices; throws ShapeError otherwise.
  explicit GroupingScheme(std::vector<std::vector<int>> groups);

  /// One singleton group per variable.
  static GroupingScheme total_split(int input_dim);

  /// One group holding all variables.
  static GroupingScheme single(int input_dim);

  /// Contiguous blocks of the given sizes.
  static GroupingScheme contiguous(const std::vector<int>& sizes);

  int group_count() const { return static_cast<int>(groups_.size()); }
  int input_dim() const { return input_dim_; }
  const std::vector<int>& group(int k) const { return groups_[k]; }
  int group_size(int k) const { return static_cast<int>(groups_[k].size()); }
  bool empty() const { return groups_.empty(); }

  /// "0,2,3;1,4" style serialization (groups ';'-separated, indices ','-sep).
  std::string to_token_string() const;
  static GroupingScheme from_token_string(const std::string& text);

  bool operator==(const GroupingScheme&) const = default;

 private:
  std::vector<std::vector<int>> groups_;
  int input_dim_ = 0;
};

}  // namespace mgrn
