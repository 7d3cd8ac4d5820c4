#include "mgrn/grouping.hpp"

#include <numeric>
#include <sstream>

#include "mgrn/errors.hpp"

namespace mgrn {

GroupingScheme::GroupingScheme(std::vector<std::vector<int>> groups)
    : groups_(std::move(groups)) {
  std::size_t total = 0;
  for (const auto& g : groups_) {
    detail::require(!g.empty(), "GroupingScheme: empty group");
    total += g.size();
  }
  input_dim_ = static_cast<int>(total);
  std::vector<char> seen(total, 0);
  for (const auto& g : groups_) {
    for (int idx : g) {
      if (idx < 0 || idx >= input_dim_)
        throw ShapeError("GroupingScheme: index " + std::to_string(idx) +
                         " outside {0.." + std::to_string(input_dim_ - 1) + "}");
      if (seen[idx])
        throw ShapeError("GroupingScheme: index " + std::to_string(idx) +
                         " appears in two groups");
      seen[idx] = 1;
    }
  }
  // total indices == input_dim and no duplicates => exact partition
}

GroupingScheme GroupingScheme::total_split(int input_dim) {
  std::vector<std::vector<int>> groups(input_dim);
  for (int i = 0; i < input_dim; ++i) groups[i] = {i};
  return GroupingScheme(std::move(groups));
}

GroupingScheme GroupingScheme::single(int input_dim) {
  std::vector<int> all(input_dim);
  std::iota(all.begin(), all.end(), 0);
  return GroupingScheme({std::move(all)});
}

GroupingScheme GroupingScheme::contiguous(const std::vector<int>& sizes) {
  std::vector<std::vector<int>> groups;
  int next = 0;
  for (int s : sizes) {
    detail::require(s > 0, "GroupingScheme: group size must be positive");
    std::vector<int> g(s);
    std::iota(g.begin(), g.end(), next);
    next += s;
    groups.push_back(std::move(g));
  }
  return GroupingScheme(std::move(groups));
}

std::string GroupingScheme::to_token_string() const {
  std::ostringstream out;
  for (std::size_t k = 0; k < groups_.size(); ++k) {
    if (k) out << ';';
    for (std::size_t i = 0; i < groups_[k].size(); ++i) {
      if (i) out << ',';
      out << groups_[k][i];
    }
  }
  return out.str();
}

GroupingScheme GroupingScheme::from_token_string(const std::string& text) {
  std::vector<std::vector<int>> groups;
  std::stringstream ss(text);
  std::string group_text;
  while (std::getline(ss, group_text, ';')) {
    std::vector<int> g;
    std::stringstream gs(group_text);
    std::string idx;
    while (std::getline(gs, idx, ',')) {
      try {
        g.push_back(std::stoi(idx));
      } catch (const std::exception&) {
        throw ParseError("GroupingScheme: bad index '" + idx + "'");
      }
    }
    if (g.empty()) throw ParseError("GroupingScheme: empty group in '" + text + "'");
    groups.push_back(std::move(g));
  }
  if (groups.empty()) throw ParseError("GroupingScheme: empty grouping text");
  return GroupingScheme(std::move(groups));
}

}  // namespace mgrn
