#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mgrn/model.hpp"
#include "mgrn/simgen.hpp"

namespace mgrn {

/// A trained model: spec, flat parameters, and (optionally) the input
/// normalization that was applied during training.
struct Checkpoint {
  ModelSpec spec;
  std::vector<double> params;
  ColumnStats normalization;  // empty when training ran on raw inputs
};

/// Text container: one `tensor <dotted-name> <rows> <cols>` header per tensor
/// followed by its row-major values (17 significant digits, so doubles
/// round-trip bitwise), with a trailing `spec ...` line carrying the
/// ModelSpec fields.
std::string checkpoint_to_text(const Checkpoint& ck);
Checkpoint checkpoint_from_text(const std::string& text);

/// Atomic write (temp file + rename).
void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& file);
Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace mgrn
