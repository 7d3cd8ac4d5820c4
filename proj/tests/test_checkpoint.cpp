#include <doctest.h>

#include <filesystem>

#include "mgrn/checkpoint.hpp"
#include "mgrn/errors.hpp"
#include "mgrn/training.hpp"

using namespace mgrn;

namespace {

Checkpoint sample_checkpoint(const ModelSpec& spec, std::uint64_t seed) {
  Checkpoint ck;
  ck.spec = spec;
  ck.params = init_params(spec, RngStream(seed));
  // perturb so values are not symmetric around zero
  RngStream s(seed + 1);
  for (double& p : ck.params) p += 0.25 * s.normal();
  return ck;
}

}  // namespace

TEST_CASE("checkpoint round-trip reproduces predictions bitwise") {
  const ModelSpec specs[] = {
      gru_spec(16, 17),
      lstm_spec(16, 14),
      mgrn_spec(two_group_split(), 4, 2),
      cwlstm_spec(total_split_16(), 2, 2),
  };
  for (const ModelSpec& spec : specs) {
    CAPTURE(arch_name(spec.arch));
    const Checkpoint ck = sample_checkpoint(spec, 7);
    const Checkpoint back = checkpoint_from_text(checkpoint_to_text(ck));
    CHECK(back.params == ck.params);
    CHECK(back.spec.arch == spec.arch);
    CHECK(back.spec.state_dim == spec.state_dim);
    CHECK(back.spec.grouping == spec.grouping);

    Mat window(5, 16);
    RngStream s(8);
    for (std::size_t i = 0; i < window.rows() * window.cols(); ++i)
      window.data()[i] = s.normal();
    CHECK(forward_window(back.spec, back.params, window_view(window)) ==
          forward_window(spec, ck.params, window_view(window)));
  }
}

TEST_CASE("checkpoint file save/load and evaluate round-trip") {
  const auto path = std::make_shared<const SimPath>(generate_path("BA", "PG", 400, 3, 100));
  const WindowDataset ds = split_dataset(make_windows(path));
  const ModelSpec spec = mgrn_spec(total_split_16(), 2, 1);
  const Checkpoint ck = sample_checkpoint(spec, 21);

  const auto file = std::filesystem::temp_directory_path() / "mgrn_test.ckpt";
  save_checkpoint(ck, file);
  const Checkpoint back = load_checkpoint(file);
  CHECK(evaluate_checkpoint(back, ds, Split::Val) ==
        evaluate_checkpoint(ck, ds, Split::Val));
  std::filesystem::remove(file);
}

TEST_CASE("checkpoint carries normalization tensors when present") {
  Checkpoint ck = sample_checkpoint(gru_spec(16, 3), 5);
  ck.normalization.shift.assign(16, 0.5);
  ck.normalization.scale.assign(16, 2.0);
  ck.normalization.shift[3] = -1.25;
  const Checkpoint back = checkpoint_from_text(checkpoint_to_text(ck));
  REQUIRE(!back.normalization.empty());
  CHECK(back.normalization.shift == ck.normalization.shift);
  CHECK(back.normalization.scale == ck.normalization.scale);
}

TEST_CASE("checkpoint parser rejects malformed input") {
  const Checkpoint ck = sample_checkpoint(gru_spec(4, 2), 9);
  const std::string good = checkpoint_to_text(ck);

  CHECK_THROWS_AS(checkpoint_from_text("not a checkpoint"), ParseError);
  CHECK_THROWS_AS(checkpoint_from_text("mgrn-checkpoint 1\nspec arch=gru\n"),
                  ParseError);  // missing fields

  // drop one tensor
  const auto pos = good.find("tensor gru.U_h");
  const auto next = good.find("tensor", pos + 1);
  std::string missing = good.substr(0, pos) + good.substr(next);
  CHECK_THROWS_AS(checkpoint_from_text(missing), ParseError);

  // unknown tensor name
  std::string extra = good;
  extra.insert(extra.find("spec arch"), "tensor gru.W_q 1 1\n0\n");
  CHECK_THROWS_AS(checkpoint_from_text(extra), ParseError);

  // shape clash with the spec
  std::string reshaped = good;
  const auto hpos = reshaped.find("tensor head.W 1 2");
  REQUIRE(hpos != std::string::npos);
  reshaped.replace(hpos, 17, "tensor head.W 2 1");
  CHECK_THROWS_AS(checkpoint_from_text(reshaped), ParseError);
}
