#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "mgrn/errors.hpp"
#include "mgrn/oracle.hpp"
#include "mgrn/training.hpp"

using namespace mgrn;

namespace {

std::shared_ptr<const SimPath> test_path(std::size_t steps, std::uint64_t seed) {
  return std::make_shared<const SimPath>(generate_path("IBM", "KO", steps, seed, 100));
}

}  // namespace

TEST_CASE("make_windows: counting, alignment, and the no-leakage scan") {
  const auto path = test_path(100, 1);
  const WindowDataset ds = make_windows(path, 5);
  CHECK(ds.samples.size() == 95);

  // first sample: window rows 0..4, target row 5
  CHECK(ds.samples.front() == 5);
  const WindowView w = ds.window(5);
  CHECK(w.steps == 5);
  CHECK(w.row(0)[0] == path->value(0, 0));
  CHECK(w.row(4)[15] == path->value(4, 15));
  CHECK(ds.target(5) == path->target(5));

  // exhaustive scan: no window row index ever reaches its target index
  for (std::size_t t : ds.samples) {
    const WindowView view = ds.window(t);
    for (int r = 0; r < view.steps; ++r) {
      const std::size_t row_index =
          static_cast<std::size_t>((view.data - path->data.data()) / SimPath::kColumns) + r;
      CHECK(row_index < t);
    }
  }

  CHECK_THROWS_AS(make_windows(test_path(10, 2), 15), ShapeError);
}

TEST_CASE("split_dataset: chronological partition with documented edges") {
  const auto path = test_path(1000, 3);
  const WindowDataset ds = split_dataset(make_windows(path));

  // boundaries at 700 and 850; val/test drop their first lookback targets
  CHECK(ds.train.front() == 5);
  CHECK(ds.train.back() == 699);
  CHECK(ds.val.front() == 705);
  CHECK(ds.val.back() == 849);
  CHECK(ds.test.front() == 855);
  CHECK(ds.test.back() == 999);
  CHECK(ds.train.size() == 695);
  CHECK(ds.val.size() == 145);
  CHECK(ds.test.size() == 145);

  // union of splits plus the dropped boundary windows covers all samples
  std::set<std::size_t> seen;
  for (const auto* part : {&ds.train, &ds.val, &ds.test})
    for (std::size_t t : *part) CHECK(seen.insert(t).second);  // disjoint
  CHECK(seen.size() == ds.train.size() + ds.val.size() + ds.test.size());

  SUBCASE("all-train fractions") {
    const WindowDataset all = split_dataset(make_windows(path), {1.0, 0.0, 0.0});
    CHECK(all.train.size() == all.samples.size());
    CHECK(all.val.empty());
    CHECK(all.test.empty());
  }
  SUBCASE("fractions must sum to one") {
    CHECK_THROWS_AS(split_dataset(make_windows(path), {0.5, 0.1, 0.1}), ShapeError);
  }
  SUBCASE("empty nonzero split is an error") {
    const auto tiny = test_path(20, 4);
    CHECK_THROWS_AS(split_dataset(make_windows(tiny), {0.98, 0.01, 0.01}),
                    ShapeError);
  }
}

TEST_CASE("adam_step: frozen behavior") {
  SUBCASE("zero gradient leaves parameters unchanged, moments decay") {
    std::vector<double> params = {1.0, -2.0};
    AdamState st(2);
    st.m = {0.5, 0.5};
    st.v = {0.25, 0.25};
    adam_step(params, std::vector<double>{0.0, 0.0}, st, 1e-3);
    CHECK(params[0] != 1.0);  // momentum still moves the parameter
    CHECK(st.m[0] == doctest::Approx(0.45).epsilon(1e-15));
    CHECK(st.v[0] == doctest::Approx(0.24975).epsilon(1e-15));

    // from a fresh state a zero gradient moves nothing
    std::vector<double> fresh = {1.0, -2.0};
    AdamState st0(2);
    adam_step(fresh, std::vector<double>{0.0, 0.0}, st0, 1e-3);
    CHECK(fresh[0] == 1.0);
    CHECK(fresh[1] == -2.0);
  }

  SUBCASE("bias-corrected first step has magnitude lr*|g|/(|g|+eps)") {
    for (double g : {1.0, -3.0, 0.2}) {
      std::vector<double> params = {0.0};
      AdamState st(1);
      const double lr = 1e-3;
      adam_step(params, std::vector<double>{g}, st, lr);
      const double expected = lr * std::abs(g) / (std::abs(g) + st.epsilon);
      CHECK(std::abs(params[0]) == doctest::Approx(expected).epsilon(1e-12));
      CHECK(std::abs(params[0]) == doctest::Approx(lr).epsilon(1e-7));
      CHECK((g > 0 ? params[0] < 0 : params[0] > 0));
    }
  }

  SUBCASE("purity: identical states give identical results") {
    std::vector<double> p1 = {0.3, 0.4}, p2 = {0.3, 0.4};
    AdamState s1(2), s2(2);
    const std::vector<double> g = {0.1, -0.2};
    for (int i = 0; i < 5; ++i) {
      adam_step(p1, g, s1, 5e-4);
      adam_step(p2, g, s2, 5e-4);
    }
    CHECK(p1 == p2);
    CHECK(s1.m == s2.m);
    CHECK(s1.v == s2.v);
  }

  SUBCASE("shape mismatch") {
    std::vector<double> params = {0.0};
    AdamState st(2);
    CHECK_THROWS_AS(adam_step(params, std::vector<double>{1.0}, st, 1e-3),
                    ShapeError);
  }
}

TEST_CASE("train config: parse, canonical text, errors") {
  const TrainConfig cfg = parse_train_config(
      "# comment\nlr = 5e-4\nbatch_size=64\nmax_epochs = 3\npatience=2\n"
      "seed = 11\nclip_norm = 1.5\nlookback=5\nnormalize=0\n");
  CHECK(cfg.learning_rate == 5e-4);
  CHECK(cfg.batch_size == 64);
  CHECK(cfg.max_epochs == 3);
  CHECK(cfg.patience == 2);
  CHECK(cfg.seed == 11);
  CHECK(cfg.clip_norm == 1.5);
  CHECK(!cfg.normalize);

  const TrainConfig back = parse_train_config(train_config_to_text(cfg));
  CHECK(back.learning_rate == cfg.learning_rate);
  CHECK(back.seed == cfg.seed);

  CHECK_THROWS_AS(parse_train_config("lr 5e-4\n"), ParseError);
  CHECK_THROWS_AS(parse_train_config("learning=1\n"), ParseError);
  CHECK_THROWS_AS(parse_train_config("batch_size=abc\n"), ParseError);
}

TEST_CASE("evaluate: variance identity and per-sample recomputation") {
  const auto path = test_path(400, 7);
  const WindowDataset ds = split_dataset(make_windows(path));
  const ModelSpec spec = gru_spec(16, 3);
  const ParamLayout layout(spec);

  // predictor == mean of split targets -> MSE equals the biased variance
  double mean = 0.0;
  for (std::size_t t : ds.test) mean += ds.target(t);
  mean /= static_cast<double>(ds.test.size());
  std::vector<double> params(layout.total_size(), 0.0);
  params[layout.find("head.b")->offset] = mean;
  const double mse = evaluate(spec, params, ds, Split::Test);
  double variance = 0.0;
  for (std::size_t t : ds.test) variance += (ds.target(t) - mean) * (ds.target(t) - mean);
  variance /= static_cast<double>(ds.test.size());
  CHECK(mse == doctest::Approx(variance).epsilon(1e-12));

  // brute-force recomputation, one sample at a time
  const auto params2 = init_params(spec, RngStream(5));
  const double reported = evaluate(spec, params2, ds, Split::Val);
  double acc = 0.0;
  for (std::size_t t : ds.val) {
    const double err = forward_window(spec, params2, ds.window(t)) - ds.target(t);
    acc += err * err;
  }
  CHECK(reported == doctest::Approx(acc / ds.val.size()).epsilon(1e-14));

  WindowDataset unsplit = make_windows(path);
  CHECK_THROWS_AS(evaluate(spec, params2, unsplit, Split::Test), ShapeError);
}

TEST_CASE("train: max_epochs 0 returns the initialization") {
  const auto path = test_path(300, 8);
  const WindowDataset ds = split_dataset(make_windows(path));
  const ModelSpec spec = gru_spec(16, 2);
  TrainConfig cfg;
  cfg.max_epochs = 0;
  cfg.seed = 9;
  const TrainResult result = train(spec, ds, cfg);
  CHECK(result.history.empty());
  CHECK(result.best_epoch == 0);
  CHECK(result.best.params == init_params(spec, RngStream(9).derive(1)));
}

TEST_CASE("train: one epoch of single-batch Adam descends on the train split") {
  const auto path = test_path(300, 10);
  const WindowDataset ds = split_dataset(make_windows(path));
  const ModelSpec spec = gru_spec(16, 2);
  TrainConfig cfg;
  cfg.max_epochs = 1;
  cfg.batch_size = 1 << 20;  // single batch
  cfg.learning_rate = 1e-4;
  cfg.seed = 3;

  const auto init = init_params(spec, RngStream(cfg.seed).derive(1));
  const double before = evaluate(spec, init, ds, Split::Train);
  const TrainResult result = train(spec, ds, cfg);
  REQUIRE(result.history.size() == 1);
  // pre-update epoch loss equals the initialization loss on a single batch
  CHECK(result.history[0].train_mse == doctest::Approx(before).epsilon(1e-12));
  // and the post-step parameters improve the train MSE
  std::vector<double> after_params = result.best.params;
  if (result.best_epoch == 0) after_params = init;  // val did not improve
  const double after = evaluate(spec, after_params, ds, Split::Train);
  CHECK(after <= before);
}

TEST_CASE("train: determinism and validation-based selection") {
  const auto path = test_path(600, 11);
  const WindowDataset ds = split_dataset(make_windows(path));
  const ModelSpec spec = mgrn_spec(two_group_split(), 2, 2);
  TrainConfig cfg;
  cfg.max_epochs = 4;
  cfg.batch_size = 128;
  cfg.learning_rate = 1e-3;
  cfg.seed = 123;

  const TrainResult a = train(spec, ds, cfg);
  const TrainResult b = train(spec, ds, cfg);
  CHECK(a.best.params == b.best.params);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_mse == b.history[i].train_mse);
    CHECK(a.history[i].val_mse == b.history[i].val_mse);
  }

  // the reported checkpoint is the best-validation epoch, not the last
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  for (const auto& row : a.history)
    if (row.val_mse < best_val) {
      best_val = row.val_mse;
      best_epoch = row.epoch;
    }
  CHECK(a.best_epoch == best_epoch);
  CHECK(a.best_val_mse == best_val);
  CHECK(evaluate(spec, a.best.params, ds, Split::Val) ==
        doctest::Approx(best_val).epsilon(1e-12));
}

TEST_CASE("train: an absurd learning rate diverges with the epoch index") {
  const auto path = test_path(300, 14);
  const WindowDataset ds = split_dataset(make_windows(path));
  const ModelSpec spec = gru_spec(16, 2);
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.learning_rate = 1e200;
  cfg.seed = 1;
  CHECK_THROWS_AS(train(spec, ds, cfg), DivergenceError);
  try {
    train(spec, ds, cfg);
  } catch (const DivergenceError& e) {
    CHECK(e.epoch >= 1);
  }

  // gradient clipping changes the trajectory but keeps it deterministic
  cfg.learning_rate = 1e-3;
  cfg.clip_norm = 1e-3;
  const TrainResult clipped1 = train(spec, ds, cfg);
  const TrainResult clipped2 = train(spec, ds, cfg);
  CHECK(clipped1.best.params == clipped2.best.params);
  cfg.clip_norm = 0.0;
  const TrainResult unclipped = train(spec, ds, cfg);
  CHECK(clipped1.best.params != unclipped.best.params);
}

TEST_CASE("train: normalization stats travel with the result") {
  const auto path = test_path(400, 13);
  const WindowDataset ds = split_dataset(make_windows(path));
  const ModelSpec spec = gru_spec(16, 2);
  TrainConfig cfg;
  cfg.max_epochs = 2;
  cfg.seed = 5;
  cfg.normalize = true;
  const TrainResult result = train(spec, ds, cfg);
  REQUIRE(!result.best.normalization.empty());
  CHECK(result.best.normalization.shift.size() == 16);

  // evaluate_checkpoint applies the stored stats: it reproduces best_val_mse
  CHECK(evaluate_checkpoint(result.best, ds, Split::Val) ==
        doctest::Approx(result.best_val_mse).epsilon(1e-12));

  // the stats standardize the train window rows
  const ColumnStats stats = train_input_stats(ds);
  const WindowDataset norm = normalize_dataset(ds, stats);
  const ColumnStats renorm = train_input_stats(norm);
  for (int c = 0; c < 16; ++c) {
    CHECK(renorm.shift[c] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(renorm.scale[c] == doctest::Approx(1.0).epsilon(1e-9));
  }
}
