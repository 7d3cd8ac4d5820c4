#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mgrn/cells.hpp"
#include "mgrn/checkpoint.hpp"
#include "mgrn/simgen.hpp"

namespace mgrn {

enum class Split { Train, Val, Test };

/// Supervised samples over a path: target index t pairs the window of rows
/// [t-lookback, t) with the target column at row t, so inputs always strictly
/// precede the target.
struct WindowDataset {
  std::shared_ptr<const SimPath> path;
  int lookback = 5;
  std::vector<std::size_t> samples;            // every target with full history
  std::vector<std::size_t> train, val, test;   // filled by split_dataset

  WindowView window(std::size_t target_index) const {
    return {path->row(target_index - lookback), lookback, kInputColumns,
            SimPath::kColumns};
  }
  double target(std::size_t target_index) const { return path->target(target_index); }
  const std::vector<std::size_t>& split(Split s) const {
    return s == Split::Train ? train : (s == Split::Val ? val : test);
  }
};

WindowDataset make_windows(std::shared_ptr<const SimPath> path, int lookback = 5);

/// Contiguous chronological split by target index. Boundaries are
/// floor(f1*steps) and floor((f1+f2)*steps); the first `lookback` targets of
/// the validation and test segments are dropped so no window reaches across a
/// split boundary. Fractions must sum to 1.
WindowDataset split_dataset(WindowDataset ds,
                            std::array<double, 3> fractions = {0.70, 0.15, 0.15});

struct TrainConfig {
  double learning_rate = 1e-3;  // tuning grid: {1e-4, 5e-4, 1e-3}
  int batch_size = 512;
  int max_epochs = 100;
  int patience = 10;
  std::uint64_t seed = 0;
  double clip_norm = 0.0;  // 0 disables gradient clipping
  bool normalize = false;  // standardize inputs with train-split statistics
  int lookback = 5;
};

/// Line-oriented key=value text; keys: lr, batch_size, max_epochs, patience,
/// seed, clip_norm, lookback, normalize. '#' starts a comment.
TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::filesystem::path& file);
std::string train_config_to_text(const TrainConfig& cfg);  // canonical form

/// Adam with bias correction; beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
struct AdamState {
  std::vector<double> m, v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double learning_rate);

/// Per-input-column mean and standard deviation over the train-split window
/// rows (std floored at 1e-12).
ColumnStats train_input_stats(const WindowDataset& ds);

/// Dataset over a normalized copy of the path; split indices are preserved.
WindowDataset normalize_dataset(const WindowDataset& ds, const ColumnStats& stats);

struct EpochStats {
  int epoch = 0;           // 1-based
  double train_mse = 0.0;  // mean of pre-update batch losses
  double val_mse = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  Checkpoint best;                  // best-validation parameters (+ spec, norm)
  int best_epoch = 0;               // 0 when max_epochs == 0
  double best_val_mse = 0.0;
  std::vector<EpochStats> history;
};

/// Mini-batch Adam on the train split with per-epoch validation; keeps the
/// parameters of the best validation epoch and stops early after `patience`
/// epochs without improvement. Fully deterministic given cfg.seed: the
/// initialization stream is RngStream(seed).derive(1) and the epoch-e batch
/// shuffle stream is RngStream(seed).derive(1000 + e). Throws DivergenceError
/// when a loss turns NaN/inf.
TrainResult train(const ModelSpec& spec, const WindowDataset& ds,
                  const TrainConfig& cfg,
                  const std::vector<double>* initial_params = nullptr);

/// Mean squared error of the model over one split (empty split throws).
double evaluate(const ModelSpec& spec, std::span<const double> params,
                const WindowDataset& ds, Split split);

/// Applies the checkpoint's stored normalization before evaluating.
double evaluate_checkpoint(const Checkpoint& ck, const WindowDataset& ds,
                           Split split);

void write_history_csv(const std::vector<EpochStats>& history,
                       const std::filesystem::path& file);

}  // namespace mgrn
