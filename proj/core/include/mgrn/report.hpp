#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mgrn/model.hpp"
#include "mgrn/simgen.hpp"
#include "mgrn/training.hpp"

namespace mgrn {

/// One architecture row of an experiment plan. Rows sharing a label form one
/// tuning family: the best-validation run among their (lambda x lr)
/// candidates supplies the label's test MSE.
struct PlanModelRow {
  std::string label;
  Arch arch = Arch::Gru;
  std::string grouping;    // "two-groups" | "total-split" | "" (gru/lstm)
  int lambda_factor = 0;   // grouped archs
  int marginal_dim = 0;    // grouped archs
  int state_dim = 0;       // gru/lstm
};

ModelSpec spec_for_row(const PlanModelRow& row);
GroupingScheme grouping_from_token(const std::string& token);  // throws ParseError

struct ExperimentPlan {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<PlanModelRow> rows;
  std::vector<double> learning_rates = {1e-4, 5e-4, 1e-3};
  std::size_t steps = 20000;
  int replicates = 1;  // independent paths (and training seeds) per pair
  std::uint64_t master_seed = 1;
  std::size_t burn_in = 1000;
  TrainConfig base_config;  // learning_rate and seed are set per cell
};

/// Desk scale: 3 pairs x 20k steps, one row per reference label with
/// lambda = 2 for the grouped models. Full scale: the 10 benchmark pairs x
/// 100k steps with the complete lambda grid (18 rows).
ExperimentPlan default_plan(bool full_scale);

/// Line-oriented key=value plan file; see the bench CLI help for the keys.
ExperimentPlan load_plan(const std::filesystem::path& file);

/// Reference dimension grid: every (architecture, grouping, lambda) row with
/// its marginal/joint widths and its exact trainable-parameter count.
struct DimGridRow {
  const char* label;
  Arch arch;
  const char* grouping;  // "" for gru/lstm
  int lambda_factor;
  int marginal_dim;
  int state_dim;
  long param_count;
};
std::span<const DimGridRow> reference_dim_grid();  // 18 rows

/// Throws ShapeError if count_params deviates from the reference grid.
void validate_reference_counts();

struct CellResult {
  std::string pair_label;  // "IBM,KO"
  int replicate = 0;
  std::uint64_t path_seed = 0;
  std::string model_label;
  int lambda_factor = 0;
  double learning_rate = 0.0;
  std::uint64_t train_seed = 0;
  std::string config_hash;      // fnv1a of the canonical config text, hex
  std::string checkpoint_path;  // relative to the report directory
  int best_epoch = 0;
  int epochs_run = 0;
  double val_mse = 0.0;
  double test_mse = 0.0;
  double oracle_mse = 0.0;  // min_mse of this cell's path (test segment)
  bool selected = false;    // best-validation run of its (pair, rep, label)
  std::string error;        // nonempty when the cell failed
};

struct ReportRow {
  std::string label;
  double mean_mse = 0.0;    // across pair x replicate
  double stddev_mse = 0.0;  // dispersion across paths; extra diagnostic, not
                            // part of the headline comparison
  double rel_diff = 0.0;    // (mean_mse - oracle mean)/oracle mean
};

struct CompareReport {
  std::vector<ReportRow> rows;  // model labels in plan order, oracle row last
  std::vector<CellResult> cells;
  std::vector<double> oracle_per_path;
  double oracle_mean = 0.0;
  double oracle_std = 0.0;
};

/// Runs the full grid: per path (pair x replicate), trains every (row, lr)
/// cell, selects per label on validation, evaluates on test, and appends the
/// oracle floor row. Cells run on `workers` threads; checkpoints and CSVs are
/// written under out_dir (atomically). Per-cell failures are recorded in the
/// cell's error field and the report stays partial rather than aborting.
///
/// Seed derivation from the master seed (documented contract):
///   path_seed  = RngStream(master).derive(fnv1a("path|<t1>|<t2>|<rep>")).seed()
///   train_seed = RngStream(master).derive(fnv1a("cell|<t1>|<t2>|<rep>|<label>|<lambda>|<lr>")).seed()
CompareReport run_compare(const ExperimentPlan& plan,
                          const std::filesystem::path& out_dir, int workers);

std::uint64_t derive_path_seed(const ExperimentPlan& plan,
                               const std::pair<std::string, std::string>& pair,
                               int replicate);
std::uint64_t derive_train_seed(const ExperimentPlan& plan,
                                const std::pair<std::string, std::string>& pair,
                                int replicate, const PlanModelRow& row,
                                double learning_rate);

void write_report_csvs(const CompareReport& report,
                       const std::filesystem::path& out_dir);
std::string report_table_text(const CompareReport& report);

}  // namespace mgrn
