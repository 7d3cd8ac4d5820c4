#include "mgrn/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "mgrn/errors.hpp"
#include "mgrn/oracle.hpp"
#include "mgrn/rng.hpp"

namespace mgrn {

namespace {

constexpr const char* kLabelLstm = "LSTM";
constexpr const char* kLabelGru = "GRU";
constexpr const char* kLabelCwTwo = "Channel-wise LSTM (two groups)";
constexpr const char* kLabelCwTotal = "Channel-wise LSTM (total split)";
constexpr const char* kLabelMgrnTwo = "mGRN (two groups)";
constexpr const char* kLabelMgrnTotal = "mGRN (total split)";
constexpr const char* kLabelOracle = "Theoretical minimum";

constexpr DimGridRow kDimGrid[] = {
    {kLabelLstm, Arch::Lstm, "", 0, 0, 14, 1736},
    {kLabelGru, Arch::Gru, "", 0, 0, 17, 1734},
    {kLabelCwTwo, Arch::CwLstm, "two-groups", 1, 5, 5, 1640},
    {kLabelCwTwo, Arch::CwLstm, "two-groups", 2, 4, 8, 1632},
    {kLabelCwTwo, Arch::CwLstm, "two-groups", 4, 3, 12, 1776},
    {kLabelCwTwo, Arch::CwLstm, "two-groups", 8, 2, 16, 1952},
    {kLabelCwTotal, Arch::CwLstm, "total-split", 1, 3, 3, 3120},
    {kLabelCwTotal, Arch::CwLstm, "total-split", 2, 2, 4, 2128},
    {kLabelCwTotal, Arch::CwLstm, "total-split", 4, 2, 8, 3360},
    {kLabelCwTotal, Arch::CwLstm, "total-split", 8, 2, 16, 6208},
    {kLabelMgrnTwo, Arch::Mgrn, "two-groups", 1, 10, 10, 1620},
    {kLabelMgrnTwo, Arch::Mgrn, "two-groups", 2, 8, 16, 1616},
    {kLabelMgrnTwo, Arch::Mgrn, "two-groups", 4, 6, 24, 1836},
    {kLabelMgrnTwo, Arch::Mgrn, "two-groups", 8, 3, 24, 1368},
    {kLabelMgrnTotal, Arch::Mgrn, "total-split", 1, 4, 4, 1496},
    {kLabelMgrnTotal, Arch::Mgrn, "total-split", 2, 4, 8, 1872},
    {kLabelMgrnTotal, Arch::Mgrn, "total-split", 4, 3, 12, 1656},
    {kLabelMgrnTotal, Arch::Mgrn, "total-split", 8, 2, 16, 1440},
};

PlanModelRow row_from_grid(const DimGridRow& g) {
  return {g.label, g.arch, g.grouping, g.lambda_factor, g.marginal_dim,
          g.arch == Arch::Gru || g.arch == Arch::Lstm ? g.state_dim : 0};
}

std::string pair_label(const std::pair<std::string, std::string>& p) {
  return p.first + "," + p.second;
}

std::string slug(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    else if (!(c >= 'a' && c <= 'z') && !(c >= '0' && c <= '9')) c = '-';
  }
  while (!s.empty() && s.back() == '-') s.pop_back();
  std::string out;
  for (char c : s)
    if (!(c == '-' && !out.empty() && out.back() == '-')) out += c;
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

double mean_of(const std::vector<double>& xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

double std_of(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

}  // namespace

GroupingScheme grouping_from_token(const std::string& token) {
  if (token == "two-groups") return two_group_split();
  if (token == "total-split") return total_split_16();
  throw ParseError("unknown grouping token '" + token +
                   "' (expected two-groups|total-split)");
}

ModelSpec spec_for_row(const PlanModelRow& row) {
  switch (row.arch) {
    case Arch::Gru:
      return gru_spec(kInputColumns, row.state_dim);
    case Arch::Lstm:
      return lstm_spec(kInputColumns, row.state_dim);
    case Arch::Mgrn:
      return mgrn_spec(grouping_from_token(row.grouping), row.marginal_dim,
                       row.lambda_factor);
    case Arch::CwLstm:
      return cwlstm_spec(grouping_from_token(row.grouping), row.marginal_dim,
                         row.lambda_factor);
  }
  throw ParseError("spec_for_row: bad arch");
}

std::span<const DimGridRow> reference_dim_grid() { return kDimGrid; }

void validate_reference_counts() {
  for (const auto& g : kDimGrid) {
    const long counted = count_params(spec_for_row(row_from_grid(g)));
    if (counted != g.param_count)
      throw ShapeError(std::string("reference dimension grid mismatch for ") +
                       g.label + " lambda=" + std::to_string(g.lambda_factor) +
                       ": counted " + std::to_string(counted) + ", expected " +
                       std::to_string(g.param_count));
  }
}

ExperimentPlan default_plan(bool full_scale) {
  ExperimentPlan plan;
  if (full_scale) {
    plan.pairs = benchmark_pairs();
    plan.steps = 100000;
    for (const auto& g : kDimGrid) plan.rows.push_back(row_from_grid(g));
  } else {
    const auto& all = benchmark_pairs();
    plan.pairs.assign(all.begin(), all.begin() + 3);
    plan.steps = 20000;
    for (const auto& g : kDimGrid) {
      const bool grouped = g.arch == Arch::CwLstm || g.arch == Arch::Mgrn;
      if (!grouped || g.lambda_factor == 2) plan.rows.push_back(row_from_grid(g));
    }
  }
  return plan;
}

std::uint64_t derive_path_seed(const ExperimentPlan& plan,
                               const std::pair<std::string, std::string>& pair,
                               int replicate) {
  const std::string key =
      "path|" + pair.first + "|" + pair.second + "|" + std::to_string(replicate);
  return RngStream(plan.master_seed).derive(fnv1a(key.data(), key.size())).seed();
}

std::uint64_t derive_train_seed(const ExperimentPlan& plan,
                                const std::pair<std::string, std::string>& pair,
                                int replicate, const PlanModelRow& row,
                                double learning_rate) {
  const std::string key = "cell|" + pair.first + "|" + pair.second + "|" +
                          std::to_string(replicate) + "|" + row.label + "|" +
                          std::to_string(row.lambda_factor) + "|" +
                          format_g(learning_rate);
  return RngStream(plan.master_seed).derive(fnv1a(key.data(), key.size())).seed();
}

ExperimentPlan load_plan(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read " + file.string());
  ExperimentPlan plan;
  plan.rows.clear();
  std::string line;
  int line_no = 0;
  bool saw_models_key = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(file.string() + ":" + std::to_string(line_no) +
                       ": expected key=value");
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    auto split_list = [&](char sep) {
      std::vector<std::string> items;
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, sep)) {
        item = strip(item);
        if (!item.empty()) items.push_back(item);
      }
      return items;
    };
    try {
      if (key == "pairs") {
        plan.pairs.clear();
        for (const auto& item : split_list(',')) {
          const auto colon = item.find(':');
          if (colon == std::string::npos)
            throw ParseError("pair '" + item + "' must be TICKER:TICKER");
          plan.pairs.emplace_back(item.substr(0, colon), item.substr(colon + 1));
        }
      } else if (key == "models") {
        saw_models_key = true;
        plan.rows.clear();
        for (const auto& item : split_list(',')) {
          // gru:<N> | lstm:<N> | mgrn:<grouping>:<lambda>:<Ntilde> | cwlstm:...
          std::vector<std::string> parts;
          std::stringstream ps(item);
          std::string part;
          while (std::getline(ps, part, ':')) parts.push_back(strip(part));
          if (parts.size() < 2) throw ParseError("bad model token '" + item + "'");
          PlanModelRow row;
          row.label = item;
          row.arch = arch_from_name(parts[0]);
          if (row.arch == Arch::Gru || row.arch == Arch::Lstm) {
            if (parts.size() != 2) throw ParseError("bad model token '" + item + "'");
            row.state_dim = std::stoi(parts[1]);
          } else {
            if (parts.size() != 4) throw ParseError("bad model token '" + item + "'");
            row.grouping = parts[1];
            grouping_from_token(row.grouping);
            row.lambda_factor = std::stoi(parts[2]);
            row.marginal_dim = std::stoi(parts[3]);
          }
          plan.rows.push_back(std::move(row));
        }
      } else if (key == "lrs") {
        plan.learning_rates.clear();
        for (const auto& item : split_list(','))
          plan.learning_rates.push_back(std::stod(item));
      } else if (key == "steps") {
        plan.steps = std::stoull(value);
      } else if (key == "replicates") {
        plan.replicates = std::stoi(value);
      } else if (key == "master_seed") {
        plan.master_seed = std::stoull(value);
      } else if (key == "burn_in") {
        plan.burn_in = std::stoull(value);
      } else if (key == "batch_size") {
        plan.base_config.batch_size = std::stoi(value);
      } else if (key == "max_epochs") {
        plan.base_config.max_epochs = std::stoi(value);
      } else if (key == "patience") {
        plan.base_config.patience = std::stoi(value);
      } else if (key == "clip_norm") {
        plan.base_config.clip_norm = std::stod(value);
      } else if (key == "normalize") {
        plan.base_config.normalize = std::stoi(value) != 0;
      } else if (key == "lookback") {
        plan.base_config.lookback = std::stoi(value);
      } else {
        throw ParseError("unknown key '" + key + "'");
      }
    } catch (const ParseError& e) {
      throw ParseError(file.string() + ":" + std::to_string(line_no) + ": " +
                       e.what());
    } catch (const std::exception& e) {
      throw ParseError(file.string() + ":" + std::to_string(line_no) +
                       ": bad value '" + value + "'");
    }
  }
  if (plan.pairs.empty())
    throw ParseError(file.string() + ": plan needs at least one pair");
  if (!saw_models_key)
    for (const auto& g : kDimGrid) plan.rows.push_back(row_from_grid(g));
  detail::require(plan.replicates >= 1, "plan: replicates must be >= 1");
  detail::require(plan.steps >= 100, "plan: steps must be >= 100");
  return plan;
}

CompareReport run_compare(const ExperimentPlan& plan,
                          const std::filesystem::path& out_dir, int workers) {
  validate_reference_counts();  // abort before any training on a count bug
  for (const auto& row : plan.rows) spec_for_row(row).validate();

  std::filesystem::create_directories(out_dir / "checkpoints");

  CompareReport report;
  std::mutex cells_mutex;

  for (const auto& pair : plan.pairs) {
    for (int rep = 0; rep < plan.replicates; ++rep) {
      const std::uint64_t path_seed = derive_path_seed(plan, pair, rep);
      const auto path = std::make_shared<const SimPath>(generate_path(
          pair.first, pair.second, plan.steps, path_seed, plan.burn_in));
      const WindowDataset ds = split_dataset(
          make_windows(path, plan.base_config.lookback));
      const double oracle_mse = min_mse(*path).mse;
      report.oracle_per_path.push_back(oracle_mse);

      struct CellSpec {
        const PlanModelRow* row;
        double lr;
      };
      std::vector<CellSpec> cell_specs;
      for (const auto& row : plan.rows)
        for (double lr : plan.learning_rates) cell_specs.push_back({&row, lr});

      std::vector<CellResult> cells(cell_specs.size());
      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cell_specs.size()) return;
          const PlanModelRow& row = *cell_specs[i].row;
          const double lr = cell_specs[i].lr;
          CellResult cell;
          cell.pair_label = pair_label(pair);
          cell.replicate = rep;
          cell.path_seed = path_seed;
          cell.model_label = row.label;
          cell.lambda_factor = row.lambda_factor;
          cell.learning_rate = lr;
          cell.train_seed = derive_train_seed(plan, pair, rep, row, lr);
          cell.oracle_mse = oracle_mse;
          try {
            TrainConfig cfg = plan.base_config;
            cfg.learning_rate = lr;
            cfg.seed = cell.train_seed;
            const std::string cfg_text = train_config_to_text(cfg);
            cell.config_hash = hex64(fnv1a(cfg_text.data(), cfg_text.size()));

            const ModelSpec spec = spec_for_row(row);
            TrainResult trained = train(spec, ds, cfg);
            cell.best_epoch = trained.best_epoch;
            cell.epochs_run = static_cast<int>(trained.history.size());
            cell.val_mse = trained.best_val_mse;
            cell.test_mse = evaluate_checkpoint(trained.best, ds, Split::Test);

            char lr_buf[24];
            std::snprintf(lr_buf, sizeof lr_buf, "%g", lr);
            const std::string name = slug(pair_label(pair)) + "_r" +
                                     std::to_string(rep) + "_" + slug(row.label) +
                                     "_lam" + std::to_string(row.lambda_factor) +
                                     "_lr" + lr_buf + ".ckpt";
            cell.checkpoint_path = "checkpoints/" + name;
            save_checkpoint(trained.best, out_dir / cell.checkpoint_path);
          } catch (const std::exception& e) {
            cell.error = e.what();
          }
          cells[i] = std::move(cell);
        }
      };
      const int thread_count =
          std::max(1, std::min<int>(workers, static_cast<int>(cell_specs.size())));
      {
        std::vector<std::thread> pool;
        for (int w = 0; w < thread_count; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
      }

      // per-label selection on validation MSE
      std::map<std::string, std::size_t> best_by_label;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!cells[i].error.empty()) continue;
        const auto it = best_by_label.find(cells[i].model_label);
        if (it == best_by_label.end() || cells[i].val_mse < cells[it->second].val_mse)
          best_by_label[cells[i].model_label] = i;
      }
      for (const auto& [label, idx] : best_by_label) cells[idx].selected = true;

      std::lock_guard<std::mutex> lock(cells_mutex);
      for (auto& c : cells) report.cells.push_back(std::move(c));
    }
  }

  // aggregate per label, in plan order
  std::vector<std::string> label_order;
  for (const auto& row : plan.rows)
    if (std::find(label_order.begin(), label_order.end(), row.label) ==
        label_order.end())
      label_order.push_back(row.label);

  report.oracle_mean = mean_of(report.oracle_per_path);
  report.oracle_std = std_of(report.oracle_per_path, report.oracle_mean);

  for (const auto& label : label_order) {
    std::vector<double> test_mses;
    for (const auto& cell : report.cells)
      if (cell.selected && cell.model_label == label)
        test_mses.push_back(cell.test_mse);
    if (test_mses.empty()) continue;  // every cell of this label failed
    ReportRow row;
    row.label = label;
    row.mean_mse = mean_of(test_mses);
    row.stddev_mse = std_of(test_mses, row.mean_mse);
    row.rel_diff = (row.mean_mse - report.oracle_mean) / report.oracle_mean;
    report.rows.push_back(std::move(row));
  }
  ReportRow oracle_row;
  oracle_row.label = kLabelOracle;
  oracle_row.mean_mse = report.oracle_mean;
  oracle_row.stddev_mse = report.oracle_std;
  oracle_row.rel_diff = 0.0;
  report.rows.push_back(std::move(oracle_row));

  write_report_csvs(report, out_dir);
  return report;
}

void write_report_csvs(const CompareReport& report,
                       const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    const auto file = out_dir / "summary.csv";
    const std::filesystem::path tmp = file.string() + ".tmp";
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + file.string());
    out << "label,mean_test_mse,stddev_across_paths,rel_diff_vs_minimum\n";
    for (const auto& row : report.rows)
      out << csv_quote(row.label) << ',' << format_g(row.mean_mse) << ','
          << format_g(row.stddev_mse) << ',' << format_g(row.rel_diff) << '\n';
    out.close();
    std::filesystem::rename(tmp, file);
  }
  {
    const auto file = out_dir / "cells.csv";
    const std::filesystem::path tmp = file.string() + ".tmp";
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + file.string());
    out << "pair,replicate,path_seed,model_label,lambda,lr,train_seed,"
           "config_hash,checkpoint,best_epoch,epochs_run,val_mse,test_mse,"
           "oracle_mse,selected,error\n";
    for (const auto& c : report.cells) {
      out << csv_quote(c.pair_label) << ',' << c.replicate << ',' << c.path_seed
          << ',' << csv_quote(c.model_label) << ',' << c.lambda_factor << ','
          << format_g(c.learning_rate) << ',' << c.train_seed << ','
          << c.config_hash << ',' << c.checkpoint_path << ',' << c.best_epoch
          << ',' << c.epochs_run << ',' << format_g(c.val_mse) << ','
          << format_g(c.test_mse) << ',' << format_g(c.oracle_mse) << ','
          << (c.selected ? 1 : 0) << ',' << csv_quote(c.error) << '\n';
    }
    out.close();
    std::filesystem::rename(tmp, file);
  }
}

std::string report_table_text(const CompareReport& report) {
  std::ostringstream out;
  std::size_t width = 0;
  for (const auto& row : report.rows) width = std::max(width, row.label.size());
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-*s  %12s  %10s  %12s\n",
                static_cast<int>(width), "Model", "MSE", "Std(paths)",
                "Rel. diff");
  out << buf;
  for (const auto& row : report.rows) {
    if (row.label == kLabelOracle) {
      std::snprintf(buf, sizeof buf, "%-*s  %12.4f  %10.4f  %12s\n",
                    static_cast<int>(width), row.label.c_str(), row.mean_mse,
                    row.stddev_mse, "-");
    } else {
      std::snprintf(buf, sizeof buf, "%-*s  %12.4f  %10.4f  %11.2f%%\n",
                    static_cast<int>(width), row.label.c_str(), row.mean_mse,
                    row.stddev_mse, 100.0 * row.rel_diff);
    }
    out << buf;
  }
  return out.str();
}

}  // namespace mgrn
