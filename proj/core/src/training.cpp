#include "mgrn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mgrn/errors.hpp"
#include "mgrn/rng.hpp"

namespace mgrn {

WindowDataset make_windows(std::shared_ptr<const SimPath> path, int lookback) {
  detail::require(lookback >= 1, "make_windows: lookback must be >= 1");
  detail::require(path && path->steps > static_cast<std::size_t>(lookback),
                  "make_windows: path too short for the lookback");
  WindowDataset ds;
  ds.path = std::move(path);
  ds.lookback = lookback;
  ds.samples.reserve(ds.path->steps - lookback);
  for (std::size_t t = lookback; t < ds.path->steps; ++t) ds.samples.push_back(t);
  return ds;
}

WindowDataset split_dataset(WindowDataset ds, std::array<double, 3> fractions) {
  const double sum = fractions[0] + fractions[1] + fractions[2];
  detail::require(std::abs(sum - 1.0) < 1e-9, "split: fractions must sum to 1");
  for (double f : fractions)
    detail::require(f >= 0.0, "split: fractions must be non-negative");

  const std::size_t steps = ds.path->steps;
  const auto b1 = static_cast<std::size_t>(fractions[0] * static_cast<double>(steps));
  const auto b2 = static_cast<std::size_t>((fractions[0] + fractions[1]) *
                                           static_cast<double>(steps));
  const std::size_t lb = static_cast<std::size_t>(ds.lookback);

  ds.train.clear();
  ds.val.clear();
  ds.test.clear();
  for (std::size_t t : ds.samples) {
    if (t < b1) {
      ds.train.push_back(t);
    } else if (t < b2) {
      if (t >= b1 + lb) ds.val.push_back(t);  // drop boundary-straddling windows
    } else {
      if (t >= b2 + lb) ds.test.push_back(t);
    }
  }
  if (fractions[0] > 0.0 && ds.train.empty())
    throw ShapeError("split: train segment is empty");
  if (fractions[1] > 0.0 && ds.val.empty())
    throw ShapeError("split: validation segment is empty");
  if (fractions[2] > 0.0 && ds.test.empty())
    throw ShapeError("split: test segment is empty");
  return ds;
}

TrainConfig parse_train_config(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(line_no) +
                       ": expected key=value, got '" + line + "'");
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    try {
      if (key == "lr") cfg.learning_rate = std::stod(value);
      else if (key == "batch_size") cfg.batch_size = std::stoi(value);
      else if (key == "max_epochs") cfg.max_epochs = std::stoi(value);
      else if (key == "patience") cfg.patience = std::stoi(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "clip_norm") cfg.clip_norm = std::stod(value);
      else if (key == "lookback") cfg.lookback = std::stoi(value);
      else if (key == "normalize") cfg.normalize = std::stoi(value) != 0;
      else
        throw ParseError("config line " + std::to_string(line_no) +
                         ": unknown key '" + key + "'");
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      throw ParseError("config line " + std::to_string(line_no) +
                       ": bad value '" + value + "' for key '" + key + "'");
    }
  }
  detail::require(cfg.batch_size > 0, "config: batch_size must be positive");
  detail::require(cfg.max_epochs >= 0, "config: max_epochs must be >= 0");
  detail::require(cfg.patience > 0, "config: patience must be positive");
  detail::require(cfg.lookback >= 1, "config: lookback must be >= 1");
  return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_train_config(buf.str());
}

std::string train_config_to_text(const TrainConfig& cfg) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "lr=%.17g\nbatch_size=%d\nmax_epochs=%d\npatience=%d\n"
                "seed=%llu\nclip_norm=%.17g\nlookback=%d\nnormalize=%d\n",
                cfg.learning_rate, cfg.batch_size, cfg.max_epochs, cfg.patience,
                static_cast<unsigned long long>(cfg.seed), cfg.clip_norm,
                cfg.lookback, cfg.normalize ? 1 : 0);
  return buf;
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double learning_rate) {
  if (params.size() != grads.size())
    detail::length_mismatch("adam_step: params vs grads", params.size(), grads.size());
  if (params.size() != state.m.size())
    detail::length_mismatch("adam_step: params vs moments", params.size(),
                            state.m.size());
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

ColumnStats train_input_stats(const WindowDataset& ds) {
  detail::require(!ds.train.empty(), "train_input_stats: empty train split");
  ColumnStats stats;
  stats.shift.assign(kInputColumns, 0.0);
  stats.scale.assign(kInputColumns, 0.0);
  // Over the distinct window rows of the train split: rows [first-lookback,
  // last), which for a contiguous split is every train-visible row.
  const std::size_t row_begin = ds.train.front() - ds.lookback;
  const std::size_t row_end = ds.train.back();
  const double n = static_cast<double>(row_end - row_begin);
  for (std::size_t t = row_begin; t < row_end; ++t)
    for (int c = 0; c < kInputColumns; ++c) stats.shift[c] += ds.path->value(t, c);
  for (int c = 0; c < kInputColumns; ++c) stats.shift[c] /= n;
  for (std::size_t t = row_begin; t < row_end; ++t)
    for (int c = 0; c < kInputColumns; ++c) {
      const double d = ds.path->value(t, c) - stats.shift[c];
      stats.scale[c] += d * d;
    }
  for (int c = 0; c < kInputColumns; ++c)
    stats.scale[c] = std::max(std::sqrt(stats.scale[c] / n), 1e-12);
  return stats;
}

WindowDataset normalize_dataset(const WindowDataset& ds, const ColumnStats& stats) {
  if (stats.empty()) return ds;
  WindowDataset out = ds;
  out.path = std::make_shared<SimPath>(apply_column_stats(*ds.path, stats));
  return out;
}

namespace {

double mse_over(const ModelSpec& spec, const ParamLayout& layout,
                std::span<const double> params, const WindowDataset& ds,
                const std::vector<std::size_t>& targets) {
  detail::require(!targets.empty(), "evaluate: empty split");
  double acc = 0.0;
  for (std::size_t t : targets) {
    const double err =
        forward_window(spec, layout, params, ds.window(t)) - ds.target(t);
    acc += err * err;
  }
  return acc / static_cast<double>(targets.size());
}

}  // namespace

double evaluate(const ModelSpec& spec, std::span<const double> params,
                const WindowDataset& ds, Split split) {
  return mse_over(spec, ParamLayout(spec), params, ds, ds.split(split));
}

double evaluate_checkpoint(const Checkpoint& ck, const WindowDataset& ds,
                           Split split) {
  if (ck.normalization.empty()) return evaluate(ck.spec, ck.params, ds, split);
  const WindowDataset normalized = normalize_dataset(ds, ck.normalization);
  return evaluate(ck.spec, ck.params, normalized, split);
}

TrainResult train(const ModelSpec& spec, const WindowDataset& ds,
                  const TrainConfig& cfg,
                  const std::vector<double>* initial_params) {
  spec.validate();
  detail::require(!ds.train.empty() && !ds.val.empty(),
                  "train: needs non-empty train and validation splits");
  detail::require(ds.lookback == cfg.lookback,
                  "train: dataset lookback differs from config lookback");

  const ParamLayout layout(spec);
  TrainResult result;
  result.best.spec = spec;

  ColumnStats stats;
  const WindowDataset* data = &ds;
  WindowDataset normalized;
  if (cfg.normalize) {
    stats = train_input_stats(ds);
    normalized = normalize_dataset(ds, stats);
    data = &normalized;
    result.best.normalization = stats;
  }

  std::vector<double> params;
  if (initial_params) {
    if (initial_params->size() != layout.total_size())
      detail::length_mismatch("train: initial params vs layout",
                              initial_params->size(), layout.total_size());
    params = *initial_params;
  } else {
    params = init_params(spec, RngStream(cfg.seed).derive(1));
  }

  result.best.params = params;
  result.best_epoch = 0;
  result.best_val_mse = std::numeric_limits<double>::infinity();

  AdamState adam(layout.total_size());
  std::vector<double> grad(layout.total_size(), 0.0);
  std::vector<std::size_t> order = data->train;
  int epochs_without_improvement = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();

    RngStream shuffle_stream = RngStream(cfg.seed).derive(1000 + epoch);
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = shuffle_stream.uniform_index(i);
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss_sum = 0.0;
    const std::size_t n_train = order.size();
    for (std::size_t begin = 0; begin < n_train; begin += cfg.batch_size) {
      const std::size_t end = std::min(begin + cfg.batch_size, n_train);
      const double batch_n = static_cast<double>(end - begin);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t t = order[i];
        const double pred = backward_window(spec, layout, params,
                                            data->window(t), data->target(t), grad);
        const double err = pred - data->target(t);
        epoch_loss_sum += err * err;
      }
      for (double& g : grad) g /= batch_n;
      if (cfg.clip_norm > 0.0) {
        double norm_sq = 0.0;
        for (double g : grad) norm_sq += g * g;
        const double norm = std::sqrt(norm_sq);
        if (norm > cfg.clip_norm) {
          const double scale = cfg.clip_norm / norm;
          for (double& g : grad) g *= scale;
        }
      }
      adam_step(params, grad, adam, cfg.learning_rate);
    }

    const double train_mse = epoch_loss_sum / static_cast<double>(n_train);
    const double val_mse = mse_over(spec, layout, params, *data, data->val);
    if (!std::isfinite(train_mse) || !std::isfinite(val_mse))
      throw DivergenceError("train: loss diverged at epoch " +
                            std::to_string(epoch),
                            epoch);

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    result.history.push_back({epoch, train_mse, val_mse, wall});

    if (val_mse < result.best_val_mse) {
      result.best_val_mse = val_mse;
      result.best_epoch = epoch;
      result.best.params = params;
      epochs_without_improvement = 0;
    } else if (++epochs_without_improvement >= cfg.patience) {
      break;
    }
  }
  return result;
}

void write_history_csv(const std::vector<EpochStats>& history,
                       const std::filesystem::path& file) {
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + file.string());
    out << "epoch,train_mse,val_mse,wall_seconds\n";
    char buf[96];
    for (const auto& row : history) {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.6f\n", row.epoch,
                    row.train_mse, row.val_mse, row.wall_seconds);
      out << buf;
    }
    if (!out) throw IoError("write failed for " + file.string());
  }
  std::filesystem::rename(tmp, file);
}

}  // namespace mgrn
