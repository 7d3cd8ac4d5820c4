#include "mgrn/simgen.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>

#include "mgrn/errors.hpp"
#include "mgrn/rng.hpp"

namespace mgrn {

namespace {

const std::vector<SimConstants>& constants_table() {
  static const std::vector<SimConstants> table = {
      {"AAPL", 0.008, -1.024, 0.000, 0.175, -0.840, 0.215, 0.159},
      {"BA", -0.007, -1.026, 0.183, 0.182, -0.842, 0.164, 0.120},
      {"CAT", 0.020, -0.975, 0.000, 0.202, -0.847, 0.199, 0.153},
      {"CVX", 0.011, -1.021, 0.000, 0.193, -0.849, 0.172, 0.138},
      {"DIS", 0.002, -1.001, 0.156, 0.214, -0.862, 0.196, 0.151},
      {"DWDP", -0.007, -0.994, 0.176, 0.186, -0.866, 0.198, 0.141},
      {"IBM", 0.021, -0.942, 0.000, 0.198, -0.886, 0.218, 0.178},
      {"INTC", 0.012, -0.948, 0.000, 0.149, -0.873, 0.168, 0.141},
      {"JNJ", -0.003, -1.012, 0.189, 0.210, -0.858, 0.227, 0.160},
      {"KO", 0.007, -0.979, 0.117, 0.198, -0.856, 0.208, 0.153},
      {"MMM", 0.001, -0.964, 0.186, 0.198, -0.862, 0.199, 0.161},
      {"NKE", -0.002, -0.995, 0.267, 0.200, -0.793, 0.347, 0.297},
      {"PG", 0.010, -0.979, 0.096, 0.201, -0.844, 0.210, 0.161},
      {"WMT", -0.007, -0.984, 0.183, 0.142, -0.871, 0.181, 0.146},
  };
  return table;
}

constexpr std::string_view kColumnNames[SimPath::kColumns] = {
    "y1", "y2", "alpha1", "beta1", "uM1", "vM1", "gamma1", "u1", "v1",
    "alpha2", "beta2", "uM2", "vM2", "gamma2", "u2", "v2", "target"};

// Latent processes 2..15 map to path columns 2..15; all but alpha are logs.
bool is_log_process(int p) { return p % 7 != 0; }

void format_double(char* buf, std::size_t n, double v) {
  std::snprintf(buf, n, "%.17g", v);
}

}  // namespace

const SimConstants& lookup_constants(std::string_view ticker) {
  for (const auto& row : constants_table())
    if (row.ticker == ticker) return row;
  std::string known;
  for (const auto& row : constants_table()) {
    if (!known.empty()) known += ", ";
    known += row.ticker;
  }
  throw UnknownTickerError("unknown ticker '" + std::string(ticker) +
                           "'; known tickers: " + known);
}

const std::vector<std::pair<std::string, std::string>>& benchmark_pairs() {
  static const std::vector<std::pair<std::string, std::string>> pairs = {
      {"IBM", "KO"},  {"BA", "CAT"},  {"DWDP", "JNJ"}, {"CVX", "PG"},
      {"IBM", "JNJ"}, {"NKE", "WMT"}, {"BA", "PG"},    {"INTC", "KO"},
      {"AAPL", "NKE"}, {"MMM", "DIS"}};
  return pairs;
}

double ar5_step(const ArState& s, double eps) {
  double acc = s.mu + eps;
  for (int j = 0; j < 5; ++j) acc += kArCoeffs[j] * s.history[j];
  return acc;
}

double g_transform(double omega, double u, double v) {
  if (omega == 0.0) return 0.0;  // the 0^0 convention only matters here
  return omega * (std::pow(u, omega) / kTailScaleA +
                  std::pow(v, -omega) / kTailScaleA + 1.0);
}

double ar_companion_spectral_radius(std::span<const double> coeffs) {
  // Durand-Kerner on the monic polynomial l^d - c1 l^(d-1) - ... - cd.
  detail::require(!coeffs.empty(), "spectral radius: empty coefficient vector");
  // Trailing zero coefficients only contribute exact zero roots; strip them
  // so repeated roots at the origin cannot smear the iteration.
  int d = static_cast<int>(coeffs.size());
  while (d > 0 && coeffs[d - 1] == 0.0) --d;
  if (d == 0) return 0.0;
  coeffs = coeffs.first(static_cast<std::size_t>(d));
  using C = std::complex<double>;
  std::vector<C> poly(d + 1);  // poly[j] multiplies l^(d-j)
  poly[0] = 1.0;
  for (int j = 0; j < d; ++j) poly[j + 1] = -coeffs[j];

  auto eval = [&](C x) {
    C acc = poly[0];
    for (int j = 1; j <= d; ++j) acc = acc * x + poly[j];
    return acc;
  };

  std::vector<C> roots(d);
  C seed(0.4, 0.9);
  C power(1.0, 0.0);
  for (int j = 0; j < d; ++j) {
    power *= seed;
    roots[j] = power;
  }
  for (int iter = 0; iter < 500; ++iter) {
    double moved = 0.0;
    for (int j = 0; j < d; ++j) {
      C denom(1.0, 0.0);
      for (int k = 0; k < d; ++k)
        if (k != j) denom *= roots[j] - roots[k];
      const C delta = eval(roots[j]) / denom;
      roots[j] -= delta;
      moved = std::max(moved, std::abs(delta));
    }
    if (moved < 1e-14) break;
  }
  double radius = 0.0;
  for (const C& r : roots) radius = std::max(radius, std::abs(r));
  return radius;
}

std::span<const std::string_view> column_names() {
  return {kColumnNames, SimPath::kColumns};
}

int column_index(std::string_view name) {
  for (int c = 0; c < SimPath::kColumns; ++c)
    if (kColumnNames[c] == name) return c;
  throw ParseError("unknown column '" + std::string(name) + "'");
}

SimPath generate_path(const std::string& ticker1, const std::string& ticker2,
                      std::size_t steps, std::uint64_t seed,
                      std::size_t burn_in) {
  detail::require(steps >= 10, "generate_path: steps must be >= 10");
  const SimConstants& c1 = lookup_constants(ticker1);
  const SimConstants& c2 = lookup_constants(ticker2);

  static std::once_flag stability_checked;
  std::call_once(stability_checked, [] {
    const double radius = ar_companion_spectral_radius();
    if (radius >= 1.0)
      std::fprintf(stderr,
                   "warning: AR(5) companion spectral radius %.6f >= 1, "
                   "parameter processes are non-stationary\n",
                   radius);
  });

  std::array<ArState, kParamProcesses> ar{};
  {
    const auto m1 = c1.mus();
    const auto m2 = c2.mus();
    for (int j = 0; j < 7; ++j) {
      ar[j].mu = m1[j];
      ar[7 + j].mu = m2[j];
    }
  }

  SimPath path;
  path.steps = steps;
  path.data.assign(steps * SimPath::kColumns, 0.0);
  path.ticker1 = ticker1;
  path.ticker2 = ticker2;
  path.seed = seed;
  path.burn_in = burn_in;

  RngStream stream(seed);
  std::array<double, kParamProcesses> latent{};
  const std::size_t total = burn_in + steps;
  for (std::size_t step = 0; step < total; ++step) {
    for (int p = 0; p < kParamProcesses; ++p) {
      const double eps = stream.normal() * kArNoiseStd;
      latent[p] = ar5_step(ar[p], eps);
      ar[p].push(latent[p]);
    }
    if (step < burn_in) continue;

    const double omega_m = stream.normal();
    const double omega_1 = stream.normal();
    const double omega_2 = stream.normal();
    const std::size_t t = step - burn_in;
    double* row = path.data.data() + t * SimPath::kColumns;

    double y[2];
    for (int s = 0; s < 2; ++s) {
      const double* v = latent.data() + 7 * s;
      for (int j = 1; j < 7; ++j) {
        if (v[j] > 700.0)
          throw NumericOverflowError(
              "generate_path: exp overflow in parameter process at emitted "
              "step " + std::to_string(t),
              t);
      }
      const double alpha = v[0];
      const double beta = std::exp(v[1]);
      const double u_m = std::exp(v[2]);
      const double v_m = std::exp(v[3]);
      const double gamma = std::exp(v[4]);
      const double u = std::exp(v[5]);
      const double vv = std::exp(v[6]);
      const double omega_i = (s == 0) ? omega_1 : omega_2;
      y[s] = alpha + beta * g_transform(omega_m, u_m, v_m) +
             gamma * g_transform(omega_i, u, vv);
      row[2 + 7 * s + 0] = alpha;
      row[2 + 7 * s + 1] = beta;
      row[2 + 7 * s + 2] = u_m;
      row[2 + 7 * s + 3] = v_m;
      row[2 + 7 * s + 4] = gamma;
      row[2 + 7 * s + 5] = u;
      row[2 + 7 * s + 6] = vv;
    }
    row[0] = y[0];
    row[1] = y[1];
    row[kInputColumns] = 100.0 * y[0] * y[1];
  }
  return path;
}

void write_path_csv(const SimPath& path, const std::filesystem::path& file) {
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + file.string());
    out << "# pair=" << path.ticker1 << "," << path.ticker2
        << " seed=" << path.seed << " burn_in=" << path.burn_in << "\n";
    for (int c = 0; c < SimPath::kColumns; ++c)
      out << (c ? "," : "") << kColumnNames[c];
    out << "\n";
    char buf[32];
    for (std::size_t t = 0; t < path.steps; ++t) {
      const double* row = path.row(t);
      for (int c = 0; c < SimPath::kColumns; ++c) {
        format_double(buf, sizeof buf, row[c]);
        out << (c ? "," : "") << buf;
      }
      out << "\n";
    }
    if (!out) throw IoError("write failed for " + file.string());
  }
  std::filesystem::rename(tmp, file);
}

SimPath read_path_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read " + file.string());
  SimPath path;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string kv;
      while (meta >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq);
        const std::string value = kv.substr(eq + 1);
        if (key == "pair") {
          const auto comma = value.find(',');
          if (comma != std::string::npos) {
            path.ticker1 = value.substr(0, comma);
            path.ticker2 = value.substr(comma + 1);
          }
        } else if (key == "seed") {
          path.seed = std::stoull(value);
        } else if (key == "burn_in") {
          path.burn_in = std::stoull(value);
        }
      }
      continue;
    }
    if (!saw_header) {
      std::istringstream hs(line);
      std::string name;
      int c = 0;
      while (std::getline(hs, name, ',')) {
        if (c >= SimPath::kColumns || name != kColumnNames[c])
          throw ParseError(file.string() + ": unexpected column '" + name +
                           "' at position " + std::to_string(c));
        ++c;
      }
      if (c != SimPath::kColumns)
        throw ParseError(file.string() + ": expected " +
                         std::to_string(SimPath::kColumns) + " columns, got " +
                         std::to_string(c));
      saw_header = true;
      continue;
    }
    std::istringstream rs(line);
    std::string cell;
    int c = 0;
    while (std::getline(rs, cell, ',')) {
      if (c >= SimPath::kColumns)
        throw ParseError(file.string() + ": too many values in row " +
                         std::to_string(path.steps));
      try {
        path.data.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError(file.string() + ": bad number '" + cell + "'");
      }
      ++c;
    }
    if (c != SimPath::kColumns)
      throw ParseError(file.string() + ": short row " +
                       std::to_string(path.steps));
    ++path.steps;
  }
  if (!saw_header) throw ParseError(file.string() + ": missing header row");
  return path;
}

GroupingScheme two_group_split() {
  return GroupingScheme({{0, 2, 3, 4, 5, 6, 7, 8}, {1, 9, 10, 11, 12, 13, 14, 15}});
}

GroupingScheme total_split_16() { return GroupingScheme::total_split(kInputColumns); }

SimPath apply_column_stats(const SimPath& path, const ColumnStats& stats) {
  if (stats.empty()) return path;
  if (stats.shift.size() != kInputColumns || stats.scale.size() != kInputColumns)
    detail::length_mismatch("apply_column_stats", stats.shift.size(), kInputColumns);
  SimPath out = path;
  for (std::size_t t = 0; t < out.steps; ++t) {
    double* row = out.data.data() + t * SimPath::kColumns;
    for (int c = 0; c < kInputColumns; ++c)
      row[c] = (row[c] - stats.shift[c]) / stats.scale[c];
  }
  return out;
}

}  // namespace mgrn
