#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mgrn/grouping.hpp"

namespace mgrn {

// AR(5) recursion shared by every parameter process:
//   p(t) = mu + 0.9 p(t-1) - 0.8 p(t-2) + 0.7 p(t-3) - 0.6 p(t-4) + 0.5 p(t-5) + eps
// with eps ~ N(0, 0.01).
inline constexpr std::array<double, 5> kArCoeffs = {0.9, -0.8, 0.7, -0.6, 0.5};
inline constexpr double kArNoiseStd = 0.1;
inline constexpr double kTailScaleA = 4.0;
inline constexpr int kParamProcesses = 14;  // 7 per series, 2 series
inline constexpr int kInputColumns = 16;    // y1, y2 + the 14 parameter series

/// Constant terms of the seven parameter processes of one series.
struct SimConstants {
  std::string ticker;
  double mu_alpha;
  double mu_log_beta;
  double mu_log_u_m;
  double mu_log_v_m;
  double mu_log_gamma;
  double mu_log_u;
  double mu_log_v;

  /// In latent order: alpha, log beta, log u_M, log v_M, log gamma, log u, log v.
  std::array<double, 7> mus() const {
    return {mu_alpha, mu_log_beta, mu_log_u_m, mu_log_v_m,
            mu_log_gamma, mu_log_u, mu_log_v};
  }
};

/// Throws UnknownTickerError (message lists the known tickers).
const SimConstants& lookup_constants(std::string_view ticker);

/// The ten benchmark ticker pairs.
const std::vector<std::pair<std::string, std::string>>& benchmark_pairs();

/// Rolling 5-step history of one parameter process.
struct ArState {
  std::array<double, 5> history{};  // history[0] = p(t-1) ... history[4] = p(t-5)
  double mu = 0.0;

  void push(double value) {
    for (int j = 4; j > 0; --j) history[j] = history[j - 1];
    history[0] = value;
  }
};

/// mu + sum_j coeff_j * p(t-j) + eps.
double ar5_step(const ArState& s, double eps);

/// g(omega; u, v) = omega * (u^omega / A + v^-omega / A + 1), A = 4.
/// 0^0 is taken as 1 (continuity at omega = 0).
double g_transform(double omega, double u, double v);

/// Largest root magnitude of the AR companion polynomial
/// lambda^5 - c1 lambda^4 - ... - c5. Defaults to the fixed coefficients.
double ar_companion_spectral_radius(std::span<const double> coeffs = kArCoeffs);

/// One generated path. Column order (fixed, interchange-stable):
///   y1 y2 alpha1 beta1 uM1 vM1 gamma1 u1 v1
///         alpha2 beta2 uM2 vM2 gamma2 u2 v2 target
/// The parameter columns hold the exponentiated (positive) values; target is
/// 100*y1*y2. Per step the generator draws 14 AR noises in latent column
/// order, then omega_M, omega_1, omega_2 (burn-in steps draw only the 14).
struct SimPath {
  static constexpr int kColumns = kInputColumns + 1;

  std::size_t steps = 0;
  std::vector<double> data;  // row-major steps x 17
  std::string ticker1, ticker2;
  std::uint64_t seed = 0;
  std::size_t burn_in = 0;

  double value(std::size_t t, int column) const { return data[t * kColumns + column]; }
  double target(std::size_t t) const { return data[t * kColumns + kInputColumns]; }
  const double* row(std::size_t t) const { return data.data() + t * kColumns; }
};

std::span<const std::string_view> column_names();  // 17 names
int column_index(std::string_view name);           // throws ParseError

SimPath generate_path(const std::string& ticker1, const std::string& ticker2,
                      std::size_t steps, std::uint64_t seed,
                      std::size_t burn_in = 1000);

/// CSV with a `# pair=A,B seed=S burn_in=B` metadata comment, a header row,
/// and one data row per step (17 significant digits).
void write_path_csv(const SimPath& path, const std::filesystem::path& file);
SimPath read_path_csv(const std::filesystem::path& file);

/// Benchmark groupings over the 16 input columns.
GroupingScheme two_group_split();  // {y_i together with its 7 parameters}
GroupingScheme total_split_16();

/// Per-input-column affine transform x -> (x - shift[c]) / scale[c].
struct ColumnStats {
  std::vector<double> shift, scale;  // kInputColumns each, or empty
  bool empty() const { return shift.empty(); }
};

/// Copy of the path with normalized input columns (target untouched).
SimPath apply_column_stats(const SimPath& path, const ColumnStats& stats);

}  // namespace mgrn
