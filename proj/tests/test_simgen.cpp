#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mgrn/errors.hpp"
#include "mgrn/simgen.hpp"

using namespace mgrn;

TEST_CASE("g_transform: frozen cases") {
  CHECK(g_transform(0.0, 3.0, 7.0) == 0.0);
  CHECK(g_transform(0.0, 0.0, 0.0) == 0.0);  // 0^0 convention only shows at omega=0
  CHECK(g_transform(1.0, 1.0, 1.0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(g_transform(-1.0, std::exp(1.0), 1.0) ==
        doctest::Approx(-1.3419698602928607).epsilon(1e-15));
}

TEST_CASE("ar5_step: frozen cases") {
  ArState s;
  s.mu = 0.4;
  CHECK(ar5_step(s, 0.0) == 0.4);

  s.mu = 0.0;
  s.history = {1, 1, 1, 1, 1};
  CHECK(ar5_step(s, 0.0) == doctest::Approx(0.7).epsilon(1e-15));

  s.mu = 0.1;
  s.history = {1, 2, 3, 4, 5};
  CHECK(ar5_step(s, 0.05) == doctest::Approx(1.65).epsilon(1e-14));

  SUBCASE("push shifts the history") {
    s.push(9.0);
    CHECK(s.history[0] == 9.0);
    CHECK(s.history[1] == 1.0);
    CHECK(s.history[4] == 4.0);
  }
}

TEST_CASE("lookup_constants: reference constant rows and unknown-ticker error") {
  const SimConstants& aapl = lookup_constants("AAPL");
  CHECK(aapl.mu_alpha == 0.008);
  CHECK(aapl.mu_log_beta == -1.024);
  CHECK(aapl.mu_log_u_m == 0.000);
  CHECK(aapl.mu_log_v_m == 0.175);
  CHECK(aapl.mu_log_gamma == -0.840);
  CHECK(aapl.mu_log_u == 0.215);
  CHECK(aapl.mu_log_v == 0.159);

  const SimConstants& nke = lookup_constants("NKE");
  CHECK(nke.mu_log_u == 0.347);
  CHECK(nke.mu_log_v == 0.297);

  CHECK_THROWS_AS(lookup_constants("ZZZZ"), UnknownTickerError);
  try {
    lookup_constants("ZZZZ");
  } catch (const UnknownTickerError& e) {
    CHECK(std::string(e.what()).find("AAPL") != std::string::npos);
  }
}

TEST_CASE("the ten benchmark pairs") {
  const auto& pairs = benchmark_pairs();
  REQUIRE(pairs.size() == 10);
  CHECK(pairs[0] == std::pair<std::string, std::string>{"IBM", "KO"});
  CHECK(pairs[1] == std::pair<std::string, std::string>{"BA", "CAT"});
  CHECK(pairs[2] == std::pair<std::string, std::string>{"DWDP", "JNJ"});
  CHECK(pairs[3] == std::pair<std::string, std::string>{"CVX", "PG"});
  CHECK(pairs[4] == std::pair<std::string, std::string>{"IBM", "JNJ"});
  CHECK(pairs[5] == std::pair<std::string, std::string>{"NKE", "WMT"});
  CHECK(pairs[6] == std::pair<std::string, std::string>{"BA", "PG"});
  CHECK(pairs[7] == std::pair<std::string, std::string>{"INTC", "KO"});
  CHECK(pairs[8] == std::pair<std::string, std::string>{"AAPL", "NKE"});
  CHECK(pairs[9] == std::pair<std::string, std::string>{"MMM", "DIS"});
  for (const auto& [a, b] : pairs) {
    CHECK_NOTHROW(lookup_constants(a));
    CHECK_NOTHROW(lookup_constants(b));
  }
}

TEST_CASE("companion spectral radius") {
  // frozen value from an independent polynomial-root routine
  CHECK(ar_companion_spectral_radius() ==
        doctest::Approx(0.8725305586232666).epsilon(1e-9));

  const double zeros[5] = {0, 0, 0, 0, 0};
  CHECK(ar_companion_spectral_radius(zeros) == 0.0);
  const double ar1[5] = {0.5, 0, 0, 0, 0};
  CHECK(ar_companion_spectral_radius(ar1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("generate_path: determinism, positivity, target identity") {
  const SimPath a = generate_path("IBM", "KO", 500, 7, 100);
  const SimPath b = generate_path("IBM", "KO", 500, 7, 100);
  CHECK(a.data == b.data);

  const SimPath c = generate_path("IBM", "KO", 500, 8, 100);
  CHECK(a.data != c.data);

  for (std::size_t t = 0; t < a.steps; ++t) {
    for (int col = 2; col < kInputColumns; ++col) {
      if (col == 2 || col == 9) continue;  // alpha columns may take any sign
      CHECK(a.value(t, col) > 0.0);
    }
    const double product = 100.0 * a.value(t, 0) * a.value(t, 1);
    const double scale = std::max(std::abs(product), 1e-30);
    CHECK(std::abs(a.target(t) - product) / scale < 1e-12);
  }

  CHECK_THROWS_AS(generate_path("ZZZZ", "KO", 500, 7), UnknownTickerError);
  CHECK_THROWS_AS(generate_path("IBM", "KO", 5, 7), ShapeError);
}

TEST_CASE("generate_path: empirical log-parameter means match the stationary oracle") {
  // stationary mean of each AR process is mu_p / (1 - 0.9 + 0.8 - 0.7 + 0.6 - 0.5)
  const std::size_t steps = 100000;
  const SimPath path = generate_path("IBM", "KO", steps, 12345);
  const auto m1 = lookup_constants("IBM").mus();
  const auto m2 = lookup_constants("KO").mus();

  const std::size_t batches = 100;
  const std::size_t batch_len = steps / batches;
  for (int p = 0; p < kParamProcesses; ++p) {
    const double mu = p < 7 ? m1[p] : m2[p - 7];
    const double expected = mu / 0.3;
    const bool log_process = (p % 7) != 0;
    const int col = 2 + p;

    // batch means give a serial-correlation-robust standard error
    double grand = 0.0;
    std::vector<double> batch_mean(batches, 0.0);
    for (std::size_t bi = 0; bi < batches; ++bi) {
      double acc = 0.0;
      for (std::size_t t = bi * batch_len; t < (bi + 1) * batch_len; ++t) {
        const double v = path.value(t, col);
        acc += log_process ? std::log(v) : v;
      }
      batch_mean[bi] = acc / static_cast<double>(batch_len);
      grand += batch_mean[bi];
    }
    grand /= static_cast<double>(batches);
    double var = 0.0;
    for (double bm : batch_mean) var += (bm - grand) * (bm - grand);
    var /= static_cast<double>(batches - 1);
    const double se = std::sqrt(var / static_cast<double>(batches));

    CAPTURE(p);
    CHECK(std::abs(grand - expected) < 5.0 * se);
  }
}

TEST_CASE("generate_path: shared market factor couples the series") {
  const SimPath path = generate_path("IBM", "KO", 100000, 5);
  double my1 = 0, my2 = 0;
  for (std::size_t t = 0; t < path.steps; ++t) {
    my1 += path.value(t, 0);
    my2 += path.value(t, 1);
  }
  my1 /= static_cast<double>(path.steps);
  my2 /= static_cast<double>(path.steps);
  double c11 = 0, c22 = 0, c12 = 0;
  for (std::size_t t = 0; t < path.steps; ++t) {
    const double d1 = path.value(t, 0) - my1;
    const double d2 = path.value(t, 1) - my2;
    c11 += d1 * d1;
    c22 += d2 * d2;
    c12 += d1 * d2;
  }
  const double corr = c12 / std::sqrt(c11 * c22);
  CHECK(corr > 0.02);  // sample SE at this length is ~0.003
}

TEST_CASE("path CSV round-trip") {
  const SimPath path = generate_path("AAPL", "NKE", 200, 99, 50);
  const auto file = std::filesystem::temp_directory_path() / "mgrn_test_path.csv";
  write_path_csv(path, file);
  const SimPath back = read_path_csv(file);
  CHECK(back.steps == path.steps);
  CHECK(back.data == path.data);  // %.17g round-trips doubles exactly
  CHECK(back.ticker1 == "AAPL");
  CHECK(back.ticker2 == "NKE");
  CHECK(back.seed == 99);
  CHECK(back.burn_in == 50);
  std::filesystem::remove(file);

  CHECK_THROWS_AS(read_path_csv("/nonexistent/x.csv"), IoError);
}

TEST_CASE("column names and benchmark groupings") {
  const auto names = column_names();
  REQUIRE(names.size() == 17);
  CHECK(names[0] == "y1");
  CHECK(names[1] == "y2");
  CHECK(names[2] == "alpha1");
  CHECK(names[16] == "target");
  CHECK(column_index("gamma2") == 13);
  CHECK_THROWS_AS(column_index("nope"), ParseError);

  const GroupingScheme two = two_group_split();
  CHECK(two.group_count() == 2);
  CHECK(two.group_size(0) == 8);
  CHECK(two.group_size(1) == 8);
  // y1 lives with the series-1 parameters
  CHECK(two.group(0) == std::vector<int>{0, 2, 3, 4, 5, 6, 7, 8});
  CHECK(total_split_16().group_count() == 16);
}
