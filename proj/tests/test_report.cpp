#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bma/report.hpp"
#include "bma/synthetic.hpp"

using namespace bma;

TEST_CASE("classify_evidence") {
  SUBCASE("probe values") {
    CHECK(classify_evidence(0.995) == EvidenceClass::Decisive);
    CHECK(classify_evidence(0.961) == EvidenceClass::Strong);
    CHECK(classify_evidence(0.96) == EvidenceClass::Strong);
    CHECK(classify_evidence(0.80) == EvidenceClass::Positive);
    CHECK(classify_evidence(0.75) == EvidenceClass::Weak);   // boundary -> lower class
    CHECK(classify_evidence(0.50) == EvidenceClass::Weak);
    CHECK(classify_evidence(0.95) == EvidenceClass::Positive);
    CHECK(classify_evidence(0.99) == EvidenceClass::Strong);
    CHECK(classify_evidence(1.0) == EvidenceClass::Decisive);
    CHECK(classify_evidence(0.0) == EvidenceClass::Weak);
  }
  SUBCASE("monotone in the PIP") {
    EvidenceClass prev = EvidenceClass::Weak;
    for (int i = 0; i <= 1000; ++i) {
      const EvidenceClass c = classify_evidence(i / 1000.0);
      CHECK(static_cast<int>(c) >= static_cast<int>(prev));
      prev = c;
    }
  }
  SUBCASE("out of range is an error") {
    CHECK_THROWS_AS(classify_evidence(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(classify_evidence(1.1), std::invalid_argument);
    CHECK_THROWS_AS(classify_evidence(std::nan("")), std::invalid_argument);
  }
}

TEST_CASE("render_table") {
  SUBCASE("sorting, markers and classes") {
    std::vector<ReportRow> rows;
    rows.push_back({"youth_population", true, 0.893, -0.687, 0.353});
    rows.push_back({"arable_land", false, 0.961, 0.156, 0.054});
    rows.push_back({"fdi", true, 0.283, -0.097, 0.256});
    const std::string table = render_table(rows, "Second stage");
    std::istringstream in(table);
    std::string l0, l1, l2, l3, l4;
    std::getline(in, l0);
    std::getline(in, l1);  // header
    std::getline(in, l2);
    std::getline(in, l3);
    std::getline(in, l4);
    CHECK(l2.find("arable_land") != std::string::npos);     // highest PIP first
    CHECK(l2.find("►") != std::string::npos);          // > 0.75 marker
    CHECK(l2.find('*') == std::string::npos);               // exogenous
    CHECK(l2.find("Strong") != std::string::npos);
    CHECK(l2.find("0.961") != std::string::npos);
    CHECK(l3.find("youth_population *") != std::string::npos);
    CHECK(l3.find("Positive") != std::string::npos);
    CHECK(l4.find("fdi *") != std::string::npos);
    CHECK(l4.find("►") == std::string::npos);
    CHECK(l4.find("Weak") != std::string::npos);
  }

  SUBCASE("empty summary renders header only") {
    const std::string table = render_table({}, "Second stage");
    CHECK(table.find("variable") != std::string::npos);
    CHECK(table.find("PIP") != std::string::npos);
  }

  SUBCASE("equal PIPs keep the incoming order") {
    std::vector<ReportRow> rows;
    rows.push_back({"first_in_roster", false, 0.5, 1.0, 0.1});
    rows.push_back({"second_in_roster", false, 0.5, 2.0, 0.1});
    const std::string table = render_table(rows, "t");
    CHECK(table.find("first_in_roster") < table.find("second_in_roster"));
  }

  SUBCASE("numbers round trip at three decimals") {
    std::vector<ReportRow> rows;
    rows.push_back({"v1", false, 0.4567499, 1.23456, 0.98765});
    const std::string table = render_table(rows, "t");
    double pip = 0, mean = 0, sd = 0;
    std::istringstream in(table);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    std::getline(in, line);
    std::istringstream row(line);
    std::string name;
    row >> name >> pip >> mean >> sd;
    CHECK(pip == doctest::Approx(0.457).epsilon(1e-12));
    CHECK(mean == doctest::Approx(1.235).epsilon(1e-12));
    CHECK(sd == doctest::Approx(0.988).epsilon(1e-12));
  }
}

namespace {

IvbmaResult small_ivbma_run(long iterations, long burn_in, int thinning) {
  SyntheticConfig cfg;
  cfg.n = 150;
  cfg.k = 4;
  cfg.true_mask = InclusionMask::from_bits(1, 4);
  cfg.true_coefficients = {1.0};
  cfg.seed = 44;
  SyntheticConfig::Endogeneity endo;
  endo.p = 1;
  endo.sigma = Matrix(2, 2);
  endo.sigma(0, 0) = 1.0;
  endo.sigma(1, 1) = 1.0;
  endo.sigma(0, 1) = endo.sigma(1, 0) = 0.5;
  endo.instrument_strength = 0.9;
  cfg.endogeneity = endo;
  const DesignMatrices design = generate_endogenous(cfg);
  IvbmaConfig ic;
  ic.iterations = iterations;
  ic.burn_in = burn_in;
  ic.thinning = thinning;
  ic.seed = 99;
  return run_ivbma(design, PriorConfig{}, ic);
}

long count_lines(const std::string& path) {
  std::ifstream in(path);
  long n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("export_draws") {
  namespace fs = std::filesystem;
  const std::string dir = (fs::temp_directory_path() / "bma_draws_test").string();
  const std::vector<std::string> second{"x1", "w1", "w2", "w3"};
  const std::vector<std::string> first{"x1_lag", "w1", "w2", "w3"};
  const std::vector<std::string> endo{"x1"};

  SUBCASE("thinning 10 over 1000 kept iterations gives 100 rows per variable") {
    const IvbmaResult r = small_ivbma_run(1500, 500, 10);
    CHECK(r.draws.count == 100);
    export_draws(r, second, first, endo, dir);
    // header + 100 rows x (4 slopes + intercept + 3 sigma entries)
    CHECK(count_lines(dir + "/second_stage_draws.csv") == 1 + 100 * (5 + 3));
    CHECK(count_lines(dir + "/first_stage_x1_draws.csv") == 1 + 100 * 5);
  }

  SUBCASE("zero retained draws still writes the header") {
    IvbmaResult r = small_ivbma_run(1500, 500, 10);
    r.draws = DrawStore{};
    r.draws.second_dim = 5;
    r.draws.sigma_dim = 2;
    export_draws(r, second, first, endo, dir);
    CHECK(count_lines(dir + "/second_stage_draws.csv") == 1);
  }

  SUBCASE("draw sample mean sits near the reported posterior mean") {
    const IvbmaResult r = small_ivbma_run(30000, 5000, 5);
    export_draws(r, second, first, endo, dir);
    // recompute the x1 coefficient mean from the exported file
    std::ifstream in(dir + "/second_stage_draws.csv");
    std::string line;
    std::getline(in, line);
    double acc = 0.0;
    std::vector<double> values;
    while (std::getline(in, line)) {
      if (line.find(",x1,") == std::string::npos) continue;
      const double v = std::stod(line.substr(line.rfind(',') + 1));
      values.push_back(v);
      acc += v;
    }
    REQUIRE(values.size() == static_cast<std::size_t>(r.draws.count));
    const double mean = acc / static_cast<double>(values.size());
    // batch-means standard error to respect chain autocorrelation
    const std::size_t batches = 50;
    const std::size_t len = values.size() / batches;
    double bvar = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      double bm = 0.0;
      for (std::size_t i = 0; i < len; ++i) bm += values[b * len + i];
      bm /= static_cast<double>(len);
      bvar += (bm - mean) * (bm - mean);
    }
    bvar /= static_cast<double>(batches - 1);
    const double se = std::sqrt(bvar / static_cast<double>(batches));
    CHECK(std::abs(mean - r.second_stage.post_mean[0]) <= 3.0 * se + 1e-4);
  }
}
