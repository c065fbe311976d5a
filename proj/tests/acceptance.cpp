// Acceptance suite: runs every release criterion at its stated tolerance and
// prints one pass/fail line per criterion. Exit status is nonzero when any
// criterion fails.
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bma/dataset.hpp"
#include "bma/ivbma_engine.hpp"
#include "bma/report.hpp"
#include "bma/synthetic.hpp"

using namespace bma;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

DesignMatrices recovery_design(std::uint64_t seed, double sigma12) {
  SyntheticConfig cfg;
  cfg.n = 300;
  cfg.k = 6;  // one endogenous + five noise regressors
  cfg.true_mask = InclusionMask::from_bits(1, 6);
  cfg.true_coefficients = {1.0};
  cfg.seed = seed;
  SyntheticConfig::Endogeneity endo;
  endo.p = 1;
  endo.sigma = Matrix(2, 2);
  endo.sigma(0, 0) = 1.5;
  endo.sigma(1, 1) = 0.5;
  endo.sigma(0, 1) = endo.sigma(1, 0) = sigma12;
  endo.instrument_strength = 0.9;
  cfg.endogeneity = endo;
  return generate_endogenous(cfg);
}

// ---- criterion 1: exact_bma vs the independent brute-force oracle ----------
Outcome criterion_oracle_equivalence() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SyntheticConfig cfg;
    cfg.n = 50;
    cfg.k = 8;
    cfg.true_mask = InclusionMask::from_string("11010000");
    cfg.true_coefficients = {1.0, -0.8, 0.6};
    cfg.seed = seed;
    const RegressionData data = generate_linear(cfg);
    const PriorConfig prior;
    auto [records, engine] = exact_bma(data, prior);
    const PosteriorSummary oracle = brute_force_pips(data.y, data.columns, prior);
    for (int j = 0; j < cfg.k; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      worst = std::max(worst, std::abs(engine.pip[ju] - oracle.pip[ju]));
      worst = std::max(worst, std::abs(engine.post_mean[ju] - oracle.post_mean[ju]));
    }
  }
  return {worst < 1e-8, fmt("max |engine - oracle| = %.2e over 20 instances", worst)};
}

// ---- criterion 2: MC3 tracks exact enumeration at K = 12 -------------------
Outcome criterion_sampler_correctness() {
  SyntheticConfig cfg;
  cfg.n = 100;
  cfg.k = 12;
  cfg.true_mask = InclusionMask::from_string("110000000000");
  cfg.true_coefficients = {1.0, -0.7};
  cfg.seed = 12;
  const RegressionData data = generate_linear(cfg);
  const PriorConfig prior;
  auto [records, exact] = exact_bma(data, prior);
  SamplerConfig sc;
  sc.iterations = 550000;  // 500k kept after the 50k burn-in
  sc.burn_in = 50000;
  sc.seed = 2718;
  const Mc3Result mc3 = mc3_sample(data, prior, sc);
  double worst = 0.0;
  for (std::size_t j = 0; j < exact.pip.size(); ++j)
    worst = std::max(worst, std::abs(mc3.summary.pip[j] - exact.pip[j]));
  return {worst < 0.02, fmt("max |MC3 PIP - exact PIP| = %.4f", worst)};
}

// ---- criterion 3: stationary model distribution at K = 5 -------------------
Outcome criterion_stationarity() {
  SyntheticConfig cfg;
  cfg.n = 90;
  cfg.k = 5;
  cfg.true_mask = InclusionMask::from_string("11000");
  cfg.true_coefficients = {0.8, 0.5};
  cfg.seed = 31;
  const RegressionData data = generate_linear(cfg);
  const PriorConfig prior;
  auto [records, exact] = exact_bma(data, prior);
  SamplerConfig sc;
  sc.iterations = 520000;  // 500k kept draws
  sc.burn_in = 20000;
  sc.seed = 999;
  const Mc3Result mc3 = mc3_sample(data, prior, sc);
  std::map<std::uint64_t, double> freq;
  const double kept = static_cast<double>(sc.iterations - sc.burn_in);
  for (std::size_t t = static_cast<std::size_t>(sc.burn_in); t < mc3.chain.size(); ++t)
    freq[mc3.chain[t]] += 1.0 / kept;
  double tv = 0.0;
  for (const auto& r : records) {
    const auto it = freq.find(r.mask_bits);
    tv += std::abs((it == freq.end() ? 0.0 : it->second) - r.pmp);
  }
  tv /= 2.0;
  return {tv < 0.02, fmt("total variation = %.4f over 32 models", tv)};
}

// ---- criterion 4: endogeneity recovery against the plain-BMA baseline ------
Outcome criterion_endogeneity_recovery() {
  // oracle first: the OLS bias of this family must itself exceed the 0.15
  // deviation threshold (reference_fits Monte Carlo), otherwise asserting
  // the BMA deviation would be meaningless
  double ols_bias = 0.0, tsls_bias = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const DesignMatrices d = recovery_design(seed, 0.7);
    const ReferenceFits f = reference_fits(d.y, d.X, d.W, d.Z);
    ols_bias += std::abs(f.ols_coef[0] - 1.0);
    tsls_bias += std::abs(f.tsls_coef[0] - 1.0);
  }
  ols_bias /= 50.0;
  tsls_bias /= 50.0;
  if (ols_bias < 0.15)
    return {false, fmt("oracle check failed: mean |OLS - 1| = %.3f < 0.15", ols_bias)};

  int pass_count = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const DesignMatrices d = recovery_design(seed, 0.7);
    IvbmaConfig ic;
    ic.iterations = 12000;
    ic.burn_in = 2000;
    ic.seed = seed;
    ic.retain_first_stage_draws = false;
    const IvbmaResult iv = run_ivbma(d, PriorConfig{}, ic);
    auto [records, plain] = exact_bma(second_stage_data(d), PriorConfig{});
    const bool ok = std::abs(iv.second_stage.post_mean[0] - 1.0) <= 0.15 &&
                    iv.second_stage.pip[0] >= 0.9 &&
                    std::abs(plain.post_mean[0] - 1.0) >= 0.15;
    if (ok) ++pass_count;
  }
  return {pass_count >= 45,
          fmt("%d/50 seeds pass (oracle mean |OLS-1| = %.3f, |2SLS-1| = %.3f)",
              pass_count, ols_bias, tsls_bias)};
}

// ---- criterion 5: independence-limit bridge --------------------------------
Outcome criterion_independence_bridge() {
  const DesignMatrices d = recovery_design(77, 0.0);
  IvbmaConfig ic;
  ic.iterations = 120000;
  ic.burn_in = 20000;
  ic.seed = 5;
  ic.retain_first_stage_draws = false;
  const IvbmaResult iv = run_ivbma(d, PriorConfig{}, ic);
  auto [records, plain] = exact_bma(second_stage_data(d), PriorConfig{});
  double worst = 0.0;
  for (std::size_t j = 0; j < plain.pip.size(); ++j)
    worst = std::max(worst, std::abs(iv.second_stage.pip[j] - plain.pip[j]));
  return {worst <= 0.05, fmt("max |IVBMA PIP - BMA PIP| = %.4f", worst)};
}

// ---- criterion 6: every sigma draw symmetric positive definite -------------
Outcome criterion_sigma_validity() {
  const DesignMatrices d = recovery_design(123, 0.7);
  const PriorConfig prior;
  IvbmaSampler sampler(d, prior);
  GibbsState state = sampler.initial_state();
  Rng rng(321);
  long checked = 0;
  for (long t = 0; t < 100000; ++t) {
    sampler.outcome_move(state, rng);
    sampler.first_stage_move(state, 0, rng);
    sampler.sigma_move(state, rng);
    if (state.sigma(0, 1) != state.sigma(1, 0)) return {false, "asymmetric sigma"};
    Matrix chk = state.sigma;
    if (!cholesky(chk))
      return {false, fmt("non-positive-definite sigma at iteration %ld", t)};
    ++checked;
  }
  return {true, fmt("%ld sigma draws symmetric positive definite", checked)};
}

// ---- criterion 7: evidence classification probe set ------------------------
Outcome criterion_classification() {
  const std::vector<std::pair<double, EvidenceClass>> probes = {
      {0.995, EvidenceClass::Decisive}, {0.961, EvidenceClass::Strong},
      {0.96, EvidenceClass::Strong},    {0.80, EvidenceClass::Positive},
      {0.75, EvidenceClass::Weak},      {0.50, EvidenceClass::Weak}};
  for (const auto& [pip, expected] : probes)
    if (classify_evidence(pip) != expected)
      return {false, fmt("classify(%.3f) != %s", pip, to_string(expected))};
  return {true, "probe set {0.995, 0.961, 0.96, 0.80, 0.75, 0.50} classified exactly"};
}

// ---- criterion 8: pipeline fidelity on the footnote-window fixture ---------
Outcome criterion_pipeline_fidelity() {
  std::vector<VariableSpec> specs;
  specs.push_back({"democracy", Role::Outcome, Transform::None, 2001, 2010, "", ""});
  specs.push_back({"gdp_pc", Role::Exogenous, Transform::Log10, 2001, 2010, "", ""});
  specs.push_back({"military_leader", Role::Exogenous, Transform::None, 2001, 2008,
                   "", ""});
  specs.push_back({"state_fragility", Role::Endogenous, Transform::None, 2001, 2010,
                   "", ""});
  specs.push_back({"state_fragility_lag", Role::Instrument, Transform::None, 1995,
                   2000, "state_fragility", ""});
  specs.push_back({"arable_land", Role::Exogenous, Transform::None, 2001, 2010, "", ""});
  const Roster roster(std::move(specs));

  PanelTable panel;
  auto add = [&](const char* c, int y, const char* v, double val) {
    panel.rows.push_back({c, y, v, val});
  };
  const int countries = 10;
  for (int c = 0; c < countries; ++c) {
    char name[8];
    std::snprintf(name, sizeof(name), "C%02d", c);
    // democracy observed for three of the ten window years
    add(name, 2001, "democracy", 10.0 + c);
    add(name, 2004, "democracy", 20.0 + c);
    add(name, 2007, "democracy", 30.0 + c);
    // military leader: alternating 2001-2008 (mean 0.5), plus out-of-window
    // 2009/2010 observations that must be ignored
    for (int y = 2001; y <= 2008; ++y)
      add(name, y, "military_leader", (y % 2 == 0) ? 1.0 : 0.0);
    add(name, 2009, "military_leader", 1.0);
    add(name, 2010, "military_leader", 1.0);
    // fragility instrument: 1995-2000 values 2,4,...,12 (mean 7), with
    // out-of-window 1994 and 2001 rows that must be ignored
    for (int y = 1995; y <= 2000; ++y)
      add(name, y, "state_fragility_lag", 2.0 * (y - 1994));
    add(name, 1994, "state_fragility_lag", 100.0);
    add(name, 2001, "state_fragility_lag", 100.0);
    add(name, 2005, "state_fragility", 6.0 + 0.25 * c);
    add(name, 2003, "gdp_pc", 100.0);  // log10 -> exactly 2
    if (c != 3) add(name, 2002, "arable_land", 15.0 + c);  // C03 dropped
  }

  const CrossSection cs = apply_transforms(decade_average(panel, roster), roster);
  const auto di = *cs.variable_index("democracy");
  const auto mi = *cs.variable_index("military_leader");
  const auto si = *cs.variable_index("state_fragility_lag");
  const auto gi = *cs.variable_index("gdp_pc");
  for (int c = 0; c < countries; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    if (*cs.at(cu, di) != 20.0 + c) return {false, "democracy average mismatch"};
    if (*cs.at(cu, mi) != 0.5) return {false, "military-leader window violated"};
    if (*cs.at(cu, si) != 7.0) return {false, "fragility instrument window violated"};
    if (*cs.at(cu, gi) != 2.0) return {false, "log10 transform mismatch"};
  }

  const BuildResult built = build_design(cs, roster);
  if (built.drop_log.size() != 1 ||
      built.drop_log[0] != "dropped C03: missing arable_land")
    return {false, "drop log mismatch"};
  if (built.design.n() + built.drop_log.size() != cs.countries.size())
    return {false, "drop accounting violated"};
  return {true, "hand-computed averages exact; drop accounting holds"};
}

// ---- criterion 9: byte-identical reruns for every method -------------------
Outcome criterion_determinism() {
  const fs::path root = fs::temp_directory_path() / "bma_acceptance_det";
  fs::remove_all(root);
  fs::create_directories(root);

  const DesignMatrices d = recovery_design(55, 0.5);
  PanelTable panel;
  for (std::size_t i = 0; i < d.n(); ++i) {
    const std::string& c = d.countries[i];
    panel.rows.push_back({c, 2005, "outcome", d.y[i]});
    panel.rows.push_back({c, 2005, "x1", d.X(i, 0)});
    panel.rows.push_back({c, 1995, "x1_lag", d.Z(i, 0)});
    for (int j = 0; j < d.q(); ++j)
      panel.rows.push_back(
          {c, 2005, "w" + std::to_string(j + 1), d.W(i, static_cast<std::size_t>(j))});
  }
  write_panel_csv(panel, (root / "data.csv").string());
  {
    std::ofstream out(root / "roster.json");
    out << R"({"variables": [
      {"name": "outcome", "role": "outcome", "window": [2001, 2010]},
      {"name": "x1", "role": "endogenous", "window": [2001, 2010]},
      {"name": "x1_lag", "role": "instrument", "target": "x1", "window": [1991, 2000]},
      {"name": "w1", "role": "exogenous", "window": [2001, 2010]},
      {"name": "w2", "role": "exogenous", "window": [2001, 2010]},
      {"name": "w3", "role": "exogenous", "window": [2001, 2010]},
      {"name": "w4", "role": "exogenous", "window": [2001, 2010]},
      {"name": "w5", "role": "exogenous", "window": [2001, 2010]}
    ]})";
  }
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  for (const std::string method : {"bma-exact", "bma-mc3", "ivbma"}) {
    RunConfig rc;
    rc.data_path = (root / "data.csv").string();
    rc.roster_path = (root / "roster.json").string();
    rc.method = method;
    rc.iterations = 20000;
    rc.burn_in = 5000;
    rc.thinning = 10;
    rc.seed = 424242;
    rc.out_dir = (root / ("a_" + method)).string();
    run(rc);
    rc.out_dir = (root / ("b_" + method)).string();
    run(rc);
    if (slurp(root / ("a_" + method) / "report.txt") !=
        slurp(root / ("b_" + method) / "report.txt"))
      return {false, "report bytes differ for " + method};
    if (method == "ivbma" &&
        (slurp(root / "a_ivbma" / "second_stage_draws.csv") !=
             slurp(root / "b_ivbma" / "second_stage_draws.csv") ||
         slurp(root / "a_ivbma" / "first_stage_x1_draws.csv") !=
             slurp(root / "b_ivbma" / "first_stage_x1_draws.csv")))
      return {false, "draw files differ for ivbma"};
    if (method == "bma-mc3" &&
        slurp(root / "a_bma-mc3" / "chain.csv") != slurp(root / "b_bma-mc3" / "chain.csv"))
      return {false, "chain export differs for bma-mc3"};
  }
  return {true, "reports, draw files and chain exports byte-identical per method"};
}

// ---- criterion 10: paper-shape run through the CLI --------------------------
Outcome criterion_paper_shape() {
  const char* cli = std::getenv("BMA_CLI");
  if (cli == nullptr) return {false, "BMA_CLI not set"};
  const fs::path root = fs::temp_directory_path() / "bma_acceptance_paper";
  fs::remove_all(root);
  fs::create_directories(root);

  const std::string synth = std::string(cli) +
                            " synth --n 111 --endogenous 16 --exogenous 26 --seed 2" +
                            " --out " + root.string() + " > /dev/null";
  if (std::system(synth.c_str()) != 0) return {false, "fixture generation failed"};

  const std::string cmd = std::string(cli) + " run --data " +
                          (root / "data.csv").string() + " --roster " +
                          (root / "roster.json").string() +
                          " --method ivbma --iterations 3000000 --burn-in 200000" +
                          " --seed 7 --out " + (root / "out").string() + " > /dev/null";
  if (std::system(cmd.c_str()) != 0) return {false, "paper-scale run did not complete"};

  std::ifstream in(root / "out" / "report.txt");
  std::string line;
  long rows = 0;
  bool in_second_stage = false;
  bool saw_columns = false;
  while (std::getline(in, line)) {
    if (line.rfind("Second stage", 0) == 0) {
      in_second_stage = true;
      continue;
    }
    if (!in_second_stage) continue;
    if (line.find("PIP") != std::string::npos &&
        line.find("Post Mean") != std::string::npos &&
        line.find("Post SD") != std::string::npos) {
      saw_columns = true;
      continue;
    }
    if (line.find("marks PIP") != std::string::npos) break;  // footer
    if (line.find("Weak") != std::string::npos ||
        line.find("Positive") != std::string::npos ||
        line.find("Strong") != std::string::npos ||
        line.find("Decisive") != std::string::npos)
      ++rows;
  }
  const bool draws_exist = fs::exists(root / "out" / "second_stage_draws.csv");
  std::ostringstream ms;
  {
    std::ifstream min(root / "out" / "manifest.json");
    ms << min.rdbuf();
  }
  const std::string manifest = ms.str();
  const bool shape_ok = manifest.find("\"n\": 111") != std::string::npos &&
                        manifest.find("\"p\": 16") != std::string::npos &&
                        manifest.find("\"q\": 26") != std::string::npos;
  fs::remove_all(root);  // multi-GB draw export
  if (!saw_columns) return {false, "column header missing"};
  if (rows != 42) return {false, fmt("second-stage table has %ld rows, wanted 42", rows)};
  if (!draws_exist) return {false, "draw export missing"};
  if (!shape_ok) return {false, "manifest shape mismatch (wanted n=111, p=16, q=26)"};
  return {true, "3M-iteration run completed; 42-row table with evidence classes"};
}

struct Criterion {
  const char* label;
  std::function<Outcome()> fn;
  double budget_seconds;  // 0 = unbounded
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"1. oracle equivalence (exact vs brute force, 1e-8)",
       criterion_oracle_equivalence, 30.0},
      {"2. sampler correctness (MC3 vs exact, K=12, 0.02)",
       criterion_sampler_correctness, 120.0},
      {"3. stationarity (K=5 model distribution, TV 0.02)", criterion_stationarity,
       60.0},
      {"4. endogeneity recovery (50 seeds, 90% pass)", criterion_endogeneity_recovery,
       300.0},
      {"5. independence-limit bridge (PIP gap <= 0.05)", criterion_independence_bridge,
       120.0},
      {"6. sigma validity (100k iterations, SPD)", criterion_sigma_validity, 60.0},
      {"7. classification exactness (probe set)", criterion_classification, 0.0},
      {"8. pipeline fidelity (footnote windows, drop accounting)",
       criterion_pipeline_fidelity, 1.0},
      {"9. determinism (byte-identical reruns per method)", criterion_determinism, 0.0},
      {"10. paper-shape replication (3M iterations, 42-row table)",
       criterion_paper_shape, 0.0},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const double t0 = now_seconds();
    Outcome r;
    try {
      r = c.fn();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = now_seconds() - t0;
    bool in_budget = c.budget_seconds <= 0.0 || elapsed <= c.budget_seconds;
    if (!in_budget) r.pass = false;
    std::printf("[%s] %s: %s (%.1f s%s)\n", r.pass ? "PASS" : "FAIL", c.label,
                r.detail.c_str(), elapsed,
                in_budget ? "" : fmt(", over the %.0f s budget", c.budget_seconds).c_str());
    std::fflush(stdout);
    if (!r.pass) ++failures;
  }
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
