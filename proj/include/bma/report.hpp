#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bma/bma_engine.hpp"
#include "bma/ivbma_engine.hpp"

namespace bma {

// Kass-Raftery style evidence classes over PIPs. Boundary values take the
// lower class (exactly 0.75 is Weak, 0.95 Positive, 0.99 Strong).
enum class EvidenceClass { Weak = 0, Positive = 1, Strong = 2, Decisive = 3 };

EvidenceClass classify_evidence(double pip);
const char* to_string(EvidenceClass c);

struct ReportRow {
  std::string name;
  bool endogenous = false;
  double pip = 0.0;
  double post_mean = 0.0;
  double post_sd = 0.0;
};

// Plain-text table: rows sorted by descending PIP (stable tie-break by the
// incoming roster order), three decimals, a marker on PIP > 0.75 rows, a '*'
// on endogenous variables, the evidence class appended.
std::string render_table(const std::vector<ReportRow>& rows, const std::string& title);

// Draw CSVs, one file per stage: <prefix>second_stage_draws.csv carries the
// second-stage coefficients and the sigma entries; one file per first-stage
// equation when those draws were retained.
void export_draws(const IvbmaResult& result,
                  const std::vector<std::string>& second_stage_names,
                  const std::vector<std::string>& first_stage_names,
                  const std::vector<std::string>& endogenous_names,
                  const std::string& out_dir);

struct RunConfig {
  std::string data_path;
  std::string roster_path;
  std::string method = "ivbma";  // bma-exact | bma-mc3 | ivbma
  long iterations = 3000000;
  long burn_in = 200000;
  int thinning = 10;
  std::uint64_t seed = 1;
  std::string g_mode = "n";  // "n" (unit information) or a positive number
  std::string subsample_path;  // optional keep-list of countries
  std::string out_dir = ".";
  int enumeration_cap = kDefaultEnumerationCap;
};

// Pipeline -> engine -> report files (report.txt, diagnostics.txt,
// drop_log.txt, manifest.json, draw/chain exports). Throws RunError with the
// failing stage in the message.
struct RunError : std::runtime_error {
  RunError(const std::string& stage, const std::string& what)
      : std::runtime_error("[" + stage + "] " + what), stage(stage) {}
  std::string stage;
};

void run(const RunConfig& config);

}  // namespace bma
