#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bma/dataset.hpp"
#include "bma/kernels.hpp"
#include "bma/report.hpp"
#include "bma/synthetic.hpp"

namespace bma {

namespace {

constexpr const char* kVersion = "0.1.0";

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::set<std::string> load_country_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("subsample: cannot open " + path);
  std::set<std::string> keep;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    std::size_t start = line.find_first_not_of(' ');
    if (start == std::string::npos) continue;
    line = line.substr(start);
    if (line.empty() || line[0] == '#') continue;
    keep.insert(line);
  }
  return keep;
}

PriorConfig parse_g_mode(const std::string& g_mode) {
  PriorConfig prior;
  if (g_mode == "n" || g_mode.empty()) {
    prior.mode = PriorConfig::Mode::UnitInformation;
    return prior;
  }
  try {
    std::size_t pos = 0;
    const double g = std::stod(g_mode, &pos);
    if (pos != g_mode.size() || !(g > 0.0)) throw std::invalid_argument("bad g");
    prior.mode = PriorConfig::Mode::FixedG;
    prior.g = g;
    return prior;
  } catch (const std::exception&) {
    throw std::invalid_argument("--g must be 'n' or a positive number, got '" +
                                g_mode + "'");
  }
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

std::string format_diagnostics(const std::vector<InstrumentCorrelation>& corr,
                               const std::vector<SummaryRow>& summary,
                               const std::string& outcome) {
  std::string out = "Instrument correlations (descending)\n";
  std::vector<InstrumentCorrelation> sorted = corr;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    const double av = a.defined ? a.correlation : -2.0;
    const double bv = b.defined ? b.correlation : -2.0;
    return av > bv;
  });
  char line[256];
  for (const auto& c : sorted) {
    if (c.defined)
      std::snprintf(line, sizeof(line), "  %.2f  %s <- %s\n", c.correlation,
                    c.endogenous.c_str(), c.instrument.c_str());
    else
      std::snprintf(line, sizeof(line),
                    "  undefined (constant column)  %s <- %s  [warning]\n",
                    c.endogenous.c_str(), c.instrument.c_str());
    out += line;
  }
  out += "\nSummary statistics (correlation against " + outcome + ")\n";
  std::snprintf(line, sizeof(line), "%-36s %6s %9s %9s %9s %9s %9s %6s\n", "variable",
                "n", "mean", "median", "sd", "min", "max", "corr");
  out += line;
  for (const SummaryRow& r : summary) {
    if (r.count == 0) {
      std::snprintf(line, sizeof(line), "%-36s %6zu  (no data)\n", r.variable.c_str(),
                    r.count);
      out += line;
      continue;
    }
    char corr_buf[16];
    if (r.corr_defined)
      std::snprintf(corr_buf, sizeof(corr_buf), "%6.2f", r.corr_outcome);
    else
      std::snprintf(corr_buf, sizeof(corr_buf), "%6s", "-");
    std::snprintf(line, sizeof(line), "%-36s %6zu %9.2f %9.2f %9.2f %9.2f %9.2f %s\n",
                  r.variable.c_str(), r.count, r.mean, r.median, r.sd, r.min, r.max,
                  corr_buf);
    out += line;
  }
  return out;
}

std::vector<ReportRow> make_rows(const PosteriorSummary& s,
                                 const std::vector<std::string>& names,
                                 const std::vector<bool>& endogenous) {
  std::vector<ReportRow> rows(names.size());
  for (std::size_t j = 0; j < names.size(); ++j) {
    rows[j].name = names[j];
    rows[j].endogenous = endogenous[j];
    rows[j].pip = s.pip[j];
    rows[j].post_mean = s.post_mean[j];
    rows[j].post_sd = s.post_sd[j];
  }
  return rows;
}

std::string top_models_block(const PosteriorSummary& s) {
  std::string out = "Top models (mask, posterior probability)\n";
  char line[160];
  for (const auto& [mask, pmp] : s.top_models) {
    std::snprintf(line, sizeof(line), "  %s  %.4f\n", mask.to_string().c_str(), pmp);
    out += line;
  }
  return out;
}

}  // namespace

void run(const RunConfig& config) {
  namespace fs = std::filesystem;
  const auto t_start = std::chrono::steady_clock::now();

  // ---- config stage -------------------------------------------------------
  PriorConfig prior;
  std::optional<Roster> roster_opt;
  try {
    if (config.method != "bma-exact" && config.method != "bma-mc3" &&
        config.method != "ivbma")
      throw std::invalid_argument("unknown method '" + config.method +
                                  "' (expected bma-exact, bma-mc3 or ivbma)");
    if (config.iterations <= config.burn_in || config.burn_in < 0)
      throw std::invalid_argument("need iterations > burn_in >= 0");
    if (config.thinning < 1) throw std::invalid_argument("thinning must be >= 1");
    prior = parse_g_mode(config.g_mode);
    roster_opt.emplace(load_roster(config.roster_path));
    fs::create_directories(config.out_dir);
  } catch (const std::exception& e) {
    throw RunError("config", e.what());
  }
  const Roster& roster = *roster_opt;

  // ---- pipeline stage ------------------------------------------------------
  BuildResult built;
  std::vector<InstrumentCorrelation> corr;
  std::vector<SummaryRow> summary;
  std::size_t panel_countries = 0;
  try {
    PanelTable panel = load_panel(config.data_path, roster);
    if (!config.subsample_path.empty()) {
      const auto keep = load_country_list(config.subsample_path);
      PanelTable filtered;
      for (PanelObservation& r : panel.rows)
        if (keep.count(r.country) > 0) filtered.rows.push_back(std::move(r));
      panel = std::move(filtered);
    }
    CrossSection cs = apply_transforms(decade_average(panel, roster), roster);
    panel_countries = cs.countries.size();
    summary = summary_stats(cs, roster.outcome().name);
    built = build_design(cs, roster);
    built.design.validate();
    corr = instrument_diagnostics(built.design, roster);
  } catch (const std::exception& e) {
    throw RunError("pipeline", e.what());
  }
  const DesignMatrices& design = built.design;

  // column naming for the report
  std::vector<std::string> second_names;
  std::vector<bool> second_endo;
  for (const auto* v : roster.endogenous()) {
    second_names.push_back(v->name);
    second_endo.push_back(true);
  }
  for (const auto* v : roster.exogenous()) {
    second_names.push_back(v->name);
    second_endo.push_back(false);
  }
  std::vector<std::string> first_names;
  std::vector<std::string> endo_names;
  for (const auto* v : roster.endogenous()) {
    first_names.push_back(roster.instrument_for(v->name).name);
    endo_names.push_back(v->name);
  }
  for (const auto* v : roster.exogenous()) first_names.push_back(v->name);

  // ---- engine + report stages ----------------------------------------------
  std::string report;
  char line[256];
  std::snprintf(line, sizeof(line),
                "model averaging report (method: %s, version %s)\n",
                config.method.c_str(), kVersion);
  report += line;
  std::snprintf(line, sizeof(line),
                "data: %s (n=%zu countries after drops, p=%d endogenous, q=%d "
                "exogenous)\n",
                config.data_path.c_str(), design.n(), design.p(), design.q());
  report += line;
  const double g_resolved = prior.resolve(design.n());
  std::snprintf(line, sizeof(line),
                "iterations: %ld, burn-in: %ld, thinning: %d, seed: %llu, g: %s "
                "(=%.0f)\n\n",
                config.iterations, config.burn_in, config.thinning,
                static_cast<unsigned long long>(config.seed), config.g_mode.c_str(),
                g_resolved);
  report += line;

  try {
    const std::string outcome = roster.outcome().name;
    if (config.method == "bma-exact") {
      auto [records, s] = exact_bma(second_stage_data(design), prior,
                                    config.enumeration_cap);
      report += render_table(make_rows(s, second_names, second_endo),
                             "Model-averaged coefficients (outcome: " + outcome + ")");
      report += "\n" + top_models_block(s);
      std::snprintf(line, sizeof(line), "models enumerated: %ld, rank deficient: %ld\n",
                    s.models_visited, s.rank_deficient);
      report += line;
    } else if (config.method == "bma-mc3") {
      SamplerConfig sc;
      sc.iterations = config.iterations;
      sc.burn_in = config.burn_in;
      sc.seed = config.seed;
      sc.thinning = config.thinning;
      Mc3Result r = mc3_sample(second_stage_data(design), prior, sc);
      report += render_table(make_rows(r.summary, second_names, second_endo),
                             "Model-averaged coefficients (outcome: " + outcome + ")");
      report += "\n" + top_models_block(r.summary);
      std::snprintf(line, sizeof(line),
                    "distinct models visited: %ld, acceptance rate: %.3f\n",
                    r.summary.models_visited,
                    static_cast<double>(r.accepted) /
                        static_cast<double>(config.iterations));
      report += line;
      // chain export: one mask string + log marginal likelihood per line
      std::ofstream chain((fs::path(config.out_dir) / "chain.csv"));
      chain << "mask,log_marginal_likelihood\n";
      char buf[96];
      const int K = static_cast<int>(second_names.size());
      for (std::size_t t = 0; t < r.chain.size();
           t += static_cast<std::size_t>(config.thinning)) {
        std::snprintf(buf, sizeof(buf), "%.10g", r.log_ml.at(r.chain[t]));
        chain << InclusionMask::from_bits(r.chain[t], K).to_string() << ',' << buf
              << '\n';
      }
    } else {  // ivbma
      IvbmaConfig ic;
      ic.iterations = config.iterations;
      ic.burn_in = config.burn_in;
      ic.seed = config.seed;
      ic.thinning = config.thinning;
      IvbmaResult r = run_ivbma(design, prior, ic);
      report += render_table(make_rows(r.second_stage, second_names, second_endo),
                             "Second stage (outcome: " + outcome + ")");
      report += "\n" + top_models_block(r.second_stage);
      std::snprintf(line, sizeof(line),
                    "distinct second-stage models: %ld, outcome acceptance rate: %.3f\n",
                    r.second_stage.models_visited,
                    static_cast<double>(r.outcome_accepted) /
                        static_cast<double>(config.iterations));
      report += line;
      std::vector<bool> no_flags(first_names.size(), false);
      for (std::size_t j = 0; j < r.first_stage.size(); ++j) {
        report += "\n";
        report += render_table(make_rows(r.first_stage[j], first_names, no_flags),
                               "First stage (endogenous: " + endo_names[j] + ")");
      }
      export_draws(r, second_names, first_names, endo_names, config.out_dir);
    }
  } catch (const std::exception& e) {
    throw RunError("engine", e.what());
  }

  // ---- report files ----------------------------------------------------------
  try {
    write_text((fs::path(config.out_dir) / "report.txt").string(), report);
    std::string drops;
    for (const std::string& d : built.drop_log) drops += d + "\n";
    write_text((fs::path(config.out_dir) / "drop_log.txt").string(), drops);
    write_text((fs::path(config.out_dir) / "diagnostics.txt").string(),
               format_diagnostics(corr, summary, roster.outcome().name));

    const std::uint64_t data_hash = fnv1a64(file_bytes(config.data_path));
    const std::uint64_t roster_hash = fnv1a64(file_bytes(config.roster_path));
    const std::uint64_t subsample_hash =
        config.subsample_path.empty() ? 0 : fnv1a64(file_bytes(config.subsample_path));
    std::ostringstream canon;
    canon << config.method << '|' << hex64(data_hash) << '|' << hex64(roster_hash)
          << '|' << hex64(subsample_hash) << '|' << config.iterations << '|'
          << config.burn_in << '|' << config.thinning << '|' << config.seed << '|'
          << config.g_mode << '|' << config.enumeration_cap;
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();

    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["method"] = config.method;
    manifest["data"] = config.data_path;
    manifest["roster"] = config.roster_path;
    manifest["subsample"] = config.subsample_path;
    manifest["iterations"] = config.iterations;
    manifest["burn_in"] = config.burn_in;
    manifest["thinning"] = config.thinning;
    manifest["seed"] = config.seed;
    manifest["g"] = config.g_mode;
    manifest["enumeration_cap"] = config.enumeration_cap;
    manifest["dataset_checksum"] = hex64(data_hash);
    manifest["roster_checksum"] = hex64(roster_hash);
    manifest["config_hash"] = hex64(fnv1a64(canon.str()));
    manifest["countries_in_cross_section"] = panel_countries;
    manifest["n"] = design.n();
    manifest["p"] = design.p();
    manifest["q"] = design.q();
    manifest["dropped"] = built.drop_log.size();
    manifest["kernels"] = kernels::active().name;
    manifest["wall_time_seconds"] = wall;
    write_text((fs::path(config.out_dir) / "manifest.json").string(),
               manifest.dump(2) + "\n");
  } catch (const RunError&) {
    throw;
  } catch (const std::exception& e) {
    throw RunError("report", e.what());
  }
}

}  // namespace bma
