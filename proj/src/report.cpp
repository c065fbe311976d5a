#include "bma/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace bma {

EvidenceClass classify_evidence(double pip) {
  if (!(pip >= 0.0) || !(pip <= 1.0))
    throw std::invalid_argument("classify_evidence: PIP must lie in [0,1]");
  if (pip > 0.99) return EvidenceClass::Decisive;
  if (pip > 0.95) return EvidenceClass::Strong;
  if (pip > 0.75) return EvidenceClass::Positive;
  return EvidenceClass::Weak;
}

const char* to_string(EvidenceClass c) {
  switch (c) {
    case EvidenceClass::Weak: return "Weak";
    case EvidenceClass::Positive: return "Positive";
    case EvidenceClass::Strong: return "Strong";
    case EvidenceClass::Decisive: return "Decisive";
  }
  return "?";
}

std::string render_table(const std::vector<ReportRow>& rows, const std::string& title) {
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rows[a].pip > rows[b].pip;
  });

  std::string out;
  out += title + "\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-36s %8s %11s %10s  %s\n", "variable", "PIP",
                "Post Mean", "Post SD", "evidence");
  out += line;
  for (std::size_t i : order) {
    const ReportRow& r = rows[i];
    std::string name = r.name;
    if (r.endogenous) name += " *";
    const char* marker = r.pip > 0.75 ? "► " : "  ";
    std::snprintf(line, sizeof(line), "%s%-34s %8.3f %11.3f %10.3f  %s\n", marker,
                  name.c_str(), r.pip, r.post_mean, r.post_sd,
                  to_string(classify_evidence(r.pip)));
    out += line;
  }
  out +=
      "► marks PIP > 0.75. * marks a potentially endogenous variable.\n"
      "Evidence: Decisive PIP > 0.99; Strong 0.95 < PIP <= 0.99; Positive\n"
      "0.75 < PIP <= 0.95; Weak PIP <= 0.75. Boundary values take the lower class.\n";
  return out;
}

namespace {

void write_draw_csv(const std::string& path, const std::vector<std::string>& names,
                    const std::vector<float>& data, int dim, long count, long burn_in,
                    int thinning, const std::vector<std::string>* sigma_names,
                    const std::vector<float>* sigma_data, int sigma_dim) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_draws: cannot write " + path);
  out << "chain,iteration,variable,coefficient\n";
  char buf[64];
  for (long r = 0; r < count; ++r) {
    const long iteration = burn_in + r * thinning;
    for (int j = 0; j < dim; ++j) {
      std::snprintf(buf, sizeof(buf), "%.6g",
                    static_cast<double>(data[static_cast<std::size_t>(r) * dim + j]));
      out << "1," << iteration << ',' << names[static_cast<std::size_t>(j)] << ','
          << buf << '\n';
    }
    if (sigma_data != nullptr)
      for (int j = 0; j < sigma_dim; ++j) {
        std::snprintf(
            buf, sizeof(buf), "%.6g",
            static_cast<double>((*sigma_data)[static_cast<std::size_t>(r) * sigma_dim + j]));
        out << "1," << iteration << ',' << (*sigma_names)[static_cast<std::size_t>(j)]
            << ',' << buf << '\n';
      }
  }
}

}  // namespace

void export_draws(const IvbmaResult& result,
                  const std::vector<std::string>& second_stage_names,
                  const std::vector<std::string>& first_stage_names,
                  const std::vector<std::string>& endogenous_names,
                  const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const DrawStore& d = result.draws;
  if (static_cast<int>(second_stage_names.size()) + 1 != d.second_dim)
    throw std::invalid_argument("export_draws: second-stage name count mismatch");

  std::vector<std::string> names = second_stage_names;
  names.push_back("intercept");
  std::vector<std::string> sigma_names;
  for (int a = 0; a < d.sigma_dim; ++a)
    for (int b = a; b < d.sigma_dim; ++b)
      sigma_names.push_back("sigma_" + std::to_string(a + 1) + "_" +
                            std::to_string(b + 1));
  write_draw_csv((fs::path(out_dir) / "second_stage_draws.csv").string(), names,
                 d.second, d.second_dim, d.count, result.burn_in, result.thinning,
                 &sigma_names, &d.sigma_upper,
                 d.sigma_dim * (d.sigma_dim + 1) / 2);

  if (!d.first.empty()) {
    std::vector<std::string> fs_names = first_stage_names;
    fs_names.push_back("intercept");
    for (std::size_t j = 0; j < d.first.size(); ++j) {
      const std::string label =
          j < endogenous_names.size() ? endogenous_names[j] : std::to_string(j + 1);
      write_draw_csv(
          (fs::path(out_dir) / ("first_stage_" + label + "_draws.csv")).string(),
          fs_names, d.first[j], static_cast<int>(fs_names.size()), d.count,
          result.burn_in, result.thinning, nullptr, nullptr, 0);
    }
  }
}

}  // namespace bma
