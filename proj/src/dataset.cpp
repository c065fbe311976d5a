#include "bma/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace bma {

namespace {

Role parse_role(const std::string& s) {
  if (s == "outcome") return Role::Outcome;
  if (s == "exogenous") return Role::Exogenous;
  if (s == "endogenous") return Role::Endogenous;
  if (s == "instrument") return Role::Instrument;
  throw std::invalid_argument("roster: unknown role '" + s + "'");
}

Transform parse_transform(const std::string& s) {
  if (s == "none" || s.empty()) return Transform::None;
  if (s == "log10" || s == "log") return Transform::Log10;
  throw std::invalid_argument("roster: unknown transform '" + s + "'");
}

}  // namespace

Roster::Roster(std::vector<VariableSpec> specs) : specs_(std::move(specs)) {
  std::set<std::string> names;
  int outcomes = 0;
  for (const VariableSpec& v : specs_) {
    if (v.name.empty()) throw std::invalid_argument("roster: empty variable name");
    if (!names.insert(v.name).second)
      throw std::invalid_argument("roster: duplicate variable '" + v.name + "'");
    if (v.window_start > v.window_end)
      throw std::invalid_argument("roster: window start > end for '" + v.name + "'");
    if (v.role == Role::Outcome) ++outcomes;
    if (v.role == Role::Instrument && v.instrument_target.empty())
      throw std::invalid_argument("roster: instrument '" + v.name + "' needs a target");
    if (v.role != Role::Instrument && !v.instrument_target.empty())
      throw std::invalid_argument("roster: only instruments carry a target ('" +
                                  v.name + "')");
  }
  if (outcomes != 1)
    throw std::invalid_argument("roster: exactly one outcome required, found " +
                                std::to_string(outcomes));
  for (const VariableSpec& v : specs_) {
    if (v.role != Role::Endogenous) continue;
    int hits = 0;
    for (const VariableSpec& w : specs_)
      if (w.role == Role::Instrument && w.instrument_target == v.name) ++hits;
    if (hits != 1)
      throw std::invalid_argument("roster: endogenous '" + v.name + "' needs exactly " +
                                  "one instrument, found " + std::to_string(hits));
  }
  for (const VariableSpec& v : specs_) {
    if (v.role != Role::Instrument) continue;
    const VariableSpec* t = find(v.instrument_target);
    if (t == nullptr || t->role != Role::Endogenous)
      throw std::invalid_argument("roster: instrument '" + v.name +
                                  "' targets no endogenous variable");
  }
}

const VariableSpec& Roster::outcome() const {
  for (const VariableSpec& v : specs_)
    if (v.role == Role::Outcome) return v;
  throw std::logic_error("roster: missing outcome");
}

const VariableSpec* Roster::find(const std::string& name) const {
  for (const VariableSpec& v : specs_)
    if (v.name == name) return &v;
  return nullptr;
}

std::vector<const VariableSpec*> Roster::endogenous() const {
  std::vector<const VariableSpec*> out;
  for (const VariableSpec& v : specs_)
    if (v.role == Role::Endogenous) out.push_back(&v);
  return out;
}

std::vector<const VariableSpec*> Roster::exogenous() const {
  std::vector<const VariableSpec*> out;
  for (const VariableSpec& v : specs_)
    if (v.role == Role::Exogenous) out.push_back(&v);
  return out;
}

const VariableSpec& Roster::instrument_for(const std::string& endogenous_name) const {
  for (const VariableSpec& v : specs_)
    if (v.role == Role::Instrument && v.instrument_target == endogenous_name) return v;
  throw std::invalid_argument("roster: no instrument for '" + endogenous_name + "'");
}

Roster load_roster(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("roster: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("roster: " + path + ": " + e.what());
  }
  if (!j.contains("variables") || !j["variables"].is_array())
    throw std::runtime_error("roster: " + path + ": missing 'variables' array");
  std::vector<VariableSpec> specs;
  try {
    for (const auto& e : j["variables"]) {
      VariableSpec v;
      v.name = e.at("name").get<std::string>();
      v.role = parse_role(e.at("role").get<std::string>());
      v.transform = parse_transform(e.value("transform", "none"));
      const auto& w = e.at("window");
      v.window_start = w.at(0).get<int>();
      v.window_end = w.at(1).get<int>();
      v.instrument_target = e.value("target", "");
      v.category = e.value("category", "");
      specs.push_back(std::move(v));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("roster: " + path + ": " + e.what());
  }
  return Roster(std::move(specs));
}

namespace {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

PanelTable load_panel(const std::string& path, const Roster& roster) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("panel: cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line))
    throw std::runtime_error("panel: " + path + " is empty");
  ++lineno;
  {
    const auto header = split_csv_line(line);
    if (header.size() != 4 || header[0] != "country" || header[1] != "year" ||
        header[2] != "variable" || header[3] != "value")
      throw std::runtime_error("panel: " + path +
                               ": header must be 'country,year,variable,value'");
  }
  PanelTable panel;
  std::set<std::tuple<std::string, int, std::string>> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    const std::string where = path + ", line " + std::to_string(lineno);
    if (f.size() != 4) throw ParseError("panel parse error, " + where +
                                        ": expected 4 fields, got " +
                                        std::to_string(f.size()));
    PanelObservation obs;
    obs.country = f[0];
    if (obs.country.empty())
      throw ParseError("panel parse error, " + where + ": empty country");
    try {
      std::size_t pos = 0;
      obs.year = std::stoi(f[1], &pos);
      if (pos != f[1].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ParseError("panel parse error, " + where + ": bad year '" + f[1] + "'");
    }
    if (obs.year < 1000 || obs.year > 9999)
      throw ParseError("panel parse error, " + where + ": year must be 4 digits");
    obs.variable = f[2];
    if (roster.find(obs.variable) == nullptr)
      throw ParseError("panel: " + where + ": unknown variable '" + obs.variable + "'");
    if (!f[3].empty()) {
      try {
        std::size_t pos = 0;
        obs.value = std::stod(f[3], &pos);
        if (pos != f[3].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw ParseError("panel parse error, " + where + ": bad value '" + f[3] + "'");
      }
    }
    if (!seen.insert({obs.country, obs.year, obs.variable}).second)
      throw ParseError("panel: " + where + ": duplicate observation (" + obs.country +
                       ", " + f[1] + ", " + obs.variable + ")");
    panel.rows.push_back(std::move(obs));
  }
  return panel;
}

void write_panel_csv(const PanelTable& panel, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("panel: cannot write " + path);
  out << "country,year,variable,value\n";
  char buf[64];
  for (const PanelObservation& r : panel.rows) {
    out << r.country << ',' << r.year << ',' << r.variable << ',';
    if (r.value) {
      std::snprintf(buf, sizeof(buf), "%.17g", *r.value);
      out << buf;
    }
    out << '\n';
  }
}

std::optional<std::size_t> CrossSection::variable_index(const std::string& name) const {
  for (std::size_t i = 0; i < variables.size(); ++i)
    if (variables[i] == name) return i;
  return std::nullopt;
}

CrossSection decade_average(const PanelTable& panel, const Roster& roster) {
  CrossSection cs;
  std::set<std::string> countries;
  for (const PanelObservation& r : panel.rows) countries.insert(r.country);
  cs.countries.assign(countries.begin(), countries.end());
  for (const VariableSpec& v : roster.variables()) cs.variables.push_back(v.name);
  cs.cells.assign(cs.countries.size() * cs.variables.size(), std::nullopt);

  std::map<std::pair<std::string, std::string>, std::pair<double, long>> acc;
  for (const PanelObservation& r : panel.rows) {
    if (!r.value) continue;
    const VariableSpec* spec = roster.find(r.variable);
    if (r.year < spec->window_start || r.year > spec->window_end) continue;
    auto& slot = acc[{r.country, r.variable}];
    slot.first += *r.value;
    slot.second += 1;
  }
  for (std::size_t ci = 0; ci < cs.countries.size(); ++ci)
    for (std::size_t vi = 0; vi < cs.variables.size(); ++vi) {
      auto it = acc.find({cs.countries[ci], cs.variables[vi]});
      if (it != acc.end() && it->second.second > 0)
        cs.at(ci, vi) = it->second.first / static_cast<double>(it->second.second);
    }
  return cs;
}

CrossSection apply_transforms(CrossSection table, const Roster& roster) {
  for (std::size_t vi = 0; vi < table.variables.size(); ++vi) {
    const VariableSpec* spec = roster.find(table.variables[vi]);
    if (spec == nullptr || spec->transform != Transform::Log10) continue;
    for (std::size_t ci = 0; ci < table.countries.size(); ++ci) {
      auto& cell = table.at(ci, vi);
      if (!cell) continue;
      if (!(*cell > 0.0))
        throw std::domain_error("log10 transform: non-positive value for " +
                                table.countries[ci] + "/" + table.variables[vi]);
      cell = std::log10(*cell);
    }
  }
  return table;
}

BuildResult build_design(const CrossSection& table, const Roster& roster) {
  const auto endo = roster.endogenous();
  const auto exo = roster.exogenous();
  const std::string outcome = roster.outcome().name;

  std::vector<std::string> used;  // roster order, for the drop log
  for (const VariableSpec& v : roster.variables()) used.push_back(v.name);

  std::vector<std::size_t> used_idx;
  for (const std::string& name : used) {
    const auto idx = table.variable_index(name);
    if (!idx)
      throw std::invalid_argument("build_design: variable '" + name +
                                  "' missing from the cross-section");
    used_idx.push_back(*idx);
  }

  BuildResult out;
  std::vector<std::size_t> kept;
  for (std::size_t ci = 0; ci < table.countries.size(); ++ci) {
    const std::string* first_missing = nullptr;
    for (std::size_t u = 0; u < used.size(); ++u)
      if (!table.at(ci, used_idx[u])) {
        first_missing = &used[u];
        break;
      }
    if (first_missing != nullptr)
      out.drop_log.push_back("dropped " + table.countries[ci] + ": missing " +
                             *first_missing);
    else
      kept.push_back(ci);
  }

  const std::size_t n = kept.size();
  DesignMatrices& d = out.design;
  for (std::size_t ci : kept) d.countries.push_back(table.countries[ci]);
  d.y.resize(n);
  d.X = Matrix(n, endo.size());
  d.Z = Matrix(n, endo.size());
  d.W = Matrix(n, exo.size());

  const std::size_t yi = *table.variable_index(outcome);
  for (std::size_t r = 0; r < n; ++r) d.y[r] = *table.at(kept[r], yi);
  for (std::size_t j = 0; j < endo.size(); ++j) {
    const std::size_t xi = *table.variable_index(endo[j]->name);
    const std::size_t zi = *table.variable_index(roster.instrument_for(endo[j]->name).name);
    for (std::size_t r = 0; r < n; ++r) {
      d.X(r, j) = *table.at(kept[r], xi);
      d.Z(r, j) = *table.at(kept[r], zi);
    }
  }
  for (std::size_t j = 0; j < exo.size(); ++j) {
    const std::size_t wi = *table.variable_index(exo[j]->name);
    for (std::size_t r = 0; r < n; ++r) d.W(r, j) = *table.at(kept[r], wi);
  }

  if (n <= endo.size() + exo.size() + 1)
    throw std::runtime_error(
        "build_design: insufficient data, n=" + std::to_string(n) + " after drops but " +
        std::to_string(endo.size()) + " endogenous + " + std::to_string(exo.size()) +
        " exogenous + intercept require n > " +
        std::to_string(endo.size() + exo.size() + 1));
  return out;
}

std::vector<InstrumentCorrelation> instrument_diagnostics(const DesignMatrices& design,
                                                          const Roster& roster) {
  if (design.n() < 3)
    throw std::invalid_argument("instrument_diagnostics: need n >= 3");
  const auto endo = roster.endogenous();
  if (static_cast<int>(endo.size()) != design.p())
    throw std::invalid_argument("instrument_diagnostics: roster/design mismatch");
  std::vector<InstrumentCorrelation> out;
  for (std::size_t j = 0; j < endo.size(); ++j) {
    InstrumentCorrelation c;
    c.endogenous = endo[j]->name;
    c.instrument = roster.instrument_for(endo[j]->name).name;
    Vector x(design.X.col(j), design.X.col(j) + design.n());
    Vector z(design.Z.col(j), design.Z.col(j) + design.n());
    const double r = pearson(x, z);
    if (std::isnan(r)) {
      c.defined = false;
      c.correlation = std::nan("");
    } else {
      c.correlation = r;
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<SummaryRow> summary_stats(const CrossSection& table,
                                      const std::string& outcome) {
  const auto oi = table.variable_index(outcome);
  if (!oi) throw std::invalid_argument("summary_stats: unknown outcome '" + outcome + "'");
  std::vector<SummaryRow> rows;
  for (std::size_t vi = 0; vi < table.variables.size(); ++vi) {
    SummaryRow row;
    row.variable = table.variables[vi];
    Vector values;
    Vector paired_var, paired_outcome;
    for (std::size_t ci = 0; ci < table.countries.size(); ++ci) {
      const auto& cell = table.at(ci, vi);
      if (cell) values.push_back(*cell);
      const auto& ocell = table.at(ci, *oi);
      if (cell && ocell) {
        paired_var.push_back(*cell);
        paired_outcome.push_back(*ocell);
      }
    }
    row.count = values.size();
    if (values.empty()) {
      row.corr_defined = false;
      rows.push_back(std::move(row));
      continue;
    }
    row.mean = mean(values);
    Vector sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    row.median = (m % 2 == 1) ? sorted[m / 2]
                              : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    row.sd = values.size() > 1 ? std::sqrt(sample_variance(values)) : 0.0;
    row.min = sorted.front();
    row.max = sorted.back();
    const double r = pearson(paired_var, paired_outcome);
    if (std::isnan(r)) {
      row.corr_defined = false;
    } else {
      row.corr_outcome = r;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace bma
