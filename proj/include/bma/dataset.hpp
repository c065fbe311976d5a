#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bma/design.hpp"

namespace bma {

enum class Role { Outcome, Exogenous, Endogenous, Instrument };
enum class Transform { None, Log10 };

struct VariableSpec {
  std::string name;
  Role role = Role::Exogenous;
  Transform transform = Transform::None;
  int window_start = 0;
  int window_end = 0;
  std::string instrument_target;  // only for Role::Instrument
  std::string category;
};

// Validated variable roster. Exactly one outcome; every endogenous variable
// has exactly one instrument targeting it; windows are well-formed.
class Roster {
 public:
  explicit Roster(std::vector<VariableSpec> specs);

  const std::vector<VariableSpec>& variables() const { return specs_; }
  const VariableSpec& outcome() const;
  const VariableSpec* find(const std::string& name) const;
  // spec order, preserved from the roster file
  std::vector<const VariableSpec*> endogenous() const;
  std::vector<const VariableSpec*> exogenous() const;
  const VariableSpec& instrument_for(const std::string& endogenous_name) const;

 private:
  std::vector<VariableSpec> specs_;
};

Roster load_roster(const std::string& path);

struct PanelObservation {
  std::string country;
  int year = 0;
  std::string variable;
  std::optional<double> value;
};

struct PanelTable {
  std::vector<PanelObservation> rows;
};

// Long-format CSV: header "country,year,variable,value", empty value = missing.
PanelTable load_panel(const std::string& path, const Roster& roster);
void write_panel_csv(const PanelTable& panel, const std::string& path);

// country x variable grid; countries sorted, variables in roster order.
struct CrossSection {
  std::vector<std::string> countries;
  std::vector<std::string> variables;
  std::vector<std::optional<double>> cells;  // row-major

  std::optional<double>& at(std::size_t country, std::size_t variable) {
    return cells[country * variables.size() + variable];
  }
  const std::optional<double>& at(std::size_t country, std::size_t variable) const {
    return cells[country * variables.size() + variable];
  }
  std::optional<std::size_t> variable_index(const std::string& name) const;
};

// Arithmetic mean of the annual values inside each variable's window;
// missing when no year in the window has data.
CrossSection decade_average(const PanelTable& panel, const Roster& roster);

// Applies base-10 logs to the flagged columns. Non-positive values are a
// domain error naming the country and variable.
CrossSection apply_transforms(CrossSection table, const Roster& roster);

struct BuildResult {
  DesignMatrices design;
  std::vector<std::string> drop_log;  // "dropped <country>: missing <variable>"
};

// Listwise drop of countries with missing cells, then column assembly:
// endogenous block in spec order, exogenous block in spec order, instruments
// aligned to the endogenous order.
BuildResult build_design(const CrossSection& table, const Roster& roster);

struct InstrumentCorrelation {
  std::string endogenous;
  std::string instrument;
  double correlation = 0.0;
  bool defined = true;  // false for constant columns (reported as a warning)
};

struct SummaryRow {
  std::string variable;
  std::size_t count = 0;
  double mean = 0, median = 0, sd = 0, min = 0, max = 0;
  double corr_outcome = 0;
  bool corr_defined = true;
};

struct DiagnosticsReport {
  std::vector<InstrumentCorrelation> instrument_correlations;
  std::vector<SummaryRow> summary;
};

std::vector<InstrumentCorrelation> instrument_diagnostics(const DesignMatrices& design,
                                                          const Roster& roster);

// Per-variable mean/median/SD/min/max over available cells plus Pearson
// correlation with the outcome column (undefined for constant columns).
std::vector<SummaryRow> summary_stats(const CrossSection& table,
                                      const std::string& outcome);

}  // namespace bma
