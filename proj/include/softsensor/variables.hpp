#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace softsensor {

// Canonical variable roster. Enumerator order is the canonical order used
// to break ties in rankings and selections.
enum class Variable {
  Flow,
  Temp,
  pH,
  DOsat,
  Turb,
  EC,
  Chl,
  TRP,
  TP,
  NO3N,
  NH4N,
  Timestamp,
};

inline constexpr std::array<Variable, 12> kAllVariables = {
    Variable::Flow, Variable::Temp, Variable::pH,   Variable::DOsat,
    Variable::Turb, Variable::EC,   Variable::Chl,  Variable::TRP,
    Variable::TP,   Variable::NO3N, Variable::NH4N, Variable::Timestamp};

std::string_view to_string(Variable v);

// Accepts the canonical spelling plus a few common aliases
// ("NO3-N", "NH4-N", case-insensitive).
std::optional<Variable> parse_variable(std::string_view name);

// Throws ConfigError for unknown names.
Variable variable_from_string(std::string_view name);

bool is_target(Variable v);
bool is_surrogate(Variable v);

std::vector<Variable> parse_variable_list(std::string_view csv);
std::string join_variables(const std::vector<Variable>& vars,
                           std::string_view sep = ",");

}  // namespace softsensor
