#include "softsensor/variables.hpp"

#include <algorithm>
#include <cctype>

#include "softsensor/error.hpp"

namespace softsensor {

namespace {

std::string normalize(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '-' || c == '_' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view to_string(Variable v) {
  switch (v) {
    case Variable::Flow: return "Flow";
    case Variable::Temp: return "Temp";
    case Variable::pH: return "pH";
    case Variable::DOsat: return "DOsat";
    case Variable::Turb: return "Turb";
    case Variable::EC: return "EC";
    case Variable::Chl: return "Chl";
    case Variable::TRP: return "TRP";
    case Variable::TP: return "TP";
    case Variable::NO3N: return "NO3N";
    case Variable::NH4N: return "NH4N";
    case Variable::Timestamp: return "Timestamp";
  }
  return "?";
}

std::optional<Variable> parse_variable(std::string_view name) {
  const std::string key = normalize(trim(name));
  for (Variable v : kAllVariables) {
    if (normalize(to_string(v)) == key) return v;
  }
  return std::nullopt;
}

Variable variable_from_string(std::string_view name) {
  auto v = parse_variable(name);
  if (!v) throw ConfigError("unknown variable name '" + std::string(name) + "'");
  return *v;
}

bool is_target(Variable v) {
  return v == Variable::TRP || v == Variable::TP || v == Variable::NO3N ||
         v == Variable::NH4N;
}

bool is_surrogate(Variable v) {
  return !is_target(v) && v != Variable::Timestamp;
}

std::vector<Variable> parse_variable_list(std::string_view csv) {
  std::vector<Variable> out;
  while (!csv.empty()) {
    const auto comma = csv.find(',');
    const auto item = trim(csv.substr(0, comma));
    if (!item.empty()) {
      const Variable v = variable_from_string(item);
      if (std::find(out.begin(), out.end(), v) != out.end()) {
        throw ConfigError("variable '" + std::string(item) + "' listed twice");
      }
      out.push_back(v);
    }
    if (comma == std::string_view::npos) break;
    csv.remove_prefix(comma + 1);
  }
  return out;
}

std::string join_variables(const std::vector<Variable>& vars,
                           std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (i) out += sep;
    out += to_string(vars[i]);
  }
  return out;
}

}  // namespace softsensor
