#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edusim {

enum class ModuleOutcome { pass, fail, withdraw };

inline std::string_view to_string(ModuleOutcome o) {
  switch (o) {
    case ModuleOutcome::pass: return "pass";
    case ModuleOutcome::fail: return "fail";
    case ModuleOutcome::withdraw: return "withdraw";
  }
  return "?";
}

inline std::optional<ModuleOutcome> parse_module_outcome(std::string_view s) {
  if (s == "pass") return ModuleOutcome::pass;
  if (s == "fail") return ModuleOutcome::fail;
  if (s == "withdraw") return ModuleOutcome::withdraw;
  return std::nullopt;
}

// One student's enrollment in one academic year.
struct EnrollmentRecord {
  std::string student;
  int academic_year = 0;
  std::map<std::string, ModuleOutcome> outcomes;  // keys are the enrolled modules

  std::vector<std::string> enrolled() const {
    std::vector<std::string> out;
    for (const auto& [code, _] : outcomes) out.push_back(code);
    return out;
  }

  bool all_passed() const {
    for (const auto& [_, o] : outcomes)
      if (o != ModuleOutcome::pass) return false;
    return true;
  }

  bool operator==(const EnrollmentRecord&) const = default;
};

}  // namespace edusim
