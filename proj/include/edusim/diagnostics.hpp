#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace edusim {

// Machine-readable problem report. `code` is one of the documented
// kebab-case identifiers (see README "Diagnostic codes").
struct Issue {
  std::string code;
  std::string message;
  std::string element;  // offending element, e.g. a module code or "A,B"
  int line = 0;         // 1-based source line when known, 0 otherwise

  bool operator==(const Issue&) const = default;
};

// Either a value or the full list of issues that prevented producing one.
template <typename T>
class Checked {
 public:
  Checked(T value) : state_(std::move(value)) {}
  Checked(std::vector<Issue> issues) : state_(std::move(issues)) {}

  bool ok() const { return std::holds_alternative<T>(state_); }
  explicit operator bool() const { return ok(); }

  const T& value() const& { return std::get<T>(state_); }
  T&& value() && { return std::get<T>(std::move(state_)); }
  const T& operator*() const& { return value(); }
  const T* operator->() const { return &value(); }

  const std::vector<Issue>& issues() const {
    static const std::vector<Issue> none;
    return ok() ? none : std::get<std::vector<Issue>>(state_);
  }

  bool has_issue(const std::string& code) const {
    for (const auto& i : issues())
      if (i.code == code) return true;
    return false;
  }

 private:
  std::variant<T, std::vector<Issue>> state_;
};

// Thrown by operations whose contract violations are programming or input
// errors rather than collectable diagnostics (matrix construction,
// projection, simulation).
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace edusim
