#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ferro {

/// Root of all library exceptions. `kind()` is the stable error name used
/// in CLI diagnostics (e.g. "NonPositiveDefinite").
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define FERRO_DEFINE_ERROR(Name)                                            \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what) : Error(#Name, what) {}          \
  };

FERRO_DEFINE_ERROR(NonPositiveDefinite)
FERRO_DEFINE_ERROR(InvalidArgument)
FERRO_DEFINE_ERROR(OutsideDomain)
FERRO_DEFINE_ERROR(UnsupportedFamily)
FERRO_DEFINE_ERROR(NoConvergence)
FERRO_DEFINE_ERROR(SingularSystem)
FERRO_DEFINE_ERROR(LinearSolveFailure)
FERRO_DEFINE_ERROR(StepSolveFailure)
FERRO_DEFINE_ERROR(DomainEscape)
FERRO_DEFINE_ERROR(MismatchedScenario)
FERRO_DEFINE_ERROR(AtomOutsideDomain)

#undef FERRO_DEFINE_ERROR

/// Scenario syntax error with 1-based position.
class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string& what)
      : Error("ParseError", "line " + std::to_string(line) + ", column " +
                                std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

/// One or more semantic violations; all are collected before throwing.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : Error("ValidationError", join(violations)),
        violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const noexcept {
    return violations_;
  }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += "; ";
      out += v[i];
    }
    return out;
  }
  std::vector<std::string> violations_;
};

}  // namespace ferro
