#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace cav {

// Scenario document could not be parsed at all (bad syntax, missing section).
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Scenario document parsed but a field violates an invariant; names the field.
struct ValidationError : std::runtime_error {
  std::string field;
  ValidationError(std::string f, const std::string& msg)
      : std::runtime_error(f + ": " + msg), field(std::move(f)) {}
};

// Geometry query for a conflict that does not lie on the given path.
struct NotOnPath : std::runtime_error {
  explicit NotOnPath(const std::string& msg) : std::runtime_error(msg) {}
};

// Two paths share no conflict point.
struct NoSharedConflict : std::runtime_error {
  explicit NoSharedConflict(const std::string& msg) : std::runtime_error(msg) {}
};

// Entry speed outside the plannable window.
struct InfeasibleEntry : std::runtime_error {
  explicit InfeasibleEntry(const std::string& msg) : std::runtime_error(msg) {}
};

// Degenerate boundary-value problem (zero-length time window).
struct SingularSystem : std::runtime_error {
  explicit SingularSystem(const std::string& msg) : std::runtime_error(msg) {}
};

// Argument outside a function's mathematical domain (e.g. |delta| >= pi/2).
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Coordinator query for a path id the scenario does not define.
struct UnknownPath : std::runtime_error {
  explicit UnknownPath(const std::string& msg) : std::runtime_error(msg) {}
};

// Commit raced against a database change since the feasibility check.
struct StaleSnapshot : std::runtime_error {
  explicit StaleSnapshot(const std::string& msg) : std::runtime_error(msg) {}
};

// Unrecognized export series kind.
struct UnknownKind : std::runtime_error {
  explicit UnknownKind(const std::string& msg) : std::runtime_error(msg) {}
};

// Brute-force oracle found no feasible grid point.
struct EmptyFeasibleGrid : std::runtime_error {
  explicit EmptyFeasibleGrid(const std::string& msg) : std::runtime_error(msg) {}
};

// QP solver lost numerical control (ill-conditioned active set).
struct NumericalBreakdown : std::runtime_error {
  explicit NumericalBreakdown(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cav
