#pragma once

#include <optional>
#include <vector>

#include "cav/constraint.hpp"

namespace cav {

// min sum_j (weights[j] * x_j^2 + linear[j] * x_j)
// s.t. every LinearConstraint row and optional per-variable box bounds.
struct QuadraticProgram {
  int n = 0;
  std::vector<double> weights;           // size n, >= 0 (zero weight => min-norm on that face)
  std::vector<double> linear;            // size n or empty (treated as zeros)
  std::vector<LinearConstraint> constraints;
  std::vector<double> box_lo;            // size n or empty
  std::vector<double> box_hi;            // size n or empty
};

enum class QPStatus { Optimal, Infeasible };

struct QPSolution {
  std::vector<double> x;
  double objective = 0.0;
  QPStatus status = QPStatus::Infeasible;
  std::vector<int> active;  // indices into QuadraticProgram::constraints, ascending
};

// Dual active-set solver (Goldfarb-Idnani). Deterministic: violated rows are
// activated in ascending index order and dual blocking ties break on the
// lowest active-set position.
QPSolution solve(const QuadraticProgram& qp);

// Same solver, but rows listed in warm_active are tried first when picking
// violated constraints. The optimum is unique, so warm starting only changes
// the path taken, never the answer.
QPSolution solve(const QuadraticProgram& qp, const std::vector<int>& warm_active);

// Exhaustive grid reference for tests. Requires finite box bounds on every
// variable; scans lexicographically and keeps the first best point.
QPSolution brute_force_oracle(const QuadraticProgram& qp, double spacing);

}  // namespace cav
