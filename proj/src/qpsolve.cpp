#include "cav/qpsolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "cav/errors.hpp"

namespace cav {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One >=-sense row of the folded constraint system c . x >= rhs.
struct Row {
  Eigen::VectorXd c;
  double rhs = 0.0;
  int source = -1;  // index into qp.constraints, or -1 for a box bound
};

std::vector<Row> fold_rows(const QuadraticProgram& qp) {
  std::vector<Row> rows;
  for (std::size_t i = 0; i < qp.constraints.size(); ++i) {
    const LinearConstraint& lc = qp.constraints[i];
    if (static_cast<int>(lc.coeffs.size()) != qp.n) throw DomainError("constraint arity mismatch");
    Row r;
    r.c = Eigen::Map<const Eigen::VectorXd>(lc.coeffs.data(), qp.n);
    r.rhs = lc.rhs;
    if (lc.sense == Sense::Le) {
      r.c = -r.c;
      r.rhs = -r.rhs;
    }
    r.source = static_cast<int>(i);
    rows.push_back(std::move(r));
  }
  if (!qp.box_lo.empty() || !qp.box_hi.empty()) {
    if (static_cast<int>(qp.box_lo.size()) != qp.n || static_cast<int>(qp.box_hi.size()) != qp.n) {
      throw DomainError("box bounds must cover every variable");
    }
    for (int j = 0; j < qp.n; ++j) {
      if (std::isfinite(qp.box_lo[j])) {
        Row r;
        r.c = Eigen::VectorXd::Zero(qp.n);
        r.c[j] = 1.0;
        r.rhs = qp.box_lo[j];
        rows.push_back(std::move(r));
      }
      if (std::isfinite(qp.box_hi[j])) {
        Row r;
        r.c = Eigen::VectorXd::Zero(qp.n);
        r.c[j] = -1.0;
        r.rhs = -qp.box_hi[j];
        rows.push_back(std::move(r));
      }
    }
  }
  return rows;
}

double objective_of(const QuadraticProgram& qp, const Eigen::VectorXd& x) {
  double obj = 0.0;
  for (int j = 0; j < qp.n; ++j) {
    obj += qp.weights[j] * x[j] * x[j];
    if (!qp.linear.empty()) obj += qp.linear[j] * x[j];
  }
  return obj;
}

QPSolution run_solver(const QuadraticProgram& qp, const std::vector<int>& warm_active) {
  if (qp.n <= 0) throw DomainError("qp dimension must be positive");
  if (static_cast<int>(qp.weights.size()) != qp.n) throw DomainError("weights must cover every variable");
  if (!qp.linear.empty() && static_cast<int>(qp.linear.size()) != qp.n) {
    throw DomainError("linear term arity mismatch");
  }
  for (double w : qp.weights) {
    if (w < 0.0) throw DomainError("weights must be >= 0");
  }

  const std::vector<Row> rows = fold_rows(qp);
  const int m = static_cast<int>(rows.size());

  // Regularise zero weights so H stays positive definite; on faces where the
  // objective is flat this picks the minimum-norm point.
  double wmax = 0.0;
  for (double w : qp.weights) wmax = std::max(wmax, 2.0 * w);
  const double eps_reg = 1e-10 * std::max(1.0, wmax);
  Eigen::VectorXd hinv(qp.n);
  for (int j = 0; j < qp.n; ++j) hinv[j] = 1.0 / std::max(2.0 * qp.weights[j], eps_reg);

  Eigen::VectorXd a = Eigen::VectorXd::Zero(qp.n);
  if (!qp.linear.empty()) a = Eigen::Map<const Eigen::VectorXd>(qp.linear.data(), qp.n);

  Eigen::VectorXd x = -(hinv.array() * a.array()).matrix();  // unconstrained minimum

  std::vector<int> active;      // indices into rows
  Eigen::VectorXd u(m);         // multipliers for active rows (by active position)
  u.setZero();

  // Row scan order: warm rows first, then everything ascending.
  std::vector<int> scan_order;
  std::vector<char> queued(m, 0);
  for (int w : warm_active) {
    if (w >= 0 && w < static_cast<int>(qp.constraints.size()) && !queued[w]) {
      scan_order.push_back(w);
      queued[w] = 1;
    }
  }
  for (int i = 0; i < m; ++i) {
    if (!queued[i]) scan_order.push_back(i);
  }

  auto row_tol = [&](const Row& r) {
    return 1e-10 * std::max({1.0, std::fabs(r.rhs), r.c.lpNorm<Eigen::Infinity>()});
  };

  const int max_iter = 50 * (m + 2);
  int iter = 0;
  while (true) {
    if (++iter > max_iter) throw NumericalBreakdown("active-set solver failed to converge");

    // Pick the first violated row in scan order.
    int p = -1;
    for (int idx : scan_order) {
      const bool is_active = std::find(active.begin(), active.end(), idx) != active.end();
      if (is_active) continue;
      if (rows[idx].c.dot(x) - rows[idx].rhs < -row_tol(rows[idx])) {
        p = idx;
        break;
      }
    }
    if (p < 0) break;  // feasible and dual-feasible => optimal

    double u_p = 0.0;
    while (true) {
      if (++iter > max_iter) throw NumericalBreakdown("active-set solver failed to converge");
      const Eigen::VectorXd& np = rows[p].c;
      const Eigen::VectorXd ginv_np = (hinv.array() * np.array()).matrix();

      Eigen::VectorXd z;
      Eigen::VectorXd r;
      const int q = static_cast<int>(active.size());
      if (q == 0) {
        z = ginv_np;
      } else {
        Eigen::MatrixXd N(qp.n, q);
        for (int k = 0; k < q; ++k) N.col(k) = rows[active[k]].c;
        const Eigen::MatrixXd GiN = hinv.asDiagonal() * N;
        const Eigen::MatrixXd M = N.transpose() * GiN;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
        if (ldlt.info() != Eigen::Success) throw NumericalBreakdown("singular active-set system");
        r = ldlt.solve(N.transpose() * ginv_np);
        z = ginv_np - GiN * r;
      }

      const double z_tol = 1e-11 * std::max(1.0, ginv_np.lpNorm<Eigen::Infinity>());
      const bool z_zero = z.lpNorm<Eigen::Infinity>() <= z_tol;

      // Dual step bound: first active row whose multiplier would hit zero.
      double t1 = kInf;
      int blocking = -1;
      for (int k = 0; k < q; ++k) {
        if (r[k] > 1e-12) {
          const double ratio = u[k] / r[k];
          if (ratio < t1 - 1e-15) {
            t1 = ratio;
            blocking = k;
          }
        }
      }

      // Primal step to reach feasibility of row p.
      double t2 = kInf;
      if (!z_zero) t2 = -(np.dot(x) - rows[p].rhs) / z.dot(np);

      if (t1 == kInf && t2 == kInf) {
        QPSolution sol;
        sol.status = QPStatus::Infeasible;
        sol.x.assign(qp.n, 0.0);
        return sol;
      }

      const double t = std::min(t1, t2);
      if (!z_zero) x += t * z;
      for (int k = 0; k < q; ++k) u[k] -= t * r[k];
      u_p += t;

      if (t2 <= t1) {
        // Row p becomes active.
        active.push_back(p);
        u[q] = u_p;
        break;
      }
      // Drop the blocking row and try again with the same p.
      active.erase(active.begin() + blocking);
      for (int k = blocking; k < q - 1; ++k) u[k] = u[k + 1];
      u[q - 1] = 0.0;
    }
  }

  QPSolution sol;
  sol.status = QPStatus::Optimal;
  sol.x.assign(x.data(), x.data() + qp.n);
  sol.objective = objective_of(qp, x);
  for (int idx : active) {
    if (rows[idx].source >= 0) sol.active.push_back(rows[idx].source);
  }
  std::sort(sol.active.begin(), sol.active.end());
  return sol;
}

}  // namespace

QPSolution solve(const QuadraticProgram& qp) { return run_solver(qp, {}); }

QPSolution solve(const QuadraticProgram& qp, const std::vector<int>& warm_active) {
  return run_solver(qp, warm_active);
}

QPSolution brute_force_oracle(const QuadraticProgram& qp, double spacing) {
  if (qp.n <= 0) throw DomainError("qp dimension must be positive");
  if (spacing <= 0.0) throw DomainError("spacing must be > 0");
  if (static_cast<int>(qp.box_lo.size()) != qp.n || static_cast<int>(qp.box_hi.size()) != qp.n) {
    throw DomainError("oracle needs finite box bounds on every variable");
  }
  std::vector<long long> counts(qp.n);
  long long total = 1;
  for (int j = 0; j < qp.n; ++j) {
    if (!std::isfinite(qp.box_lo[j]) || !std::isfinite(qp.box_hi[j]) || qp.box_lo[j] > qp.box_hi[j]) {
      throw DomainError("oracle needs finite box bounds on every variable");
    }
    counts[j] = static_cast<long long>(std::floor((qp.box_hi[j] - qp.box_lo[j]) / spacing)) + 1;
    total *= counts[j];
    if (total > 20'000'000LL) throw DomainError("oracle grid too large");
  }

  QPSolution best;
  best.status = QPStatus::Infeasible;
  std::vector<double> x(qp.n);
  for (long long cell = 0; cell < total; ++cell) {
    long long rem = cell;
    for (int j = qp.n - 1; j >= 0; --j) {
      x[j] = qp.box_lo[j] + spacing * static_cast<double>(rem % counts[j]);
      rem /= counts[j];
    }
    bool ok = true;
    for (const auto& lc : qp.constraints) {
      if (lc.slack(x) < -1e-9) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    double obj = 0.0;
    for (int j = 0; j < qp.n; ++j) {
      obj += qp.weights[j] * x[j] * x[j];
      if (!qp.linear.empty()) obj += qp.linear[j] * x[j];
    }
    if (best.status == QPStatus::Infeasible || obj < best.objective) {
      best.status = QPStatus::Optimal;
      best.objective = obj;
      best.x = x;
    }
  }
  if (best.status == QPStatus::Infeasible) throw EmptyFeasibleGrid("no grid point satisfies the constraints");
  return best;
}

}  // namespace cav
