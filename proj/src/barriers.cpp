#include "cav/barriers.hpp"

#include "cav/errors.hpp"

namespace cav {

LinearConstraint rear_end_condition(double p_i, double v_i, double p_k, double v_k, double phi,
                                    double gamma) {
  if (phi <= 0.0) throw DomainError("phi must be > 0");
  LinearConstraint lc;
  lc.coeffs = {1.0};
  lc.rhs = ((v_k - v_i) + (p_k - p_i - gamma - phi * v_i)) / phi;
  lc.sense = Sense::Le;
  lc.tag = ConstraintTag::RearEnd;
  return lc;
}

std::pair<LinearConstraint, LinearConstraint> speed_conditions(double v, double v_min,
                                                               double v_max) {
  LinearConstraint hi;
  hi.coeffs = {1.0};
  hi.rhs = v_max - v;
  hi.sense = Sense::Le;
  hi.tag = ConstraintTag::SpeedMax;

  LinearConstraint lo;
  lo.coeffs = {1.0};
  lo.rhs = v_min - v;
  lo.sense = Sense::Ge;
  lo.tag = ConstraintTag::SpeedMin;
  return {hi, lo};
}

double phi_lemma1(const PhiParams& params, double p) {
  if (params.v0 <= 0.0) throw DomainError("entry speed must be > 0");
  if (params.L <= 0.0) throw DomainError("conflict distance must be > 0");
  const double ratio = params.gamma_tilde / params.v0;
  return ((params.phi + ratio) / params.L) * p - ratio;
}

LinearConstraint lateral_condition(double p_i, double v_i, double p_k, double v_k,
                                   const PhiParams& params) {
  const double s = (params.phi + params.gamma_tilde / params.v0) / params.L;
  const double Phi = phi_lemma1(params, p_i);
  LinearConstraint lc;
  lc.coeffs = {-Phi};
  lc.rhs = -((v_k - v_i) - s * v_i * v_i + (p_k - p_i) - Phi * v_i - params.gamma_tilde);
  lc.sense = Sense::Ge;
  lc.tag = ConstraintTag::Lateral;
  return lc;
}

LinearConstraint embed(const LinearConstraint& row, int slot, int n) {
  if (row.coeffs.size() != 1) throw DomainError("embed expects a single-variable row");
  if (slot < 0 || slot >= n) throw DomainError("slot outside variable vector");
  LinearConstraint out = row;
  out.coeffs.assign(n, 0.0);
  out.coeffs[slot] = row.coeffs[0];
  return out;
}

}  // namespace cav
