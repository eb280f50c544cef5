#pragma once

#include <utility>

#include "cav/constraint.hpp"

namespace cav {

// Parameters of the linear scheduling function Phi used by the lateral
// (conflict-point) certificate. gamma_tilde is the standstill gap plus the
// conflict-distance offset between the two paths; v0 and L are the entry
// speed and entry-to-conflict distance of the vehicle being constrained.
struct PhiParams {
  double phi = 0.0;
  double gamma_tilde = 0.0;
  double v0 = 0.0;
  double L = 0.0;
};

// Rear-end certificate between follower i and its predecessor k on the same
// path: u_i <= [(v_k - v_i) + (p_k - p_i - gamma - phi*v_i)] / phi.
LinearConstraint rear_end_condition(double p_i, double v_i, double p_k, double v_k, double phi,
                                    double gamma);

// Speed-band certificates: u <= v_max - v and u >= v_min - v.
std::pair<LinearConstraint, LinearConstraint> speed_conditions(double v, double v_min,
                                                               double v_max);

// Phi(p) = ((phi + gamma_tilde/v0)/L) * p - gamma_tilde/v0. Affine in p with
// Phi(0) = -gamma_tilde/v0 and Phi(L) = phi.
double phi_lemma1(const PhiParams& params, double p);

// Conflict-point certificate on the later-crossing vehicle i against the
// earlier-crossing k. Raw form (coefficient sign depends on Phi(p_i)):
//   -Phi(p_i)*u_i + [(v_k - v_i) - s*v_i^2 + (p_k - p_i) - Phi(p_i)*v_i
//                    - gamma_tilde] >= 0,  s = (phi + gamma_tilde/v0)/L.
LinearConstraint lateral_condition(double p_i, double v_i, double p_k, double v_k,
                                   const PhiParams& params);

// Places a single-variable row at position slot of an n-variable row.
LinearConstraint embed(const LinearConstraint& row, int slot, int n);

}  // namespace cav
