#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace cav {

// Provenance of a control constraint row; carried through the QP so the sim
// can report which certificates were binding at each step.
enum class ConstraintTag {
  RearEnd,
  SpeedMax,
  SpeedMin,
  Lateral,
  Pedestrian,
  RoadEdge,
  Steering,
  Jerk,
  SoftLane,
  SoftSpeed,
  AntiOvershoot,
};

const char* to_string(ConstraintTag tag);

enum class Sense { Ge, Le };

// One affine inequality over a decision vector: coeffs . x (>=|<=) rhs.
struct LinearConstraint {
  std::vector<double> coeffs;
  double rhs = 0.0;
  Sense sense = Sense::Ge;
  ConstraintTag tag = ConstraintTag::RearEnd;

  // Signed satisfaction margin; >= 0 iff the constraint holds at x.
  double slack(const std::vector<double>& x) const {
    double dot = 0.0;
    for (std::size_t i = 0; i < coeffs.size() && i < x.size(); ++i) dot += coeffs[i] * x[i];
    return sense == Sense::Ge ? dot - rhs : rhs - dot;
  }
};

inline const char* to_string(ConstraintTag tag) {
  switch (tag) {
    case ConstraintTag::RearEnd: return "RearEnd";
    case ConstraintTag::SpeedMax: return "SpeedMax";
    case ConstraintTag::SpeedMin: return "SpeedMin";
    case ConstraintTag::Lateral: return "Lateral";
    case ConstraintTag::Pedestrian: return "Pedestrian";
    case ConstraintTag::RoadEdge: return "RoadEdge";
    case ConstraintTag::Steering: return "Steering";
    case ConstraintTag::Jerk: return "Jerk";
    case ConstraintTag::SoftLane: return "SoftLane";
    case ConstraintTag::SoftSpeed: return "SoftSpeed";
    case ConstraintTag::AntiOvershoot: return "AntiOvershoot";
  }
  return "?";
}

}  // namespace cav
