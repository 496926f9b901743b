#pragma once

#include "ius/arm_model.hpp"

namespace ius {

// Joint-space inertia matrix by the composite rigid body recursion, computed
// with world-frame spatial inertias.
Matrix7d mass_matrix(const ArmModel& model, const Vector7d& q);

// Coriolis and centrifugal torques C(q, qdot) qdot by recursive Newton-Euler
// with zero joint acceleration. No gravity term: gravity is compensated.
Vector7d bias_torques(const ArmModel& model, const Vector7d& q, const Vector7d& qdot);

double kinetic_energy(const ArmModel& model, const Vector7d& q, const Vector7d& qdot);

}  // namespace ius
