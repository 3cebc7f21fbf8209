#pragma once

#include "afmpc/pid.hpp"
#include "afmpc/plmodel.hpp"
#include "afmpc/types.hpp"

namespace afmpc {

struct MpcConfig {
  int hp = 5;          ///< prediction horizon, >= 1
  int hu = 5;          ///< control horizon, 1 <= hu <= hp
  Scalar q = 1.0;      ///< tracking weight, >= 0
  Scalar r_w = 40.0;   ///< command-move weight, > 0
  Scalar ru_w = 1.0;   ///< input-move weight, >= 0
  Scalar u_min = 0.0;  ///< inner-input floor [V]
  Scalar u_max = 10.0; ///< inner-input ceiling [V]
};

void validate(const MpcConfig& cfg);

struct MpcSolution {
  VecX u_c_plan;       ///< optimal command plan, length hu [mm]
  VecX u_hat_plan;     ///< predicted inner inputs along the plan [V]
  Scalar j = 0.0;      ///< objective at the returned plan
  int active_constraints = 0;
  int iterations = 0;
  bool feasible = true;
};

/// Model predictions y^(k+i), i = 1..hp, from state x0 under the command
/// plan (the last plan entry is held beyond hu).
VecX predict_outputs(const PlModel& model, Scalar x0, const VecX& u_c_plan, int hp);

/// Frozen-gain inner-loop predictions u^(k+i), i = 0..hu-1, driven by
/// e^(k+i) = u_c(k+i) - y^(k+i). y_hat_at_plan[i] must hold y^(k+i) starting
/// at the CURRENT output (y_hat_at_plan[0] = c_p x0). The integrator seed
/// and e^(k-1) come from pid_state.
VecX predict_inputs(const PidGains& gains, const PidState& pid_state, const VecX& u_c_plan,
                    const VecX& y_hat_at_plan, Scalar ts);

/// J = sum_i q (y^(k+i) - r(k+i))^2        i = 1..hp
///   + sum_i r_w  (u_c(k+i) - u_c(k+i-1))^2   i = 0..hu-1, u_c(k-1) = u_c_prev
///   + sum_i ru_w (u^(k+i) - u^(k+i-1))^2     i = 0..hu-1, u^(k-1) = u_prev
Scalar mpc_objective(const MpcConfig& cfg, const VecX& u_c_plan, Scalar u_c_prev,
                     const VecX& u_hat_plan, Scalar u_prev, const VecX& y_hat,
                     const VecX& r_preview);

/// Solves the command plan QP subject to u_min <= u^(k+i) <= u_max by a
/// primal active-set method over the 2*hu inequality constraints. When no
/// plan can keep u^ inside the box (degenerate frozen gains), returns the
/// plan minimizing the total constraint violation, flagged infeasible.
MpcSolution solve_mpc(const MpcConfig& cfg, const PlModel& model, Scalar x0,
                      const VecX& r_preview, const PidGains& gains, const PidState& pid_state,
                      Scalar u_c_prev, Scalar u_prev);

}  // namespace afmpc
