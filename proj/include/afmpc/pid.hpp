#pragma once

#include "afmpc/types.hpp"

namespace afmpc {

/// Discrete PID gains theta = [kp, ki, kd]; the controller is
/// u = kp*e + ki*Ts*sum(e) + kd*(e - e_prev)/Ts (positional form).
struct PidGains {
  Scalar kp = 0.0;
  Scalar ki = 0.0;
  Scalar kd = 0.0;

  Vec3 vec() const { return Vec3(kp, ki, kd); }
  static PidGains from_vec(const Vec3& v) { return PidGains{v[0], v[1], v[2]}; }
};

/// Controller memory: integ accumulates ki*ts*e (gain included, so online
/// gain changes keep the recursion u_i(k) = u_i(k-1) + ki*ts*e(k) exact);
/// e_prev is the previous error sample.
struct PidState {
  Scalar integ = 0.0;
  Scalar e_prev = 0.0;
};

/// One positional PID step; updates state in place and returns the raw
/// (unclamped) output. Throws std::invalid_argument on ts <= 0.
Scalar pid_step(const PidGains& gains, PidState& state, Scalar e, Scalar ts);

/// Controller basis applied to an error stream: returns
/// [e, integ_of_e + ts*e, (e - e_prev)/ts] where integ_of_e is the
/// accumulated ts-weighted error sum BEFORE this sample (gain-free, unlike
/// PidState::integ). Shared by the tuning and estimation modules so all
/// three basis channels have a single implementation.
Vec3 pid_regressor(Scalar e, Scalar e_prev, Scalar integ_of_e, Scalar ts);

}  // namespace afmpc
