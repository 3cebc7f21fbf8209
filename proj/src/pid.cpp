#include "afmpc/pid.hpp"

#include <cmath>
#include <stdexcept>

namespace afmpc {

namespace {
void check_ts(Scalar ts) {
  if (!(ts > 0.0) || !std::isfinite(ts)) throw std::invalid_argument("ts must be > 0");
}
}  // namespace

Scalar pid_step(const PidGains& gains, PidState& state, Scalar e, Scalar ts) {
  check_ts(ts);
  state.integ += gains.ki * ts * e;
  const Scalar u = gains.kp * e + state.integ + gains.kd * (e - state.e_prev) / ts;
  state.e_prev = e;
  return u;
}

Vec3 pid_regressor(Scalar e, Scalar e_prev, Scalar integ_of_e, Scalar ts) {
  check_ts(ts);
  return Vec3(e, integ_of_e + ts * e, (e - e_prev) / ts);
}

}  // namespace afmpc
