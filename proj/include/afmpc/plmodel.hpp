#pragma once

#include "afmpc/timeseries.hpp"
#include "afmpc/types.hpp"

namespace afmpc {

/// Pseudo-linearized first-order reference model
///   x(k+1) = a_p x(k) + b_p u_c(k),   y(k) = c_p x(k)
/// with a_p = exp(-ts/tc), b_p = 1 - a_p, c_p = 1 (unit DC gain by
/// construction). Doubles as the tuning reference model and the MPC
/// predictor.
struct PlModel {
  Scalar tc = 0.0;   ///< time constant [s]
  Scalar ts = 0.0;   ///< sampling interval [s]
  Scalar a_p = 0.0;
  Scalar b_p = 0.0;
  Scalar c_p = 1.0;
  Scalar x = 0.0;    ///< state [mm]
};

/// Throws std::invalid_argument unless tc > 0 and ts > 0.
PlModel make_pl(Scalar tc, Scalar ts);

/// One recursion step: returns the pre-update output c_p*x(k), then advances
/// x(k+1) = a_p x(k) + b_p u_c(k).
Scalar pl_step(PlModel& m, Scalar u_c);

/// Zero-initial-state filtering of a whole series through the model.
TimeSeries pl_filter(Scalar tc, Scalar ts, const TimeSeries& in);

}  // namespace afmpc
