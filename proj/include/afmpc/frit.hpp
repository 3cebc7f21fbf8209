#pragma once

#include "afmpc/pid.hpp"
#include "afmpc/plmodel.hpp"
#include "afmpc/timeseries.hpp"
#include "afmpc/types.hpp"

namespace afmpc {

/// PID gains extended with the reference-model time constant, the joint
/// parameter vector of the offline tuning stage.
struct ExtendedGains {
  PidGains gains;
  Scalar tc = 0.01;  ///< reference-model time constant [s], > 0
};

/// One closed-loop experiment: input u0 [V] and output y0 [mm] records with
/// identical sampling.
struct PriorData {
  TimeSeries u0;
  TimeSeries y0;
};

/// Validates lengths (>= 10, equal), sampling, and finiteness.
PriorData make_prior(TimeSeries u0, TimeSeries y0);

struct TuneOptions {
  Scalar tol = 1e-8;        ///< simplex diameter convergence threshold
  int max_iters = 5000;     ///< total simplex iteration budget
  bool optimize_tc = true;  ///< false freezes tc at theta0.tc (gains-only search)
  int restarts = 1;         ///< rebuilds of the simplex around the incumbent
};

struct EfritValue {
  Scalar j = 0.0;
  Scalar j_tracking = 0.0;
  Scalar j_input = 0.0;
};

struct TuneReport {
  ExtendedGains theta_star;
  Scalar j_value = 0.0;
  Scalar j_tracking = 0.0;
  Scalar j_input = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Numerator coefficients of the controller written as a rational function
/// in z^-1: C(z) = (n0 + n1 z^-1 + n2 z^-2) / (Ts (1 - z^-1)).
/// n0 = kp*Ts + ki*Ts^2 + kd is the leading denominator coefficient of the
/// inverse controller; the inverse is well posed iff n0 != 0.
void controller_coeffs(const PidGains& g, Scalar ts, Scalar& n0, Scalar& n1, Scalar& n2);

/// True when the inverse controller is ill posed at these gains (n0 ~ 0).
bool degenerate_controller(const PidGains& g, Scalar ts);

/// Fictitious reference: r~(k) = C^-1(z) u0(k) + y0(k), computed by running
/// the inverse-controller difference equation on u0 with zero initial
/// conditions. Throws std::domain_error on a degenerate controller.
TimeSeries fictitious_reference(const PidGains& g, const PriorData& data);

/// Forward controller filter applied to a whole error series (zero initial
/// state); the sample-wise recursion is pid_step.
TimeSeries controller_filter(const PidGains& g, const TimeSeries& e);

/// Model-matching cost with input-difference regularization:
///   j_tracking = sum_k (y0 - y~)^2,  y~ = G_m(tc) r~
///   j_input    = sum_k (du~)^2,      u~ = C(theta)(r~ - y~), du~(0) = 0
///   j          = j_tracking + lambda * j_input
/// lambda = 0 reduces to the plain model-matching cost.
EfritValue efrit_objective(const ExtendedGains& theta, const PriorData& data, Scalar lambda);

/// Derivative-free minimization of efrit_objective over
/// [kp, ki, kd, log(tc)] (log parameterization keeps every evaluated tc
/// positive) by a Nelder-Mead simplex with one restart from the incumbent.
TuneReport tune(const ExtendedGains& theta0, const PriorData& data, Scalar lambda,
                const TuneOptions& opts = {});

}  // namespace afmpc
