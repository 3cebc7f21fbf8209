#pragma once

#include <random>

#include "afmpc/types.hpp"

namespace afmpc {

/// Hysteretic actuator surrogate: an input-driven Bouc-Wen hysteresis
/// element in series with a first-order lag and output saturation.
///
///   z      <- z + (1 + asym*sgn(du)) * (bw_a*du - bw_beta*|du|*|z|^(n-1)*z
///                                                 - bw_gamma*du*|z|^n)
///   x_lag  <- alpha*x_lag + (1-alpha)*(gain*u + z),  alpha = exp(-ts/k_lag)
///   y      =  clamp(x_lag, sat_lo, sat_hi) + N(0, noise_std^2)
///
/// Under a monotone ramp z settles at z* = (bw_a/(bw_beta+bw_gamma))^(1/n);
/// the asymmetry factor tilts loading against unloading.
struct PlantParams {
  Scalar k_lag = 0.15;      ///< lag time constant [s]
  Scalar gain = 5.0;        ///< static gain [mm/V]
  Scalar bw_a = 1.0;        ///< hysteresis drive coefficient
  Scalar bw_beta = 0.4;     ///< hysteresis shape (dissipative)
  Scalar bw_gamma = 0.4;    ///< hysteresis shape (hardening/softening)
  Scalar bw_n = 1.0;        ///< hysteresis exponent, >= 1
  Scalar asym = 0.3;        ///< loading/unloading asymmetry, in [0, 1)
  Scalar sat_lo = 0.0;      ///< output saturation floor [mm]
  Scalar sat_hi = 60.0;     ///< output saturation ceiling [mm]
  Scalar noise_std = 0.01;  ///< measurement noise sigma [mm]
};

struct PlantState {
  Scalar x_lag = 0.0;   ///< lag state [mm]
  Scalar z = 0.0;       ///< hysteresis state [mm]
  Scalar u_prev = 0.0;  ///< previous input [V]
  bool poisoned = false;
};

/// Throws std::invalid_argument on inconsistent parameters.
void validate(const PlantParams& p);

/// Equilibrium state producing output y0 with zero hysteresis memory.
PlantState plant_reset(const PlantParams& p, Scalar y0);

/// Output map of the current state (one noise draw when noise_std > 0).
Scalar plant_measure(const PlantState& s, const PlantParams& p, std::mt19937_64& rng);

/// Advances the state one interval under input u and returns the new
/// measured output. A non-finite input poisons the state; stepping a
/// poisoned state throws std::runtime_error until plant_reset.
Scalar plant_step(PlantState& s, const PlantParams& p, Scalar u, Scalar ts,
                  std::mt19937_64& rng);

}  // namespace afmpc
