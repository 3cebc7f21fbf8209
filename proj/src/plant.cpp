#include "afmpc/plant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace afmpc {

void validate(const PlantParams& p) {
  if (!(p.k_lag > 0.0)) throw std::invalid_argument("k_lag must be > 0");
  if (p.gain == 0.0) throw std::invalid_argument("gain must be nonzero");
  if (!(p.bw_n >= 1.0)) throw std::invalid_argument("bw_n must be >= 1");
  if (p.bw_beta < 0.0 || p.bw_gamma < 0.0)
    throw std::invalid_argument("bw_beta/bw_gamma must be >= 0");
  if (!(p.asym >= 0.0 && p.asym < 1.0)) throw std::invalid_argument("asym must be in [0,1)");
  if (!(p.sat_lo < p.sat_hi)) throw std::invalid_argument("sat_lo must be < sat_hi");
  if (p.noise_std < 0.0) throw std::invalid_argument("noise_std must be >= 0");
}

PlantState plant_reset(const PlantParams& p, Scalar y0) {
  validate(p);
  if (!std::isfinite(y0)) throw std::invalid_argument("y0 must be finite");
  if (y0 < p.sat_lo || y0 > p.sat_hi)
    throw std::invalid_argument("y0 must lie in [sat_lo, sat_hi]");
  PlantState s;
  s.x_lag = y0;
  s.z = 0.0;
  s.u_prev = y0 / p.gain;  // holding this input keeps the lag state at y0
  s.poisoned = false;
  return s;
}

Scalar plant_measure(const PlantState& s, const PlantParams& p, std::mt19937_64& rng) {
  Scalar y = std::clamp(s.x_lag, p.sat_lo, p.sat_hi);
  if (p.noise_std > 0.0) {
    std::normal_distribution<Scalar> noise(0.0, p.noise_std);
    y += noise(rng);
  }
  return y;
}

Scalar plant_step(PlantState& s, const PlantParams& p, Scalar u, Scalar ts,
                  std::mt19937_64& rng) {
  if (s.poisoned) throw std::runtime_error("plant state poisoned; reset required");
  if (!(ts > 0.0) || !std::isfinite(ts)) throw std::invalid_argument("ts must be > 0");
  if (!std::isfinite(u)) {
    s.poisoned = true;
    throw std::runtime_error("non-finite plant input");
  }

  const Scalar du = u - s.u_prev;
  const Scalar sgn = du > 0.0 ? 1.0 : (du < 0.0 ? -1.0 : 0.0);

  // The hysteresis law is rate independent (z integrates along the u path),
  // so a large input step is taken in substeps small enough to keep the
  // explicit update contractive; one substep reproduces the plain one-shot
  // update bit for bit.
  int m = 1;
  const Scalar bg = p.bw_beta + p.bw_gamma;
  if (bg > 0.0 && du != 0.0) {
    const Scalar zstar =
        p.bw_a != 0.0 ? std::pow(std::abs(p.bw_a) / bg, 1.0 / p.bw_n) : 1.0;
    const Scalar zcap = std::max(std::abs(s.z), zstar) + 1.0;
    const Scalar lip = (1.0 + p.asym) * bg * p.bw_n * std::pow(zcap, p.bw_n - 1.0);
    const Scalar h_max = 0.2 / lip;
    if (std::abs(du) > h_max)
      m = static_cast<int>(std::min<Scalar>(std::ceil(std::abs(du) / h_max), 1 << 20));
  }
  const Scalar du_sub = du / static_cast<Scalar>(m);
  for (int i = 0; i < m; ++i) {
    const Scalar zn1 = std::pow(std::abs(s.z), p.bw_n - 1.0);
    const Scalar dz = p.bw_a * du_sub - p.bw_beta * std::abs(du_sub) * zn1 * s.z -
                      p.bw_gamma * du_sub * zn1 * std::abs(s.z);
    s.z += (1.0 + p.asym * sgn) * dz;
  }
  if (!std::isfinite(s.z)) {
    s.poisoned = true;
    throw std::runtime_error("plant hysteresis state diverged");
  }

  const Scalar alpha = std::exp(-ts / p.k_lag);
  s.x_lag = alpha * s.x_lag + (1.0 - alpha) * (p.gain * u + s.z);
  s.u_prev = u;
  return plant_measure(s, p, rng);
}

}  // namespace afmpc
