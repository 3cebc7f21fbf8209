#include "afmpc/plmodel.hpp"

#include <cmath>
#include <stdexcept>

namespace afmpc {

PlModel make_pl(Scalar tc, Scalar ts) {
  if (!(tc > 0.0) || !std::isfinite(tc)) throw std::invalid_argument("tc must be > 0");
  if (!(ts > 0.0) || !std::isfinite(ts)) throw std::invalid_argument("ts must be > 0");
  PlModel m;
  m.tc = tc;
  m.ts = ts;
  m.a_p = std::exp(-ts / tc);
  m.b_p = 1.0 - m.a_p;
  m.c_p = 1.0;
  m.x = 0.0;
  return m;
}

Scalar pl_step(PlModel& m, Scalar u_c) {
  const Scalar y = m.c_p * m.x;
  m.x = m.a_p * m.x + m.b_p * u_c;
  return y;
}

TimeSeries pl_filter(Scalar tc, Scalar ts, const TimeSeries& in) {
  if (std::abs(in.ts - ts) > 1e-12 * std::max<Scalar>(1.0, ts))
    throw std::invalid_argument("pl_filter: series sampling interval differs from ts");
  PlModel m = make_pl(tc, ts);
  VecX out(in.size());
  for (Eigen::Index k = 0; k < in.size(); ++k) out[k] = pl_step(m, in.values[k]);
  TimeSeries s = make_series(std::move(out), in.ts, in.t0);
  return s;
}

}  // namespace afmpc
