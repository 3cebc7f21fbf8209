#pragma once

#include <string>

#include "afmpc/types.hpp"

namespace afmpc {

/// Uniformly sampled scalar signal. Values are mm (displacements) or V
/// (valve commands) depending on context; time is seconds throughout.
struct TimeSeries {
  VecX values;
  Scalar ts = 1e-3;  ///< sampling interval [s], > 0
  Scalar t0 = 0.0;   ///< timestamp of values[0] [s]

  Eigen::Index size() const { return values.size(); }
  Scalar time_at(Eigen::Index k) const { return t0 + ts * static_cast<Scalar>(k); }
  Scalar t_end() const { return size() > 0 ? time_at(size() - 1) : t0; }
};

/// Validating constructor: throws std::invalid_argument on ts <= 0 or empty values.
TimeSeries make_series(VecX values, Scalar ts, Scalar t0 = 0.0);

/// offset + amplitude * sin(2*pi*freq * k*ts), k = 0 .. floor(duration/ts).
TimeSeries gen_sine(Scalar amplitude, Scalar offset, Scalar freq, Scalar ts, Scalar duration);

/// Square wave alternating between offset-amplitude and offset+amplitude,
/// each level held for period/2, starting at the low level after an initial
/// hold at offset for one half-period.
TimeSeries gen_staircase(Scalar amplitude, Scalar offset, Scalar period, Scalar ts,
                         Scalar duration);

/// Mean absolute value of `errors` over samples with t in [t_start, t_end]
/// (window endpoints inclusive). Throws if the window selects no samples.
Scalar mae(const TimeSeries& errors, Scalar t_start, Scalar t_end);

/// Peak excess of y beyond r in the direction of r's last step:
/// max over k of max(0, (y[k]-r[k]) * dir), dir = sign of the last nonzero
/// increment of r (+1 if r never moves). Requires matching length and ts.
Scalar overshoot(const TimeSeries& y, const TimeSeries& r);

/// Two-column CSV with header "t,value"; one row per sample.
void write_csv(const TimeSeries& s, const std::string& path);

/// Reads the two-column format produced by write_csv. The sampling interval
/// is inferred from the first two timestamps and validated on later rows.
TimeSeries read_csv(const std::string& path);

}  // namespace afmpc
