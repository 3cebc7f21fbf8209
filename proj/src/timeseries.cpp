#include "afmpc/timeseries.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace afmpc {

namespace {

// Sample count for a [0, duration] grid: floor(duration/ts) + 1, with a small
// relative nudge so exact multiples are not lost to rounding (100/0.01 etc.).
Eigen::Index grid_size(Scalar ts, Scalar duration) {
  if (!(ts > 0.0) || !std::isfinite(ts)) throw std::invalid_argument("ts must be > 0");
  if (!(duration >= 0.0) || !std::isfinite(duration))
    throw std::invalid_argument("duration must be >= 0");
  return static_cast<Eigen::Index>(std::floor(duration / ts + 1e-9)) + 1;
}

void format_value(char* buf, size_t n, Scalar v) { std::snprintf(buf, n, "%.17g", v); }

}  // namespace

TimeSeries make_series(VecX values, Scalar ts, Scalar t0) {
  if (values.size() == 0) throw std::invalid_argument("TimeSeries must not be empty");
  if (!(ts > 0.0) || !std::isfinite(ts)) throw std::invalid_argument("ts must be > 0");
  TimeSeries s;
  s.values = std::move(values);
  s.ts = ts;
  s.t0 = t0;
  return s;
}

TimeSeries gen_sine(Scalar amplitude, Scalar offset, Scalar freq, Scalar ts, Scalar duration) {
  if (freq < 0.0 || !std::isfinite(freq)) throw std::invalid_argument("freq must be >= 0");
  const Eigen::Index n = grid_size(ts, duration);
  VecX v(n);
  const Scalar w = 2.0 * M_PI * freq;
  for (Eigen::Index k = 0; k < n; ++k)
    v[k] = offset + amplitude * std::sin(w * ts * static_cast<Scalar>(k));
  return make_series(std::move(v), ts);
}

TimeSeries gen_staircase(Scalar amplitude, Scalar offset, Scalar period, Scalar ts,
                         Scalar duration) {
  if (!(period > 0.0) || !std::isfinite(period))
    throw std::invalid_argument("period must be > 0");
  const Eigen::Index n = grid_size(ts, duration);
  const Scalar half = period / 2.0;
  VecX v(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Scalar t = ts * static_cast<Scalar>(k);
    const auto idx = static_cast<long long>(std::floor(t / half + 1e-9));
    if (idx <= 0) {
      v[k] = offset;  // initial hold before the first level
    } else if (idx % 2 == 1) {
      v[k] = offset - amplitude;  // low level first
    } else {
      v[k] = offset + amplitude;
    }
  }
  return make_series(std::move(v), ts);
}

Scalar mae(const TimeSeries& errors, Scalar t_start, Scalar t_end) {
  if (!(t_start <= t_end)) throw std::invalid_argument("mae: t_start must be <= t_end");
  const Scalar guard = 1e-9 * errors.ts;
  Scalar sum = 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index k = 0; k < errors.size(); ++k) {
    const Scalar t = errors.time_at(k);
    if (t >= t_start - guard && t <= t_end + guard) {
      sum += std::abs(errors.values[k]);
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("mae: window contains no samples");
  return sum / static_cast<Scalar>(count);
}

Scalar overshoot(const TimeSeries& y, const TimeSeries& r) {
  if (y.size() != r.size()) throw std::invalid_argument("overshoot: length mismatch");
  if (y.ts != r.ts) throw std::invalid_argument("overshoot: sampling mismatch");
  Scalar dir = 1.0;
  for (Eigen::Index k = r.size() - 1; k >= 1; --k) {
    const Scalar d = r.values[k] - r.values[k - 1];
    if (d != 0.0) {
      dir = d > 0.0 ? 1.0 : -1.0;
      break;
    }
  }
  Scalar peak = 0.0;
  for (Eigen::Index k = 0; k < y.size(); ++k)
    peak = std::max(peak, (y.values[k] - r.values[k]) * dir);
  return peak;
}

void write_csv(const TimeSeries& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "t,value\n";
  char tb[40], vb[40];
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    format_value(tb, sizeof tb, s.time_at(k));
    format_value(vb, sizeof vb, s.values[k]);
    out << tb << ',' << vb << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

TimeSeries read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
  std::vector<Scalar> ts_col, val_col;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("malformed csv row: " + line);
    ts_col.push_back(std::stod(line.substr(0, comma)));
    val_col.push_back(std::stod(line.substr(comma + 1)));
  }
  if (val_col.size() < 2) throw std::runtime_error("csv needs at least two rows: " + path);
  const Scalar dt = ts_col[1] - ts_col[0];
  if (!(dt > 0.0)) throw std::runtime_error("non-increasing timestamps: " + path);
  for (size_t k = 1; k < ts_col.size(); ++k) {
    const Scalar expect = ts_col[0] + dt * static_cast<Scalar>(k);
    if (std::abs(ts_col[k] - expect) > 1e-6 * std::max<Scalar>(1.0, std::abs(expect)))
      throw std::runtime_error("non-uniform sampling in csv: " + path);
  }
  VecX v = Eigen::Map<VecX>(val_col.data(), static_cast<Eigen::Index>(val_col.size()));
  return make_series(std::move(v), dt, ts_col[0]);
}

}  // namespace afmpc
