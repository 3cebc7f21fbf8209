#include "afmpc/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace afmpc {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

Scalar to_scalar(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const Scalar v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': not a number: '" + value + "'");
  }
}

int to_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': not an integer: '" + value + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing junk");
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': not a seed: '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("config key '" + key + "': not a boolean: '" + value + "'");
}

}  // namespace

std::map<std::string, std::string> parse_config_pairs(const std::string& text) {
  std::map<std::string, std::string> pairs;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": missing '='");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    if (!pairs.emplace(key, value).second)
      throw std::invalid_argument("config: duplicate key '" + key + "'");
  }
  return pairs;
}

ConfigFile parse_config(const std::string& text) {
  auto pairs = parse_config_pairs(text);
  ConfigFile file;
  ExperimentConfig& cfg = file.experiment;

  auto take = [&pairs](const std::string& key) -> const std::string* {
    auto it = pairs.find(key);
    if (it == pairs.end()) return nullptr;
    return &it->second;
  };
  auto take_scalar = [&](const std::string& key, Scalar& dst) {
    if (const std::string* v = take(key)) dst = to_scalar(key, *v);
  };
  auto take_int = [&](const std::string& key, int& dst) {
    if (const std::string* v = take(key)) dst = to_int(key, *v);
  };
  // "case" seeds the initial gains; explicit theta0.* keys override it below.
  if (const std::string* v = take("case")) cfg.theta0 = case_gains(to_int("case", *v));
  if (const std::string* v = take("mode")) cfg.mode = mode_from_string(*v);
  take_scalar("ts", cfg.ts);
  take_scalar("duration", cfg.duration);
  take_scalar("lambda", cfg.lambda);
  take_scalar("tc0", cfg.tc0);
  take_scalar("y_init", cfg.y_init);
  take_scalar("steady.start", cfg.steady_start);
  take_scalar("steady.end", cfg.steady_end);
  if (const std::string* v = take("seed")) cfg.seed = to_u64("seed", *v);
  take_int("repeats", file.matrix_repeats);

  if (const std::string* v = take("trajectory.kind"))
    cfg.trajectory.kind = trajectory_from_string(*v);
  take_scalar("trajectory.amplitude", cfg.trajectory.amplitude);
  take_scalar("trajectory.offset", cfg.trajectory.offset);
  take_scalar("trajectory.freq", cfg.trajectory.freq);

  // Pretune trajectory inherits the control trajectory unless overridden.
  cfg.pretune_trajectory = cfg.trajectory;
  if (const std::string* v = take("pretune.kind"))
    cfg.pretune_trajectory.kind = trajectory_from_string(*v);
  take_scalar("pretune.amplitude", cfg.pretune_trajectory.amplitude);
  take_scalar("pretune.offset", cfg.pretune_trajectory.offset);
  take_scalar("pretune.freq", cfg.pretune_trajectory.freq);
  take_scalar("pretune.duration", cfg.pretune_duration);
  if (const std::string* v = take("pretune.optimize_tc"))
    cfg.pretune_optimize_tc = to_bool("pretune.optimize_tc", *v);

  take_scalar("theta0.kp", cfg.theta0.kp);
  take_scalar("theta0.ki", cfg.theta0.ki);
  take_scalar("theta0.kd", cfg.theta0.kd);

  const bool has_tuned = pairs.count("tuned.kp") || pairs.count("tuned.ki") ||
                         pairs.count("tuned.kd") || pairs.count("tuned.tc");
  if (has_tuned) {
    ExtendedGains tuned;
    bool ok = true;
    for (const char* key : {"tuned.kp", "tuned.ki", "tuned.kd", "tuned.tc"})
      ok = ok && pairs.count(key) > 0;
    if (!ok)
      throw std::invalid_argument("config: tuned.kp/.ki/.kd/.tc must be given together");
    tuned.gains.kp = to_scalar("tuned.kp", pairs.at("tuned.kp"));
    tuned.gains.ki = to_scalar("tuned.ki", pairs.at("tuned.ki"));
    tuned.gains.kd = to_scalar("tuned.kd", pairs.at("tuned.kd"));
    tuned.tc = to_scalar("tuned.tc", pairs.at("tuned.tc"));
    cfg.tuned = tuned;
  }

  take_scalar("plant.k_lag", cfg.plant.k_lag);
  take_scalar("plant.gain", cfg.plant.gain);
  take_scalar("plant.bw_a", cfg.plant.bw_a);
  take_scalar("plant.bw_beta", cfg.plant.bw_beta);
  take_scalar("plant.bw_gamma", cfg.plant.bw_gamma);
  take_scalar("plant.bw_n", cfg.plant.bw_n);
  take_scalar("plant.asym", cfg.plant.asym);
  take_scalar("plant.sat_lo", cfg.plant.sat_lo);
  take_scalar("plant.sat_hi", cfg.plant.sat_hi);
  take_scalar("plant.noise_std", cfg.plant.noise_std);

  take_int("mpc.hp", cfg.mpc.hp);
  take_int("mpc.hu", cfg.mpc.hu);
  take_scalar("mpc.q", cfg.mpc.q);
  take_scalar("mpc.r_w", cfg.mpc.r_w);
  take_scalar("mpc.ru_w", cfg.mpc.ru_w);
  take_scalar("mpc.u_min", cfg.mpc.u_min);
  take_scalar("mpc.u_max", cfg.mpc.u_max);

  take_scalar("rls.mu", cfg.rls.mu);
  take_scalar("rls.eps", cfg.rls.eps);
  take_scalar("rls.p0_scale", cfg.rls.p0_scale);
  take_scalar("rls.r0_scale", cfg.rls.r0_scale);

  static const char* known[] = {
      "case", "mode", "ts", "duration", "lambda", "tc0", "y_init", "steady.start",
      "steady.end", "seed", "repeats", "trajectory.kind", "trajectory.amplitude",
      "trajectory.offset", "trajectory.freq", "pretune.kind", "pretune.amplitude",
      "pretune.offset", "pretune.freq", "pretune.duration", "pretune.optimize_tc",
      "theta0.kp", "theta0.ki",
      "theta0.kd", "tuned.kp", "tuned.ki", "tuned.kd", "tuned.tc", "plant.k_lag",
      "plant.gain", "plant.bw_a", "plant.bw_beta", "plant.bw_gamma", "plant.bw_n",
      "plant.asym", "plant.sat_lo", "plant.sat_hi", "plant.noise_std", "mpc.hp", "mpc.hu",
      "mpc.q", "mpc.r_w", "mpc.ru_w", "mpc.u_min", "mpc.u_max", "rls.mu", "rls.eps",
      "rls.p0_scale", "rls.r0_scale"};
  for (const auto& [key, value] : pairs) {
    (void)value;
    bool found = false;
    for (const char* k : known)
      if (key == k) {
        found = true;
        break;
      }
    if (!found) throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  return file;
}

ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace afmpc
