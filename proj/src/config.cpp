#include "fiberpinn/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fiberpinn/errors.hpp"

namespace fiberpinn {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

[[noreturn]] void syntax(const std::string& origin, int line, const std::string& what) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": " + what);
}

bool parse_number(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

// Removes a trailing comment, leaving '#' inside quotes alone.
std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

ConfigValue parse_value(std::string_view v, const std::string& origin, int line) {
  if (v.empty()) syntax(origin, line, "missing value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') syntax(origin, line, "unterminated string");
    const auto body = v.substr(1, v.size() - 2);
    if (body.find('"') != std::string_view::npos) syntax(origin, line, "stray quote in string");
    return std::string(body);
  }
  if (v == "true") return true;
  if (v == "false") return false;
  if (v.front() == '[') {
    if (v.back() != ']') syntax(origin, line, "unterminated array");
    std::vector<double> out;
    auto body = trim(v.substr(1, v.size() - 2));
    while (!body.empty()) {
      const auto comma = body.find(',');
      const auto item = trim(body.substr(0, comma));
      double x;
      if (!parse_number(item, x)) syntax(origin, line, "arrays hold numbers only, got '" + std::string(item) + "'");
      out.push_back(x);
      if (comma == std::string_view::npos) break;
      body = trim(body.substr(comma + 1));
    }
    return out;
  }
  double x;
  if (!parse_number(v, x)) syntax(origin, line, "cannot parse value '" + std::string(v) + "'");
  return x;
}

/// Typed access that remembers which keys were consumed.
class Reader {
 public:
  Reader(const ConfigDocument& doc, std::string origin) : doc_(doc), origin_(std::move(origin)) {}

  bool has(const std::string& key) {
    used_.insert(key);
    return doc_.values.count(key) != 0;
  }

  double number(const std::string& key) { return get<double>(key, "a number"); }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  long long integer(const std::string& key, long long lo, long long hi) {
    const double v = number(key);
    if (v != std::floor(v) || v < static_cast<double>(lo) || v > static_cast<double>(hi))
      fail(key, "expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<long long>(v);
  }
  long long integer(const std::string& key, long long lo, long long hi, long long fallback) {
    return has(key) ? integer(key, lo, hi) : fallback;
  }

  std::string string(const std::string& key) { return get<std::string>(key, "a string"); }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) { return has(key) ? get<bool>(key, "true or false") : fallback; }

  std::vector<double> array(const std::string& key) { return get<std::vector<double>>(key, "an array"); }

  double positive(const std::string& key) {
    const double v = number(key);
    if (!(v > 0.0)) fail(key, "must be positive");
    return v;
  }
  double positive(const std::string& key, double fallback) { return has(key) ? positive(key) : fallback; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const auto it = doc_.lines.find(key);
    const std::string where = it == doc_.lines.end() ? origin_ : origin_ + ":" + std::to_string(it->second);
    throw ConfigError(where + ": " + key + ": " + what);
  }

  void reject_unknown() const {
    for (const auto& [key, value] : doc_.values)
      if (!used_.count(key)) fail(key, "unknown key");
  }

 private:
  template <class T>
  T get(const std::string& key, const char* expected) {
    used_.insert(key);
    const auto it = doc_.values.find(key);
    if (it == doc_.values.end()) fail(key, "required key is missing");
    if (!std::holds_alternative<T>(it->second)) fail(key, std::string("expected ") + expected);
    return std::get<T>(it->second);
  }

  const ConfigDocument& doc_;
  std::string origin_;
  std::set<std::string> used_;
};

PulseShape parse_shape(Reader& r, const std::string& key) {
  const auto s = r.string(key, "gaussian");
  if (s == "gaussian") return PulseShape::Gaussian;
  if (s == "sech") return PulseShape::Sech;
  if (s == "supergaussian") return PulseShape::SuperGaussian;
  r.fail(key, "expected gaussian, sech or supergaussian");
}

FiberParams parse_fiber(Reader& r, TaskKind task) {
  const std::string preset = r.string("fiber.preset", to_string(task));
  FiberParams f;
  if (preset == "pulse")
    f = pulse_task_fiber();
  else if (preset == "signal")
    f = signal_task_fiber();
  else if (preset == "birefringence")
    f = birefringence_task_fiber();
  else
    r.fail("fiber.preset", "expected pulse, signal or birefringence");
  f.alpha = r.number("fiber.alpha_per_m", f.alpha);
  f.lambda0 = r.number("fiber.lambda0_nm", f.lambda0 * 1e9) * 1e-9;
  f.dispersion = ps_nm_km_to_si(r.number("fiber.dispersion_ps_nm_km", si_to_ps_nm_km(f.dispersion)));
  f.slope = ps_nm2_km_to_si(r.number("fiber.slope_ps_nm2_km", si_to_ps_nm2_km(f.slope)));
  f.gamma = r.number("fiber.gamma_per_w_km", f.gamma * 1e3) * 1e-3;
  f.tau = r.number("fiber.tau_fs", f.tau * 1e15) * 1e-15;
  f.a_eff = r.number("fiber.a_eff_um2", f.a_eff * 1e12) * 1e-12;
  if (r.has("fiber.delta_beta1_ps_km")) f.delta_beta1 = r.number("fiber.delta_beta1_ps_km") * 1e-15;
  if (task != TaskKind::Birefringence) f.delta_beta1.reset();
  try {
    f.validate();
  } catch (const std::invalid_argument& e) {
    r.fail("fiber", e.what());
  }
  return f;
}

LaunchProfile parse_launch(Reader& r, TaskKind task) {
  const std::string kind = r.string("launch.kind", task == TaskKind::SignalTransmission ? "ook" : "pulse");
  const double p = r.positive("launch.peak_power_mw", 1.0) * 1e-3;
  try {
    if (kind == "pulse") {
      const auto shape = parse_shape(r, "launch.shape");
      const double t0 = r.positive("launch.t0_ps") * 1e-12;
      const double center = r.number("launch.center_ps", 0.0) * 1e-12;
      const int order = static_cast<int>(r.integer("launch.order", 1, 16, 2));
      return make_pulse(shape, t0, p, center, order);
    }
    if (kind == "train") {
      const auto shape = parse_shape(r, "launch.shape");
      const double t0 = r.positive("launch.t0_ps") * 1e-12;
      const int order = static_cast<int>(r.integer("launch.order", 1, 16, 2));
      const int count = static_cast<int>(r.integer("launch.count", 1, 1024));
      const double spacing = r.positive("launch.spacing_ps") * 1e-12;
      return make_pulse_train(shape, t0, p, count, spacing, order);
    }
    if (kind == "ook") {
      const double baud = r.positive("launch.baud_gbaud") * 1e9;
      const double rise = r.number("launch.rise_fraction", 0.25);
      if (r.has("launch.bits")) {
        std::vector<std::uint8_t> bits;
        for (double b : r.array("launch.bits")) {
          if (b != 0.0 && b != 1.0) r.fail("launch.bits", "bits must be 0 or 1");
          bits.push_back(static_cast<std::uint8_t>(b));
        }
        return make_ook_pattern(baud, bits, p, rise);
      }
      const int n = static_cast<int>(r.integer("launch.n_symbols", 1, 1 << 20, 16));
      const auto seed = static_cast<std::uint64_t>(r.integer("launch.bits_seed", 0, 1LL << 53, 42));
      return make_ook(baud, n, seed, p, rise);
    }
  } catch (const std::invalid_argument& e) {
    r.fail("launch", e.what());
  }
  r.fail("launch.kind", "expected pulse, train or ook");
}

std::vector<double> km_list(Reader& r, const std::string& key, std::vector<double> fallback_m) {
  if (!r.has(key)) return fallback_m;
  std::vector<double> out;
  for (double km : r.array(key)) out.push_back(km * 1e3);
  return out;
}

}  // namespace

ConfigDocument parse_config_document(std::string_view text, const std::string& origin) {
  ConfigDocument doc;
  std::string section;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') syntax(origin, line_no, "malformed section header");
      const auto name = trim(line.substr(1, line.size() - 2));
      if (!is_identifier(name)) syntax(origin, line_no, "bad section name '" + std::string(name) + "'");
      section = std::string(name);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) syntax(origin, line_no, "expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (!is_identifier(key)) syntax(origin, line_no, "bad key '" + std::string(key) + "'");
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    if (doc.values.count(full)) syntax(origin, line_no, "duplicate key " + full);
    doc.values[full] = parse_value(trim(line.substr(eq + 1)), origin, line_no);
    doc.lines[full] = line_no;
  }
  return doc;
}

double default_t_max(const TrainingConfig& c, int guard_symbols) {
  const LaunchProfile& l = c.launch;
  switch (l.kind) {
    case LaunchProfile::Kind::Ook:
      return (0.5 * static_cast<double>(l.bits.size()) + guard_symbols) * l.t0;
    case LaunchProfile::Kind::PulseTrain:
      return 0.5 * (l.count - 1) * l.spacing + 8.0 * l.t0;
    case LaunchProfile::Kind::Pulse:
      break;
  }
  const double half = c.task == TaskKind::Birefringence ? 12.0 * l.t0 : 8.0 * l.t0;
  return std::abs(l.center) + half;
}

RunConfig make_run_config(const ConfigDocument& doc, const std::string& origin) {
  Reader r(doc, origin);
  RunConfig rc;
  TrainingConfig& t = rc.train;

  const std::string task = r.string("task");
  if (task == "pulse")
    t.task = TaskKind::PulseEvolution;
  else if (task == "signal")
    t.task = TaskKind::SignalTransmission;
  else if (task == "birefringence")
    t.task = TaskKind::Birefringence;
  else
    r.fail("task", "expected pulse, signal or birefringence");
  t.seed = static_cast<std::uint64_t>(r.integer("seed", 0, 1LL << 53, 1));
  t.threads = static_cast<int>(r.integer("threads", 0, 4096, 0));

  t.fiber = parse_fiber(r, t.task);
  t.launch = parse_launch(r, t.task);
  if (t.task == TaskKind::Birefringence)
    t.theta = r.number("launch.theta_deg", 45.0) * kPi / 180.0;
  rc.guard_symbols = static_cast<int>(r.integer("launch.guard_symbols", 0, 1 << 20, 4));
  if (t.task == TaskKind::SignalTransmission && t.launch.kind != LaunchProfile::Kind::Ook)
    r.fail("launch.kind", "signal tasks need an ook launch");
  if (t.task != TaskKind::SignalTransmission && t.launch.kind == LaunchProfile::Kind::Ook)
    r.fail("launch.kind", "ook launches belong to the signal task");

  t.l_max = r.positive("window.lmax_km") * 1e3;
  t.t_max = r.has("window.tmax_ps") ? r.positive("window.tmax_ps") * 1e-12 : default_t_max(t, rc.guard_symbols);

  rc.n_t = static_cast<std::size_t>(r.integer("ssfm.n_t", 64, 1 << 24, 1024));
  if ((rc.n_t & (rc.n_t - 1)) != 0) r.fail("ssfm.n_t", "must be a power of two");
  rc.n_steps = static_cast<int>(r.integer("ssfm.n_steps", 1, 1 << 24, 1000));
  if (r.has("ssfm.rel_tol")) rc.rel_tol = r.positive("ssfm.rel_tol");
  rc.snapshots = km_list(r, "ssfm.snapshots_km", {0.0, t.l_max});
  for (double z : rc.snapshots)
    if (!(z >= 0.0 && z <= t.l_max)) r.fail("ssfm.snapshots_km", "snapshots must lie in [0, lmax_km]");
  for (std::size_t i = 1; i < rc.snapshots.size(); ++i)
    if (!(rc.snapshots[i] > rc.snapshots[i - 1])) r.fail("ssfm.snapshots_km", "snapshots must increase");

  if (r.has("train.widths")) {
    t.widths.clear();
    for (double w : r.array("train.widths")) {
      if (w != std::floor(w) || w < 1 || w > 65536) r.fail("train.widths", "widths must be positive integers");
      t.widths.push_back(static_cast<int>(w));
    }
  } else {
    t.widths = {2, 64, 64, 64, t.task == TaskKind::Birefringence ? 4 : 2};
  }
  t.n_ini = static_cast<std::size_t>(r.integer("train.n_ini", 2, 1 << 24, 256));
  t.n_p = static_cast<std::size_t>(r.integer("train.n_p", 1, 1 << 26, 10000));
  t.adam_steps = static_cast<std::size_t>(r.integer("train.adam_steps", 0, 1LL << 32, 5000));
  t.adam.lr = r.positive("train.adam_lr", 1e-3);
  t.adam.beta1 = r.number("train.adam_beta1", 0.9);
  t.adam.beta2 = r.number("train.adam_beta2", 0.999);
  t.adam.eps = r.positive("train.adam_eps", 1e-8);
  if (!(t.adam.beta1 >= 0.0 && t.adam.beta1 < 1.0)) r.fail("train.adam_beta1", "must lie in [0, 1)");
  if (!(t.adam.beta2 >= 0.0 && t.adam.beta2 < 1.0)) r.fail("train.adam_beta2", "must lie in [0, 1)");
  t.lbfgs_max_iter = static_cast<std::size_t>(r.integer("train.lbfgs_max_iter", 0, 1LL << 32, 2000));
  t.lbfgs.history = static_cast<std::size_t>(r.integer("train.lbfgs_history", 1, 1000, 20));
  t.lbfgs.grad_tol = r.number("train.lbfgs_grad_tol", 1e-9);
  t.lbfgs.loss_tol = r.number("train.lbfgs_loss_tol", 1e-12);
  t.residual_weight = r.positive("train.residual_weight", 1.0);
  t.record_wall_time = r.boolean("train.record_wall_time", true);

  rc.eye_distances = km_list(r, "eye.distances_km", rc.snapshots);
  for (double z : rc.eye_distances)
    if (!(z >= 0.0 && z <= t.l_max)) r.fail("eye.distances_km", "distances must lie in [0, lmax_km]");
  rc.eye_power_bins = static_cast<std::size_t>(r.integer("eye.power_bins", 1, 1 << 16, 64));
  rc.svg = r.boolean("compare.svg", true);

  r.reject_unknown();
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return make_run_config(parse_config_document(ss.str(), path), path);
}

}  // namespace fiberpinn
