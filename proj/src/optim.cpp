#include "fiberpinn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>

namespace fiberpinn {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Minimizer of the cubic matching f and f' at a and b; falls back to bisection.
double cubic_min(double a, double fa, double da, double b, double fb, double db) {
  const double mid = 0.5 * (a + b);
  if (!std::isfinite(fb) || !std::isfinite(db)) return mid;
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (!(disc >= 0.0)) return mid;
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  const double x = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
  return std::isfinite(x) ? x : mid;
}

struct Probe {
  double a = 0.0, f = 0.0, d = 0.0;
  std::vector<double> g;
};

class LineSearch {
 public:
  LineSearch(const ValueGradFn& fn, const LbfgsConfig& cfg, std::span<const double> x, std::span<const double> dir,
             double f0, double d0, std::size_t& evals)
      : fn_(fn), cfg_(cfg), x_(x), dir_(dir), f0_(f0), d0_(d0), evals_(evals), trial_(x.size()) {}

  /// Returns true with `out` at a strong-Wolfe point; false leaves in `out`
  /// the best sufficient-decrease point seen (a = 0 when there was none).
  bool run(double a_init, Probe& out) {
    Probe prev{0.0, f0_, d0_, {}};
    double a = a_init;
    for (bool first = true; trials_ < cfg_.max_trials; first = false) {
      Probe cur = probe(a);
      if (!std::isfinite(cur.f) || cur.f > f0_ + cfg_.c1 * a * d0_ || (!first && cur.f >= prev.f))
        return zoom(std::move(prev), std::move(cur), out);
      note_best(cur);
      if (std::abs(cur.d) <= -cfg_.c2 * d0_) {
        out = std::move(cur);
        return true;
      }
      if (cur.d >= 0.0) return zoom(std::move(cur), std::move(prev), out);
      prev = std::move(cur);
      a *= 2.0;
    }
    out = std::move(best_);
    return false;
  }

 private:
  Probe probe(double a) {
    ++trials_;
    ++evals_;
    for (std::size_t i = 0; i < trial_.size(); ++i) trial_[i] = x_[i] + a * dir_[i];
    Probe p;
    p.a = a;
    p.g.assign(trial_.size(), 0.0);
    p.f = fn_(trial_, p.g);
    p.d = all_finite(p.g) ? dot(p.g, dir_) : NAN;
    if (!std::isfinite(p.d)) p.f = NAN;
    return p;
  }

  void note_best(const Probe& p) {
    if (p.f < f0_ + cfg_.c1 * p.a * d0_ && (best_.a == 0.0 || p.f < best_.f)) best_ = p;
  }

  bool zoom(Probe lo, Probe hi, Probe& out) {
    while (trials_ < cfg_.max_trials) {
      const double left = std::min(lo.a, hi.a), right = std::max(lo.a, hi.a), width = right - left;
      double a = cubic_min(lo.a, lo.f, lo.d, hi.a, hi.f, hi.d);
      if (!(a >= left + 0.1 * width && a <= right - 0.1 * width)) a = 0.5 * (lo.a + hi.a);
      Probe cur = probe(a);
      if (!std::isfinite(cur.f) || cur.f > f0_ + cfg_.c1 * a * d0_ || cur.f >= lo.f) {
        hi = std::move(cur);
        continue;
      }
      note_best(cur);
      if (std::abs(cur.d) <= -cfg_.c2 * d0_) {
        out = std::move(cur);
        return true;
      }
      if (cur.d * (hi.a - lo.a) >= 0.0) hi = std::move(lo);
      lo = std::move(cur);
    }
    out = std::move(best_);
    return false;
  }

  const ValueGradFn& fn_;
  const LbfgsConfig& cfg_;
  std::span<const double> x_, dir_;
  double f0_, d0_;
  std::size_t& evals_;
  std::vector<double> trial_;
  int trials_ = 0;
  Probe best_;
};

struct Pair {
  std::vector<double> s, y;
  double rho;
};

// Two-loop recursion: returns -H g.
std::vector<double> direction(const std::deque<Pair>& hist, std::span<const double> g) {
  std::vector<double> q(g.begin(), g.end());
  std::vector<double> alpha(hist.size());
  for (std::size_t k = hist.size(); k-- > 0;) {
    alpha[k] = hist[k].rho * dot(hist[k].s, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[k] * hist[k].y[i];
  }
  if (!hist.empty()) {
    const Pair& last = hist.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& v : q) v *= gamma;
  }
  for (std::size_t k = 0; k < hist.size(); ++k) {
    const double beta = hist[k].rho * dot(hist[k].y, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += (alpha[k] - beta) * hist[k].s[i];
  }
  for (double& v : q) v = -v;
  return q;
}

}  // namespace

const char* to_string(OptimStatus s) {
  switch (s) {
    case OptimStatus::MaxIter: return "max_iter";
    case OptimStatus::GradTol: return "grad_tol";
    case OptimStatus::LossTol: return "loss_tol";
    case OptimStatus::LineSearchFailed: return "line_search_failed";
    case OptimStatus::Diverged: return "diverged";
  }
  return "unknown";
}

OptimResult adam_run(const ValueGradFn& fn, std::vector<double> params, std::size_t steps, AdamState& state,
                     const IterCallback& on_iter) {
  const std::size_t n = params.size();
  if (state.m.empty()) state.m.assign(n, 0.0);
  if (state.v.empty()) state.v.assign(n, 0.0);
  if (state.m.size() != n || state.v.size() != n) throw std::invalid_argument("adam: state size mismatch");
  const AdamConfig& c = state.config;

  OptimResult r;
  std::vector<double> grad(n), last_good;
  for (std::size_t it = 0; it < steps; ++it) {
    const double f = fn(params, grad);
    ++r.evaluations;
    if (!std::isfinite(f) || !all_finite(grad)) {
      r.status = OptimStatus::Diverged;
      if (!last_good.empty()) params = std::move(last_good);
      break;
    }
    r.trace.push_back(f);
    last_good = params;
    ++state.step;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < n; ++i) {
      state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * grad[i];
      state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
      const double mh = state.m[i] / bc1, vh = state.v[i] / bc2;
      params[i] -= c.lr * mh / (std::sqrt(vh) + c.eps);
    }
    if (on_iter) on_iter(it, f, params);
  }
  r.params = std::move(params);
  return r;
}

OptimResult lbfgs_run(const ValueGradFn& fn, std::vector<double> params, std::size_t max_iter,
                      const LbfgsConfig& cfg, const IterCallback& on_iter) {
  const std::size_t n = params.size();
  OptimResult r;
  std::vector<double> g(n);
  double f = fn(params, g);
  ++r.evaluations;
  if (!std::isfinite(f) || !all_finite(g)) {
    r.status = OptimStatus::Diverged;
    r.params = std::move(params);
    return r;
  }

  std::deque<Pair> hist;
  r.status = OptimStatus::MaxIter;
  for (std::size_t it = 0; it < max_iter; ++it) {
    if (std::sqrt(dot(g, g)) < cfg.grad_tol) {
      r.status = OptimStatus::GradTol;
      break;
    }
    auto d = direction(hist, g);
    double d0 = dot(g, d);
    if (!(d0 < 0.0)) {  // stale curvature; restart from steepest descent
      hist.clear();
      d = direction(hist, g);
      d0 = dot(g, d);
    }
    double a_init = 1.0;
    if (hist.empty()) {
      const double l1 = std::accumulate(g.begin(), g.end(), 0.0, [](double s, double v) { return s + std::abs(v); });
      a_init = std::min(1.0, 1.0 / l1);
    }

    LineSearch ls(fn, cfg, params, d, f, d0, r.evaluations);
    Probe p;
    const bool ok = ls.run(a_init, p);
    if (p.a == 0.0) {
      r.status = OptimStatus::LineSearchFailed;
      break;
    }
    Pair pair{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      pair.s[i] = p.a * d[i];
      pair.y[i] = p.g[i] - g[i];
      params[i] += pair.s[i];
    }
    const double sy = dot(pair.s, pair.y);
    if (sy > 0.0) {
      pair.rho = 1.0 / sy;
      hist.push_back(std::move(pair));
      if (hist.size() > cfg.history) hist.pop_front();
    }
    const double f_old = f;
    f = p.f;
    g = std::move(p.g);
    r.trace.push_back(f);
    if (on_iter) on_iter(it, f, params);
    if (std::sqrt(dot(g, g)) < cfg.grad_tol) {
      r.status = OptimStatus::GradTol;
      break;
    }
    if (!ok) {
      r.status = OptimStatus::LineSearchFailed;
      break;
    }
    if (std::abs(f_old - f) <= cfg.loss_tol * std::max(std::abs(f_old), std::abs(f))) {
      r.status = OptimStatus::LossTol;
      break;
    }
  }
  r.params = std::move(params);
  return r;
}

}  // namespace fiberpinn
