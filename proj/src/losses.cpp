#include "fiberpinn/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace fiberpinn {

namespace {

constexpr cplx kI{0.0, 1.0};

// dR/d(jet entries) of one real network channel.
struct Partials {
  cplx v{}, t{}, tt{}, ttt{}, z{};
};

void accumulate(Jet3& adj, const Partials& d, cplx r, double w) {
  auto g = [&](cplx dr) { return 2.0 * w * std::real(std::conj(r) * dr); };
  adj.value += g(d.v);
  adj.d_t += g(d.t);
  adj.d_tt += g(d.tt);
  adj.d_ttt += g(d.ttt);
  adj.d_zeta += g(d.z);
}

struct ScalarTerms {
  cplx az, a0, att, attt;
  double c5, c6, c7;
};

ScalarTerms scalar_terms(const PdeCoeffs& c, const NormalizationFrame& f) {
  const double k1 = f.k1, k2 = f.k2;
  return {kI * c.a(1),
          kI * (k1 * c.a(2)),
          cplx(k1 * c.a(3) / (k2 * k2)),
          kI * (k1 * c.a(4) / (k2 * k2 * k2)),
          k1 * c.a(5),
          k1 * c.a(6) / k2,
          k1 * c.a(7) / k2};
}

cplx scalar_value(const ScalarTerms& s, const FieldJet& f) {
  const double p = std::norm(f.u);
  const double pt = 2.0 * std::real(std::conj(f.u) * f.u_t);
  return s.az * f.u_zeta + s.a0 * f.u + s.att * f.u_tt + s.attt * f.u_ttt + s.c5 * p * f.u +
         kI * s.c6 * (pt * f.u + p * f.u_t) + s.c7 * pt * f.u;
}

struct ManakovTerms {
  cplx az, a0, at;
  double att, g;
};

// Walk-off enters with +a3 on x and -a3 on y.
ManakovTerms manakov_terms(const PdeCoeffs& c, const NormalizationFrame& f, double sign) {
  const double k1 = f.k1, k2 = f.k2;
  return {kI * c.a(1), kI * (k1 * c.a(2)), kI * (sign * k1 * c.a(3) / k2), k1 * c.a(4) / (k2 * k2),
          k1 * c.a(5)};
}

constexpr double kCross = 2.0 / 3.0;

cplx manakov_value(const ManakovTerms& m, double ps, double po, const FieldJet& self, const FieldJet& other) {
  const double kerr = ps * std::norm(self.u) + kCross * po * std::norm(other.u);
  return m.az * self.u_zeta + m.a0 * self.u + m.at * self.u_t + m.att * self.u_tt + m.g * kerr * self.u;
}

// Accumulates the adjoint of w |R|^2 for one polarization; channels s0/s1 are
// (Re, Im) of the residual's own field, o0/o1 those of the other field.
void manakov_adjoint(const ManakovTerms& m, double ps, double po, const Jet3& sr, const Jet3& si, const Jet3& orr,
                     const Jet3& oi, cplx r, double w, Jet3& as0, Jet3& as1, Jet3& ao0, Jet3& ao1) {
  const cplx u{sr.value, si.value};
  const double kerr = ps * std::norm(u) + kCross * po * (orr.value * orr.value + oi.value * oi.value);
  Partials du, dv, dc, dd;
  du.v = m.a0 + m.g * (2.0 * ps * sr.value * u + kerr);
  dv.v = kI * m.a0 + m.g * (2.0 * ps * si.value * u + kI * kerr);
  du.t = m.at;
  dv.t = kI * m.at;
  du.tt = m.att;
  dv.tt = kI * m.att;
  du.z = m.az;
  dv.z = kI * m.az;
  dc.v = m.g * kCross * po * 2.0 * orr.value * u;
  dd.v = m.g * kCross * po * 2.0 * oi.value * u;
  accumulate(as0, du, r, w);
  accumulate(as1, dv, r, w);
  accumulate(ao0, dc, r, w);
  accumulate(ao1, dd, r, w);
}

}  // namespace

void CollocationSet::validate() const {
  if (initial_t.empty()) throw std::invalid_argument("collocation: no initial points");
  if (residual_points.empty()) throw std::invalid_argument("collocation: no residual points");
  if (target_x.size() != initial_t.size()) throw std::invalid_argument("collocation: target/point count mismatch");
  if (!target_y.empty() && target_y.size() != initial_t.size())
    throw std::invalid_argument("collocation: y target/point count mismatch");
  for (double t : initial_t)
    if (!(t >= -1.0 && t <= 1.0)) throw std::invalid_argument("collocation: initial point outside [-1, 1]");
  for (const Point& p : residual_points)
    if (!(p.t >= -1.0 && p.t <= 1.0 && p.zeta >= 0.0 && p.zeta <= 1.0))
      throw std::invalid_argument("collocation: residual point outside the unit domain");
}

std::vector<Point> CollocationSet::all_points() const {
  std::vector<Point> pts;
  pts.reserve(initial_t.size() + residual_points.size());
  for (double t : initial_t) pts.push_back({0.0, t});
  pts.insert(pts.end(), residual_points.begin(), residual_points.end());
  return pts;
}

FieldJet field_jet(const Jet3& re, const Jet3& im) {
  return {{re.value, im.value}, {re.d_t, im.d_t}, {re.d_tt, im.d_tt}, {re.d_ttt, im.d_ttt}, {re.d_zeta, im.d_zeta}};
}

cplx scalar_residual(const PdeCoeffs& c, const NormalizationFrame& f, const FieldJet& u) {
  if (c.kind == CoeffKind::ManakovA) throw std::invalid_argument("scalar_residual: Manakov coefficients");
  return scalar_value(scalar_terms(c, f), u);
}

std::pair<cplx, cplx> manakov_residual(const PdeCoeffs& c, const NormalizationFrame& f, double px, double py,
                                       const FieldJet& x, const FieldJet& y) {
  if (c.kind != CoeffKind::ManakovA) throw std::invalid_argument("manakov_residual: needs Manakov coefficients");
  return {manakov_value(manakov_terms(c, f, +1.0), px, py, x, y),
          manakov_value(manakov_terms(c, f, -1.0), py, px, y, x)};
}

TaskLoss::TaskLoss(const CollocationSet& colloc, LossSpec spec)
    : colloc_(colloc), spec_(spec), manakov_(colloc.manakov()), n_ini_(colloc.initial_t.size()) {
  colloc_.validate();
  if (manakov_ != (spec_.coeffs.kind == CoeffKind::ManakovA))
    throw std::invalid_argument("loss: collocation set and coefficients disagree on the task kind");
  if (manakov_ && !(spec_.px > 0.0 && spec_.py > 0.0))
    throw std::invalid_argument("loss: Manakov normalization powers must be positive");
  if (!(spec_.residual_weight > 0.0) || !std::isfinite(spec_.residual_weight))
    throw std::invalid_argument("loss: residual weight must be positive");
  w_ini_ = 1.0 / static_cast<double>(n_ini_);
  w_res_ = spec_.residual_weight / static_cast<double>(colloc_.residual_points.size());
}

void TaskLoss::eval(std::size_t index, std::span<const Jet3> jets, std::span<Jet3> adj,
                    std::span<double> parts) const {
  if (index < n_ini_)
    eval_initial(index, jets, adj, parts);
  else if (manakov_)
    eval_manakov(jets, adj, parts);
  else
    eval_scalar(jets, adj, parts);
}

void TaskLoss::eval_initial(std::size_t k, std::span<const Jet3> jets, std::span<Jet3> adj,
                            std::span<double> parts) const {
  auto term = [&](std::size_t ch, cplx target, std::size_t part) {
    const cplx e = cplx{jets[ch].value, jets[ch + 1].value} - target;
    parts[part] += w_ini_ * std::norm(e);
    adj[ch].value += 2.0 * w_ini_ * e.real();
    adj[ch + 1].value += 2.0 * w_ini_ * e.imag();
  };
  term(0, colloc_.target_x[k], 0);
  if (manakov_) term(2, colloc_.target_y[k], 2);
}

void TaskLoss::eval_scalar(std::span<const Jet3> jets, std::span<Jet3> adj, std::span<double> parts) const {
  const ScalarTerms s = scalar_terms(spec_.coeffs, spec_.frame);
  const Jet3 &a = jets[0], &b = jets[1];
  const FieldJet f = field_jet(a, b);
  const cplx r = scalar_value(s, f);
  parts[1] += w_res_ * std::norm(r);

  const cplx U = f.u, Ut = f.u_t;
  const double p = std::norm(U), pt = 2.0 * std::real(std::conj(U) * Ut);
  Partials du, dv;
  du.z = s.az;
  dv.z = kI * s.az;
  du.tt = s.att;
  dv.tt = kI * s.att;
  du.ttt = s.attt;
  dv.ttt = kI * s.attt;
  du.v = s.a0 + s.c5 * (2.0 * a.value * U + p) + kI * s.c6 * (2.0 * a.d_t * U + pt + 2.0 * a.value * Ut) +
         s.c7 * (2.0 * a.d_t * U + pt);
  dv.v = kI * s.a0 + s.c5 * (2.0 * b.value * U + kI * p) +
         kI * s.c6 * (2.0 * b.d_t * U + kI * pt + 2.0 * b.value * Ut) + s.c7 * (2.0 * b.d_t * U + kI * pt);
  du.t = kI * s.c6 * (2.0 * a.value * U + p) + 2.0 * s.c7 * a.value * U;
  dv.t = kI * s.c6 * (2.0 * b.value * U + kI * p) + 2.0 * s.c7 * b.value * U;
  accumulate(adj[0], du, r, w_res_);
  accumulate(adj[1], dv, r, w_res_);
}

void TaskLoss::eval_manakov(std::span<const Jet3> jets, std::span<Jet3> adj, std::span<double> parts) const {
  const ManakovTerms mx = manakov_terms(spec_.coeffs, spec_.frame, +1.0);
  const ManakovTerms my = manakov_terms(spec_.coeffs, spec_.frame, -1.0);
  const FieldJet x = field_jet(jets[0], jets[1]), y = field_jet(jets[2], jets[3]);
  const cplx rx = manakov_value(mx, spec_.px, spec_.py, x, y);
  const cplx ry = manakov_value(my, spec_.py, spec_.px, y, x);
  parts[1] += w_res_ * std::norm(rx);
  parts[3] += w_res_ * std::norm(ry);
  manakov_adjoint(mx, spec_.px, spec_.py, jets[0], jets[1], jets[2], jets[3], rx, w_res_, adj[0], adj[1], adj[2],
                  adj[3]);
  manakov_adjoint(my, spec_.py, spec_.px, jets[2], jets[3], jets[0], jets[1], ry, w_res_, adj[2], adj[3], adj[0],
                  adj[1]);
}

LossBreakdown TaskLoss::breakdown(std::span<const double> parts) const {
  LossBreakdown b;
  b.residual_weight = spec_.residual_weight;
  b.j1x = parts[0];
  b.j2x = parts[1] / spec_.residual_weight;
  if (manakov_) {
    b.j1y = parts[2];
    b.j2y = parts[3] / spec_.residual_weight;
  }
  return b;
}

namespace {

void check_outputs(const MlpModel& model, const CollocationSet& colloc) {
  const int want = colloc.manakov() ? 4 : 2;
  if (model.out_dim() != want) throw std::invalid_argument("loss: network output width does not match the task");
}

}  // namespace

LossBreakdown total_loss(const MlpModel& model, const CollocationSet& colloc, const LossSpec& spec,
                         const KernelOptions& opts) {
  check_outputs(model, colloc);
  const TaskLoss loss(colloc, spec);
  const auto pts = colloc.all_points();
  return loss.breakdown(evaluate_loss(model, pts, loss, opts));
}

LossAndGradient total_loss_gradient(const MlpModel& model, const CollocationSet& colloc, const LossSpec& spec,
                                    const KernelOptions& opts) {
  check_outputs(model, colloc);
  const TaskLoss loss(colloc, spec);
  const auto pts = colloc.all_points();
  auto g = param_gradient(model, pts, loss, opts);
  return {loss.breakdown(g.parts), std::move(g.gradient)};
}

}  // namespace fiberpinn
