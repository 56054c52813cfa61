// Point-at-a-time network jets and gradients. Plain loops, no chunking, no
// threads: the baseline the chunked kernels in mlp.cpp are tested against.

#include <cmath>
#include <stdexcept>

#include "fiberpinn/errors.hpp"
#include "fiberpinn/mlp.hpp"

namespace fiberpinn::reference {

namespace {

struct Layer {
  std::vector<Jet3> pre;   // hidden layers only
  std::vector<Jet3> post;
};

std::vector<Layer> forward_point(const MlpModel& m, Point p) {
  std::vector<Layer> layers(m.widths.size());
  layers[0].post = {Jet3{p.zeta, 0.0, 0.0, 0.0, 1.0}, Jet3{p.t, 1.0, 0.0, 0.0, 0.0}};
  for (std::size_t l = 0; l < m.n_layers(); ++l) {
    const int rows = m.widths[l + 1];
    const int cols = m.widths[l];
    const double* w = m.params.data() + m.weight_offset(l);
    const double* b = m.params.data() + m.bias_offset(l);
    const auto& x = layers[l].post;
    std::vector<Jet3> z(static_cast<std::size_t>(rows));
    for (int r = 0; r < rows; ++r) {
      Jet3 acc{b[r], 0.0, 0.0, 0.0, 0.0};
      for (int k = 0; k < cols; ++k) {
        const double wk = w[r * cols + k];
        acc.value += wk * x[k].value;
        acc.d_t += wk * x[k].d_t;
        acc.d_tt += wk * x[k].d_tt;
        acc.d_ttt += wk * x[k].d_ttt;
        acc.d_zeta += wk * x[k].d_zeta;
      }
      z[r] = acc;
    }
    if (l + 1 == m.n_layers()) {
      layers[l + 1].post = std::move(z);
      break;
    }
    std::vector<Jet3> h(z.size());
    for (std::size_t r = 0; r < z.size(); ++r) {
      const double s = std::tanh(z[r].value);
      const double s1 = 1.0 - s * s;
      const double s2 = -2.0 * s * s1;
      const double s3 = s1 * (6.0 * s * s - 2.0);
      const Jet3& q = z[r];
      h[r] = {s, s1 * q.d_t, s2 * q.d_t * q.d_t + s1 * q.d_tt,
              s3 * q.d_t * q.d_t * q.d_t + 3.0 * s2 * q.d_t * q.d_tt + s1 * q.d_ttt, s1 * q.d_zeta};
    }
    layers[l + 1].pre = std::move(z);
    layers[l + 1].post = std::move(h);
  }
  return layers;
}

}  // namespace

std::vector<Jet3> jet_at(const MlpModel& model, Point p) {
  model.validate();
  return forward_point(model, p).back().post;
}

LossGradient param_gradient(const MlpModel& model, std::span<const Point> points,
                            const PointLoss& loss) {
  model.validate();
  LossGradient out;
  out.parts.assign(loss.n_parts(), 0.0);
  out.gradient.assign(model.params.size(), 0.0);
  const auto out_dim = static_cast<std::size_t>(model.out_dim());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto layers = forward_point(model, points[i]);
    std::vector<Jet3> g(out_dim);
    loss.eval(i, layers.back().post, g, out.parts);
    // g holds the adjoint of the current layer's pre-activation jets.
    for (std::size_t l = model.n_layers(); l-- > 0;) {
      const int rows = model.widths[l + 1];
      const int cols = model.widths[l];
      const double* w = model.params.data() + model.weight_offset(l);
      double* gw = out.gradient.data() + model.weight_offset(l);
      double* gb = out.gradient.data() + model.bias_offset(l);
      const auto& x = layers[l].post;
      for (int r = 0; r < rows; ++r) {
        const Jet3& a = g[r];
        gb[r] += a.value;
        for (int k = 0; k < cols; ++k)
          gw[r * cols + k] += a.value * x[k].value + a.d_t * x[k].d_t + a.d_tt * x[k].d_tt +
                              a.d_ttt * x[k].d_ttt + a.d_zeta * x[k].d_zeta;
      }
      if (l == 0) break;
      std::vector<Jet3> gp(static_cast<std::size_t>(cols));
      for (int k = 0; k < cols; ++k) {
        Jet3 acc;
        for (int r = 0; r < rows; ++r) {
          const double wk = w[r * cols + k];
          acc.value += wk * g[r].value;
          acc.d_t += wk * g[r].d_t;
          acc.d_tt += wk * g[r].d_tt;
          acc.d_ttt += wk * g[r].d_ttt;
          acc.d_zeta += wk * g[r].d_zeta;
        }
        gp[k] = acc;
      }
      const auto& z = layers[l].pre;
      const auto& h = layers[l].post;
      g.assign(static_cast<std::size_t>(cols), Jet3{});
      for (int k = 0; k < cols; ++k) {
        const double s = h[k].value;
        const double s1 = 1.0 - s * s;
        const double s2 = -2.0 * s * s1;
        const double q = 6.0 * s * s - 2.0;
        const double s3 = s1 * q;
        const double s4 = s2 * q + 12.0 * s * s1 * s1;
        const double zt = z[k].d_t, ztt = z[k].d_tt, zttt = z[k].d_ttt, zz = z[k].d_zeta;
        const Jet3& a = gp[k];
        g[k].value = a.value * s1 + a.d_t * s2 * zt + a.d_tt * (s3 * zt * zt + s2 * ztt) +
                     a.d_ttt * (s4 * zt * zt * zt + 3.0 * s3 * zt * ztt + s2 * zttt) +
                     a.d_zeta * s2 * zz;
        g[k].d_t = a.d_t * s1 + 2.0 * a.d_tt * s2 * zt + 3.0 * a.d_ttt * (s3 * zt * zt + s2 * ztt);
        g[k].d_tt = a.d_tt * s1 + 3.0 * a.d_ttt * s2 * zt;
        g[k].d_ttt = a.d_ttt * s1;
        g[k].d_zeta = a.d_zeta * s1;
      }
    }
  }
  double total = 0.0;
  for (double p : out.parts) total += p;
  if (!std::isfinite(total)) throw NumericalError("param_gradient: non-finite loss");
  return out;
}

}  // namespace fiberpinn::reference
