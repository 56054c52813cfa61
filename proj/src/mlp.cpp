#include "fiberpinn/mlp.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fiberpinn/errors.hpp"
#include "fiberpinn/launch.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fiberpinn {

namespace {

// Every GEMM runs on exactly kChunk points (short chunks are zero-padded), so a
// point's result never depends on which batch it arrived in.
constexpr std::size_t kChunk = 64;
// Chunks accumulate serially inside a group; groups reduce in index order.
constexpr std::size_t kChunksPerGroup = 4;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMat>;
using Weights = Eigen::Map<RowMat>;
using ConstBias = Eigen::Map<const Eigen::VectorXd>;

double tanh_of(double x) { return std::tanh(x); }

// Eigen products over mapped memory round differently depending on the
// address alignment, so kernels read parameters from an owned (aligned) copy.
struct Workspace {
  Eigen::VectorXd params;
  std::vector<Eigen::MatrixXd> act;  // act[0] input jets, act[l+1] output of layer l
  std::vector<Eigen::MatrixXd> pre;  // pre-activations of hidden layers
  Eigen::MatrixXd grad_out;          // adjoint w.r.t. current layer pre-activation
  Eigen::MatrixXd grad_post;

  explicit Workspace(const MlpModel& m)
      : params(Eigen::Map<const Eigen::VectorXd>(m.params.data(), static_cast<Eigen::Index>(m.params.size()))),
        act(m.widths.size()),
        pre(m.n_layers()) {
    const auto cols = static_cast<Eigen::Index>(kJetBlocks * kChunk);
    for (std::size_t l = 0; l < m.widths.size(); ++l) act[l].setZero(m.widths[l], cols);
    for (std::size_t l = 0; l < m.n_layers(); ++l) pre[l].setZero(m.widths[l + 1], cols);
  }
};

void load_inputs(std::span<const Point> points, std::size_t first, std::size_t n, Eigen::MatrixXd& x) {
  const auto c = static_cast<Eigen::Index>(kChunk);
  x.setZero();
  for (Eigen::Index j = 0; j < c; ++j) {
    if (static_cast<std::size_t>(j) < n) {
      x(0, j) = points[first + j].zeta;
      x(1, j) = points[first + j].t;
    }
    x(1, c + j) = 1.0;      // dt/dt
    x(0, 4 * c + j) = 1.0;  // dzeta/dzeta
  }
}

// h = tanh(z) pushed through the t-Taylor jet and the zeta tangent.
void tanh_jets(const Eigen::MatrixXd& z, Eigen::MatrixXd& h, bool with_jets) {
  const auto c = static_cast<Eigen::Index>(kChunk);
  h.leftCols(c) = z.leftCols(c).unaryExpr(&tanh_of);
  if (!with_jets) return;
  const auto s = h.leftCols(c).array();
  const Eigen::ArrayXXd s1 = 1.0 - s.square();
  const Eigen::ArrayXXd s2 = -2.0 * s * s1;
  const Eigen::ArrayXXd s3 = s1 * (6.0 * s.square() - 2.0);
  const auto zt = z.middleCols(c, c).array();
  const auto ztt = z.middleCols(2 * c, c).array();
  const auto zttt = z.middleCols(3 * c, c).array();
  const auto zz = z.middleCols(4 * c, c).array();
  h.middleCols(c, c).array() = s1 * zt;
  h.middleCols(2 * c, c).array() = s2 * zt.square() + s1 * ztt;
  h.middleCols(3 * c, c).array() = s3 * zt.cube() + 3.0 * s2 * zt * ztt + s1 * zttt;
  h.middleCols(4 * c, c).array() = s1 * zz;
}

// Adjoint of tanh_jets: g_post (adjoint of h) -> g_pre (adjoint of z).
void tanh_jets_backward(const Eigen::MatrixXd& g_post, const Eigen::MatrixXd& z,
                        const Eigen::MatrixXd& h, Eigen::MatrixXd& g_pre) {
  const auto c = static_cast<Eigen::Index>(kChunk);
  const auto s = h.leftCols(c).array();
  const Eigen::ArrayXXd s1 = 1.0 - s.square();
  const Eigen::ArrayXXd s2 = -2.0 * s * s1;
  const Eigen::ArrayXXd q = 6.0 * s.square() - 2.0;
  const Eigen::ArrayXXd s3 = s1 * q;
  const Eigen::ArrayXXd s4 = s2 * q + 12.0 * s * s1.square();
  const auto zt = z.middleCols(c, c).array();
  const auto ztt = z.middleCols(2 * c, c).array();
  const auto zttt = z.middleCols(3 * c, c).array();
  const auto zz = z.middleCols(4 * c, c).array();
  const auto a0 = g_post.leftCols(c).array();
  const auto a1 = g_post.middleCols(c, c).array();
  const auto a2 = g_post.middleCols(2 * c, c).array();
  const auto a3 = g_post.middleCols(3 * c, c).array();
  const auto a4 = g_post.middleCols(4 * c, c).array();
  g_pre.resize(g_post.rows(), g_post.cols());
  g_pre.leftCols(c).array() = a0 * s1 + a1 * s2 * zt + a2 * (s3 * zt.square() + s2 * ztt) +
                              a3 * (s4 * zt.cube() + 3.0 * s3 * zt * ztt + s2 * zttt) + a4 * s2 * zz;
  g_pre.middleCols(c, c).array() = a1 * s1 + 2.0 * a2 * s2 * zt + 3.0 * a3 * (s3 * zt.square() + s2 * ztt);
  g_pre.middleCols(2 * c, c).array() = a2 * s1 + 3.0 * a3 * s2 * zt;
  g_pre.middleCols(3 * c, c).array() = a3 * s1;
  g_pre.middleCols(4 * c, c).array() = a4 * s1;
}

void forward_chunk(const MlpModel& m, std::span<const Point> points, std::size_t first,
                   std::size_t n, Workspace& ws, bool with_jets) {
  const auto c = static_cast<Eigen::Index>(kChunk);
  load_inputs(points, first, n, ws.act[0]);
  const std::size_t layers = m.n_layers();
  for (std::size_t l = 0; l < layers; ++l) {
    const int rows = m.widths[l + 1];
    const int cols = m.widths[l];
    const ConstWeights w(ws.params.data() + m.weight_offset(l), rows, cols);
    const ConstBias b(ws.params.data() + m.bias_offset(l), rows);
    const bool last = l + 1 == layers;
    Eigen::MatrixXd& z = last ? ws.act[l + 1] : ws.pre[l];
    const Eigen::MatrixXd& x = ws.act[l];
    // The value block is its own product so forward() and jet_forward() agree bitwise.
    z.leftCols(c).noalias() = w * x.leftCols(c);
    z.leftCols(c).colwise() += b;
    if (with_jets) z.rightCols(4 * c).noalias() = w * x.rightCols(4 * c);
    if (!last) tanh_jets(z, ws.act[l + 1], with_jets);
  }
}

// Accumulates d(loss)/d(params) for the chunk into grad, given the output adjoint in ws.grad_out.
void backward_chunk(const MlpModel& m, Workspace& ws, double* grad) {
  const auto c = static_cast<Eigen::Index>(kChunk);
  for (std::size_t l = m.n_layers(); l-- > 0;) {
    const int rows = m.widths[l + 1];
    const int cols = m.widths[l];
    Weights gw(grad + m.weight_offset(l), rows, cols);
    Eigen::Map<Eigen::VectorXd> gb(grad + m.bias_offset(l), rows);
    gw.noalias() += ws.grad_out * ws.act[l].transpose();
    gb += ws.grad_out.leftCols(c).rowwise().sum();
    if (l == 0) break;
    const ConstWeights w(ws.params.data() + m.weight_offset(l), rows, cols);
    ws.grad_post.noalias() = w.transpose() * ws.grad_out;
    tanh_jets_backward(ws.grad_post, ws.pre[l - 1], ws.act[l], ws.grad_out);
  }
}

Jet3 jet_from(const Eigen::MatrixXd& out, Eigen::Index ch, Eigen::Index j) {
  const auto c = static_cast<Eigen::Index>(kChunk);
  return {out(ch, j), out(ch, c + j), out(ch, 2 * c + j), out(ch, 3 * c + j), out(ch, 4 * c + j)};
}

// Runs the loss over the chunk's valid points; fills ws.grad_out when requested.
void loss_chunk(const MlpModel& m, const PointLoss& loss, std::size_t first, std::size_t n,
                Workspace& ws, std::span<double> parts, bool want_adjoint) {
  const auto c = static_cast<Eigen::Index>(kChunk);
  const int out = m.out_dim();
  const Eigen::MatrixXd& y = ws.act.back();
  std::vector<Jet3> jets(static_cast<std::size_t>(out));
  std::vector<Jet3> adj(static_cast<std::size_t>(out));
  if (want_adjoint) ws.grad_out.setZero(out, kJetBlocks * c);
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(n); ++j) {
    for (int ch = 0; ch < out; ++ch) jets[ch] = jet_from(y, ch, j);
    std::fill(adj.begin(), adj.end(), Jet3{});
    loss.eval(first + static_cast<std::size_t>(j), jets, adj, parts);
    if (!want_adjoint) continue;
    for (int ch = 0; ch < out; ++ch) {
      ws.grad_out(ch, j) = adj[ch].value;
      ws.grad_out(ch, c + j) = adj[ch].d_t;
      ws.grad_out(ch, 2 * c + j) = adj[ch].d_tt;
      ws.grad_out(ch, 3 * c + j) = adj[ch].d_ttt;
      ws.grad_out(ch, 4 * c + j) = adj[ch].d_zeta;
    }
  }
}

std::size_t chunk_count(std::size_t n) { return (n + kChunk - 1) / kChunk; }

int thread_count(const KernelOptions& opts) {
#ifdef _OPENMP
  return opts.threads > 0 ? opts.threads : omp_get_max_threads();
#else
  (void)opts;
  return 1;
#endif
}

LossGradient run_loss(const MlpModel& model, std::span<const Point> points, const PointLoss& loss,
                      const KernelOptions& opts, bool with_gradient) {
  const std::size_t n = points.size();
  const std::size_t n_parts = loss.n_parts();
  const std::size_t n_params = model.params.size();
  const std::size_t n_chunks = chunk_count(n);
  const std::size_t n_groups = (n_chunks + kChunksPerGroup - 1) / kChunksPerGroup;
  std::vector<double> group_parts(n_groups * n_parts, 0.0);
  // per-group gradient slots start on the same alignment for the same reason
  const std::size_t stride = (n_params + 7) / 8 * 8;
  Eigen::VectorXd group_grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(with_gradient ? n_groups * stride : 0));
  const int threads = thread_count(opts);

#pragma omp parallel num_threads(threads) if (n_groups > 1)
  {
    Workspace ws(model);
#pragma omp for schedule(dynamic, 1)
    for (std::ptrdiff_t g = 0; g < static_cast<std::ptrdiff_t>(n_groups); ++g) {
      std::span<double> parts(group_parts.data() + g * n_parts, n_parts);
      double* grad = with_gradient ? group_grad.data() + g * stride : nullptr;
      const std::size_t c_begin = static_cast<std::size_t>(g) * kChunksPerGroup;
      const std::size_t c_end = std::min(n_chunks, c_begin + kChunksPerGroup);
      for (std::size_t ci = c_begin; ci < c_end; ++ci) {
        const std::size_t first = ci * kChunk;
        const std::size_t count = std::min(kChunk, n - first);
        forward_chunk(model, points, first, count, ws, true);
        loss_chunk(model, loss, first, count, ws, parts, with_gradient);
        if (with_gradient) backward_chunk(model, ws, grad);
      }
    }
  }

  LossGradient out;
  out.parts.assign(n_parts, 0.0);
  for (std::size_t g = 0; g < n_groups; ++g)
    for (std::size_t k = 0; k < n_parts; ++k) out.parts[k] += group_parts[g * n_parts + k];
  if (with_gradient) {
    out.gradient.assign(n_params, 0.0);
#pragma omp parallel for num_threads(threads) schedule(static) if (n_params > 4096)
    for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(n_params); ++p) {
      double s = 0.0;
      for (std::size_t g = 0; g < n_groups; ++g) s += group_grad[static_cast<Eigen::Index>(g * stride) + p];
      out.gradient[p] = s;
    }
  }
  return out;
}

}  // namespace

std::size_t MlpModel::weight_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l)
    off += static_cast<std::size_t>(widths[l] + 1) * static_cast<std::size_t>(widths[l + 1]);
  return off;
}

std::size_t MlpModel::bias_offset(std::size_t layer) const {
  return weight_offset(layer) + static_cast<std::size_t>(widths[layer]) * widths[layer + 1];
}

void MlpModel::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("mlp: need at least input and output widths");
  if (widths.front() != 2) throw std::invalid_argument("mlp: input width must be 2 (zeta, t)");
  for (int w : widths)
    if (w < 1) throw std::invalid_argument("mlp: layer widths must be >= 1");
  if (params.size() != parameter_count(widths))
    throw std::invalid_argument("mlp: parameter vector does not match widths");
  for (double p : params)
    if (!std::isfinite(p)) throw std::invalid_argument("mlp: non-finite parameter");
}

std::size_t parameter_count(std::span<const int> widths) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l)
    n += static_cast<std::size_t>(widths[l] + 1) * static_cast<std::size_t>(widths[l + 1]);
  return n;
}

MlpModel init_mlp(std::vector<int> widths, std::uint64_t seed) {
  MlpModel m;
  m.widths = std::move(widths);
  m.seed = seed;
  m.params.assign(parameter_count(m.widths), 0.0);
  m.validate();
  SplitMix64 rng(seed);
  for (std::size_t l = 0; l < m.n_layers(); ++l) {
    const int fan_in = m.widths[l];
    const int fan_out = m.widths[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    double* w = m.params.data() + m.weight_offset(l);
    for (int i = 0; i < fan_in * fan_out; ++i) w[i] = (2.0 * rng.uniform() - 1.0) * limit;
  }
  return m;
}

double LossGradient::total() const { return std::accumulate(parts.begin(), parts.end(), 0.0); }

Eigen::MatrixXd forward(const MlpModel& model, std::span<const Point> points) {
  model.validate();
  Workspace ws(model);
  Eigen::MatrixXd out(model.out_dim(), static_cast<Eigen::Index>(points.size()));
  for (std::size_t first = 0; first < points.size(); first += kChunk) {
    const std::size_t n = std::min(kChunk, points.size() - first);
    forward_chunk(model, points, first, n, ws, false);
    out.middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(n)) =
        ws.act.back().leftCols(static_cast<Eigen::Index>(n));
  }
  return out;
}

std::vector<std::vector<Jet3>> jet_forward(const MlpModel& model, std::span<const Point> points) {
  model.validate();
  Workspace ws(model);
  std::vector<std::vector<Jet3>> out(points.size());
  for (std::size_t first = 0; first < points.size(); first += kChunk) {
    const std::size_t n = std::min(kChunk, points.size() - first);
    forward_chunk(model, points, first, n, ws, true);
    for (std::size_t j = 0; j < n; ++j) {
      auto& jets = out[first + j];
      jets.resize(static_cast<std::size_t>(model.out_dim()));
      for (int ch = 0; ch < model.out_dim(); ++ch)
        jets[ch] = jet_from(ws.act.back(), ch, static_cast<Eigen::Index>(j));
    }
  }
  return out;
}

LossGradient param_gradient(const MlpModel& model, std::span<const Point> points,
                            const PointLoss& loss, const KernelOptions& opts) {
  model.validate();
  LossGradient out = run_loss(model, points, loss, opts, true);
  if (!std::isfinite(out.total())) throw NumericalError("param_gradient: non-finite loss");
  return out;
}

std::vector<double> evaluate_loss(const MlpModel& model, std::span<const Point> points,
                                  const PointLoss& loss, const KernelOptions& opts) {
  model.validate();
  return run_loss(model, points, loss, opts, false).parts;
}

}  // namespace fiberpinn
