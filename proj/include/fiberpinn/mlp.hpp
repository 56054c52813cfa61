#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fiberpinn {

/// Fully-connected tanh network with identity output layer.
///
/// Parameters live in one flat vector. Layer l (0-based, mapping widths[l] ->
/// widths[l+1]) stores its weight matrix row-major (out x in) followed by its
/// bias vector; layers follow each other in order.
struct MlpModel {
  std::vector<int> widths;
  std::uint64_t seed = 0;
  std::vector<double> params;

  std::size_t n_layers() const { return widths.size() - 1; }
  int in_dim() const { return widths.front(); }
  int out_dim() const { return widths.back(); }
  std::size_t weight_offset(std::size_t layer) const;
  std::size_t bias_offset(std::size_t layer) const;

  /// Throws std::invalid_argument on inconsistent shapes or non-finite parameters.
  void validate() const;
};

std::size_t parameter_count(std::span<const int> widths);

/// Glorot-uniform weights, zero biases, deterministic in `seed`.
MlpModel init_mlp(std::vector<int> widths, std::uint64_t seed);

/// Network input: normalized distance and time.
struct Point {
  double zeta = 0.0;
  double t = 0.0;
};

/// One output channel's value and the partial derivatives the losses consume.
struct Jet3 {
  double value = 0.0;
  double d_t = 0.0;
  double d_tt = 0.0;
  double d_ttt = 0.0;
  double d_zeta = 0.0;
};

inline constexpr int kJetBlocks = 5;  // value, t, tt, ttt, zeta

/// Outputs for a batch: values(c, i) is channel c at point i.
Eigen::MatrixXd forward(const MlpModel& model, std::span<const Point> points);

/// Jets for a batch, indexed [point][channel].
std::vector<std::vector<Jet3>> jet_forward(const MlpModel& model, std::span<const Point> points);

/// A loss that is a sum of per-point contributions, each depending only on the
/// jets of that point. `eval` adds its contribution to each of the n_parts()
/// sub-losses in `parts` and writes d(sum of parts)/d(jet entry) into `adjoint`.
class PointLoss {
 public:
  virtual ~PointLoss() = default;
  virtual std::size_t n_parts() const { return 1; }
  virtual void eval(std::size_t index, std::span<const Jet3> jets, std::span<Jet3> adjoint,
                    std::span<double> parts) const = 0;
};

struct LossGradient {
  std::vector<double> parts;     // sub-loss values, summed over points
  std::vector<double> gradient;  // d(sum of parts)/d(params), flat layout of MlpModel
  double total() const;
};

struct KernelOptions {
  int threads = 0;  // 0: OpenMP default
};

/// Points are processed in fixed chunks and chunk results are reduced in index
/// order, so the result does not depend on the thread count.
LossGradient param_gradient(const MlpModel& model, std::span<const Point> points,
                            const PointLoss& loss, const KernelOptions& opts = {});

/// Loss parts only, no backward pass.
std::vector<double> evaluate_loss(const MlpModel& model, std::span<const Point> points,
                                  const PointLoss& loss, const KernelOptions& opts = {});

/// Point-by-point implementation with plain loops; kept as the test and
/// benchmark baseline for the chunked kernels above.
namespace reference {
std::vector<Jet3> jet_at(const MlpModel& model, Point p);
LossGradient param_gradient(const MlpModel& model, std::span<const Point> points,
                            const PointLoss& loss);
}  // namespace reference

/// Binary checkpoint: magic "FPNNCKPT", u32 version, u64 seed, u32 layer count,
/// u32 widths[], u64 parameter count, f64 params[] (all little-endian).
void checkpoint_save(const MlpModel& model, const std::string& path);
MlpModel checkpoint_load(const std::string& path);
/// Same, validating the stored widths against `expected_widths`.
MlpModel checkpoint_load(const std::string& path, std::span<const int> expected_widths);

}  // namespace fiberpinn
