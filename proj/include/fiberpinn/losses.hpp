#pragma once

#include <utility>
#include <vector>

#include "fiberpinn/mlp.hpp"
#include "fiberpinn/units.hpp"

namespace fiberpinn {

/// Sampled training points on the normalized domain. Scalar tasks use the
/// network channels (Re U, Im U); Manakov tasks use (Re Ux, Im Ux, Re Uy, Im Uy).
struct CollocationSet {
  std::vector<double> initial_t;      // zeta = 0 implied
  std::vector<cplx> target_x;         // normalized launch at initial_t
  std::vector<cplx> target_y;         // empty for scalar tasks
  std::vector<Point> residual_points;

  bool manakov() const { return !target_y.empty(); }
  /// Throws std::invalid_argument on empty or inconsistent sets and out-of-domain points.
  void validate() const;
  /// Initial points (zeta = 0) followed by residual points.
  std::vector<Point> all_points() const;
};

/// Sub-losses. Scalar tasks only fill the x terms.
struct LossBreakdown {
  double j1x = 0.0, j2x = 0.0, j1y = 0.0, j2y = 0.0;
  double residual_weight = 1.0;

  double j1() const { return j1x + j1y; }
  double j2() const { return j2x + j2y; }
  double total() const { return j1() + residual_weight * j2(); }
};

/// Field and derivatives of one complex channel.
struct FieldJet {
  cplx u{}, u_t{}, u_tt{}, u_ttt{}, u_zeta{};
};

FieldJet field_jet(const Jet3& re, const Jet3& im);

/// Everything the residuals need besides the field.
struct LossSpec {
  PdeCoeffs coeffs;
  NormalizationFrame frame;
  // Manakov only: the powers each polarization was normalized by.
  double px = 0.0;
  double py = 0.0;
  double residual_weight = 1.0;  // j_total = j1 + w * j2
};

/// Complex residual of the normalized scalar equation at one point.
cplx scalar_residual(const PdeCoeffs& c, const NormalizationFrame& f, const FieldJet& u);

/// Complex residuals (x, y) of the normalized Manakov pair at one point.
std::pair<cplx, cplx> manakov_residual(const PdeCoeffs& c, const NormalizationFrame& f, double px, double py,
                                       const FieldJet& x, const FieldJet& y);

/// The full task loss as a PointLoss over colloc.all_points(). Parts are
/// {j1x, w*j2x} or {j1x, w*j2x, j1y, w*j2y}.
class TaskLoss final : public PointLoss {
 public:
  TaskLoss(const CollocationSet& colloc, LossSpec spec);
  std::size_t n_parts() const override { return manakov_ ? 4 : 2; }
  void eval(std::size_t index, std::span<const Jet3> jets, std::span<Jet3> adjoint,
            std::span<double> parts) const override;
  LossBreakdown breakdown(std::span<const double> parts) const;

 private:
  void eval_initial(std::size_t k, std::span<const Jet3> jets, std::span<Jet3> adj, std::span<double> parts) const;
  void eval_scalar(std::span<const Jet3> jets, std::span<Jet3> adj, std::span<double> parts) const;
  void eval_manakov(std::span<const Jet3> jets, std::span<Jet3> adj, std::span<double> parts) const;

  const CollocationSet& colloc_;
  LossSpec spec_;
  bool manakov_;
  std::size_t n_ini_;
  double w_ini_, w_res_;
};

LossBreakdown total_loss(const MlpModel& model, const CollocationSet& colloc, const LossSpec& spec,
                         const KernelOptions& opts = {});

struct LossAndGradient {
  LossBreakdown loss;
  std::vector<double> gradient;  // of loss.total()
};

LossAndGradient total_loss_gradient(const MlpModel& model, const CollocationSet& colloc, const LossSpec& spec,
                                    const KernelOptions& opts = {});

}  // namespace fiberpinn
