#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace fiberpinn {

/// Returns f(x) and writes its gradient into grad (same length as x).
using ValueGradFn = std::function<double(std::span<const double> x, std::span<double> grad)>;

/// Called after every accepted iterate with (iteration, loss, params).
using IterCallback = std::function<void(std::size_t, double, std::span<const double>)>;

enum class OptimStatus {
  MaxIter,           // iteration budget used up
  GradTol,           // gradient norm below tolerance
  LossTol,           // relative loss change below tolerance
  LineSearchFailed,  // no strong-Wolfe point within the trial budget
  Diverged,          // non-finite loss or gradient
};

const char* to_string(OptimStatus s);

struct OptimResult {
  std::vector<double> params;  // last finite iterate
  std::vector<double> trace;   // loss per iteration
  OptimStatus status = OptimStatus::MaxIter;
  std::size_t evaluations = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::size_t step = 0;
  std::vector<double> m, v;
};

/// `steps` bias-corrected updates. The trace holds the loss at each iterate
/// before its update. Stops with Diverged on a non-finite loss or gradient.
OptimResult adam_run(const ValueGradFn& fn, std::vector<double> params, std::size_t steps, AdamState& state,
                     const IterCallback& on_iter = {});

struct LbfgsConfig {
  std::size_t history = 20;
  double grad_tol = 1e-9;
  double loss_tol = 1e-12;  // relative change between accepted iterates
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_trials = 40;  // function evaluations per line search
};

/// Two-loop L-BFGS with a strong-Wolfe line search. The trace holds the loss
/// at each accepted iterate; it never increases.
OptimResult lbfgs_run(const ValueGradFn& fn, std::vector<double> params, std::size_t max_iter,
                      const LbfgsConfig& config = {}, const IterCallback& on_iter = {});

}  // namespace fiberpinn
