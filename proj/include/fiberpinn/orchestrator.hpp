#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fiberpinn/launch.hpp"
#include "fiberpinn/losses.hpp"
#include "fiberpinn/mlp.hpp"
#include "fiberpinn/optim.hpp"
#include "fiberpinn/units.hpp"

namespace fiberpinn {

enum class TaskKind { PulseEvolution, SignalTransmission, Birefringence };

const char* to_string(TaskKind k);

struct TrainingConfig {
  TaskKind task = TaskKind::PulseEvolution;
  FiberParams fiber = pulse_task_fiber();
  LaunchProfile launch;
  double theta = 0.0;  // launch polarization angle, birefringence only
  double l_max = 0.0;  // m
  double t_max = 0.0;  // s
  std::size_t n_ini = 256;
  std::size_t n_p = 10000;
  std::vector<int> widths{2, 64, 64, 64, 2};
  std::uint64_t seed = 1;
  std::size_t adam_steps = 5000;
  AdamConfig adam;
  std::size_t lbfgs_max_iter = 2000;
  LbfgsConfig lbfgs;
  double residual_weight = 1.0;
  int threads = 0;
  bool record_wall_time = true;  // false writes 0 so traces are byte-stable
  std::string checkpoint_dir;    // empty: no checkpoint files

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Frame, coefficients and loss settings derived from a config.
struct TaskSetup {
  DerivedParams derived;
  NormalizationFrame frame;
  LossSpec spec;
  PolarizedLaunch polarized;  // birefringence only
};

TaskSetup make_setup(const TrainingConfig& config);

/// Uniform initial grid on t in [-1, 1] at zeta = 0 plus Latin-hypercube
/// residual points, deterministic in `seed`.
CollocationSet sample_collocation(const TrainingConfig& config, const TaskSetup& setup, std::uint64_t seed);

enum class Stage { Adam, Lbfgs };

struct TrainRow {
  Stage stage = Stage::Adam;
  std::size_t iter = 0;
  double j1 = 0.0, j2 = 0.0, j_total = 0.0;
  double wall_ms = 0.0;
};

struct TrainRecord {
  std::vector<TrainRow> rows;
  OptimStatus adam_status = OptimStatus::MaxIter;
  OptimStatus lbfgs_status = OptimStatus::MaxIter;
  bool diverged = false;
  std::string checkpoint;  // final checkpoint path, empty if none written

  /// Loss of the last row of a stage; NaN when the stage has no rows.
  double final_loss(Stage s) const;
};

struct TrainResult {
  MlpModel model;
  TrainRecord record;
};

/// ADAM then L-BFGS. On divergence the last finite model is kept and
/// checkpointed, and record.diverged is set.
TrainResult train(const TrainingConfig& config);

}  // namespace fiberpinn
