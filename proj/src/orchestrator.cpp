#include "fiberpinn/orchestrator.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <stdexcept>

#include "fiberpinn/errors.hpp"

namespace fiberpinn {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("training config: ") + what);
}

// Fisher-Yates driven by SplitMix64 so the permutation is the same on every platform.
std::vector<std::size_t> permutation(std::size_t n, SplitMix64& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(p[i - 1], p[std::min(j, i - 1)]);
  }
  return p;
}

int output_width(TaskKind k) { return k == TaskKind::Birefringence ? 4 : 2; }

}  // namespace

const char* to_string(TaskKind k) {
  switch (k) {
    case TaskKind::PulseEvolution: return "pulse";
    case TaskKind::SignalTransmission: return "signal";
    case TaskKind::Birefringence: return "birefringence";
  }
  return "unknown";
}

void TrainingConfig::validate() const {
  fiber.validate();
  require(l_max > 0.0 && std::isfinite(l_max), "l_max must be positive");
  require(t_max > 0.0 && std::isfinite(t_max), "t_max must be positive");
  require(n_ini >= 2, "n_ini must be at least 2");
  require(n_p >= 1, "n_p must be at least 1");
  require(widths.size() >= 2 && widths.front() == 2, "network input width must be 2");
  require(widths.back() == output_width(task), "network output width must be 2 (4 for birefringence)");
  require(launch.p_peak > 0.0 && launch.t0 > 0.0, "launch needs positive width and power");
  require(residual_weight > 0.0 && std::isfinite(residual_weight), "residual weight must be positive");
  require(adam.lr > 0.0, "adam learning rate must be positive");
  require(lbfgs.history >= 1, "lbfgs history must be at least 1");
  const bool ook = launch.kind == LaunchProfile::Kind::Ook;
  require(ook == (task == TaskKind::SignalTransmission), "signal tasks need an OOK launch and pulse tasks a pulse");
  if (task == TaskKind::Birefringence) require(fiber.delta_beta1.has_value(), "birefringence needs delta_beta1");
}

TaskSetup make_setup(const TrainingConfig& c) {
  c.validate();
  TaskSetup s;
  s.derived = derive_secondary_params(c.fiber);
  s.frame = make_frame(c.launch.t0, c.launch.p_peak, c.l_max, c.t_max, s.derived, c.fiber);
  const CoeffKind kind = c.task == TaskKind::PulseEvolution       ? CoeffKind::PulseA
                         : c.task == TaskKind::SignalTransmission ? CoeffKind::SignalB
                                                                  : CoeffKind::ManakovA;
  s.spec.coeffs = pde_coeffs(s.frame, c.fiber, s.derived, kind);
  s.spec.frame = s.frame;
  s.spec.residual_weight = c.residual_weight;
  if (c.task == TaskKind::Birefringence) {
    s.polarized = polarize(c.launch, c.theta);
    // a dark polarization is normalized by the total power instead of zero
    s.spec.px = s.polarized.p0x() > 0.0 ? s.polarized.p0x() : c.launch.p_peak;
    s.spec.py = s.polarized.p0y() > 0.0 ? s.polarized.p0y() : c.launch.p_peak;
  }
  return s;
}

CollocationSet sample_collocation(const TrainingConfig& c, const TaskSetup& setup, std::uint64_t seed) {
  CollocationSet s;
  const bool manakov = c.task == TaskKind::Birefringence;
  for (std::size_t k = 0; k < c.n_ini; ++k) {
    const double t = -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(c.n_ini - 1);
    const double time = t * c.t_max;
    s.initial_t.push_back(t);
    if (manakov) {
      s.target_x.push_back(setup.polarized.x(time) / std::sqrt(setup.spec.px));
      s.target_y.push_back(setup.polarized.y(time) / std::sqrt(setup.spec.py));
    } else {
      s.target_x.push_back(c.launch(time) / std::sqrt(setup.frame.p_ref));
    }
  }
  SplitMix64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const auto pz = permutation(c.n_p, rng);
  const auto pt = permutation(c.n_p, rng);
  const double n = static_cast<double>(c.n_p);
  s.residual_points.resize(c.n_p);
  for (std::size_t i = 0; i < c.n_p; ++i) {
    const double uz = rng.uniform(), ut = rng.uniform();
    s.residual_points[i] = {(static_cast<double>(pz[i]) + uz) / n,
                            -1.0 + 2.0 * (static_cast<double>(pt[i]) + ut) / n};
  }
  return s;
}

double TrainRecord::final_loss(Stage s) const {
  for (auto it = rows.rbegin(); it != rows.rend(); ++it)
    if (it->stage == s) return it->j_total;
  // an L-BFGS stage without accepted steps leaves the model where ADAM put it
  if (s == Stage::Lbfgs) return final_loss(Stage::Adam);
  return NAN;
}

TrainResult train(const TrainingConfig& config) {
  const TaskSetup setup = make_setup(config);
  const CollocationSet colloc = sample_collocation(config, setup, config.seed);
  const KernelOptions kopts{config.threads};
  const auto t_start = std::chrono::steady_clock::now();

  TrainResult out{init_mlp(config.widths, config.seed), {}};
  MlpModel work = out.model;

  // loss breakdowns of recent evaluations, matched to accepted iterates by value
  std::vector<std::pair<double, LossBreakdown>> seen;
  const ValueGradFn fn = [&](std::span<const double> x, std::span<double> grad) {
    work.params.assign(x.begin(), x.end());
    try {
      auto lg = total_loss_gradient(work, colloc, setup.spec, kopts);
      std::copy(lg.gradient.begin(), lg.gradient.end(), grad.begin());
      const double f = lg.loss.total();
      seen.emplace_back(f, lg.loss);
      return f;
    } catch (const NumericalError&) {
      return static_cast<double>(NAN);
    }
  };

  auto push_row = [&](Stage stage, std::size_t iter, double f) {
    LossBreakdown b;
    for (auto it = seen.rbegin(); it != seen.rend(); ++it)
      if (it->first == f) {
        b = it->second;
        break;
      }
    seen.clear();
    double ms = 0.0;
    if (config.record_wall_time)
      ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
    out.record.rows.push_back({stage, iter, b.j1(), b.j2(), f, ms});
  };

  auto save = [&](const char* name) {
    if (config.checkpoint_dir.empty()) return;
    std::filesystem::create_directories(config.checkpoint_dir);
    const std::string path = (std::filesystem::path(config.checkpoint_dir) / name).string();
    checkpoint_save(out.model, path);
    out.record.checkpoint = path;
  };

  if (config.adam_steps > 0) {
    AdamState st;
    st.config = config.adam;
    const auto r = adam_run(fn, out.model.params, config.adam_steps, st,
                            [&](std::size_t it, double f, std::span<const double>) { push_row(Stage::Adam, it, f); });
    out.model.params = r.params;
    out.record.adam_status = r.status;
    if (r.status == OptimStatus::Diverged) {
      out.record.diverged = true;
      save("model.ckpt");
      return out;
    }
    // loss of the model ADAM hands over, so both stages end on comparable rows
    std::vector<double> g(out.model.params.size());
    const double f = fn(out.model.params, g);
    if (!std::isfinite(f)) {
      out.record.diverged = true;
      out.record.adam_status = OptimStatus::Diverged;
      save("model.ckpt");
      return out;
    }
    push_row(Stage::Adam, config.adam_steps, f);
    save("adam.ckpt");
  }

  if (config.lbfgs_max_iter > 0) {
    const auto r = lbfgs_run(fn, out.model.params, config.lbfgs_max_iter, config.lbfgs,
                             [&](std::size_t it, double f, std::span<const double>) {
                               push_row(Stage::Lbfgs, it + 1, f);
                             });
    out.record.lbfgs_status = r.status;
    out.model.params = r.params;
    if (r.status == OptimStatus::Diverged) out.record.diverged = true;
  }
  save("model.ckpt");
  return out;
}

}  // namespace fiberpinn
