#include "fiberpinn/commands.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fiberpinn/errors.hpp"
#include "fiberpinn/evaluation.hpp"
#include "fiberpinn/ssfm.hpp"

namespace fiberpinn {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw IoError("cannot read " + p.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + tmp.string());
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

/// Outputs are assembled in memory and written together, so failures
/// before the end leave no partial files.
class OutputSet {
 public:
  void add(std::string name, std::string content) { files_.emplace_back(std::move(name), std::move(content)); }

  Json listing() const {
    Json arr = Json::array();
    for (const auto& [name, content] : files_)
      arr.push_back({{"name", name}, {"bytes", content.size()}, {"fnv1a64", hex64(fnv1a64(content))}});
    return arr;
  }

  void write(const fs::path& dir, Json manifest) {
    const std::string name = manifest["command"].get<std::string>() + "_manifest.json";
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    manifest["files"] = listing();
    for (const auto& [name, content] : files_) write_file(dir / name, content);
    write_file(dir / name, manifest.dump(2) + "\n");
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

std::string km_tag(double z) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%gkm", z * 1e-3);
  return buf;
}

std::string indexed(const char* stem, std::size_t i, double z, const char* suffix) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s_%02zu_%s%s", stem, i, km_tag(z).c_str(), suffix);
  return buf;
}

std::string field_csv(const std::vector<double>& times, const std::vector<cplx>& f) {
  std::string s = "t_s,re,im,power_w\n";
  for (std::size_t j = 0; j < times.size(); ++j)
    s += fmt17(times[j]) + "," + fmt17(f[j].real()) + "," + fmt17(f[j].imag()) + "," + fmt17(std::norm(f[j])) + "\n";
  return s;
}

std::string pair_csv(const std::vector<double>& times, const std::vector<cplx>& ref, const std::vector<cplx>& pred) {
  std::string s = "t_s,ref_re,ref_im,ref_power_w,pred_re,pred_im,pred_power_w\n";
  for (std::size_t j = 0; j < times.size(); ++j)
    s += fmt17(times[j]) + "," + fmt17(ref[j].real()) + "," + fmt17(ref[j].imag()) + "," + fmt17(std::norm(ref[j])) +
         "," + fmt17(pred[j].real()) + "," + fmt17(pred[j].imag()) + "," + fmt17(std::norm(pred[j])) + "\n";
  return s;
}

// Reference power as a solid line, prediction dotted.
std::string overlay_svg(const std::vector<double>& times, const std::vector<cplx>& ref,
                        const std::vector<cplx>& pred, const std::string& title) {
  const double w = 640, h = 360, m = 40;
  double pmax = 0.0;
  for (std::size_t j = 0; j < times.size(); ++j) pmax = std::max({pmax, std::norm(ref[j]), std::norm(pred[j])});
  if (pmax <= 0.0) pmax = 1.0;
  const double t0 = times.front(), t1 = times.back();
  auto poly = [&](const std::vector<cplx>& f) {
    std::string pts;
    char buf[64];
    for (std::size_t j = 0; j < times.size(); ++j) {
      const double x = m + (w - 2 * m) * (times[j] - t0) / (t1 - t0);
      const double y = h - m - (h - 2 * m) * std::norm(f[j]) / pmax;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", x, y);
      pts += buf;
    }
    return pts;
  };
  char head[512];
  std::snprintf(head, sizeof head,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" viewBox=\"0 0 %g %g\">\n"
                "<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n"
                "<text x=\"%g\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">%s</text>\n"
                "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"11\">t: %.4g .. %.4g ps, "
                "power max %.4g W</text>\n",
                w, h, w, h, m, title.c_str(), m, h - 12, t0 * 1e12, t1 * 1e12, pmax);
  std::string s = head;
  s += "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"" + poly(ref) + "\"/>\n";
  s += "<polyline fill=\"none\" stroke=\"red\" stroke-width=\"1.5\" stroke-dasharray=\"2,3\" points=\"" + poly(pred) +
       "\"/>\n</svg>\n";
  return s;
}

Json fiber_json(const FiberParams& f) {
  Json j{{"alpha_per_m", f.alpha},      {"lambda0_m", f.lambda0},     {"dispersion_s_per_m2", f.dispersion},
         {"slope_s_per_m3", f.slope},   {"gamma_per_w_m", f.gamma},   {"tau_s", f.tau},
         {"a_eff_m2", f.a_eff}};
  if (f.delta_beta1) j["delta_beta1_s_per_m"] = *f.delta_beta1;
  return j;
}

Json frame_json(const NormalizationFrame& f) {
  return {{"t_ref_s", f.t_ref}, {"p_ref_w", f.p_ref}, {"l_d_m", f.l_d},     {"l_nl_m", std::isfinite(f.l_nl) ? Json(f.l_nl) : Json("inf")},
          {"l_max_m", f.l_max}, {"t_max_s", f.t_max}, {"k1", f.k1}, {"k2", f.k2}};
}

Json base_manifest(const CommandContext& ctx, const char* command, const TaskSetup& setup) {
  const TrainingConfig& t = ctx.config.train;
  Json m;
  m["command"] = command;
  m["config"] = {{"name", ctx.config_name}, {"fnv1a64", hex64(ctx.config_checksum)}};
  m["task"] = to_string(t.task);
  m["seed"] = t.seed;
  m["fiber"] = fiber_json(t.fiber);
  m["derived"] = {{"beta2_s2_per_m", setup.derived.beta2},
                  {"beta3_s3_per_m", setup.derived.beta3},
                  {"omega0_rad_per_s", setup.derived.omega0}};
  m["frame"] = frame_json(setup.frame);
  Json coeffs = Json::array();
  for (std::size_t i = 1; i <= setup.spec.coeffs.size(); ++i) coeffs.push_back(setup.spec.coeffs.a(i));
  m["coefficients"] = coeffs;
  return m;
}

struct Reference {
  bool manakov = false;
  SolutionSurface scalar;
  ManakovSurface pair;
  int n_steps = 0;
  double last_change = 0.0;

  const std::vector<double>& times() const { return manakov ? pair.x.times : scalar.times; }
};

Reference run_reference(const RunConfig& rc, const TaskSetup& setup, const std::vector<double>& snaps) {
  const TrainingConfig& t = rc.train;
  Reference r;
  r.manakov = t.task == TaskKind::Birefringence;
  if (r.manakov) {
    const auto x = sample_launch_x(setup.polarized, rc.n_t, t.t_max);
    const auto y = sample_launch_y(setup.polarized, rc.n_t, t.t_max);
    auto prop = [&](int n) { return propagate_manakov(x, y, t.fiber, setup.derived, t.l_max, n, snaps); };
    if (rc.rel_tol > 0.0) {
      auto a = auto_step(prop, rc.rel_tol);
      r.pair = std::move(a.surface);
      r.n_steps = a.n_steps;
      r.last_change = a.last_change;
    } else {
      r.pair = prop(rc.n_steps);
      r.n_steps = rc.n_steps;
    }
  } else {
    const auto launch = sample_launch(t.launch, rc.n_t, t.t_max);
    auto prop = [&](int n) { return propagate_gnlse(launch, t.fiber, setup.derived, t.l_max, n, snaps); };
    if (rc.rel_tol > 0.0) {
      auto a = auto_step(prop, rc.rel_tol);
      r.scalar = std::move(a.surface);
      r.n_steps = a.n_steps;
      r.last_change = a.last_change;
    } else {
      r.scalar = prop(rc.n_steps);
      r.n_steps = rc.n_steps;
    }
  }
  return r;
}

Json ssfm_json(const RunConfig& rc, const Reference& r) {
  const auto& times = r.times();
  return {{"n_t", rc.n_t},
          {"t_max_s", rc.train.t_max},
          {"dt_s", times.size() > 1 ? times[1] - times[0] : 0.0},
          {"n_steps", r.n_steps},
          {"rel_tol", rc.rel_tol},
          {"last_change", r.last_change}};
}

// The reference surface as returned always starts at z = 0; keep only the requested rows.
std::size_t row_of(const SolutionSurface& s, double z) {
  for (std::size_t i = 0; i < s.distances.size(); ++i)
    if (s.distances[i] == z) return i;
  throw std::logic_error("snapshot distance missing from surface");
}

fs::path checkpoint_path(const CommandContext& ctx) {
  return ctx.checkpoint.empty() ? ctx.out / "model.ckpt" : ctx.checkpoint;
}

// A train manifest next to the checkpoint pins the frame it was trained in.
void check_frame(const fs::path& ckpt, const TaskSetup& setup) {
  const fs::path manifest = ckpt.parent_path() / "train_manifest.json";
  if (!fs::exists(manifest)) return;
  Json m;
  try {
    m = Json::parse(read_file(manifest));
  } catch (const Json::exception& e) {
    throw IoError("cannot parse " + manifest.string() + ": " + e.what());
  }
  if (m["frame"] != frame_json(setup.frame))
    throw ConfigError("checkpoint " + ckpt.string() + " was trained in a different frame than this config describes");
}

}  // namespace

CommandContext make_context(const std::string& config_path, const fs::path& out,
                            std::optional<std::uint64_t> seed_override, std::optional<int> threads_override) {
  CommandContext ctx;
  const std::string text = read_file(config_path);
  ctx.config = make_run_config(parse_config_document(text, config_path), config_path);
  if (seed_override) ctx.config.train.seed = *seed_override;
  if (threads_override) ctx.config.train.threads = *threads_override;
  ctx.config_name = fs::path(config_path).filename().string();
  ctx.config_checksum = fnv1a64(text);
  ctx.out = out;
  return ctx;
}

void cmd_simulate(const CommandContext& ctx) {
  const RunConfig& rc = ctx.config;
  const TaskSetup setup = make_setup(rc.train);
  const Reference ref = run_reference(rc, setup, rc.snapshots);
  OutputSet files;
  for (std::size_t i = 0; i < rc.snapshots.size(); ++i) {
    const double z = rc.snapshots[i];
    if (ref.manakov) {
      const std::size_t row = row_of(ref.pair.x, z);
      files.add(indexed("snapshot", i, z, "_x.csv"), field_csv(ref.pair.x.times, ref.pair.x.fields[row]));
      files.add(indexed("snapshot", i, z, "_y.csv"), field_csv(ref.pair.y.times, ref.pair.y.fields[row]));
    } else {
      const std::size_t row = row_of(ref.scalar, z);
      files.add(indexed("snapshot", i, z, ".csv"), field_csv(ref.scalar.times, ref.scalar.fields[row]));
    }
  }
  Json m = base_manifest(ctx, "simulate", setup);
  m["ssfm"] = ssfm_json(rc, ref);
  m["snapshots_m"] = rc.snapshots;
  files.write(ctx.out, std::move(m));
}

bool cmd_train(const CommandContext& ctx) {
  TrainingConfig cfg = ctx.config.train;
  cfg.checkpoint_dir = ctx.out.string();
  const TaskSetup setup = make_setup(cfg);
  const TrainResult r = train(cfg);

  std::string csv = "stage,iter,j1,j2,j_total,wall_ms\n";
  for (const auto& row : r.record.rows)
    csv += std::string(row.stage == Stage::Adam ? "adam" : "lbfgs") + "," + std::to_string(row.iter) + "," +
           fmt17(row.j1) + "," + fmt17(row.j2) + "," + fmt17(row.j_total) + "," + fmt17(row.wall_ms) + "\n";

  OutputSet files;
  files.add("convergence.csv", csv);
  Json m = base_manifest(ctx, "train", setup);
  m["network"] = {{"widths", cfg.widths}, {"parameters", r.model.params.size()}};
  m["collocation"] = {{"n_ini", cfg.n_ini}, {"n_p", cfg.n_p}};
  m["schedule"] = {{"adam_steps", cfg.adam_steps}, {"adam_lr", cfg.adam.lr}, {"lbfgs_max_iter", cfg.lbfgs_max_iter},
                   {"lbfgs_history", cfg.lbfgs.history}, {"residual_weight", cfg.residual_weight}};
  m["result"] = {{"adam_status", to_string(r.record.adam_status)},
                 {"lbfgs_status", to_string(r.record.lbfgs_status)},
                 {"diverged", r.record.diverged},
                 {"rows", r.record.rows.size()}};
  if (!r.record.rows.empty()) m["result"]["final_loss"] = r.record.rows.back().j_total;
  Json ckpts = Json::array();
  for (const char* name : {"adam.ckpt", "model.ckpt"}) {
    const fs::path p = ctx.out / name;
    if (!fs::exists(p)) continue;
    const std::string bytes = read_file(p);
    ckpts.push_back({{"name", name}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a64(bytes))}});
  }
  m["checkpoints"] = ckpts;
  files.write(ctx.out, std::move(m));
  return !r.record.diverged;
}

void cmd_compare(const CommandContext& ctx) {
  const RunConfig& rc = ctx.config;
  const TaskSetup setup = make_setup(rc.train);
  const fs::path ckpt = checkpoint_path(ctx);
  const MlpModel model = checkpoint_load(ckpt.string(), rc.train.widths);
  check_frame(ckpt, setup);
  const Reference ref = run_reference(rc, setup, rc.snapshots);
  const KernelOptions kopts{rc.train.threads};
  const auto& times = ref.times();

  OutputSet files;
  Json rows = Json::array();
  std::string table;
  if (ref.manakov) {
    const auto pred = predict_manakov(model, setup.frame, setup.spec.px, setup.spec.py, rc.snapshots, times, kopts);
    SolutionSurface rx = pred.x, ry = pred.y;  // reference rows in snapshot order
    for (std::size_t i = 0; i < rc.snapshots.size(); ++i) {
      rx.fields[i] = ref.pair.x.fields[row_of(ref.pair.x, rc.snapshots[i])];
      ry.fields[i] = ref.pair.y.fields[row_of(ref.pair.y, rc.snapshots[i])];
    }
    const auto ex = nrmse(pred.x, rx), ey = nrmse(pred.y, ry);
    table = "snapshot,z_m,nrmse_x,nrmse_y\n";
    for (std::size_t i = 0; i < rc.snapshots.size(); ++i) {
      const double z = rc.snapshots[i];
      table += std::to_string(i) + "," + fmt17(z) + "," + fmt17(ex.per_snapshot[i]) + "," + fmt17(ey.per_snapshot[i]) +
               "\n";
      files.add(indexed("compare", i, z, "_x.csv"), pair_csv(times, rx.fields[i], pred.x.fields[i]));
      files.add(indexed("compare", i, z, "_y.csv"), pair_csv(times, ry.fields[i], pred.y.fields[i]));
      if (rc.svg) {
        files.add(indexed("compare", i, z, "_x.svg"), overlay_svg(times, rx.fields[i], pred.x.fields[i], "x, " + km_tag(z)));
        files.add(indexed("compare", i, z, "_y.svg"), overlay_svg(times, ry.fields[i], pred.y.fields[i], "y, " + km_tag(z)));
      }
    }
    rows = {{"aggregate_x", ex.aggregate}, {"aggregate_y", ey.aggregate}};
  } else {
    const auto pred = predict_surface(model, setup.frame, rc.snapshots, times, kopts);
    SolutionSurface r = pred;
    for (std::size_t i = 0; i < rc.snapshots.size(); ++i) r.fields[i] = ref.scalar.fields[row_of(ref.scalar, rc.snapshots[i])];
    const auto e = nrmse(pred, r);
    table = "snapshot,z_m,nrmse\n";
    for (std::size_t i = 0; i < rc.snapshots.size(); ++i) {
      const double z = rc.snapshots[i];
      table += std::to_string(i) + "," + fmt17(z) + "," + fmt17(e.per_snapshot[i]) + "\n";
      files.add(indexed("compare", i, z, ".csv"), pair_csv(times, r.fields[i], pred.fields[i]));
      if (rc.svg) files.add(indexed("compare", i, z, ".svg"), overlay_svg(times, r.fields[i], pred.fields[i], km_tag(z)));
    }
    rows = {{"aggregate", e.aggregate}};
  }
  files.add("nrmse.csv", table);
  Json m = base_manifest(ctx, "compare", setup);
  m["ssfm"] = ssfm_json(rc, ref);
  m["snapshots_m"] = rc.snapshots;
  const std::string ckpt_bytes = read_file(ckpt);
  m["checkpoint"] = {{"name", ckpt.filename().string()}, {"fnv1a64", hex64(fnv1a64(ckpt_bytes))}};
  m["nrmse"] = rows;
  files.write(ctx.out, std::move(m));
}

void cmd_eye(const CommandContext& ctx) {
  const RunConfig& rc = ctx.config;
  const TrainingConfig& t = rc.train;
  if (t.task != TaskKind::SignalTransmission)
    throw ConfigError("eye: eye diagrams need symbol structure; task '" + std::string(to_string(t.task)) +
                      "' has no OOK symbols");
  const TaskSetup setup = make_setup(t);
  const Reference ref = run_reference(rc, setup, rc.eye_distances);
  const double ts = t.launch.t0;
  const std::size_t n_sym = t.launch.bits.size();
  const double dt = ref.scalar.times[1] - ref.scalar.times[0];
  const double sps_real = ts / dt;
  const auto sps = static_cast<std::size_t>(std::llround(sps_real));
  if (sps < 2 || std::abs(sps_real - static_cast<double>(sps)) > 1e-9 * sps_real)
    throw ConfigError("eye: the SSFM grid does not hold a whole number of samples per symbol; adjust ssfm.n_t or "
                      "launch.guard_symbols");

  SolutionSurface source = ref.scalar;
  std::string source_name = "ssfm";
  if (!ctx.checkpoint.empty()) {
    const MlpModel model = checkpoint_load(ctx.checkpoint.string(), t.widths);
    check_frame(ctx.checkpoint, setup);
    source = predict_surface(model, setup.frame, rc.eye_distances, ref.scalar.times, {t.threads});
    source_name = "network";
  }

  OutputSet files;
  Json eyes = Json::array();
  const double half = 0.5 * static_cast<double>(n_sym) * ts;
  for (std::size_t i = 0; i < rc.eye_distances.size(); ++i) {
    const double z = rc.eye_distances[i];
    const FieldGrid payload = crop(source.snapshot(row_of(source, z)), -half, half);
    const EyeDiagram eye = eye_diagram(payload, ts, sps, rc.eye_power_bins);
    std::string traces = "trace,t_s,power_w\n";
    for (std::size_t k = 0; k < eye.traces.size(); ++k)
      for (std::size_t j = 0; j < eye.trace_length(); ++j)
        traces += std::to_string(k) + "," + fmt17(static_cast<double>(j) * dt) + "," + fmt17(eye.traces[k][j]) + "\n";
    std::string hist = "t_s,power_lo_w,power_hi_w,count\n";
    const double bw = eye.power_max / static_cast<double>(rc.eye_power_bins);
    for (std::size_t j = 0; j < eye.histogram.size(); ++j)
      for (std::size_t b = 0; b < eye.histogram[j].size(); ++b)
        hist += fmt17(static_cast<double>(j) * dt) + "," + fmt17(static_cast<double>(b) * bw) + "," +
                fmt17(static_cast<double>(b + 1) * bw) + "," + std::to_string(eye.histogram[j][b]) + "\n";
    files.add(indexed("eye", i, z, "_traces.csv"), traces);
    files.add(indexed("eye", i, z, "_hist.csv"), hist);
    eyes.push_back({{"z_m", z}, {"traces", eye.traces.size()}, {"opening_w", eye_opening(eye, t.launch.bits)}});
  }
  Json m = base_manifest(ctx, "eye", setup);
  m["ssfm"] = ssfm_json(rc, ref);
  m["source"] = source_name;
  m["symbols"] = {{"n", n_sym}, {"t_s_s", ts}, {"samples_per_symbol", sps}};
  m["eyes"] = eyes;
  files.write(ctx.out, std::move(m));
}

void cmd_coeffs(const CommandContext& ctx, std::ostream& os) {
  const TrainingConfig& t = ctx.config.train;
  const TaskSetup s = make_setup(t);
  const char letter = t.task == TaskKind::SignalTransmission ? 'b' : 'a';
  os << "task            " << to_string(t.task) << "\n"
     << "beta2_s2_per_m  " << fmt17(s.derived.beta2) << "\n"
     << "beta3_s3_per_m  " << fmt17(s.derived.beta3) << "\n"
     << "omega0_rad_s    " << fmt17(s.derived.omega0) << "\n"
     << "t_ref_s         " << fmt17(s.frame.t_ref) << "\n"
     << "p_ref_w         " << fmt17(s.frame.p_ref) << "\n"
     << "l_d_m           " << fmt17(s.frame.l_d) << "\n"
     << "l_nl_m          " << fmt17(s.frame.l_nl) << "\n"
     << "l_max_m         " << fmt17(s.frame.l_max) << "\n"
     << "t_max_s         " << fmt17(s.frame.t_max) << "\n"
     << "k1              " << fmt17(s.frame.k1) << "\n"
     << "k2              " << fmt17(s.frame.k2) << "\n";
  if (t.task == TaskKind::Birefringence)
    os << "p0x_w           " << fmt17(s.polarized.p0x()) << "\n"
       << "p0y_w           " << fmt17(s.polarized.p0y()) << "\n";
  for (std::size_t i = 1; i <= s.spec.coeffs.size(); ++i)
    os << letter << i << "              " << fmt17(s.spec.coeffs.a(i)) << "\n";
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Fiber propagation with a split-step reference engine and physics-informed networks"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out", checkpoint;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  app.add_option("--config", config_path, "config file")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--threads", threads, "worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);
  auto* sim = app.add_subcommand("simulate", "run the split-step reference and write snapshots");
  auto* trn = app.add_subcommand("train", "train a network and write checkpoint and convergence trace");
  auto* cmp = app.add_subcommand("compare", "compare a checkpoint against the split-step reference");
  auto* eye = app.add_subcommand("eye", "fold signal power into eye diagrams");
  auto* cof = app.add_subcommand("coeffs", "print derived parameters and equation coefficients");
  cmp->add_option("--checkpoint", checkpoint, "checkpoint file (default <out>/model.ckpt)");
  eye->add_option("--checkpoint", checkpoint, "use a trained network instead of the split-step output");
  app.fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    CommandContext ctx = make_context(config_path, out_dir, seed, threads);
    ctx.checkpoint = checkpoint;
    if (*sim) cmd_simulate(ctx);
    if (*trn && !cmd_train(ctx)) {
      std::cerr << "error: training diverged; last finite model kept in " << (ctx.out / "model.ckpt").string() << "\n";
      return kExitDivergence;
    }
    if (*cmp) cmd_compare(ctx);
    if (*eye) cmd_eye(ctx);
    if (*cof) cmd_coeffs(ctx, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const WindowError& e) {
    std::cerr << "config error: " << e.what() << "; widen window.tmax_ps\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::out_of_range& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace fiberpinn
