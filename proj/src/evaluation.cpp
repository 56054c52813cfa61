#include "fiberpinn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fiberpinn {

namespace {

// Round-off slack when a physical grid point sits on the domain edge.
constexpr double kEdgeSlack = 1e-12;

std::vector<Point> query_points(const NormalizationFrame& f, std::span<const double> distances,
                                std::span<const double> times) {
  for (double z : distances)
    if (!(z >= -kEdgeSlack * f.l_max && z <= f.l_max * (1.0 + kEdgeSlack)))
      throw std::out_of_range("predict: distance outside the trained span");
  for (double t : times)
    if (!(std::abs(t) <= f.t_max * (1.0 + kEdgeSlack)))
      throw std::out_of_range("predict: time outside the trained window");
  std::vector<Point> pts;
  pts.reserve(distances.size() * times.size());
  for (double z : distances)
    for (double t : times) pts.push_back({std::clamp(z / f.l_max, 0.0, 1.0), std::clamp(t / f.t_max, -1.0, 1.0)});
  return pts;
}

SolutionSurface empty_surface(std::span<const double> distances, std::span<const double> times) {
  SolutionSurface s;
  s.times.assign(times.begin(), times.end());
  s.distances.assign(distances.begin(), distances.end());
  s.fields.assign(distances.size(), std::vector<cplx>(times.size()));
  return s;
}

}  // namespace

SolutionSurface predict_surface(const MlpModel& model, const NormalizationFrame& frame,
                                std::span<const double> distances, std::span<const double> times,
                                const KernelOptions&) {
  if (model.out_dim() != 2) throw std::invalid_argument("predict: scalar prediction needs a 2-output network");
  const auto pts = query_points(frame, distances, times);
  const Eigen::MatrixXd y = forward(model, pts);
  SolutionSurface s = empty_surface(distances, times);
  const double scale = std::sqrt(frame.p_ref);
  Eigen::Index col = 0;
  for (auto& row : s.fields)
    for (auto& v : row) {
      v = scale * cplx{y(0, col), y(1, col)};
      ++col;
    }
  return s;
}

ManakovSurface predict_manakov(const MlpModel& model, const NormalizationFrame& frame, double px, double py,
                               std::span<const double> distances, std::span<const double> times,
                               const KernelOptions&) {
  if (model.out_dim() != 4) throw std::invalid_argument("predict: Manakov prediction needs a 4-output network");
  const auto pts = query_points(frame, distances, times);
  const Eigen::MatrixXd y = forward(model, pts);
  ManakovSurface s{empty_surface(distances, times), empty_surface(distances, times)};
  const double sx = std::sqrt(px), sy = std::sqrt(py);
  Eigen::Index col = 0;
  for (std::size_t i = 0; i < distances.size(); ++i)
    for (std::size_t j = 0; j < times.size(); ++j) {
      s.x.fields[i][j] = sx * cplx{y(0, col), y(1, col)};
      s.y.fields[i][j] = sy * cplx{y(2, col), y(3, col)};
      ++col;
    }
  return s;
}

NrmseResult nrmse(const SolutionSurface& pred, const SolutionSurface& ref) {
  if (pred.fields.size() != ref.fields.size() || pred.times.size() != ref.times.size())
    throw std::invalid_argument("nrmse: grid shapes differ");
  if (ref.fields.empty()) throw std::invalid_argument("nrmse: no snapshots");
  NrmseResult r;
  for (std::size_t i = 0; i < ref.fields.size(); ++i) {
    const auto &p = pred.fields[i], &q = ref.fields[i];
    if (p.size() != q.size()) throw std::invalid_argument("nrmse: snapshot lengths differ");
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
      num += std::norm(p[j] - q[j]);
      den += std::norm(q[j]);
    }
    if (!(den > 0.0)) throw std::invalid_argument("nrmse: reference snapshot has zero norm");
    r.per_snapshot.push_back(std::sqrt(num / den));
  }
  double sum = 0.0;
  for (double v : r.per_snapshot) sum += v;
  r.aggregate = sum / static_cast<double>(r.per_snapshot.size());
  return r;
}

EyeDiagram eye_diagram(const FieldGrid& field, double t_s, std::size_t sps, std::size_t power_bins) {
  if (sps == 0 || power_bins == 0) throw std::invalid_argument("eye: samples per symbol and bins must be positive");
  if (field.size() % sps != 0) throw std::invalid_argument("eye: grid is not a whole number of symbols");
  const std::size_t n_sym = field.size() / sps;
  if (n_sym < 4) throw std::invalid_argument("eye: needs at least 4 symbols; input has no symbol structure");
  if (std::abs(field.dt() * static_cast<double>(sps) - t_s) > 1e-9 * t_s)
    throw std::invalid_argument("eye: grid spacing does not match the symbol period");

  EyeDiagram e;
  e.t_s = t_s;
  e.samples_per_symbol = sps;
  std::vector<double> power(field.size());
  for (std::size_t j = 0; j < field.size(); ++j) power[j] = std::norm(field.values[j]);
  for (std::size_t k = 0; k + 1 < n_sym; ++k)
    e.traces.emplace_back(power.begin() + static_cast<std::ptrdiff_t>(k * sps),
                          power.begin() + static_cast<std::ptrdiff_t>((k + 2) * sps));

  const double pmax = *std::max_element(power.begin(), power.end());
  e.power_max = pmax > 0.0 ? pmax * (1.0 + 1e-12) : 1.0;
  e.histogram.assign(e.trace_length(), std::vector<std::uint64_t>(power_bins, 0));
  for (const auto& tr : e.traces)
    for (std::size_t j = 0; j < tr.size(); ++j) {
      auto bin = static_cast<std::size_t>(tr[j] / e.power_max * static_cast<double>(power_bins));
      ++e.histogram[j][std::min(bin, power_bins - 1)];
    }
  return e;
}

double eye_opening(const EyeDiagram& eye, std::span<const std::uint8_t> bits) {
  if (bits.size() < eye.traces.size()) throw std::invalid_argument("eye_opening: fewer bits than traces");
  const std::size_t mid = eye.samples_per_symbol / 2;
  double low_max = 0.0, high_min = INFINITY;
  bool any_high = false;
  for (std::size_t k = 0; k < eye.traces.size(); ++k) {
    const double p = eye.traces[k][mid];
    if (bits[k]) {
      high_min = std::min(high_min, p);
      any_high = true;
    } else {
      low_max = std::max(low_max, p);
    }
  }
  if (!any_high) throw std::invalid_argument("eye_opening: no 1-symbols");
  return high_min - low_max;
}

FieldGrid crop(const FieldGrid& field, double t_begin, double t_end) {
  FieldGrid out;
  const double half = 0.5 * field.dt();  // snap edges to the nearest sample
  for (std::size_t j = 0; j < field.size(); ++j)
    if (field.times[j] >= t_begin - half && field.times[j] < t_end - half) {
      out.times.push_back(field.times[j]);
      out.values.push_back(field.values[j]);
    }
  return out;
}

}  // namespace fiberpinn
