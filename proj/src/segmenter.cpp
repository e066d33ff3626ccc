#include "vpseg/segmenter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "vpseg/kernels.hpp"

namespace vpseg {

namespace {

void check_grid(const CostVolume& c, std::size_t height, std::size_t width) {
  if (height * width != c.cols()) {
    throw std::invalid_argument("grid shape " + std::to_string(height) + "x" +
                                std::to_string(width) + " does not match " +
                                std::to_string(c.cols()) + " pixels");
  }
}

void check_dual(const CostVolume& c, const TVDualField& q) {
  if (q.phases() != c.rows()) throw std::invalid_argument("TV dual has the wrong phase count");
  for (const auto& qi : q.q) {
    if (qi.size() != c.cols()) throw std::invalid_argument("TV dual has the wrong pixel count");
  }
}

// Reduced dual <f, V> - eps * sum_j (lse_j - 1) + <g, 1> at g = f^c; the
// volume term is dropped when no volume is imposed.
double reduced_dual(const Matrix& k, std::span<const double> f,
                    const std::optional<VolumeSpec>& volume, double eps) {
  std::vector<double> lse(k.cols());
  kernels::column_lse(k, f, eps, lse);
  double total = 0.0;
  for (double l : lse) total -= eps * l;
  if (volume) {
    for (std::size_t i = 0; i < f.size(); ++i) total += f[i] * (*volume)[i];
  }
  return total;
}

}  // namespace

ScalarGrid SoftSegmentation::phase(std::size_t i) const {
  const auto r = u.row(i);
  return ScalarGrid(height, width, std::vector<double>(r.begin(), r.end()));
}

TVDualField TVDualField::zeros(std::size_t phases, std::size_t height, std::size_t width) {
  TVDualField q;
  q.q.assign(phases, VectorGrid(height, width));
  return q;
}

CostKind parse_cost_kind(std::string_view name) {
  if (name == "scalar") return CostKind::scalar;
  if (name == "mahalanobis") return CostKind::mahalanobis;
  if (name == "emtv") return CostKind::emtv;
  throw std::invalid_argument("unknown cost kind '" + std::string(name) +
                              "' (expected scalar, mahalanobis or emtv)");
}

std::string_view to_string(CostKind kind) {
  switch (kind) {
    case CostKind::scalar:
      return "scalar";
    case CostKind::mahalanobis:
      return "mahalanobis";
    case CostKind::emtv:
      return "emtv";
  }
  return "scalar";
}

void SegParams::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("eps must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be nonnegative");
  }
  if (!(step_q() > 0.0)) throw std::invalid_argument("tau_q must be positive");
  if (max_outer == 0) throw std::invalid_argument("max_outer must be at least 1");
  if (!(tol_u > 0.0)) throw std::invalid_argument("tol_u must be positive");
  if (n_f_inner == 0) throw std::invalid_argument("n_f_inner must be at least 1");
  if (!(edge_sharpness >= 0.0)) throw std::invalid_argument("edge sharpness must be nonnegative");
  if (!(edge_sigma >= 0.0)) throw std::invalid_argument("edge sigma must be nonnegative");
}

std::pair<SegParams, bool> apply_method(SegParams params, Method method) {
  switch (method) {
    case Method::potts:
      params.eps = 1e-3;
      params.tau_q.reset();
      params.cost = CostKind::scalar;
      return {params, false};
    case Method::emtv:
      params.eps = 1.0;
      params.cost = CostKind::emtv;
      return {params, false};
    case Method::bae:
      return {params, false};
    case Method::proposed:
      return {params, true};
  }
  return {params, true};
}

TVDualField project_q(TVDualField q, double lambda, const EdgeWeight& e) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
  std::vector<double> bound(e.grid.data.size());
  for (std::size_t j = 0; j < bound.size(); ++j) bound[j] = lambda * e.grid.data[j];
  for (auto& qi : q.q) {
    if (qi.size() != bound.size()) {
      throw std::invalid_argument("edge weight does not match the TV dual");
    }
    kernels::project_disc(qi.x, qi.y, bound);
  }
  return q;
}

TVDualField update_q(TVDualField q, const SoftSegmentation& u, double tau, double lambda,
                     const EdgeWeight& e) {
  if (q.phases() != u.phases()) throw std::invalid_argument("phase counts differ");
  const std::size_t h = u.height;
  const std::size_t w = u.width;
  std::vector<double> gx(h * w);
  std::vector<double> gy(h * w);
  for (std::size_t i = 0; i < u.phases(); ++i) {
    auto& qi = q.q[i];
    if (qi.height != h || qi.width != w) throw std::invalid_argument("grid shapes differ");
    kernels::gradient(u.u.row(i), h, w, gx, gy);
    for (std::size_t j = 0; j < h * w; ++j) {
      qi.x[j] -= tau * gx[j];
      qi.y[j] -= tau * gy[j];
    }
  }
  return project_q(std::move(q), lambda, e);
}

Matrix assemble_cost(const CostVolume& c, const TVDualField& q) {
  check_dual(c, q);
  Matrix k = c;
  if (c.cols() == 0) return k;
  const std::size_t h = q.q.front().height;
  const std::size_t w = q.q.front().width;
  std::vector<double> div(h * w);
  for (std::size_t i = 0; i < c.rows(); ++i) {
    kernels::divergence(q.q[i].x, q.q[i].y, h, w, div);
    auto row = k.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += div[j];
  }
  return k;
}

SoftSegmentation softmax_step(const CostVolume& c, const TVDualField& q,
                              std::span<const double> f, double eps, std::size_t height,
                              std::size_t width) {
  if (!(eps > 0.0)) throw std::invalid_argument("softmax_step: eps must be positive");
  check_grid(c, height, width);
  if (f.size() != c.rows()) throw std::invalid_argument("softmax_step: f has the wrong size");
  SoftSegmentation s{height, width, Matrix(c.rows(), c.cols())};
  kernels::gibbs_columns(assemble_cost(c, q), f, eps, s.u);
  return s;
}

std::vector<double> volume_step(const CostVolume& c, const TVDualField& q,
                                std::span<const double> f, const VolumeSpec& volume, double eps,
                                std::size_t n_inner, VolumeSolver solver) {
  const Matrix k = assemble_cost(c, q);
  if (solver == VolumeSolver::stabilized) return sinkhorn_volume(k, volume, f, eps, n_inner);
  std::vector<double> out(f.begin(), f.end());
  for (std::size_t n = 0; n < n_inner; ++n) out = newton_volume_step(k, volume, out, eps);
  return out;
}

namespace {

// Alternating loop shared by both entry points. refresh, when set, may
// replace the cost volume before an outer iteration given the previous u.
using Refresh = std::function<void(std::size_t, const SoftSegmentation&, CostVolume&)>;

SegmentResult run_loop(CostVolume c, std::size_t height, std::size_t width,
                       const std::optional<VolumeSpec>& volume, const SegParams& params,
                       const EdgeWeight& edge, const Refresh& refresh) {
  SegmentResult r;
  r.q = TVDualField::zeros(c.rows(), height, width);
  r.f.assign(c.rows(), 0.0);
  const double norm = std::sqrt(static_cast<double>(std::max<std::size_t>(c.cols(), 1)));

  SoftSegmentation prev;
  for (std::size_t t = 0; t < params.max_outer; ++t) {
    if (refresh && t > 0) refresh(t, prev, c);
    SoftSegmentation u = softmax_step(c, r.q, r.f, params.eps, height, width);
    if (params.update_q) r.q = update_q(std::move(r.q), u, params.step_q(), params.lambda, edge);
    if (volume) {
      r.f = volume_step(c, r.q, r.f, *volume, params.eps, params.n_f_inner,
                        params.volume_solver);
    }

    TraceRow row;
    row.iteration = t + 1;
    if (t == 0) {
      row.residual = std::numeric_limits<double>::infinity();
    } else {
      double s = 0.0;
      for (std::size_t k = 0; k < u.u.size(); ++k) {
        const double d = u.u.data()[k] - prev.u.data()[k];
        s += d * d;
      }
      row.residual = std::sqrt(s) / norm;
    }
    if (volume) {
      const auto rs = kernels::row_sums(u.u);
      for (std::size_t i = 0; i < rs.size(); ++i) row.rowsum_error.push_back(rs[i] - (*volume)[i]);
    }
    row.dual_objective = reduced_dual(assemble_cost(c, r.q), r.f, volume, params.eps);
    r.trace.push_back(std::move(row));
    r.iterations = t + 1;
    prev = std::move(u);
    if (r.trace.back().residual < params.tol_u) {
      r.converged = true;
      break;
    }
  }
  // The returned u is consistent with the final duals.
  r.u = softmax_step(c, r.q, r.f, params.eps, height, width);
  r.labels = label(r.u);
  r.cost = std::move(c);
  return r;
}

}  // namespace

SegmentResult segment_costs(const CostVolume& c, std::size_t height, std::size_t width,
                            const std::optional<VolumeSpec>& volume, const SegParams& params,
                            const EdgeWeight& edge) {
  params.validate();
  check_grid(c, height, width);
  if (volume && (volume->phases() != c.rows() || volume->pixels() != c.cols())) {
    throw std::invalid_argument("volume spec does not match the cost volume");
  }
  return run_loop(c, height, width, volume, params, edge, nullptr);
}

CostVolume build_cost(const Image& h, const PhaseStats& stats, CostKind kind) {
  switch (kind) {
    case CostKind::scalar:
      return scalar_cost(h, stats);
    case CostKind::mahalanobis:
      return mahalanobis_cost(h, stats);
    case CostKind::emtv:
      return emtv_cost(h, stats);
  }
  return scalar_cost(h, stats);
}

SegmentResult segment(const Image& h, std::size_t phases, const std::optional<VolumeSpec>& volume,
                      const SegParams& params, std::uint64_t seed) {
  params.validate();
  h.validate();
  if (phases < 2) throw std::invalid_argument("at least two phases are required");
  if (volume && (volume->phases() != phases || volume->pixels() != h.pixels())) {
    throw std::invalid_argument("volume spec does not match the image and phase count");
  }
  PhaseStats stats = kmeans_init(h, phases, seed, params.kmeans_iter);
  if (params.cost != CostKind::scalar) {
    stats = update_statistics(h, hard_assignment(h, stats), stats);
  }
  const EdgeWeight edge = edge_weight(h, params.edge_sharpness, params.edge_sigma);

  Refresh refresh;
  if (params.refresh_interval > 0) {
    refresh = [&](std::size_t t, const SoftSegmentation& prev, CostVolume& c) {
      if (t % params.refresh_interval != 0) return;
      stats = update_statistics(h, prev.u, stats);
      c = build_cost(h, stats, params.cost);
    };
  }
  SegmentResult r = run_loop(build_cost(h, stats, params.cost), h.height, h.width, volume, params,
                             edge, refresh);
  r.stats = std::move(stats);
  return r;
}

LabelMap label(const SoftSegmentation& u) {
  LabelMap m{u.height, u.width, std::vector<int>(u.pixels(), 0)};
  for (std::size_t j = 0; j < u.pixels(); ++j) {
    int best = 0;
    for (std::size_t i = 1; i < u.phases(); ++i) {
      if (u.u(i, j) > u.u(static_cast<std::size_t>(best), j)) best = static_cast<int>(i);
    }
    m.labels[j] = best;
  }
  return m;
}

DiceScores dice(const LabelMap& pred, const LabelMap& truth, int phase) {
  if (pred.size() != truth.size()) throw std::invalid_argument("dice: label maps differ in size");
  std::size_t both = 0;
  std::size_t np = 0;
  std::size_t nt = 0;
  for (std::size_t j = 0; j < pred.size(); ++j) {
    const bool p = pred.labels[j] == phase;
    const bool t = truth.labels[j] == phase;
    both += static_cast<std::size_t>(p && t);
    np += static_cast<std::size_t>(p);
    nt += static_cast<std::size_t>(t);
  }
  DiceScores d;
  if (np == 0) {
    d.empty_prediction = true;
    return d;
  }
  d.overlap_ratio = static_cast<double>(both) / static_cast<double>(np);
  d.symmetric = 2.0 * static_cast<double>(both) / static_cast<double>(np + nt);
  return d;
}

double pixel_accuracy(const LabelMap& pred, const LabelMap& truth) {
  if (pred.size() != truth.size()) {
    throw std::invalid_argument("pixel_accuracy: label maps differ in size");
  }
  if (pred.size() == 0) return 0.0;
  std::size_t same = 0;
  for (std::size_t j = 0; j < pred.size(); ++j) {
    same += static_cast<std::size_t>(pred.labels[j] == truth.labels[j]);
  }
  return static_cast<double>(same) / static_cast<double>(pred.size());
}

double mean_max_probability(const SoftSegmentation& u) {
  if (u.pixels() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t j = 0; j < u.pixels(); ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < u.phases(); ++i) m = std::max(m, u.u(i, j));
    s += m;
  }
  return s / static_cast<double>(u.pixels());
}

LabelMap labels_from_image(const Image& img) {
  std::map<double, int> levels;
  std::vector<double> gray(img.pixels());
  for (std::size_t j = 0; j < img.pixels(); ++j) {
    double s = 0.0;
    for (double v : img.pixel(j)) s += v;
    gray[j] = s / static_cast<double>(img.channels);
    levels.emplace(gray[j], 0);
  }
  int next = 0;
  for (auto& [level, index] : levels) index = next++;
  LabelMap m{img.height, img.width, std::vector<int>(img.pixels())};
  for (std::size_t j = 0; j < img.pixels(); ++j) m.labels[j] = levels.at(gray[j]);
  return m;
}

Image labels_to_gray(const LabelMap& labels, std::size_t phases) {
  Image img(labels.height, labels.width, 1);
  const double step = phases > 1 ? 1.0 / static_cast<double>(phases - 1) : 0.0;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    img.data[j] = std::min(1.0, step * labels.labels[j]);
  }
  return img;
}

Image labels_to_palette(const LabelMap& labels) {
  // The usual 21-entry segmentation colormap built from the label bits.
  std::array<std::array<int, 3>, 21> palette{};
  for (int n = 0; n < 21; ++n) {
    int id = n;
    int r = 0, g = 0, b = 0;
    for (int shift = 7; id > 0; --shift, id >>= 3) {
      r |= ((id >> 0) & 1) << shift;
      g |= ((id >> 1) & 1) << shift;
      b |= ((id >> 2) & 1) << shift;
    }
    palette[static_cast<std::size_t>(n)] = {r, g, b};
  }
  Image img(labels.height, labels.width, 3);
  for (std::size_t j = 0; j < labels.size(); ++j) {
    const auto& col = palette[static_cast<std::size_t>(labels.labels[j]) % palette.size()];
    for (std::size_t c = 0; c < 3; ++c) img.data[j * 3 + c] = col[c] / 255.0;
  }
  return img;
}

}  // namespace vpseg
