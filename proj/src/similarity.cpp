#include "vpseg/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "vpseg/image_io.hpp"

namespace vpseg {

namespace {

using Index = std::ptrdiff_t;

Eigen::Map<const Eigen::VectorXd> pixel_vector(const Image& h, std::size_t j) {
  return {h.data.data() + j * h.channels, static_cast<Index>(h.channels)};
}

void check_dims(const Image& h, const PhaseStats& stats) {
  if (stats.phases() == 0) throw std::invalid_argument("PhaseStats: no phases");
  if (stats.channels() != h.channels) {
    throw std::invalid_argument("PhaseStats channel count does not match image");
  }
}

std::size_t nearest(const Image& h, std::size_t j, const std::vector<Eigen::VectorXd>& centers) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  const auto p = pixel_vector(h, j);
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const double d = (p - centers[k]).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

std::vector<Eigen::VectorXd> kmeanspp_seed(const Image& h, std::size_t phases,
                                           std::mt19937_64& rng) {
  const std::size_t n = h.pixels();
  std::vector<Eigen::VectorXd> centers;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  centers.emplace_back(pixel_vector(h, pick(rng)));

  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (centers.size() < phases) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      d2[j] = std::min(d2[j], (pixel_vector(h, j) - centers.back()).squaredNorm());
      total += d2[j];
    }
    std::size_t chosen = 0;
    if (total <= 0.0) {
      chosen = pick(rng);
    } else {
      const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
      double acc = 0.0;
      chosen = n - 1;
      for (std::size_t j = 0; j < n; ++j) {
        acc += d2[j];
        if (acc >= target && d2[j] > 0.0) {
          chosen = j;
          break;
        }
      }
    }
    centers.emplace_back(pixel_vector(h, chosen));
  }
  return centers;
}

double channel_sum(const Eigen::VectorXd& v) { return v.sum(); }

}  // namespace

PhaseStats PhaseStats::from_means(std::vector<Eigen::VectorXd> means) {
  PhaseStats s;
  const std::size_t n = means.size();
  const auto d = means.empty() ? 0 : means.front().size();
  s.means = std::move(means);
  s.covariances.assign(n, Eigen::MatrixXd::Identity(d, d));
  s.weights.assign(n, n ? 1.0 / static_cast<double>(n) : 0.0);
  return s;
}

PhaseStats kmeans_init(const Image& h, std::size_t phases, std::uint64_t seed,
                       std::size_t max_iter) {
  const std::size_t n = h.pixels();
  if (phases < 2) throw std::invalid_argument("kmeans_init: need at least 2 phases");
  if (phases > n) throw std::invalid_argument("kmeans_init: more phases than pixels");

  std::mt19937_64 rng(seed);
  std::vector<Eigen::VectorXd> centers = kmeanspp_seed(h, phases, rng);
  std::vector<std::size_t> assign(n, 0);
  std::vector<std::size_t> previous(n, phases);
  const auto d = static_cast<Index>(h.channels);

  for (std::size_t it = 0; it < max_iter; ++it) {
#pragma omp parallel for schedule(static)
    for (Index j = 0; j < static_cast<Index>(n); ++j) {
      assign[static_cast<std::size_t>(j)] = nearest(h, static_cast<std::size_t>(j), centers);
    }

    std::vector<std::size_t> counts(phases, 0);
    for (std::size_t a : assign) ++counts[a];
    for (std::size_t k = 0; k < phases; ++k) {
      if (counts[k] != 0) continue;
      // Split the largest cluster: its farthest member seeds the empty one.
      const auto largest = static_cast<std::size_t>(
          std::max_element(counts.begin(), counts.end()) - counts.begin());
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (assign[j] != largest) continue;
        const double dist = (pixel_vector(h, j) - centers[largest]).squaredNorm();
        if (dist > far_d) {
          far_d = dist;
          far = j;
        }
      }
      assign[far] = k;
      --counts[largest];
      ++counts[k];
    }

    std::vector<Eigen::VectorXd> sums(phases, Eigen::VectorXd::Zero(d));
    for (std::size_t j = 0; j < n; ++j) sums[assign[j]] += pixel_vector(h, j);
    for (std::size_t k = 0; k < phases; ++k) {
      centers[k] = sums[k] / static_cast<double>(counts[k]);
    }
    if (assign == previous) break;
    previous = assign;
  }

  std::vector<std::size_t> order(phases);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return channel_sum(centers[a]) < channel_sum(centers[b]);
  });
  std::vector<Eigen::VectorXd> sorted;
  sorted.reserve(phases);
  for (std::size_t k : order) sorted.push_back(centers[k]);
  return PhaseStats::from_means(std::move(sorted));
}

CostVolume scalar_cost(const Image& h, const PhaseStats& stats) {
  check_dims(h, stats);
  const std::size_t n = h.pixels();
  CostVolume c(stats.phases(), n);
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < static_cast<Index>(n); ++j) {
    const auto p = pixel_vector(h, static_cast<std::size_t>(j));
    for (std::size_t i = 0; i < stats.phases(); ++i) {
      c(i, static_cast<std::size_t>(j)) = (p - stats.means[i]).squaredNorm();
    }
  }
  return c;
}

namespace {

std::vector<Eigen::MatrixXd> checked_inverses(const PhaseStats& stats,
                                              std::vector<double>* log_dets = nullptr) {
  std::vector<Eigen::MatrixXd> inv;
  inv.reserve(stats.phases());
  if (log_dets) log_dets->clear();
  for (std::size_t i = 0; i < stats.phases(); ++i) {
    const Eigen::MatrixXd& s = stats.covariances[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 1e-14 * std::max(1.0, hi))) {
      throw std::domain_error("singular covariance for phase " + std::to_string(i));
    }
    inv.push_back(eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                  eig.eigenvectors().transpose());
    if (log_dets) log_dets->push_back(eig.eigenvalues().array().log().sum());
  }
  return inv;
}

}  // namespace

CostVolume mahalanobis_cost(const Image& h, const PhaseStats& stats) {
  check_dims(h, stats);
  const std::vector<Eigen::MatrixXd> inv = checked_inverses(stats);
  const std::size_t n = h.pixels();
  CostVolume c(stats.phases(), n);
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < static_cast<Index>(n); ++j) {
    const auto p = pixel_vector(h, static_cast<std::size_t>(j));
    for (std::size_t i = 0; i < stats.phases(); ++i) {
      const Eigen::VectorXd r = p - stats.means[i];
      c(i, static_cast<std::size_t>(j)) = r.dot(inv[i] * r);
    }
  }
  return c;
}

CostVolume emtv_cost(const Image& h, const PhaseStats& stats) {
  check_dims(h, stats);
  std::vector<double> log_dets;
  const std::vector<Eigen::MatrixXd> inv = checked_inverses(stats, &log_dets);
  const std::size_t n = h.pixels();
  const auto d = static_cast<double>(h.channels);
  std::vector<double> offset(stats.phases());
  for (std::size_t i = 0; i < stats.phases(); ++i) {
    if (!(stats.weights[i] > 0.0)) {
      throw std::domain_error("non-positive mixture weight for phase " + std::to_string(i));
    }
    offset[i] = -std::log(stats.weights[i]) +
                0.5 * (d * std::log(2.0 * std::numbers::pi) + log_dets[i]);
  }
  CostVolume c(stats.phases(), n);
#pragma omp parallel for schedule(static)
  for (Index jj = 0; jj < static_cast<Index>(n); ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    const auto p = pixel_vector(h, j);
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < stats.phases(); ++i) {
      const Eigen::VectorXd r = p - stats.means[i];
      const double v = offset[i] + 0.5 * r.dot(inv[i] * r);
      c(i, j) = v;
      lo = std::min(lo, v);
    }
    for (std::size_t i = 0; i < stats.phases(); ++i) c(i, j) -= lo;
  }
  return c;
}

PhaseStats update_statistics(const Image& h, const Matrix& u, const PhaseStats& previous,
                             double min_mass) {
  const std::size_t n = h.pixels();
  const std::size_t phases = u.rows();
  if (u.cols() != n) throw std::invalid_argument("update_statistics: u/image size mismatch");
  if (previous.phases() != phases || previous.channels() != h.channels) {
    throw std::invalid_argument("update_statistics: previous stats have wrong shape");
  }
  const auto d = static_cast<Index>(h.channels);
  PhaseStats out = previous;
  bool kept_any = false;
  for (std::size_t i = 0; i < phases; ++i) {
    double mass = 0.0;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
    for (std::size_t j = 0; j < n; ++j) {
      mass += u(i, j);
      sum += u(i, j) * pixel_vector(h, j);
    }
    if (!(mass >= min_mass)) {
      kept_any = true;
      continue;
    }
    const Eigen::VectorXd mean = sum / mass;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t j = 0; j < n; ++j) {
      const Eigen::VectorXd r = pixel_vector(h, j) - mean;
      cov.noalias() += u(i, j) * (r * r.transpose());
    }
    cov /= mass;
    cov += kCovarianceFloor * Eigen::MatrixXd::Identity(d, d);
    out.means[i] = mean;
    out.covariances[i] = cov;
    out.weights[i] = mass / static_cast<double>(n);
  }
  if (kept_any) {
    const double total = std::accumulate(out.weights.begin(), out.weights.end(), 0.0);
    for (double& w : out.weights) w /= total;
  }
  return out;
}

Matrix hard_assignment(const Image& h, const PhaseStats& stats) {
  check_dims(h, stats);
  Matrix u(stats.phases(), h.pixels(), 0.0);
  for (std::size_t j = 0; j < h.pixels(); ++j) u(nearest(h, j, stats.means), j) = 1.0;
  return u;
}

namespace {

std::string join(const double* v, std::size_t n) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t k = 0; k < n; ++k) os << (k ? "," : "") << v[k];
  return os.str();
}

std::vector<double> split_numbers(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

}  // namespace

void save_stats(const std::filesystem::path& path, const PhaseStats& stats) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  out << "phases=" << stats.phases() << '\n' << "channels=" << stats.channels() << '\n';
  for (std::size_t i = 0; i < stats.phases(); ++i) {
    const Eigen::MatrixXd cov_rowmajor = stats.covariances[i].transpose();
    out << "weight." << i << '=' << stats.weights[i] << '\n';
    out << "mean." << i << '=' << join(stats.means[i].data(), stats.means[i].size()) << '\n';
    out << "covariance." << i << '=' << join(cov_rowmajor.data(), cov_rowmajor.size()) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

PhaseStats load_stats(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("malformed stats line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw IoError("stats file missing key " + key);
    return it->second;
  };
  try {
    const auto phases = static_cast<std::size_t>(std::stoul(get("phases")));
    const auto d = static_cast<Index>(std::stoul(get("channels")));
    PhaseStats s;
    for (std::size_t i = 0; i < phases; ++i) {
      const std::string k = std::to_string(i);
      const auto m = split_numbers(get("mean." + k));
      const auto c = split_numbers(get("covariance." + k));
      if (static_cast<Index>(m.size()) != d || static_cast<Index>(c.size()) != d * d) {
        throw IoError("stats entry has wrong dimension for phase " + k);
      }
      s.means.emplace_back(Eigen::Map<const Eigen::VectorXd>(m.data(), d));
      s.covariances.emplace_back(
          Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
              c.data(), d, d));
      s.weights.push_back(std::stod(get("weight." + k)));
    }
    return s;
  } catch (const std::logic_error& e) {
    throw IoError("malformed stats file " + path.string() + ": " + e.what());
  }
}

}  // namespace vpseg
