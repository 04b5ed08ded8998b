#include "actrob/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace actrob {

double action_scale(std::size_t state_dim, std::size_t action_dim) {
  if (state_dim == 0 || action_dim == 0) throw std::invalid_argument("dimensions must be positive");
  return std::sqrt(static_cast<double>(state_dim) / static_cast<double>(action_dim));
}

FeatureMatrix build_features(const TransitionDataset& dataset) {
  if (dataset.empty()) throw std::invalid_argument("cannot build features from an empty dataset");
  FeatureMatrix f;
  f.state_dim = dataset.state_dim();
  f.action_dim = dataset.action_dim();
  f.rho = action_scale(f.state_dim, f.action_dim);
  f.rows = dataset.size();
  f.cols = f.state_dim + f.action_dim;
  f.values.resize(f.rows * f.cols);
  for (std::size_t i = 0; i < f.rows; ++i) {
    const Transition& t = dataset.transitions[i];
    check_dim("feature state", f.state_dim, t.state.size());
    check_dim("feature action", f.action_dim, t.action.size());
    auto row = f.row(i);
    std::copy(t.state.begin(), t.state.end(), row.begin());
    for (std::size_t j = 0; j < f.action_dim; ++j) row[f.state_dim + j] = f.rho * t.action[j];
  }
  return f;
}

std::pair<StateVector, ActionVector> split_features(const FeatureMatrix& features, std::size_t i) {
  const auto row = features.row(i);
  StateVector s(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(features.state_dim));
  ActionVector a(features.action_dim);
  for (std::size_t j = 0; j < features.action_dim; ++j) a[j] = row[features.state_dim + j] / features.rho;
  return {std::move(s), std::move(a)};
}

FeatureMatrix make_matrix(std::size_t rows, std::size_t cols, Vector values) {
  check_dim("matrix values", rows * cols, values.size());
  FeatureMatrix f;
  f.rows = rows;
  f.cols = cols;
  f.state_dim = cols;
  f.values = std::move(values);
  return f;
}

namespace {

double sq_dist(std::span<const double> a, const double* b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

// Assigns each row to its nearest centroid (lowest index on ties); returns
// the within-cluster sum of squares and the number of changed labels.
std::pair<double, std::size_t> assign(const FeatureMatrix& data, const Vector& centroids, int k,
                                      std::vector<int>& labels) {
  double inertia = 0.0;
  std::size_t changed = 0;
  for (std::size_t i = 0; i < data.rows; ++i) {
    const auto row = data.row(i);
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      const double d = sq_dist(row, centroids.data() + static_cast<std::size_t>(c) * data.cols);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    if (labels[i] != best) ++changed;
    labels[i] = best;
    inertia += best_d;
  }
  return {inertia, changed};
}

}  // namespace

KMeansResult kmeans(const FeatureMatrix& data, int k, std::uint64_t seed, int max_iterations) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (data.rows < static_cast<std::size_t>(k)) {
    throw std::invalid_argument("k-means needs at least k rows (" + std::to_string(data.rows) + " < " +
                                std::to_string(k) + ")");
  }
  const std::size_t cols = data.cols;
  const auto kk = static_cast<std::size_t>(k);
  Rng rng(seed);

  KMeansResult result;
  result.centroids.assign(kk * cols, 0.0);
  // k-means++ seeding.
  Vector nearest(data.rows, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.index(data.rows);
  for (std::size_t c = 0; c < kk; ++c) {
    const auto row = data.row(pick);
    std::copy(row.begin(), row.end(), result.centroids.begin() + static_cast<std::ptrdiff_t>(c * cols));
    if (c + 1 == kk) break;
    double total = 0.0;
    for (std::size_t i = 0; i < data.rows; ++i) {
      nearest[i] = std::min(nearest[i], sq_dist(data.row(i), result.centroids.data() + c * cols));
      total += nearest[i];
    }
    if (total <= 0.0) {
      // Fewer distinct rows than clusters; reuse rows in order.
      pick = (pick + 1) % data.rows;
      continue;
    }
    double target = rng.uniform01() * total;
    pick = data.rows - 1;
    for (std::size_t i = 0; i < data.rows; ++i) {
      target -= nearest[i];
      if (target < 0.0 && nearest[i] > 0.0) {
        pick = i;
        break;
      }
    }
  }

  result.labels.assign(data.rows, -1);
  auto [inertia, changed] = assign(data, result.centroids, k, result.labels);
  result.inertia_history.push_back(inertia);

  std::vector<std::size_t> counts(kk);
  for (int it = 0; it < max_iterations; ++it) {
    Vector sums(kk * cols, 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < data.rows; ++i) {
      const auto c = static_cast<std::size_t>(result.labels[i]);
      ++counts[c];
      const auto row = data.row(i);
      for (std::size_t j = 0; j < cols; ++j) sums[c * cols + j] += row[j];
    }
    for (std::size_t c = 0; c < kk; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (std::size_t j = 0; j < cols; ++j) {
        result.centroids[c * cols + j] = sums[c * cols + j] / static_cast<double>(counts[c]);
      }
    }
    std::tie(inertia, changed) = assign(data, result.centroids, k, result.labels);
    result.inertia_history.push_back(inertia);
    result.iterations = it + 1;
    if (changed == 0) break;
  }
  return result;
}

JointClustering kmeans_joint(const FeatureMatrix& a, const FeatureMatrix& b, int k, std::uint64_t seed,
                             int max_iterations) {
  if (a.rows > 0 && b.rows > 0) check_dim("joint feature columns", a.cols, b.cols);
  const std::size_t cols = a.rows > 0 ? a.cols : b.cols;
  Vector values;
  values.reserve((a.rows + b.rows) * cols);
  values.insert(values.end(), a.values.begin(), a.values.end());
  values.insert(values.end(), b.values.begin(), b.values.end());
  const FeatureMatrix joint = make_matrix(a.rows + b.rows, cols, std::move(values));

  JointClustering out;
  out.kmeans = kmeans(joint, k, seed, max_iterations);
  const auto kk = static_cast<std::size_t>(k);
  out.sizes_a.assign(kk, 0);
  out.sizes_b.assign(kk, 0);
  out.labels_a.assign(out.kmeans.labels.begin(), out.kmeans.labels.begin() + static_cast<std::ptrdiff_t>(a.rows));
  out.labels_b.assign(out.kmeans.labels.begin() + static_cast<std::ptrdiff_t>(a.rows), out.kmeans.labels.end());
  for (int l : out.labels_a) ++out.sizes_a[static_cast<std::size_t>(l)];
  for (int l : out.labels_b) ++out.sizes_b[static_cast<std::size_t>(l)];
  return out;
}

Vector cumulative_ratio(std::span<const std::size_t> sizes) {
  std::vector<std::size_t> order(sizes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sizes[x] < sizes[y]; });
  std::size_t total = 0;
  for (std::size_t s : sizes) total += s;
  if (total == 0) throw std::invalid_argument("cumulative ratio needs at least one sample");
  Vector curve(sizes.size());
  std::size_t running = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    running += sizes[order[r]];
    curve[r] = static_cast<double>(running) / static_cast<double>(total);
  }
  return curve;
}

double curve_area(std::span<const double> curve) { return mean(curve); }

Embedding embed_2d(const FeatureMatrix& features) {
  if (features.rows < 2) throw std::invalid_argument("embedding needs at least 2 rows");
  const auto n = static_cast<Eigen::Index>(features.rows);
  const auto d = static_cast<Eigen::Index>(features.cols);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(features.values.data(),
                                                                                               n, d);
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mu;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
  if (cov.trace() <= 0.0) throw std::invalid_argument("embedding needs rows that are not all identical");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  Embedding out;
  out.mean.assign(mu.data(), mu.data() + d);
  for (int c = 0; c < 2; ++c) {
    Vector axis(static_cast<std::size_t>(d), 0.0);
    const Eigen::Index col = d - 1 - c;
    if (col >= 0) {
      Eigen::VectorXd v = solver.eigenvectors().col(col);
      for (Eigen::Index j = 0; j < d; ++j) {
        if (std::abs(v(j)) > 1e-12) {
          if (v(j) < 0.0) v = -v;
          break;
        }
      }
      axis.assign(v.data(), v.data() + d);
    }
    out.axes[static_cast<std::size_t>(c)] = std::move(axis);
  }
  out.points.resize(features.rows);
  for (std::size_t i = 0; i < features.rows; ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      double p = 0.0;
      for (std::size_t j = 0; j < features.cols; ++j) p += (features.row(i)[j] - out.mean[j]) * out.axes[c][j];
      out.points[i][c] = p;
    }
  }
  return out;
}

double DensityGrid::mass() const {
  double s = 0.0;
  for (double v : density) s += v;
  return s * dx * dy;
}

DensityGrid kde_grid(std::span<const std::array<double, 2>> points, double bandwidth, int cells,
                     double pad_bandwidths) {
  if (points.empty()) throw std::invalid_argument("density estimation needs at least one point");
  if (bandwidth <= 0.0) throw std::invalid_argument("bandwidth must be positive");
  if (cells < 1) throw std::invalid_argument("grid needs at least one cell per axis");
  double lo[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  double hi[2] = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& p : points) {
    for (int c = 0; c < 2; ++c) {
      lo[c] = std::min(lo[c], p[static_cast<std::size_t>(c)]);
      hi[c] = std::max(hi[c], p[static_cast<std::size_t>(c)]);
    }
  }
  const double pad = pad_bandwidths * bandwidth;
  DensityGrid g;
  g.nx = cells;
  g.ny = cells;
  g.bandwidth = bandwidth;
  g.dx = (hi[0] - lo[0] + 2.0 * pad) / cells;
  g.dy = (hi[1] - lo[1] + 2.0 * pad) / cells;
  g.x0 = lo[0] - pad + 0.5 * g.dx;
  g.y0 = lo[1] - pad + 0.5 * g.dy;
  g.density.assign(static_cast<std::size_t>(cells) * static_cast<std::size_t>(cells), 0.0);

  const double norm = 1.0 / (2.0 * std::numbers::pi * bandwidth * bandwidth * static_cast<double>(points.size()));
  const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  // The kernel is separable: precompute per-axis factors for each point.
  Vector kx(static_cast<std::size_t>(cells)), ky(static_cast<std::size_t>(cells));
  for (const auto& p : points) {
    for (int i = 0; i < cells; ++i) {
      const double ux = g.x(i) - p[0];
      const double uy = g.y(i) - p[1];
      kx[static_cast<std::size_t>(i)] = std::exp(-ux * ux * inv2h2);
      ky[static_cast<std::size_t>(i)] = std::exp(-uy * uy * inv2h2);
    }
    for (int iy = 0; iy < cells; ++iy) {
      for (int ix = 0; ix < cells; ++ix) {
        g.density[static_cast<std::size_t>(iy) * static_cast<std::size_t>(cells) + static_cast<std::size_t>(ix)] +=
            norm * kx[static_cast<std::size_t>(ix)] * ky[static_cast<std::size_t>(iy)];
      }
    }
  }
  return g;
}

std::string curve_csv_header() { return "rank,cumulative_fraction,dataset"; }

std::string curve_csv(std::span<const double> curve, const std::string& label) {
  std::ostringstream out;
  for (std::size_t r = 0; r < curve.size(); ++r) out << (r + 1) << ',' << format_double(curve[r]) << ',' << label << '\n';
  return out.str();
}

std::string grid_csv(const DensityGrid& grid) {
  std::ostringstream out;
  out << "x,y,density\n";
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      out << format_double(grid.x(ix)) << ',' << format_double(grid.y(iy)) << ',' << format_double(grid.at(ix, iy))
          << '\n';
    }
  }
  return out.str();
}

}  // namespace actrob
