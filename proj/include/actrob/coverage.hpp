#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "actrob/dataset.hpp"

namespace actrob {

/// Action-column scale that balances state and action in a joint feature:
/// sqrt(state_dim / action_dim).
double action_scale(std::size_t state_dim, std::size_t action_dim);

/// Row-major matrix. Each row is [s ; rho * a].
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  double rho = 1.0;
  Vector values;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
};

FeatureMatrix build_features(const TransitionDataset& dataset);
/// Undoes the action scaling: returns (state, action) of row i.
std::pair<StateVector, ActionVector> split_features(const FeatureMatrix& features, std::size_t i);

/// Plain matrix constructor used by tests and the embedding path.
FeatureMatrix make_matrix(std::size_t rows, std::size_t cols, Vector values);

struct KMeansResult {
  std::vector<int> labels;
  Vector centroids;  // k x cols, row-major
  int iterations = 0;
  /// Within-cluster sum of squares after initialization and after each
  /// Lloyd iteration.
  Vector inertia_history;
};

/// Lloyd's algorithm from a k-means++ start; stops when no assignment
/// changes or after max_iterations.
KMeansResult kmeans(const FeatureMatrix& data, int k, std::uint64_t seed, int max_iterations = 300);

struct JointClustering {
  std::vector<int> labels_a;
  std::vector<int> labels_b;
  std::vector<std::size_t> sizes_a;
  std::vector<std::size_t> sizes_b;
  KMeansResult kmeans;
};

/// Clusters the union of both feature sets; returns per-dataset labels and
/// cluster-size vectors.
JointClustering kmeans_joint(const FeatureMatrix& a, const FeatureMatrix& b, int k, std::uint64_t seed,
                             int max_iterations = 300);

/// Sizes sorted ascending (ties by cluster index) and accumulated as a
/// fraction of the total. The last point is exactly 1.
Vector cumulative_ratio(std::span<const std::size_t> sizes);
/// Mean height of a cumulative-ratio curve; lower means more concentrated.
double curve_area(std::span<const double> curve);

/// Centered projection onto the top two principal directions. Each
/// direction's sign is fixed so its first nonzero loading is positive.
struct Embedding {
  std::vector<std::array<double, 2>> points;
  Vector mean;
  std::array<Vector, 2> axes;
};
Embedding embed_2d(const FeatureMatrix& features);

struct DensityGrid {
  int nx = 100;
  int ny = 100;
  double x0 = 0.0;  // center of cell (0, 0)
  double y0 = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  double bandwidth = 0.5;
  Vector density;  // ny rows of nx, row-major in y

  double at(int ix, int iy) const { return density[static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(ix)]; }
  double x(int ix) const { return x0 + dx * ix; }
  double y(int iy) const { return y0 + dy * iy; }
  /// Riemann sum of density times cell area.
  double mass() const;
};

/// Gaussian kernel density on a cells x cells grid spanning the bounding box
/// of the points padded by pad_bandwidths * bandwidth on every side.
DensityGrid kde_grid(std::span<const std::array<double, 2>> points, double bandwidth = 0.5, int cells = 100,
                     double pad_bandwidths = 3.0);

std::string curve_csv_header();
std::string curve_csv(std::span<const double> curve, const std::string& label);
std::string grid_csv(const DensityGrid& grid);

}  // namespace actrob
