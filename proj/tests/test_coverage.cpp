#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "actrob/coverage.hpp"
#include "test_support.hpp"

using namespace actrob;

namespace {

FeatureMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                            const std::function<double(Rng&, std::size_t)>& draw) {
  Rng rng(seed);
  Vector v(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) v[i * cols + j] = draw(rng, j);
  return make_matrix(rows, cols, std::move(v));
}

double dist(const std::array<double, 2>& a, const std::array<double, 2>& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

}  // namespace

TEST_CASE("action scale for the reference dimensions") {
  CHECK(std::round(action_scale(11, 3) * 1000.0) / 1000.0 == 1.915);
  CHECK(std::round(action_scale(17, 6) * 1000.0) / 1000.0 == 1.683);
  CHECK(std::round(action_scale(111, 8) * 1000.0) / 1000.0 == 3.725);
  CHECK_THROWS(action_scale(0, 3));
}

TEST_CASE("features append scaled actions") {
  TransitionDataset ds;
  ds.meta.env = "synthetic";
  ds.transitions.push_back({{1.0, 1.0, 1.0, 1.0}, {2.0}, {0.0, 0.0, 0.0, 0.0}, 0.0, false, 0});
  const auto f = build_features(ds);
  CHECK(f.cols == 5);
  CHECK(f.rho == 2.0);
  CHECK(f.row(0)[4] == 4.0);
  const auto [s, a] = split_features(f, 0);
  CHECK(a == Vector{2.0});
  CHECK(s == ds.transitions[0].state);

  ds.transitions[0].action = {0.0};
  CHECK(build_features(ds).row(0)[4] == 0.0);
  CHECK_THROWS(build_features(TransitionDataset{}));
}

TEST_CASE("cumulative ratio examples") {
  const std::vector<std::size_t> sizes = {1, 8, 1};
  const auto c = cumulative_ratio(sizes);
  REQUIRE(c.size() == 3);
  CHECK(c[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(c[1] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(c[2] == 1.0);

  const std::vector<std::size_t> uniform(8, 5);
  const auto u = cumulative_ratio(uniform);
  for (std::size_t k = 0; k < 8; ++k) CHECK(u[k] == doctest::Approx(static_cast<double>(k + 1) / 8.0));

  const std::vector<std::size_t> zeros(3, 0);
  CHECK_THROWS(cumulative_ratio(zeros));
}

TEST_CASE("cumulative ratio is monotone, ends at one and ignores order") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::size_t> sizes(37);
    for (auto& s : sizes) s = rng.index(1000);
    sizes[0] += 1;
    const auto c = cumulative_ratio(sizes);
    for (std::size_t k = 1; k < c.size(); ++k) CHECK(c[k] >= c[k - 1]);
    CHECK(c.back() == 1.0);
    std::reverse(sizes.begin(), sizes.end());
    CHECK(cumulative_ratio(sizes) == c);
  }
}

TEST_CASE("k-means with one cluster") {
  const auto m = random_matrix(50, 3, 1, [](Rng& r, std::size_t) { return r.normal(); });
  const auto km = kmeans(m, 1, 0);
  for (int l : km.labels) CHECK(l == 0);
  const std::vector<std::size_t> sizes = {50};
  CHECK(cumulative_ratio(sizes) == Vector{1.0});
  CHECK_THROWS(kmeans(m, 51, 0));
}

TEST_CASE("k-means separates two blobs and is reproducible") {
  std::vector<int> truth;
  Vector v;
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const int blob = i % 2;
    truth.push_back(blob);
    for (int j = 0; j < 4; ++j) v.push_back((blob == 0 ? -5.0 : 5.0) + 0.3 * rng.normal());
  }
  const auto m = make_matrix(200, 4, v);
  const auto km = kmeans(m, 2, 7);
  CHECK(testing::adjusted_rand_index(km.labels, truth) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(kmeans(m, 2, 7).labels == km.labels);
  for (std::size_t k = 1; k < km.inertia_history.size(); ++k)
    CHECK(km.inertia_history[k] <= km.inertia_history[k - 1] + 1e-9);
}

TEST_CASE("concentrated data has a lower curve area than diffuse data") {
  const auto concentrated = random_matrix(2000, 4, 5, [](Rng& r, std::size_t) { return 0.3 * r.normal(); });
  const auto diffuse = random_matrix(2000, 4, 6, [](Rng& r, std::size_t) { return r.uniform(-3.0, 3.0); });
  const auto joint = kmeans_joint(concentrated, diffuse, 100, 1);
  CHECK(joint.sizes_a.size() == 100);
  const auto ca = cumulative_ratio(joint.sizes_a);
  const auto cb = cumulative_ratio(joint.sizes_b);
  CHECK(curve_area(ca) < curve_area(cb));
  CHECK(ca.back() == 1.0);
  CHECK(cb.back() == 1.0);
}

TEST_CASE("embedding of 2-D data is a rigid motion") {
  const auto m = random_matrix(60, 2, 8, [](Rng& r, std::size_t j) { return (j == 0 ? 3.0 : 1.0) * r.normal(); });
  const auto e = embed_2d(m);
  for (std::size_t i = 0; i < 60; ++i)
    for (std::size_t k = i + 1; k < 60; ++k) {
      const double orig = std::hypot(m.row(i)[0] - m.row(k)[0], m.row(i)[1] - m.row(k)[1]);
      CHECK(dist(e.points[i], e.points[k]) == doctest::Approx(orig).epsilon(1e-12));
    }
}

TEST_CASE("embedding reconstructs planar 3-D data") {
  Rng rng(9);
  const Vector u = {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 0.0};
  const Vector w = {0.0, 0.0, 1.0};
  Vector v;
  for (int i = 0; i < 100; ++i) {
    const double a = 4.0 * rng.normal();
    const double b = rng.normal();
    for (int j = 0; j < 3; ++j) v.push_back(1.0 + a * u[j] + b * w[j]);
  }
  const auto m = make_matrix(100, 3, v);
  const auto e = embed_2d(m);
  double worst = 0.0;
  for (std::size_t i = 0; i < 100; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const double rec = e.mean[j] + e.points[i][0] * e.axes[0][j] + e.points[i][1] * e.axes[1][j];
      worst = std::max(worst, std::abs(rec - m.row(i)[j]));
    }
  CHECK(worst < 1e-10);
}

TEST_CASE("embedding keeps separated clusters apart") {
  Rng rng(10);
  Vector v;
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 10; ++j) v.push_back((j == 1 ? (i < 50 ? -6.0 : 6.0) : 0.0) + rng.normal());
  const auto e = embed_2d(make_matrix(100, 10, v));
  auto centroid = [&](int lo) {
    std::array<double, 2> c{0.0, 0.0};
    for (int i = lo; i < lo + 50; ++i) {
      c[0] += e.points[static_cast<std::size_t>(i)][0] / 50.0;
      c[1] += e.points[static_cast<std::size_t>(i)][1] / 50.0;
    }
    return c;
  };
  const auto c0 = centroid(0);
  const auto c1 = centroid(50);
  double within = 0.0;
  for (int i = 0; i < 100; ++i) within = std::max(within, dist(e.points[static_cast<std::size_t>(i)], i < 50 ? c0 : c1));
  CHECK(dist(c0, c1) > within);
}

TEST_CASE("embedding rejects identical rows") {
  CHECK_THROWS(embed_2d(make_matrix(3, 2, Vector(6, 1.5))));
}

TEST_CASE("kde peaks at a single point and integrates to one") {
  const std::vector<std::array<double, 2>> one = {{{0.37, -1.2}}};
  const auto g = kde_grid(one, 0.5, 101);
  int bx = 0, by = 0;
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix)
      if (g.at(ix, iy) > g.at(bx, by)) {
        bx = ix;
        by = iy;
      }
  CHECK(std::abs(g.x(bx) - 0.37) <= g.dx / 2 + 1e-12);
  CHECK(std::abs(g.y(by) + 1.2) <= g.dy / 2 + 1e-12);

  Rng rng(12);
  std::vector<std::array<double, 2>> pts;
  for (int i = 0; i < 300; ++i) pts.push_back({rng.normal() * 2.0, rng.uniform(-1.0, 4.0)});
  const auto wide = kde_grid(pts, 0.5, 100, 5.0);
  CHECK(std::abs(wide.mass() - 1.0) < 0.05);
  for (double d : wide.density) CHECK(d >= 0.0);
  CHECK(std::abs(kde_grid(pts).mass() - 1.0) < 0.05);
  CHECK(kde_grid(pts).density == kde_grid(pts).density);
}

TEST_CASE("csv writers") {
  const Vector curve = {0.25, 1.0};
  const auto csv = curve_csv(curve, "expert");
  CHECK(csv.find("1,0.25,expert") != std::string::npos);
  CHECK(curve_csv_header() == "rank,cumulative_fraction,dataset");
  const std::vector<std::array<double, 2>> one = {{{0.0, 0.0}}};
  const auto grid = grid_csv(kde_grid(one, 0.5, 4));
  CHECK(grid.rfind("x,y,density\n", 0) == 0);
  CHECK(std::count(grid.begin(), grid.end(), '\n') == 17);
}
