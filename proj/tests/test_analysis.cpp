#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <sstream>

#include "specid/analysis.hpp"
#include "specid/errors.hpp"

using namespace specid;
using cd = std::complex<double>;

namespace {

Eigen::VectorXcd pts(std::initializer_list<cd> v) {
  Eigen::VectorXcd out(v.size());
  int k = 0;
  for (cd z : v) out(k++) = z;
  return out;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("moments from spectrum") {
  auto p2 = moments_from_spectrum(pts({0.0, 2.0}));
  CHECK(p2.M1 == 1.0);
  CHECK(p2.M2 == 2.0);
  auto k3 = moments_from_spectrum(pts({0.0, 3.0, 3.0}));
  CHECK(k3.M1 == doctest::Approx(2.0));
  CHECK(k3.M2 == doctest::Approx(6.0));
  auto conj = moments_from_spectrum(pts({cd(1, 2), cd(1, -2)}));
  CHECK(conj.M2 == doctest::Approx(-3.0));
  CHECK(conj.imag_residual == 0.0);
  CHECK_THROWS_AS(moments_from_spectrum(Eigen::VectorXcd()), ParameterError);
}

TEST_CASE("convex hull") {
  auto sq = hull_of(pts({cd(0, 0), cd(1, 1), cd(1, 0), cd(0, 1)}));
  REQUIRE(sq);
  CHECK(sq->vertices.size() == 4);
  CHECK(sq->area() == 1.0);

  auto centred = hull_of(pts({cd(0, 0), cd(1, 0), cd(1, 1), cd(0, 1), cd(0.5, 0.5)}));
  REQUIRE(centred);
  CHECK(centred->vertices.size() == 4);
  for (const auto& v : centred->vertices) CHECK_FALSE((v.x == 0.5 && v.y == 0.5));

  CHECK_FALSE(hull_of(pts({cd(0, 0), cd(1, 1)})));
  CHECK_FALSE(hull_of(pts({cd(0, 0), cd(1, 1), cd(2, 2), cd(3, 3)})));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::VectorXcd disk(100);
  for (int k = 0; k < 100;) {
    double x = u(rng), y = u(rng);
    if (x * x + y * y <= 1) disk(k++) = cd(x, y);
  }
  auto h = hull_of(disk);
  REQUIRE(h);
  CHECK(h->area() > 0);
  for (int k = 0; k < 100; ++k) CHECK(h->contains({disk(k).real(), disk(k).imag()}));
  for (std::size_t i = 0; i < h->vertices.size(); ++i) {
    const auto& a = h->vertices[i];
    const auto& b = h->vertices[(i + 1) % h->vertices.size()];
    const auto& c = h->vertices[(i + 2) % h->vertices.size()];
    CHECK((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x) > 0);
  }
}

TEST_CASE("hull moments") {
  auto sq = hull_moments(*hull_of(pts({cd(0, 0), cd(1, 0), cd(1, 1), cd(0, 1)})));
  CHECK(std::abs(sq.M1 - 0.5) < 1e-12);
  CHECK(std::abs(sq.M2) < 1e-12);

  auto rect = hull_moments(*hull_of(pts({cd(1, -1), cd(3, -1), cd(3, 1), cd(1, 1)})));
  CHECK(std::abs(rect.M1 - 2.0) < 1e-12);
  CHECK(std::abs(rect.M2 - 4.0) < 1e-12);

  auto tri = hull_moments(*hull_of(pts({cd(0, 0), cd(1, 0), cd(0, 1)})));
  CHECK(std::abs(tri.M1 - 1.0 / 3.0) < 1e-12);
  // <x^2> = <y^2> = 1/6 for the unit right triangle.
  CHECK(std::abs(tri.M2) < 1e-12);

  // Conjugate-symmetric hull: <x^2 - y^2> of the diamond |x - 2| + |y| <= 1.
  auto diamond = hull_moments(*hull_of(pts({cd(1, 0), cd(2, 1), cd(3, 0), cd(2, -1)})));
  CHECK(std::abs(diamond.M1 - 2.0) < 1e-12);
  CHECK(std::abs(diamond.M2 - 4.0) < 1e-12);

  CHECK_THROWS_AS(hull_moments(ConvexHull{{{0, 0}, {1, 1}, {2, 2}}}), DegenerateDataError);
}

TEST_CASE("degree bounds") {
  auto p2 = degree_bounds(2, 2, 2);
  CHECK(p2.dmin_bound == 1.0);
  CHECK(p2.dmax_bound == 1.0);
  auto k3 = degree_bounds(3, 3, 3);
  CHECK(k3.dmin_bound == doctest::Approx(2.0));
  CHECK(k3.dmax_bound == doctest::Approx(2.0));
  auto blogs = degree_bounds(5.61, 353.56, 1224);
  CHECK(blogs.dmin_bound > 5);
  CHECK(blogs.dmax_bound < 353.3);
  CHECK_THROWS_AS(degree_bounds(1, 1, 1), ParameterError);
}

TEST_CASE("quadratic mean bounds") {
  auto p2 = quadratic_mean_bounds(1, 2);
  CHECK(p2.lo == 1.0);
  CHECK(p2.hi == 2.0);
  auto t1 = quadratic_mean_bounds(8.85, 117.88);
  CHECK(t1.hi == 117.88);
  CHECK(t1.lo == doctest::Approx(8.85 * 8.85));
  auto star = quadratic_mean_bounds(1.5, 4.5);
  CHECK(star.lo == 2.25);
  CHECK(star.lo <= 3.0);
  CHECK(3.0 <= star.hi);

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(4, 4);
  for (int i = 1; i < 4; ++i) w(0, i) = w(i, 0) = 1;
  WeightedDigraph s(w, true);
  auto m = moments_from_spectrum(exact_spectrum(laplacian(s)).eigenvalues);
  CHECK(m.M1 == doctest::Approx(1.5));
  CHECK(m.M2 == doctest::Approx(4.5));
  CHECK(degree_stats(s).mean_sq_degree == 3.0);
}

TEST_CASE("spectral bounds hold on random graphs") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto g = generate_erdos_renyi(20, 0.3, {1, 1}, false, seed);
    auto ds = degree_stats(g);
    if (ds.d_min < 1) continue;
    auto spec = exact_spectrum(laplacian(g)).eigenvalues;
    auto m = moments_from_spectrum(spec);
    auto qb = quadratic_mean_bounds(m.M1, m.M2);
    CHECK(qb.lo <= ds.mean_sq_degree + 1e-9);
    CHECK(ds.mean_sq_degree <= qb.hi + 1e-9);
    auto b = degree_bounds(spec(1).real(), spec(19).real(), 20);
    CHECK(ds.d_min >= b.dmin_bound - 1e-9);
    CHECK(ds.d_max <= b.dmax_bound + 1e-9);
  }
}

TEST_CASE("k-means clustering") {
  Eigen::MatrixXd two(2, 2);
  two << 1, 0, -1, 0;
  auto c2 = cluster_by_ratios(two, 2);
  CHECK(c2.labels[0] != c2.labels[1]);

  Eigen::MatrixXd many = Eigen::MatrixXd::Random(7, 2);
  auto c1 = cluster_by_ratios(many, 1);
  CHECK(std::all_of(c1.labels.begin(), c1.labels.end(), [](int l) { return l == 0; }));

  CHECK_THROWS_AS(cluster_by_ratios(two, 3), ParameterError);

  auto a = cluster_by_ratios(many, 3, 11);
  auto b = cluster_by_ratios(many, 3, 11);
  CHECK(a.labels == b.labels);
  CHECK(a.scatter == b.scatter);
}

TEST_CASE("exact planted partition eigenvectors separate the clusters") {
  auto g = generate_planted_partition(3, 20, 0.3, 0.02, {1, 1}, 4);
  auto spec = exact_spectrum(laplacian(g));
  Eigen::MatrixXd x(60, 2);
  x.col(0) = (spec.eigenvectors.col(1).real().array() / spec.eigenvectors(0, 1).real()).matrix();
  x.col(1) = (spec.eigenvectors.col(2).real().array() / spec.eigenvectors(0, 2).real()).matrix();
  auto c = cluster_by_ratios(x, 3, 1);
  CHECK(same_partition(c.labels, g.labels()));
}

TEST_CASE("mean edges per node") {
  CHECK(mean_edges_per_node(0.49, 0.05) == doctest::Approx(9.8));
  CHECK(mean_edges_per_node(0.51, 0.05) == doctest::Approx(10.2));
  CHECK(mean_edges_per_node(0, 0.05) == 0.0);
  CHECK_THROWS_AS(mean_edges_per_node(1, 0), ParameterError);
}

TEST_CASE("extreme eigenvalue selection") {
  auto e = select_extremes(pts({cd(0.01, 0), cd(0, 0), cd(4, 0), cd(10, 0), cd(1, 0)}));
  CHECK(e.lambda_n == 10);
  CHECK(e.lambda2 == 1);
  CHECK_FALSE(e.lambda2_fallback);
  auto f = select_extremes(pts({cd(0, 0), cd(0, 0)}));
  CHECK(f.lambda2_fallback);
}

TEST_CASE("summary") {
  auto s = summarize(pts({0.0, 3.0, 3.0}), 3, SummaryMode::full_spectrum);
  CHECK(s.M1 == doctest::Approx(2.0));
  CHECK(s.M2 == doctest::Approx(6.0));
  CHECK(s.dmin_bound == doctest::Approx(2.0));
  CHECK(s.D2_bounds.lo <= s.D2_bounds.hi);

  auto h = summarize(pts({cd(1, -1), cd(3, -1), cd(3, 1), cd(1, 1), cd(2, 0)}), 5, SummaryMode::hull);
  CHECK(h.mode == SummaryMode::hull);
  CHECK(h.M1 == doctest::Approx(2.0));
  CHECK(h.M2 == doctest::Approx(4.0));

  auto fallback = summarize(pts({0.0, 1.0, 2.0}), 3, SummaryMode::hull);
  CHECK(fallback.mode == SummaryMode::full_spectrum);
  CHECK_FALSE(fallback.warnings.empty());

  auto split = summarize(pts({cd(0, 0.1), cd(0, -0.1), cd(0.1, 0), cd(10, 0.1), cd(10, -0.1), cd(10.1, 0)}), 6,
                         SummaryMode::hull);
  CHECK(std::any_of(split.warnings.begin(), split.warnings.end(),
                    [](const std::string& w) { return w.find("clusters") != std::string::npos; }));

  auto j = to_json(h);
  CHECK(j["mode"] == "hull");
  CHECK(j["hull"].size() == 4);

  std::ostringstream hull_csv;
  write_hull_csv(hull_csv, *h.hull);
  CHECK(hull_csv.str().rfind("x,y\n", 0) == 0);
}
