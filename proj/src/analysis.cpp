#include "specid/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>

#include "specid/errors.hpp"

namespace specid {

Moments moments_from_spectrum(const Eigen::VectorXcd& lambdas) {
  if (lambdas.size() == 0) throw ParameterError("spectrum is empty");
  const double n = static_cast<double>(lambdas.size());
  Moments m;
  m.M1 = lambdas.real().sum() / n;
  std::complex<double> sq = lambdas.array().square().sum() / n;
  m.M2 = sq.real();
  m.imag_residual = std::abs(sq.imag());
  return m;
}

namespace {

double cross(Point o, Point a, Point b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace

double ConvexHull::area() const {
  double a = 0.0;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = vertices[i];
    const Point& q = vertices[(i + 1) % n];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

bool ConvexHull::contains(Point p, double tol) const {
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = vertices[i];
    const Point& b = vertices[(i + 1) % n];
    double scale = std::max({1.0, std::hypot(b.x - a.x, b.y - a.y), std::hypot(p.x - a.x, p.y - a.y)});
    if (cross(a, b, p) < -tol * scale * scale) return false;
  }
  return true;
}

std::optional<ConvexHull> hull_of(const Eigen::VectorXcd& points) {
  std::vector<Point> pts;
  for (Eigen::Index k = 0; k < points.size(); ++k) pts.push_back({points(k).real(), points(k).imag()});
  std::sort(pts.begin(), pts.end(), [](Point a, Point b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
  pts.erase(std::unique(pts.begin(), pts.end(), [](Point a, Point b) { return a.x == b.x && a.y == b.y; }),
            pts.end());
  if (pts.size() < 3) return std::nullopt;

  std::vector<Point> h(2 * pts.size());
  std::size_t k = 0;
  for (const Point& p : pts) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 0.0) --k;
    h[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  if (h.size() < 3) return std::nullopt;
  ConvexHull hull{std::move(h)};
  if (!(hull.area() > 0.0)) return std::nullopt;
  return hull;
}

Moments hull_moments(const ConvexHull& hull) {
  const auto& v = hull.vertices;
  const std::size_t n = v.size();
  double a = 0.0, ix = 0.0, ixx = 0.0, iyy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = v[i];
    const Point& q = v[(i + 1) % n];
    const double c = p.x * q.y - q.x * p.y;
    a += c;
    ix += (p.x + q.x) * c;
    ixx += (p.x * p.x + p.x * q.x + q.x * q.x) * c;
    iyy += (p.y * p.y + p.y * q.y + q.y * q.y) * c;
  }
  a *= 0.5;
  if (!(std::abs(a) > 0.0) || n < 3) throw DegenerateDataError("convex hull has zero area");
  Moments m;
  m.M1 = ix / 6.0 / a;
  m.M2 = (ixx - iyy) / 12.0 / a;
  return m;
}

DegreeBounds degree_bounds(double lambda2, double lambda_n, int n) {
  if (n < 2) throw ParameterError("degree bounds need at least two nodes");
  const double f = static_cast<double>(n - 1) / n;
  return {f * lambda2, f * lambda_n};
}

Interval quadratic_mean_bounds(double M1, double M2) {
  if (!(M2 >= 0.0)) throw ParameterError("M2 must be non-negative");
  return {std::max(M1 * M1, 0.5 * M2), M2};
}

namespace {

struct Lloyd {
  std::vector<int> labels;
  Eigen::MatrixXd centers;
  double scatter;
};

Lloyd run_kmeans(const Eigen::MatrixXd& x, int k, std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd centers(k, x.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = x.row(first(rng));
  Eigen::VectorXd d2(n);
  for (int c = 1; c < k; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      d2(i) = (centers.topRows(c).rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff();
    }
    Eigen::Index pick;
    if (d2.sum() > 0.0) {
      std::discrete_distribution<Eigen::Index> dd(d2.data(), d2.data() + n);
      pick = dd(rng);
    } else {
      pick = first(rng);
    }
    centers.row(c) = x.row(pick);
  }

  std::vector<int> labels(n, -1);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best;
      (centers.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
      if (labels[i] != static_cast<int>(best)) {
        labels[i] = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed) break;
    for (int c = 0; c < k; ++c) {
      Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(x.cols());
      int count = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (labels[i] == c) sum += x.row(i), ++count;
      }
      if (count > 0) centers.row(c) = sum / count;
    }
  }
  double scatter = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) scatter += (x.row(i) - centers.row(labels[i])).squaredNorm();
  return {labels, centers, scatter};
}

}  // namespace

Clustering cluster_by_ratios(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int restarts) {
  if (k < 1) throw ParameterError("cluster count must be at least 1");
  if (points.rows() < k) throw ParameterError("fewer points than clusters");
  if (restarts < 1) throw ParameterError("at least one k-means restart is required");
  if (!points.allFinite()) throw ParameterError("ratio points must be finite");
  std::mt19937_64 rng(seed);
  Clustering best;
  best.scatter = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Lloyd run = run_kmeans(points, k, rng);
    if (run.scatter < best.scatter) {
      best.labels = std::move(run.labels);
      best.centers = std::move(run.centers);
      best.scatter = run.scatter;
    }
  }
  return best;
}

double mean_edges_per_node(double M1, double mean_weight) {
  if (!(mean_weight > 0.0)) throw ParameterError("mean edge weight must be positive");
  return M1 / mean_weight;
}

ExtremeEigenvalues select_extremes(const Eigen::VectorXcd& lambdas, double zero_sep) {
  if (lambdas.size() < 2) throw ParameterError("need at least two eigenvalues");
  std::vector<double> re(lambdas.size());
  for (Eigen::Index k = 0; k < lambdas.size(); ++k) re[k] = lambdas(k).real();
  std::sort(re.begin(), re.end());
  ExtremeEigenvalues out;
  out.lambda_n = re.back();
  const double sep = zero_sep * out.lambda_n;
  auto it = std::find_if(re.begin(), re.end(), [sep](double x) { return x > sep; });
  if (it != re.end() && out.lambda_n > 0.0) {
    out.lambda2 = *it;
  } else {
    out.lambda2 = re[1];
    out.lambda2_fallback = true;
  }
  return out;
}

std::string to_string(SummaryMode mode) {
  return mode == SummaryMode::hull ? "hull" : "full-spectrum";
}

SummaryMode summary_mode_from_string(const std::string& s) {
  if (s == "hull") return SummaryMode::hull;
  if (s == "full-spectrum" || s == "full") return SummaryMode::full_spectrum;
  throw ParameterError("unknown summary mode `" + s + "`");
}

namespace {

// Longest edge of the Euclidean minimum spanning tree (Prim, dense).
double largest_gap(const std::vector<Point>& p) {
  const std::size_t n = p.size();
  if (n < 2) return 0.0;
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<bool> in(n, false);
  dist[0] = 0.0;
  double worst = 0.0;
  for (std::size_t it = 0; it < n; ++it) {
    std::size_t u = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (!in[v] && (u == n || dist[v] < dist[u])) u = v;
    }
    in[u] = true;
    worst = std::max(worst, dist[u]);
    for (std::size_t v = 0; v < n; ++v) {
      if (!in[v]) dist[v] = std::min(dist[v], std::hypot(p[u].x - p[v].x, p[u].y - p[v].y));
    }
  }
  return worst;
}

double diameter(const std::vector<Point>& p) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) d = std::max(d, std::hypot(p[i].x - p[j].x, p[i].y - p[j].y));
  }
  return d;
}

}  // namespace

SpectralSummary summarize(const Eigen::VectorXcd& lambdas, int n, SummaryMode mode, double zero_sep) {
  if (lambdas.size() == 0) throw ParameterError("no eigenvalues to summarise");
  SpectralSummary s;
  s.mode = mode;
  s.eigenvalue_count = static_cast<int>(lambdas.size());
  Moments m = moments_from_spectrum(lambdas);
  if (mode == SummaryMode::hull) {
    s.hull = hull_of(lambdas);
    if (s.hull) {
      m = hull_moments(*s.hull);
      std::vector<Point> pts;
      for (Eigen::Index k = 0; k < lambdas.size(); ++k) pts.push_back({lambdas(k).real(), lambdas(k).imag()});
      if (largest_gap(pts) > 0.5 * diameter(s.hull->vertices)) {
        s.warnings.push_back("eigenvalues form separated clusters; a single hull may overstate the moments");
      }
    } else {
      s.mode = SummaryMode::full_spectrum;
      s.warnings.push_back("degenerate hull; moments taken from the full spectrum");
    }
  }
  s.M1 = m.M1;
  s.M2 = m.M2;
  s.imag_residual = m.imag_residual;
  s.D1 = m.M1;
  if (s.M2 >= 0.0) {
    s.D2_bounds = quadratic_mean_bounds(s.M1, s.M2);
  } else {
    s.D2_bounds = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    s.warnings.push_back("negative M2; quadratic-mean bounds undefined");
  }
  if (lambdas.size() >= 2) {
    auto ext = select_extremes(lambdas, zero_sep);
    s.lambda2 = ext.lambda2;
    s.lambda_n = ext.lambda_n;
    if (ext.lambda2_fallback) s.warnings.push_back("no eigenvalue above the zero separation; lambda_2 is the second smallest");
    if (n >= 2) {
      auto b = degree_bounds(s.lambda2, s.lambda_n, n);
      s.dmin_bound = b.dmin_bound;
      s.dmax_bound = b.dmax_bound;
    }
  } else {
    s.lambda_n = lambdas(0).real();
    s.warnings.push_back("single eigenvalue; lambda_2 undefined");
  }
  return s;
}

namespace {

nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json to_json(const SpectralSummary& s) {
  nlohmann::json j = {
      {"mode", to_string(s.mode)},
      {"M1", num(s.M1)},
      {"M2", num(s.M2)},
      {"D1", num(s.D1)},
      {"D2_bounds", {num(s.D2_bounds.lo), num(s.D2_bounds.hi)}},
      {"lambda2", num(s.lambda2)},
      {"lambda_n", num(s.lambda_n)},
      {"dmin_bound", num(s.dmin_bound)},
      {"dmax_bound", num(s.dmax_bound)},
      {"imag_residual", num(s.imag_residual)},
      {"eigenvalue_count", s.eigenvalue_count},
      {"warnings", s.warnings},
  };
  if (s.hull) {
    nlohmann::json v = nlohmann::json::array();
    for (const auto& p : s.hull->vertices) v.push_back({p.x, p.y});
    j["hull"] = v;
  }
  return j;
}

void write_hull_csv(std::ostream& out, const ConvexHull& hull) {
  out << "x,y\n" << std::setprecision(17);
  for (const auto& p : hull.vertices) out << p.x << ',' << p.y << '\n';
}

void write_cluster_csv(std::ostream& out, const std::vector<int>& nodes, const Clustering& c,
                       const Eigen::MatrixXd& points) {
  out << "node,label,ratio_v2,ratio_v3\n" << std::setprecision(17);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    out << nodes[i] << ',' << c.labels[i] << ',' << points(i, 0) << ','
        << (points.cols() > 1 ? points(i, 1) : std::numeric_limits<double>::quiet_NaN()) << '\n';
  }
}

}  // namespace specid
