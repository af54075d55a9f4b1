#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "specid/graph.hpp"

namespace specid {

struct Moments {
  double M1 = 0.0;
  double M2 = 0.0;
  double imag_residual = 0.0;  // |Im mean(lambda^2)|, zero for conjugate-closed input
};

/// M1 = mean Re(lambda), M2 = Re mean(lambda^2).
Moments moments_from_spectrum(const Eigen::VectorXcd& lambdas);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Convex polygon, counterclockwise, no repeated closing vertex.
struct ConvexHull {
  std::vector<Point> vertices;

  double area() const;
  bool contains(Point p, double tol = 1e-12) const;
};

/// Andrew's monotone chain on (Re, Im). Empty when fewer than three points are
/// not collinear.
std::optional<ConvexHull> hull_of(const Eigen::VectorXcd& points);

/// Area-normalised moments of the polygon: M1 = <x>, M2 = <x^2 - y^2>, from
/// exact edge sums.
Moments hull_moments(const ConvexHull& hull);

struct DegreeBounds {
  double dmin_bound = 0.0;
  double dmax_bound = 0.0;
};

/// ((n-1)/n) lambda_2 <= d_min and d_max <= ((n-1)/n) lambda_n.
DegreeBounds degree_bounds(double lambda2, double lambda_n, int n);

/// Bounds on mean(d^2): [max(M1^2, M2/2), M2].
Interval quadratic_mean_bounds(double M1, double M2);

struct Clustering {
  std::vector<int> labels;
  double scatter = 0.0;  // within-cluster sum of squares
  Eigen::MatrixXd centers;
};

/// k-means with k-means++ seeding on the rows of `points`; the restart with the
/// lowest scatter wins, ties going to the earliest restart.
Clustering cluster_by_ratios(const Eigen::MatrixXd& points, int k, std::uint64_t seed = 0,
                             int restarts = 50);

double mean_edges_per_node(double M1, double mean_weight);

struct ExtremeEigenvalues {
  double lambda2 = 0.0;
  double lambda_n = 0.0;
  bool lambda2_fallback = false;  // no value cleared the zero separation
};

/// lambda_n = largest real part; lambda_2 = smallest real part above
/// zero_sep * lambda_n, else the second smallest real part.
ExtremeEigenvalues select_extremes(const Eigen::VectorXcd& lambdas, double zero_sep = 0.05);

enum class SummaryMode { full_spectrum, hull };

std::string to_string(SummaryMode mode);
SummaryMode summary_mode_from_string(const std::string& s);

struct SpectralSummary {
  SummaryMode mode = SummaryMode::full_spectrum;
  double M1 = 0.0;
  double M2 = 0.0;
  double D1 = 0.0;
  Interval D2_bounds;
  double lambda2 = 0.0;
  double lambda_n = 0.0;
  double dmin_bound = 0.0;
  double dmax_bound = 0.0;
  double imag_residual = 0.0;
  int eigenvalue_count = 0;
  std::optional<ConvexHull> hull;
  std::vector<std::string> warnings;
};

/// Moments (from the hull when requested and possible), quadratic-mean and
/// degree bounds for a network of n nodes.
SpectralSummary summarize(const Eigen::VectorXcd& lambdas, int n, SummaryMode mode,
                          double zero_sep = 0.05);

nlohmann::json to_json(const SpectralSummary& s);

void write_hull_csv(std::ostream& out, const ConvexHull& hull);
/// `node,label,ratio_v2,ratio_v3`.
void write_cluster_csv(std::ostream& out, const std::vector<int>& nodes, const Clustering& c,
                       const Eigen::MatrixXd& points);

}  // namespace specid
