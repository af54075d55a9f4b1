#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace specid {

/// Closed interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Weighted network. weights()(i, j) is the weight of the edge j -> i, so row
/// sums are weighted in-degrees.
class WeightedDigraph {
 public:
  WeightedDigraph(Eigen::MatrixXd weights, bool undirected, std::vector<int> labels = {});

  static WeightedDigraph empty(int n, bool undirected = false);

  int size() const { return static_cast<int>(weights_.rows()); }
  const Eigen::MatrixXd& weights() const { return weights_; }
  bool undirected() const { return undirected_; }

  /// Ground-truth cluster labels; empty when the generator has none.
  const std::vector<int>& labels() const { return labels_; }

  Eigen::VectorXd in_degrees() const { return weights_.rowwise().sum(); }
  int edge_count() const;
  double mean_edge_weight() const;

 private:
  Eigen::MatrixXd weights_;
  bool undirected_;
  std::vector<int> labels_;
};

struct Laplacian {
  Eigen::MatrixXd matrix;
};

/// Eigenpairs of a Laplacian, ascending by real part then imaginary part.
struct ExactSpectrum {
  Eigen::VectorXcd eigenvalues;
  Eigen::MatrixXcd eigenvectors;
};

struct DegreeStats {
  double d_min = 0.0;
  double d_max = 0.0;
  double mean_degree = 0.0;
  double mean_sq_degree = 0.0;
  Eigen::VectorXd degrees;
};

WeightedDigraph generate_erdos_renyi(int n, double p, Interval weight_range, bool directed,
                                     std::uint64_t seed);

/// Undirected planted-partition graph; labels() holds the cluster of each node.
WeightedDigraph generate_planted_partition(int clusters, int cluster_size, double p_in,
                                           double p_out, Interval weight_range,
                                           std::uint64_t seed);

/// Directed graph whose per-node in-edge counts are rounded normal samples,
/// clipped to [0, n-1]; in-neighbours are drawn uniformly without replacement.
WeightedDigraph generate_degree_targeted(int n, double mean_edges, double sd_edges,
                                         Interval weight_range, std::uint64_t seed);

/// Undirected unweighted hub graph: a connected sparse background (random
/// spanning tree plus Erdos-Renyi edges of the given mean degree) and node 0
/// linked to `hub_degree` distinct other nodes, always including node 1.
WeightedDigraph generate_hub_graph(int n, double background_mean_degree, int hub_degree,
                                   std::uint64_t seed);

Laplacian laplacian(const WeightedDigraph& g);

ExactSpectrum exact_spectrum(const Laplacian& l);

DegreeStats degree_stats(const WeightedDigraph& g);

/// Parses `src dst [weight]` lines with 0-based ids. Blank lines and lines
/// starting with '#' are skipped. When `n` is 0 the node count is inferred
/// from the largest id.
WeightedDigraph parse_edge_list(std::istream& in, bool undirected, int n = 0);
WeightedDigraph load_edge_list(const std::filesystem::path& path, bool undirected, int n = 0);

nlohmann::json to_json(const WeightedDigraph& g);
WeightedDigraph graph_from_json(const nlohmann::json& j);

}  // namespace specid
