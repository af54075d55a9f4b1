#include "specid/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "specid/errors.hpp"

namespace specid {

namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ParameterError(std::string(name) + " must lie in [0, 1]");
  }
}

void check_weight_range(Interval w) {
  if (!(std::isfinite(w.lo) && std::isfinite(w.hi)) || w.lo < 0.0 || w.lo > w.hi) {
    throw ParameterError("weight range must satisfy 0 <= low <= high");
  }
}

// Uniform in [lo, hi]; collapses to lo when the interval is a point.
double draw_weight(std::mt19937_64& rng, Interval w) {
  return w.lo + (w.hi - w.lo) * std::generate_canonical<double, 53>(rng);
}

bool draw_edge(std::mt19937_64& rng, double p) {
  return std::generate_canonical<double, 53>(rng) < p;
}

}  // namespace

WeightedDigraph::WeightedDigraph(Eigen::MatrixXd weights, bool undirected, std::vector<int> labels)
    : weights_(std::move(weights)), undirected_(undirected), labels_(std::move(labels)) {
  if (weights_.rows() != weights_.cols() || weights_.rows() == 0) {
    throw ParameterError("weight matrix must be square and non-empty");
  }
  for (Eigen::Index i = 0; i < weights_.rows(); ++i) {
    if (weights_(i, i) != 0.0) throw ParameterError("self-loops are not allowed");
    for (Eigen::Index j = 0; j < weights_.cols(); ++j) {
      double w = weights_(i, j);
      if (!std::isfinite(w) || w < 0.0) {
        throw ParameterError("edge weights must be finite and non-negative");
      }
      if (undirected_ && w != weights_(j, i)) {
        throw ParameterError("undirected graph requires a symmetric weight matrix");
      }
    }
  }
  if (!labels_.empty() && static_cast<Eigen::Index>(labels_.size()) != weights_.rows()) {
    throw ParameterError("label count must equal node count");
  }
}

WeightedDigraph WeightedDigraph::empty(int n, bool undirected) {
  if (n <= 0) throw ParameterError("node count must be positive");
  return WeightedDigraph(Eigen::MatrixXd::Zero(n, n), undirected);
}

int WeightedDigraph::edge_count() const {
  return static_cast<int>((weights_.array() > 0.0).count());
}

double WeightedDigraph::mean_edge_weight() const {
  int edges = edge_count();
  return edges == 0 ? 0.0 : weights_.sum() / edges;
}

WeightedDigraph generate_erdos_renyi(int n, double p, Interval weight_range, bool directed,
                                     std::uint64_t seed) {
  if (n <= 0) throw ParameterError("node count must be positive");
  check_probability(p, "edge probability");
  check_weight_range(weight_range);
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = directed ? 0 : i + 1; j < n; ++j) {
      if (i == j) continue;
      if (!draw_edge(rng, p)) continue;
      double v = draw_weight(rng, weight_range);
      w(i, j) = v;
      if (!directed) w(j, i) = v;
    }
  }
  return WeightedDigraph(std::move(w), !directed);
}

WeightedDigraph generate_planted_partition(int clusters, int cluster_size, double p_in,
                                           double p_out, Interval weight_range,
                                           std::uint64_t seed) {
  if (clusters <= 0 || cluster_size <= 0) {
    throw ParameterError("cluster count and size must be positive");
  }
  check_probability(p_in, "p_in");
  check_probability(p_out, "p_out");
  check_weight_range(weight_range);
  const int n = clusters * cluster_size;
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i / cluster_size;

  std::mt19937_64 rng(seed);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double p = labels[i] == labels[j] ? p_in : p_out;
      if (!draw_edge(rng, p)) continue;
      double v = draw_weight(rng, weight_range);
      w(i, j) = v;
      w(j, i) = v;
    }
  }
  return WeightedDigraph(std::move(w), true, std::move(labels));
}

WeightedDigraph generate_degree_targeted(int n, double mean_edges, double sd_edges,
                                         Interval weight_range, std::uint64_t seed) {
  if (n <= 1) throw ParameterError("degree-targeted graph needs at least two nodes");
  if (!(mean_edges > 0.0)) throw ParameterError("mean edge count must be positive");
  if (mean_edges >= n) throw ParameterError("mean edge count must be below the node count");
  if (!(sd_edges >= 0.0)) throw ParameterError("edge-count deviation must be non-negative");
  check_weight_range(weight_range);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> count_dist(mean_edges, sd_edges > 0.0 ? sd_edges : 1.0);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  std::vector<int> others(n - 1);
  for (int i = 0; i < n; ++i) {
    double sample = sd_edges > 0.0 ? count_dist(rng) : mean_edges;
    int k = static_cast<int>(std::clamp(std::round(sample), 0.0, static_cast<double>(n - 1)));
    // Partial Fisher-Yates: the first k entries are a uniform k-subset.
    std::iota(others.begin(), others.begin() + i, 0);
    std::iota(others.begin() + i, others.end(), i + 1);
    for (int s = 0; s < k; ++s) {
      std::uniform_int_distribution<int> pick(s, n - 2);
      std::swap(others[s], others[pick(rng)]);
    }
    for (int s = 0; s < k; ++s) w(i, others[s]) = draw_weight(rng, weight_range);
  }
  return WeightedDigraph(std::move(w), false);
}

WeightedDigraph generate_hub_graph(int n, double background_mean_degree, int hub_degree,
                                   std::uint64_t seed) {
  if (n < 3) throw ParameterError("hub graph needs at least three nodes");
  if (hub_degree < 1 || hub_degree > n - 1) {
    throw ParameterError("hub degree must lie in [1, n-1]");
  }
  if (!(background_mean_degree >= 0.0)) {
    throw ParameterError("background mean degree must be non-negative");
  }
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  auto link = [&w](int a, int b) {
    w(a, b) = 1.0;
    w(b, a) = 1.0;
  };

  // Random recursive tree over nodes 1..n-1 keeps the background connected.
  std::vector<int> order(n - 1);
  std::iota(order.begin(), order.end(), 1);
  std::shuffle(order.begin(), order.end(), rng);
  for (int k = 1; k < n - 1; ++k) {
    std::uniform_int_distribution<int> parent(0, k - 1);
    link(order[k], order[parent(rng)]);
  }
  // The tree already contributes mean degree ~2.
  double extra = std::max(0.0, background_mean_degree - 2.0);
  double p = std::min(1.0, extra / (n - 2));
  for (int i = 1; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (draw_edge(rng, p)) link(i, j);
    }
  }

  // Node 1 is always a spoke; the rest are a uniform subset of 2..n-1.
  std::vector<int> spokes(n - 1);
  std::iota(spokes.begin(), spokes.end(), 1);
  link(0, 1);
  for (int s = 1; s < hub_degree; ++s) {
    std::uniform_int_distribution<int> pick(s, n - 2);
    std::swap(spokes[s], spokes[pick(rng)]);
    link(0, spokes[s]);
  }
  return WeightedDigraph(std::move(w), true);
}

Laplacian laplacian(const WeightedDigraph& g) {
  Eigen::MatrixXd l = -g.weights();
  l.diagonal() = g.in_degrees();
  return Laplacian{std::move(l)};
}

ExactSpectrum exact_spectrum(const Laplacian& l) {
  const Eigen::MatrixXd& m = l.matrix;
  const Eigen::Index n = m.rows();
  ExactSpectrum out;
  if ((m.array() == m.transpose().array()).all()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
    out.eigenvalues = es.eigenvalues().cast<std::complex<double>>();
    out.eigenvectors = es.eigenvectors().cast<std::complex<double>>();
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed");
    out.eigenvalues = es.eigenvalues();
    out.eigenvectors = es.eigenvectors();
  }
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    const auto& x = out.eigenvalues(a);
    const auto& y = out.eigenvalues(b);
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  ExactSpectrum sorted;
  sorted.eigenvalues.resize(n);
  sorted.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    sorted.eigenvalues(k) = out.eigenvalues(idx[k]);
    sorted.eigenvectors.col(k) = out.eigenvectors.col(idx[k]);
  }
  if (!sorted.eigenvalues.allFinite()) throw NumericalError("non-finite Laplacian eigenvalue");
  return sorted;
}

DegreeStats degree_stats(const WeightedDigraph& g) {
  DegreeStats s;
  s.degrees = g.in_degrees();
  s.d_min = s.degrees.minCoeff();
  s.d_max = s.degrees.maxCoeff();
  s.mean_degree = s.degrees.mean();
  s.mean_sq_degree = s.degrees.squaredNorm() / static_cast<double>(s.degrees.size());
  return s;
}

WeightedDigraph parse_edge_list(std::istream& in, bool undirected, int n) {
  struct Edge {
    int src, dst;
    double w;
  };
  std::vector<Edge> edges;
  std::string line;
  int line_no = 0;
  int max_id = -1;
  while (std::getline(in, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    long long src = 0, dst = 0;
    if (!(ss >> src >> dst)) throw ParseError("expected `src dst [weight]`", line_no);
    double w = 1.0;
    std::string rest;
    if (ss >> rest) {
      std::size_t used = 0;
      try {
        w = std::stod(rest, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != rest.size()) throw ParseError("malformed weight `" + rest + "`", line_no);
      if (ss >> rest) throw ParseError("trailing tokens after weight", line_no);
    }
    if (!std::isfinite(w) || w < 0.0) throw ParseError("negative or non-finite weight", line_no);
    if (src < 0 || dst < 0 || (n > 0 && (src >= n || dst >= n))) {
      throw ParseError("node id out of range", line_no);
    }
    if (src > 1'000'000 || dst > 1'000'000) throw ParseError("node id too large", line_no);
    if (src == dst) throw ParseError("self-loop", line_no);
    edges.push_back({static_cast<int>(src), static_cast<int>(dst), w});
    max_id = std::max({max_id, static_cast<int>(src), static_cast<int>(dst)});
  }
  int size = n > 0 ? n : max_id + 1;
  if (size <= 0) throw ParseError("edge list is empty");
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(size, size);
  for (const auto& e : edges) w(e.dst, e.src) += e.w;
  if (undirected) {
    Eigen::MatrixXd sym = w + w.transpose();
    // A pair listed once in each direction describes one undirected edge.
    for (Eigen::Index i = 0; i < size; ++i) {
      for (Eigen::Index j = 0; j < size; ++j) {
        if (w(i, j) > 0.0 && w(j, i) > 0.0) sym(i, j) = std::max(w(i, j), w(j, i));
      }
    }
    w = std::move(sym);
  }
  return WeightedDigraph(std::move(w), undirected);
}

WeightedDigraph load_edge_list(const std::filesystem::path& path, bool undirected, int n) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open edge list " + path.string());
  return parse_edge_list(in, undirected, n);
}

nlohmann::json to_json(const WeightedDigraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  const auto& w = g.weights();
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      if (w(i, j) == 0.0) continue;
      if (g.undirected() && j > i) continue;
      // Stored as [source, target, weight].
      edges.push_back({j, i, w(i, j)});
    }
  }
  nlohmann::json j = {{"n", g.size()}, {"directed", !g.undirected()}, {"edges", edges}};
  if (!g.labels().empty()) j["labels"] = g.labels();
  return j;
}

WeightedDigraph graph_from_json(const nlohmann::json& j) {
  try {
    int n = j.at("n").get<int>();
    bool directed = j.at("directed").get<bool>();
    if (n <= 0) throw ParameterError("graph n must be positive");
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : j.at("edges")) {
      int src = e.at(0).get<int>();
      int dst = e.at(1).get<int>();
      double v = e.at(2).get<double>();
      if (src < 0 || src >= n || dst < 0 || dst >= n) {
        throw ParameterError("graph edge endpoint out of range");
      }
      w(dst, src) = v;
      if (!directed) w(src, dst) = v;
    }
    std::vector<int> labels;
    if (j.contains("labels")) labels = j.at("labels").get<std::vector<int>>();
    return WeightedDigraph(std::move(w), !directed, std::move(labels));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("graph JSON: ") + e.what());
  }
}

}  // namespace specid
