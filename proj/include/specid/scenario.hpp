#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "specid/analysis.hpp"
#include "specid/dmdc.hpp"
#include "specid/dynamics.hpp"
#include "specid/graph.hpp"
#include "specid/spectral_id.hpp"

namespace specid {

inline constexpr int kScenarioVersion = 1;

struct GraphSpec {
  std::string generator;  // erdos_renyi | planted_partition | degree_targeted | hub | empty | edge_list | file
  int n = 0;
  double p = 0.0;
  bool directed = true;
  Interval weights{1.0, 1.0};
  int clusters = 0;
  int cluster_size = 0;
  double p_in = 0.0;
  double p_out = 0.0;
  double mean_edges = 0.0;
  double sd_edges = 0.0;
  double background_mean_degree = 0.0;
  int hub_degree = 0;
  std::filesystem::path path;
  std::uint64_t seed = 0;
};

struct InputSpec {
  int channels = 0;
  std::vector<InputSite> sites;
  /// When set, channel c drives this state of the c-th contiguous block of nodes.
  std::optional<int> block_state;
  Interval amplitude{0.0, 1.0};
  Interval frequency_hz{0.0, 1.0};
  std::uint64_t seed = 0;
};

/// Explicit sites, or the block layout expanded for an n-node graph.
std::vector<InputSite> input_sites(const InputSpec& spec, int n);

struct MeasurementSpec {
  std::vector<int> nodes;
  std::vector<int> states;
  std::vector<std::pair<int, int>> selections;  // used when not factored
  bool factored = true;

  MeasurementPlan plan() const;
};

struct AnalysisSpec {
  SummaryMode mode = SummaryMode::full_spectrum;
  int clusters = 0;  // 0 disables clustering
  int reference_node = 0;  // position in the measured node list
  double zero_sep = 0.05;
  std::vector<std::pair<int, int>> ratio_pairs;
  std::optional<double> mean_edge_weight;
  std::uint64_t cluster_seed = 0;
};

struct Scenario {
  int version = kScenarioVersion;
  std::string name;
  GraphSpec graph;
  Eigen::MatrixXd A;
  Eigen::VectorXd B;
  Eigen::VectorXd C;
  InputSpec inputs;
  std::optional<std::uint64_t> x0_seed;  // empty: zero initial state
  MeasurementSpec measurement;
  double T = 0.0;
  double t_end = 0.0;
  int depth = 1;
  double delta = 0.0;
  double svd_tol = 1e-10;
  SpuriousFilter filter;
  double dedup_tol = 1e-3;
  AnalysisSpec analysis;
  std::filesystem::path output_dir;

  UnitDynamics unit() const { return UnitDynamics(A, B, C); }
  EmbeddingConfig embedding() const;
};

/// Validates the whole document before returning; errors name the JSON path.
/// Relative file paths are resolved against `base_dir`.
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

/// Replaces every seed in the scenario with values derived from `seed`.
void override_seeds(Scenario& s, std::uint64_t seed);

nlohmann::json to_json(const Scenario& s);

}  // namespace specid
