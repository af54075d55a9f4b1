#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "specid/scenario.hpp"

namespace specid {

/// Failure of one pipeline stage. `exit_code` is 2 for bad input and 3 for
/// numerical trouble.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what, int exit_code)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)), exit_code_(exit_code) {}

  const std::string& stage() const { return stage_; }
  int exit_code() const { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

/// Maps the library's exception types onto CLI exit codes (0 is never returned).
int exit_code_for(const std::exception& e);

struct Identification {
  DmdcResult dmdc;
  std::vector<SystemEigen> eigens;
  LaplacianEstimate estimate;
  std::vector<RatioEntry> ratios;  // one block per Laplacian group (its first column)
  std::vector<int> measured_nodes;  // factored node list; empty otherwise
  int n = 0;                        // node count when known
};

struct AnalysisResult {
  SpectralSummary summary;
  std::optional<double> mean_edges;
  /// Ratio for each requested pair on the lambda_2 eigenvector.
  std::vector<RatioEntry> fiedler_ratios;
  std::optional<Clustering> clustering;
  Eigen::MatrixXd cluster_points;  // rows follow the measured node list
  std::vector<std::string> warnings;
};

WeightedDigraph build_graph(const GraphSpec& spec);
NetworkSystem build_system(const Scenario& s, const WeightedDigraph& g);
Trajectory simulate_scenario(const Scenario& s, const NetworkSystem& sys);

Identification identify(const Trajectory& traj, const Scenario& s, int n);
nlohmann::json to_json(const Identification& id);
/// Reads back the fields `analyze` needs (groups and ratio tables). A document
/// with a bare `spectrum` array of [re, im] pairs (plus optional `n`) is also accepted.
Identification identification_from_json(const nlohmann::json& j);

AnalysisResult analyze(const Identification& id, const AnalysisSpec& spec);
nlohmann::json to_json(const AnalysisResult& a);

struct RunReport {
  nlohmann::json data;
  std::string text;
};

/// Comparison against the exact spectrum and degrees of a known graph.
RunReport make_report(const Scenario& s, const WeightedDigraph& g, const Identification& id,
                      const AnalysisResult& a);

/// Runs every stage and writes the artifacts into `out_dir`. On failure a
/// `failure.json` naming the stage is written and StageError is thrown.
RunReport run_pipeline(const Scenario& s, const std::filesystem::path& out_dir);

}  // namespace specid
