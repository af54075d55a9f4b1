#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "specid/dynamics.hpp"

namespace specid {

/// Delay-embedding parameters. `spacing` is the stack spacing Delta expressed
/// in sampling periods; consecutive data columns are always one period apart.
struct EmbeddingConfig {
  int depth = 1;          // N
  int spacing = 1;        // Delta / T
  double svd_tol = 1e-10;  // relative singular-value cutoff

  /// Builds a config from Delta in seconds; Delta must be a multiple of T.
  static EmbeddingConfig from_seconds(int depth, double delta, double T, double svd_tol = 1e-10);

  void validate() const;

  /// Number of stacked input samples N' = (N - 1) Delta / T + 1.
  int input_depth() const { return (depth - 1) * spacing + 1; }
  /// Minimum trajectory length (N - 1) Delta / T + 2.
  long min_samples() const { return static_cast<long>(depth - 1) * spacing + 2; }
};

/// Column j of zbar stacks z(jT), z(jT + Delta), ..., z(jT + (N-1)Delta);
/// zbar_prime is the same stack started one period later; ubar stacks every
/// input sample u(jT), ..., u(jT + (N'-1)T) inside the window.
struct DataMatrices {
  Eigen::MatrixXd zbar;
  Eigen::MatrixXd zbar_prime;
  Eigen::MatrixXd ubar;
  long columns = 0;
};

struct DmdcResult {
  Eigen::MatrixXd gamma;    // Nq x Nq
  Eigen::MatrixXd upsilon;  // Nq x N'p
  Eigen::VectorXcd eigenvalues;
  Eigen::MatrixXcd eigenvectors;  // columns, unit 2-norm
  double residual = 0.0;          // ||Z' - Gamma Z - Upsilon U||_F / ||Z'||_F
  int rank_used = 0;
  int input_rank = 0;  // numerical rank of ubar at the same cutoff
  EmbeddingConfig config;
  std::vector<std::string> warnings;

  int measurement_count() const {
    return config.depth > 0 ? static_cast<int>(gamma.rows()) / config.depth : 0;
  }
};

struct CompanionReport {
  double gamma_deviation = 0.0;
  double upsilon_deviation = 0.0;
  int rows_checked = 0;

  double max_deviation() const { return std::max(gamma_deviation, upsilon_deviation); }
};

DataMatrices build_data_matrices(const Trajectory& traj, const EmbeddingConfig& cfg);

/// Least-squares DMD with control from a truncated SVD of [zbar; ubar],
/// followed by a dense eigendecomposition of Gamma.
DmdcResult fit(const DataMatrices& data, const EmbeddingConfig& cfg);

/// For unit spacing the first (N-1)q rows of Gamma must be the block shift
/// [0 I] and the matching rows of Upsilon must vanish. Reports deviations only.
CompanionReport companion_structure_check(const DmdcResult& result, int q);

/// Relative error of the stacked-eigenvector form block_l = mu~^(l Delta/T) block_0,
/// maximised over the supplied eigenvector columns.
double stacked_eigenvector_error(const DmdcResult& result, int q, Eigen::Index column);

nlohmann::json to_json(const DmdcResult& result);

}  // namespace specid
