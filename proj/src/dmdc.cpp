#include "specid/dmdc.hpp"

#include <cmath>
#include <complex>

#include "specid/errors.hpp"

namespace specid {

EmbeddingConfig EmbeddingConfig::from_seconds(int depth, double delta, double T, double svd_tol) {
  if (!(T > 0.0)) throw ParameterError("sampling period must be positive");
  double ratio = delta / T;
  double rounded = std::round(ratio);
  if (!(rounded >= 1.0) || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw ParameterError("embedding spacing must be a positive multiple of the sampling period");
  }
  EmbeddingConfig cfg{depth, static_cast<int>(rounded), svd_tol};
  cfg.validate();
  return cfg;
}

void EmbeddingConfig::validate() const {
  if (depth < 1) throw ParameterError("embedding depth N must be at least 1");
  if (spacing < 1) throw ParameterError("embedding spacing must be at least one period");
  if (!(svd_tol > 0.0 && svd_tol < 1.0)) throw ParameterError("svd_tol must lie in (0, 1)");
}

DataMatrices build_data_matrices(const Trajectory& traj, const EmbeddingConfig& cfg) {
  cfg.validate();
  if (traj.samples.rows() != traj.inputs.rows()) {
    throw ParameterError("samples and inputs must have the same number of rows");
  }
  const long ks = traj.length();
  if (ks < cfg.min_samples()) {
    throw DataLengthError("trajectory has " + std::to_string(ks) + " samples; embedding needs at least " +
                              std::to_string(cfg.min_samples()),
                          cfg.min_samples());
  }
  const Eigen::Index q = traj.samples.cols();
  const Eigen::Index p = traj.inputs.cols();
  const int n_stack = cfg.depth;
  const int n_input = cfg.input_depth();
  const Eigen::Index cols = ks - static_cast<long>(n_stack - 1) * cfg.spacing - 1;

  DataMatrices d;
  d.columns = cols;
  d.zbar.resize(n_stack * q, cols);
  d.zbar_prime.resize(n_stack * q, cols);
  d.ubar.resize(n_input * p, cols);
  for (int l = 0; l < n_stack; ++l) {
    const Eigen::Index offset = static_cast<Eigen::Index>(l) * cfg.spacing;
    d.zbar.middleRows(l * q, q) = traj.samples.middleRows(offset, cols).transpose();
    d.zbar_prime.middleRows(l * q, q) = traj.samples.middleRows(offset + 1, cols).transpose();
  }
  for (int l = 0; l < n_input; ++l) {
    d.ubar.middleRows(l * p, p) = traj.inputs.middleRows(l, cols).transpose();
  }
  return d;
}

DmdcResult fit(const DataMatrices& data, const EmbeddingConfig& cfg) {
  cfg.validate();
  const Eigen::Index nz = data.zbar.rows();
  const Eigen::Index nu = data.ubar.rows();
  if (nz == 0 || data.columns == 0) throw ParameterError("empty data matrices");
  if (nz % cfg.depth != 0) throw ParameterError("stacked rows are not a multiple of the depth");

  DmdcResult r;
  r.config = cfg;
  if (data.columns < nz + nu) {
    r.warnings.push_back("fewer data columns (" + std::to_string(data.columns) +
                         ") than regressor rows (" + std::to_string(nz + nu) + ")");
  }

  Eigen::MatrixXd regressor(nz + nu, data.columns);
  regressor.topRows(nz) = data.zbar;
  regressor.bottomRows(nu) = data.ubar;
  if (!regressor.allFinite() || !data.zbar_prime.allFinite()) {
    throw NumericalError("data matrices contain non-finite values");
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(regressor, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
  const double cutoff = cfg.svd_tol * sigma_max;
  int rank = 0;
  while (rank < sigma.size() && sigma(rank) > cutoff) ++rank;
  if (sigma_max == 0.0 || rank == 0) {
    throw DegenerateDataError(
        "regressor has no singular value above the cutoff; the trajectory lies in a proper "
        "subspace");
  }
  r.rank_used = rank;

  // [Gamma Upsilon] = Z' V_r S_r^{-1} U_r^T
  Eigen::MatrixXd right = data.zbar_prime * svd.matrixV().leftCols(rank);
  right = right * sigma.head(rank).cwiseInverse().asDiagonal();
  Eigen::MatrixXd solution = right * svd.matrixU().leftCols(rank).transpose();
  r.gamma = solution.leftCols(nz);
  r.upsilon = solution.rightCols(nu);

  if (nu > 0) {
    Eigen::BDCSVD<Eigen::MatrixXd> usvd(data.ubar);
    r.input_rank = static_cast<int>((usvd.singularValues().array() > cutoff).count());
  }

  Eigen::MatrixXd misfit = data.zbar_prime - solution * regressor;
  const double denom = data.zbar_prime.norm();
  r.residual = denom > 0.0 ? misfit.norm() / denom : misfit.norm();

  Eigen::EigenSolver<Eigen::MatrixXd> es(r.gamma);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of Gamma failed");
  r.eigenvalues = es.eigenvalues();
  r.eigenvectors = es.eigenvectors();
  for (Eigen::Index k = 0; k < r.eigenvectors.cols(); ++k) {
    double nrm = r.eigenvectors.col(k).norm();
    if (nrm > 0.0) r.eigenvectors.col(k) /= nrm;
  }
  if (!r.eigenvalues.allFinite()) throw NumericalError("non-finite eigenvalue of Gamma");
  return r;
}

CompanionReport companion_structure_check(const DmdcResult& result, int q) {
  CompanionReport rep;
  const Eigen::Index nq = result.gamma.rows();
  if (q <= 0 || nq % q != 0) throw ParameterError("q must divide the stacked dimension");
  const Eigen::Index shift_rows = nq - q;
  rep.rows_checked = static_cast<int>(shift_rows);
  for (Eigen::Index i = 0; i < shift_rows; ++i) {
    for (Eigen::Index j = 0; j < nq; ++j) {
      double expected = j == i + q ? 1.0 : 0.0;
      rep.gamma_deviation = std::max(rep.gamma_deviation, std::abs(result.gamma(i, j) - expected));
    }
    if (result.upsilon.cols() > 0) {
      rep.upsilon_deviation =
          std::max(rep.upsilon_deviation, result.upsilon.row(i).cwiseAbs().maxCoeff());
    }
  }
  return rep;
}

double stacked_eigenvector_error(const DmdcResult& result, int q, Eigen::Index column) {
  const int depth = result.config.depth;
  const Eigen::VectorXcd w = result.eigenvectors.col(column);
  if (q <= 0 || w.size() != static_cast<Eigen::Index>(depth) * q) {
    throw ParameterError("q does not match the stacked dimension");
  }
  const std::complex<double> step = std::pow(result.eigenvalues(column), result.config.spacing);
  // Reference block: the one with the largest norm, so decaying modes stay well scaled.
  int ref = 0;
  for (int l = 1; l < depth; ++l) {
    if (w.segment(l * q, q).norm() > w.segment(ref * q, q).norm()) ref = l;
  }
  const Eigen::VectorXcd base = w.segment(ref * q, q);
  double err = 0.0;
  for (int l = 0; l < depth; ++l) {
    Eigen::VectorXcd predicted = base * std::pow(step, l - ref);
    err = std::max(err, (w.segment(l * q, q) - predicted).norm() / w.norm());
  }
  return err;
}

nlohmann::json to_json(const DmdcResult& result) {
  nlohmann::json eig = nlohmann::json::array();
  for (Eigen::Index k = 0; k < result.eigenvalues.size(); ++k) {
    eig.push_back({result.eigenvalues(k).real(), result.eigenvalues(k).imag()});
  }
  return {
      {"eigenvalues", eig},
      {"residual", result.residual},
      {"rank_used", result.rank_used},
      {"input_rank", result.input_rank},
      {"config",
       {{"N", result.config.depth},
        {"spacing", result.config.spacing},
        {"svd_tol", result.config.svd_tol}}},
      {"warnings", result.warnings},
  };
}

}  // namespace specid
