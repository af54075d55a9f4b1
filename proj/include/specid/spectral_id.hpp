#pragma once

#include <complex>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "specid/dmdc.hpp"
#include "specid/dynamics.hpp"

namespace specid {

enum class SpuriousReason {
  none,
  near_zero,     // |mu~| below zero_tol
  rank_excess,   // beyond the numerical rank the data can support
  negative_real  // on the branch cut of the logarithm
};

std::string to_string(SpuriousReason r);

/// Continuous-time eigenvalue mu = log(mu~) / T of one column of Gamma.
struct SystemEigen {
  std::complex<double> mu;
  std::complex<double> mu_tilde;
  Eigen::Index column = 0;  // eigenvector column in the DMD result
  SpuriousReason reason = SpuriousReason::none;

  bool spurious() const { return reason != SpuriousReason::none; }
};

struct SpuriousFilter {
  double zero_tol = 1e-6;
  /// Keep at most rank_used - input_rank eigenvalues (the largest |mu~|):
  /// the stacked state part of the regressor cannot carry more modes.
  bool rank_rule = true;
};

std::vector<SystemEigen> recover_mu(const DmdcResult& result, double T,
                                    const SpuriousFilter& filter = {});

/// lambda = 1 / (C^T (A - mu I)^-1 B). Throws MappingError when mu is an
/// eigenvalue of A to working precision or the transfer value vanishes.
std::complex<double> mu_to_lambda(std::complex<double> mu, const UnitDynamics& unit);

/// Controllable and observable (A, B, C); then every eigenvalue of A is a
/// pole of C^T (A - mu I)^-1 B.
bool is_minimal(const UnitDynamics& unit);

struct LaplacianGroup {
  std::complex<double> lambda;
  std::vector<std::complex<double>> mus;
  std::vector<Eigen::Index> columns;

  int multiplicity() const { return static_cast<int>(mus.size()); }
};

struct MappingFailure {
  std::complex<double> mu;
  Eigen::Index column = 0;
  std::string reason;
};

struct LaplacianEstimate {
  std::vector<LaplacianGroup> groups;  // ascending real part
  std::vector<MappingFailure> failures;
  std::vector<std::string> notes;

  Eigen::VectorXcd lambdas() const;
};

/// Maps non-spurious mu through the unit transfer function and merges values
/// closer than dedup_tol (1 + |lambda|), at most m per group. Conjugate pairs
/// are averaged so the result is conjugate-closed. For a minimal unit, mu on
/// an eigenvalue of A maps to lambda = 0 (the limit of the formula) with a note.
LaplacianEstimate recover_laplacian(const std::vector<SystemEigen>& eigens,
                                    const UnitDynamics& unit, double dedup_tol = 1e-3);

struct RatioEntry {
  Eigen::Index column = 0;
  int i = 0;  // positions in the factored node list
  int j = 0;
  std::complex<double> ratio;
  double spread = 0.0;  // max deviation of the replicas from the median, relative
  int replicas = 0;     // replicas with a usable denominator
  bool reliable = false;
};

/// [Q1 v]_i / [Q1 v]_j from the eigenvector in column `column` of Gamma, using
/// the replicas w[l1 q + i q2 + l2] / w[l1 q + j q2 + l2] for every stack
/// block l1 and measured state l2. The plan must be factored.
std::vector<RatioEntry> eigenvector_ratios(const DmdcResult& result, const MeasurementPlan& plan,
                                           const std::vector<std::pair<int, int>>& pairs,
                                           const std::vector<Eigen::Index>& columns,
                                           double denom_tol = 1e-10);

nlohmann::json to_json(const SystemEigen& e);
nlohmann::json to_json(const LaplacianEstimate& est);
nlohmann::json to_json(const RatioEntry& r);

/// `re,im,multiplicity,source_mu_list`, with mu values written as `re:im` joined by `;`.
void write_laplacian_csv(std::ostream& out, const LaplacianEstimate& est);
/// `eig_index,i,j,ratio_re,ratio_im,spread`.
void write_ratio_csv(std::ostream& out, const std::vector<RatioEntry>& ratios);

}  // namespace specid
