#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "specid/graph.hpp"

namespace specid {

/// Per-node LTI dynamics: x' = A x + B sum_j w_kj (y_k - y_j), y = C^T x.
struct UnitDynamics {
  Eigen::MatrixXd A;
  Eigen::VectorXd B;
  Eigen::VectorXd C;

  UnitDynamics(Eigen::MatrixXd a, Eigen::VectorXd b, Eigen::VectorXd c);

  int states() const { return static_cast<int>(A.rows()); }
};

/// Input channel `channel` drives state `state` of node `node`.
struct InputSite {
  int node = 0;
  int state = 0;
  int channel = 0;
};

/// Whole-network system X' = K X + D u with K = I (x) A - L (x) B C^T.
/// State ordering is node-major: X[node * m + state].
struct NetworkSystem {
  Eigen::MatrixXd K;
  Eigen::MatrixXd D;
  UnitDynamics unit;
  WeightedDigraph graph;

  int state_dim() const { return static_cast<int>(K.rows()); }
  int input_count() const { return static_cast<int>(D.cols()); }
};

struct Sinusoid {
  double amplitude = 0.0;
  double omega = 0.0;  // rad/s
  double phase = 0.0;
};

/// Multi-channel input u(t). Either a bank of sinusoids or samples held
/// piecewise-constant over a fixed period starting at t = 0.
class InputSignal {
 public:
  static InputSignal zero(int channels);
  static InputSignal sinusoids(std::vector<Sinusoid> channels);
  static InputSignal sampled(Eigen::MatrixXd samples, double period);

  int channels() const { return channels_; }
  Eigen::VectorXd at(double t) const;

  const std::vector<Sinusoid>& sinusoid_channels() const { return sinusoids_; }

 private:
  InputSignal() = default;

  int channels_ = 0;
  std::vector<Sinusoid> sinusoids_;
  Eigen::MatrixXd samples_;  // rows = time index
  double period_ = 0.0;
};

/// Selection of measured (node, state) pairs. The factored form stores node
/// and state selections separately with Q = Q1 (x) Q2, rows ordered node-major.
class MeasurementPlan {
 public:
  struct Factored {
    std::vector<int> nodes;
    std::vector<int> states;
  };

  explicit MeasurementPlan(std::vector<std::pair<int, int>> selections);
  static MeasurementPlan factored(std::vector<int> nodes, std::vector<int> states);

  int size() const { return static_cast<int>(selections_.size()); }
  const std::vector<std::pair<int, int>>& selections() const { return selections_; }
  const std::optional<Factored>& factored_form() const { return factored_; }

  /// Dense q x (n m) selection matrix.
  Eigen::MatrixXd matrix(int nodes, int states) const;
  /// Flat state indices node * m + state, one per measurement row.
  std::vector<int> state_indices(int states) const;

 private:
  std::vector<std::pair<int, int>> selections_;
  std::optional<Factored> factored_;
};

/// Uniformly sampled measurements z(kT) = Q X(kT) and the inputs u(kT).
struct Trajectory {
  double T = 0.0;
  double t0 = 0.0;
  Eigen::MatrixXd samples;  // K_s x q
  Eigen::MatrixXd inputs;   // K_s x p

  long length() const { return static_cast<long>(samples.rows()); }
};

struct DiscreteStep {
  Eigen::MatrixXd K_tilde;
  Eigen::MatrixXd D_tilde;
};

NetworkSystem assemble(const UnitDynamics& unit, const WeightedDigraph& g,
                       const std::vector<InputSite>& sites, int channels);

/// Exact zero-order-hold discretization via exp([[K, D], [0, 0]] T).
DiscreteStep zoh_step_matrices(const Eigen::MatrixXd& K, const Eigen::MatrixXd& D, double T);
DiscreteStep zoh_step_matrices(const NetworkSystem& sys, double T);

/// Iterates X((k+1)T) = K~ X(kT) + D~ u(kT) over [0, t_end] and records
/// Q X(kT), u(kT) for k = 0 .. round(t_end / T).
Trajectory simulate(const NetworkSystem& sys, const InputSignal& signal,
                    const Eigen::VectorXd& x0, double T, double t_end,
                    const MeasurementPlan& plan);

/// Amplitudes ~ U(amp_range), frequencies ~ U(freq_range) in Hz, phases ~ U[0, 2pi).
InputSignal random_sinusoids(int channels, Interval amp_range, Interval freq_range,
                             std::uint64_t seed);

/// i.i.d. standard normal initial state.
Eigen::VectorXd random_initial_state(int dim, std::uint64_t seed);

/// Largest |Im eig(K)| * T; must stay below pi for the principal logarithm.
double nyquist_margin(const Eigen::MatrixXd& K, double T);

void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
/// Column roles come from the header: `t`, then `z*` measurements, then `u*` inputs.
Trajectory read_trajectory_csv(std::istream& in);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

}  // namespace specid
