#include "specid/dynamics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "specid/errors.hpp"

namespace specid {

UnitDynamics::UnitDynamics(Eigen::MatrixXd a, Eigen::VectorXd b, Eigen::VectorXd c)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)) {
  if (A.rows() == 0 || A.rows() != A.cols()) throw ParameterError("A must be square and non-empty");
  if (B.size() != A.rows() || C.size() != A.rows()) {
    throw ParameterError("B and C must have the dimension of A");
  }
  if (!A.allFinite() || !B.allFinite() || !C.allFinite()) {
    throw ParameterError("unit dynamics must be finite");
  }
}

InputSignal InputSignal::zero(int channels) {
  if (channels < 0) throw ParameterError("channel count must be non-negative");
  InputSignal s;
  s.channels_ = channels;
  s.sinusoids_.assign(channels, Sinusoid{});
  return s;
}

InputSignal InputSignal::sinusoids(std::vector<Sinusoid> channels) {
  for (const auto& c : channels) {
    if (!(c.amplitude >= 0.0) || !std::isfinite(c.amplitude) || !std::isfinite(c.omega) ||
        !std::isfinite(c.phase)) {
      throw ParameterError("sinusoid amplitude must be finite and non-negative");
    }
  }
  InputSignal s;
  s.channels_ = static_cast<int>(channels.size());
  s.sinusoids_ = std::move(channels);
  return s;
}

InputSignal InputSignal::sampled(Eigen::MatrixXd samples, double period) {
  if (!(period > 0.0)) throw ParameterError("sample period must be positive");
  if (samples.rows() == 0) throw ParameterError("sampled input needs at least one sample");
  if (!samples.allFinite()) throw ParameterError("sampled input must be finite");
  InputSignal s;
  s.channels_ = static_cast<int>(samples.cols());
  s.samples_ = std::move(samples);
  s.period_ = period;
  return s;
}

Eigen::VectorXd InputSignal::at(double t) const {
  Eigen::VectorXd u(channels_);
  if (period_ > 0.0) {
    // Tolerate rounding in t = k T so that sample k is selected at its own instant.
    auto k = static_cast<Eigen::Index>(std::floor(t / period_ + 1e-9));
    k = std::clamp<Eigen::Index>(k, 0, samples_.rows() - 1);
    u = samples_.row(k).transpose();
    return u;
  }
  for (int c = 0; c < channels_; ++c) {
    const auto& s = sinusoids_[c];
    u(c) = s.amplitude == 0.0 ? 0.0 : s.amplitude * std::sin(s.omega * t + s.phase);
  }
  return u;
}

MeasurementPlan::MeasurementPlan(std::vector<std::pair<int, int>> selections)
    : selections_(std::move(selections)) {
  if (selections_.empty()) throw ParameterError("measurement plan must select at least one state");
  for (const auto& [node, state] : selections_) {
    if (node < 0 || state < 0) throw ParameterError("measurement indices must be non-negative");
  }
}

MeasurementPlan MeasurementPlan::factored(std::vector<int> nodes, std::vector<int> states) {
  std::vector<std::pair<int, int>> sel;
  for (int node : nodes) {
    for (int state : states) sel.emplace_back(node, state);
  }
  MeasurementPlan plan(std::move(sel));
  plan.factored_ = Factored{std::move(nodes), std::move(states)};
  return plan;
}

Eigen::MatrixXd MeasurementPlan::matrix(int nodes, int states) const {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(size(), static_cast<Eigen::Index>(nodes) * states);
  auto idx = state_indices(states);
  for (int r = 0; r < size(); ++r) {
    if (selections_[r].first >= nodes) throw ParameterError("measured node out of range");
    q(r, idx[r]) = 1.0;
  }
  return q;
}

std::vector<int> MeasurementPlan::state_indices(int states) const {
  std::vector<int> idx;
  idx.reserve(selections_.size());
  for (const auto& [node, state] : selections_) {
    if (state >= states) throw ParameterError("measured state out of range");
    idx.push_back(node * states + state);
  }
  return idx;
}

NetworkSystem assemble(const UnitDynamics& unit, const WeightedDigraph& g,
                       const std::vector<InputSite>& sites, int channels) {
  if (channels < 0) throw ParameterError("channel count must be non-negative");
  const int n = g.size();
  const int m = unit.states();
  Eigen::MatrixXd lap = laplacian(g).matrix;
  Eigen::MatrixXd coupling = unit.B * unit.C.transpose();
  Eigen::MatrixXd K(n * m, n * m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      auto block = K.block(i * m, j * m, m, m);
      block = -lap(i, j) * coupling;
      if (i == j) block += unit.A;
    }
  }
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n * m, channels);
  for (const auto& s : sites) {
    if (s.node < 0 || s.node >= n || s.state < 0 || s.state >= m || s.channel < 0 ||
        s.channel >= channels) {
      throw ParameterError("input site (" + std::to_string(s.node) + ", " +
                           std::to_string(s.state) + ", " + std::to_string(s.channel) +
                           ") out of range");
    }
    D(s.node * m + s.state, s.channel) = 1.0;
  }
  return NetworkSystem{std::move(K), std::move(D), unit, g};
}

DiscreteStep zoh_step_matrices(const Eigen::MatrixXd& K, const Eigen::MatrixXd& D, double T) {
  if (!(T > 0.0)) throw ParameterError("sampling period must be positive");
  if (K.rows() != K.cols() || D.rows() != K.rows()) {
    throw ParameterError("K must be square with as many rows as D");
  }
  const Eigen::Index nm = K.rows();
  const Eigen::Index p = D.cols();
  // exp([[K, D], [0, 0]] T) = [[e^{KT}, int_0^T e^{Ks} ds D], [0, I]]
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(nm + p, nm + p);
  aug.topLeftCorner(nm, nm) = K * T;
  aug.topRightCorner(nm, p) = D * T;
  Eigen::MatrixXd phi = aug.exp();
  if (!phi.allFinite()) throw NumericalError("matrix exponential is not finite");
  return DiscreteStep{phi.topLeftCorner(nm, nm), phi.topRightCorner(nm, p)};
}

DiscreteStep zoh_step_matrices(const NetworkSystem& sys, double T) {
  return zoh_step_matrices(sys.K, sys.D, T);
}

double nyquist_margin(const Eigen::MatrixXd& K, double T) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(K, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed on K");
  return es.eigenvalues().imag().cwiseAbs().maxCoeff() * T;
}

Trajectory simulate(const NetworkSystem& sys, const InputSignal& signal,
                    const Eigen::VectorXd& x0, double T, double t_end,
                    const MeasurementPlan& plan) {
  if (!(T > 0.0)) throw ParameterError("sampling period must be positive");
  if (!(t_end > 0.0)) throw ParameterError("simulation end time must be positive");
  if (x0.size() != sys.state_dim() || !x0.allFinite()) {
    throw ParameterError("initial state must be finite with dimension n m");
  }
  if (signal.channels() != sys.input_count()) {
    throw ParameterError("input signal channel count does not match the system");
  }
  if (nyquist_margin(sys.K, T) >= std::numbers::pi) {
    throw ParameterError("sampling period too coarse: T max|Im eig(K)| must stay below pi");
  }
  const long steps = std::lround(t_end / T);
  if (steps < 1) throw ParameterError("simulation span shorter than one sampling period");

  const int m = sys.unit.states();
  const auto idx = plan.state_indices(m);
  for (int i : idx) {
    if (i >= sys.state_dim()) throw ParameterError("measured node out of range");
  }
  const DiscreteStep step = zoh_step_matrices(sys, T);

  Trajectory traj;
  traj.T = T;
  traj.t0 = 0.0;
  traj.samples.resize(steps + 1, plan.size());
  traj.inputs.resize(steps + 1, sys.input_count());
  Eigen::VectorXd x = x0;
  Eigen::VectorXd next(x.size());
  for (long k = 0; k <= steps; ++k) {
    Eigen::VectorXd u = signal.at(static_cast<double>(k) * T);
    for (int r = 0; r < plan.size(); ++r) traj.samples(k, r) = x(idx[r]);
    traj.inputs.row(k) = u.transpose();
    if (k == steps) break;
    next.noalias() = step.K_tilde * x;
    next.noalias() += step.D_tilde * u;
    x.swap(next);
    double norm = x.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(norm) || norm > 1e150) {
      throw DivergenceError("state diverged at step " + std::to_string(k + 1), k + 1);
    }
  }
  return traj;
}

InputSignal random_sinusoids(int channels, Interval amp_range, Interval freq_range,
                             std::uint64_t seed) {
  if (channels < 0) throw ParameterError("channel count must be non-negative");
  if (!(amp_range.lo <= amp_range.hi) || amp_range.lo < 0.0) {
    throw ParameterError("amplitude range must satisfy 0 <= low <= high");
  }
  if (!(freq_range.lo <= freq_range.hi)) throw ParameterError("frequency range is empty");
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](Interval r) {
    return r.lo + (r.hi - r.lo) * std::generate_canonical<double, 53>(rng);
  };
  std::vector<Sinusoid> out;
  for (int c = 0; c < channels; ++c) {
    Sinusoid s;
    s.amplitude = uniform(amp_range);
    s.omega = 2.0 * std::numbers::pi * uniform(freq_range);
    s.phase = uniform({0.0, 2.0 * std::numbers::pi});
    out.push_back(s);
  }
  return InputSignal::sinusoids(std::move(out));
}

Eigen::VectorXd random_initial_state(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x(i) = normal(rng);
  return x;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t";
  for (Eigen::Index c = 0; c < traj.samples.cols(); ++c) out << ",z" << c + 1;
  for (Eigen::Index c = 0; c < traj.inputs.cols(); ++c) out << ",u" << c + 1;
  out << '\n' << std::setprecision(17);
  for (Eigen::Index k = 0; k < traj.samples.rows(); ++k) {
    out << traj.t0 + static_cast<double>(k) * traj.T;
    for (Eigen::Index c = 0; c < traj.samples.cols(); ++c) out << ',' << traj.samples(k, c);
    for (Eigen::Index c = 0; c < traj.inputs.cols(); ++c) out << ',' << traj.inputs(k, c);
    out << '\n';
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  write_trajectory_csv(out, traj);
}

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("trajectory CSV is empty", 1);
  std::vector<std::string> header;
  {
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      auto b = cell.find_first_not_of(" \t\r");
      auto e = cell.find_last_not_of(" \t\r");
      header.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
  }
  if (header.empty() || header[0] != "t") throw ParseError("first column must be `t`", 1);
  int q = 0, p = 0;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (!header[c].empty() && header[c][0] == 'z' && p == 0) {
      ++q;
    } else if (!header[c].empty() && header[c][0] == 'u') {
      ++p;
    } else {
      throw ParseError("unexpected column `" + header[c] + "`", 1);
    }
  }
  if (q == 0) throw ParseError("trajectory has no measurement columns", 1);

  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw ParseError("malformed number `" + cell + "`", line_no);
      }
    }
    if (row.size() != header.size()) throw ParseError("wrong column count", line_no);
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw ParseError("trajectory needs at least two samples");

  Trajectory traj;
  traj.t0 = rows[0][0];
  traj.T = rows[1][0] - rows[0][0];
  if (!(traj.T > 0.0)) throw ParseError("time column must increase", 3);
  const auto ks = static_cast<Eigen::Index>(rows.size());
  traj.samples.resize(ks, q);
  traj.inputs.resize(ks, p);
  for (Eigen::Index k = 0; k < ks; ++k) {
    for (int c = 0; c < q; ++c) traj.samples(k, c) = rows[k][1 + c];
    for (int c = 0; c < p; ++c) traj.inputs(k, c) = rows[k][1 + q + c];
  }
  return traj;
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trajectory " + path.string());
  return read_trajectory_csv(in);
}

}  // namespace specid
