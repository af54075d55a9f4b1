#include <doctest.h>

#include <cmath>
#include <complex>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "specid/dynamics.hpp"
#include "specid/errors.hpp"

using namespace specid;

namespace {

UnitDynamics example_unit() {
  Eigen::MatrixXd a(2, 2);
  a << -1, -2, 1, -1;
  Eigen::VectorXd b(2), c(2);
  b << 1, 2;
  c << 1, 1;
  return UnitDynamics(a, b, c);
}

WeightedDigraph path2() {
  Eigen::MatrixXd w(2, 2);
  w << 0, 1, 1, 0;
  return WeightedDigraph(w, true);
}

// Classical RK4 on x' = K x + D u with u frozen over each sampling period.
Eigen::MatrixXd rk4_reference(const NetworkSystem& sys, const InputSignal& u, Eigen::VectorXd x,
                              double T, long steps, int substeps) {
  Eigen::MatrixXd out(steps + 1, x.size());
  const double h = T / substeps;
  out.row(0) = x.transpose();
  for (long k = 0; k < steps; ++k) {
    Eigen::VectorXd du = sys.D * u.at(k * T);
    auto f = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd { return sys.K * y + du; };
    for (int s = 0; s < substeps; ++s) {
      Eigen::VectorXd k1 = f(x);
      Eigen::VectorXd k2 = f(x + 0.5 * h * k1);
      Eigen::VectorXd k3 = f(x + 0.5 * h * k2);
      Eigen::VectorXd k4 = f(x + h * k3);
      x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    out.row(k + 1) = x.transpose();
  }
  return out;
}

MeasurementPlan full_plan(int n, int m) {
  std::vector<int> nodes(n), states(m);
  for (int i = 0; i < n; ++i) nodes[i] = i;
  for (int i = 0; i < m; ++i) states[i] = i;
  return MeasurementPlan::factored(nodes, states);
}

}  // namespace

TEST_CASE("assemble") {
  auto unit = example_unit();
  auto sys = assemble(unit, WeightedDigraph::empty(3), {}, 0);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(6, 6);
  for (int i = 0; i < 3; ++i) expected.block(2 * i, 2 * i, 2, 2) = unit.A;
  CHECK(sys.K == expected);

  auto p2 = assemble(unit, path2(), {}, 0);
  Eigen::MatrixXd bc = unit.B * unit.C.transpose();
  CHECK(p2.K.block(0, 2, 2, 2) == bc);
  CHECK(p2.K.block(0, 0, 2, 2) == unit.A - bc);

  auto g = generate_erdos_renyi(15, 0.3, {0, 5}, true, 1);
  auto d = assemble(unit, g, {{2, 1, 0}, {3, 1, 1}}, 2);
  Eigen::MatrixXd d3(2, 2), d4(2, 2);
  d3 << 0, 0, 1, 0;
  d4 << 0, 0, 0, 1;
  CHECK(d.D.block(4, 0, 2, 2) == d3);
  CHECK(d.D.block(6, 0, 2, 2) == d4);
  CHECK(d.D.rowwise().sum().sum() == 2.0);

  CHECK_THROWS_AS(assemble(unit, g, {{15, 0, 0}}, 1), ParameterError);
  CHECK_THROWS_AS(assemble(unit, g, {{0, 2, 0}}, 1), ParameterError);
}

TEST_CASE("assembled coupling sign matches a direct integration") {
  auto sys = assemble(example_unit(), path2(), {}, 0);
  Eigen::VectorXd x0(4);
  x0 << 1, 0, -0.5, 2;
  auto traj = simulate(sys, InputSignal::zero(0), x0, 0.05, 0.05, full_plan(2, 2));
  auto unit = example_unit();
  // x_k' = A x_k + B sum_j w_kj (y_k - y_j) integrated node by node.
  Eigen::VectorXd x = x0;
  const int sub = 2000;
  const double h = 0.05 / sub;
  auto rhs = [&](const Eigen::VectorXd& s) {
    Eigen::VectorXd r(4);
    double y0 = unit.C.dot(s.head(2)), y1 = unit.C.dot(s.tail(2));
    r.head(2) = unit.A * s.head(2) - unit.B * (y0 - y1);
    r.tail(2) = unit.A * s.tail(2) - unit.B * (y1 - y0);
    return r;
  };
  for (int i = 0; i < sub; ++i) {
    Eigen::VectorXd k1 = rhs(x), k2 = rhs(x + 0.5 * h * k1), k3 = rhs(x + 0.5 * h * k2),
                    k4 = rhs(x + h * k3);
    x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  CHECK((traj.samples.row(1).transpose() - x).norm() < 1e-10);
}

TEST_CASE("zoh step matrices") {
  Eigen::MatrixXd k0 = Eigen::MatrixXd::Zero(1, 1), d1 = Eigen::MatrixXd::Ones(1, 1);
  auto s0 = zoh_step_matrices(k0, d1, 0.5);
  CHECK(s0.K_tilde(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s0.D_tilde(0, 0) == doctest::Approx(0.5).epsilon(1e-15));

  Eigen::MatrixXd km = -Eigen::MatrixXd::Ones(1, 1);
  auto s1 = zoh_step_matrices(km, d1, 1.0);
  CHECK(std::abs(s1.K_tilde(0, 0) - std::exp(-1.0)) < 1e-14);
  CHECK(std::abs(s1.D_tilde(0, 0) - (1 - std::exp(-1.0))) < 1e-14);

  std::srand(3);
  Eigen::MatrixXd r = Eigen::MatrixXd::Random(6, 6);
  Eigen::MatrixXd k = r - 4.0 * Eigen::MatrixXd::Identity(6, 6);
  Eigen::MatrixXd d = Eigen::MatrixXd::Random(6, 2);
  auto s = zoh_step_matrices(k, d, 0.3);
  Eigen::MatrixXd ekt = (k * 0.3).exp();
  Eigen::MatrixXd closed = k.inverse() * (ekt - Eigen::MatrixXd::Identity(6, 6)) * d;
  CHECK((s.D_tilde - closed).norm() < 1e-10);
  CHECK((s.K_tilde - ekt).norm() < 1e-12);

  CHECK_THROWS_AS(zoh_step_matrices(k, d, 0.0), ParameterError);
}

TEST_CASE("discrete spectrum is exp(T eig K)") {
  auto g = generate_erdos_renyi(5, 0.5, {0, 1}, true, 4);
  auto sys = assemble(example_unit(), g, {}, 0);
  const double T = 0.05;
  auto step = zoh_step_matrices(sys, T);
  Eigen::VectorXcd ek = Eigen::EigenSolver<Eigen::MatrixXd>(sys.K).eigenvalues();
  Eigen::VectorXcd ed = Eigen::EigenSolver<Eigen::MatrixXd>(step.K_tilde).eigenvalues();
  std::vector<bool> used(ed.size(), false);
  for (Eigen::Index i = 0; i < ek.size(); ++i) {
    std::complex<double> target = std::exp(ek(i) * T);
    double best = 1e300;
    Eigen::Index arg = -1;
    for (Eigen::Index j = 0; j < ed.size(); ++j) {
      if (used[j]) continue;
      if (std::abs(ed(j) - target) < best) best = std::abs(ed(j) - target), arg = j;
    }
    used[arg] = true;
    CHECK(best < 1e-8);
  }
}

TEST_CASE("simulate") {
  auto unit = example_unit();
  auto g = generate_erdos_renyi(4, 0.5, {0, 2}, true, 5);
  auto sys = assemble(unit, g, {{1, 1, 0}, {2, 0, 1}}, 2);
  auto plan = full_plan(4, 2);

  SUBCASE("zero input and state") {
    auto t = simulate(sys, InputSignal::zero(2), Eigen::VectorXd::Zero(8), 0.01, 0.5, plan);
    CHECK(t.samples.rows() == 51);
    CHECK(t.samples.isZero(0.0));
  }

  SUBCASE("decoupled unit matches the matrix exponential") {
    auto single = assemble(unit, WeightedDigraph::empty(1), {}, 0);
    Eigen::VectorXd e1 = Eigen::VectorXd::Unit(2, 0);
    auto t = simulate(single, InputSignal::zero(0), e1, 0.01, 2.0, full_plan(1, 2));
    for (long k = 0; k < t.length(); ++k) {
      Eigen::VectorXd expected = (unit.A * (0.01 * k)).exp() * e1;
      CHECK((t.samples.row(k).transpose() - expected).norm() < 1e-10);
    }
  }

  SUBCASE("piecewise-constant input agrees with fine integration") {
    auto sig = random_sinusoids(2, {0.5, 1}, {0, 1}, 3);
    auto x0 = random_initial_state(8, 4);
    const double T = 0.02;
    auto t = simulate(sys, sig, x0, T, 1.0, plan);
    auto ref = rk4_reference(sys, sig, x0, T, 50, 40);
    double scale = ref.cwiseAbs().maxCoeff();
    CHECK((t.samples - ref).cwiseAbs().maxCoeff() <= 1e-8 * scale);
  }

  SUBCASE("superposition") {
    auto sig = random_sinusoids(2, {0.5, 1}, {0, 1}, 7);
    auto x0 = random_initial_state(8, 8);
    auto both = simulate(sys, sig, x0, 0.01, 1.0, plan);
    auto free = simulate(sys, InputSignal::zero(2), x0, 0.01, 1.0, plan);
    auto forced = simulate(sys, sig, Eigen::VectorXd::Zero(8), 0.01, 1.0, plan);
    CHECK((both.samples - free.samples - forced.samples).cwiseAbs().maxCoeff() < 1e-10);
  }

  SUBCASE("measurement rows are selections of the full state") {
    auto sig = random_sinusoids(2, {0.5, 1}, {0, 1}, 9);
    auto x0 = random_initial_state(8, 10);
    auto full = simulate(sys, sig, x0, 0.01, 0.3, plan);
    MeasurementPlan sparse({{3, 1}, {0, 0}});
    auto part = simulate(sys, sig, x0, 0.01, 0.3, sparse);
    CHECK(part.samples.col(0) == full.samples.col(7));
    CHECK(part.samples.col(1) == full.samples.col(0));
    CHECK(part.inputs == full.inputs);
  }

  SUBCASE("zoh discretization error shrinks with the period") {
    // The sinusoid is only held over each period, so the trajectory converges
    // to the continuous-input solution at first order.
    auto sig = random_sinusoids(2, {1, 1}, {0.5, 0.5}, 11);
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(8);
    auto fine = simulate(sys, sig, x0, 1e-5, 1.0, plan);
    auto coarse = simulate(sys, sig, x0, 0.01, 1.0, plan);
    auto finer = simulate(sys, sig, x0, 0.001, 1.0, plan);
    double e1 = 0, e2 = 0;
    for (long k = 0; k <= 100; ++k) {
      e1 = std::max(e1, (coarse.samples.row(k) - fine.samples.row(k * 1000)).cwiseAbs().maxCoeff());
      e2 = std::max(e2, (finer.samples.row(k * 10) - fine.samples.row(k * 1000)).cwiseAbs().maxCoeff());
    }
    double ratio = e1 / e2;
    CHECK(ratio > 5.0);
    CHECK(ratio < 20.0);
  }

  SUBCASE("divergence") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Constant(1, 1, 50.0);
    UnitDynamics bad(a, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1));
    auto s = assemble(bad, WeightedDigraph::empty(1), {}, 0);
    try {
      simulate(s, InputSignal::zero(0), Eigen::VectorXd::Ones(1), 0.1, 200.0, full_plan(1, 1));
      FAIL("expected divergence");
    } catch (const DivergenceError& e) {
      CHECK(e.step() > 0);
    }
  }

  SUBCASE("aliasing guard") {
    CHECK_THROWS_AS(simulate(sys, InputSignal::zero(2), Eigen::VectorXd::Zero(8), 10.0, 100.0, plan),
                    ParameterError);
  }
}

TEST_CASE("random sinusoids") {
  auto z = random_sinusoids(3, {0, 0}, {0, 1}, 1);
  CHECK(z.at(0.7).isZero(0.0));
  auto a = random_sinusoids(2, {0, 1}, {0, 1}, 5);
  auto b = random_sinusoids(2, {0, 1}, {0, 1}, 5);
  CHECK(a.at(1.3) == b.at(1.3));
  auto c = random_sinusoids(5, {0, 1}, {0, 1}, 6);
  for (const auto& s : c.sinusoid_channels()) {
    CHECK(s.omega >= 0.0);
    CHECK(s.omega <= 2 * std::numbers::pi);
  }
  CHECK_THROWS_AS(random_sinusoids(2, {1, 0}, {0, 1}, 0), ParameterError);
}

TEST_CASE("trajectory csv round trip") {
  auto sys = assemble(example_unit(), path2(), {{0, 1, 0}}, 1);
  auto t = simulate(sys, random_sinusoids(1, {0, 1}, {0, 1}, 2), random_initial_state(4, 3), 0.01,
                    0.2, MeasurementPlan({{1, 0}, {0, 1}}));
  std::stringstream ss;
  write_trajectory_csv(ss, t);
  auto back = read_trajectory_csv(ss);
  CHECK(back.samples == t.samples);
  CHECK(back.inputs == t.inputs);
  CHECK(back.T == t.T);

  std::istringstream bad("t,z1\n0,1\n0.1,oops\n");
  try {
    read_trajectory_csv(bad);
    FAIL("expected parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}
