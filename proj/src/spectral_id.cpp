#include "specid/spectral_id.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

#include "specid/errors.hpp"

namespace specid {

std::string to_string(SpuriousReason r) {
  switch (r) {
    case SpuriousReason::none:
      return "none";
    case SpuriousReason::near_zero:
      return "near_zero";
    case SpuriousReason::rank_excess:
      return "rank_excess";
    case SpuriousReason::negative_real:
      return "negative_real";
  }
  return "unknown";
}

std::vector<SystemEigen> recover_mu(const DmdcResult& result, double T,
                                    const SpuriousFilter& filter) {
  if (!(T > 0.0)) throw ParameterError("sampling period must be positive");
  if (!(filter.zero_tol >= 0.0)) throw ParameterError("zero_tol must be non-negative");
  const Eigen::Index count = result.eigenvalues.size();
  std::vector<SystemEigen> out(count);
  for (Eigen::Index k = 0; k < count; ++k) {
    SystemEigen& e = out[k];
    e.column = k;
    e.mu_tilde = result.eigenvalues(k);
    if (std::abs(e.mu_tilde) < filter.zero_tol || e.mu_tilde == 0.0) {
      e.reason = SpuriousReason::near_zero;
      e.mu = {-std::numeric_limits<double>::infinity(), 0.0};
      continue;
    }
    e.mu = std::log(e.mu_tilde) / T;
    if (e.mu_tilde.imag() == 0.0 && e.mu_tilde.real() < 0.0) e.reason = SpuriousReason::negative_real;
  }
  if (filter.rank_rule) {
    const long budget = std::max(0, result.rank_used - result.input_rank);
    std::vector<Eigen::Index> order(count);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return std::abs(out[a].mu_tilde) > std::abs(out[b].mu_tilde);
    });
    for (Eigen::Index r = budget; r < count; ++r) {
      if (!out[order[r]].spurious()) out[order[r]].reason = SpuriousReason::rank_excess;
    }
  }
  return out;
}

std::complex<double> mu_to_lambda(std::complex<double> mu, const UnitDynamics& unit) {
  using cd = std::complex<double>;
  const int m = unit.states();
  Eigen::MatrixXcd shifted = unit.A.cast<cd>();
  shifted.diagonal().array() -= mu;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted);
  const double smin = svd.singularValues()(m - 1);
  const double scale = std::max({1.0, unit.A.norm(), std::abs(mu)});
  if (smin <= 1e-13 * scale) {
    throw ExcludedEigenvalueError("mu is an eigenvalue of A; the Laplacian eigenvalue is undetermined");
  }
  Eigen::VectorXcd x = shifted.partialPivLu().solve(unit.B.cast<cd>());
  cd g = unit.C.cast<cd>().dot(x);
  if (g == 0.0 || !std::isfinite(g.real()) || !std::isfinite(g.imag())) {
    throw MappingError("unit transfer value vanishes; the Laplacian eigenvalue is at infinity");
  }
  cd lambda = 1.0 / g;
  if (!std::isfinite(lambda.real()) || !std::isfinite(lambda.imag())) {
    throw MappingError("unit transfer value vanishes; the Laplacian eigenvalue is at infinity");
  }
  return lambda;
}

bool is_minimal(const UnitDynamics& unit) {
  const int m = unit.states();
  Eigen::MatrixXd ctrb(m, m), obsv(m, m);
  Eigen::VectorXd b = unit.B, c = unit.C;
  for (int k = 0; k < m; ++k) {
    ctrb.col(k) = b;
    obsv.row(k) = c.transpose();
    b = unit.A * b;
    c = unit.A.transpose() * c;
  }
  auto full = [m](const Eigen::MatrixXd& x) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    return qr.rank() == m;
  };
  return full(ctrb) && full(obsv);
}

Eigen::VectorXcd LaplacianEstimate::lambdas() const {
  Eigen::VectorXcd v(groups.size());
  for (std::size_t k = 0; k < groups.size(); ++k) v(k) = groups[k].lambda;
  return v;
}

LaplacianEstimate recover_laplacian(const std::vector<SystemEigen>& eigens,
                                    const UnitDynamics& unit, double dedup_tol) {
  if (!(dedup_tol >= 0.0)) throw ParameterError("dedup_tol must be non-negative");
  LaplacianEstimate est;
  const int m = unit.states();
  const bool minimal = is_minimal(unit);
  for (const auto& e : eigens) {
    if (e.spurious()) continue;
    std::complex<double> lambda;
    try {
      lambda = mu_to_lambda(e.mu, unit);
    } catch (const ExcludedEigenvalueError& err) {
      if (!minimal) {
        est.failures.push_back({e.mu, e.column, err.what()});
        continue;
      }
      // A pole of the transfer function is the lambda -> 0 limit of the mapping.
      lambda = 0.0;
      est.notes.push_back("mu = " + std::to_string(e.mu.real()) + (e.mu.imag() < 0 ? "" : "+") +
                          std::to_string(e.mu.imag()) + "i is an eigenvalue of A; mapped to lambda = 0");
    } catch (const MappingError& err) {
      est.failures.push_back({e.mu, e.column, err.what()});
      continue;
    }
    LaplacianGroup* home = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (auto& g : est.groups) {
      double d = std::abs(g.lambda - lambda);
      if (g.multiplicity() < m && d <= dedup_tol * (1.0 + std::abs(lambda)) && d < best) {
        best = d;
        home = &g;
      }
    }
    if (home == nullptr) {
      est.groups.push_back({lambda, {e.mu}, {e.column}});
      continue;
    }
    const double k = home->multiplicity();
    home->lambda = (home->lambda * k + lambda) / (k + 1.0);
    home->mus.push_back(e.mu);
    home->columns.push_back(e.column);
  }

  // Pair each group with its closest conjugate partner and average.
  std::vector<bool> done(est.groups.size(), false);
  for (std::size_t a = 0; a < est.groups.size(); ++a) {
    if (done[a]) continue;
    auto& ga = est.groups[a];
    const double tol = dedup_tol * (1.0 + std::abs(ga.lambda));
    if (std::abs(ga.lambda.imag()) <= tol) {
      ga.lambda.imag(0.0);
      done[a] = true;
      continue;
    }
    std::size_t partner = a;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t b = a + 1; b < est.groups.size(); ++b) {
      if (done[b]) continue;
      double d = std::abs(est.groups[b].lambda - std::conj(ga.lambda));
      if (d < best) best = d, partner = b;
    }
    done[a] = true;
    if (partner != a && best <= tol) {
      auto& gb = est.groups[partner];
      std::complex<double> avg = 0.5 * (ga.lambda + std::conj(gb.lambda));
      ga.lambda = avg;
      gb.lambda = std::conj(avg);
      done[partner] = true;
    }
  }
  std::stable_sort(est.groups.begin(), est.groups.end(), [](const auto& x, const auto& y) {
    return x.lambda.real() != y.lambda.real() ? x.lambda.real() < y.lambda.real()
                                              : x.lambda.imag() < y.lambda.imag();
  });
  return est;
}

std::vector<RatioEntry> eigenvector_ratios(const DmdcResult& result, const MeasurementPlan& plan,
                                           const std::vector<std::pair<int, int>>& pairs,
                                           const std::vector<Eigen::Index>& columns,
                                           double denom_tol) {
  if (!plan.factored_form()) throw ParameterError("eigenvector ratios need a factored measurement plan");
  const int q1 = static_cast<int>(plan.factored_form()->nodes.size());
  const int q2 = static_cast<int>(plan.factored_form()->states.size());
  const int q = q1 * q2;
  const int depth = result.config.depth;
  if (result.eigenvectors.rows() != static_cast<Eigen::Index>(depth) * q) {
    throw ParameterError("measurement plan does not match the DMD result");
  }
  std::vector<RatioEntry> out;
  for (Eigen::Index col : columns) {
    if (col < 0 || col >= result.eigenvectors.cols()) throw ParameterError("eigenvector column out of range");
    const Eigen::VectorXcd w = result.eigenvectors.col(col);
    const double floor = denom_tol * w.norm();
    for (const auto& [i, j] : pairs) {
      if (i < 0 || j < 0 || i >= q1 || j >= q1) throw ParameterError("ratio pair index out of range");
      RatioEntry e;
      e.column = col;
      e.i = i;
      e.j = j;
      std::vector<std::complex<double>> reps;
      for (int l1 = 0; l1 < depth; ++l1) {
        for (int l2 = 0; l2 < q2; ++l2) {
          std::complex<double> num = w(l1 * q + i * q2 + l2);
          std::complex<double> den = w(l1 * q + j * q2 + l2);
          if (std::abs(den) <= floor) continue;
          reps.push_back(num / den);
        }
      }
      e.replicas = static_cast<int>(reps.size());
      if (reps.empty()) {
        e.ratio = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
        e.spread = std::numeric_limits<double>::infinity();
        out.push_back(e);
        continue;
      }
      auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t h = v.size() / 2;
        return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
      };
      std::vector<double> re, im;
      for (const auto& r : reps) re.push_back(r.real()), im.push_back(r.imag());
      e.ratio = {median(re), median(im)};
      double dev = 0.0;
      for (const auto& r : reps) dev = std::max(dev, std::abs(r - e.ratio));
      e.spread = dev / std::max(std::abs(e.ratio), std::numeric_limits<double>::min());
      e.reliable = true;
      out.push_back(e);
    }
  }
  return out;
}

namespace {

nlohmann::json complex_json(std::complex<double> z) {
  auto finite = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  return nlohmann::json::array({finite(z.real()), finite(z.imag())});
}

}  // namespace

nlohmann::json to_json(const SystemEigen& e) {
  return {{"mu", complex_json(e.mu)},
          {"mu_tilde", complex_json(e.mu_tilde)},
          {"column", e.column},
          {"spurious", e.spurious()},
          {"reason", to_string(e.reason)}};
}

nlohmann::json to_json(const LaplacianEstimate& est) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : est.groups) {
    nlohmann::json mus = nlohmann::json::array();
    for (const auto& mu : g.mus) mus.push_back(complex_json(mu));
    groups.push_back({{"lambda", complex_json(g.lambda)},
                      {"multiplicity", g.multiplicity()},
                      {"source_mu", mus},
                      {"columns", g.columns}});
  }
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : est.failures) {
    failures.push_back({{"mu", complex_json(f.mu)}, {"column", f.column}, {"reason", f.reason}});
  }
  return {{"lambdas", groups}, {"failures", failures}, {"notes", est.notes}};
}

nlohmann::json to_json(const RatioEntry& r) {
  return {{"eig_index", r.column}, {"i", r.i},
          {"j", r.j},            {"ratio", complex_json(r.ratio)},
          {"spread", std::isfinite(r.spread) ? nlohmann::json(r.spread) : nlohmann::json(nullptr)},
          {"replicas", r.replicas},
          {"reliable", r.reliable}};
}

void write_laplacian_csv(std::ostream& out, const LaplacianEstimate& est) {
  out << "re,im,multiplicity,source_mu_list\n" << std::setprecision(17);
  for (const auto& g : est.groups) {
    out << g.lambda.real() << ',' << g.lambda.imag() << ',' << g.multiplicity() << ',';
    for (std::size_t k = 0; k < g.mus.size(); ++k) {
      if (k > 0) out << ';';
      out << g.mus[k].real() << ':' << g.mus[k].imag();
    }
    out << '\n';
  }
}

void write_ratio_csv(std::ostream& out, const std::vector<RatioEntry>& ratios) {
  out << "eig_index,i,j,ratio_re,ratio_im,spread\n" << std::setprecision(17);
  for (const auto& r : ratios) {
    out << r.column << ',' << r.i << ',' << r.j << ',' << r.ratio.real() << ',' << r.ratio.imag()
        << ',' << r.spread << '\n';
  }
}

}  // namespace specid
