#include "specid/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "specid/errors.hpp"

namespace specid {

namespace {

using nlohmann::json;

json cjson(std::complex<double> z) {
  auto f = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  return json::array({f(z.real()), f(z.imag())});
}

std::complex<double> from_cjson(const json& j) {
  auto f = [](const json& x) { return x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>(); };
  return {f(j.at(0)), f(j.at(1))};
}

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << text;
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string fmt(double x, int digits = 2) {
  if (!std::isfinite(x)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string fmt(std::complex<double> z) {
  if (!std::isfinite(z.real())) return "n/a";
  if (std::abs(z.imag()) < 5e-3) return fmt(z.real());
  return fmt(z.real()) + (z.imag() < 0 ? "-" : "+") + fmt(std::abs(z.imag())) + "i";
}

// Representative of a conjugate pair: the member with Im >= 0.
bool upper(std::complex<double> z, double scale) { return z.imag() >= -1e-9 * std::max(1.0, scale); }

const LaplacianGroup* group_at(const LaplacianEstimate& est, double re) {
  const LaplacianGroup* pick = nullptr;
  for (const auto& g : est.groups) {
    if (g.lambda.real() != re) continue;
    if (pick == nullptr || (g.lambda.imag() >= 0.0 && pick->lambda.imag() < 0.0)) pick = &g;
  }
  return pick;
}

const RatioEntry* find_ratio(const std::vector<RatioEntry>& table, Eigen::Index column, int i, int j) {
  for (const auto& r : table) {
    if (r.column == column && r.i == i && r.j == j) return &r;
  }
  return nullptr;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
    }
  }
  return true;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (const auto* se = dynamic_cast<const StageError*>(&e)) return se->exit_code();
  if (dynamic_cast<const ParameterError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const json::exception*>(&e) || dynamic_cast<const std::filesystem::filesystem_error*>(&e)) {
    return 2;
  }
  return 3;
}

WeightedDigraph build_graph(const GraphSpec& spec) {
  const auto& g = spec;
  if (g.generator == "erdos_renyi") return generate_erdos_renyi(g.n, g.p, g.weights, g.directed, g.seed);
  if (g.generator == "planted_partition") {
    return generate_planted_partition(g.clusters, g.cluster_size, g.p_in, g.p_out, g.weights, g.seed);
  }
  if (g.generator == "degree_targeted") return generate_degree_targeted(g.n, g.mean_edges, g.sd_edges, g.weights, g.seed);
  if (g.generator == "hub") return generate_hub_graph(g.n, g.background_mean_degree, g.hub_degree, g.seed);
  if (g.generator == "empty") return WeightedDigraph::empty(g.n, true);
  if (g.generator == "edge_list") return load_edge_list(g.path, !g.directed, g.n);
  if (g.generator == "file") {
    std::ifstream in(g.path);
    if (!in) throw ParseError("cannot open graph " + g.path.string());
    return graph_from_json(json::parse(in));
  }
  throw ParameterError("unknown graph generator `" + g.generator + "`");
}

NetworkSystem build_system(const Scenario& s, const WeightedDigraph& g) {
  const int n = g.size();
  const auto sites = input_sites(s.inputs, n);
  const auto plan = s.measurement.plan();
  for (const auto& [node, state] : plan.selections()) {
    if (node >= n) throw ParameterError("measured node " + std::to_string(node) + " not in the graph");
  }
  return assemble(s.unit(), g, sites, s.inputs.channels);
}

Trajectory simulate_scenario(const Scenario& s, const NetworkSystem& sys) {
  InputSignal signal = s.inputs.channels > 0
                           ? random_sinusoids(s.inputs.channels, s.inputs.amplitude, s.inputs.frequency_hz, s.inputs.seed)
                           : InputSignal::zero(0);
  Eigen::VectorXd x0 = s.x0_seed ? random_initial_state(sys.state_dim(), *s.x0_seed)
                                  : Eigen::VectorXd::Zero(sys.state_dim());
  return simulate(sys, signal, x0, s.T, s.t_end, s.measurement.plan());
}

Identification identify(const Trajectory& traj, const Scenario& s, int n) {
  const MeasurementPlan plan = s.measurement.plan();
  if (traj.samples.cols() != plan.size()) {
    throw ParameterError("trajectory has " + std::to_string(traj.samples.cols()) + " measurement columns, scenario expects " +
                         std::to_string(plan.size()));
  }
  if (traj.inputs.cols() != s.inputs.channels) {
    throw ParameterError("trajectory has " + std::to_string(traj.inputs.cols()) + " input columns, scenario expects " +
                         std::to_string(s.inputs.channels));
  }
  const EmbeddingConfig cfg = EmbeddingConfig::from_seconds(s.depth, s.delta, traj.T, s.svd_tol);
  Identification id;
  id.n = n;
  if (s.measurement.factored) id.measured_nodes = s.measurement.nodes;
  id.dmdc = fit(build_data_matrices(traj, cfg), cfg);
  id.eigens = recover_mu(id.dmdc, traj.T, s.filter);
  id.estimate = recover_laplacian(id.eigens, s.unit(), s.dedup_tol);

  std::vector<std::pair<int, int>> pairs = s.analysis.ratio_pairs;
  if (s.analysis.clusters > 0) {
    for (int j = 0; j < static_cast<int>(s.measurement.nodes.size()); ++j) {
      pairs.emplace_back(j, s.analysis.reference_node);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  if (plan.factored_form() && !pairs.empty()) {
    std::vector<Eigen::Index> cols;
    for (const auto& g : id.estimate.groups) cols.push_back(g.columns.front());
    id.ratios = eigenvector_ratios(id.dmdc, plan, pairs, cols);
  }
  return id;
}

json to_json(const Identification& id) {
  json eig = json::array();
  for (const auto& e : id.eigens) eig.push_back(to_json(e));
  json ratios = json::array();
  for (const auto& r : id.ratios) ratios.push_back(to_json(r));
  return {{"n", id.n},
          {"measured_nodes", id.measured_nodes},
          {"dmdc", to_json(id.dmdc)},
          {"system_eigenvalues", eig},
          {"laplacian", to_json(id.estimate)},
          {"ratios", ratios}};
}

Identification identification_from_json(const json& j) {
  Identification id;
  id.n = j.value("n", 0);
  if (j.contains("measured_nodes")) id.measured_nodes = j.at("measured_nodes").get<std::vector<int>>();
  if (!j.contains("laplacian") && j.contains("spectrum")) {
    for (const auto& z : j.at("spectrum")) {
      LaplacianGroup grp;
      grp.lambda = z.is_number() ? std::complex<double>(z.get<double>(), 0.0) : from_cjson(z);
      id.estimate.groups.push_back(std::move(grp));
    }
    if (id.n == 0) id.n = static_cast<int>(id.estimate.groups.size());
    return id;
  }
  const json& lap = j.at("laplacian");
  for (const auto& g : lap.at("lambdas")) {
    LaplacianGroup grp;
    grp.lambda = from_cjson(g.at("lambda"));
    for (const auto& mu : g.at("source_mu")) grp.mus.push_back(from_cjson(mu));
    grp.columns = g.at("columns").get<std::vector<Eigen::Index>>();
    if (grp.mus.empty() || grp.columns.size() != grp.mus.size()) {
      throw ParseError("laplacian group without source eigenvalues");
    }
    id.estimate.groups.push_back(std::move(grp));
  }
  if (lap.contains("notes")) id.estimate.notes = lap.at("notes").get<std::vector<std::string>>();
  if (j.contains("ratios")) {
    for (const auto& r : j.at("ratios")) {
      RatioEntry e;
      e.column = r.at("eig_index").get<Eigen::Index>();
      e.i = r.at("i").get<int>();
      e.j = r.at("j").get<int>();
      e.ratio = from_cjson(r.at("ratio"));
      e.spread = r.at("spread").is_null() ? std::numeric_limits<double>::infinity() : r.at("spread").get<double>();
      e.replicas = r.value("replicas", 0);
      e.reliable = r.value("reliable", false);
      id.ratios.push_back(e);
    }
  }
  return id;
}

AnalysisResult analyze(const Identification& id, const AnalysisSpec& spec) {
  const Eigen::VectorXcd lambdas = id.estimate.lambdas();
  if (lambdas.size() == 0) throw NumericalError("no Laplacian eigenvalues were recovered");
  AnalysisResult a;
  a.summary = summarize(lambdas, id.n, spec.mode, spec.zero_sep);
  if (spec.mean_edge_weight) a.mean_edges = mean_edges_per_node(a.summary.M1, *spec.mean_edge_weight);

  if (lambdas.size() >= 2) {
    const LaplacianGroup* f = group_at(id.estimate, a.summary.lambda2);
    if (f != nullptr && !f->columns.empty()) {
      for (const auto& [i, j] : spec.ratio_pairs) {
        if (const RatioEntry* r = find_ratio(id.ratios, f->columns.front(), i, j)) a.fiedler_ratios.push_back(*r);
      }
    }
  }

  if (spec.clusters > 0) {
    const int q1 = static_cast<int>(id.measured_nodes.size());
    const double scale = a.summary.lambda_n;
    std::vector<const LaplacianGroup*> leading;
    for (const auto& g : id.estimate.groups) {
      if (g.lambda.real() > spec.zero_sep * scale && upper(g.lambda, scale) && !g.columns.empty()) {
        leading.push_back(&g);
      }
    }
    std::stable_sort(leading.begin(), leading.end(),
                     [](const auto* x, const auto* y) { return x->lambda.real() < y->lambda.real(); });
    if (leading.size() > 2) leading.resize(2);
    if (leading.empty() || q1 < spec.clusters) {
      a.warnings.push_back("not enough recovered eigenvectors for clustering");
    } else {
      a.cluster_points.resize(q1, static_cast<Eigen::Index>(leading.size()));
      for (std::size_t c = 0; c < leading.size(); ++c) {
        for (int j = 0; j < q1; ++j) {
          const RatioEntry* r = find_ratio(id.ratios, leading[c]->columns.front(), j, spec.reference_node);
          double v = r && r->reliable ? r->ratio.real() : std::numeric_limits<double>::quiet_NaN();
          if (!std::isfinite(v)) {
            a.warnings.push_back("unreliable ratio for measured node " + std::to_string(j) + "; set to 0");
            v = 0.0;
          }
          a.cluster_points(j, static_cast<Eigen::Index>(c)) = v;
        }
      }
      a.clustering = cluster_by_ratios(a.cluster_points, spec.clusters, spec.cluster_seed);
    }
  }
  return a;
}

json to_json(const AnalysisResult& a) {
  json j = to_json(a.summary);
  if (a.mean_edges) j["mean_edges_per_node"] = num(*a.mean_edges);
  json fr = json::array();
  for (const auto& r : a.fiedler_ratios) fr.push_back(to_json(r));
  j["fiedler_ratios"] = fr;
  if (a.clustering) {
    j["clustering"] = {{"labels", a.clustering->labels}, {"scatter", a.clustering->scatter}};
  }
  for (const auto& w : a.warnings) j["warnings"].push_back(w);
  return j;
}

RunReport make_report(const Scenario& s, const WeightedDigraph& g, const Identification& id,
                      const AnalysisResult& a) {
  const int n = g.size();
  const auto spec = exact_spectrum(laplacian(g));
  const Eigen::VectorXcd& ex = spec.eigenvalues;
  const auto ds = degree_stats(g);
  const Moments em = moments_from_spectrum(ex);
  const double rho = ex.cwiseAbs().maxCoeff();

  // Exact lambda_2: second smallest real part, upper member of a conjugate pair.
  Eigen::Index k2 = -1;
  double lambda_n = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < ex.size(); ++k) lambda_n = std::max(lambda_n, ex(k).real());
  if (n >= 2) {
    k2 = 1;
    if (ex(k2).imag() < 0.0 && k2 + 1 < ex.size() && std::abs(ex(k2 + 1) - std::conj(ex(k2))) < 1e-9 * std::max(1.0, rho)) {
      k2 += 1;
    }
  }

  const Eigen::VectorXcd est = id.estimate.lambdas();
  int recovered = 0;
  for (Eigen::Index k = 0; k < ex.size(); ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index e = 0; e < est.size(); ++e) best = std::min(best, std::abs(est(e) - ex(k)));
    if (best <= 0.05 * std::max({std::abs(ex(k)), 1e-3 * rho, 1e-9})) ++recovered;
  }

  json exact = {{"M1", em.M1},
                {"M2", em.M2},
                {"D1", ds.mean_degree},
                {"D2", ds.mean_sq_degree},
                {"d_min", ds.d_min},
                {"d_max", ds.d_max},
                {"lambda2", k2 >= 0 ? num(ex(k2).real()) : json(nullptr)},
                {"lambda_n", lambda_n},
                {"mean_edges_per_node", static_cast<double>(g.edge_count()) / n},
                {"mean_edge_weight", g.mean_edge_weight()}};
  json estimated = to_json(a);
  json lam = json::array();
  for (Eigen::Index k = 0; k < ex.size(); ++k) lam.push_back(cjson(ex(k)));
  exact["eigenvalues"] = lam;

  json checks = {{"recovered_eigenvalues", recovered},
                 {"exact_eigenvalue_count", ex.size()},
                 {"estimated_eigenvalue_count", est.size()},
                 {"M1_rel_error", num(std::abs(a.summary.M1 - em.M1) / std::max(std::abs(em.M1), 1e-300))},
                 {"M2_rel_error", num(std::abs(a.summary.M2 - em.M2) / std::max(std::abs(em.M2), 1e-300))},
                 {"M1_abs_error", num(std::abs(a.summary.M1 - em.M1))},
                 {"M2_abs_error", num(std::abs(a.summary.M2 - em.M2))},
                 {"lambda_n_rel_error", num(std::abs(a.summary.lambda_n - lambda_n) / std::max(std::abs(lambda_n), 1e-300))},
                 {"dmax_bound_rel_error", num(std::abs(a.summary.dmax_bound - ds.d_max) / std::max(ds.d_max, 1e-300))}};
  if (k2 >= 0) {
    double l2 = ex(k2).real();
    checks["lambda2_factor"] = num(std::max(a.summary.lambda2 / l2, l2 / a.summary.lambda2));
  }
  if (a.mean_edges) {
    double truth = static_cast<double>(g.edge_count()) / n;
    checks["mean_edges_rel_error"] = num(std::abs(*a.mean_edges - truth) / truth);
  }

  json ratio_rows = json::array();
  std::vector<std::string> ratio_text;
  if (k2 >= 0) {
    const Eigen::VectorXcd v = spec.eigenvectors.col(k2);
    for (const auto& r : a.fiedler_ratios) {
      const int ni = id.measured_nodes.at(r.i), nj = id.measured_nodes.at(r.j);
      std::complex<double> truth = v(ni) / v(nj);
      double rel = std::abs(r.ratio - truth) / std::abs(truth);
      ratio_rows.push_back({{"i", r.i}, {"j", r.j}, {"node_i", ni}, {"node_j", nj},
                            {"exact", cjson(truth)}, {"estimated", cjson(r.ratio)}, {"rel_error", num(rel)}});
      ratio_text.push_back("v2(" + std::to_string(ni + 1) + ")/v2(" + std::to_string(nj + 1) + ")  exact " + fmt(truth) +
                           "  estimated " + fmt(r.ratio) + "  (" + fmt(100 * rel, 1) + "%)");
    }
  }
  checks["fiedler_ratios"] = ratio_rows;

  std::optional<bool> clusters_ok;
  if (a.clustering && !g.labels().empty()) {
    std::vector<int> truth;
    for (int node : id.measured_nodes) truth.push_back(g.labels().at(node));
    clusters_ok = same_partition(a.clustering->labels, truth);
    checks["clusters_match"] = *clusters_ok;
    checks["cluster_truth"] = truth;
  }

  std::ostringstream t;
  t << "scenario " << s.name << ": n=" << n << ", N=" << s.depth << ", Delta=" << s.delta << ", T=" << s.T
    << ", span [0," << s.t_end << "], mode " << to_string(a.summary.mode) << "\n";
  t << "recovered " << recovered << " of " << ex.size() << " Laplacian eigenvalues within 5%; " << est.size()
    << " estimated values\n\n";
  t << "            M1        M2        D2\n";
  t << "Exact       " << fmt(em.M1) << std::string(std::max<int>(1, 10 - static_cast<int>(fmt(em.M1).size())), ' ')
    << fmt(em.M2) << std::string(std::max<int>(1, 10 - static_cast<int>(fmt(em.M2).size())), ' ') << fmt(ds.mean_sq_degree)
    << "\n";
  t << "Estimated   " << fmt(a.summary.M1)
    << std::string(std::max<int>(1, 10 - static_cast<int>(fmt(a.summary.M1).size())), ' ') << fmt(a.summary.M2)
    << std::string(std::max<int>(1, 10 - static_cast<int>(fmt(a.summary.M2).size())), ' ') << "[" << fmt(a.summary.D2_bounds.lo)
    << ", " << fmt(a.summary.D2_bounds.hi) << "]\n\n";
  t << "            lambda2   lambda_n  d_min     d_max\n";
  auto col = [](const std::string& x) { return x + std::string(std::max<int>(1, 10 - static_cast<int>(x.size())), ' '); };
  t << "Exact       " << col(k2 >= 0 ? fmt(ex(k2).real()) : "n/a") << col(fmt(lambda_n)) << col(fmt(ds.d_min))
    << fmt(ds.d_max) << "\n";
  t << "Estimated   " << col(fmt(a.summary.lambda2)) << col(fmt(a.summary.lambda_n)) << col(">=" + fmt(a.summary.dmin_bound))
    << "<=" << fmt(a.summary.dmax_bound) << "\n";
  if (!g.undirected()) t << "(degree bounds assume an undirected network)\n";
  if (a.mean_edges) {
    t << "\navg. number of edges  exact " << fmt(static_cast<double>(g.edge_count()) / n) << "  estimated "
      << fmt(*a.mean_edges) << "\n";
  }
  if (!ratio_text.empty()) {
    t << "\n";
    for (const auto& line : ratio_text) t << line << "\n";
  }
  if (clusters_ok) t << "\nclusters of measured nodes " << (*clusters_ok ? "match" : "do not match") << " the ground truth\n";
  if (n == 1) t << "\ntrivial graph (single node)\n";
  for (const auto& w : a.summary.warnings) t << "warning: " << w << "\n";
  for (const auto& w : a.warnings) t << "warning: " << w << "\n";
  for (const auto& w : id.dmdc.warnings) t << "warning: " << w << "\n";

  RunReport r;
  r.data = {{"scenario", s.name},
            {"n", n},
            {"trivial_graph", n == 1},
            {"exact", exact},
            {"estimated", estimated},
            {"checks", checks},
            {"rank_used", id.dmdc.rank_used},
            {"input_rank", id.dmdc.input_rank},
            {"residual", id.dmdc.residual}};
  r.text = t.str();
  return r;
}

RunReport run_pipeline(const Scenario& s, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto stage = [&](const std::string& name, auto&& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      const int code = exit_code_for(e);
      write_json(out_dir / "failure.json", {{"stage", name}, {"error", e.what()}, {"exit_code", code}});
      throw StageError(name, e.what(), code);
    }
  };

  stage("scenario", [&] {
    write_json(out_dir / "scenario.json", to_json(s));
    return 0;
  });
  const WeightedDigraph g = stage("generate", [&] { return build_graph(s.graph); });
  stage("generate", [&] {
    write_json(out_dir / "graph.json", to_json(g));
    return 0;
  });
  const NetworkSystem sys = stage("assemble", [&] { return build_system(s, g); });
  const Trajectory traj = stage("simulate", [&] {
    Trajectory t = simulate_scenario(s, sys);
    write_trajectory_csv(out_dir / "trajectory.csv", t);
    return t;
  });
  const Identification id = stage("identify", [&] {
    Identification r = identify(traj, s, g.size());
    write_json(out_dir / "eigenvalues.json", to_json(r));
    std::ostringstream lap, rat;
    write_laplacian_csv(lap, r.estimate);
    write_text(out_dir / "laplacian.csv", lap.str());
    write_ratio_csv(rat, r.ratios);
    write_text(out_dir / "ratios.csv", rat.str());
    return r;
  });
  const AnalysisResult a = stage("analyze", [&] {
    AnalysisResult r = analyze(id, s.analysis);
    write_json(out_dir / "summary.json", to_json(r));
    if (r.summary.hull) {
      std::ostringstream h;
      write_hull_csv(h, *r.summary.hull);
      write_text(out_dir / "hull.csv", h.str());
    }
    if (r.clustering) {
      std::ostringstream c;
      write_cluster_csv(c, id.measured_nodes, *r.clustering, r.cluster_points);
      write_text(out_dir / "clusters.csv", c.str());
    }
    return r;
  });
  return stage("report", [&] {
    RunReport rep = make_report(s, g, id, a);
    write_json(out_dir / "report.json", rep.data);
    write_text(out_dir / "report.txt", rep.text);
    return rep;
  });
}

}  // namespace specid
