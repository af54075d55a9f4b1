// Command-line front end: single stages over files, or full runs of the
// bundled scenarios.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "specid/errors.hpp"
#include "specid/pipeline.hpp"

#ifndef SPECID_SCENARIO_DIR
#define SPECID_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace specid;

namespace {

struct Common {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string format = "json";
};

Scenario load(const Common& c) {
  if (c.scenario.empty()) throw ParameterError("--scenario is required");
  Scenario s = load_scenario(c.scenario);
  if (c.seed) override_seeds(s, *c.seed);
  return s;
}

fs::path out_dir(const Common& c, const Scenario* s) {
  fs::path dir = !c.out.empty() ? fs::path(c.out) : (s && !s->output_dir.empty() ? s->output_dir : fs::path("out"));
  fs::create_directories(dir);
  return dir;
}

void save(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot write " + path.string());
  f << text;
}

void save(const fs::path& path, const json& j) { save(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

WeightedDigraph graph_for(const Scenario& s, const std::string& graph_path) {
  if (graph_path.empty()) return build_graph(s.graph);
  return graph_from_json(read_json(graph_path));
}

std::string summary_csv(const SpectralSummary& s) {
  std::ostringstream out;
  out.precision(17);
  out << "key,value\n";
  out << "mode," << to_string(s.mode) << "\n";
  out << "M1," << s.M1 << "\nM2," << s.M2 << "\nD1," << s.D1 << "\n";
  out << "D2_lower," << s.D2_bounds.lo << "\nD2_upper," << s.D2_bounds.hi << "\n";
  out << "lambda2," << s.lambda2 << "\nlambda_n," << s.lambda_n << "\n";
  out << "dmin_bound," << s.dmin_bound << "\ndmax_bound," << s.dmax_bound << "\n";
  out << "eigenvalue_count," << s.eigenvalue_count << "\n";
  return out.str();
}

int cmd_gen_graph(const Common& c) {
  const Scenario s = load(c);
  const fs::path dir = out_dir(c, &s);
  save(dir / "graph.json", to_json(build_graph(s.graph)));
  std::cout << (dir / "graph.json").string() << "\n";
  return 0;
}

int cmd_simulate(const Common& c, const std::string& graph_path) {
  const Scenario s = load(c);
  const fs::path dir = out_dir(c, &s);
  const WeightedDigraph g = graph_for(s, graph_path);
  const Trajectory t = simulate_scenario(s, build_system(s, g));
  write_trajectory_csv(dir / "trajectory.csv", t);
  std::cout << (dir / "trajectory.csv").string() << "\n";
  return 0;
}

int cmd_identify(const Common& c, const std::string& traj_path, const std::string& graph_path) {
  const Scenario s = load(c);
  const fs::path dir = out_dir(c, &s);
  if (traj_path.empty()) throw ParameterError("--trajectory is required");
  const int n = graph_path.empty() ? s.graph.n : graph_from_json(read_json(graph_path)).size();
  const Identification id = identify(read_trajectory_csv(fs::path(traj_path)), s, n);
  if (c.format == "csv") {
    std::ostringstream lap, rat;
    write_laplacian_csv(lap, id.estimate);
    write_ratio_csv(rat, id.ratios);
    save(dir / "laplacian.csv", lap.str());
    save(dir / "ratios.csv", rat.str());
  } else {
    save(dir / "eigenvalues.json", to_json(id));
  }
  std::cout << id.estimate.groups.size() << " Laplacian eigenvalues\n";
  return 0;
}

int cmd_analyze(const Common& c, const std::string& eig_path, int n, const std::string& mode) {
  std::optional<Scenario> s;
  if (!c.scenario.empty()) s = load(c);
  const fs::path dir = out_dir(c, s ? &*s : nullptr);
  if (eig_path.empty()) throw ParameterError("--eigenvalues is required");
  Identification id = identification_from_json(read_json(eig_path));
  if (n > 0) id.n = n;
  if (id.n <= 0) throw ParameterError("node count unknown; pass --n");
  AnalysisSpec spec = s ? s->analysis : AnalysisSpec{};
  if (!mode.empty()) spec.mode = summary_mode_from_string(mode);
  const AnalysisResult a = analyze(id, spec);
  if (c.format == "csv") {
    save(dir / "summary.csv", summary_csv(a.summary));
    if (a.summary.hull) {
      std::ostringstream h;
      write_hull_csv(h, *a.summary.hull);
      save(dir / "hull.csv", h.str());
    }
    if (a.clustering) {
      std::ostringstream cl;
      write_cluster_csv(cl, id.measured_nodes, *a.clustering, a.cluster_points);
      save(dir / "clusters.csv", cl.str());
    }
  } else {
    save(dir / "summary.json", to_json(a));
  }
  std::cout << "M1 " << a.summary.M1 << "  M2 " << a.summary.M2 << "  lambda2 " << a.summary.lambda2 << "  lambda_n "
            << a.summary.lambda_n << "\n";
  return 0;
}

int run_one(const Scenario& s, const fs::path& dir) {
  std::cout << run_pipeline(s, dir).text << "\n";
  return 0;
}

int cmd_run(const Common& c) {
  const Scenario s = load(c);
  return run_one(s, out_dir(c, &s));
}

int cmd_reproduce(const Common& c, const std::string& which, const std::string& scenario_dir) {
  static const std::vector<std::string> all = {"table1", "table2", "table3", "clustering"};
  std::vector<std::string> names;
  if (which == "all") {
    names = all;
  } else {
    names = {which};
  }
  const fs::path root = c.out.empty() ? fs::path("out") : fs::path(c.out);
  for (const auto& name : names) {
    const fs::path file = fs::path(scenario_dir) / (name + ".json");
    if (!fs::exists(file)) throw ParseError("no bundled scenario " + file.string());
    Scenario s = load_scenario(file);
    if (c.seed) override_seeds(s, *c.seed);
    std::cout << "== " << name << " ==\n";
    run_one(s, root / name);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral identification of networked linear systems from measured outputs"};
  app.require_subcommand(1);

  Common c;
  auto add_common = [&](CLI::App* sub, bool needs_scenario) {
    auto* opt = sub->add_option("--scenario", c.scenario, "scenario JSON file");
    if (needs_scenario) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--seed-override", c.seed, "replace every seed in the scenario");
    sub->add_option("--format", c.format, "artifact format")->check(CLI::IsMember({"json", "csv"}));
  };

  std::string graph_path, traj_path, eig_path, mode, which = "all";
  std::string scenario_dir = SPECID_SCENARIO_DIR;
  int n = 0;

  auto* gen = app.add_subcommand("gen-graph", "generate the scenario graph (graph.json)");
  add_common(gen, true);

  auto* sim = app.add_subcommand("simulate", "simulate the network (trajectory.csv)");
  add_common(sim, true);
  sim->add_option("--graph", graph_path, "graph JSON instead of the scenario generator")->check(CLI::ExistingFile);

  auto* idf = app.add_subcommand("identify", "fit the DMDc model and recover Laplacian eigenvalues");
  add_common(idf, true);
  idf->add_option("--trajectory", traj_path, "trajectory CSV")->required()->check(CLI::ExistingFile);
  idf->add_option("--graph", graph_path, "graph JSON (for the node count)")->check(CLI::ExistingFile);

  auto* ana = app.add_subcommand("analyze", "spectral summary from identified eigenvalues");
  add_common(ana, false);
  ana->add_option("--eigenvalues", eig_path, "eigenvalues JSON")->required()->check(CLI::ExistingFile);
  ana->add_option("--n", n, "node count, overriding the file");
  ana->add_option("--mode", mode, "full-spectrum or hull")->check(CLI::IsMember({"full-spectrum", "hull"}));

  auto* run = app.add_subcommand("run", "run every stage of one scenario and print the report");
  add_common(run, true);

  auto* rep = app.add_subcommand("reproduce", "run bundled scenarios and print comparison tables");
  add_common(rep, false);
  rep->add_option("which", which, "table1 | table2 | table3 | clustering | trivial | all")
      ->check(CLI::IsMember({"table1", "table2", "table3", "clustering", "trivial", "all"}));
  rep->add_option("--scenarios-dir", scenario_dir, "directory holding the bundled scenario files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_graph(c);
    if (sim->parsed()) return cmd_simulate(c, graph_path);
    if (idf->parsed()) return cmd_identify(c, traj_path, graph_path);
    if (ana->parsed()) return cmd_analyze(c, eig_path, n, mode);
    if (run->parsed()) return cmd_run(c);
    if (rep->parsed()) return cmd_reproduce(c, which, scenario_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 2;
}
