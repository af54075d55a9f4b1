#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "specid/errors.hpp"
#include "specid/pipeline.hpp"

using namespace specid;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json minimal_doc() {
  return json::parse(R"({
    "version": 1,
    "name": "small",
    "graph": {"generator": "erdos_renyi", "n": 4, "p": 0.8, "weights": [0.5, 1.5], "directed": true, "seed": 5},
    "unit": {"A": [[-1, -2], [1, -1]], "B": [1, 2], "C": [1, 1]},
    "inputs": {"channels": 2, "sites": [[0, 1, 0], [2, 0, 1]], "amplitude": [0.5, 1], "frequency_hz": [0.1, 0.5], "seed": 6},
    "initial_state": {"seed": 7},
    "measurement": {"nodes": [0, 1, 2, 3], "states": [0]},
    "timing": {"T": 0.05, "t_end": 10},
    "embedding": {"N": 2, "delta": 0.05},
    "analysis": {"mode": "full-spectrum", "ratio_pairs": [[0, 1]]}
  })");
}

std::string validation_path(const json& doc) {
  try {
    parse_scenario(doc);
  } catch (const ValidationError& e) {
    return e.path();
  }
  return "<accepted>";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("specid_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("bundled scenarios parse") {
  for (const char* name : {"table1", "table2", "table3", "clustering", "trivial"}) {
    CAPTURE(name);
    const fs::path file = fs::path(SPECID_SCENARIO_DIR) / (std::string(name) + ".json");
    Scenario s;
    REQUIRE_NOTHROW(s = load_scenario(file));
    CHECK(s.name == name);
    CHECK_NOTHROW(s.embedding());
  }
  const Scenario t3 = load_scenario(fs::path(SPECID_SCENARIO_DIR) / "table3.json");
  CHECK(t3.embedding().spacing == 10);
  CHECK(t3.inputs.block_state.has_value());
  const auto sites = input_sites(t3.inputs, 600);
  CHECK(sites.size() == 600);
  CHECK(sites.front().channel == 0);
  CHECK(sites[199].channel == 0);
  CHECK(sites[200].channel == 1);
  CHECK(sites.back().channel == 2);
}

TEST_CASE("missing required fields name their path") {
  const std::vector<std::pair<std::vector<std::string>, std::string>> cases = {
      {{"version"}, "version"},
      {{"graph"}, "graph"},
      {{"graph", "n"}, "graph.n"},
      {{"graph", "seed"}, "graph.seed"},
      {{"unit", "A"}, "unit.A"},
      {{"unit", "C"}, "unit.C"},
      {{"inputs", "channels"}, "inputs.channels"},
      {{"inputs", "sites"}, "inputs.sites"},
      {{"inputs", "amplitude"}, "inputs.amplitude"},
      {{"measurement", "nodes"}, "measurement.nodes"},
      {{"timing", "T"}, "timing.T"},
      {{"timing"}, "timing"},
      {{"embedding", "N"}, "embedding.N"},
      {{"embedding", "delta"}, "embedding.delta"},
  };
  for (const auto& [keys, path] : cases) {
    CAPTURE(path);
    json doc = minimal_doc();
    json* node = &doc;
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) node = &(*node)[keys[i]];
    node->erase(keys.back());
    CHECK(validation_path(doc) == path);
  }
}

TEST_CASE("invalid values are rejected") {
  json doc = minimal_doc();
  CHECK(validation_path(doc) == "<accepted>");

  doc = minimal_doc();
  doc["embedding"]["delta"] = 0.07;  // not a multiple of T
  CHECK(validation_path(doc) == "embedding.delta");

  doc = minimal_doc();
  doc["measurement"]["nodes"][2] = 9;
  CHECK(validation_path(doc) == "measurement.nodes[2]");

  doc = minimal_doc();
  doc["inputs"]["sites"][1][1] = 5;
  CHECK(validation_path(doc) == "inputs.sites[1][1]");

  doc = minimal_doc();
  doc["unit"]["B"] = json::array({1, 2, 3});
  CHECK(validation_path(doc) == "unit.B");

  doc = minimal_doc();
  doc["graph"]["generator"] = "lattice";
  CHECK(validation_path(doc) == "graph.generator");

  doc = minimal_doc();
  doc["timing"]["T"] = "fast";
  CHECK(validation_path(doc) == "timing.T");

  doc = minimal_doc();
  doc["analysis"]["clusters"] = 3;
  doc["measurement"]["nodes"] = json::array({0, 1});
  CHECK(validation_path(doc) == "analysis.clusters");

  doc = minimal_doc();
  doc["version"] = 2;
  CHECK(validation_path(doc) == "version");

  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), ParseError);
}

TEST_CASE("scenario json round trip and seed override") {
  Scenario s = parse_scenario(minimal_doc());
  const json once = to_json(s);
  CHECK(to_json(parse_scenario(once)) == once);

  override_seeds(s, 40);
  CHECK(s.graph.seed == 40);
  CHECK(s.inputs.seed == 41);
  CHECK(*s.x0_seed == 42);
  CHECK(s.analysis.cluster_seed == 43);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ValidationError("a.b", "missing")) == 2);
  CHECK(exit_code_for(DataLengthError("short", 10)) == 2);
  CHECK(exit_code_for(ParseError("bad")) == 2);
  CHECK(exit_code_for(NumericalError("bad")) == 3);
  CHECK(exit_code_for(DivergenceError("blew up", 3)) == 3);
  CHECK(exit_code_for(StageError("simulate", "x", 3)) == 3);
}

TEST_CASE("trivial scenario recovers the spectrum {0}") {
  const Scenario s = load_scenario(fs::path(SPECID_SCENARIO_DIR) / "trivial.json");
  const fs::path dir = scratch("trivial");
  const RunReport r = run_pipeline(s, dir);
  CHECK(r.data.at("trivial_graph").get<bool>());
  CHECK(r.text.find("trivial graph") != std::string::npos);
  CHECK(r.data.at("checks").at("estimated_eigenvalue_count").get<int>() == 1);
  CHECK(r.data.at("checks").at("recovered_eigenvalues").get<int>() == 1);
  for (const char* f : {"scenario.json", "graph.json", "trajectory.csv", "eigenvalues.json", "laplacian.csv",
                        "ratios.csv", "summary.json", "report.json", "report.txt"}) {
    CHECK(fs::exists(dir / f));
  }
  CHECK_FALSE(fs::exists(dir / "failure.json"));
}

TEST_CASE("analysis of the exact spectrum of K3") {
  const json doc = {{"n", 3}, {"spectrum", json::array({json::array({0.0, 0.0}), json::array({3.0, 0.0}),
                                                        json::array({3.0, 0.0})})}};
  const Identification id = identification_from_json(doc);
  const AnalysisResult a = analyze(id, AnalysisSpec{});
  CHECK(a.summary.M1 == doctest::Approx(2.0));
  CHECK(a.summary.M2 == doctest::Approx(6.0));
  CHECK(a.summary.lambda_n == doctest::Approx(3.0));
}

TEST_CASE("short trajectory fails with the minimum length") {
  json doc = minimal_doc();
  doc["timing"]["t_end"] = 0.05;
  const Scenario s = parse_scenario(doc);
  const auto g = build_graph(s.graph);
  const Trajectory t = simulate_scenario(s, build_system(s, g));
  CHECK(t.length() == 2);
  try {
    identify(t, s, g.size());
    FAIL("expected DataLengthError");
  } catch (const DataLengthError& e) {
    CHECK(e.required() == 3);
    CHECK(std::string(e.what()).find("at least 3") != std::string::npos);
  }
}

TEST_CASE("failures name the stage and keep earlier artifacts") {
  json doc = minimal_doc();
  doc["timing"]["t_end"] = 0.05;
  const fs::path dir = scratch("failure");
  try {
    run_pipeline(parse_scenario(doc), dir);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "identify");
    CHECK(e.exit_code() == 2);
  }
  const json f = json::parse(slurp(dir / "failure.json"));
  CHECK(f.at("stage") == "identify");
  CHECK(f.at("exit_code") == 2);
  CHECK(fs::exists(dir / "trajectory.csv"));
}

TEST_CASE("chained stages reproduce the pipeline artifacts") {
  const Scenario s = parse_scenario(minimal_doc());
  const fs::path full = scratch("chain_full");
  run_pipeline(s, full);

  // gen-graph -> simulate -> identify -> analyze through files
  const fs::path step = scratch("chain_steps");
  {
    std::ofstream(step / "graph.json") << to_json(build_graph(s.graph)).dump(2) << "\n";
  }
  const WeightedDigraph g = graph_from_json(json::parse(slurp(step / "graph.json")));
  write_trajectory_csv(step / "trajectory.csv", simulate_scenario(s, build_system(s, g)));
  const Identification id = identify(read_trajectory_csv(step / "trajectory.csv"), s, g.size());
  {
    std::ofstream(step / "eigenvalues.json") << to_json(id).dump(2) << "\n";
  }
  const AnalysisResult a = analyze(identification_from_json(json::parse(slurp(step / "eigenvalues.json"))), s.analysis);
  {
    std::ofstream(step / "summary.json") << to_json(a).dump(2) << "\n";
  }
  for (const char* f : {"graph.json", "trajectory.csv", "eigenvalues.json", "summary.json"}) {
    CAPTURE(f);
    CHECK(slurp(full / f) == slurp(step / f));
  }
}

TEST_CASE("pipeline report on a small network") {
  const Scenario s = parse_scenario(minimal_doc());
  const RunReport r = run_pipeline(s, scratch("small"));
  const json& c = r.data.at("checks");
  CHECK(c.at("recovered_eigenvalues").get<int>() == 4);
  CHECK(c.at("M1_rel_error").get<double>() < 1e-6);
  CHECK(c.at("M2_rel_error").get<double>() < 1e-6);
  REQUIRE(c.at("fiedler_ratios").size() == 1);
  CHECK(c.at("fiedler_ratios")[0].at("rel_error").get<double>() < 1e-6);
  CHECK(r.text.find("Exact") != std::string::npos);
}
