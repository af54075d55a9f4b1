#include "specid/scenario.hpp"

#include <cmath>
#include <fstream>

#include "specid/errors.hpp"

namespace specid {

namespace {

using nlohmann::json;

// Typed access to one JSON object; every error carries the dotted path.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ValidationError(display(), "expected an object");
  }

  bool has(const std::string& key) const { return node_.contains(key) && !node_.at(key).is_null(); }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& raw(const std::string& key) const {
    if (!has(key)) throw ValidationError(at(key), "missing required field");
    return node_.at(key);
  }

  Reader object(const std::string& key) const { return Reader(raw(key), at(key)); }

  double number(const std::string& key) const { return as_number(raw(key), at(key)); }
  double number(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  int integer(const std::string& key) const { return as_int(raw(key), at(key)); }
  int integer(const std::string& key, int fallback) const { return has(key) ? integer(key) : fallback; }

  std::uint64_t seed(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ValidationError(at(key), "expected a non-negative integer seed");
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!node_.at(key).is_boolean()) throw ValidationError(at(key), "expected true or false");
    return node_.at(key).get<bool>();
  }

  std::string string(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_string()) throw ValidationError(at(key), "expected a string");
    return v.get<std::string>();
  }

  Interval interval(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_array() || v.size() != 2) throw ValidationError(at(key), "expected [low, high]");
    Interval r{as_number(v[0], at(key) + "[0]"), as_number(v[1], at(key) + "[1]")};
    if (r.lo > r.hi) throw ValidationError(at(key), "low exceeds high");
    return r;
  }

  std::vector<int> int_list(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_array()) throw ValidationError(at(key), "expected an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_int(v[i], index(key, i)));
    return out;
  }

  std::vector<std::vector<int>> int_tuples(const std::string& key, std::size_t arity) const {
    const json& v = raw(key);
    if (!v.is_array()) throw ValidationError(at(key), "expected an array");
    std::vector<std::vector<int>> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_array() || v[i].size() != arity) {
        throw ValidationError(index(key, i), "expected " + std::to_string(arity) + " integers");
      }
      std::vector<int> t;
      for (std::size_t k = 0; k < arity; ++k) t.push_back(as_int(v[i][k], index(key, i) + "[" + std::to_string(k) + "]"));
      out.push_back(std::move(t));
    }
    return out;
  }

  std::string index(const std::string& key, std::size_t i) const { return at(key) + "[" + std::to_string(i) + "]"; }

  std::string display() const { return path_.empty() ? "$" : path_; }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ValidationError(path, "expected a number");
    double x = v.get<double>();
    if (!std::isfinite(x)) throw ValidationError(path, "expected a finite number");
    return x;
  }

  static int as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ValidationError(path, "expected an integer");
    return v.get<int>();
  }

 private:
  const json& node_;
  std::string path_;
};

Eigen::MatrixXd read_matrix(const Reader& r, const std::string& key) {
  const json& v = r.raw(key);
  if (v.is_number()) return Eigen::MatrixXd::Constant(1, 1, Reader::as_number(v, r.at(key)));
  if (!v.is_array() || v.empty()) throw ValidationError(r.at(key), "expected a non-empty matrix");
  const std::size_t rows = v.size();
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  if (cols == 0) throw ValidationError(r.at(key), "expected nested rows");
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!v[i].is_array() || v[i].size() != cols) throw ValidationError(r.index(key, i), "ragged matrix row");
    for (std::size_t j = 0; j < cols; ++j) {
      m(i, j) = Reader::as_number(v[i][j], r.index(key, i) + "[" + std::to_string(j) + "]");
    }
  }
  return m;
}

Eigen::VectorXd read_vector(const Reader& r, const std::string& key) {
  const json& v = r.raw(key);
  if (v.is_number()) return Eigen::VectorXd::Constant(1, Reader::as_number(v, r.at(key)));
  if (!v.is_array() || v.empty()) throw ValidationError(r.at(key), "expected a non-empty vector");
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const json& e = v[i].is_array() && v[i].size() == 1 ? v[i][0] : v[i];
    out(i) = Reader::as_number(e, r.index(key, i));
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

GraphSpec read_graph(const Reader& g, const std::filesystem::path& base) {
  GraphSpec s;
  if (g.has("edge_list")) {
    s.generator = "edge_list";
    s.path = resolve(base, g.string("edge_list"));
    s.directed = !g.boolean("undirected", false);
    s.n = g.integer("n", 0);
    return s;
  }
  if (g.has("file")) {
    s.generator = "file";
    s.path = resolve(base, g.string("file"));
    return s;
  }
  s.generator = g.string("generator");
  if (s.generator == "erdos_renyi") {
    s.n = g.integer("n");
    s.p = g.number("p");
    s.weights = g.interval("weights");
    s.directed = g.boolean("directed", true);
    s.seed = g.seed("seed");
  } else if (s.generator == "planted_partition") {
    s.clusters = g.integer("clusters");
    s.cluster_size = g.integer("cluster_size");
    s.p_in = g.number("p_in");
    s.p_out = g.number("p_out");
    s.weights = g.interval("weights");
    s.seed = g.seed("seed");
    s.n = s.clusters * s.cluster_size;
    s.directed = false;
  } else if (s.generator == "degree_targeted") {
    s.n = g.integer("n");
    s.mean_edges = g.number("mean_edges");
    s.sd_edges = g.number("sd_edges");
    s.weights = g.interval("weights");
    s.seed = g.seed("seed");
  } else if (s.generator == "hub") {
    s.n = g.integer("n");
    s.background_mean_degree = g.number("background_mean_degree");
    s.hub_degree = g.integer("hub_degree");
    s.seed = g.seed("seed");
    s.directed = false;
  } else if (s.generator == "empty") {
    s.n = g.integer("n");
  } else {
    throw ValidationError(g.at("generator"), "unknown generator `" + s.generator + "`");
  }
  if (s.n <= 0) throw ValidationError(g.at("n"), "node count must be positive");
  if (s.generator == "erdos_renyi" && !(s.p >= 0.0 && s.p <= 1.0)) {
    throw ValidationError(g.at("p"), "probability must lie in [0, 1]");
  }
  if (s.weights.lo < 0.0) throw ValidationError(g.at("weights"), "weights must be non-negative");
  return s;
}

void check_index(int value, int limit, const std::string& path, const char* what) {
  if (value < 0 || (limit > 0 && value >= limit)) {
    throw ValidationError(path, std::string(what) + " " + std::to_string(value) + " out of range");
  }
}

}  // namespace

MeasurementPlan MeasurementSpec::plan() const {
  if (factored) return MeasurementPlan::factored(nodes, states);
  return MeasurementPlan(selections);
}

std::vector<InputSite> input_sites(const InputSpec& spec, int n) {
  if (!spec.block_state) return spec.sites;
  std::vector<InputSite> out;
  for (int c = 0; c < spec.channels; ++c) {
    const int lo = static_cast<int>(static_cast<long>(c) * n / spec.channels);
    const int hi = static_cast<int>(static_cast<long>(c + 1) * n / spec.channels);
    for (int node = lo; node < hi; ++node) out.push_back({node, *spec.block_state, c});
  }
  return out;
}

EmbeddingConfig Scenario::embedding() const { return EmbeddingConfig::from_seconds(depth, delta, T, svd_tol); }

Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  Reader root(doc, "");
  Scenario s;
  s.version = root.integer("version");
  if (s.version != kScenarioVersion) {
    throw ValidationError("version", "unsupported scenario version " + std::to_string(s.version));
  }
  s.name = root.has("name") ? root.string("name") : "scenario";

  s.graph = read_graph(root.object("graph"), base_dir);
  const int n = s.graph.n;

  Reader unit = root.object("unit");
  s.A = read_matrix(unit, "A");
  s.B = read_vector(unit, "B");
  s.C = read_vector(unit, "C");
  if (s.A.rows() != s.A.cols()) throw ValidationError(unit.at("A"), "A must be square");
  if (s.B.size() != s.A.rows()) throw ValidationError(unit.at("B"), "B must have the dimension of A");
  if (s.C.size() != s.A.rows()) throw ValidationError(unit.at("C"), "C must have the dimension of A");
  const int m = static_cast<int>(s.A.rows());

  Reader in = root.object("inputs");
  s.inputs.channels = in.integer("channels");
  if (s.inputs.channels < 0) throw ValidationError(in.at("channels"), "must be non-negative");
  if (in.has("block_state")) {
    s.inputs.block_state = in.integer("block_state");
    check_index(*s.inputs.block_state, m, in.at("block_state"), "state");
  } else {
    auto sites = in.int_tuples("sites", 3);
    for (std::size_t i = 0; i < sites.size(); ++i) {
      const std::string p = in.index("sites", i);
      check_index(sites[i][0], n, p + "[0]", "node");
      check_index(sites[i][1], m, p + "[1]", "state");
      check_index(sites[i][2], s.inputs.channels, p + "[2]", "channel");
      s.inputs.sites.push_back({sites[i][0], sites[i][1], sites[i][2]});
    }
  }
  if (s.inputs.channels > 0) {
    s.inputs.amplitude = in.interval("amplitude");
    s.inputs.frequency_hz = in.interval("frequency_hz");
    s.inputs.seed = in.seed("seed");
    if (s.inputs.amplitude.lo < 0.0) throw ValidationError(in.at("amplitude"), "must be non-negative");
  }

  if (root.has("initial_state")) {
    Reader x0 = root.object("initial_state");
    if (!x0.boolean("zero", false)) s.x0_seed = x0.seed("seed");
  }

  Reader meas = root.object("measurement");
  if (meas.has("selections")) {
    s.measurement.factored = false;
    auto sel = meas.int_tuples("selections", 2);
    for (std::size_t i = 0; i < sel.size(); ++i) {
      check_index(sel[i][0], n, meas.index("selections", i) + "[0]", "node");
      check_index(sel[i][1], m, meas.index("selections", i) + "[1]", "state");
      s.measurement.selections.emplace_back(sel[i][0], sel[i][1]);
    }
    if (sel.empty()) throw ValidationError(meas.at("selections"), "at least one selection required");
  } else {
    s.measurement.nodes = meas.int_list("nodes");
    s.measurement.states = meas.int_list("states");
    if (s.measurement.nodes.empty()) throw ValidationError(meas.at("nodes"), "at least one node required");
    if (s.measurement.states.empty()) throw ValidationError(meas.at("states"), "at least one state required");
    for (std::size_t i = 0; i < s.measurement.nodes.size(); ++i) {
      check_index(s.measurement.nodes[i], n, meas.index("nodes", i), "node");
    }
    for (std::size_t i = 0; i < s.measurement.states.size(); ++i) {
      check_index(s.measurement.states[i], m, meas.index("states", i), "state");
    }
  }

  Reader timing = root.object("timing");
  s.T = timing.number("T");
  s.t_end = timing.number("t_end");
  if (!(s.T > 0.0)) throw ValidationError(timing.at("T"), "must be positive");
  if (!(s.t_end >= s.T)) throw ValidationError(timing.at("t_end"), "must be at least one period");

  Reader emb = root.object("embedding");
  s.depth = emb.integer("N");
  s.delta = emb.number("delta");
  s.svd_tol = emb.number("svd_tol", 1e-10);
  if (s.depth < 1) throw ValidationError(emb.at("N"), "must be at least 1");
  try {
    (void)s.embedding();
  } catch (const ParameterError& e) {
    throw ValidationError(emb.at("delta"), e.what());
  }

  if (root.has("identification")) {
    Reader id = root.object("identification");
    s.filter.zero_tol = id.number("zero_tol", s.filter.zero_tol);
    s.filter.rank_rule = id.boolean("rank_rule", s.filter.rank_rule);
    s.dedup_tol = id.number("dedup_tol", s.dedup_tol);
  }

  if (root.has("analysis")) {
    Reader an = root.object("analysis");
    if (an.has("mode")) {
      try {
        s.analysis.mode = summary_mode_from_string(an.string("mode"));
      } catch (const ParameterError& e) {
        throw ValidationError(an.at("mode"), e.what());
      }
    }
    s.analysis.clusters = an.integer("clusters", 0);
    s.analysis.reference_node = an.integer("reference_node", 0);
    s.analysis.zero_sep = an.number("zero_sep", s.analysis.zero_sep);
    if (an.has("cluster_seed")) s.analysis.cluster_seed = an.seed("cluster_seed");
    if (an.has("mean_edge_weight")) s.analysis.mean_edge_weight = an.number("mean_edge_weight");
    const int q1 = s.measurement.factored ? static_cast<int>(s.measurement.nodes.size()) : 0;
    if (an.has("ratio_pairs")) {
      auto pairs = an.int_tuples("ratio_pairs", 2);
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (!s.measurement.factored) throw ValidationError(an.at("ratio_pairs"), "ratios need a factored measurement");
        check_index(pairs[i][0], q1, an.index("ratio_pairs", i) + "[0]", "measured node position");
        check_index(pairs[i][1], q1, an.index("ratio_pairs", i) + "[1]", "measured node position");
        s.analysis.ratio_pairs.emplace_back(pairs[i][0], pairs[i][1]);
      }
    }
    if (s.analysis.clusters < 0) throw ValidationError(an.at("clusters"), "must be non-negative");
    if (s.analysis.clusters > 0) {
      if (!s.measurement.factored) throw ValidationError(an.at("clusters"), "clustering needs a factored measurement");
      check_index(s.analysis.reference_node, q1, an.at("reference_node"), "measured node position");
      if (q1 < s.analysis.clusters) throw ValidationError(an.at("clusters"), "more clusters than measured nodes");
    }
  }

  if (root.has("output")) {
    Reader out = root.object("output");
    if (out.has("dir")) s.output_dir = resolve(base_dir, out.string("dir"));
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return parse_scenario(doc, path.parent_path());
}

void override_seeds(Scenario& s, std::uint64_t seed) {
  s.graph.seed = seed;
  s.inputs.seed = seed + 1;
  if (s.x0_seed) s.x0_seed = seed + 2;
  s.analysis.cluster_seed = seed + 3;
}

nlohmann::json to_json(const Scenario& s) {
  auto mat = [](const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      json r = json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
      rows.push_back(r);
    }
    return rows;
  };
  auto vec = [](const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); };

  json graph;
  const auto& g = s.graph;
  if (g.generator == "edge_list") {
    graph = {{"edge_list", g.path.string()}, {"undirected", !g.directed}, {"n", g.n}};
  } else if (g.generator == "file") {
    graph = {{"file", g.path.string()}};
  } else {
    graph = {{"generator", g.generator}, {"n", g.n}};
    if (g.generator == "erdos_renyi") {
      graph.update({{"p", g.p}, {"weights", {g.weights.lo, g.weights.hi}}, {"directed", g.directed}, {"seed", g.seed}});
    } else if (g.generator == "planted_partition") {
      graph = {{"generator", g.generator}, {"clusters", g.clusters}, {"cluster_size", g.cluster_size},
               {"p_in", g.p_in}, {"p_out", g.p_out}, {"weights", {g.weights.lo, g.weights.hi}}, {"seed", g.seed}};
    } else if (g.generator == "degree_targeted") {
      graph.update({{"mean_edges", g.mean_edges}, {"sd_edges", g.sd_edges},
                    {"weights", {g.weights.lo, g.weights.hi}}, {"seed", g.seed}});
    } else if (g.generator == "hub") {
      graph.update({{"background_mean_degree", g.background_mean_degree}, {"hub_degree", g.hub_degree}, {"seed", g.seed}});
    }
  }

  json inputs = {{"channels", s.inputs.channels}};
  if (s.inputs.block_state) {
    inputs["block_state"] = *s.inputs.block_state;
  } else {
    json sites = json::array();
    for (const auto& site : s.inputs.sites) sites.push_back({site.node, site.state, site.channel});
    inputs["sites"] = sites;
  }
  if (s.inputs.channels > 0) {
    inputs["amplitude"] = {s.inputs.amplitude.lo, s.inputs.amplitude.hi};
    inputs["frequency_hz"] = {s.inputs.frequency_hz.lo, s.inputs.frequency_hz.hi};
    inputs["seed"] = s.inputs.seed;
  }

  json meas;
  if (s.measurement.factored) {
    meas = {{"nodes", s.measurement.nodes}, {"states", s.measurement.states}};
  } else {
    json sel = json::array();
    for (const auto& [a, b] : s.measurement.selections) sel.push_back({a, b});
    meas = {{"selections", sel}};
  }

  json analysis = {{"mode", to_string(s.analysis.mode)},
                   {"clusters", s.analysis.clusters},
                   {"reference_node", s.analysis.reference_node},
                   {"zero_sep", s.analysis.zero_sep},
                   {"cluster_seed", s.analysis.cluster_seed}};
  json pairs = json::array();
  for (const auto& [a, b] : s.analysis.ratio_pairs) pairs.push_back({a, b});
  analysis["ratio_pairs"] = pairs;
  if (s.analysis.mean_edge_weight) analysis["mean_edge_weight"] = *s.analysis.mean_edge_weight;

  json doc = {
      {"version", s.version},
      {"name", s.name},
      {"graph", graph},
      {"unit", {{"A", mat(s.A)}, {"B", vec(s.B)}, {"C", vec(s.C)}}},
      {"inputs", inputs},
      {"initial_state", s.x0_seed ? json{{"seed", *s.x0_seed}} : json{{"zero", true}}},
      {"measurement", meas},
      {"timing", {{"T", s.T}, {"t_end", s.t_end}}},
      {"embedding", {{"N", s.depth}, {"delta", s.delta}, {"svd_tol", s.svd_tol}}},
      {"identification",
       {{"zero_tol", s.filter.zero_tol}, {"rank_rule", s.filter.rank_rule}, {"dedup_tol", s.dedup_tol}}},
      {"analysis", analysis},
  };
  if (!s.output_dir.empty()) doc["output"] = {{"dir", s.output_dir.string()}};
  return doc;
}

}  // namespace specid
