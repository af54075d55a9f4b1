#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "specid/errors.hpp"
#include "specid/pipeline.hpp"

namespace py = pybind11;
using namespace specid;

namespace {

// nlohmann::json -> Python objects through the json module.
py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Trajectory make_trajectory(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& inputs, double T) {
  if (samples.rows() != inputs.rows() && inputs.size() != 0) {
    throw ParameterError("samples and inputs need the same number of rows");
  }
  Trajectory t;
  t.T = T;
  t.samples = samples;
  t.inputs = inputs.size() == 0 ? Eigen::MatrixXd(samples.rows(), 0) : inputs;
  return t;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spectral identification of networked linear systems";

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);

  py::class_<WeightedDigraph>(m, "Graph")
      .def(py::init<Eigen::MatrixXd, bool, std::vector<int>>(), py::arg("weights"), py::arg("undirected") = false,
           py::arg("labels") = std::vector<int>{})
      .def_property_readonly("n", &WeightedDigraph::size)
      .def_property_readonly("weights", &WeightedDigraph::weights)
      .def_property_readonly("undirected", &WeightedDigraph::undirected)
      .def_property_readonly("labels", &WeightedDigraph::labels)
      .def_property_readonly("edge_count", &WeightedDigraph::edge_count)
      .def("laplacian", [](const WeightedDigraph& g) { return laplacian(g).matrix; })
      .def("spectrum", [](const WeightedDigraph& g) { return exact_spectrum(laplacian(g)).eigenvalues; })
      .def("degrees", [](const WeightedDigraph& g) { return degree_stats(g).degrees; });

  m.def("erdos_renyi", [](int n, double p, std::pair<double, double> w, bool directed, std::uint64_t seed) {
        return generate_erdos_renyi(n, p, {w.first, w.second}, directed, seed);
      }, py::arg("n"), py::arg("p"), py::arg("weights") = std::pair{1.0, 1.0}, py::arg("directed") = true,
      py::arg("seed") = 0);
  m.def("planted_partition",
        [](int k, int size, double p_in, double p_out, std::pair<double, double> w, std::uint64_t seed) {
          return generate_planted_partition(k, size, p_in, p_out, {w.first, w.second}, seed);
        },
        py::arg("clusters"), py::arg("cluster_size"), py::arg("p_in"), py::arg("p_out"),
        py::arg("weights") = std::pair{1.0, 1.0}, py::arg("seed") = 0);
  m.def("degree_targeted", [](int n, double mean, double sd, std::pair<double, double> w, std::uint64_t seed) {
        return generate_degree_targeted(n, mean, sd, {w.first, w.second}, seed);
      }, py::arg("n"), py::arg("mean_edges"), py::arg("sd_edges"), py::arg("weights") = std::pair{1.0, 1.0},
      py::arg("seed") = 0);
  m.def("hub_graph", &generate_hub_graph, py::arg("n"), py::arg("background_mean_degree"), py::arg("hub_degree"),
        py::arg("seed") = 0);

  m.def("simulate",
        [](const WeightedDigraph& g, const Eigen::MatrixXd& A, const Eigen::VectorXd& B, const Eigen::VectorXd& C,
           const std::vector<std::tuple<int, int, int>>& sites, const std::vector<std::pair<int, int>>& measured,
           double T, double t_end, std::pair<double, double> amplitude, std::pair<double, double> frequency_hz,
           std::uint64_t seed, bool zero_initial_state) {
          int channels = 0;
          std::vector<InputSite> s;
          for (const auto& [node, state, channel] : sites) {
            s.push_back({node, state, channel});
            channels = std::max(channels, channel + 1);
          }
          const NetworkSystem sys = assemble(UnitDynamics(A, B, C), g, s, channels);
          const InputSignal sig = channels > 0 ? random_sinusoids(channels, {amplitude.first, amplitude.second},
                                                                  {frequency_hz.first, frequency_hz.second}, seed)
                                               : InputSignal::zero(0);
          const Eigen::VectorXd x0 = zero_initial_state ? Eigen::VectorXd::Zero(sys.state_dim())
                                                        : random_initial_state(sys.state_dim(), seed + 1);
          const Trajectory t = simulate(sys, sig, x0, T, t_end, MeasurementPlan(measured));
          return py::make_tuple(t.samples, t.inputs);
        },
        py::arg("graph"), py::arg("A"), py::arg("B"), py::arg("C"), py::arg("sites"), py::arg("measured"), py::arg("T"),
        py::arg("t_end"), py::arg("amplitude") = std::pair{0.0, 1.0}, py::arg("frequency_hz") = std::pair{0.0, 1.0},
        py::arg("seed") = 0, py::arg("zero_initial_state") = false,
        "Returns (samples, inputs), one row per sampling instant.");

  m.def("fit_dmdc",
        [](const Eigen::MatrixXd& samples, const Eigen::MatrixXd& inputs, double T, int depth, double delta,
           double svd_tol) {
          const EmbeddingConfig cfg = EmbeddingConfig::from_seconds(depth, delta, T, svd_tol);
          const DmdcResult r = fit(build_data_matrices(make_trajectory(samples, inputs, T), cfg), cfg);
          py::dict d;
          d["gamma"] = r.gamma;
          d["upsilon"] = r.upsilon;
          d["eigenvalues"] = r.eigenvalues;
          d["eigenvectors"] = r.eigenvectors;
          d["residual"] = r.residual;
          d["rank_used"] = r.rank_used;
          d["input_rank"] = r.input_rank;
          d["warnings"] = r.warnings;
          return d;
        },
        py::arg("samples"), py::arg("inputs"), py::arg("T"), py::arg("depth"), py::arg("delta"),
        py::arg("svd_tol") = 1e-10);

  m.def("mu_to_lambda",
        [](std::complex<double> mu, const Eigen::MatrixXd& A, const Eigen::VectorXd& B, const Eigen::VectorXd& C) {
          return mu_to_lambda(mu, UnitDynamics(A, B, C));
        },
        py::arg("mu"), py::arg("A"), py::arg("B"), py::arg("C"));

  m.def("identify_laplacian",
        [](const Eigen::MatrixXd& samples, const Eigen::MatrixXd& inputs, double T, const Eigen::MatrixXd& A,
           const Eigen::VectorXd& B, const Eigen::VectorXd& C, int depth, double delta, double svd_tol,
           double zero_tol, bool rank_rule, double dedup_tol) {
          const EmbeddingConfig cfg = EmbeddingConfig::from_seconds(depth, delta, T, svd_tol);
          const DmdcResult r = fit(build_data_matrices(make_trajectory(samples, inputs, T), cfg), cfg);
          const auto eig = recover_mu(r, T, SpuriousFilter{zero_tol, rank_rule});
          return recover_laplacian(eig, UnitDynamics(A, B, C), dedup_tol).lambdas();
        },
        py::arg("samples"), py::arg("inputs"), py::arg("T"), py::arg("A"), py::arg("B"), py::arg("C"),
        py::arg("depth"), py::arg("delta"), py::arg("svd_tol") = 1e-10, py::arg("zero_tol") = 1e-6,
        py::arg("rank_rule") = true, py::arg("dedup_tol") = 1e-3,
        "Estimated Laplacian eigenvalues, ascending by real part.");

  m.def("summarize",
        [](const Eigen::VectorXcd& lambdas, int n, const std::string& mode, double zero_sep) {
          return to_python(to_json(summarize(lambdas, n, summary_mode_from_string(mode), zero_sep)));
        },
        py::arg("lambdas"), py::arg("n"), py::arg("mode") = "full-spectrum", py::arg("zero_sep") = 0.05);

  m.def("cluster_by_ratios",
        [](const Eigen::MatrixXd& points, int k, std::uint64_t seed) {
          const Clustering c = cluster_by_ratios(points, k, seed);
          return py::make_tuple(c.labels, c.scatter);
        },
        py::arg("points"), py::arg("k"), py::arg("seed") = 0);

  m.def("run_scenario",
        [](const std::filesystem::path& scenario, const std::filesystem::path& out_dir, std::optional<std::uint64_t> seed) {
          Scenario s = load_scenario(scenario);
          if (seed) override_seeds(s, *seed);
          const RunReport r = run_pipeline(s, out_dir);
          py::dict d = to_python(r.data);
          d["text"] = r.text;
          return d;
        },
        py::arg("scenario"), py::arg("out_dir"), py::arg("seed") = py::none(),
        "Runs every pipeline stage, writes the artifacts and returns the report.");
}
