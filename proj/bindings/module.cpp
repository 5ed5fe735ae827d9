#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cfm/experiments.hpp"
#include "cfm/fisher.hpp"
#include "cfm/interpret.hpp"

namespace py = pybind11;
using namespace cfm;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Composite factor model estimation";

  py::class_<BlockPrecision>(m, "BlockPrecision")
      .def_readonly("p", &BlockPrecision::p)
      .def_readonly("q", &BlockPrecision::q)
      .def_readonly("theta", &BlockPrecision::theta)
      .def_readonly("d_y", &BlockPrecision::d_y)
      .def_readonly("l_y", &BlockPrecision::l_y)
      .def("theta_y", &BlockPrecision::theta_y)
      .def("theta_yx", &BlockPrecision::theta_yx)
      .def("theta_x", &BlockPrecision::theta_x);

  py::class_<FactorModelParams>(m, "FactorModelParams")
      .def(py::init([](Vector d, Matrix l) {
             return FactorModelParams{std::move(d), std::move(l)};
           }),
           py::arg("d"), py::arg("l"))
      .def_readonly("d", &FactorModelParams::d)
      .def_readonly("l", &FactorModelParams::l)
      .def("precision", &FactorModelParams::precision);

  py::class_<Dataset>(m, "Dataset")
      .def_static("from_rows", &Dataset::from_rows, py::arg("rows"),
                  py::arg("p"), py::arg("q"))
      .def_readonly("rows", &Dataset::rows)
      .def_readonly("p", &Dataset::p)
      .def_readonly("q", &Dataset::q)
      .def_readonly("sample_cov", &Dataset::sample_cov)
      .def_property_readonly("n", &Dataset::n);

  py::class_<PopulationModel>(m, "PopulationModel")
      .def_readonly("a_star", &PopulationModel::a_star)
      .def_readonly("b_u_star", &PopulationModel::b_u_star)
      .def_readonly("sigma_star", &PopulationModel::sigma_star)
      .def_readonly("theta_star", &PopulationModel::theta_star)
      .def_readonly("d_y_star", &PopulationModel::d_y_star)
      .def_readonly("l_y_star", &PopulationModel::l_y_star)
      .def_readonly("k_x", &PopulationModel::k_x)
      .def_readonly("k_u", &PopulationModel::k_u);

  py::class_<SolverOptions>(m, "SolverOptions")
      .def(py::init<>())
      .def_readwrite("lambda_n", &SolverOptions::lambda_n)
      .def_readwrite("gamma", &SolverOptions::gamma)
      .def_readwrite("rho_admm", &SolverOptions::rho_admm)
      .def_readwrite("max_iters", &SolverOptions::max_iters)
      .def_readwrite("tol_primal", &SolverOptions::tol_primal)
      .def_readwrite("tol_dual", &SolverOptions::tol_dual)
      .def_readwrite("rank_tol", &SolverOptions::rank_tol);

  py::class_<SolveReport>(m, "SolveReport")
      .def_readonly("estimate", &SolveReport::estimate)
      .def_readonly("objective", &SolveReport::objective)
      .def_readonly("primal_residual", &SolveReport::primal_residual)
      .def_readonly("dual_residual", &SolveReport::dual_residual)
      .def_readonly("iterations", &SolveReport::iterations)
      .def_readonly("converged", &SolveReport::converged)
      .def_readonly("rank_l_y", &SolveReport::rank_l_y)
      .def_readonly("rank_theta_yx", &SolveReport::rank_theta_yx);

  py::class_<AssumptionReport>(m, "AssumptionReport")
      .def_readonly("chi_min", &AssumptionReport::chi_min)
      .def_readonly("xi_min", &AssumptionReport::xi_min)
      .def_readonly("varphi_max", &AssumptionReport::varphi_max)
      .def_readonly("alpha", &AssumptionReport::alpha)
      .def_readonly("beta_implied", &AssumptionReport::beta_implied)
      .def_readonly("chi_pass", &AssumptionReport::chi_pass)
      .def_readonly("xi_pass", &AssumptionReport::xi_pass)
      .def_readonly("varphi_pass", &AssumptionReport::varphi_pass)
      .def_readonly("max_angle_deg", &AssumptionReport::max_angle_deg)
      .def("all_pass", &AssumptionReport::all_pass);

  py::class_<RecoveredParams>(m, "RecoveredParams")
      .def_readonly("a_hat", &RecoveredParams::a_hat)
      .def_readonly("b_u_hat", &RecoveredParams::b_u_hat)
      .def_readonly("sigma_eps_hat", &RecoveredParams::sigma_eps_hat);

  m.def("generate_synthetic", &generate_synthetic, py::arg("p"), py::arg("q"),
        py::arg("k_x"), py::arg("k_u"), py::arg("cond_bound") = 10.0,
        py::arg("seed") = 0, py::arg("tau_override") = -1.0);
  m.def("build_population", &build_population, py::arg("a"), py::arg("b_u"),
        py::arg("sigma_zeta_u"), py::arg("sigma_eps"), py::arg("sigma_x"));
  m.def("marginalize_factor", &marginalize_factor);
  m.def("sample_observations", &sample_observations, py::arg("pop"),
        py::arg("n"), py::arg("seed") = 0);
  m.def("recover_parameters", &recover_parameters, py::arg("est"),
        py::arg("rank_rel_tol") = 1e-3);
  m.def("solve_composite",
        [](const Dataset& data, const SolverOptions& opts) {
          return solve_composite(data, opts);
        },
        py::arg("data"), py::arg("opts") = SolverOptions{});
  m.def("solve_factor",
        [](const Dataset& data, double lambda_tilde, const SolverOptions& opts) {
          return solve_factor(data, lambda_tilde, opts);
        },
        py::arg("data"), py::arg("lambda_tilde"),
        py::arg("opts") = SolverOptions{});
  m.def("verify_assumptions",
        [](const PopulationModel& pop, double gamma, double omega_y,
           double omega_yx, double alpha_req, double beta_req, int n_samples,
           uint64_t seed) {
          return verify_assumptions(pop, gamma, omega_y, omega_yx, alpha_req,
                                    beta_req, n_samples, seed);
        },
        py::arg("pop"), py::arg("gamma"), py::arg("omega_y"),
        py::arg("omega_yx"), py::arg("alpha_req") = 0.2,
        py::arg("beta_req") = 9.0, py::arg("n_samples") = 50,
        py::arg("seed") = 0);
}
