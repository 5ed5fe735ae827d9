#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfm/experiments.hpp"
#include "cfm/fisher.hpp"
#include "cfm/interpret.hpp"

namespace {

using json = nlohmann::ordered_json;
using cfm::Matrix;
using cfm::Vector;

constexpr int kExitValidation = 2;
constexpr int kExitNonConverged = 3;

json mat_to_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix mat_from_json(const json& j) {
  if (!j.is_array()) throw std::runtime_error("expected a matrix (array of rows)");
  int rows = static_cast<int>(j.size());
  int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols)
      throw std::runtime_error("ragged matrix in json");
    for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

json vec_to_json(const Vector& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vec_from_json(const json& j) {
  Vector v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

json model_to_json(const cfm::PopulationModel& pop) {
  json j;
  j["p"] = pop.p();
  j["q"] = pop.q();
  j["k_x"] = pop.k_x;
  j["k_u"] = pop.k_u;
  j["a_star"] = mat_to_json(pop.a_star);
  j["b_u_star"] = mat_to_json(pop.b_u_star);
  j["sigma_zeta_u"] = mat_to_json(pop.sigma_zeta_u);
  j["sigma_eps"] = vec_to_json(pop.sigma_eps);
  j["sigma_x"] = mat_to_json(pop.sigma_x);
  return j;
}

cfm::PopulationModel model_from_json(const json& j) {
  return cfm::build_population(mat_from_json(j.at("a_star")),
                               mat_from_json(j.at("b_u_star")),
                               mat_from_json(j.at("sigma_zeta_u")),
                               vec_from_json(j.at("sigma_eps")),
                               mat_from_json(j.at("sigma_x")));
}

json estimate_to_json(const cfm::BlockPrecision& est) {
  json j;
  j["p"] = est.p;
  j["q"] = est.q;
  j["theta"] = mat_to_json(est.theta);
  j["d_y"] = vec_to_json(est.d_y);
  j["l_y"] = mat_to_json(est.l_y);
  return j;
}

json report_to_json(const cfm::SolveReport& rep) {
  json j;
  j["converged"] = rep.converged;
  j["iterations"] = rep.iterations;
  j["objective"] = rep.objective;
  j["primal_residual"] = rep.primal_residual;
  j["dual_residual"] = rep.dual_residual;
  j["rank_l_y"] = rep.rank_l_y;
  j["rank_theta_yx"] = rep.rank_theta_yx;
  j["estimate"] = estimate_to_json(rep.estimate);
  return j;
}

cfm::FactorModelParams factor_from_json(const json& j) {
  return {vec_from_json(j.at("d")), mat_from_json(j.at("l"))};
}

json factor_to_json(const cfm::FactorModelParams& fm) {
  json j;
  j["d"] = vec_to_json(fm.d);
  j["l"] = mat_to_json(fm.l);
  return j;
}

struct SolverFlags {
  cfm::SolverOptions opts;
  bool strict = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--lambda", opts.lambda_n, "regularization weight");
    cmd->add_option("--gamma", opts.gamma, "cross-block tradeoff");
    cmd->add_option("--rho", opts.rho_admm, "initial splitting penalty");
    cmd->add_option("--max-iters", opts.max_iters);
    cmd->add_option("--tol", opts.tol_primal)
        ->each([this](const std::string&) { opts.tol_dual = opts.tol_primal; });
    cmd->add_option("--rank-tol", opts.rank_tol);
    cmd->add_flag("--strict", strict, "exit 3 when the solver fails to converge");
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Composite factor model estimation toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic model");
  int p = 40, q = 10, k_x = 2, k_u = 2, sample_n = 0;
  double cond_bound = 10.0, tau_override = -1.0;
  uint64_t seed = 0;
  std::string out_path = "model.json", data_path;
  synth->add_option("--p", p);
  synth->add_option("--q", q);
  synth->add_option("--kx", k_x);
  synth->add_option("--ku", k_u);
  synth->add_option("--cond", cond_bound);
  synth->add_option("--tau", tau_override, "fixed spectral scale (skips search)");
  synth->add_option("--seed", seed);
  synth->add_option("-o,--output", out_path);
  synth->add_option("--sample", sample_n, "also draw this many observations");
  synth->add_option("--data", data_path, "csv path for sampled observations");

  // fit-composite
  auto* fitc = app.add_subcommand("fit-composite", "fit the joint program");
  std::string fitc_data, fitc_out = "fit.json";
  SolverFlags fitc_flags;
  fitc->add_option("--data", fitc_data)->required();
  fitc->add_option("-o,--output", fitc_out);
  fitc_flags.attach(fitc);

  // fit-factor
  auto* fitf = app.add_subcommand("fit-factor", "fit the factor-only program");
  std::string fitf_data, fitf_out = "factor.json";
  SolverFlags fitf_flags;
  fitf->add_option("--data", fitf_data)->required();
  fitf->add_option("-o,--output", fitf_out);
  fitf_flags.attach(fitf);

  // interpret
  auto* interp = app.add_subcommand(
      "interpret", "sweep, filter, and rank candidates against a factor model");
  std::string interp_data, interp_ref, interp_out = "interpret.json";
  std::string interp_candidates_csv, interp_strengths_csv;
  std::vector<double> lambda_values, gamma_values;
  double angle_min = 5.0;
  int interp_workers = 0;
  SolverFlags interp_flags;
  interp->add_option("--data", interp_data)->required();
  interp->add_option("--reference", interp_ref,
                     "factor model json; omitted -> cross-validated fit");
  interp->add_option("--lambda-values", lambda_values)->delimiter(',');
  interp->add_option("--gamma-values", gamma_values)->delimiter(',');
  interp->add_option("--angle-min", angle_min, "transversality threshold, deg");
  interp->add_option("--workers", interp_workers);
  interp->add_option("-o,--output", interp_out);
  interp->add_option("--candidates-csv", interp_candidates_csv);
  interp->add_option("--strengths-csv", interp_strengths_csv);
  interp_flags.attach(interp);

  // certify
  auto* certify = app.add_subcommand(
      "certify", "estimate the identifiability conditions for a model");
  std::string certify_model, certify_out = "certify.json";
  double c_gamma = 1.0, omega_y = 0.03, omega_yx = 0.03;
  double alpha_req = 0.2, beta_req = 9.0;
  int families = 50, restarts = 20, certify_workers = 0;
  uint64_t certify_seed = 0;
  bool with_constants = false;
  certify->add_option("--model", certify_model)->required();
  certify->add_option("--gamma", c_gamma);
  certify->add_option("--omega-y", omega_y);
  certify->add_option("--omega-yx", omega_yx);
  certify->add_option("--alpha", alpha_req);
  certify->add_option("--beta", beta_req);
  certify->add_option("--families", families);
  certify->add_option("--restarts", restarts);
  certify->add_option("--seed", certify_seed);
  certify->add_option("--workers", certify_workers);
  certify->add_flag("--constants", with_constants,
                    "also emit the consistency-guarantee constants");
  certify->add_option("-o,--output", certify_out);

  // recover-experiment
  auto* recover = app.add_subcommand(
      "recover-experiment", "structure recovery study over sample sizes");
  std::string recover_config, recover_out = "recovery.csv";
  std::vector<std::string> overrides;
  recover->add_option("--config", recover_config, "key=value config file");
  recover->add_option("--set", overrides, "override config entries (key=value)");
  recover->add_option("-o,--output", recover_out);

  // cv
  auto* cv = app.add_subcommand("cv", "cross-validate the factor-only program");
  std::string cv_data, cv_out = "cv.csv", cv_model_out;
  cfm::CvOptions cv_opts;
  cv->add_option("--data", cv_data)->required();
  cv->add_option("--lambda-min", cv_opts.lambda_min);
  cv->add_option("--lambda-max", cv_opts.lambda_max);
  cv->add_option("--lambda-step", cv_opts.lambda_step);
  cv->add_option("--n-test", cv_opts.n_test);
  cv->add_option("--seed", cv_opts.split_seed);
  cv->add_option("-o,--output", cv_out);
  cv->add_option("--model-out", cv_model_out, "best factor model json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  if (synth->parsed()) {
    cfm::PopulationModel pop =
        cfm::generate_synthetic(p, q, k_x, k_u, cond_bound, seed, tau_override);
    write_json(out_path, model_to_json(pop));
    std::cout << "model: p=" << p << " q=" << q << " k_x=" << k_x
              << " k_u=" << k_u << " -> " << out_path << "\n";
    if (sample_n > 0) {
      if (data_path.empty()) data_path = "data.csv";
      cfm::Dataset data = cfm::sample_observations(pop, sample_n, seed);
      cfm::write_dataset_csv(data_path, data);
      std::cout << "sampled " << sample_n << " rows -> " << data_path << "\n";
    }
    return 0;
  }

  if (fitc->parsed()) {
    cfm::Dataset data = cfm::read_dataset_csv(fitc_data);
    cfm::SolveReport rep = cfm::solve_composite(data, fitc_flags.opts);
    json j = report_to_json(rep);
    cfm::KktReport kkt =
        cfm::kkt_residuals(rep.estimate, data.sample_cov, fitc_flags.opts.lambda_n,
                           fitc_flags.opts.gamma, fitc_flags.opts.rank_tol);
    j["kkt_max_residual"] = kkt.max_residual();
    write_json(fitc_out, j);
    std::cout << (rep.converged ? "converged" : "NOT converged") << " in "
              << rep.iterations << " iterations; ranks (l, yx) = ("
              << rep.rank_l_y << ", " << rep.rank_theta_yx << ")\n";
    return rep.converged || !fitc_flags.strict ? 0 : kExitNonConverged;
  }

  if (fitf->parsed()) {
    cfm::Dataset data = cfm::read_dataset_csv(fitf_data);
    auto [fm, rep] =
        cfm::solve_factor(data, fitf_flags.opts.lambda_n, fitf_flags.opts);
    json j = report_to_json(rep);
    j["factor_model"] = factor_to_json(fm);
    write_json(fitf_out, j);
    std::cout << (rep.converged ? "converged" : "NOT converged")
              << "; rank(L) = " << rep.rank_l_y << "\n";
    return rep.converged || !fitf_flags.strict ? 0 : kExitNonConverged;
  }

  if (interp->parsed()) {
    cfm::Dataset data = cfm::read_dataset_csv(interp_data);
    cfm::FactorModelParams ref;
    if (!interp_ref.empty()) {
      ref = factor_from_json(load_json(interp_ref));
    } else {
      cfm::CvOptions co;
      co.solver = interp_flags.opts;
      ref = cfm::cross_validate_factor(data, co).best;
      std::cout << "reference factor model from cross-validation, rank "
                << cfm::numerical_rank(ref.l, interp_flags.opts.rank_tol)
                << "\n";
    }
    cfm::SweepGrid grid = cfm::SweepGrid::default_grid();
    if (!lambda_values.empty()) grid.lambda_values = lambda_values;
    if (!gamma_values.empty()) grid.gamma_values = gamma_values;
    cfm::SweepResult sweep =
        cfm::sweep_grid(data, grid, interp_flags.opts, interp_workers);
    auto selected = cfm::select_models(sweep.candidates, ref,
                                       interp_flags.opts.rank_tol, angle_min);
    if (!interp_candidates_csv.empty())
      cfm::write_candidates_csv(interp_candidates_csv, sweep.candidates);

    json j;
    j["grid_points"] = grid.lambda_values.size() * grid.gamma_values.size();
    j["non_converged"] = sweep.non_converged;
    json by_d = json::object();
    for (const auto& [d, res] : selected) {
      json r;
      r["lambda"] = res.chosen.lambda_n;
      r["gamma"] = res.chosen.gamma;
      r["rank_l"] = res.chosen.rank_l;
      r["deviation"] = res.chosen.deviation ? *res.chosen.deviation : -1.0;
      r["strengths"] = vec_to_json(res.strengths);
      by_d[std::to_string(d)] = std::move(r);
    }
    j["selected"] = std::move(by_d);
    write_json(interp_out, j);

    if (!interp_strengths_csv.empty() && !selected.empty()) {
      // strengths of the largest interpretable dimension, one row per covariate
      const auto& res = selected.rbegin()->second;
      cfm::CsvTable t;
      t.header = {"covariate", "strength"};
      t.values.resize(data.q, 2);
      for (int i = 0; i < data.q; ++i)
        t.values.row(i) << i + 1,
            (i < res.strengths.size() ? res.strengths(i) : 0.0);
      cfm::write_csv(interp_strengths_csv, t);
    }
    std::cout << "selected dimensions:";
    for (const auto& [d, res] : selected) std::cout << " " << d;
    std::cout << "\n";
    return 0;
  }

  if (certify->parsed()) {
    cfm::PopulationModel pop = model_from_json(load_json(certify_model));
    cfm::EstimatorOptions eo;
    eo.restarts = restarts;
    eo.seed = certify_seed;
    cfm::AssumptionReport rep = cfm::verify_assumptions(
        pop, c_gamma, omega_y, omega_yx, alpha_req, beta_req, families,
        certify_seed, eo, certify_workers);
    json j;
    j["chi_min"] = rep.chi_min;
    j["xi_min"] = rep.xi_min;
    j["varphi_max"] = rep.varphi_max;
    j["alpha"] = rep.alpha;
    j["beta_implied"] = rep.beta_implied;
    j["chi_pass"] = rep.chi_pass;
    j["xi_pass"] = rep.xi_pass;
    j["varphi_pass"] = rep.varphi_pass;
    j["families_evaluated"] = rep.families_evaluated;
    j["families_skipped"] = rep.families_skipped;
    j["max_angle_deg"] = rep.max_angle_deg;
    if (with_constants) {
      cfm::TheoremConstants tc = cfm::theorem_bounds(
          pop, alpha_req, beta_req, c_gamma, omega_y, omega_yx);
      json c;
      c["psi"] = tc.psi;
      c["m"] = tc.m;
      c["m_bar"] = tc.m_bar;
      c["kappa"] = tc.kappa;
      c["c_tilde"] = tc.c_tilde;
      c["c0"] = tc.c0;
      c["c_samp"] = tc.c_samp;
      c["c1"] = tc.c1;
      c["c_sigma"] = tc.c_sigma;
      c["c_prob"] = tc.c_prob;
      c["n_min"] = tc.n_min();
      auto [lo, hi] = tc.lambda_interval(tc.n_min());
      c["lambda_interval_at_n_min"] = json::array({lo, hi});
      c["lambda_feasible_at_n_min"] = tc.lambda_feasible(tc.n_min());
      j["constants"] = std::move(c);
    }
    write_json(certify_out, j);
    auto line = [](const char* name, double value, bool pass) {
      std::cout << name << "  " << value << "  " << (pass ? "pass" : "FAIL")
                << "\n";
    };
    line("chi_min   ", rep.chi_min, rep.chi_pass);
    line("xi_min    ", rep.xi_min, rep.xi_pass);
    line("varphi_max", rep.varphi_max, rep.varphi_pass);
    return rep.all_pass() ? 0 : kExitNonConverged;
  }

  if (recover->parsed()) {
    cfm::KeyValueConfig kv;
    if (!recover_config.empty()) kv = cfm::KeyValueConfig::load(recover_config);
    for (const auto& ov : overrides) {
      size_t eq = ov.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("--set expects key=value");
      kv.set(ov.substr(0, eq), ov.substr(eq + 1));
    }
    cfm::RecoveryConfig rc = cfm::RecoveryConfig::from_config(kv);
    auto cells = cfm::run_recovery_experiment(rc);
    cfm::write_recovery_csv(recover_out, cells);
    for (const auto& c : cells)
      std::cout << "(" << c.k_x << "," << c.k_u << ") n=" << c.n
                << " recovery=" << c.recovery_fraction
                << " deviation=" << c.mean_deviation << "\n";
    return 0;
  }

  if (cv->parsed()) {
    cfm::Dataset data = cfm::read_dataset_csv(cv_data);
    cfm::CvResult result = cfm::cross_validate_factor(data, cv_opts);
    cfm::write_cv_csv(cv_out, result);
    if (!cv_model_out.empty())
      write_json(cv_model_out, factor_to_json(result.best));
    std::cout << "best rank " << result.best_point.rank << " at lambda "
              << result.best_point.lambda << " (test loglik "
              << result.best_point.test_loglik << ", " << result.skipped
              << " points skipped)\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}
