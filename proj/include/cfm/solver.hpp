#pragma once

#include "cfm/population.hpp"
#include "cfm/prox.hpp"

namespace cfm {

struct SolverOptions {
  double lambda_n = 0.1;
  double gamma = 1.0;      // ignored by the factor-only program
  double rho_admm = 1.0;   // initial ADMM penalty, self-tuned
  int max_iters = 5000;
  double tol_primal = 1e-6;
  double tol_dual = 1e-6;
  double rank_tol = 1e-3;

  void validate() const;
};

struct SolveReport {
  BlockPrecision estimate;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  int rank_l_y = 0;
  int rank_theta_yx = 0;
};

/// Regularized maximum-likelihood fit of the joint precision with
/// diagonal-minus-low-rank y block and nuclear-norm penalized cross block.
/// Non-convergence is reported via the flag, not an exception.
SolveReport solve_composite(const Dataset& data, const SolverOptions& opts,
                            const BlockPrecision* warm_start = nullptr);

/// Factor-only specialization (no covariates): minimizes
/// -l(D - L; D_n) + lambda_tilde tr(L) over D diagonal, L >= 0, D - L > 0.
std::pair<FactorModelParams, SolveReport> solve_factor(
    const Dataset& data, double lambda_tilde, const SolverOptions& opts,
    const BlockPrecision* warm_start = nullptr);

/// Stationarity / subgradient violations at an estimate, with
/// S = grad of the likelihood term (the cross block carries a factor 2
/// because it appears twice in the assembled matrix).
struct KktReport {
  double x_block = 0.0;        // ||S_x||_2
  double diag_y = 0.0;         // max |diag(S_y)|
  double l_tangent = 0.0;      // ||P_T(S_y) - lambda U U'||_2
  double l_orth_excess = 0.0;  // max(lambda_max(P_T_perp(S_y)) - lambda, 0)
  double yx_tangent = 0.0;     // ||P_T(S_yx) + lambda gamma U V'||_2
  double yx_orth_excess = 0.0;

  double max_residual() const {
    return std::max({x_block, diag_y, l_tangent, l_orth_excess, yx_tangent,
                     yx_orth_excess});
  }
};

KktReport kkt_residuals(const BlockPrecision& est, const Matrix& sample_cov,
                        double lambda_n, double gamma,
                        double rank_tol = 1e-3);

}  // namespace cfm
