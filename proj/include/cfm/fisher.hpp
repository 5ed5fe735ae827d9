#pragma once

#include <optional>
#include <vector>

#include "cfm/population.hpp"
#include "cfm/tangent.hpp"

namespace cfm {

/// Fisher information at Theta*: M -> Sigma* M Sigma* (the tensor-square
/// of the covariance, applied as a congruence).
struct FisherOperator {
  Matrix sigma_star;

  Matrix apply(const Matrix& m) const {
    if (m.rows() != sigma_star.rows() || m.cols() != sigma_star.cols())
      throw std::invalid_argument("FisherOperator: shape mismatch");
    return sigma_star * m * sigma_star;
  }
};

/// One member H' = W x T_y x T_yx x S^q of the perturbed-subspace set,
/// identified by its two tangent spaces.
struct SubspaceFamily {
  TangentSpace t_y;   // symmetric, p x p
  TangentSpace t_yx;  // rectangular, p x q
  bool nominal = true;
  double rho_y = 0.0;   // measured rho(t_y, T(L_y*))
  double rho_yx = 0.0;  // measured rho(t_yx, T(Theta_yx*))

  /// Largest tangent angle implied by the measured distortions, degrees.
  double max_angle_deg() const;
};

/// Nominal family plus n_samples perturbed ones whose tangent spaces land in
/// the band rho in [0.8 omega, omega]; samples that fail the bisection search
/// are skipped (counted in skipped).
struct FamilySample {
  std::vector<SubspaceFamily> families;
  int skipped = 0;
};
FamilySample sample_family(const PopulationModel& pop, double omega_y,
                           double omega_yx, int n_samples, uint64_t seed);

struct EstimatorOptions {
  int restarts = 20;
  int max_iters = 300;
  int patience = 40;  // stop a restart after this many non-improving steps
  double ridge = 1e-12;
  uint64_t seed = 0;
};

struct QuantityEstimates {
  double chi = 0.0;
  double xi = 0.0;
  double varphi = 0.0;  // +inf when the restricted operator is singular
};

/// Multi-start first-order estimates of the restricted minimum gains and the
/// irrepresentability measure for one subspace family. chi/xi are reported as
/// the best found value (an upper bound on the true min); varphi as the best
/// found max (a lower bound).
QuantityEstimates estimate_quantities(const FisherOperator& op,
                                      const SubspaceFamily& fam, int p, int q,
                                      double gamma,
                                      const EstimatorOptions& eopts = {});

struct AssumptionReport {
  double chi_min = 0.0;
  double xi_min = 0.0;
  double varphi_max = 0.0;
  double alpha = 0.0;         // = chi_min
  double beta_implied = 0.0;  // 2 / (1 - varphi_max) - 1
  bool chi_pass = false;
  bool xi_pass = false;
  bool varphi_pass = false;
  int families_evaluated = 0;
  int families_skipped = 0;
  double max_angle_deg = 0.0;

  bool all_pass() const { return chi_pass && xi_pass && varphi_pass; }
};

AssumptionReport verify_assumptions(const PopulationModel& pop, double gamma,
                                    double omega_y, double omega_yx,
                                    double alpha_req, double beta_req,
                                    int n_samples, uint64_t seed,
                                    const EstimatorOptions& eopts = {},
                                    int workers = 0);

/// Explicit constant family of the consistency theorem, with the derived
/// sample-size, regularization-interval and error-bound calculators.
struct TheoremConstants {
  double psi = 0.0;
  double m = 0.0;
  double m_bar = 0.0;
  double kappa = 0.0;
  double c_tilde = 0.0;
  double c0 = 0.0;
  double c_samp = 0.0;
  double c1 = 0.0;
  double c_sigma = 0.0;
  double c_prob = 0.0;

  double alpha = 0.0, beta = 0.0, gamma = 0.0;
  double omega_y = 0.0, omega_yx = 0.0;
  int p = 0, q = 0;

  double n_min() const;
  /// [lower(n), upper]; empty (flagged) when lower > upper.
  std::pair<double, double> lambda_interval(double n) const;
  bool lambda_feasible(double n) const;
  double sigma_y_threshold(double lambda_n) const;
  double sigma_yx_threshold(double lambda_n) const;
  double error_bound_d(double lambda_n) const;
  double error_bound_l(double lambda_n) const { return error_bound_d(lambda_n); }
  double error_bound_yx(double lambda_n) const;
  double error_bound_x(double lambda_n) const { return error_bound_d(lambda_n); }
  double success_probability(double n, double lambda_n) const;
};

TheoremConstants theorem_bounds(double psi, double alpha, double beta,
                                double gamma, double omega_y, double omega_yx,
                                int p, int q);
TheoremConstants theorem_bounds(const PopulationModel& pop, double alpha,
                                double beta, double gamma, double omega_y,
                                double omega_yx);

struct RemainderCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
};

/// Second-order remainder bound: for admissible Delta
/// (Phi_gamma[Delta] <= 1/(2 C') with C' = (3+gamma) psi),
/// Phi_gamma[F' R(F(Delta))] <= 2 m psi C'^2 Phi_gamma[Delta]^2 where
/// R(E) = (Theta* + E)^{-1} - Sigma* + Sigma* E Sigma*.
RemainderCheck remainder_check(const PopulationModel& pop,
                               const BlockTuple& delta, double gamma);

}  // namespace cfm
