#pragma once

#include <string>
#include <vector>

#include "cfm/block_ops.hpp"
#include "cfm/rng.hpp"

namespace cfm {

/// Ground-truth composite model y = A x + B_u zeta_u + eps with its derived
/// joint covariance/precision structure.
struct PopulationModel {
  Matrix a_star;        // p x q
  Matrix b_u_star;      // p x k_u
  Matrix sigma_zeta_u;  // k_u x k_u, PD
  Vector sigma_eps;     // diagonal of the p x p noise covariance
  Matrix sigma_x;       // q x q, PD

  // derived
  Matrix sigma_star;  // (p+q) x (p+q)
  Matrix theta_star;  // inverse of sigma_star
  Vector d_y_star;    // diagonal of D_y*
  Matrix l_y_star;    // p x p PSD, rank k_u
  int k_x = 0;
  int k_u = 0;

  int p() const { return static_cast<int>(a_star.rows()); }
  int q() const { return static_cast<int>(a_star.cols()); }

  Matrix theta_y() const { return theta_star.topLeftCorner(p(), p()); }
  Matrix theta_yx() const { return theta_star.topRightCorner(p(), q()); }
  Matrix theta_x() const { return theta_star.bottomRightCorner(q(), q()); }

  /// Minimum nonzero singular values of L_y* and Theta_yx*.
  double sigma_y() const;
  double sigma_yx() const;

  BlockPrecision as_precision() const;
};

/// Factor model for y alone, in precision form: precision = diag(d) - l.
struct FactorModelParams {
  Vector d;  // diagonal p-vector
  Matrix l;  // p x p, PSD

  Matrix precision() const { return Matrix(d.asDiagonal()) - l; }
};

struct Dataset {
  Matrix rows;        // n x (p+q), or n x p when covariates absent
  int p = 0;          // response columns
  int q = 0;          // covariate columns (0 when absent)
  Matrix sample_cov;  // (1/n) sum z z'

  int n() const { return static_cast<int>(rows.rows()); }
  static Dataset from_rows(Matrix rows, int p, int q);
};

PopulationModel build_population(const Matrix& a, const Matrix& b_u,
                                 const Matrix& sigma_zeta_u,
                                 const Vector& sigma_eps,
                                 const Matrix& sigma_x);

/// Marginalizing x: (D_y*, L_y* + Theta_yx* Theta_x*^{-1} Theta_xy*).
FactorModelParams marginalize_factor(const PopulationModel& pop);

struct RecoveredParams {
  Matrix a_hat;          // p x q
  Matrix b_u_hat;        // p x rank(L_y)
  Vector sigma_eps_hat;  // diagonal of noise covariance
};

RecoveredParams recover_parameters(const BlockPrecision& est,
                                   double rank_rel_tol = 1e-3);

Dataset sample_observations(const PopulationModel& pop, int n, uint64_t seed);

/// Random model: A* = J K' with iid Gaussian factors, B_u* iid Gaussian,
/// identity noise covariances, common spectral norm tau chosen by bisection
/// as large as possible while cond(Theta*) <= cond_bound. tau_override > 0
/// skips the search and fixes the scale.
PopulationModel generate_synthetic(int p, int q, int k_x, int k_u,
                                   double cond_bound, uint64_t seed,
                                   double tau_override = -1.0);

}  // namespace cfm
