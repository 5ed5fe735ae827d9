#pragma once

#include "cfm/block_ops.hpp"

namespace cfm {

/// Tangent space at a rank-r matrix with respect to the variety of
/// matrices of rank at most r, represented by orthonormal column/row bases.
struct TangentSpace {
  enum class Kind { Symmetric, Rectangular };

  Kind kind = Kind::Symmetric;
  Matrix col_basis;  // p x r, orthonormal columns
  Matrix row_basis;  // q x r, equals col_basis when symmetric
  int rows = 0;
  int cols = 0;
  int rank = 0;

  /// P_U M + M P_V - P_U M P_V
  Matrix project(const Matrix& m) const;
  Matrix project_complement(const Matrix& m) const { return m - project(m); }

  /// dim T(N): pr - r(r-1)/2 symmetric, r(p+q-r) rectangular.
  int dim() const;
};

/// Tangent space from the top-r singular subspaces of n.
/// Throws if r exceeds the numerical rank of n.
TangentSpace tangent_of(const Matrix& n, int r, double rank_rel_tol = 1e-8);

/// Largest-angle pseudometric: max over ||M||_2 <= 1 of
/// ||(P_T1 - P_T2)(M)||_2, estimated by power iteration on the induced
/// operator with random restarts.
double rho_distance(const TangentSpace& t1, const TangentSpace& t2,
                    unsigned seed = 0, int restarts = 5, int iters = 200,
                    double tol = 1e-8);

/// Coherence mu(U) = max_i ||P_U e_i||^2 for an orthonormal basis U.
double coherence(const Matrix& basis);

/// Count of singular values exceeding rel_tol * sigma_max. Zero matrix -> 0.
int numerical_rank(const Matrix& m, double rel_tol = 1e-3);

/// Smallest principal angle between the spans, in degrees.
double min_principal_angle(const Matrix& u1, const Matrix& u2);

/// Orthonormal basis of the column space (rank revealed at rel_tol).
Matrix column_space_basis(const Matrix& m, double rel_tol = 1e-3);

}  // namespace cfm
