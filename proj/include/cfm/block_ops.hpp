#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace cfm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// 4-tuple (d, l, k, o) of blocks: d, l are p x p symmetric, k is p x q,
/// o is q x q symmetric. The first component is fully symmetric in general;
/// callers that require a diagonal first component enforce it themselves.
struct BlockTuple {
  Matrix d;  // p x p symmetric
  Matrix l;  // p x p symmetric
  Matrix k;  // p x q
  Matrix o;  // q x q symmetric

  int p() const { return static_cast<int>(d.rows()); }
  int q() const { return static_cast<int>(o.rows()); }

  static BlockTuple Zero(int p, int q) {
    return {Matrix::Zero(p, p), Matrix::Zero(p, p), Matrix::Zero(p, q),
            Matrix::Zero(q, q)};
  }

  BlockTuple operator+(const BlockTuple& r) const {
    return {d + r.d, l + r.l, k + r.k, o + r.o};
  }
  BlockTuple operator-(const BlockTuple& r) const {
    return {d - r.d, l - r.l, k - r.k, o - r.o};
  }
  BlockTuple operator*(double s) const { return {d * s, l * s, k * s, o * s}; }
};

/// Joint precision estimate with its (D_y, L_y) decomposition of the y block.
struct BlockPrecision {
  int p = 0;
  int q = 0;
  Matrix theta;  // (p+q) x (p+q), positive definite
  Vector d_y;    // diagonal of D_y
  Matrix l_y;    // p x p, PSD up to solver tolerance

  Matrix theta_y() const { return theta.topLeftCorner(p, p); }
  Matrix theta_yx() const { return theta.topRightCorner(p, q); }
  Matrix theta_x() const { return theta.bottomRightCorner(q, q); }

  /// Checks theta_y == diag(d_y) - l_y within tol and l_y >= -eps I.
  void validate(double assembly_tol = 1e-12, double psd_eps = 1e-8) const;
};

/// Euclidean inner product on the tuple space (each block counted once).
double tuple_dot(const BlockTuple& a, const BlockTuple& b);
double tuple_frob(const BlockTuple& a);

struct NormParams {
  double gamma = 1.0;

  explicit NormParams(double g) : gamma(g) {
    if (!(g > 0)) throw std::invalid_argument("gamma must be positive");
  }
  double m() const { return std::max(1.0, 1.0 / gamma); }
  double m_bar() const { return std::max(1.0, gamma); }
};

enum class AssembleMode { F, G };

/// F(d,l,k,o) = [[d-l, k],[k', o]];  G ignores d and o: [[l, k],[k', 0]].
Matrix block_assemble(const BlockTuple& t, AssembleMode mode);

/// Adjoints of F and G. F'([[Q,K],[K',O]]) = (Q, Q, K, O);
/// G'([[Q,K],[K',O]]) = (Q, K) stored with d = Q, o = 0.
BlockTuple block_adjoint(const Matrix& m, int p, int q, AssembleMode mode);

double spectral_norm(const Matrix& m);

/// Phi_gamma = max{||d||_2, ||l||_2, ||k||_2 / gamma, ||o||_2}
double norm_phi(const BlockTuple& t, const NormParams& params);

/// Gamma_gamma = max{||l||_2, ||k||_2 / gamma}
double norm_gamma(const Matrix& l, const Matrix& k, const NormParams& params);

/// Convenience splits of a (p+q) x (p+q) symmetric matrix.
struct BlockView {
  Matrix y;    // p x p
  Matrix yx;   // p x q
  Matrix x;    // q x q
};
BlockView split_blocks(const Matrix& m, int p, int q);

Matrix symmetrize(const Matrix& m);

}  // namespace cfm
