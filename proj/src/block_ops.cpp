#include "cfm/block_ops.hpp"

#include <Eigen/SVD>

namespace cfm {

double tuple_dot(const BlockTuple& a, const BlockTuple& b) {
  return a.d.cwiseProduct(b.d).sum() + a.l.cwiseProduct(b.l).sum() +
         a.k.cwiseProduct(b.k).sum() + a.o.cwiseProduct(b.o).sum();
}

double tuple_frob(const BlockTuple& a) { return std::sqrt(tuple_dot(a, a)); }

Matrix block_assemble(const BlockTuple& t, AssembleMode mode) {
  const int p = t.p();
  const int q = static_cast<int>(t.k.cols());
  if (t.l.rows() != p || t.l.cols() != p || t.k.rows() != p)
    throw std::invalid_argument("block_assemble: inconsistent shapes");
  if (mode == AssembleMode::F && (t.o.rows() != q || t.o.cols() != q))
    throw std::invalid_argument("block_assemble: o block shape mismatch");

  Matrix out(p + q, p + q);
  if (mode == AssembleMode::F) {
    out.topLeftCorner(p, p) = t.d - t.l;
    out.bottomRightCorner(q, q) = t.o;
  } else {
    out.topLeftCorner(p, p) = t.l;
    out.bottomRightCorner(q, q).setZero();
  }
  out.topRightCorner(p, q) = t.k;
  out.bottomLeftCorner(q, p) = t.k.transpose();
  return out;
}

BlockTuple block_adjoint(const Matrix& m, int p, int q, AssembleMode mode) {
  if (m.rows() != p + q || m.cols() != p + q)
    throw std::invalid_argument("block_adjoint: split does not match matrix");
  Matrix quad = m.topLeftCorner(p, p);
  Matrix k = m.topRightCorner(p, q);
  if (mode == AssembleMode::F) {
    return {quad, quad, k, m.bottomRightCorner(q, q)};
  }
  // G-domain pair (Q, K): Q occupies the l slot (the argument G reads),
  // mirrored into d for convenience; o is zero.
  return {quad, quad, k, Matrix::Zero(q, q)};
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

double norm_phi(const BlockTuple& t, const NormParams& params) {
  return std::max({spectral_norm(t.d), spectral_norm(t.l),
                   spectral_norm(t.k) / params.gamma, spectral_norm(t.o)});
}

double norm_gamma(const Matrix& l, const Matrix& k, const NormParams& params) {
  return std::max(spectral_norm(l), spectral_norm(k) / params.gamma);
}

BlockView split_blocks(const Matrix& m, int p, int q) {
  if (m.rows() != p + q || m.cols() != p + q)
    throw std::invalid_argument("split_blocks: shape mismatch");
  return {m.topLeftCorner(p, p), m.topRightCorner(p, q),
          m.bottomRightCorner(q, q)};
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

void BlockPrecision::validate(double assembly_tol, double psd_eps) const {
  if (theta.rows() != p + q || d_y.size() != p || l_y.rows() != p)
    throw std::invalid_argument("BlockPrecision: inconsistent shapes");
  Matrix resid = theta_y() - (Matrix(d_y.asDiagonal()) - l_y);
  if (resid.cwiseAbs().maxCoeff() > assembly_tol * std::max(1.0, theta.norm()))
    throw std::invalid_argument("BlockPrecision: theta_y != diag(d_y) - l_y");
  Eigen::SelfAdjointEigenSolver<Matrix> es_l(symmetrize(l_y));
  if (es_l.eigenvalues().minCoeff() < -psd_eps)
    throw std::invalid_argument("BlockPrecision: l_y not PSD within tolerance");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(theta));
  if (es.eigenvalues().minCoeff() <= 0)
    throw std::invalid_argument("BlockPrecision: theta not positive definite");
}

}  // namespace cfm
