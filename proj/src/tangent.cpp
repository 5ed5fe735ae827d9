#include "cfm/tangent.hpp"

#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "cfm/rng.hpp"

namespace cfm {

Matrix TangentSpace::project(const Matrix& m) const {
  if (m.rows() != rows || m.cols() != cols)
    throw std::invalid_argument("TangentSpace::project: shape mismatch");
  Matrix pu_m = col_basis * (col_basis.transpose() * m);
  Matrix m_pv = (m * row_basis) * row_basis.transpose();
  Matrix pu_m_pv = pu_m * row_basis * row_basis.transpose();
  return pu_m + m_pv - pu_m_pv;
}

int TangentSpace::dim() const {
  if (kind == Kind::Symmetric) return rows * rank - rank * (rank - 1) / 2;
  return rank * (rows + cols - rank);
}

TangentSpace tangent_of(const Matrix& n, int r, double rank_rel_tol) {
  TangentSpace t;
  t.rows = static_cast<int>(n.rows());
  t.cols = static_cast<int>(n.cols());
  t.rank = r;
  if (r < 0) throw std::invalid_argument("tangent_of: negative rank");
  const bool symmetric =
      n.rows() == n.cols() && (n - n.transpose()).norm() <= 1e-12 * (1.0 + n.norm());
  if (r > numerical_rank(n, rank_rel_tol))
    throw std::invalid_argument("tangent_of: rank exceeds numerical rank");
  if (symmetric) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(n);
    // top-r by |eigenvalue|
    Vector evals = es.eigenvalues();
    std::vector<int> idx(evals.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      return std::abs(evals(a)) > std::abs(evals(b));
    });
    Matrix basis(n.rows(), r);
    for (int j = 0; j < r; ++j) basis.col(j) = es.eigenvectors().col(idx[j]);
    t.kind = TangentSpace::Kind::Symmetric;
    t.col_basis = basis;
    t.row_basis = basis;
  } else {
    Eigen::JacobiSVD<Matrix> svd(n, Eigen::ComputeThinU | Eigen::ComputeThinV);
    t.kind = TangentSpace::Kind::Rectangular;
    t.col_basis = svd.matrixU().leftCols(r);
    t.row_basis = svd.matrixV().leftCols(r);
  }
  return t;
}

namespace {

Matrix random_unit_spectral(int rows, int cols, bool symmetric, CounterRng& rng) {
  Matrix m = rng.gaussian_matrix(rows, cols);
  if (symmetric) m = symmetrize(m);
  double s = spectral_norm(m);
  return s > 0 ? Matrix(m / s) : m;
}

// Polar factor: argmax over the unit spectral ball of <g, M>.
Matrix polar_factor(const Matrix& g, bool symmetric) {
  if (symmetric) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(g));
    Vector signs = es.eigenvalues().unaryExpr(
        [](double v) { return v >= 0 ? 1.0 : -1.0; });
    return es.eigenvectors() * signs.asDiagonal() *
           es.eigenvectors().transpose();
  }
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace

double rho_distance(const TangentSpace& t1, const TangentSpace& t2,
                    unsigned seed, int restarts, int iters, double tol) {
  if (t1.rows != t2.rows || t1.cols != t2.cols || t1.kind != t2.kind)
    throw std::invalid_argument("rho_distance: incompatible tangent spaces");
  const bool symmetric = t1.kind == TangentSpace::Kind::Symmetric;
  auto apply = [&](const Matrix& m) -> Matrix {
    return t1.project(m) - t2.project(m);
  };
  CounterRng rng(seed, 0x7e5);
  double best = 0.0;
  for (int r = 0; r < restarts; ++r) {
    Matrix m = random_unit_spectral(t1.rows, t1.cols, symmetric, rng);
    double prev = -1.0;
    for (int it = 0; it < iters; ++it) {
      Matrix img = apply(m);
      double val = spectral_norm(img);
      if (val <= 1e-15) break;
      best = std::max(best, val);
      if (std::abs(val - prev) <= tol * std::max(1.0, val)) break;
      prev = val;
      // conditional-gradient step for the convex objective ||A(m)||_2
      Eigen::JacobiSVD<Matrix> svd(img,
                                   Eigen::ComputeThinU | Eigen::ComputeThinV);
      Matrix subgrad = svd.matrixU().col(0) * svd.matrixV().col(0).transpose();
      if (symmetric) subgrad = symmetrize(subgrad);
      m = polar_factor(apply(subgrad), symmetric);
    }
  }
  return best;
}

double coherence(const Matrix& basis) {
  Matrix gram = basis.transpose() * basis;
  if ((gram - Matrix::Identity(gram.rows(), gram.cols())).norm() > 1e-8)
    throw std::invalid_argument("coherence: basis columns not orthonormal");
  double best = 0.0;
  for (int i = 0; i < basis.rows(); ++i)
    best = std::max(best, basis.row(i).squaredNorm());
  return best;
}

int numerical_rank(const Matrix& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Vector sv = Eigen::JacobiSVD<Matrix>(m).singularValues();
  if (sv.size() == 0 || sv(0) <= 0) return 0;
  const double cut = rel_tol * sv(0);
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++r;
  return r;
}

double min_principal_angle(const Matrix& u1, const Matrix& u2) {
  if (u1.rows() != u2.rows())
    throw std::invalid_argument("min_principal_angle: ambient mismatch");
  if (u1.cols() == 0 || u2.cols() == 0) return 90.0;
  double c = spectral_norm(u1.transpose() * u2);
  c = std::clamp(c, -1.0, 1.0);
  return std::acos(c) * 180.0 / M_PI;
}

Matrix column_space_basis(const Matrix& m, double rel_tol) {
  int r = numerical_rank(m, rel_tol);
  if (r == 0) return Matrix(m.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
  return svd.matrixU().leftCols(r);
}

}  // namespace cfm
