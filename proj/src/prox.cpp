#include "cfm/prox.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace cfm {

double neg_log_likelihood(const Matrix& theta, const Matrix& sample_cov) {
  Eigen::LLT<Matrix> llt(symmetrize(theta));
  if (llt.info() != Eigen::Success)
    throw std::domain_error("neg_log_likelihood: theta not positive definite");
  double logdet = 0.0;
  for (int i = 0; i < theta.rows(); ++i)
    logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return -logdet + theta.cwiseProduct(sample_cov).sum();
}

Matrix prox_logdet(const Matrix& m, const Matrix& sample_cov, double rho) {
  if (!(rho > 0)) throw std::invalid_argument("prox_logdet: rho must be > 0");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(rho * m - sample_cov));
  Vector z = es.eigenvalues().unaryExpr([rho](double d) {
    return (d + std::sqrt(d * d + 4.0 * rho)) / (2.0 * rho);
  });
  return es.eigenvectors() * z.asDiagonal() * es.eigenvectors().transpose();
}

Matrix prox_nuclear(const Matrix& k, double t) {
  if (t < 0) throw std::invalid_argument("prox_nuclear: t must be >= 0");
  if (t == 0 || k.size() == 0) return k;
  Eigen::JacobiSVD<Matrix> svd(k, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vector s = (svd.singularValues().array() - t).max(0.0);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

Matrix prox_trace_psd(const Matrix& l, double t) {
  if (t < 0) throw std::invalid_argument("prox_trace_psd: t must be >= 0");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(l));
  Vector s = (es.eigenvalues().array() - t).max(0.0);
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace cfm
