#include "cfm/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "cfm/tangent.hpp"

namespace cfm {

void SolverOptions::validate() const {
  if (lambda_n < 0) throw std::invalid_argument("lambda_n must be >= 0");
  if (!(gamma > 0)) throw std::invalid_argument("gamma must be > 0");
  if (!(rho_admm > 0)) throw std::invalid_argument("rho_admm must be > 0");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (!(tol_primal > 0 && tol_dual > 0))
    throw std::invalid_argument("tolerances must be > 0");
}

namespace {

// Consensus ADMM on  min -logdet Z + <S_n, Z> + lambda [gamma ||K||_* + tr L]
//   s.t.  Z = F(D, L, K, O), D diagonal, L >= 0.
// The y-x block enters ||Z - F||_F^2 twice, hence the lambda*gamma/(2 rho)
// threshold in the K update.
SolveReport admm_solve(const Matrix& sample_cov, int p, int q,
                       const SolverOptions& opts,
                       const BlockPrecision* warm_start) {
  opts.validate();
  const int d = p + q;
  const double lambda = opts.lambda_n;
  double rho = opts.rho_admm;

  // initialization: ridge-regularized inverse sample covariance
  Vector d_diag;
  Matrix l, k, o, z, u;
  if (warm_start != nullptr) {
    d_diag = warm_start->d_y;
    l = warm_start->l_y;
    k = warm_start->theta_yx();
    o = warm_start->theta_x();
    z = warm_start->theta;
    u = Matrix::Zero(d, d);
  } else {
    double ridge = 1e-3 * sample_cov.trace() / d;
    Matrix theta0 = symmetrize(
        (sample_cov + ridge * Matrix::Identity(d, d))
            .llt()
            .solve(Matrix::Identity(d, d)));
    d_diag = theta0.topLeftCorner(p, p).diagonal().cwiseMax(1e-8);
    l = Matrix::Zero(p, p);
    k = theta0.topRightCorner(p, q);
    o = theta0.bottomRightCorner(q, q);
    z = block_assemble({Matrix(d_diag.asDiagonal()), l, k, o},
                       AssembleMode::F);
    u = Matrix::Zero(d, d);
  }

  Matrix f_s = block_assemble({Matrix(d_diag.asDiagonal()), l, k, o},
                              AssembleMode::F);
  double prim_rel = 0.0, dual_rel = 0.0;
  int iter = 0;
  bool converged = false;

  for (iter = 1; iter <= opts.max_iters; ++iter) {
    z = prox_logdet(f_s - u, sample_cov, rho);

    Matrix v = z + u;
    Matrix v_y = symmetrize(v.topLeftCorner(p, p));
    Matrix v_yx = 0.5 * (v.topRightCorner(p, q) +
                         v.bottomLeftCorner(q, p).transpose());
    Matrix v_x = symmetrize(v.bottomRightCorner(q, q));

    // one Gauss-Seidel pass over the structured blocks
    d_diag = (v_y + l).diagonal();
    l = prox_trace_psd(Matrix(d_diag.asDiagonal()) - v_y, lambda / rho);
    d_diag = (v_y + l).diagonal();
    k = prox_nuclear(v_yx, lambda * opts.gamma / (2.0 * rho));
    o = v_x;

    Matrix f_prev = f_s;
    f_s = block_assemble({Matrix(d_diag.asDiagonal()), l, k, o},
                         AssembleMode::F);
    u += z - f_s;

    double prim = (z - f_s).norm();
    double dual = rho * (f_s - f_prev).norm();
    double prim_scale = std::max({z.norm(), f_s.norm(), 1e-12});
    double dual_scale = std::max({rho * u.norm(), f_s.norm(), 1e-12});
    prim_rel = prim / prim_scale;
    dual_rel = dual / dual_scale;

    if (prim_rel <= opts.tol_primal && dual_rel <= opts.tol_dual) {
      converged = true;
      break;
    }

    // residual balancing
    if (prim > 10.0 * dual) {
      rho *= 2.0;
      u *= 0.5;
    } else if (dual > 10.0 * prim) {
      rho *= 0.5;
      u *= 2.0;
    }
  }

  SolveReport rep;
  rep.estimate.p = p;
  rep.estimate.q = q;
  rep.estimate.theta = f_s;
  rep.estimate.d_y = d_diag;
  rep.estimate.l_y = l;
  rep.primal_residual = prim_rel;
  rep.dual_residual = dual_rel;
  rep.iterations = std::min(iter, opts.max_iters);
  rep.converged = converged;
  rep.rank_l_y = numerical_rank(l, opts.rank_tol);
  rep.rank_theta_yx = numerical_rank(k, opts.rank_tol);

  Eigen::LLT<Matrix> llt(symmetrize(f_s));
  if (llt.info() == Eigen::Success) {
    double logdet = 0.0;
    for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    double nuc = 0.0;
    if (q > 0) nuc = Eigen::JacobiSVD<Matrix>(k).singularValues().sum();
    rep.objective = -logdet + f_s.cwiseProduct(sample_cov).sum() +
                    lambda * (opts.gamma * nuc + l.trace());
  } else {
    // assembled point drifted outside the PD cone: fall back to the
    // consensus iterate for reporting
    rep.estimate.theta = z;
    rep.converged = false;
    rep.objective = neg_log_likelihood(z, sample_cov) +
                    lambda * (opts.gamma *
                                  Eigen::JacobiSVD<Matrix>(k)
                                      .singularValues()
                                      .sum() +
                              l.trace());
  }
  return rep;
}

}  // namespace

SolveReport solve_composite(const Dataset& data, const SolverOptions& opts,
                            const BlockPrecision* warm_start) {
  if (data.q <= 0)
    throw std::invalid_argument("solve_composite: data must carry covariates");
  return admm_solve(data.sample_cov, data.p, data.q, opts, warm_start);
}

std::pair<FactorModelParams, SolveReport> solve_factor(
    const Dataset& data, double lambda_tilde, const SolverOptions& opts,
    const BlockPrecision* warm_start) {
  if (!(lambda_tilde >= 0))
    throw std::invalid_argument("solve_factor: lambda_tilde must be >= 0");
  SolverOptions o = opts;
  o.lambda_n = lambda_tilde;
  Matrix cov_y = data.sample_cov.topLeftCorner(data.p, data.p);
  SolveReport rep = admm_solve(cov_y, data.p, 0, o, warm_start);
  FactorModelParams fm{rep.estimate.d_y, rep.estimate.l_y};
  return {fm, rep};
}

KktReport kkt_residuals(const BlockPrecision& est, const Matrix& sample_cov,
                        double lambda_n, double gamma, double rank_tol) {
  const int p = est.p, q = est.q;
  Matrix grad = sample_cov - symmetrize(est.theta.llt().solve(
                                 Matrix::Identity(p + q, p + q)));
  Matrix s_y = grad.topLeftCorner(p, p);
  // K enters theta twice, so the gradient wrt the cross block carries a 2
  Matrix s_yx = 2.0 * grad.topRightCorner(p, q);
  Matrix s_x = grad.bottomRightCorner(q, q);

  KktReport rep;
  rep.x_block = q > 0 ? spectral_norm(s_x) : 0.0;
  rep.diag_y = s_y.diagonal().cwiseAbs().maxCoeff();

  // trace penalty over the PSD cone: S_y u = lambda u on the column space,
  // and S_y <= lambda I on the complement (one-sided: negative directions
  // are unconstrained)
  auto max_eig = [](const Matrix& m) {
    return m.size() > 0
               ? Eigen::SelfAdjointEigenSolver<Matrix>(symmetrize(m))
                     .eigenvalues()
                     .maxCoeff()
               : 0.0;
  };
  int r_l = numerical_rank(est.l_y, rank_tol);
  if (r_l > 0) {
    TangentSpace t = tangent_of(symmetrize(est.l_y), r_l, rank_tol * 1e-3);
    Matrix uv = t.col_basis * t.row_basis.transpose();
    rep.l_tangent = spectral_norm(t.project(s_y) - lambda_n * uv);
    rep.l_orth_excess =
        std::max(max_eig(t.project_complement(s_y)) - lambda_n, 0.0);
  } else {
    rep.l_tangent = 0.0;
    rep.l_orth_excess = std::max(max_eig(s_y) - lambda_n, 0.0);
  }

  if (q > 0) {
    int r_k = numerical_rank(est.theta_yx(), rank_tol);
    if (r_k > 0) {
      TangentSpace t = tangent_of(est.theta_yx(), r_k, rank_tol * 1e-3);
      Matrix uv = t.col_basis * t.row_basis.transpose();
      rep.yx_tangent = spectral_norm(t.project(s_yx) + lambda_n * gamma * uv);
      rep.yx_orth_excess = std::max(
          spectral_norm(t.project_complement(s_yx)) - lambda_n * gamma, 0.0);
    } else {
      rep.yx_orth_excess =
          std::max(spectral_norm(s_yx) - lambda_n * gamma, 0.0);
    }
  }
  return rep;
}

}  // namespace cfm
