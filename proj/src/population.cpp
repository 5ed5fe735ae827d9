#include "cfm/population.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "cfm/tangent.hpp"

namespace cfm {

namespace {

double min_nonzero_singular(const Matrix& m, double rel_tol = 1e-9) {
  if (m.size() == 0) return 0.0;
  Vector sv = Eigen::JacobiSVD<Matrix>(m).singularValues();
  if (sv.size() == 0 || sv(0) <= 0) return 0.0;
  double out = 0.0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_tol * sv(0)) out = sv(i);
  return out;
}

void require_pd(const Matrix& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  if (es.eigenvalues().minCoeff() <= 0)
    throw std::invalid_argument(std::string(what) +
                                " must be positive definite");
}

}  // namespace

double PopulationModel::sigma_y() const {
  return min_nonzero_singular(l_y_star);
}

double PopulationModel::sigma_yx() const {
  return min_nonzero_singular(theta_yx());
}

BlockPrecision PopulationModel::as_precision() const {
  BlockPrecision bp;
  bp.p = p();
  bp.q = q();
  bp.theta = theta_star;
  bp.d_y = d_y_star;
  bp.l_y = l_y_star;
  return bp;
}

Dataset Dataset::from_rows(Matrix rows, int p, int q) {
  Dataset d;
  d.p = p;
  d.q = q;
  if (rows.cols() != p + q)
    throw std::invalid_argument("Dataset: column count != p + q");
  d.sample_cov = (rows.transpose() * rows) / double(rows.rows());
  d.rows = std::move(rows);
  return d;
}

PopulationModel build_population(const Matrix& a, const Matrix& b_u,
                                 const Matrix& sigma_zeta_u,
                                 const Vector& sigma_eps,
                                 const Matrix& sigma_x) {
  const int p = static_cast<int>(a.rows());
  const int q = static_cast<int>(a.cols());
  const int k_u_cols = static_cast<int>(b_u.cols());
  if (b_u.rows() != p || sigma_eps.size() != p)
    throw std::invalid_argument("build_population: inconsistent shapes");
  if (sigma_eps.minCoeff() <= 0)
    throw std::invalid_argument("build_population: sigma_eps must be > 0");
  require_pd(sigma_x, "sigma_x");
  if (k_u_cols > 0) require_pd(sigma_zeta_u, "sigma_zeta_u");

  // transversality of column spaces
  Matrix ua = column_space_basis(a, 1e-9);
  Matrix ub = column_space_basis(b_u, 1e-9);
  if (ua.cols() > 0 && ub.cols() > 0) {
    double angle_deg = min_principal_angle(ua, ub);
    if (angle_deg < 1e-6 * 180.0 / M_PI)
      throw std::invalid_argument(
          "build_population: column spaces of A and B_u are not transverse");
  }

  PopulationModel pop;
  pop.a_star = a;
  pop.b_u_star = b_u;
  pop.sigma_zeta_u = sigma_zeta_u;
  pop.sigma_eps = sigma_eps;
  pop.sigma_x = sigma_x;
  pop.k_x = numerical_rank(a, 1e-9);
  pop.k_u = numerical_rank(b_u, 1e-9);

  Matrix low = k_u_cols > 0
                   ? Matrix(b_u * sigma_zeta_u * b_u.transpose())
                   : Matrix(Matrix::Zero(p, p));
  Matrix sigma_y = a * sigma_x * a.transpose() + low +
                   Matrix(sigma_eps.asDiagonal());
  pop.sigma_star.resize(p + q, p + q);
  pop.sigma_star.topLeftCorner(p, p) = sigma_y;
  pop.sigma_star.topRightCorner(p, q) = a * sigma_x;
  pop.sigma_star.bottomLeftCorner(q, p) = (a * sigma_x).transpose();
  pop.sigma_star.bottomRightCorner(q, q) = sigma_x;
  pop.theta_star = symmetrize(pop.sigma_star.llt().solve(
      Matrix::Identity(p + q, p + q)));

  // D_y* = Sigma_eps^{-1}; L_y* via Woodbury on (B_u Sigma_zeta B_u' + Sigma_eps)^{-1}
  pop.d_y_star = sigma_eps.cwiseInverse();
  if (k_u_cols > 0) {
    Matrix eps_inv_b = sigma_eps.cwiseInverse().asDiagonal() * b_u;
    Matrix inner = sigma_zeta_u.llt().solve(
                       Matrix::Identity(k_u_cols, k_u_cols)) +
                   b_u.transpose() * eps_inv_b;
    pop.l_y_star = symmetrize(
        eps_inv_b * inner.llt().solve(eps_inv_b.transpose()));
  } else {
    pop.l_y_star = Matrix::Zero(p, p);
  }
  return pop;
}

FactorModelParams marginalize_factor(const PopulationModel& pop) {
  FactorModelParams fm;
  fm.d = pop.d_y_star;
  Matrix tyx = pop.theta_yx();
  Matrix tx = pop.theta_x();
  fm.l = pop.l_y_star +
         symmetrize(tyx * tx.llt().solve(tyx.transpose()));
  return fm;
}

RecoveredParams recover_parameters(const BlockPrecision& est,
                                   double rank_rel_tol) {
  const int p = est.p;
  Matrix d_inv = est.d_y.cwiseInverse().asDiagonal();
  Matrix theta_y = est.theta_y();
  Eigen::LLT<Matrix> llt(symmetrize(theta_y));
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("recover_parameters: D_y - L_y not PD");
  Matrix diff = symmetrize(llt.solve(Matrix::Identity(p, p)) - d_inv);

  Eigen::SelfAdjointEigenSolver<Matrix> es(diff);
  if (es.eigenvalues().minCoeff() < -1e-8)
    throw std::invalid_argument(
        "recover_parameters: (D-L)^{-1} - D^{-1} indefinite beyond tolerance");

  RecoveredParams out;
  out.a_hat = -llt.solve(est.theta_yx());
  out.sigma_eps_hat = est.d_y.cwiseInverse();

  const int r = numerical_rank(est.l_y, rank_rel_tol);
  out.b_u_hat.resize(p, r);
  // largest r eigenpairs; clamp solver-scale negatives at zero
  for (int j = 0; j < r; ++j) {
    int idx = p - 1 - j;
    double lam = std::max(es.eigenvalues()(idx), 0.0);
    out.b_u_hat.col(j) = es.eigenvectors().col(idx) * std::sqrt(lam);
  }
  return out;
}

Dataset sample_observations(const PopulationModel& pop, int n, uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_observations: n must be >= 1");
  const int d = pop.p() + pop.q();
  Eigen::LLT<Matrix> llt(pop.sigma_star);
  Matrix chol = llt.matrixL();
  CounterRng rng(seed, 0x5a17);
  Matrix rows(n, d);
  for (int i = 0; i < n; ++i)
    rows.row(i) = (chol * rng.gaussian_vector(d)).transpose();
  return Dataset::from_rows(std::move(rows), pop.p(), pop.q());
}

namespace {

double condition_number(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  double lo = es.eigenvalues().minCoeff();
  double hi = es.eigenvalues().maxCoeff();
  return lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
}

}  // namespace

PopulationModel generate_synthetic(int p, int q, int k_x, int k_u,
                                   double cond_bound, uint64_t seed,
                                   double tau_override) {
  if (k_x > std::min(p, q) || k_u > p)
    throw std::invalid_argument("generate_synthetic: rank exceeds dimension");
  if (!(cond_bound > 1))
    throw std::invalid_argument("generate_synthetic: cond_bound must be > 1");

  CounterRng rng(seed, 0x9e0);
  Matrix a_dir = Matrix::Zero(p, q);
  if (k_x > 0) {
    Matrix j = rng.gaussian_matrix(p, k_x);
    Matrix k = rng.gaussian_matrix(q, k_x);
    a_dir = j * k.transpose();
  }
  Matrix b_dir = k_u > 0 ? rng.gaussian_matrix(p, k_u) : Matrix::Zero(p, 0);

  auto scaled = [&](double tau) {
    Matrix a = a_dir;
    Matrix b = b_dir;
    if (a.size() > 0 && spectral_norm(a) > 0) a *= tau / spectral_norm(a);
    if (b.size() > 0 && spectral_norm(b) > 0) b *= tau / spectral_norm(b);
    return build_population(a, b, Matrix::Identity(k_u, k_u),
                            Vector::Ones(p), Matrix::Identity(q, q));
  };

  if (tau_override > 0) return scaled(tau_override);
  if (k_x == 0 && k_u == 0) return scaled(0.0);

  // largest tau in [1e-4, 10] with cond(Theta*) <= cond_bound
  double lo = 1e-4, hi = 10.0;
  if (condition_number(scaled(hi).theta_star) <= cond_bound) lo = hi;
  for (int it = 0; it < 60 && lo < hi; ++it) {
    double mid = 0.5 * (lo + hi);
    if (condition_number(scaled(mid).theta_star) <= cond_bound)
      lo = mid;
    else
      hi = mid;
  }
  return scaled(lo);
}

}  // namespace cfm
