#include "cfm/fisher.hpp"

#include <atomic>
#include <functional>
#include <thread>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "cfm/interpret.hpp"

namespace cfm {

double SubspaceFamily::max_angle_deg() const {
  double r = std::clamp(std::max(rho_y, rho_yx), 0.0, 1.0);
  return std::asin(r) * 180.0 / M_PI;
}

namespace {

constexpr int kMaxAmbientDim = 200;

Matrix orth_complement(const Matrix& u, int n) {
  if (u.cols() == 0) return Matrix::Identity(n, n);
  Eigen::HouseholderQR<Matrix> qr(u);
  Matrix qfull = qr.householderQ() * Matrix::Identity(n, n);
  return qfull.rightCols(n - u.cols());
}

// One basis element of a product subspace; nonzero in a single component.
// comp: 0 = diagonal slot, 1 = l slot, 2 = k slot, 3 = o slot.
struct BasisElem {
  int comp;
  Matrix m;
};

std::vector<BasisElem> diagonal_basis(int p) {
  std::vector<BasisElem> out;
  for (int i = 0; i < p; ++i) {
    Matrix e = Matrix::Zero(p, p);
    e(i, i) = 1.0;
    out.push_back({0, std::move(e)});
  }
  return out;
}

std::vector<BasisElem> sym_space_basis(int q, int comp) {
  std::vector<BasisElem> out;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < q; ++i)
    for (int j = i; j < q; ++j) {
      Matrix e = Matrix::Zero(q, q);
      if (i == j) {
        e(i, i) = 1.0;
      } else {
        e(i, j) = e(j, i) = inv_sqrt2;
      }
      out.push_back({comp, std::move(e)});
    }
  return out;
}

// Orthonormal basis of the symmetric tangent space with column basis u.
std::vector<BasisElem> sym_tangent_basis(const Matrix& u, int comp) {
  const int p = static_cast<int>(u.rows());
  const int r = static_cast<int>(u.cols());
  Matrix w = orth_complement(u, p);
  std::vector<BasisElem> out;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < r; ++i)
    for (int j = i; j < r; ++j) {
      Matrix uij = u.col(i) * u.col(j).transpose();
      Matrix e = (i == j) ? uij : Matrix(inv_sqrt2 * (uij + uij.transpose()));
      out.push_back({comp, std::move(e)});
    }
  for (int i = 0; i < r; ++i)
    for (int k = 0; k < w.cols(); ++k) {
      Matrix uw = u.col(i) * w.col(k).transpose();
      out.push_back({comp, Matrix(inv_sqrt2 * (uw + uw.transpose()))});
    }
  return out;
}

std::vector<BasisElem> rect_tangent_basis(const Matrix& u, const Matrix& v,
                                          int comp) {
  const int p = static_cast<int>(u.rows());
  const int q = static_cast<int>(v.rows());
  const int r = static_cast<int>(u.cols());
  Matrix zu = orth_complement(u, p);
  Matrix wv = orth_complement(v, q);
  std::vector<BasisElem> out;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      out.push_back({comp, Matrix(u.col(i) * v.col(j).transpose())});
  for (int i = 0; i < r; ++i)
    for (int k = 0; k < wv.cols(); ++k)
      out.push_back({comp, Matrix(u.col(i) * wv.col(k).transpose())});
  for (int l = 0; l < zu.cols(); ++l)
    for (int j = 0; j < r; ++j)
      out.push_back({comp, Matrix(zu.col(l) * v.col(j).transpose())});
  return out;
}

struct AmbientTuple {
  Matrix d, l, k, o;  // reconstructed blocks
};

struct AmbientPair {
  Matrix l, k;
};

double elem_dot_tuple(const BasisElem& b, const AmbientTuple& t) {
  switch (b.comp) {
    case 0: return b.m.cwiseProduct(t.d).sum();
    case 1: return b.m.cwiseProduct(t.l).sum();
    case 2: return b.m.cwiseProduct(t.k).sum();
    default: return b.m.cwiseProduct(t.o).sum();
  }
}

double elem_dot_pair(const BasisElem& b, const AmbientPair& t) {
  return b.comp == 1 ? b.m.cwiseProduct(t.l).sum()
                     : b.m.cwiseProduct(t.k).sum();
}

// Spectral norm with a subgradient, exploiting block structure.
struct SpecEval {
  double value;
  Matrix subgrad;
};

SpecEval spec_sym(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  int lo = 0, hi = static_cast<int>(m.rows()) - 1;
  double vlo = std::abs(es.eigenvalues()(lo));
  double vhi = std::abs(es.eigenvalues()(hi));
  int idx = vhi >= vlo ? hi : lo;
  double sign = es.eigenvalues()(idx) >= 0 ? 1.0 : -1.0;
  Vector v = es.eigenvectors().col(idx);
  return {std::max(vlo, vhi), sign * v * v.transpose()};
}

SpecEval spec_rect(const Matrix& m) {
  if (m.size() == 0) return {0.0, m};
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.singularValues()(0),
          Matrix(svd.matrixU().col(0) * svd.matrixV().col(0).transpose())};
}

SpecEval spec_diag(const Matrix& m) {
  int idx = 0;
  m.diagonal().cwiseAbs().maxCoeff(&idx);
  Matrix g = Matrix::Zero(m.rows(), m.cols());
  g(idx, idx) = m(idx, idx) >= 0 ? 1.0 : -1.0;
  return {std::abs(m(idx, idx)), std::move(g)};
}

struct NormEval {
  double value;
  Vector grad;  // in basis coordinates
};

// Phi_gamma of a reconstructed tuple, with the subgradient pushed back to
// basis coordinates. The d slot is exactly diagonal by construction.
NormEval phi_gamma_eval(const AmbientTuple& t, double gamma,
                        const std::vector<BasisElem>& basis) {
  SpecEval cand[4] = {spec_diag(t.d), spec_sym(t.l), spec_rect(t.k),
                      spec_sym(t.o)};
  double vals[4] = {cand[0].value, cand[1].value, cand[2].value / gamma,
                    cand[3].value};
  int active = 0;
  for (int i = 1; i < 4; ++i)
    if (vals[i] > vals[active]) active = i;
  Matrix g = cand[active].subgrad;
  if (active == 2) g /= gamma;
  NormEval out{vals[active], Vector::Zero(static_cast<int>(basis.size()))};
  for (size_t i = 0; i < basis.size(); ++i)
    if (basis[i].comp == active)
      out.grad(static_cast<int>(i)) = basis[i].m.cwiseProduct(g).sum();
  return out;
}

NormEval gamma_norm_eval(const AmbientPair& t, double gamma,
                         const std::vector<BasisElem>& basis) {
  SpecEval cl = spec_sym(t.l);
  SpecEval ck = spec_rect(t.k);
  bool l_active = cl.value >= ck.value / gamma;
  Matrix g = l_active ? cl.subgrad : Matrix(ck.subgrad / gamma);
  int active_comp = l_active ? 1 : 2;
  NormEval out{l_active ? cl.value : ck.value / gamma,
               Vector::Zero(static_cast<int>(basis.size()))};
  for (size_t i = 0; i < basis.size(); ++i)
    if (basis[i].comp == active_comp)
      out.grad(static_cast<int>(i)) = basis[i].m.cwiseProduct(g).sum();
  return out;
}

AmbientTuple recon_tuple(const Vector& z, const std::vector<BasisElem>& basis,
                         int p, int q) {
  AmbientTuple t{Matrix::Zero(p, p), Matrix::Zero(p, p), Matrix::Zero(p, q),
                 Matrix::Zero(q, q)};
  for (size_t i = 0; i < basis.size(); ++i) {
    double c = z(static_cast<int>(i));
    if (c == 0.0) continue;
    switch (basis[i].comp) {
      case 0: t.d += c * basis[i].m; break;
      case 1: t.l += c * basis[i].m; break;
      case 2: t.k += c * basis[i].m; break;
      default: t.o += c * basis[i].m; break;
    }
  }
  return t;
}

AmbientPair recon_pair(const Vector& z, const std::vector<BasisElem>& basis,
                       int p, int q) {
  AmbientPair t{Matrix::Zero(p, p), Matrix::Zero(p, q)};
  for (size_t i = 0; i < basis.size(); ++i) {
    double c = z(static_cast<int>(i));
    if (c == 0.0) continue;
    if (basis[i].comp == 1)
      t.l += c * basis[i].m;
    else
      t.k += c * basis[i].m;
  }
  return t;
}

// Multi-start normalized subgradient method on the scale-invariant ratio
// numer(z) / denom(z). Returns the best value found.
double optimize_ratio(int dim, bool maximize,
                      const std::function<NormEval(const Vector&)>& numer,
                      const std::function<NormEval(const Vector&)>& denom,
                      const EstimatorOptions& eopts, CounterRng rng,
                      const std::vector<Vector>& extra_starts) {
  double best = maximize ? 0.0 : std::numeric_limits<double>::infinity();
  const int total = eopts.restarts + static_cast<int>(extra_starts.size());
  for (int s = 0; s < total; ++s) {
    Vector z = s < static_cast<int>(extra_starts.size())
                   ? extra_starts[s]
                   : rng.gaussian_vector(dim);
    double local_best = maximize ? 0.0 : std::numeric_limits<double>::infinity();
    int stale = 0;
    for (int it = 0; it < eopts.max_iters; ++it) {
      NormEval cv = denom(z);
      if (cv.value < 1e-13) break;
      z /= cv.value;
      NormEval hv = numer(z);
      double ratio = hv.value;
      bool improved = maximize ? ratio > local_best + 1e-12
                               : ratio < local_best - 1e-12;
      if (improved) {
        local_best = ratio;
        stale = 0;
      } else if (++stale > eopts.patience) {
        break;
      }
      NormEval cg = denom(z);  // gradient at the normalized point
      Vector grad = hv.grad - ratio * cg.grad;
      double gn = grad.norm();
      if (gn < 1e-14) break;
      double step = 0.3 / std::sqrt(1.0 + it);
      z += (maximize ? step : -step) * grad / gn;
    }
    if (maximize)
      best = std::max(best, local_best);
    else if (std::isfinite(local_best))
      best = std::min(best, local_best);
  }
  return best;
}

}  // namespace

FamilySample sample_family(const PopulationModel& pop, double omega_y,
                           double omega_yx, int n_samples, uint64_t seed) {
  if (!(omega_y > 0 && omega_y < 1 && omega_yx > 0 && omega_yx < 1))
    throw std::invalid_argument("sample_family: omega must lie in (0,1)");
  const int p = pop.p(), q = pop.q();
  TangentSpace t_y0 = tangent_of(pop.l_y_star, pop.k_u);
  TangentSpace t_yx0 = tangent_of(pop.theta_yx(), pop.k_x);

  FamilySample out;
  SubspaceFamily nominal;
  nominal.t_y = t_y0;
  nominal.t_yx = t_yx0;
  nominal.nominal = true;
  out.families.push_back(nominal);

  CounterRng rng(seed, 0xf15);
  auto perturbed = [&](const Matrix& base, int rank, double omega,
                       const TangentSpace& t0, CounterRng& r,
                       double* rho_out) -> std::optional<TangentSpace> {
    if (rank == 0) {  // rank-0 variety has a trivial tangent space
      *rho_out = 0.0;
      return t0;
    }
    Matrix g = r.gaussian_matrix(base.rows(), base.cols());
    if (base.rows() == base.cols() &&
        t0.kind == TangentSpace::Kind::Symmetric)
      g = symmetrize(g);
    g /= spectral_norm(g);
    double sigma_min = Eigen::JacobiSVD<Matrix>(base)
                           .singularValues()(rank - 1);
    auto rho_at = [&](double delta) -> std::pair<double, TangentSpace> {
      TangentSpace t = tangent_of(base + delta * g, rank);
      return {rho_distance(t, t0, 17, 3, 80), t};
    };
    double lo = 0.0, hi = 0.45 * omega * sigma_min;
    auto [rho_hi, t_hi] = rho_at(hi);
    int evals = 1;
    while (rho_hi < 0.8 * omega && evals < 20) {
      lo = hi;
      hi *= 2.0;
      std::tie(rho_hi, t_hi) = rho_at(hi);
      ++evals;
    }
    if (rho_hi >= 0.8 * omega && rho_hi <= omega) {
      *rho_out = rho_hi;
      return t_hi;
    }
    for (int it = 0; it < 50; ++it) {
      double mid = 0.5 * (lo + hi);
      auto [rho_mid, t_mid] = rho_at(mid);
      if (rho_mid >= 0.8 * omega && rho_mid <= omega) {
        *rho_out = rho_mid;
        return t_mid;
      }
      (rho_mid > omega ? hi : lo) = mid;
    }
    return std::nullopt;
  };

  for (int i = 0; i < n_samples; ++i) {
    CounterRng r = rng.fork(i);
    SubspaceFamily fam;
    fam.nominal = false;
    auto ty = perturbed(pop.l_y_star, pop.k_u, omega_y, t_y0, r, &fam.rho_y);
    auto tyx =
        perturbed(pop.theta_yx(), pop.k_x, omega_yx, t_yx0, r, &fam.rho_yx);
    if (!ty || !tyx) {
      ++out.skipped;
      continue;
    }
    fam.t_y = *ty;
    fam.t_yx = *tyx;
    out.families.push_back(std::move(fam));
  }
  (void)p;
  (void)q;
  return out;
}

QuantityEstimates estimate_quantities(const FisherOperator& op,
                                      const SubspaceFamily& fam, int p, int q,
                                      double gamma,
                                      const EstimatorOptions& eopts) {
  if (p + q > kMaxAmbientDim)
    throw std::invalid_argument(
        "estimate_quantities: ambient dimension exceeds the dense-basis cap");
  if (!(gamma > 0)) throw std::invalid_argument("gamma must be > 0");

  std::vector<BasisElem> ty_basis =
      sym_tangent_basis(fam.t_y.col_basis, 1);
  std::vector<BasisElem> tyx_basis =
      rect_tangent_basis(fam.t_yx.col_basis, fam.t_yx.row_basis, 2);

  std::vector<BasisElem> h = diagonal_basis(p);
  h.insert(h.end(), ty_basis.begin(), ty_basis.end());
  h.insert(h.end(), tyx_basis.begin(), tyx_basis.end());
  {
    auto sq = sym_space_basis(q, 3);
    h.insert(h.end(), sq.begin(), sq.end());
  }
  std::vector<BasisElem> h23 = ty_basis;
  h23.insert(h23.end(), tyx_basis.begin(), tyx_basis.end());

  const int dim_h = static_cast<int>(h.size());
  const int dim_23 = static_cast<int>(h23.size());
  const Matrix& sigma = op.sigma_star;

  auto f_image = [&](const BasisElem& b) -> AmbientTuple {
    Matrix amb = Matrix::Zero(p + q, p + q);
    switch (b.comp) {
      case 0: amb.topLeftCorner(p, p) = b.m; break;
      case 1: amb.topLeftCorner(p, p) = -b.m; break;
      case 2:
        amb.topRightCorner(p, q) = b.m;
        amb.bottomLeftCorner(q, p) = b.m.transpose();
        break;
      default: amb.bottomRightCorner(q, q) = b.m; break;
    }
    Matrix img = sigma * amb * sigma;
    return {img.topLeftCorner(p, p), img.topLeftCorner(p, p),
            img.topRightCorner(p, q), img.bottomRightCorner(q, q)};
  };

  auto g_image = [&](const BasisElem& b) -> AmbientPair {
    Matrix amb = Matrix::Zero(p + q, p + q);
    if (b.comp == 1) {
      amb.topLeftCorner(p, p) = b.m;
    } else {
      amb.topRightCorner(p, q) = b.m;
      amb.bottomLeftCorner(q, p) = b.m.transpose();
    }
    Matrix img = sigma * amb * sigma;
    return {img.topLeftCorner(p, p), img.topRightCorner(p, q)};
  };

  Matrix a_mat(dim_h, dim_h);
  for (int j = 0; j < dim_h; ++j) {
    AmbientTuple img = f_image(h[j]);
    for (int i = 0; i < dim_h; ++i) a_mat(i, j) = elem_dot_tuple(h[i], img);
  }

  std::vector<AmbientPair> g_images(dim_23);
  Matrix b_mat(dim_23, dim_23);
  for (int j = 0; j < dim_23; ++j) {
    g_images[j] = g_image(h23[j]);
    for (int i = 0; i < dim_23; ++i)
      b_mat(i, j) = elem_dot_pair(h23[i], g_images[j]);
  }

  CounterRng rng(eopts.seed, 0xc41);
  QuantityEstimates out;

  // chi: min Phi_gamma(A z) over Phi_gamma(z) = 1
  {
    Eigen::JacobiSVD<Matrix> svd(a_mat, Eigen::ComputeThinV);
    std::vector<Vector> starts = {
        svd.matrixV().col(dim_h - 1)};  // smallest-gain direction
    auto numer = [&](const Vector& z) {
      return phi_gamma_eval(recon_tuple(Vector(a_mat * z), h, p, q), gamma, h);
    };
    // chain rule through the operator for the numerator gradient
    auto numer_chained = [&](const Vector& z) {
      NormEval e = numer(z);
      e.grad = a_mat.transpose() * e.grad;
      return e;
    };
    auto denom = [&](const Vector& z) {
      return phi_gamma_eval(recon_tuple(z, h, p, q), gamma, h);
    };
    out.chi = optimize_ratio(dim_h, false, numer_chained, denom, eopts,
                             rng.fork(1), starts);
  }

  if (dim_23 == 0) {
    // both low-rank pieces vanish: the restricted operator is the identity
    // on a zero-dimensional space and the conditions hold vacuously
    out.xi = 1.0;
    out.varphi = 0.0;
    return out;
  }

  // xi: min Gamma_gamma(B z) over Gamma_gamma(z) = 1
  {
    Eigen::JacobiSVD<Matrix> svd(b_mat, Eigen::ComputeThinV);
    std::vector<Vector> starts = {svd.matrixV().col(dim_23 - 1)};
    auto numer = [&](const Vector& z) {
      NormEval e = gamma_norm_eval(recon_pair(Vector(b_mat * z), h23, p, q),
                                   gamma, h23);
      e.grad = b_mat.transpose() * e.grad;
      return e;
    };
    auto denom = [&](const Vector& z) {
      return gamma_norm_eval(recon_pair(z, h23, p, q), gamma, h23);
    };
    out.xi = optimize_ratio(dim_23, false, numer, denom, eopts, rng.fork(2),
                            starts);
  }

  // varphi: max Gamma of the off-subspace response through the restricted
  // inverse; singular restricted operator reports +inf
  {
    Eigen::JacobiSVD<Matrix> svd(b_mat);
    double smax = svd.singularValues()(0);
    double smin = svd.singularValues()(dim_23 - 1);
    if (!(smax > 0) || smin <= 1e-10 * smax) {
      out.varphi = std::numeric_limits<double>::infinity();
      return out;
    }
    Matrix reg = b_mat + eopts.ridge * Matrix::Identity(dim_23, dim_23);
    Eigen::PartialPivLU<Matrix> lu(reg);
    Eigen::PartialPivLU<Matrix> lu_t(Matrix(reg.transpose()));

    auto numer = [&](const Vector& z) {
      Vector w = lu.solve(z);
      AmbientPair tw{Matrix::Zero(p, p), Matrix::Zero(p, q)};
      for (int j = 0; j < dim_23; ++j) {
        tw.l += w(j) * g_images[j].l;
        tw.k += w(j) * g_images[j].k;
      }
      Vector bw = b_mat * w;
      AmbientPair proj = recon_pair(bw, h23, p, q);
      AmbientPair c{tw.l - proj.l, tw.k - proj.k};
      // norm + subgradient of the complement response
      SpecEval cl = spec_sym(c.l);
      SpecEval ck = spec_rect(c.k);
      bool l_active = cl.value >= ck.value / gamma;
      AmbientPair gsub{Matrix::Zero(p, p), Matrix::Zero(p, q)};
      if (l_active)
        gsub.l = cl.subgrad;
      else
        gsub.k = ck.subgrad / gamma;
      Vector tau(dim_23), gproj(dim_23);
      for (int j = 0; j < dim_23; ++j) {
        tau(j) = gsub.l.cwiseProduct(g_images[j].l).sum() +
                 gsub.k.cwiseProduct(g_images[j].k).sum();
        gproj(j) = elem_dot_pair(h23[j], gsub);
      }
      Vector grad_w = tau - b_mat.transpose() * gproj;
      NormEval e;
      e.value = l_active ? cl.value : ck.value / gamma;
      e.grad = lu_t.solve(grad_w);
      return e;
    };
    auto denom = [&](const Vector& z) {
      return gamma_norm_eval(recon_pair(z, h23, p, q), gamma, h23);
    };
    out.varphi = optimize_ratio(dim_23, true, numer, denom, eopts,
                                rng.fork(3), {});
  }
  return out;
}

AssumptionReport verify_assumptions(const PopulationModel& pop, double gamma,
                                    double omega_y, double omega_yx,
                                    double alpha_req, double beta_req,
                                    int n_samples, uint64_t seed,
                                    const EstimatorOptions& eopts,
                                    int workers) {
  if (!(alpha_req > 0) || !(beta_req >= 2))
    throw std::invalid_argument(
        "verify_assumptions: need alpha_req > 0 and beta_req >= 2");
  FamilySample fams = sample_family(pop, omega_y, omega_yx, n_samples, seed);
  FisherOperator op{pop.sigma_star};
  const int p = pop.p(), q = pop.q();

  const size_t nf = fams.families.size();
  std::vector<QuantityEstimates> ests(nf);
  if (workers <= 0) workers = default_workers();
  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (size_t i = next.fetch_add(1); i < nf; i = next.fetch_add(1)) {
      EstimatorOptions eo = eopts;
      eo.seed = seed * 1000003ULL + i;
      ests[i] = estimate_quantities(op, fams.families[i], p, q, gamma, eo);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < std::min<int>(workers, static_cast<int>(nf)); ++w)
    pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  AssumptionReport rep;
  rep.chi_min = std::numeric_limits<double>::infinity();
  rep.xi_min = std::numeric_limits<double>::infinity();
  rep.varphi_max = 0.0;
  for (size_t i = 0; i < nf; ++i) {
    rep.chi_min = std::min(rep.chi_min, ests[i].chi);
    if (!std::isnan(ests[i].xi)) rep.xi_min = std::min(rep.xi_min, ests[i].xi);
    rep.varphi_max = std::max(rep.varphi_max, ests[i].varphi);
    rep.max_angle_deg =
        std::max(rep.max_angle_deg, fams.families[i].max_angle_deg());
  }
  rep.families_evaluated = static_cast<int>(nf);
  rep.families_skipped = fams.skipped;
  rep.alpha = rep.chi_min;
  rep.beta_implied = rep.varphi_max < 1.0
                         ? 2.0 / (1.0 - rep.varphi_max) - 1.0
                         : std::numeric_limits<double>::infinity();
  rep.chi_pass = rep.chi_min >= alpha_req;
  rep.xi_pass = rep.xi_min > 0;
  rep.varphi_pass = rep.varphi_max <= 1.0 - 2.0 / (beta_req + 1.0);
  return rep;
}

double TheoremConstants::n_min() const {
  return c_samp * c_samp * std::pow(beta, 4) / (alpha * alpha) *
         std::pow(m, 6) * (p + q);
}

std::pair<double, double> TheoremConstants::lambda_interval(double n) const {
  double lower = c_tilde * (beta / alpha) * m * m * std::sqrt((p + q) / n);
  double upper = 1.0 / (beta * m * c0);
  return {lower, upper};
}

bool TheoremConstants::lambda_feasible(double n) const {
  auto [lo, hi] = lambda_interval(n);
  return lo <= hi;
}

double TheoremConstants::sigma_y_threshold(double lambda_n) const {
  return c_sigma * (beta / (std::pow(alpha, 5) * omega_y)) * std::pow(m, 4) *
         lambda_n;
}

double TheoremConstants::sigma_yx_threshold(double lambda_n) const {
  return c_sigma * (beta / (std::pow(alpha, 5) * omega_yx)) *
         std::pow(m, 5) * m_bar * m_bar * lambda_n;
}

double TheoremConstants::error_bound_d(double lambda_n) const {
  return c1 * (m / (alpha * alpha)) * lambda_n;
}

double TheoremConstants::error_bound_yx(double lambda_n) const {
  return c1 * (m * m_bar / (alpha * alpha)) * lambda_n;
}

double TheoremConstants::success_probability(double n, double lambda_n) const {
  return 1.0 - 2.0 * std::exp(-c_prob * (alpha * alpha) /
                              (beta * beta * std::pow(m, 4)) * n * lambda_n *
                              lambda_n);
}

TheoremConstants theorem_bounds(double psi, double alpha, double beta,
                                double gamma, double omega_y, double omega_yx,
                                int p, int q) {
  if (!(psi > 0 && alpha > 0 && gamma > 0 && omega_y > 0 && omega_yx > 0))
    throw std::invalid_argument("theorem_bounds: inputs must be positive");
  if (!(beta >= 2)) throw std::invalid_argument("theorem_bounds: beta < 2");
  TheoremConstants c;
  c.psi = psi;
  c.alpha = alpha;
  c.beta = beta;
  c.gamma = gamma;
  c.omega_y = omega_y;
  c.omega_yx = omega_yx;
  c.p = p;
  c.q = q;
  c.m = std::max(1.0, 1.0 / gamma);
  c.m_bar = std::max(1.0, gamma);
  c.kappa = beta * (3.0 + 16.0 * psi * psi * c.m / alpha);
  c.c_tilde = 352.0 * std::pow(psi, 3);
  c.c0 = std::max({1.0 / (192.0 * psi), 2.0 * psi,
                   1.0 / (24.0 * psi * psi *
                          std::max(2.0 / (psi * psi) + 8.0, 1.0 / psi)),
                   psi / 8.0});
  c.c_samp = c.c_tilde * c.c0;
  c.c1 = (186.0 * psi * psi + 56.0 * std::pow(psi, 4)) / 6.0;
  c.c_sigma = 6.0 * std::pow(psi, 4) *
              std::pow(56.0 * std::pow(psi, 4) + 186.0 * psi * psi, 2);
  c.c_prob = 1.0 / (247808.0 * std::pow(psi, 6));
  return c;
}

TheoremConstants theorem_bounds(const PopulationModel& pop, double alpha,
                                double beta, double gamma, double omega_y,
                                double omega_yx) {
  return theorem_bounds(spectral_norm(pop.sigma_star), alpha, beta, gamma,
                        omega_y, omega_yx, pop.p(), pop.q());
}

RemainderCheck remainder_check(const PopulationModel& pop,
                               const BlockTuple& delta, double gamma) {
  NormParams params(gamma);
  const double psi = spectral_norm(pop.sigma_star);
  const double c_prime = (3.0 + gamma) * psi;
  const double phi_delta = norm_phi(delta, params);
  if (phi_delta > 1.0 / (2.0 * c_prime))
    throw std::invalid_argument(
        "remainder_check: Phi_gamma[Delta] exceeds 1/(2C')");

  const int p = pop.p(), q = pop.q();
  Matrix e = block_assemble(delta, AssembleMode::F);
  Matrix perturbed = pop.theta_star + e;
  Eigen::LLT<Matrix> llt(symmetrize(perturbed));
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("remainder_check: Theta* + F(Delta) not PD");
  Matrix inv = symmetrize(llt.solve(Matrix::Identity(p + q, p + q)));
  Matrix r = inv - pop.sigma_star + pop.sigma_star * e * pop.sigma_star;
  BlockTuple fr = block_adjoint(symmetrize(r), p, q, AssembleMode::F);

  RemainderCheck out;
  out.lhs = norm_phi(fr, params);
  out.rhs = 2.0 * params.m() * psi * c_prime * c_prime * phi_delta * phi_delta;
  out.ok = out.lhs <= out.rhs + 1e-10;  // slack absorbs inversion round-off
  return out;
}

}  // namespace cfm
