#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cfm/block_ops.hpp"
#include "cfm/rng.hpp"
#include "cfm/tangent.hpp"

using namespace cfm;

namespace {

BlockTuple random_tuple(CounterRng& rng, int p, int q) {
  BlockTuple t;
  t.d = Matrix(rng.gaussian_vector(p).asDiagonal());
  t.l = symmetrize(rng.gaussian_matrix(p, p));
  t.k = rng.gaussian_matrix(p, q);
  t.o = symmetrize(rng.gaussian_matrix(q, q));
  return t;
}

// Pairing on the tuple space under which the assembly maps and their
// adjoints form adjoint pairs: the subtracted slot enters negatively and the
// off-diagonal block, which appears twice in the assembled matrix, twice.
double pair_f(const BlockTuple& a, const BlockTuple& b) {
  return a.d.cwiseProduct(b.d).sum() - a.l.cwiseProduct(b.l).sum() +
         2.0 * a.k.cwiseProduct(b.k).sum() + a.o.cwiseProduct(b.o).sum();
}

double pair_g(const BlockTuple& a, const BlockTuple& b) {
  return a.l.cwiseProduct(b.l).sum() + 2.0 * a.k.cwiseProduct(b.k).sum();
}

Matrix random_sym(CounterRng& rng, int n) {
  return symmetrize(rng.gaussian_matrix(n, n));
}

TangentSpace random_tangent(CounterRng& rng, int p, int r, bool symmetric,
                            int q = 0) {
  if (symmetric) {
    Matrix u = rng.gaussian_matrix(p, r);
    Matrix m = u * u.transpose();
    return tangent_of(m, r);
  }
  Matrix m = rng.gaussian_matrix(p, r) * rng.gaussian_matrix(q, r).transpose();
  return tangent_of(m, r);
}

}  // namespace

TEST_CASE("block_assemble F identity and sign conventions") {
  BlockTuple t = BlockTuple::Zero(2, 1);
  t.d = Matrix::Identity(2, 2);
  t.o = Matrix::Identity(1, 1);
  CHECK((block_assemble(t, AssembleMode::F) - Matrix::Identity(3, 3)).norm() ==
        doctest::Approx(0.0));

  BlockTuple n = BlockTuple::Zero(2, 1);
  n.l = Matrix::Identity(2, 2);
  Matrix expect = Matrix::Zero(3, 3);
  expect(0, 0) = expect(1, 1) = -1.0;
  CHECK((block_assemble(n, AssembleMode::F) - expect).norm() ==
        doctest::Approx(0.0));
}

TEST_CASE("block_assemble G applies the definition entrywise") {
  BlockTuple t = BlockTuple::Zero(2, 1);
  t.l = Matrix::Identity(2, 2);
  t.k = Matrix::Zero(2, 1);
  t.k(0, 0) = 1.0;
  Matrix expect(3, 3);
  expect << 1, 0, 1, 0, 1, 0, 1, 0, 0;
  CHECK((block_assemble(t, AssembleMode::G) - expect).norm() ==
        doctest::Approx(0.0));
}

TEST_CASE("block_adjoint F on the identity") {
  BlockTuple t = block_adjoint(Matrix::Identity(3, 3), 2, 1, AssembleMode::F);
  CHECK((t.d - Matrix::Identity(2, 2)).norm() == doctest::Approx(0.0));
  CHECK((t.l - Matrix::Identity(2, 2)).norm() == doctest::Approx(0.0));
  CHECK(t.k.norm() == doctest::Approx(0.0));
  CHECK((t.o - Matrix::Identity(1, 1)).norm() == doctest::Approx(0.0));
}

TEST_CASE("block_adjoint G discards the x block") {
  Matrix m = Matrix::Identity(3, 3);
  m(2, 2) = 5.0;
  BlockTuple t = block_adjoint(m, 2, 1, AssembleMode::G);
  CHECK((t.l - Matrix::Identity(2, 2)).norm() == doctest::Approx(0.0));
  CHECK(t.k.norm() == doctest::Approx(0.0));
  CHECK(t.o.norm() == doctest::Approx(0.0));
}

TEST_CASE("adjoint identities on 100 random instances") {
  CounterRng rng(11, 0);
  for (int trial = 0; trial < 100; ++trial) {
    int p = 2 + trial % 4, q = 1 + trial % 3;
    BlockTuple t = random_tuple(rng, p, q);
    Matrix m = random_sym(rng, p + q);

    double lhs_f = block_assemble(t, AssembleMode::F).cwiseProduct(m).sum();
    double rhs_f = pair_f(t, block_adjoint(m, p, q, AssembleMode::F));
    CHECK(lhs_f == doctest::Approx(rhs_f).epsilon(1e-10));

    double lhs_g = block_assemble(t, AssembleMode::G).cwiseProduct(m).sum();
    double rhs_g = pair_g(t, block_adjoint(m, p, q, AssembleMode::G));
    CHECK(lhs_g == doctest::Approx(rhs_g).epsilon(1e-10));
  }
}

TEST_CASE("tangent_of basics") {
  Matrix n = Matrix::Zero(2, 2);
  n(0, 0) = 1.0;
  TangentSpace t = tangent_of(n, 1);
  CHECK(t.rank == 1);
  CHECK(std::abs(std::abs(t.col_basis(0, 0)) - 1.0) < 1e-12);
  CHECK(std::abs(t.col_basis(1, 0)) < 1e-12);

  // N lies in its own tangent space
  CHECK((t.project(n) - n).norm() < 1e-12);

  CHECK_THROWS(tangent_of(n, 2));  // exceeds numerical rank
}

TEST_CASE("tangent dimension matches the closed form") {
  CounterRng rng(5, 0);
  for (int trial = 0; trial < 20; ++trial) {
    int p = 4 + trial % 4;
    int r = 1 + trial % 3;
    TangentSpace ts = random_tangent(rng, p, r, true);
    CHECK(ts.dim() == p * r - r * (r - 1) / 2);

    // count independent generators numerically: project a spanning family
    // and measure the rank of the stacked images
    int trials = p * p;
    Matrix images(p * p, trials);
    CounterRng inner = rng.fork(trial);
    for (int j = 0; j < trials; ++j) {
      Matrix m = ts.project(random_sym(inner, p));
      images.col(j) = Eigen::Map<Vector>(m.data(), p * p);
    }
    CHECK(numerical_rank(images, 1e-8) == ts.dim());

    int q = 3 + trial % 3;
    TangentSpace tr = random_tangent(rng, p, r, false, q);
    CHECK(tr.dim() == r * (p + q - r));
  }
}

TEST_CASE("tangent_project formula on 2x2 cases") {
  Matrix n = Matrix::Zero(2, 2);
  n(0, 0) = 1.0;
  TangentSpace t = tangent_of(n, 1);

  Matrix m1 = Matrix::Zero(2, 2);
  m1(1, 1) = 5.0;
  CHECK(t.project(m1).norm() == doctest::Approx(0.0));

  Matrix m2(2, 2);
  m2 << 1, 2, 3, 4;
  Matrix expect(2, 2);
  expect << 1, 2, 3, 0;
  CHECK((t.project(m2) - expect).norm() == doctest::Approx(0.0));
}

TEST_CASE("tangent projection: idempotent, self-adjoint, bounded by 2") {
  CounterRng rng(7, 0);
  for (int trial = 0; trial < 100; ++trial) {
    int p = 3 + trial % 5;
    bool symmetric = trial % 2 == 0;
    int q = symmetric ? p : 2 + trial % 4;
    TangentSpace t = random_tangent(rng, p, 1 + trial % 2, symmetric, q);

    Matrix m = rng.gaussian_matrix(p, q);
    Matrix pm = t.project(m);
    CHECK((t.project(pm) - pm).norm() <= 1e-10 * std::max(1.0, m.norm()));

    Matrix b = rng.gaussian_matrix(p, q);
    double lhs = pm.cwiseProduct(b).sum();
    double rhs = m.cwiseProduct(t.project(b)).sum();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));

    CHECK(spectral_norm(pm) <= 2.0 * spectral_norm(m) + 1e-12);
  }
}

TEST_CASE("rho_distance: zero at equality, dense-grid oracle, perturbation") {
  CounterRng rng(3, 0);
  TangentSpace t = random_tangent(rng, 4, 1, true);
  CHECK(rho_distance(t, t) == doctest::Approx(0.0).epsilon(1e-8));

  // orthogonal rank-1 symmetric spaces in S^2: exhaustive check over a dense
  // mesh of unit-spectral-norm symmetric matrices gives 1
  Matrix e1 = Matrix::Zero(2, 2), e2 = Matrix::Zero(2, 2);
  e1(0, 0) = 1.0;
  e2(1, 1) = 1.0;
  TangentSpace t1 = tangent_of(e1, 1), t2 = tangent_of(e2, 1);
  double mesh_max = 0.0;
  for (double a = -1; a <= 1; a += 0.05)
    for (double b = -1; b <= 1; b += 0.05)
      for (double c = -1; c <= 1; c += 0.05) {
        Matrix m(2, 2);
        m << a, c, c, b;
        double sn = spectral_norm(m);
        if (sn < 1e-9) continue;
        m /= sn;
        mesh_max = std::max(mesh_max,
                            spectral_norm(t1.project(m) - t2.project(m)));
      }
  double est = rho_distance(t1, t2);
  CHECK(est == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(mesh_max == doctest::Approx(est).epsilon(0.02));

  // perturbation bound rho(T(L), T(L')) <= 2 ||L - L'||_2 / sigma_min(L)
  for (int trial = 0; trial < 20; ++trial) {
    CounterRng r = rng.fork(trial);
    Matrix u = r.gaussian_matrix(5, 2);
    Matrix l = u * u.transpose();
    Matrix pert = 1e-3 * symmetrize(r.gaussian_matrix(5, 5));
    Matrix lp = l + pert;
    double sigma_min =
        Eigen::JacobiSVD<Matrix>(l).singularValues()(1);
    double rho = rho_distance(tangent_of(l, 2), tangent_of(lp, 2));
    CHECK(rho <= 2.0 * spectral_norm(pert) / sigma_min + 1e-8);
  }
}

TEST_CASE("rho_distance is a pseudometric on tested triples") {
  CounterRng rng(23, 0);
  for (int trial = 0; trial < 30; ++trial) {
    CounterRng r = rng.fork(trial);
    TangentSpace a = random_tangent(r, 4, 1, true);
    TangentSpace b = random_tangent(r, 4, 1, true);
    TangentSpace c = random_tangent(r, 4, 1, true);
    double ab = rho_distance(a, b), ba = rho_distance(b, a);
    double bc = rho_distance(b, c), ac = rho_distance(a, c);
    CHECK(rho_distance(a, a) <= 1e-8);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-6));
    CHECK(ac <= ab + bc + 1e-8);
  }
}

TEST_CASE("coherence values and bounds") {
  Matrix e1 = Matrix::Zero(3, 1);
  e1(0, 0) = 1.0;
  CHECK(coherence(e1) == doctest::Approx(1.0));

  Matrix flat = Matrix::Constant(3, 1, 1.0 / std::sqrt(3.0));
  CHECK(coherence(flat) == doctest::Approx(1.0 / 3.0));

  CHECK_THROWS(coherence(Matrix::Constant(3, 1, 1.0)));  // not orthonormal

  CounterRng rng(9, 0);
  for (int trial = 0; trial < 100; ++trial) {
    int p = 4 + trial % 6;
    int r = 1 + trial % 3;
    Eigen::HouseholderQR<Matrix> qr(rng.gaussian_matrix(p, r));
    Matrix u = qr.householderQ() * Matrix::Identity(p, r);
    double mu = coherence(u);
    CHECK(mu >= static_cast<double>(r) / p - 1e-10);
    CHECK(mu <= 1.0 + 1e-10);
  }
}

TEST_CASE("norms") {
  NormParams params(2.0);
  BlockTuple t = BlockTuple::Zero(2, 2);
  t.d = Matrix::Identity(2, 2);
  t.l = Matrix::Identity(2, 2);
  t.o = Matrix::Identity(2, 2);
  CHECK(norm_phi(t, params) == doctest::Approx(1.0));

  Matrix k = Matrix::Zero(2, 2);
  k(0, 0) = 3.0;
  CHECK(norm_gamma(Matrix::Zero(2, 2), k, params) == doctest::Approx(1.5));

  CounterRng rng(13, 0);
  for (int trial = 0; trial < 50; ++trial) {
    BlockTuple r = random_tuple(rng, 3, 2);
    NormParams np(0.5 + rng.uniform() * 3.0);
    CHECK(norm_phi(r, np) >= norm_gamma(r.l, r.k, np) - 1e-12);
  }
}

TEST_CASE("numerical_rank") {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = 1e-9;
  CHECK(numerical_rank(m, 1e-3) == 1);
  CHECK(numerical_rank(Matrix::Zero(3, 3), 1e-3) == 0);

  CounterRng rng(17, 0);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix j = rng.gaussian_matrix(8, 3), k = rng.gaussian_matrix(6, 3);
    CHECK(numerical_rank(j * k.transpose(), 1e-3) == 3);
  }
}

TEST_CASE("min_principal_angle") {
  Matrix e1 = Matrix::Zero(3, 1), e2 = Matrix::Zero(3, 1);
  e1(0, 0) = 1.0;
  e2(1, 0) = 1.0;
  CHECK(min_principal_angle(e1, e1) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(min_principal_angle(e1, e2) == doctest::Approx(90.0));

  Matrix mid = Matrix::Zero(3, 1);
  mid(0, 0) = mid(1, 0) = 1.0 / std::sqrt(2.0);
  CHECK(min_principal_angle(e1, mid) == doctest::Approx(45.0).epsilon(1e-8));
}
