#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "cfm/solver.hpp"
#include "cfm/tangent.hpp"
#include "oracles.hpp"

using namespace cfm;

namespace {

Dataset synthetic_data(int p, int q, int k_x, int k_u, int n, uint64_t seed) {
  PopulationModel pop = generate_synthetic(p, q, k_x, k_u, 10.0, seed);
  return sample_observations(pop, n, seed + 1000);
}

}  // namespace

TEST_CASE("large penalty kills both low-rank pieces") {
  Dataset data = synthetic_data(6, 3, 1, 1, 500, 1);
  SolverOptions opts;
  opts.lambda_n = 50.0;
  SolveReport rep = solve_composite(data, opts);
  CHECK(rep.converged);
  CHECK(rep.rank_l_y == 0);
  CHECK(rep.rank_theta_yx == 0);
}

TEST_CASE("unregularized fit approaches the inverse sample covariance") {
  Dataset data = synthetic_data(5, 2, 1, 1, 20000, 2);
  SolverOptions opts;
  opts.lambda_n = 0.0;
  opts.tol_primal = opts.tol_dual = 1e-9;
  SolveReport rep = solve_composite(data, opts);
  CHECK(rep.converged);
  Matrix target = data.sample_cov.inverse();
  CHECK((rep.estimate.theta - target).norm() / target.norm() < 1e-4);
}

TEST_CASE("objective matches the projected-gradient reference") {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Dataset data = synthetic_data(4 + (int)seed, 2, 1, 1, 2000, seed + 10);
    SolverOptions opts;
    opts.lambda_n = 0.05 + 0.05 * seed;
    opts.gamma = 1.0 + 0.5 * seed;
    opts.tol_primal = opts.tol_dual = 1e-8;
    SolveReport rep = solve_composite(data, opts);
    CHECK(rep.converged);

    test::PgResult ref = test::projected_gradient_reference(
        data.sample_cov, data.p, data.q, opts.lambda_n, opts.gamma);
    CHECK(rep.objective ==
          doctest::Approx(ref.objective).epsilon(1e-4));
  }
}

TEST_CASE("solve output satisfies the program constraints") {
  Dataset data = synthetic_data(8, 3, 2, 1, 2000, 20);
  SolverOptions opts;
  opts.lambda_n = 0.1;
  SolveReport rep = solve_composite(data, opts);
  CHECK(rep.converged);
  rep.estimate.validate();  // diagonality, assembly, PSD, PD

  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(rep.estimate.theta));
  CHECK(es.eigenvalues().minCoeff() > 0.0);

  // the returned objective beats the feasible ridge initialization
  int d = data.p + data.q;
  double ridge = 1e-3 * data.sample_cov.trace() / d;
  Matrix theta0 = (data.sample_cov + ridge * Matrix::Identity(d, d)).inverse();
  BlockTuple t0;
  t0.d = Matrix(theta0.topLeftCorner(data.p, data.p).diagonal().asDiagonal());
  t0.l = Matrix(
      (t0.d - theta0.topLeftCorner(data.p, data.p)).eval());
  // the raw split may be infeasible (l indefinite); use the l = 0 variant
  t0.l = Matrix::Zero(data.p, data.p);
  t0.d = Matrix(theta0.topLeftCorner(data.p, data.p).diagonal().asDiagonal());
  t0.k = theta0.topRightCorner(data.p, data.q);
  t0.o = theta0.bottomRightCorner(data.q, data.q);
  double init_obj =
      test::composite_objective(t0, data.sample_cov, opts.lambda_n, opts.gamma);
  CHECK(rep.objective <= init_obj + 1e-8);
}

TEST_CASE("permuting responses permutes the solution identically") {
  Dataset data = synthetic_data(6, 2, 1, 1, 1500, 30);
  SolverOptions opts;
  opts.lambda_n = 0.08;
  opts.tol_primal = opts.tol_dual = 1e-8;
  SolveReport rep = solve_composite(data, opts);

  std::vector<int> perm = {3, 0, 5, 1, 4, 2};
  Matrix rows2 = data.rows;
  for (int i = 0; i < 6; ++i) rows2.col(i) = data.rows.col(perm[i]);
  Dataset data2 = Dataset::from_rows(rows2, data.p, data.q);
  SolveReport rep2 = solve_composite(data2, opts);

  double tol = 1e-5;
  for (int i = 0; i < 6; ++i) {
    CHECK(rep2.estimate.d_y(i) ==
          doctest::Approx(rep.estimate.d_y(perm[i])).epsilon(tol));
    for (int j = 0; j < 6; ++j)
      CHECK(rep2.estimate.l_y(i, j) ==
            doctest::Approx(rep.estimate.l_y(perm[i], perm[j])).epsilon(tol));
    for (int c = 0; c < 2; ++c)
      CHECK(rep2.estimate.theta_yx()(i, c) ==
            doctest::Approx(rep.estimate.theta_yx()(perm[i], c))
                .epsilon(tol));
  }
}

TEST_CASE("factor-only program") {
  // pure-noise model: moderate penalty yields a rank-0 low-rank part
  PopulationModel plain = build_population(
      Matrix::Zero(8, 1), Matrix::Zero(8, 0), Matrix::Zero(0, 0),
      Vector::Ones(8), Matrix::Identity(1, 1));
  Dataset data = sample_observations(plain, 3000, 3);
  SolverOptions opts;
  auto [fm, rep] = solve_factor(data, 0.5, opts);
  CHECK(rep.converged);
  CHECK(numerical_rank(fm.l, opts.rank_tol) == 0);

  // rank weakly decreasing along an increasing lambda path
  Dataset fdata = synthetic_data(10, 2, 1, 2, 4000, 40);
  int prev_rank = 1000;
  int violations = 0;
  const BlockPrecision* warm = nullptr;
  BlockPrecision prev;
  for (double lt : {0.02, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6}) {
    auto [fm2, rep2] = solve_factor(fdata, lt, opts, warm);
    if (!rep2.converged) continue;
    prev = rep2.estimate;
    warm = &prev;
    if (rep2.rank_l_y > prev_rank) ++violations;
    prev_rank = rep2.rank_l_y;
  }
  CHECK(violations <= 1);
}

TEST_CASE("factor program equals composite objective on shared data") {
  Dataset fdata = synthetic_data(7, 2, 1, 1, 2000, 50);
  Matrix cov_y = fdata.sample_cov.topLeftCorner(7, 7);
  SolverOptions opts;
  opts.tol_primal = opts.tol_dual = 1e-8;
  auto [fm, rep] = solve_factor(fdata, 0.1, opts);
  CHECK(rep.converged);
  test::PgResult ref =
      test::projected_gradient_reference(cov_y, 7, 0, 0.1, 1.0);
  CHECK(rep.objective == doctest::Approx(ref.objective).epsilon(1e-4));
}

TEST_CASE("kkt residuals") {
  Dataset data = synthetic_data(8, 3, 1, 1, 3000, 60);
  SolverOptions opts;
  opts.lambda_n = 0.1;
  opts.tol_primal = opts.tol_dual = 1e-9;
  opts.max_iters = 50000;
  SolveReport rep = solve_composite(data, opts);
  CHECK(rep.converged);
  KktReport kkt = kkt_residuals(rep.estimate, data.sample_cov, opts.lambda_n,
                                opts.gamma, opts.rank_tol);
  CHECK(kkt.max_residual() <= 1e-5);

  // perturbed point violates optimality clearly
  BlockPrecision bad = rep.estimate;
  bad.theta *= 1.5;
  bad.d_y *= 1.5;
  bad.l_y *= 1.5;
  KktReport kkt_bad = kkt_residuals(bad, data.sample_cov, opts.lambda_n,
                                    opts.gamma, opts.rank_tol);
  CHECK(kkt_bad.max_residual() > 0.1);

  // exact MLE with inactive penalties: x-block condition is identically zero
  Dataset big = synthetic_data(4, 2, 1, 1, 50000, 70);
  BlockPrecision mle;
  mle.p = 4;
  mle.q = 2;
  mle.theta = big.sample_cov.inverse();
  mle.d_y = mle.theta.topLeftCorner(4, 4).diagonal();
  mle.l_y = Matrix(mle.d_y.asDiagonal()) - mle.theta.topLeftCorner(4, 4);
  KktReport kkt_mle = kkt_residuals(mle, big.sample_cov, 0.0, 1.0, 1e-3);
  CHECK(kkt_mle.x_block <= 1e-10);
  CHECK(kkt_mle.diag_y <= 1e-10);
}

TEST_CASE("option validation") {
  SolverOptions opts;
  opts.lambda_n = -1.0;
  CHECK_THROWS(opts.validate());
  opts.lambda_n = 0.1;
  opts.gamma = 0.0;
  CHECK_THROWS(opts.validate());
}
