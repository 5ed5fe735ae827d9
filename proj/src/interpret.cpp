#include "cfm/interpret.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "cfm/tangent.hpp"

namespace cfm {

void SweepGrid::validate() const {
  auto check = [](const std::vector<double>& v, const char* name) {
    if (v.empty()) throw std::invalid_argument(std::string(name) + " empty");
    for (size_t i = 0; i < v.size(); ++i) {
      if (!(v[i] > 0))
        throw std::invalid_argument(std::string(name) + " must be positive");
      if (i > 0 && !(v[i] > v[i - 1]))
        throw std::invalid_argument(std::string(name) +
                                    " must be strictly increasing");
    }
  };
  check(lambda_values, "lambda_values");
  check(gamma_values, "gamma_values");
}

SweepGrid SweepGrid::default_grid() {
  SweepGrid g;
  for (int i = 0; i < 25; ++i)
    g.lambda_values.push_back(std::pow(10.0, -2.0 + 3.0 * i / 24.0));
  for (int i = 0; i < 12; ++i)
    g.gamma_values.push_back(0.5 + 3.5 * i / 11.0);
  return g;
}

int default_workers() {
  if (const char* env = std::getenv("CFM_WORKERS")) {
    int w = std::atoi(env);
    if (w > 0) return w;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

SweepResult sweep_grid(const Dataset& data, const SweepGrid& grid,
                       const SolverOptions& opts, int workers) {
  grid.validate();
  if (data.q <= 0)
    throw std::invalid_argument("sweep_grid: joint (y,x) data required");
  if (workers <= 0) workers = default_workers();

  const size_t n_gamma = grid.gamma_values.size();
  std::vector<std::vector<CandidateModel>> per_gamma(n_gamma);
  std::vector<int> dropped(n_gamma, 0);

  // each gamma owns a warm-started lambda path; paths run in parallel
  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (size_t gi = next.fetch_add(1); gi < n_gamma;
         gi = next.fetch_add(1)) {
      SolverOptions o = opts;
      o.gamma = grid.gamma_values[gi];
      const BlockPrecision* warm = nullptr;
      BlockPrecision prev;
      for (double lambda : grid.lambda_values) {
        o.lambda_n = lambda;
        SolveReport rep = solve_composite(data, o, warm);
        if (rep.converged) {
          CandidateModel c;
          c.estimate = rep.estimate;
          c.lambda_n = lambda;
          c.gamma = o.gamma;
          c.d = rep.rank_theta_yx;
          c.rank_l = rep.rank_l_y;
          per_gamma[gi].push_back(std::move(c));
          prev = per_gamma[gi].back().estimate;
          warm = &prev;
        } else {
          ++dropped[gi];
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < std::min<int>(workers, (int)n_gamma); ++w)
    pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  SweepResult out;
  for (size_t gi = 0; gi < n_gamma; ++gi) {
    out.non_converged += dropped[gi];
    for (auto& c : per_gamma[gi]) out.candidates.push_back(std::move(c));
  }
  return out;
}

namespace {

Matrix combined_low_rank(const BlockPrecision& est) {
  Matrix tyx = est.theta_yx();
  Matrix tx = est.theta_x();
  return est.l_y + symmetrize(tyx * tx.llt().solve(tyx.transpose()));
}

}  // namespace

ConditionFlags check_conditions(const CandidateModel& c,
                                const FactorModelParams& fm, double rank_tol,
                                double angle_min_deg) {
  ConditionFlags f;
  const BlockPrecision& est = c.estimate;
  int rank_ref = numerical_rank(fm.l, rank_tol);
  int rank_yx = numerical_rank(est.theta_yx(), rank_tol);
  int rank_l = numerical_rank(est.l_y, rank_tol);
  int rank_comb = numerical_rank(combined_low_rank(est), rank_tol);

  f.rank_d = (rank_yx == c.d);
  f.rank_sum = (rank_ref == rank_l + rank_yx);
  f.rank_combined = (rank_ref == rank_comb);
  if (rank_yx == 0 || rank_l == 0) {
    f.transverse = true;
  } else {
    Matrix u1 = column_space_basis(est.theta_yx(), rank_tol);
    Matrix u2 = column_space_basis(est.l_y, rank_tol);
    f.transverse = min_principal_angle(u1, u2) > angle_min_deg;
  }
  return f;
}

double deviation_metric(const CandidateModel& c, const FactorModelParams& fm) {
  double d_ref = fm.d.cwiseAbs().maxCoeff();
  double l_ref = spectral_norm(fm.l);
  if (!(d_ref > 0) || !(l_ref > 0))
    throw std::invalid_argument(
        "deviation_metric: degenerate reference factor model");
  double dev_d =
      (fm.d - c.estimate.d_y).cwiseAbs().maxCoeff() / d_ref;
  double dev_l =
      spectral_norm(fm.l - combined_low_rank(c.estimate)) / l_ref;
  return std::max(dev_d, dev_l);
}

std::map<int, InterpretationResult> select_models(
    std::vector<CandidateModel>& candidates, const FactorModelParams& fm,
    double rank_tol, double angle_min_deg) {
  for (auto& c : candidates) {
    c.conditions = check_conditions(c, fm, rank_tol, angle_min_deg);
    if (c.conditions.all())
      c.deviation = deviation_metric(c, fm);
    else
      c.deviation.reset();
  }

  std::map<int, const CandidateModel*> best;
  for (const auto& c : candidates) {
    if (!c.deviation) continue;
    auto it = best.find(c.d);
    if (it == best.end()) {
      best[c.d] = &c;
      continue;
    }
    const CandidateModel& b = *it->second;
    double dc = *c.deviation, db = *b.deviation;
    bool better = dc < db ||
                  (dc == db && (c.lambda_n < b.lambda_n ||
                                (c.lambda_n == b.lambda_n &&
                                 c.gamma < b.gamma)));
    if (better) it->second = &c;
  }

  std::map<int, InterpretationResult> out;
  for (auto& [d, cptr] : best) {
    InterpretationResult res;
    res.d = d;
    res.chosen = *cptr;
    const int q = cptr->estimate.q;
    if (d > 0) {
      Eigen::JacobiSVD<Matrix> svd(cptr->estimate.theta_yx(),
                                   Eigen::ComputeThinV);
      res.basis_v = svd.matrixV().leftCols(d);
    } else {
      res.basis_v = Matrix(q, 0);
    }
    res.strengths = res.basis_v.rowwise().squaredNorm();
    out[d] = std::move(res);
  }
  return out;
}

}  // namespace cfm
