#pragma once

#include <map>
#include <optional>
#include <vector>

#include "cfm/solver.hpp"

namespace cfm {

struct SweepGrid {
  std::vector<double> lambda_values;  // strictly increasing, positive
  std::vector<double> gamma_values;   // strictly increasing, positive

  void validate() const;
  static SweepGrid default_grid();  // lambda log 1e-2..1e1 (25), gamma 0.5..4 (12)
};

struct ConditionFlags {
  bool rank_d = false;        // (i)   rank(Theta_yx) = d
  bool rank_sum = false;      // (ii)  rank(L~) = rank(L) + rank(Theta_yx)
  bool rank_combined = false; // (iii) rank(L~) = rank(L + Tyx Tx^-1 Txy)
  bool transverse = false;    // min principal angle above threshold

  bool all() const { return rank_d && rank_sum && rank_combined && transverse; }
};

struct CandidateModel {
  BlockPrecision estimate;
  double lambda_n = 0.0;
  double gamma = 0.0;
  int d = 0;       // rank(Theta_yx)
  int rank_l = 0;  // rank(L_y)
  ConditionFlags conditions;
  std::optional<double> deviation;
};

struct InterpretationResult {
  int d = 0;
  Matrix basis_v;            // q x d orthonormal row-space basis of Theta_yx
  Vector strengths;          // squared row norms of V, sum to d
  CandidateModel chosen;
};

struct SweepResult {
  std::vector<CandidateModel> candidates;
  int non_converged = 0;
};

/// Worker count: CFM_WORKERS env var, else hardware concurrency.
int default_workers();

/// One candidate per converged grid point; condition flags left unset
/// pending a reference factor model. Warm-starts along the lambda path.
SweepResult sweep_grid(const Dataset& data, const SweepGrid& grid,
                       const SolverOptions& opts, int workers = 0);

/// Algorithm step-2 conditions against the reference factor model.
ConditionFlags check_conditions(const CandidateModel& c,
                                const FactorModelParams& fm, double rank_tol,
                                double angle_min_deg = 5.0);

/// max{ ||D~ - D||/||D~||, ||L~ - (L + Tyx Tx^-1 Txy)||/||L~|| } in spectral norm.
double deviation_metric(const CandidateModel& c, const FactorModelParams& fm);

/// Fills flags and deviations, then picks the deviation-argmin candidate per
/// interpretable dimension d. Ties break toward smaller (lambda, gamma).
std::map<int, InterpretationResult> select_models(
    std::vector<CandidateModel>& candidates, const FactorModelParams& fm,
    double rank_tol, double angle_min_deg = 5.0);

}  // namespace cfm
