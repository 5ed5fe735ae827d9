#pragma once

#include <map>
#include <string>
#include <vector>

#include "cfm/interpret.hpp"
#include "cfm/io.hpp"

namespace cfm {

/// Flat key=value configuration file with CLI-style overrides; overrides win.
/// Lines starting with '#' and blank lines are ignored.
struct KeyValueConfig {
  std::map<std::string, std::string> values;

  static KeyValueConfig load(const std::string& path);
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<int> get_ints(const std::string& key,
                            const std::vector<int>& fallback) const;
};

struct CvOptions {
  double lambda_min = 0.04;
  double lambda_max = 4.0;
  double lambda_step = 0.004;
  int n_test = 0;  // 0 -> quarter of the rows
  uint64_t split_seed = 0;
  SolverOptions solver;
};

struct CvPoint {
  double lambda = 0.0;
  int rank = 0;
  double test_loglik = 0.0;
};

struct CvResult {
  std::vector<CvPoint> path;                 // converged, scoreable points
  std::map<int, CvPoint> best_by_rank;       // max test log-likelihood per rank
  FactorModelParams best;                    // global argmax
  CvPoint best_point;
  int skipped = 0;  // non-PD or non-converged lambda points
  int n_train = 0;
  int n_test = 0;
};

/// Regularization path for the factor-only program with a held-out split.
/// Scores mean Gaussian log-likelihood of the test rows under the fitted
/// precision; ranks repeat along the path, so the table keeps the max per
/// rank.
CvResult cross_validate_factor(const Dataset& data, const CvOptions& opts);

struct RecoveryConfig {
  int p = 40;
  int q = 10;
  std::vector<std::pair<int, int>> models = {{1, 1}, {2, 2}};
  std::vector<int> n_values = {500, 1000, 2000, 4000, 8000};
  int trials = 10;
  double cond_bound = 10.0;
  uint64_t seed = 0;
  SweepGrid grid;  // empty -> recovery_default_grid()
  SolverOptions solver;
  double angle_min_deg = 5.0;
  int workers = 0;

  static SweepGrid recovery_default_grid();
  static RecoveryConfig from_config(const KeyValueConfig& cfg);
};

struct RecoveryCell {
  int k_x = 0, k_u = 0, n = 0;
  double mean_deviation = 0.0;  // over trials with a qualifying candidate
  double recovery_fraction = 0.0;
  int trials = 0;
  int trials_with_deviation = 0;
};

/// Sweep-based structure recovery study against the oracle marginal factor
/// model; one cell per (model, n).
std::vector<RecoveryCell> run_recovery_experiment(const RecoveryConfig& cfg);

void write_recovery_csv(const std::string& path,
                        const std::vector<RecoveryCell>& cells);
void write_cv_csv(const std::string& path, const CvResult& result);
void write_candidates_csv(const std::string& path,
                          const std::vector<CandidateModel>& candidates);

}  // namespace cfm
