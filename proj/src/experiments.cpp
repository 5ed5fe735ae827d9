#include "cfm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <Eigen/Cholesky>

#include "cfm/rng.hpp"

namespace cfm {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  KeyValueConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: missing '=' on line " +
                               std::to_string(lineno));
    cfg.values[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return cfg;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  values[key] = value;
}

bool KeyValueConfig::has(const std::string& key) const {
  return values.count(key) > 0;
}

std::string KeyValueConfig::get(const std::string& key,
                                const std::string& fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key,
                                  double fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : std::stod(it->second);
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : std::stoi(it->second);
}

std::vector<double> KeyValueConfig::get_doubles(
    const std::string& key, const std::vector<double>& fallback) const {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  std::vector<double> out;
  for (const auto& s : split_list(it->second)) out.push_back(std::stod(s));
  return out;
}

std::vector<int> KeyValueConfig::get_ints(
    const std::string& key, const std::vector<int>& fallback) const {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  std::vector<int> out;
  for (const auto& s : split_list(it->second)) out.push_back(std::stoi(s));
  return out;
}

CvResult cross_validate_factor(const Dataset& data, const CvOptions& opts) {
  const int n = data.n();
  if (n < 2) throw std::invalid_argument("cv: need at least 2 rows");
  if (!(opts.lambda_step > 0) || !(opts.lambda_min > 0) ||
      !(opts.lambda_max >= opts.lambda_min))
    throw std::invalid_argument("cv: bad lambda range");

  int n_test = opts.n_test > 0 ? opts.n_test : n / 4;
  if (n_test < 1 || n_test >= n)
    throw std::invalid_argument("cv: test split must leave both sides nonempty");

  // seeded shuffle -> disjoint train/test partition
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  CounterRng rng(opts.split_seed, 0xc51);
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng.uniform() * (i + 1));
    std::swap(perm[i], perm[std::min(j, i)]);
  }
  const int p = data.p;
  Matrix train(n - n_test, p), test(n_test, p);
  for (int i = 0; i < n - n_test; ++i)
    train.row(i) = data.rows.row(perm[i]).head(p);
  for (int i = 0; i < n_test; ++i)
    test.row(i) = data.rows.row(perm[n - n_test + i]).head(p);
  Dataset dtrain = Dataset::from_rows(train, p, 0);
  Matrix test_cov = test.transpose() * test / n_test;

  auto score = [&](const FactorModelParams& fm) -> std::optional<double> {
    Matrix theta = fm.precision();
    Eigen::LLT<Matrix> llt(theta);
    if (llt.info() != Eigen::Success) return std::nullopt;
    double logdet = 0.0;
    for (int i = 0; i < p; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    return 0.5 * (logdet - theta.cwiseProduct(test_cov).sum() -
                  p * std::log(2.0 * M_PI));
  };

  CvResult result;
  result.n_train = n - n_test;
  result.n_test = n_test;
  const BlockPrecision* warm = nullptr;
  BlockPrecision prev;
  bool have_best = false;
  for (double lambda = opts.lambda_min; lambda <= opts.lambda_max + 1e-12;
       lambda += opts.lambda_step) {
    auto [fm, rep] = solve_factor(dtrain, lambda, opts.solver, warm);
    if (!rep.converged) {
      ++result.skipped;
      continue;
    }
    prev = rep.estimate;
    warm = &prev;
    auto s = score(fm);
    if (!s) {
      ++result.skipped;
      continue;
    }
    CvPoint pt{lambda, rep.rank_l_y, *s};
    result.path.push_back(pt);
    auto it = result.best_by_rank.find(pt.rank);
    if (it == result.best_by_rank.end() || pt.test_loglik > it->second.test_loglik)
      result.best_by_rank[pt.rank] = pt;
    if (!have_best || pt.test_loglik > result.best_point.test_loglik) {
      result.best_point = pt;
      result.best = fm;
      have_best = true;
    }
  }
  if (!have_best)
    throw std::runtime_error("cv: no scoreable point on the lambda grid");
  return result;
}

SweepGrid RecoveryConfig::recovery_default_grid() {
  SweepGrid g;
  for (int i = 0; i < 10; ++i)
    g.lambda_values.push_back(std::pow(10.0, -1.7 + 2.0 * i / 9.0));
  g.gamma_values = {0.7, 1.4, 2.4, 4.0};
  return g;
}

RecoveryConfig RecoveryConfig::from_config(const KeyValueConfig& cfg) {
  RecoveryConfig rc;
  rc.p = cfg.get_int("p", rc.p);
  rc.q = cfg.get_int("q", rc.q);
  rc.trials = cfg.get_int("trials", rc.trials);
  rc.cond_bound = cfg.get_double("cond_bound", rc.cond_bound);
  rc.seed = static_cast<uint64_t>(cfg.get_int("seed", 0));
  rc.n_values = cfg.get_ints("n_values", rc.n_values);
  rc.workers = cfg.get_int("workers", 0);
  rc.angle_min_deg = cfg.get_double("angle_min_deg", rc.angle_min_deg);
  rc.solver.max_iters = cfg.get_int("max_iters", rc.solver.max_iters);
  rc.solver.tol_primal = cfg.get_double("tol", rc.solver.tol_primal);
  rc.solver.tol_dual = rc.solver.tol_primal;
  rc.solver.rank_tol = cfg.get_double("rank_tol", rc.solver.rank_tol);
  if (cfg.has("models")) {
    rc.models.clear();
    for (const auto& tok : split_list(cfg.get("models", ""))) {
      size_t x = tok.find('x');
      if (x == std::string::npos)
        throw std::runtime_error("config: models entries look like 2x2");
      rc.models.emplace_back(std::stoi(tok.substr(0, x)),
                             std::stoi(tok.substr(x + 1)));
    }
  }
  if (cfg.has("lambda_values") || cfg.has("gamma_values")) {
    SweepGrid g = recovery_default_grid();
    g.lambda_values = cfg.get_doubles("lambda_values", g.lambda_values);
    g.gamma_values = cfg.get_doubles("gamma_values", g.gamma_values);
    rc.grid = g;
  }
  return rc;
}

std::vector<RecoveryCell> run_recovery_experiment(const RecoveryConfig& cfg) {
  SweepGrid grid = cfg.grid.lambda_values.empty()
                       ? RecoveryConfig::recovery_default_grid()
                       : cfg.grid;
  grid.validate();
  if (cfg.trials < 1) throw std::invalid_argument("recovery: trials >= 1");

  struct Task {
    size_t model_idx, n_idx;
    int trial;
  };
  std::vector<Task> tasks;
  for (size_t mi = 0; mi < cfg.models.size(); ++mi)
    for (size_t ni = 0; ni < cfg.n_values.size(); ++ni)
      for (int t = 0; t < cfg.trials; ++t) tasks.push_back({mi, ni, t});

  std::vector<PopulationModel> pops;
  std::vector<FactorModelParams> oracles;
  for (size_t mi = 0; mi < cfg.models.size(); ++mi) {
    auto [k_x, k_u] = cfg.models[mi];
    pops.push_back(generate_synthetic(cfg.p, cfg.q, k_x, k_u, cfg.cond_bound,
                                      cfg.seed * 131 + mi));
    oracles.push_back(marginalize_factor(pops.back()));
  }

  struct TrialOut {
    bool recovered = false;
    double deviation = std::numeric_limits<double>::quiet_NaN();
  };
  std::vector<TrialOut> outs(tasks.size());

  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (size_t ti = next.fetch_add(1); ti < tasks.size();
         ti = next.fetch_add(1)) {
      const Task& task = tasks[ti];
      auto [k_x, k_u] = cfg.models[task.model_idx];
      uint64_t trial_seed = cfg.seed * 1000003ULL +
                            task.model_idx * 10007ULL + task.n_idx * 101ULL +
                            task.trial + 1;
      Dataset data = sample_observations(pops[task.model_idx],
                                         cfg.n_values[task.n_idx], trial_seed);
      SweepResult sweep = sweep_grid(data, grid, cfg.solver, 1);
      auto selected = select_models(sweep.candidates, oracles[task.model_idx],
                                    cfg.solver.rank_tol, cfg.angle_min_deg);
      TrialOut out;
      for (const auto& c : sweep.candidates) {
        if (c.deviation && c.d == k_x && c.rank_l == k_u) out.recovered = true;
        if (c.deviation &&
            (std::isnan(out.deviation) || *c.deviation < out.deviation))
          out.deviation = *c.deviation;
      }
      (void)selected;
      outs[ti] = out;
    }
  };
  int workers = cfg.workers > 0 ? cfg.workers : default_workers();
  std::vector<std::thread> pool;
  for (int w = 1; w < std::min<int>(workers, (int)tasks.size()); ++w)
    pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::vector<RecoveryCell> cells;
  for (size_t mi = 0; mi < cfg.models.size(); ++mi)
    for (size_t ni = 0; ni < cfg.n_values.size(); ++ni) {
      RecoveryCell cell;
      cell.k_x = cfg.models[mi].first;
      cell.k_u = cfg.models[mi].second;
      cell.n = cfg.n_values[ni];
      double dev_sum = 0.0;
      for (size_t ti = 0; ti < tasks.size(); ++ti) {
        if (tasks[ti].model_idx != mi || tasks[ti].n_idx != ni) continue;
        ++cell.trials;
        if (outs[ti].recovered) cell.recovery_fraction += 1.0;
        if (!std::isnan(outs[ti].deviation)) {
          ++cell.trials_with_deviation;
          dev_sum += outs[ti].deviation;
        }
      }
      cell.recovery_fraction /= cell.trials;
      cell.mean_deviation = cell.trials_with_deviation > 0
                                ? dev_sum / cell.trials_with_deviation
                                : std::numeric_limits<double>::quiet_NaN();
      cells.push_back(cell);
    }
  return cells;
}

void write_recovery_csv(const std::string& path,
                        const std::vector<RecoveryCell>& cells) {
  CsvTable t;
  t.header = {"k_x", "k_u", "n", "mean_deviation", "recovery_fraction",
              "trials", "trials_with_deviation"};
  t.values.resize(static_cast<int>(cells.size()), 7);
  for (size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    t.values.row(static_cast<int>(i)) << c.k_x, c.k_u, c.n, c.mean_deviation,
        c.recovery_fraction, c.trials, c.trials_with_deviation;
  }
  write_csv(path, t);
}

void write_cv_csv(const std::string& path, const CvResult& result) {
  CsvTable t;
  t.header = {"lambda", "rank", "test_loglik"};
  t.values.resize(static_cast<int>(result.path.size()), 3);
  for (size_t i = 0; i < result.path.size(); ++i)
    t.values.row(static_cast<int>(i)) << result.path[i].lambda,
        result.path[i].rank, result.path[i].test_loglik;
  write_csv(path, t);
}

void write_candidates_csv(const std::string& path,
                          const std::vector<CandidateModel>& candidates) {
  CsvTable t;
  t.header = {"lambda",  "gamma",    "d",        "rank_l",   "cond_i",
              "cond_ii", "cond_iii", "transverse", "deviation"};
  t.values.resize(static_cast<int>(candidates.size()), 9);
  for (size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    t.values.row(static_cast<int>(i)) << c.lambda_n, c.gamma, c.d, c.rank_l,
        c.conditions.rank_d, c.conditions.rank_sum, c.conditions.rank_combined,
        c.conditions.transverse,
        c.deviation ? *c.deviation : std::numeric_limits<double>::quiet_NaN();
  }
  write_csv(path, t);
}

}  // namespace cfm
