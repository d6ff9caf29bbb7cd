#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wlab/distributions.hpp"
#include "wlab/dynamics.hpp"
#include "wlab/transport.hpp"

namespace wlab {

struct ExperimentStatistic {
  enum class Kind { w1, wr } kind = Kind::w1;
  double r = 1.0;
  static ExperimentStatistic w1() { return {Kind::w1, 1.0}; }
  static ExperimentStatistic wr(double r) { return {Kind::wr, r}; }
};

struct ExperimentPlan {
  ProcessSpec process;
  std::vector<std::size_t> n_grid;  // strictly increasing
  std::size_t replicas = 100;
  ExperimentStatistic statistic;
  LawPtr reference;        // analytic or tabulated reference law
  std::size_t n_ref = 0;   // long-run reference sample size when no law given
  std::uint64_t base_seed = 0;

  std::string describe() const;
  std::uint64_t hash() const;
};

struct MomentEstimate {
  double value = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct ExperimentResult {
  std::vector<std::size_t> n_grid;
  std::vector<std::vector<double>> raw;  // [n_index][replica], replica-ordered
  std::vector<MomentEstimate> mean;      // per n
  std::vector<MomentEstimate> l2;        // per n: (E W^2)^{1/2}
  std::uint64_t plan_hash = 0;
  // W1 between the two halves of the long-run reference sample; 0 when an
  // analytic reference was used
  double reference_bias_proxy = 0.0;
  double wall_ms = 0.0;
  std::vector<std::uint64_t> seeds_used;  // [n_index * replicas + replica]
};

// Simulates every (n, replica) cell with a per-cell counter-derived seed and
// evaluates the statistic against the reference. Deterministic given the
// plan, independent of the worker count.
ExperimentResult run_experiment(const ExperimentPlan& plan, int threads = 1);

struct RateFit {
  double slope = 0.0;
  double stderr_boot = 0.0;
  double r2 = 0.0;
  double log_coeff = 0.0;  // coefficient of the ln ln n regressor, when fit
};

// OLS of log(moment) on log(n), optionally with a ln ln n regressor.
RateFit regress_rate(const std::vector<std::size_t>& n_grid,
                     const std::vector<double>& moments, bool log_correction);
// Same fit on an experiment result (moment order 1 or 2), with a bootstrap
// standard error over replicas.
RateFit regress_rate(const ExperimentResult& result, double moment_order,
                     bool log_correction);

// Lag-windowed estimate of K(t,s) = sum_{|k|<=L} Cov(1_{X_0<=t}, 1_{X_k<=s})
// on a sorted grid, from one trajectory of the given length. Row-major
// grid.size()^2 matrix, symmetric by construction.
std::vector<double> covariance_kernel(const ProcessSpec& process,
                                      const std::vector<double>& grid,
                                      int lag_cutoff, std::size_t traj_len);

// Brownian-bridge kernel min(t,s) - ts on a grid in [0,1].
std::vector<double> brownian_bridge_kernel(const std::vector<double>& grid);

struct LimitLawSample {
  std::vector<double> samples;  // Riemann sums sum |G(t_i)| w_i
  double clip_fraction = 0.0;   // |negative spectrum| / |spectrum|
};

// Draws centered Gaussians with the given covariance (eigenvalues clipped at
// zero; NumericalFailure when the clipped mass exceeds 5%).
LimitLawSample simulate_limit_law(const std::vector<double>& kernel,
                                  const std::vector<double>& widths,
                                  std::size_t replicas, std::uint64_t seed);

// Two-sample Kolmogorov-Smirnov statistic.
double ks_distance(std::vector<double> a, std::vector<double> b);

struct TailFit {
  double slope = 0.0;
  double stderr_ols = 0.0;
  int points_used = 0;
};

// OLS of log P(W >= x) against log x over the upper decade of the grid.
// Errors out when the largest usable x has fewer than 50 exceedances.
TailFit tail_exponent(const std::vector<double>& samples,
                      const std::vector<double>& x_grid);

// CSV rows: process, gamma, b, n, replica, w1, seed.
void save_result_csv(const ExperimentPlan& plan, const ExperimentResult& result,
                     const std::string& path);
std::string result_summary_json(const ExperimentPlan& plan,
                                const ExperimentResult& result);

}  // namespace wlab
