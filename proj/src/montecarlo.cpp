#include "wlab/montecarlo.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "wlab/quadrature.hpp"
#include "wlab/rng.hpp"

namespace wlab {

namespace {

double sig12(double x) {
  if (!std::isfinite(x)) return x;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return std::strtod(buf, nullptr);
}

}  // namespace

std::string ExperimentPlan::describe() const {
  std::ostringstream ss;
  ss << process.describe() << "|grid=";
  for (auto n : n_grid) ss << n << ",";
  ss << "|rep=" << replicas << "|stat="
     << (statistic.kind == ExperimentStatistic::Kind::w1 ? "w1" : "wr")
     << statistic.r << "|ref="
     << (reference ? reference->name() : "sample:" + std::to_string(n_ref))
     << "|base=" << base_seed;
  return ss.str();
}

std::uint64_t ExperimentPlan::hash() const { return fnv1a64(describe()); }

namespace {

void validate_plan(const ExperimentPlan& plan) {
  if (plan.n_grid.empty()) throw std::invalid_argument("plan: empty n grid");
  for (std::size_t i = 1; i < plan.n_grid.size(); ++i) {
    if (plan.n_grid[i] <= plan.n_grid[i - 1]) {
      throw std::invalid_argument("plan: n grid must be strictly increasing");
    }
  }
  if (plan.replicas == 0) throw std::invalid_argument("plan: no replicas");
  if (!plan.reference && plan.n_ref == 0) {
    throw std::invalid_argument("plan: reference unavailable");
  }
}

MomentEstimate bootstrap_moment(const std::vector<double>& raw, double order,
                                CounterRng rng) {
  MomentEstimate est;
  const auto n = raw.size();
  auto moment = [order](const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += order == 1.0 ? x : std::pow(x, order);
    acc /= double(v.size());
    return order == 1.0 ? acc : std::pow(acc, 1.0 / order);
  };
  est.value = moment(raw);
  const int B = 1000;
  std::vector<double> boots(B);
  std::vector<double> resample(n);
  for (int b = 0; b < B; ++b) {
    for (auto& v : resample) v = raw[rng.next_below(n)];
    boots[b] = moment(resample);
  }
  std::sort(boots.begin(), boots.end());
  est.ci_lo = boots[std::size_t(0.025 * (B - 1))];
  est.ci_hi = boots[std::size_t(0.975 * (B - 1))];
  return est;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentPlan& plan, int threads) {
  validate_plan(plan);
  const auto t0 = std::chrono::steady_clock::now();

  ExperimentResult res;
  res.plan_hash = plan.hash();
  res.n_grid = plan.n_grid;

  LawPtr reference = plan.reference;
  if (!reference) {
    ProcessSpec ref_spec = plan.process;
    ref_spec.seed = CounterRng::derive_key(res.plan_hash, fnv1a64("reference"));
    const auto long_run = simulate_series(ref_spec, plan.n_ref);
    reference = empirical_cdf(EmpiricalMeasure(long_run));
    const std::size_t half = plan.n_ref / 2;
    if (half >= 2) {
      EmpiricalMeasure a(std::vector<double>(long_run.begin(),
                                             long_run.begin() + half));
      EmpiricalMeasure b(std::vector<double>(long_run.begin() + half,
                                             long_run.begin() + 2 * half));
      res.reference_bias_proxy = w1_empirical_pair(a, b);
    }
  }

  const std::size_t cells = plan.n_grid.size() * plan.replicas;
  res.raw.assign(plan.n_grid.size(), std::vector<double>(plan.replicas, 0.0));
  res.seeds_used.assign(cells, 0);

  const std::uint64_t seed_root = hash_combine(res.plan_hash, plan.base_seed);
  auto run_cell = [&](std::size_t ni, std::size_t rep) {
    const std::uint64_t seed =
        CounterRng::derive_key(seed_root, hash_combine(plan.n_grid[ni], rep));
    ProcessSpec spec = plan.process;
    spec.seed = seed;
    const auto series = simulate_series(spec, plan.n_grid[ni]);
    EmpiricalMeasure mu(series);
    const double v =
        plan.statistic.kind == ExperimentStatistic::Kind::w1
            ? w1_vs_law(mu, *reference)
            : wr_vs_law(mu, *reference, plan.statistic.r);
    res.raw[ni][rep] = v;
    res.seeds_used[ni * plan.replicas + rep] = seed;
  };

  if (threads <= 1) {
    for (std::size_t ni = 0; ni < plan.n_grid.size(); ++ni) {
      for (std::size_t rep = 0; rep < plan.replicas; ++rep) run_cell(ni, rep);
    }
  } else {
    std::vector<std::thread> pool;
    const auto nt = std::size_t(threads);
    for (std::size_t w = 0; w < nt; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t cell = w; cell < cells; cell += nt) {
          run_cell(cell / plan.replicas, cell % plan.replicas);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  for (std::size_t ni = 0; ni < plan.n_grid.size(); ++ni) {
    const std::uint64_t boot_tag = hash_combine(seed_root, fnv1a64("bootstrap"));
    res.mean.push_back(bootstrap_moment(
        res.raw[ni], 1.0, CounterRng(boot_tag, 2 * ni)));
    res.l2.push_back(bootstrap_moment(
        res.raw[ni], 2.0, CounterRng(boot_tag, 2 * ni + 1)));
  }

  res.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return res;
}

// ---------------------------------------------------------------------------
// Rate regression

namespace {

struct OlsFit {
  double slope, intercept, log_coeff, r2;
};

OlsFit ols_log_fit(const std::vector<double>& logn,
                   const std::vector<double>& logm,
                   const std::vector<double>& loglogn, bool with_loglog) {
  const int n = int(logn.size());
  const int k = with_loglog ? 3 : 2;
  Eigen::MatrixXd X(n, k);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = logn[i];
    if (with_loglog) X(i, 2) = loglogn[i];
    y(i) = logm[i];
  }
  Eigen::VectorXd beta = (X.transpose() * X).ldlt().solve(X.transpose() * y);
  const Eigen::VectorXd resid = y - X * beta;
  const double ss_res = resid.squaredNorm();
  const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
  OlsFit fit;
  fit.intercept = beta(0);
  fit.slope = beta(1);
  fit.log_coeff = with_loglog ? beta(2) : 0.0;
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

}  // namespace

RateFit regress_rate(const std::vector<std::size_t>& n_grid,
                     const std::vector<double>& moments, bool log_correction) {
  if (n_grid.size() < 4) throw std::invalid_argument("regress_rate: need >= 4 grid points");
  if (n_grid.size() != moments.size()) {
    throw std::invalid_argument("regress_rate: size mismatch");
  }
  std::vector<double> logn, logm, lln;
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (!(moments[i] > 0.0)) {
      throw std::invalid_argument("regress_rate: nonpositive moment");
    }
    logn.push_back(std::log(double(n_grid[i])));
    logm.push_back(std::log(moments[i]));
    lln.push_back(std::log(std::log(double(n_grid[i]))));
  }
  const OlsFit fit = ols_log_fit(logn, logm, lln, log_correction);
  RateFit rf;
  rf.slope = fit.slope;
  rf.log_coeff = fit.log_coeff;
  rf.r2 = fit.r2;
  rf.stderr_boot = 0.0;
  return rf;
}

RateFit regress_rate(const ExperimentResult& result, double moment_order,
                     bool log_correction) {
  auto point_moment = [&](const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += moment_order == 1.0 ? x : std::pow(x, moment_order);
    acc /= double(v.size());
    return moment_order == 1.0 ? acc : std::pow(acc, 1.0 / moment_order);
  };
  std::vector<double> moments;
  for (const auto& v : result.raw) moments.push_back(point_moment(v));
  RateFit rf = regress_rate(result.n_grid, moments, log_correction);

  // bootstrap the slope by resampling replicas within each n
  const int B = 400;
  CounterRng rng(result.plan_hash, fnv1a64("slope-bootstrap"));
  std::vector<double> slopes;
  slopes.reserve(B);
  std::vector<double> bm(result.n_grid.size());
  std::vector<double> resample;
  for (int b = 0; b < B; ++b) {
    bool ok = true;
    for (std::size_t ni = 0; ni < result.raw.size(); ++ni) {
      const auto& v = result.raw[ni];
      resample.resize(v.size());
      for (auto& x : resample) x = v[rng.next_below(v.size())];
      bm[ni] = point_moment(resample);
      if (!(bm[ni] > 0.0)) ok = false;
    }
    if (!ok) continue;
    try {
      slopes.push_back(regress_rate(result.n_grid, bm, log_correction).slope);
    } catch (const std::invalid_argument&) {
    }
  }
  if (slopes.size() > 2) {
    double mean = 0.0;
    for (double s : slopes) mean += s;
    mean /= double(slopes.size());
    double var = 0.0;
    for (double s : slopes) var += (s - mean) * (s - mean);
    rf.stderr_boot = std::sqrt(var / double(slopes.size() - 1));
  }
  return rf;
}

// ---------------------------------------------------------------------------
// Covariance kernel and limit law

std::vector<double> covariance_kernel(const ProcessSpec& process,
                                      const std::vector<double>& grid,
                                      int lag_cutoff, std::size_t traj_len) {
  if (grid.size() < 2 || !std::is_sorted(grid.begin(), grid.end())) {
    throw std::invalid_argument("covariance kernel: grid must be sorted");
  }
  if (lag_cutoff < 0 || std::size_t(lag_cutoff) >= traj_len / 10) {
    throw std::invalid_argument("covariance kernel: lag cutoff >= N/10");
  }
  const auto series = simulate_series(process, traj_len);
  const int G = int(grid.size());
  const std::size_t N = series.size();

  // a_j = first grid index with t >= X_j, so 1_{X_j <= t_i} <=> i >= a_j
  std::vector<int> a(N);
  for (std::size_t j = 0; j < N; ++j) {
    a[j] = int(std::lower_bound(grid.begin(), grid.end(), series[j]) -
               grid.begin());
  }

  std::vector<double> kernel(std::size_t(G) * G, 0.0);
  std::vector<double> counts(std::size_t(G + 1) * (G + 1));
  std::vector<double> m1(G + 1), m2(G + 1);

  for (int k = 0; k <= lag_cutoff; ++k) {
    const std::size_t pairs = N - std::size_t(k);
    std::fill(counts.begin(), counts.end(), 0.0);
    std::fill(m1.begin(), m1.end(), 0.0);
    std::fill(m2.begin(), m2.end(), 0.0);
    for (std::size_t j = 0; j < pairs; ++j) {
      counts[std::size_t(a[j]) * (G + 1) + a[j + k]] += 1.0;
      m1[a[j]] += 1.0;
      m2[a[j + k]] += 1.0;
    }
    // prefix sums turn bin counts into joint/marginal CDF values
    for (int i = 1; i <= G; ++i) m1[i] += m1[i - 1];
    for (int i = 1; i <= G; ++i) m2[i] += m2[i - 1];
    for (int r = 0; r <= G; ++r) {
      for (int c = 1; c <= G; ++c) {
        counts[std::size_t(r) * (G + 1) + c] +=
            counts[std::size_t(r) * (G + 1) + c - 1];
      }
    }
    for (int c = 0; c <= G; ++c) {
      for (int r = 1; r <= G; ++r) {
        counts[std::size_t(r) * (G + 1) + c] +=
            counts[std::size_t(r - 1) * (G + 1) + c];
      }
    }
    for (int i = 0; i < G; ++i) {
      for (int l = 0; l < G; ++l) {
        const double joint = counts[std::size_t(i) * (G + 1) + l] / double(pairs);
        const double cov =
            joint - (m1[i] / double(pairs)) * (m2[l] / double(pairs));
        if (k == 0) {
          kernel[std::size_t(i) * G + l] += cov;
        } else {
          kernel[std::size_t(i) * G + l] += cov;
          kernel[std::size_t(l) * G + i] += cov;
        }
      }
    }
  }
  return kernel;
}

std::vector<double> brownian_bridge_kernel(const std::vector<double>& grid) {
  const int G = int(grid.size());
  std::vector<double> k(std::size_t(G) * G);
  for (int i = 0; i < G; ++i) {
    for (int j = 0; j < G; ++j) {
      k[std::size_t(i) * G + j] = std::min(grid[i], grid[j]) - grid[i] * grid[j];
    }
  }
  return k;
}

LimitLawSample simulate_limit_law(const std::vector<double>& kernel,
                                  const std::vector<double>& widths,
                                  std::size_t replicas, std::uint64_t seed) {
  const int G = int(widths.size());
  if (kernel.size() != std::size_t(G) * G) {
    throw std::invalid_argument("limit law: kernel/widths size mismatch");
  }
  Eigen::Map<const Eigen::MatrixXd> K(kernel.data(), G, G);
  Eigen::MatrixXd sym = 0.5 * (K + K.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const Eigen::VectorXd& lam = eig.eigenvalues();
  double neg = 0.0, total = 0.0;
  for (int i = 0; i < G; ++i) {
    total += std::abs(lam[i]);
    if (lam[i] < 0.0) neg += -lam[i];
  }
  LimitLawSample out;
  out.clip_fraction = total > 0.0 ? neg / total : 0.0;
  if (out.clip_fraction > 0.05) {
    throw NumericalFailure("kernel too noisy: clipped " +
                           std::to_string(out.clip_fraction * 100.0) +
                           "% of the spectrum");
  }
  Eigen::MatrixXd B = eig.eigenvectors();
  for (int i = 0; i < G; ++i) {
    B.col(i) *= std::sqrt(std::max(0.0, lam[i]));
  }
  CounterRng rng(seed, fnv1a64("limit-law"));
  Eigen::VectorXd z(G);
  out.samples.resize(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    for (int i = 0; i < G; ++i) z[i] = rng.normal();
    const Eigen::VectorXd g = B * z;
    double s = 0.0;
    for (int i = 0; i < G; ++i) s += std::abs(g[i]) * widths[i];
    out.samples[r] = s;
  }
  return out;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double ks = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) {
      ++i;
    } else {
      ++j;
    }
    ks = std::max(ks, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return ks;
}

TailFit tail_exponent(const std::vector<double>& samples,
                      const std::vector<double>& x_grid) {
  if (samples.size() < 1000) {
    throw std::invalid_argument("tail_exponent: need >= 1000 samples");
  }
  if (x_grid.empty()) throw std::invalid_argument("tail_exponent: empty grid");
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const double x_max = *std::max_element(x_grid.begin(), x_grid.end());

  std::vector<double> lx, lp;
  long count_at_largest = -1;
  for (double x : x_grid) {
    if (x < 0.1 * x_max || x <= 0.0) continue;  // upper decade only
    const long cnt = long(sorted.end() -
                          std::lower_bound(sorted.begin(), sorted.end(), x));
    if (cnt <= 0) continue;
    lx.push_back(std::log(x));
    lp.push_back(std::log(double(cnt) / double(sorted.size())));
    count_at_largest = cnt;
  }
  if (lx.size() < 3 || count_at_largest < 50) {
    throw std::runtime_error("tail_exponent: too few exceedances");
  }
  const int n = int(lx.size());
  double sx = 0.0, sy = 0.0;
  for (int i = 0; i < n; ++i) {
    sx += lx[i];
    sy += lp[i];
  }
  sx /= n;
  sy /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (lx[i] - sx) * (lx[i] - sx);
    sxy += (lx[i] - sx) * (lp[i] - sy);
  }
  TailFit fit;
  fit.slope = sxy / sxx;
  double ss_res = 0.0;
  for (int i = 0; i < n; ++i) {
    const double pred = sy + fit.slope * (lx[i] - sx);
    ss_res += (lp[i] - pred) * (lp[i] - pred);
  }
  fit.stderr_ols = n > 2 ? std::sqrt(ss_res / (n - 2) / sxx) : 0.0;
  fit.points_used = n;
  return fit;
}

// ---------------------------------------------------------------------------
// Output

void save_result_csv(const ExperimentPlan& plan, const ExperimentResult& result,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "process,gamma,b,n,replica,w1,seed\n";
  const char* pname = "iid";
  double gamma = 0.0;
  switch (plan.process.kind) {
    case ProcessKind::lsv: pname = "lsv"; gamma = plan.process.gamma; break;
    case ProcessKind::gpm: pname = "gpm"; gamma = plan.process.gpm.gamma; break;
    case ProcessKind::iid: pname = "iid"; break;
    case ProcessKind::m_dependent: pname = "mdep"; break;
  }
  const double b = plan.process.g.exponent;
  char buf[160];
  for (std::size_t ni = 0; ni < result.n_grid.size(); ++ni) {
    for (std::size_t rep = 0; rep < result.raw[ni].size(); ++rep) {
      std::snprintf(buf, sizeof(buf), "%s,%.12g,%.12g,%zu,%zu,%.12g,%llu\n",
                    pname, gamma, b, result.n_grid[ni], rep,
                    result.raw[ni][rep],
                    static_cast<unsigned long long>(
                        result.seeds_used[ni * result.raw[ni].size() + rep]));
      out << buf;
    }
  }
}

std::string result_summary_json(const ExperimentPlan& plan,
                                const ExperimentResult& result) {
  nlohmann::json j;
  char hash_hex[24];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(result.plan_hash));
  j["plan_hash"] = hash_hex;
  j["version"] = "0.1.0";
  j["process"] = plan.process.describe();
  j["replicas"] = plan.replicas;
  j["reference_bias_proxy"] = sig12(result.reference_bias_proxy);
  j["wall_ms"] = sig12(result.wall_ms);
  nlohmann::json per_n = nlohmann::json::array();
  for (std::size_t ni = 0; ni < result.n_grid.size(); ++ni) {
    nlohmann::json row;
    row["n"] = result.n_grid[ni];
    row["mean_w1"] = sig12(result.mean[ni].value);
    row["mean_ci"] = {sig12(result.mean[ni].ci_lo), sig12(result.mean[ni].ci_hi)};
    row["l2_w1"] = sig12(result.l2[ni].value);
    row["l2_ci"] = {sig12(result.l2[ni].ci_lo), sig12(result.l2[ni].ci_hi)};
    per_n.push_back(row);
  }
  j["results"] = per_n;
  return j.dump(2);
}

}  // namespace wlab
