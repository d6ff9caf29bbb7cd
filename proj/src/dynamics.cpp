#include "wlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "wlab/quadrature.hpp"
#include "wlab/rng.hpp"

namespace wlab {

namespace {

// x^g with cheap paths for the quarter exponents used throughout the lab;
// both lsv_step and the trajectory loop go through here so they agree bit
// for bit.
struct GammaPow {
  explicit GammaPow(double g) : gamma(g) {
    if (g == 0.5) {
      mode = 1;
    } else if (g == 0.25) {
      mode = 2;
    } else if (g == 0.75) {
      mode = 3;
    }
  }
  double operator()(double x) const {
    switch (mode) {
      case 1: return std::sqrt(x);
      case 2: return std::sqrt(std::sqrt(x));
      case 3: {
        const double s = std::sqrt(x);
        return s * std::sqrt(s);
      }
      default: return std::pow(x, gamma);
    }
  }
  double gamma;
  int mode = 0;
};

struct LsvStepper {
  explicit LsvStepper(double g) : pw(g), two_g(std::pow(2.0, g)) {}
  double operator()(double x) const {
    if (x < 0.5) return x * (1.0 + two_g * pw(x));
    return 2.0 * x - 1.0;
  }
  GammaPow pw;
  double two_g;
};

}  // namespace

double lsv_step(double x, double gamma) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("lsv_step: x outside [0,1]");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("lsv_step: gamma outside (0,1)");
  return LsvStepper(gamma)(x);
}

GpmMap lsv_as_gpm(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("lsv map: gamma outside (0,1)");
  GpmMap m;
  m.gamma = gamma;
  m.breakpoints = {0.0, 0.5, 1.0};
  LsvStepper step(gamma);
  m.branches.push_back({0.0, 0.5, [step](double x) {
                          return x * (1.0 + step.two_g * step.pw(x));
                        }});
  m.branches.push_back({0.5, 1.0, [](double x) { return 2.0 * x - 1.0; }});
  return m;
}

GpmMap doubling_map() {
  GpmMap m;
  m.gamma = 0.0;
  m.breakpoints = {0.0, 0.5, 1.0};
  m.branches.push_back({0.0, 0.5, [](double x) { return 2.0 * x; }});
  m.branches.push_back({0.5, 1.0, [](double x) { return 2.0 * x - 1.0; }});
  return m;
}

double gpm_step(const GpmMap& map, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("gpm_step: x outside [0,1]");
  const auto& y = map.breakpoints;
  auto it = std::upper_bound(y.begin(), y.end(), x);
  auto k = static_cast<std::size_t>(it - y.begin());
  k = (k == 0) ? 0 : k - 1;                      // tie at y_k -> branch k
  k = std::min(k, map.branches.size() - 1);      // x = 1 -> last branch
  return std::clamp(map.branches[k].f(x), 0.0, 1.0);
}

std::string ProcessSpec::describe() const {
  std::ostringstream ss;
  switch (kind) {
    case ProcessKind::lsv:
      ss << "lsv(gamma=" << gamma << ",g=" << g.describe() << ")";
      break;
    case ProcessKind::gpm:
      ss << "gpm(d=" << gpm.branches.size() << ",gamma=" << gpm.gamma
         << ",g=" << g.describe() << ")";
      break;
    case ProcessKind::iid:
      ss << "iid(" << (iid_law ? iid_law->name() : "?") << ")";
      break;
    case ProcessKind::m_dependent:
      ss << "mdep(m=" << window << ")";
      break;
  }
  ss << "|burn=" << burn_in << "|seed=" << seed;
  if (forced_x0) ss << "|x0=" << *forced_x0;
  return ss.str();
}

std::uint64_t ProcessSpec::hash() const { return fnv1a64(describe()); }

namespace {

std::vector<double> simulate_map(const ProcessSpec& spec, std::size_t n,
                                 SimulationStats& stats) {
  const GpmMap gpm = (spec.kind == ProcessKind::lsv) ? lsv_as_gpm(spec.gamma)
                                                     : spec.gpm;
  const bool is_lsv = spec.kind == ProcessKind::lsv;
  const LsvStepper lsv(is_lsv ? spec.gamma : 0.5);
  CounterRng rng(spec.seed, fnv1a64("trajectory"));

  std::vector<double> out;
  out.reserve(n);
  for (int attempt = 0; attempt < 100; ++attempt) {
    double x = (attempt == 0 && spec.forced_x0) ? *spec.forced_x0
                                                : rng.uniform01();
    out.clear();
    bool restart = false;
    const long total = spec.burn_in + long(n);
    for (long k = 0; k < total; ++k) {
      const double next = is_lsv ? lsv(x) : gpm_step(gpm, x);
      // Exact absorption at 0 or 1 is a rounding artifact off the invariant
      // measure; restart the replica on a fresh draw.
      if ((next == 0.0 && x != 0.0) || (next == 1.0 && x != 1.0)) {
        ++stats.restarts;
        restart = true;
        break;
      }
      x = next;
      if (k >= spec.burn_in) out.push_back(spec.g.eval_closure(x));
    }
    if (!restart) return out;
  }
  throw NumericalFailure("trajectory restarted 100 times without surviving");
}

}  // namespace

std::vector<double> simulate_series(const ProcessSpec& spec, std::size_t n,
                                    SimulationStats& stats) {
  if (n == 0) throw std::invalid_argument("simulate_series: n must be >= 1");
  if (spec.burn_in < 0) throw std::invalid_argument("simulate_series: negative burn-in");
  switch (spec.kind) {
    case ProcessKind::lsv:
    case ProcessKind::gpm:
      return simulate_map(spec, n, stats);
    case ProcessKind::iid: {
      if (!spec.iid_law) throw std::invalid_argument("iid process needs a law");
      CounterRng rng(spec.seed, fnv1a64("trajectory"));
      std::vector<double> out(n);
      for (auto& v : out) v = spec.iid_law->quantile(rng.uniform01());
      return out;
    }
    case ProcessKind::m_dependent: {
      if (spec.window < 0) throw std::invalid_argument("negative window");
      const std::size_t m = std::size_t(spec.window);
      CounterRng rng(spec.seed, fnv1a64("trajectory"));
      std::vector<double> u(n + m);
      for (auto& v : u) v = rng.uniform01();
      std::vector<double> out(n);
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += u[j];
      for (std::size_t k = 0; k < n; ++k) {
        acc += u[k + m];
        out[k] = acc / double(m + 1);
        acc -= u[k];
      }
      return out;
    }
  }
  throw std::invalid_argument("invalid process spec");
}

std::vector<double> simulate_series(const ProcessSpec& spec, std::size_t n) {
  SimulationStats stats;
  return simulate_series(spec, n, stats);
}

void save_trajectory_csv(const ProcessSpec& spec,
                         const std::vector<double>& series,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "x_%016llx\n",
                static_cast<unsigned long long>(spec.hash()));
  out << buf;
  for (double v : series) {
    std::snprintf(buf, sizeof(buf), "%.12g\n", v);
    out << buf;
  }
}

}  // namespace wlab
