#include "wlab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "wlab/quadrature.hpp"

namespace wlab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double w1_empirical_pair(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.n() != b.n()) throw std::invalid_argument("unequal sample sizes");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.n(); ++i) sum += std::abs(a[i] - b[i]);
  return sum / double(a.n());
}

double wr_empirical_pair(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                         double r) {
  if (a.n() != b.n()) throw std::invalid_argument("unequal sample sizes");
  if (!(r >= 1.0)) throw std::invalid_argument("order r must be >= 1");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.n(); ++i) sum += std::pow(std::abs(a[i] - b[i]), r);
  return sum / double(a.n());
}

namespace {

// int_u^v |c - F| for constant empirical level c on [u,v]; the sign changes
// at most once, at the c-quantile.
double segment_gap(const ReferenceLaw& law, double u, double v, double c) {
  if (v <= u) return 0.0;
  double split = u;
  if (c <= 0.0) {
    split = u;
  } else if (c >= 1.0) {
    split = v;
  } else {
    split = std::clamp(law.quantile(c), u, v);
  }
  if (law.has_exact_integrals()) {
    const double below_u = law.integral_cdf_below(u);
    const double below_s = law.integral_cdf_below(split);
    const double below_v = law.integral_cdf_below(v);
    const double left = c * (split - u) - (below_s - below_u);
    const double right = (below_v - below_s) - c * (v - split);
    return std::max(0.0, left) + std::max(0.0, right);
  }
  auto f = [&](double t) { return std::abs(c - law.cdf(t)); };
  return integrate_adaptive(f, u, split, 1e-9) +
         integrate_adaptive(f, split, v, 1e-9);
}

}  // namespace

double w1_vs_law(const EmpiricalMeasure& sample, const ReferenceLaw& law) {
  if (!law.has_finite_moment(1.0)) throw std::runtime_error("W1 undefined");
  const auto& x = sample.points();
  const double n = double(sample.n());
  double total = law.integral_cdf_below(x.front());
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    total += segment_gap(law, x[i], x[i + 1], double(i + 1) / n);
  }
  total += law.integral_sf_above(x.back());
  return total;
}

namespace {

// int_lo^hi f(u) du where f may be singular at an endpoint of (0,1); blocks
// shrink dyadically toward the singular side.
double integrate_strip(const Integrand& f, double lo, double hi,
                       bool singular_lo, bool singular_hi) {
  if (hi <= lo) return 0.0;
  if (singular_lo && lo <= 0.0) {
    return integrate_lower_improper(f, hi, 1e-9);
  }
  if (singular_hi && hi >= 1.0) {
    auto g = [&](double s) { return f(1.0 - s); };
    return integrate_lower_improper(g, 1.0 - lo, 1e-9);
  }
  return integrate_adaptive(f, lo, hi, 1e-9);
}

}  // namespace

double wr_vs_law(const EmpiricalMeasure& sample, const ReferenceLaw& law,
                 double r) {
  if (!(r >= 1.0)) throw std::invalid_argument("order r must be >= 1");
  if (!law.has_finite_moment(r)) throw std::runtime_error("W_r undefined");
  const auto& x = sample.points();
  const std::size_t n = sample.n();
  const bool lo_unbounded = !std::isfinite(law.support_lo());
  const bool hi_unbounded = !std::isfinite(law.support_hi());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ulo = double(i) / double(n);
    const double uhi = double(i + 1) / double(n);
    const double xi = x[i];
    // below the split the law quantile sits at or under x_i
    const double split = std::clamp(law.cdf(xi), ulo, uhi);
    auto f = [&](double u) { return std::pow(std::abs(xi - law.quantile(u)), r); };
    total += integrate_strip(f, ulo, split, i == 0 && lo_unbounded, false);
    total += integrate_strip(f, split, uhi, false, i == n - 1 && hi_unbounded);
  }
  return total;
}

namespace {

// int_a^b |t|^{r-1} |c - F(t)| dt by adaptive quadrature, split at the
// crossing and at zero where the weight has a kink.
double weighted_segment_gap(const ReferenceLaw& law, double a, double b,
                            double c, double r) {
  if (b <= a) return 0.0;
  auto f = [&, c, r](double t) {
    return std::pow(std::abs(t), r - 1.0) * std::abs(c - law.cdf(t));
  };
  double split = a;
  if (c <= 0.0) {
    split = a;
  } else if (c >= 1.0) {
    split = b;
  } else {
    split = std::clamp(law.quantile(c), a, b);
  }
  double total = 0.0;
  std::vector<double> cuts = {a, split, b};
  if (a < 0.0 && b > 0.0) cuts.push_back(0.0);
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += integrate_adaptive(f, cuts[i], cuts[i + 1], 1e-9);
  }
  return total;
}

}  // namespace

double ebralidze_majorant(const EmpiricalMeasure& sample,
                          const ReferenceLaw& law, double r) {
  if (!(r >= 1.0)) throw std::invalid_argument("order r must be >= 1");
  if (r == 1.0) return w1_vs_law(sample, law);  // kappa_1 = 1
  if (!law.has_finite_moment(r)) {
    throw DivergenceError("ebralidze majorant: tail integral diverges");
  }
  const auto& x = sample.points();
  const double n = double(sample.n());
  const double kappa = std::pow(2.0, r - 1.0) * r;
  double total = 0.0;
  // lower tail: F_n = 0
  if (law.cdf(x.front()) > 0.0) {
    auto f = [&](double s) {
      const double t = x.front() - s;
      return std::pow(std::abs(t), r - 1.0) * law.cdf(t);
    };
    total += integrate_upper_improper(f, 0.0, 1e-9);
  }
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    total += weighted_segment_gap(law, x[i], x[i + 1], double(i + 1) / n, r);
  }
  // upper tail: F_n = 1
  if (law.cdf(x.back()) < 1.0) {
    auto f = [&](double s) {
      const double t = x.back() + s;
      return std::pow(std::abs(t), r - 1.0) * (1.0 - law.cdf(t));
    };
    total += integrate_upper_improper(f, 0.0, 1e-9);
  }
  return kappa * total;
}

double dual_lower_bound(const EmpiricalMeasure& sample, const ReferenceLaw& law,
                        const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("empty grid");
  if (grid.size() < 2) throw std::invalid_argument("grid needs >= 2 knots");
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw std::invalid_argument("grid knots must be sorted");
  }
  if (grid.front() > sample.min() || grid.back() < sample.max()) {
    throw std::invalid_argument("grid must span the sample range");
  }
  const auto& x = sample.points();
  const double n = double(sample.n());
  std::vector<double> prefix(x.size() + 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) prefix[i + 1] = prefix[i] + x[i];
  auto fn_below = [&](double t) {
    const auto idx = static_cast<std::size_t>(
        std::upper_bound(x.begin(), x.end(), t) - x.begin());
    return (double(idx) * t - prefix[idx]) / n;
  };
  // signed integral of (F_n - F) over each cell; the optimal slope on a cell
  // is the sign of that integral
  double total = std::abs(law.integral_cdf_below(grid.front()));
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double fn_part = fn_below(grid[k + 1]) - fn_below(grid[k]);
    const double law_part =
        law.integral_cdf_below(grid[k + 1]) - law.integral_cdf_below(grid[k]);
    total += std::abs(fn_part - law_part);
  }
  total += std::abs(law.integral_sf_above(grid.back()));
  return total;
}

// ---------------------------------------------------------------------------
// Desk-scale transport oracle: successive shortest paths on the bipartite
// flow network. Kept deliberately independent of the sorted-pairing formula.

namespace {

struct FlowEdge {
  int to;
  int rev;
  double cap;
  double cost;
};

class FlowGraph {
 public:
  explicit FlowGraph(int n) : adj_(n) {}
  void add_edge(int from, int to, double cap, double cost) {
    adj_[from].push_back({to, int(adj_[to].size()), cap, cost});
    adj_[to].push_back({from, int(adj_[from].size()) - 1, 0.0, -cost});
  }
  std::vector<std::vector<FlowEdge>> adj_;
};

}  // namespace

double lp_oracle(const WeightedPointSet& a, const WeightedPointSet& b) {
  const int A = int(a.x.size());
  const int B = int(b.x.size());
  if (A == 0 || B == 0) throw std::invalid_argument("empty point set");
  if (a.x.size() != a.w.size() || b.x.size() != b.w.size()) {
    throw std::invalid_argument("weights do not match points");
  }
  if (A + B > 12) throw std::runtime_error("oracle is desk-scale only");
  double mass_a = 0.0, mass_b = 0.0;
  for (double w : a.w) {
    if (!(w > 0.0)) throw std::invalid_argument("weights must be positive");
    mass_a += w;
  }
  for (double w : b.w) {
    if (!(w > 0.0)) throw std::invalid_argument("weights must be positive");
    mass_b += w;
  }
  if (std::abs(mass_a - mass_b) > 1e-9 * std::max(mass_a, mass_b)) {
    throw std::invalid_argument("total masses differ");
  }

  const int S = 0, T = A + B + 1, N = A + B + 2;
  FlowGraph g(N);
  for (int i = 0; i < A; ++i) g.add_edge(S, 1 + i, a.w[i], 0.0);
  for (int j = 0; j < B; ++j) g.add_edge(1 + A + j, T, b.w[j], 0.0);
  for (int i = 0; i < A; ++i) {
    for (int j = 0; j < B; ++j) {
      g.add_edge(1 + i, 1 + A + j, kInf, std::abs(a.x[i] - b.x[j]));
    }
  }

  const double eps = 1e-14 * std::max(1.0, mass_a);
  double cost = 0.0;
  double pushed = 0.0;
  for (int iter = 0; iter < 400; ++iter) {
    // Bellman-Ford over the residual graph
    std::vector<double> dist(N, kInf);
    std::vector<int> pe(N, -1), pv(N, -1);
    dist[S] = 0.0;
    for (int round = 0; round < N; ++round) {
      bool changed = false;
      for (int v = 0; v < N; ++v) {
        if (dist[v] == kInf) continue;
        for (int e = 0; e < int(g.adj_[v].size()); ++e) {
          const FlowEdge& ed = g.adj_[v][e];
          if (ed.cap > eps && dist[v] + ed.cost < dist[ed.to] - 1e-15) {
            dist[ed.to] = dist[v] + ed.cost;
            pv[ed.to] = v;
            pe[ed.to] = e;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (dist[T] == kInf) break;
    double bottleneck = kInf;
    for (int v = T; v != S; v = pv[v]) {
      bottleneck = std::min(bottleneck, g.adj_[pv[v]][pe[v]].cap);
    }
    if (!(bottleneck > eps)) break;
    for (int v = T; v != S; v = pv[v]) {
      FlowEdge& ed = g.adj_[pv[v]][pe[v]];
      ed.cap -= bottleneck;
      g.adj_[ed.to][ed.rev].cap += bottleneck;
    }
    cost += bottleneck * dist[T];
    pushed += bottleneck;
    if (pushed >= mass_a - eps) break;
  }
  if (pushed < mass_a - 1e-9 * std::max(1.0, mass_a)) {
    throw std::logic_error("transport oracle failed to route all mass");
  }
  return cost;
}

}  // namespace wlab
