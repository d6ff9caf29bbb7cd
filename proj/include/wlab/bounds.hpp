#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "wlab/distributions.hpp"

namespace wlab {

using TailFn = std::function<double(double)>;      // H(t), t >= 0
using QuantileFn = std::function<double(double)>;  // Q(u), u in (0,1]

enum class AlphaKind { table, polynomial, geometric, log_polynomial };

// Nonincreasing dependence-coefficient sequence alpha(k), either tabulated
// or one of the decay models k^-a, rho^k, 1/(k ln^a k). alpha(0) defaults to
// 1/4 when a model does not pin it (sup_x 2F(1-F) <= 1/2, halved at the
// median); override via the alpha0 argument.
class AlphaSequence {
 public:
  static AlphaSequence table(std::vector<double> values);  // zero beyond the table
  static AlphaSequence table_with_power_tail(std::vector<double> values, double a);
  static AlphaSequence polynomial(double a, double c = 1.0, double alpha0 = 0.25);
  static AlphaSequence geometric(double rho, double c = 1.0, double alpha0 = 0.25);
  static AlphaSequence log_polynomial(double a, double c = 1.0, double alpha0 = 0.25);
  static AlphaSequence iid(double alpha0 = 0.25);  // zero from k = 1 on

  double value(std::uint64_t k) const;
  double alpha0() const { return value(0); }
  // #{k >= 0 : alpha(k) >= u}; +inf sentinel for u <= 0
  double inverse(double u) const;
  // min{q >= 1 : alpha(q) <= u}, capped at n
  std::uint64_t first_below(double u, std::uint64_t n) const;
  double partial_sum(std::uint64_t n) const;  // sum_{k=0..n}
  double total_sum() const;                   // +inf when not summable
  bool summable() const;
  double cesaro(std::uint64_t n) const;  // (1/n) sum_{k=1..n}
  // sum_{k=0..n} min(alpha(k), x)
  double sum_min(double x, std::uint64_t n) const;
  double sum_min_inf(double x) const;

  AlphaKind kind() const { return kind_; }
  double model_a() const { return a_; }
  double model_c() const { return c_; }

 private:
  AlphaSequence() = default;
  double raw(std::uint64_t k) const;

  AlphaKind kind_ = AlphaKind::table;
  std::vector<double> values_;
  double tail_a_ = 0.0;  // power-tail continuation of a table (0 = none)
  double a_ = 0.0, c_ = 1.0, alpha0_ = 0.25;
  std::shared_ptr<std::vector<double>> prefix_;  // lazily grown partial sums
};

// #{k : alpha(k) >= u}, Eq-(30)-style generalized inverse.
double alpha_inverse(const AlphaSequence& seq, double u);

// S_{alpha,n}(t) = sum_{k=0..n} min(alpha(k), H(t))
double s_alpha_n(const AlphaSequence& seq, const TailFn& H, double t,
                 std::uint64_t n);

// E W1 <= 4 int sqrt(min(H^2, S_{alpha,n}/n)); DivergenceError if infinite.
double bound_mean_w1(const AlphaSequence& seq, const TailFn& H, std::uint64_t n);

// ||W1||_2 <= (2 sqrt 2 / sqrt n) int sqrt(S_{alpha,n})
double bound_l2_w1(const AlphaSequence& seq, const TailFn& H, std::uint64_t n);

double u_n_cesaro(const AlphaSequence& seq, std::uint64_t n);

struct RateBound {
  double mean_bound = 0.0;
  double l2_bound = 0.0;
};
// Quantile-integral rate bounds for alpha(k) = O(k^-a), a > 1.
RateBound rate_poly(double a, const QuantileFn& Q, std::uint64_t n);
// ... for geometric alpha.
RateBound rate_geo(const QuantileFn& Q, std::uint64_t n);
// ... for vanishing but non-summable alpha, via the Cesaro mean u_n.
RateBound rate_nonsummable(const AlphaSequence& seq, const QuantileFn& Q,
                           std::uint64_t n);

// R_n(u) = (min{q >= 1 : alpha(q) <= u} ^ n) Q(u) and its generalized inverse.
double R_n(const AlphaSequence& seq, const QuantileFn& Q, double u,
           std::uint64_t n);
double R_n_inverse(const AlphaSequence& seq, const QuantileFn& Q, double x,
                   std::uint64_t n);

// von Bahr-Esseen moment bound, p in (1,2):
// n^{1-p} int_0^1 (alpha^{-1}(u) ^ n)^{p-1} Q^p(u) du
double bound_vbe(const AlphaSequence& seq, const QuantileFn& Q, double p,
                 std::uint64_t n);
// Equivalent series form n^{1-p} sum_k (k+1)^{p-2} int_0^{alpha(k)} Q^p.
double bound_vbe_sum_form(const AlphaSequence& seq, const QuantileFn& Q,
                          double p, std::uint64_t n);

// Tail bound for P(n W1 >= 6x) with explicit constants c1 = 36 and
// c2 = 64/(2-eta).
struct TailBoundValue {
  double value = 0.0;  // clipped to [0,1]
  double raw = 0.0;
};
TailBoundValue tail_bound_vbe(const AlphaSequence& seq, const QuantileFn& Q,
                              std::uint64_t n, double x, double eta);

// Rosenthal bound, p > 2: s_{alpha,n}^p / n^{p/2}
//   + n^{1-p} int (alpha_2^{-1}(u) ^ n)^{p-1} Q^p(u) du.
// seq1 feeds S_{alpha,n} (lag-1 coefficients), seq2 the pair coefficients.
struct RosenthalBound {
  double variance_term = 0.0;
  double tail_term = 0.0;
  double total = 0.0;
};
RosenthalBound bound_rosenthal(const AlphaSequence& seq1,
                               const AlphaSequence& seq2, const QuantileFn& Q,
                               const TailFn& H, double p, std::uint64_t n);

// ---------------------------------------------------------------------------
// Rate predictions for GPM maps with singular observables

enum class SingularSide { zero, one };

struct Statistic {
  enum class Kind { mean_w1, l2_w1, lp_w1, rosenthal } kind = Kind::mean_w1;
  double p = 0.0;  // for lp_w1 (1 < p < 2) and rosenthal (p > 2)
  static Statistic mean() { return {Kind::mean_w1, 0.0}; }
  static Statistic l2() { return {Kind::l2_w1, 0.0}; }
  static Statistic lp(double p) { return {Kind::lp_w1, p}; }
  static Statistic rosenthal(double p) { return {Kind::rosenthal, p}; }
};

struct NoPrediction : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RatePrediction {
  double exponent = 0.0;   // <= 0
  double log_power = 0.0;  // power of ln n multiplying n^exponent
  std::string regime;
};

// Every branch of the case tables for ||W1(mu_n, mu)||_p when g blows up at
// one endpoint like a power b. Throws NoPrediction outside the tabulated
// regimes.
RatePrediction predicted_rate(double gamma, double b, SingularSide side,
                              const Statistic& stat);
// The iid / m-dependent limit of the same statistics.
RatePrediction predicted_rate_iid(const Statistic& stat);

// ---------------------------------------------------------------------------
// CLT condition and quantile conditions

struct CltConditionReport {
  bool holds = false;
  bool closed_form = false;
  std::string detail;
};
// Finiteness of int H^{(1-2 gamma) / (2 (1-gamma))} dt for gamma in (0,1/2),
// by the truncation-growth heuristic.
CltConditionReport clt_condition_check(double gamma, const TailFn& H);
// Closed-form sufficient cases: g dominated near its singular endpoint by a
// power b_power with log exponent log_exp; true when the power is below the
// critical one, or equal to it with log_exp > 1.
CltConditionReport clt_condition_check(double gamma, double b_power,
                                       SingularSide side, double log_exp);

struct QuantileConditionReport {
  bool dmr = false;  // int alpha^{-1} Q^2 < inf
  bool dm = false;   // int alpha^{-1} Q / sqrt(int_0^u alpha^{-1}) < inf
  bool d = false;    // int sqrt(alpha^{-1}) Q / sqrt(u) < inf
};
// Evaluates the three quantile integrals with divergence detection and
// asserts the hierarchy d => dm => dmr.
QuantileConditionReport quantile_conditions(const AlphaSequence& seq,
                                            const QuantileFn& Q);

// Relative discrepancy between int sqrt(S_inf) dt and
// int Q(G_alpha^{-1}(v)) dv with G_alpha(x) = sqrt(int_0^x alpha^{-1}); the
// two sides of a proved identity, evaluated by independent quadratures.
double equiv_identity_check(const AlphaSequence& seq, const TailFn& H);

// Parametric tail models for the sufficient-condition checklist.
struct TailModel {
  std::string name;
  TailFn H;
  QuantileFn Q;
  double finite_moments_below = 0.0;  // E|X|^r < inf iff r < this
  static TailModel pareto(double p);
  static TailModel exponential(double rate = 1.0);
  static TailModel bounded(double M = 1.0);  // H = 1 on [0,M)
  static TailModel uniform01();              // H = 1 - t on [0,1]
};

struct SufficientConditionsReport {
  struct Item {
    bool applicable = false;
    bool holds = false;
  };
  Item items[5];
  bool any() const {
    for (const auto& it : items) {
      if (it.applicable && it.holds) return true;
    }
    return false;
  }
};
// The five closed-form criteria implying the dm condition: moment + series,
// tail + series, and the three integral tests matched to the alpha decay
// model.
SufficientConditionsReport sufficient_conditions(const AlphaSequence& seq,
                                                 const TailModel& tail);

}  // namespace wlab
