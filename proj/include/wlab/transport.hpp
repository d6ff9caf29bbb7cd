#pragma once

#include <vector>

#include "wlab/distributions.hpp"
#include "wlab/empirical_measure.hpp"

namespace wlab {

struct TransportCost {
  double value = 0.0;  // >= 0
  double order = 1.0;  // r >= 1
};

// Exact W1 between two same-size empirical measures (sorted pairing).
double w1_empirical_pair(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

// W_r^r between two same-size empirical measures.
double wr_empirical_pair(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                         double r);

// W1(mu_n, law) = int |F_n - F|. Piecewise exact on the intervals between
// order statistics when the law integrates its own CDF exactly, otherwise
// adaptive quadrature at relative tolerance 1e-9 per strip.
double w1_vs_law(const EmpiricalMeasure& sample, const ReferenceLaw& law);
inline double w1_vs_law(const EmpiricalMeasure& s, const LawPtr& law) {
  return w1_vs_law(s, *law);
}

// W_r^r(mu_n, law) = int_0^1 |F_n^{-1}(u) - F^{-1}(u)|^r du over the n
// quantile strips.
double wr_vs_law(const EmpiricalMeasure& sample, const ReferenceLaw& law,
                 double r);
inline double wr_vs_law(const EmpiricalMeasure& s, const LawPtr& law, double r) {
  return wr_vs_law(s, *law, r);
}

// kappa_r * int |x|^{r-1} |F_n - F| dx with kappa_r = 2^{r-1} r; an upper
// bound for W_r^r, with equality at r = 1.
double ebralidze_majorant(const EmpiricalMeasure& sample,
                          const ReferenceLaw& law, double r);
inline double ebralidze_majorant(const EmpiricalMeasure& s, const LawPtr& law,
                                 double r) {
  return ebralidze_majorant(s, *law, r);
}

// Best value of |mu_n(f) - mu(f)| over piecewise-linear 1-Lipschitz f with
// slopes +-1 on the grid cells (plus the two unbounded tail cells). Always
// <= w1_vs_law; refining the grid closes the gap.
double dual_lower_bound(const EmpiricalMeasure& sample, const ReferenceLaw& law,
                        const std::vector<double>& grid);
inline double dual_lower_bound(const EmpiricalMeasure& s, const LawPtr& law,
                               const std::vector<double>& grid) {
  return dual_lower_bound(s, *law, grid);
}

// Small weighted point set for the desk-scale oracle.
struct WeightedPointSet {
  std::vector<double> x;
  std::vector<double> w;
};

// Exact minimum of sum pi_ij |x_i - y_j| over couplings, solved as a
// min-cost flow. Independent of the sorted-pairing route; instances are
// limited to 12 combined support points.
double lp_oracle(const WeightedPointSet& a, const WeightedPointSet& b);

}  // namespace wlab
