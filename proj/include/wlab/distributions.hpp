#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "wlab/empirical_measure.hpp"

namespace wlab {

// A probability law on the line, exposing the distribution function F, the
// tail function H(t) = P(|X| > t) on t >= 0, and the two generalized
// inverses: quantile() inverts F, tail_quantile() inverts H
// (Q(u) = inf{t >= 0 : H(t) <= u}).
//
// Laws that can integrate their own CDF exactly report
// has_exact_integrals(); the transport module then evaluates Wasserstein
// integrals piecewise-exactly instead of by quadrature.
class ReferenceLaw {
 public:
  virtual ~ReferenceLaw() = default;

  virtual std::string name() const = 0;
  virtual double cdf(double t) const = 0;                    // P(X <= t)
  virtual double cdf_left(double t) const { return cdf(t); }  // P(X < t)
  virtual double tail(double t) const;
  virtual double quantile(double u) const;       // inf{t : F(t) >= u}
  virtual double tail_quantile(double u) const;  // inf{t>=0 : H(t) <= u}
  virtual bool has_finite_moment(double r) const = 0;
  virtual double support_lo() const = 0;
  virtual double support_hi() const = 0;

  virtual bool has_exact_integrals() const { return false; }
  // integral_cdf_below(t) = int_{-inf}^t F(s) ds
  virtual double integral_cdf_below(double t) const;
  // integral_sf_above(t) = int_t^{+inf} (1 - F(s)) ds
  virtual double integral_sf_above(double t) const;
};

using LawPtr = std::shared_ptr<const ReferenceLaw>;

LawPtr uniform_law(double a = 0.0, double b = 1.0);
LawPtr point_mass_law(double c);
LawPtr exponential_law(double rate = 1.0);
// P(X > t) = min(1, t^-p), support [1, inf); moments of order r < p.
LawPtr pareto_law(double p);
// Law defined only through its CDF; inverses by bisection, integrals by
// quadrature with tail truncation where H < 1e-12.
LawPtr generic_law(std::string name, std::function<double(double)> cdf,
                   double lo, double hi,
                   double finite_moments_below =
                       std::numeric_limits<double>::infinity());

// Piecewise-linear CDF on knots; repeated abscissae encode jumps.
class TabulatedLaw final : public ReferenceLaw {
 public:
  TabulatedLaw(std::vector<double> x, std::vector<double> F);

  std::string name() const override { return "tabulated"; }
  double cdf(double t) const override;
  double cdf_left(double t) const override;
  double quantile(double u) const override;
  double tail_quantile(double u) const override;
  bool has_finite_moment(double) const override { return true; }
  double support_lo() const override { return x_.front(); }
  double support_hi() const override { return x_.back(); }
  bool has_exact_integrals() const override { return true; }
  double integral_cdf_below(double t) const override;
  double integral_sf_above(double t) const override;

  const std::vector<double>& knots() const { return x_; }
  const std::vector<double>& values() const { return F_; }

  void to_csv(const std::string& path) const;
  static std::shared_ptr<const TabulatedLaw> from_csv(const std::string& path);

 private:
  std::vector<double> x_, F_;
  std::vector<double> below_;  // cumulative int F up to each knot
  std::vector<double> above_;  // int (1-F) from each knot to the last
};

LawPtr tabulated_law(std::vector<double> x, std::vector<double> F);

// Step CDF with jumps 1/n at the order statistics.
LawPtr empirical_cdf(const EmpiricalMeasure& sample);

// Generalized inverse of a nonincreasing tail callable, by bisection to
// absolute tolerance 1e-12. u <= 0 is an error (the value may be +inf).
double quantile_from_tail(const std::function<double(double)>& tail, double u);
// Exact table version; pairs are (t, H(t)) with t ascending.
double quantile_from_tail(const std::vector<std::pair<double, double>>& table,
                          double u);

// Monotone observables g on (0,1). The optional log factor |ln .|^{-beta}
// is capped at distance 1/e from the singular endpoint so the function
// stays monotone where the power part does.
enum class ObservableKind { identity, singular_at_zero, singular_at_one, custom };

struct Observable {
  ObservableKind kind = ObservableKind::identity;
  double exponent = 0.0;      // b >= 0
  double scale = 1.0;         // C > 0
  double log_exponent = 0.0;  // beta >= 0
  std::function<double(double)> fn;
  bool fn_nonincreasing = false;

  static Observable identity();
  static Observable singular_at_zero(double b, double C = 1.0, double beta = 0.0);
  static Observable singular_at_one(double b, double C = 1.0, double beta = 0.0);
  static Observable custom(std::function<double(double)> f, bool nonincreasing);

  bool nonincreasing() const;
  double eval(double x) const;          // x in (0,1) required
  double eval_closure(double x) const;  // limits at the endpoints, may be +inf
  std::string describe() const;
};

double observable_eval(const Observable& g, double x);

}  // namespace wlab
