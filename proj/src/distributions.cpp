#include "wlab/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "wlab/quadrature.hpp"

namespace wlab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// ReferenceLaw defaults

double ReferenceLaw::tail(double t) const {
  if (t < 0.0) return 1.0;
  double h = 1.0 - cdf(t) + cdf_left(-t);
  return std::clamp(h, 0.0, 1.0);
}

double ReferenceLaw::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("quantile: u outside (0,1)");
  double lo = support_lo();
  double hi = support_hi();
  if (!std::isfinite(lo)) {
    lo = std::min(-1.0, std::isfinite(hi) ? hi - 1.0 : -1.0);
    while (cdf(lo) >= u && lo > -1e300) lo *= 2.0;
  }
  if (!std::isfinite(hi)) {
    hi = std::max(1.0, lo + 1.0);
    while (cdf(hi) < u && hi < 1e300) hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-14 * (1.0 + std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) >= u) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double ReferenceLaw::tail_quantile(double u) const {
  return wlab::quantile_from_tail([this](double t) { return tail(t); }, u);
}

double ReferenceLaw::integral_cdf_below(double t) const {
  // int_0^inf F(t - s) ds; the improper integrator truncates once the
  // integrand is negligible (H below ~1e-12 contributes nothing visible).
  return integrate_upper_improper([this, t](double s) { return cdf(t - s); },
                                  0.0, 1e-9);
}

double ReferenceLaw::integral_sf_above(double t) const {
  return integrate_upper_improper(
      [this, t](double s) { return 1.0 - cdf(t + s); }, 0.0, 1e-9);
}

// ---------------------------------------------------------------------------
// Built-in laws

namespace {

class UniformLaw final : public ReferenceLaw {
 public:
  UniformLaw(double a, double b) : a_(a), b_(b) {
    if (!(a < b)) throw std::invalid_argument("uniform: need a < b");
  }
  std::string name() const override { return "uniform"; }
  double cdf(double t) const override {
    return std::clamp((t - a_) / (b_ - a_), 0.0, 1.0);
  }
  double quantile(double u) const override {
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("quantile: u outside (0,1)");
    return a_ + u * (b_ - a_);
  }
  bool has_finite_moment(double) const override { return true; }
  double support_lo() const override { return a_; }
  double support_hi() const override { return b_; }
  bool has_exact_integrals() const override { return true; }
  double integral_cdf_below(double t) const override {
    if (t <= a_) return 0.0;
    if (t >= b_) return 0.5 * (b_ - a_) + (t - b_);
    return 0.5 * (t - a_) * (t - a_) / (b_ - a_);
  }
  double integral_sf_above(double t) const override {
    if (t >= b_) return 0.0;
    if (t <= a_) return (a_ - t) + 0.5 * (b_ - a_);
    return 0.5 * (b_ - t) * (b_ - t) / (b_ - a_);
  }

 private:
  double a_, b_;
};

class PointMassLaw final : public ReferenceLaw {
 public:
  explicit PointMassLaw(double c) : c_(c) {}
  std::string name() const override { return "pointmass"; }
  double cdf(double t) const override { return t >= c_ ? 1.0 : 0.0; }
  double cdf_left(double t) const override { return t > c_ ? 1.0 : 0.0; }
  double tail(double t) const override {
    return (t >= 0.0 && t < std::abs(c_)) ? 1.0 : 0.0;
  }
  double quantile(double) const override { return c_; }
  double tail_quantile(double u) const override {
    if (u <= 0.0) throw std::invalid_argument("tail_quantile: u <= 0");
    return u >= 1.0 ? 0.0 : std::abs(c_);
  }
  bool has_finite_moment(double) const override { return true; }
  double support_lo() const override { return c_; }
  double support_hi() const override { return c_; }
  bool has_exact_integrals() const override { return true; }
  double integral_cdf_below(double t) const override { return std::max(0.0, t - c_); }
  double integral_sf_above(double t) const override { return std::max(0.0, c_ - t); }

 private:
  double c_;
};

class ExponentialLaw final : public ReferenceLaw {
 public:
  explicit ExponentialLaw(double rate) : rate_(rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate <= 0");
  }
  std::string name() const override { return "exponential"; }
  double cdf(double t) const override {
    return t <= 0.0 ? 0.0 : -std::expm1(-rate_ * t);
  }
  double tail(double t) const override {
    return t < 0.0 ? 1.0 : std::exp(-rate_ * t);
  }
  double quantile(double u) const override {
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("quantile: u outside (0,1)");
    return -std::log1p(-u) / rate_;
  }
  double tail_quantile(double u) const override {
    if (u <= 0.0) throw std::invalid_argument("tail_quantile: u <= 0");
    return u >= 1.0 ? 0.0 : -std::log(u) / rate_;
  }
  bool has_finite_moment(double) const override { return true; }
  double support_lo() const override { return 0.0; }
  double support_hi() const override { return kInf; }
  bool has_exact_integrals() const override { return true; }
  double integral_cdf_below(double t) const override {
    if (t <= 0.0) return 0.0;
    return t + std::expm1(-rate_ * t) / rate_;
  }
  double integral_sf_above(double t) const override {
    if (t <= 0.0) return -t + 1.0 / rate_;
    return std::exp(-rate_ * t) / rate_;
  }

 private:
  double rate_;
};

class ParetoLaw final : public ReferenceLaw {
 public:
  explicit ParetoLaw(double p) : p_(p) {
    if (!(p > 0.0)) throw std::invalid_argument("pareto: p <= 0");
  }
  std::string name() const override { return "pareto"; }
  double cdf(double t) const override {
    return t <= 1.0 ? 0.0 : 1.0 - std::pow(t, -p_);
  }
  double tail(double t) const override {
    if (t < 0.0) return 1.0;
    return t <= 1.0 ? 1.0 : std::pow(t, -p_);
  }
  double quantile(double u) const override {
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("quantile: u outside (0,1)");
    return std::pow(1.0 - u, -1.0 / p_);
  }
  double tail_quantile(double u) const override {
    if (u <= 0.0) throw std::invalid_argument("tail_quantile: u <= 0");
    return u >= 1.0 ? 0.0 : std::pow(u, -1.0 / p_);
  }
  bool has_finite_moment(double r) const override { return r < p_; }
  double support_lo() const override { return 1.0; }
  double support_hi() const override { return kInf; }
  bool has_exact_integrals() const override { return true; }
  double integral_cdf_below(double t) const override {
    if (t <= 1.0) return 0.0;
    if (p_ == 1.0) return (t - 1.0) - std::log(t);
    return (t - 1.0) + (std::pow(t, 1.0 - p_) - 1.0) / (p_ - 1.0);
  }
  double integral_sf_above(double t) const override {
    if (p_ <= 1.0) return kInf;
    if (t <= 1.0) return (1.0 - t) + 1.0 / (p_ - 1.0);
    return std::pow(t, 1.0 - p_) / (p_ - 1.0);
  }

 private:
  double p_;
};

class GenericLaw final : public ReferenceLaw {
 public:
  GenericLaw(std::string name, std::function<double(double)> cdf, double lo,
             double hi, double moments_below)
      : name_(std::move(name)),
        cdf_(std::move(cdf)),
        lo_(lo),
        hi_(hi),
        moments_below_(moments_below) {}
  std::string name() const override { return name_; }
  double cdf(double t) const override { return cdf_(t); }
  bool has_finite_moment(double r) const override { return r < moments_below_; }
  double support_lo() const override { return lo_; }
  double support_hi() const override { return hi_; }

 private:
  std::string name_;
  std::function<double(double)> cdf_;
  double lo_, hi_;
  double moments_below_;
};

class EmpiricalLaw final : public ReferenceLaw {
 public:
  explicit EmpiricalLaw(const EmpiricalMeasure& m)
      : x_(m.points()), abs_(m.points()) {
    for (double& v : abs_) v = std::abs(v);
    std::sort(abs_.begin(), abs_.end());
    prefix_.resize(x_.size() + 1, 0.0);
    for (std::size_t i = 0; i < x_.size(); ++i) prefix_[i + 1] = prefix_[i] + x_[i];
  }
  std::string name() const override { return "empirical"; }
  double cdf(double t) const override {
    return double(std::upper_bound(x_.begin(), x_.end(), t) - x_.begin()) /
           double(x_.size());
  }
  double cdf_left(double t) const override {
    return double(std::lower_bound(x_.begin(), x_.end(), t) - x_.begin()) /
           double(x_.size());
  }
  double tail(double t) const override {
    if (t < 0.0) return 1.0;
    return double(abs_.end() - std::upper_bound(abs_.begin(), abs_.end(), t)) /
           double(abs_.size());
  }
  double quantile(double u) const override {
    if (!(u > 0.0 && u <= 1.0)) throw std::invalid_argument("quantile: u outside (0,1]");
    const double n = double(x_.size());
    auto k = static_cast<std::size_t>(std::ceil(u * n - 1e-12));
    k = std::min(std::max<std::size_t>(k, 1), x_.size());
    return x_[k - 1];
  }
  double tail_quantile(double u) const override {
    if (u <= 0.0) throw std::invalid_argument("tail_quantile: u <= 0");
    const double n = double(abs_.size());
    auto k = static_cast<std::size_t>(std::floor(u * n + 1e-12));
    if (k >= abs_.size()) return 0.0;
    return abs_[abs_.size() - 1 - k];
  }
  bool has_finite_moment(double) const override { return true; }
  double support_lo() const override { return x_.front(); }
  double support_hi() const override { return x_.back(); }
  bool has_exact_integrals() const override { return true; }
  double integral_cdf_below(double t) const override {
    const auto idx = static_cast<std::size_t>(
        std::upper_bound(x_.begin(), x_.end(), t) - x_.begin());
    return (double(idx) * t - prefix_[idx]) / double(x_.size());
  }
  double integral_sf_above(double t) const override {
    const auto idx = static_cast<std::size_t>(
        std::upper_bound(x_.begin(), x_.end(), t) - x_.begin());
    const double tail_sum = prefix_.back() - prefix_[idx];
    return (tail_sum - double(x_.size() - idx) * t) / double(x_.size());
  }

 private:
  std::vector<double> x_, abs_, prefix_;
};

}  // namespace

LawPtr uniform_law(double a, double b) { return std::make_shared<UniformLaw>(a, b); }
LawPtr point_mass_law(double c) { return std::make_shared<PointMassLaw>(c); }
LawPtr exponential_law(double rate) { return std::make_shared<ExponentialLaw>(rate); }
LawPtr pareto_law(double p) { return std::make_shared<ParetoLaw>(p); }
LawPtr generic_law(std::string name, std::function<double(double)> cdf, double lo,
                   double hi, double finite_moments_below) {
  return std::make_shared<GenericLaw>(std::move(name), std::move(cdf), lo, hi,
                                      finite_moments_below);
}
LawPtr empirical_cdf(const EmpiricalMeasure& sample) {
  return std::make_shared<EmpiricalLaw>(sample);
}

// ---------------------------------------------------------------------------
// TabulatedLaw

TabulatedLaw::TabulatedLaw(std::vector<double> x, std::vector<double> F)
    : x_(std::move(x)), F_(std::move(F)) {
  if (x_.size() != F_.size() || x_.size() < 2) {
    throw std::invalid_argument("tabulated law: need >= 2 matching knots");
  }
  for (std::size_t i = 1; i < x_.size(); ++i) {
    if (x_[i] < x_[i - 1] || F_[i] < F_[i - 1] - 1e-12) {
      throw std::invalid_argument("tabulated law: knots not monotone");
    }
    F_[i] = std::max(F_[i], F_[i - 1]);
  }
  if (std::abs(F_.front()) > 1e-9 || std::abs(F_.back() - 1.0) > 1e-9) {
    throw std::invalid_argument("tabulated law: F must run from 0 to 1");
  }
  F_.front() = 0.0;
  F_.back() = 1.0;
  below_.resize(x_.size(), 0.0);
  for (std::size_t i = 1; i < x_.size(); ++i) {
    below_[i] = below_[i - 1] + 0.5 * (F_[i] + F_[i - 1]) * (x_[i] - x_[i - 1]);
  }
  above_.resize(x_.size(), 0.0);
  for (std::size_t i = x_.size() - 1; i-- > 0;) {
    above_[i] = above_[i + 1] +
                0.5 * ((1.0 - F_[i]) + (1.0 - F_[i + 1])) * (x_[i + 1] - x_[i]);
  }
}

double TabulatedLaw::cdf(double t) const {
  if (t < x_.front()) return 0.0;
  if (t >= x_.back()) return 1.0;
  // last knot with abscissa <= t, then interpolate toward the next one
  const auto it = std::upper_bound(x_.begin(), x_.end(), t);
  const auto i = static_cast<std::size_t>(it - x_.begin()) - 1;
  const double dx = x_[i + 1] - x_[i];
  if (dx <= 0.0) return F_[i];
  return F_[i] + (F_[i + 1] - F_[i]) * (t - x_[i]) / dx;
}

double TabulatedLaw::cdf_left(double t) const {
  if (t <= x_.front()) return 0.0;
  if (t > x_.back()) return 1.0;
  const auto it = std::lower_bound(x_.begin(), x_.end(), t);
  const auto i = static_cast<std::size_t>(it - x_.begin());
  if (i < x_.size() && x_[i] == t) return F_[i];  // first duplicate: pre-jump value
  const double dx = x_[i] - x_[i - 1];
  if (dx <= 0.0) return F_[i - 1];
  return F_[i - 1] + (F_[i] - F_[i - 1]) * (t - x_[i - 1]) / dx;
}

double TabulatedLaw::quantile(double u) const {
  if (!(u > 0.0 && u <= 1.0)) throw std::invalid_argument("quantile: u outside (0,1]");
  const auto it = std::lower_bound(F_.begin(), F_.end(), u);
  const auto j = static_cast<std::size_t>(it - F_.begin());
  if (j == 0) return x_.front();
  const double dF = F_[j] - F_[j - 1];
  if (dF <= 0.0 || x_[j] == x_[j - 1]) return x_[j];
  return x_[j - 1] + (u - F_[j - 1]) / dF * (x_[j] - x_[j - 1]);
}

double TabulatedLaw::tail_quantile(double u) const {
  if (u <= 0.0) throw std::invalid_argument("tail_quantile: u <= 0");
  if (u >= 1.0) return 0.0;
  if (x_.front() >= 0.0) return std::max(0.0, quantile(1.0 - u));
  return ReferenceLaw::tail_quantile(u);
}

double TabulatedLaw::integral_cdf_below(double t) const {
  if (t <= x_.front()) return 0.0;
  if (t >= x_.back()) return below_.back() + (t - x_.back());
  const auto it = std::upper_bound(x_.begin(), x_.end(), t);
  const auto i = static_cast<std::size_t>(it - x_.begin()) - 1;
  return below_[i] + 0.5 * (F_[i] + cdf(t)) * (t - x_[i]);
}

double TabulatedLaw::integral_sf_above(double t) const {
  if (t >= x_.back()) return 0.0;
  if (t <= x_.front()) return above_.front() + (x_.front() - t);
  const auto it = std::upper_bound(x_.begin(), x_.end(), t);
  const auto i = static_cast<std::size_t>(it - x_.begin());
  return above_[i] + 0.5 * ((1.0 - cdf(t)) + (1.0 - F_[i])) * (x_[i] - t);
}

void TabulatedLaw::to_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "t,F\n";
  char buf[64];
  for (std::size_t i = 0; i < x_.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g\n", x_[i], F_[i]);
    out << buf;
  }
}

std::shared_ptr<const TabulatedLaw> TabulatedLaw::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::vector<double> x, F;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("t,", 0) == 0) continue;  // header
    }
    std::istringstream ss(line);
    double t, f;
    char comma;
    if (!(ss >> t >> comma >> f) || comma != ',') {
      throw std::runtime_error("malformed law CSV: " + line);
    }
    x.push_back(t);
    F.push_back(f);
  }
  return std::make_shared<TabulatedLaw>(std::move(x), std::move(F));
}

LawPtr tabulated_law(std::vector<double> x, std::vector<double> F) {
  return std::make_shared<TabulatedLaw>(std::move(x), std::move(F));
}

// ---------------------------------------------------------------------------
// quantile_from_tail

double quantile_from_tail(const std::function<double(double)>& tail, double u) {
  if (u <= 0.0) throw std::invalid_argument("quantile_from_tail: u <= 0");
  if (tail(0.0) <= u) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (tail(hi) > u) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) return kInf;
  }
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (tail(mid) <= u) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double quantile_from_tail(const std::vector<std::pair<double, double>>& table,
                          double u) {
  if (u <= 0.0) throw std::invalid_argument("quantile_from_tail: u <= 0");
  for (const auto& [t, h] : table) {
    if (h <= u) return std::max(0.0, t);
  }
  return kInf;
}

// ---------------------------------------------------------------------------
// Observable

Observable Observable::identity() { return Observable{}; }

Observable Observable::singular_at_zero(double b, double C, double beta) {
  if (b < 0.0 || C <= 0.0 || beta < 0.0) {
    throw std::invalid_argument("singular observable: need b >= 0, C > 0, beta >= 0");
  }
  Observable g;
  g.kind = ObservableKind::singular_at_zero;
  g.exponent = b;
  g.scale = C;
  g.log_exponent = beta;
  return g;
}

Observable Observable::singular_at_one(double b, double C, double beta) {
  Observable g = singular_at_zero(b, C, beta);
  g.kind = ObservableKind::singular_at_one;
  return g;
}

Observable Observable::custom(std::function<double(double)> f, bool nonincreasing) {
  Observable g;
  g.kind = ObservableKind::custom;
  g.fn = std::move(f);
  g.fn_nonincreasing = nonincreasing;
  return g;
}

bool Observable::nonincreasing() const {
  switch (kind) {
    case ObservableKind::singular_at_zero: return true;
    case ObservableKind::custom: return fn_nonincreasing;
    default: return false;
  }
}

namespace {
double log_factor(double dist, double beta) {
  if (beta == 0.0) return 1.0;
  return std::pow(std::max(1.0, -std::log(dist)), -beta);
}
}  // namespace

double Observable::eval(double x) const {
  if (!(x > 0.0 && x < 1.0)) {
    throw std::invalid_argument("observable: x outside (0,1)");
  }
  switch (kind) {
    case ObservableKind::identity:
      return x;
    case ObservableKind::singular_at_zero:
      return scale * std::pow(x, -exponent) * log_factor(x, log_exponent);
    case ObservableKind::singular_at_one:
      return scale * std::pow(1.0 - x, -exponent) * log_factor(1.0 - x, log_exponent);
    case ObservableKind::custom:
      return fn(x);
  }
  return x;
}

double Observable::eval_closure(double x) const {
  if (x > 0.0 && x < 1.0) return eval(x);
  switch (kind) {
    case ObservableKind::identity:
      return x;
    case ObservableKind::singular_at_zero:
      if (x <= 0.0) return exponent > 0.0 ? kInf : (log_exponent > 0.0 ? 0.0 : scale);
      return scale;  // x = 1
    case ObservableKind::singular_at_one:
      if (x >= 1.0) return exponent > 0.0 ? kInf : (log_exponent > 0.0 ? 0.0 : scale);
      return scale;  // x = 0
    case ObservableKind::custom:
      return fn(std::clamp(x, 1e-300, 1.0 - 1e-16));
  }
  return x;
}

std::string Observable::describe() const {
  char buf[96];
  switch (kind) {
    case ObservableKind::identity:
      return "id";
    case ObservableKind::singular_at_zero:
      std::snprintf(buf, sizeof(buf), "sz(b=%.9g,C=%.9g,beta=%.9g)", exponent,
                    scale, log_exponent);
      return buf;
    case ObservableKind::singular_at_one:
      std::snprintf(buf, sizeof(buf), "so(b=%.9g,C=%.9g,beta=%.9g)", exponent,
                    scale, log_exponent);
      return buf;
    case ObservableKind::custom:
      return "custom";
  }
  return "?";
}

double observable_eval(const Observable& g, double x) { return g.eval(x); }

}  // namespace wlab
