#include "wlab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>

#include "wlab/quadrature.hpp"

namespace wlab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
std::mutex g_prefix_mutex;
constexpr std::uint64_t kPrefixCap = 1u << 21;
}  // namespace

// ---------------------------------------------------------------------------
// AlphaSequence

AlphaSequence AlphaSequence::table(std::vector<double> values) {
  AlphaSequence s;
  s.kind_ = AlphaKind::table;
  if (values.empty()) throw std::invalid_argument("alpha table: empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0.0 || values[i] > 1.0) {
      throw std::invalid_argument("alpha table: values outside [0,1]");
    }
    if (i > 0 && values[i] > values[i - 1] + 1e-15) {
      throw std::invalid_argument("alpha table: not nonincreasing");
    }
  }
  s.values_ = std::move(values);
  s.alpha0_ = s.values_.front();
  s.prefix_ = std::make_shared<std::vector<double>>();
  return s;
}

AlphaSequence AlphaSequence::table_with_power_tail(std::vector<double> values,
                                                   double a) {
  if (!(a > 0.0)) throw std::invalid_argument("alpha table tail: a <= 0");
  AlphaSequence s = table(std::move(values));
  s.tail_a_ = a;
  return s;
}

AlphaSequence AlphaSequence::polynomial(double a, double c, double alpha0) {
  if (!(a > 0.0) || !(c > 0.0)) throw std::invalid_argument("alpha poly: bad params");
  AlphaSequence s;
  s.kind_ = AlphaKind::polynomial;
  s.a_ = a;
  s.c_ = c;
  s.alpha0_ = alpha0;
  s.prefix_ = std::make_shared<std::vector<double>>();
  return s;
}

AlphaSequence AlphaSequence::geometric(double rho, double c, double alpha0) {
  if (!(rho > 0.0 && rho < 1.0) || !(c > 0.0)) {
    throw std::invalid_argument("alpha geometric: bad params");
  }
  AlphaSequence s;
  s.kind_ = AlphaKind::geometric;
  s.a_ = rho;
  s.c_ = c;
  s.alpha0_ = alpha0;
  s.prefix_ = std::make_shared<std::vector<double>>();
  return s;
}

AlphaSequence AlphaSequence::log_polynomial(double a, double c, double alpha0) {
  if (!(a > 0.0) || !(c > 0.0)) throw std::invalid_argument("alpha logpoly: bad params");
  AlphaSequence s;
  s.kind_ = AlphaKind::log_polynomial;
  s.a_ = a;
  s.c_ = c;
  s.alpha0_ = alpha0;
  s.prefix_ = std::make_shared<std::vector<double>>();
  return s;
}

AlphaSequence AlphaSequence::iid(double alpha0) {
  return table({alpha0});  // zero beyond the table
}

double AlphaSequence::raw(std::uint64_t k) const {
  switch (kind_) {
    case AlphaKind::table:
      if (k < values_.size()) return values_[k];
      if (tail_a_ > 0.0 && !values_.empty() && values_.back() > 0.0) {
        const double k0 = double(values_.size() - 1);
        return values_.back() * std::pow(k0 / double(k), tail_a_);
      }
      return 0.0;
    case AlphaKind::polynomial:
      if (k == 0) return alpha0_;
      return std::min(alpha0_, c_ * std::pow(double(k), -a_));
    case AlphaKind::geometric:
      if (k == 0) return alpha0_;
      return std::min(alpha0_, c_ * std::pow(a_, double(k)));
    case AlphaKind::log_polynomial: {
      if (k == 0) return alpha0_;
      const double lk = std::max(std::log(double(k)), std::log(2.0));
      return std::min(alpha0_, c_ / (double(k) * std::pow(lk, a_)));
    }
  }
  return 0.0;
}

double AlphaSequence::value(std::uint64_t k) const { return raw(k); }

double AlphaSequence::inverse(double u) const {
  if (u <= 0.0) return kInf;
  if (u > value(0)) return 0.0;
  // largest k with alpha(k) >= u, by binary search on the nonincreasing tail
  std::uint64_t lo = 0, hi = 1;
  while (value(hi) >= u) {
    lo = hi;
    if (hi > (1ull << 62)) return kInf;
    hi *= 2;
  }
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (value(mid) >= u) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return double(lo + 1);  // count of indices 0..lo
}

std::uint64_t AlphaSequence::first_below(double u, std::uint64_t n) const {
  if (n == 0) n = 1;
  if (value(1) <= u) return 1;
  std::uint64_t lo = 1, hi = 2;  // invariant: alpha(lo) > u
  while (hi < n && value(hi) > u) {
    lo = hi;
    hi = std::min(n, hi * 2);
  }
  if (hi >= n && value(n) > u) return n;
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (value(mid) > u) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

double AlphaSequence::partial_sum(std::uint64_t n) const {
  const std::uint64_t want = n + 1;  // terms 0..n
  if (want <= kPrefixCap) {
    std::lock_guard<std::mutex> lock(g_prefix_mutex);
    auto& pre = *prefix_;
    if (pre.empty()) pre.push_back(value(0));
    while (pre.size() < want) {
      pre.push_back(pre.back() + value(pre.size()));
    }
    return pre[want - 1];
  }
  // beyond the cache: explicit head plus an integral tail estimate
  const double head = partial_sum(kPrefixCap - 1);
  const double from = double(kPrefixCap);
  const double to = double(n);
  switch (kind_) {
    case AlphaKind::table:
      if (tail_a_ > 0.0 && values_.back() > 0.0) {
        const double k0 = double(values_.size() - 1);
        const double c = values_.back() * std::pow(k0, tail_a_);
        if (tail_a_ == 1.0) return head + c * std::log(to / from);
        return head + c *
                          (std::pow(to, 1.0 - tail_a_) -
                           std::pow(from, 1.0 - tail_a_)) /
                          (1.0 - tail_a_);
      }
      return head;
    case AlphaKind::polynomial: {
      if (a_ == 1.0) return head + c_ * std::log(to / from);
      return head +
             c_ * (std::pow(to, 1.0 - a_) - std::pow(from, 1.0 - a_)) /
                 (1.0 - a_);
    }
    case AlphaKind::geometric:
      return head + c_ * std::pow(a_, from) / (1.0 - a_);
    case AlphaKind::log_polynomial: {
      const double la = a_;
      if (la == 1.0) {
        return head + c_ * std::log(std::log(to) / std::log(from));
      }
      return head + c_ *
                        (std::pow(std::log(to), 1.0 - la) -
                         std::pow(std::log(from), 1.0 - la)) /
                        (1.0 - la);
    }
  }
  return head;
}

bool AlphaSequence::summable() const {
  switch (kind_) {
    case AlphaKind::table:
      return tail_a_ == 0.0 || tail_a_ > 1.0 || values_.back() == 0.0;
    case AlphaKind::polynomial:
      return a_ > 1.0;
    case AlphaKind::geometric:
      return true;
    case AlphaKind::log_polynomial:
      return a_ > 1.0;
  }
  return true;
}

double AlphaSequence::total_sum() const {
  if (!summable()) return kInf;
  const std::uint64_t K = kPrefixCap - 1;
  const double head = partial_sum(K);
  const double from = double(K + 1);
  switch (kind_) {
    case AlphaKind::table:
      if (tail_a_ > 1.0 && values_.back() > 0.0) {
        const double k0 = double(values_.size() - 1);
        const double c = values_.back() * std::pow(k0, tail_a_);
        return head + c * std::pow(from, 1.0 - tail_a_) / (tail_a_ - 1.0);
      }
      return head;
    case AlphaKind::polynomial:
      return head + c_ * std::pow(from, 1.0 - a_) / (a_ - 1.0);
    case AlphaKind::geometric:
      return head + c_ * std::pow(a_, from) / (1.0 - a_);
    case AlphaKind::log_polynomial:
      return head +
             c_ * std::pow(std::log(from), 1.0 - a_) / (a_ - 1.0);
  }
  return head;
}

double AlphaSequence::cesaro(std::uint64_t n) const {
  if (n == 0) throw std::invalid_argument("cesaro: n >= 1");
  return (partial_sum(n) - value(0)) / double(n);
}

double AlphaSequence::sum_min(double x, std::uint64_t n) const {
  if (x <= 0.0) return 0.0;
  const double inv = inverse(x);
  const std::uint64_t cnt =
      inv >= double(n + 1) ? n + 1 : std::uint64_t(inv);
  double s = double(cnt) * x;
  if (cnt <= n) {
    s += partial_sum(n) - (cnt == 0 ? 0.0 : partial_sum(cnt - 1));
  }
  return s;
}

double AlphaSequence::sum_min_inf(double x) const {
  if (x <= 0.0) return 0.0;
  if (!summable()) return kInf;
  const double inv = inverse(x);
  if (inv == kInf) return kInf;
  const auto cnt = std::uint64_t(inv);
  return double(cnt) * x + total_sum() -
         (cnt == 0 ? 0.0 : partial_sum(cnt - 1));
}

// ---------------------------------------------------------------------------
// Bound functionals

double alpha_inverse(const AlphaSequence& seq, double u) { return seq.inverse(u); }

double s_alpha_n(const AlphaSequence& seq, const TailFn& H, double t,
                 std::uint64_t n) {
  return seq.sum_min(H(t), n);
}

double bound_mean_w1(const AlphaSequence& seq, const TailFn& H,
                     std::uint64_t n) {
  auto f = [&](double t) {
    const double h = H(t);
    if (h <= 0.0) return 0.0;
    return std::sqrt(std::min(h * h, seq.sum_min(h, n) / double(n)));
  };
  return 4.0 * integrate_upper_improper(f, 0.0, 1e-6);
}

double bound_l2_w1(const AlphaSequence& seq, const TailFn& H,
                   std::uint64_t n) {
  auto f = [&](double t) {
    const double h = H(t);
    if (h <= 0.0) return 0.0;
    return std::sqrt(seq.sum_min(h, n));
  };
  return 2.0 * std::sqrt(2.0) / std::sqrt(double(n)) *
         integrate_upper_improper(f, 0.0, 1e-6);
}

double u_n_cesaro(const AlphaSequence& seq, std::uint64_t n) {
  return seq.cesaro(n);
}

namespace {

// int_lo^hi f, with dyadic blocks toward lo for integrands steep near the
// left end (the quantile-side integrals all are).
double integrate_down_to(const Integrand& f, double lo, double hi) {
  if (hi <= lo) return 0.0;
  double total = 0.0;
  double cur_hi = hi;
  while (cur_hi > 2.0 * lo && cur_hi > 1e-280) {
    const double cur_lo = std::max(lo, 0.5 * cur_hi);
    total += integrate_adaptive(f, cur_lo, cur_hi, 1e-7);
    cur_hi = cur_lo;
    if (cur_lo == lo) return total;
  }
  total += integrate_adaptive(f, lo, cur_hi, 1e-7);
  return total;
}

double q_integral_near_zero(const Integrand& f, double hi) {
  return integrate_lower_improper(f, hi, 1e-7);
}

}  // namespace

RateBound rate_poly(double a, const QuantileFn& Q, std::uint64_t n) {
  if (!(a > 1.0)) throw std::invalid_argument("rate_poly: need a > 1");
  RateBound rb;
  const double nn = double(n);
  const double eps_mean = std::pow(nn, -a / (a + 1.0));
  const double w = (a + 1.0) / (2.0 * a);
  rb.mean_bound =
      q_integral_near_zero([&](double u) { return Q(u); }, eps_mean) +
      integrate_down_to([&](double u) { return Q(u) * std::pow(u, -w); },
                        eps_mean, 1.0) /
          std::sqrt(nn);
  const double eps_l2 = std::pow(nn, -a);
  rb.l2_bound =
      q_integral_near_zero(
          [&](double u) { return Q(u) / std::sqrt(u); }, eps_l2) +
      integrate_down_to([&](double u) { return Q(u) * std::pow(u, -w); },
                        eps_l2, 1.0) /
          std::sqrt(nn);
  return rb;
}

RateBound rate_geo(const QuantileFn& Q, std::uint64_t n) {
  RateBound rb;
  const double nn = double(n);
  const double eps_mean = std::min(0.5, std::log(nn) / nn);
  auto qlog = [&](double u) {
    return Q(u) * std::abs(std::log(u)) / std::sqrt(u);
  };
  rb.mean_bound =
      q_integral_near_zero([&](double u) { return Q(u); }, eps_mean) +
      integrate_down_to(qlog, eps_mean, 1.0) / std::sqrt(nn);
  const double eps_l2 = std::exp(-std::min(nn, 600.0));
  rb.l2_bound =
      q_integral_near_zero(
          [&](double u) { return Q(u) / std::sqrt(u); }, eps_l2) +
      integrate_down_to(qlog, eps_l2, 1.0) / std::sqrt(nn);
  return rb;
}

RateBound rate_nonsummable(const AlphaSequence& seq, const QuantileFn& Q,
                           std::uint64_t n) {
  RateBound rb;
  const double un = seq.cesaro(n);
  rb.mean_bound =
      q_integral_near_zero([&](double u) { return Q(u); },
                           std::min(1.0, std::sqrt(un)));
  rb.l2_bound = q_integral_near_zero(
      [&](double u) { return Q(u) / std::sqrt(u); }, std::min(1.0, un));
  return rb;
}

double R_n(const AlphaSequence& seq, const QuantileFn& Q, double u,
           std::uint64_t n) {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("R_n: u outside (0,1)");
  return double(seq.first_below(u, n)) * Q(u);
}

double R_n_inverse(const AlphaSequence& seq, const QuantileFn& Q, double x,
                   std::uint64_t n) {
  if (x < 0.0) throw std::invalid_argument("R_n_inverse: x < 0");
  const double u_hi = 1.0 - 1e-15;
  if (R_n(seq, Q, u_hi, n) > x) return 1.0;
  double lo = 1e-300, hi = u_hi;
  if (R_n(seq, Q, lo, n) <= x) return 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (R_n(seq, Q, mid, n) <= x) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double bound_vbe(const AlphaSequence& seq, const QuantileFn& Q, double p,
                 std::uint64_t n) {
  if (!(p > 1.0 && p < 2.0)) throw std::invalid_argument("bound_vbe: p outside (1,2)");
  auto f = [&](double u) {
    const double inv = std::min(seq.inverse(u), double(n));
    return std::pow(inv, p - 1.0) * std::pow(Q(u), p);
  };
  return std::pow(double(n), 1.0 - p) * integrate_lower_improper(f, 1.0, 1e-7);
}

double bound_vbe_sum_form(const AlphaSequence& seq, const QuantileFn& Q,
                          double p, std::uint64_t n) {
  if (!(p > 1.0 && p < 2.0)) throw std::invalid_argument("bound_vbe: p outside (1,2)");
  auto qp = [&](double u) { return std::pow(Q(u), p); };
  // incremental tail integrals int_0^{alpha(k)} Q^p, largest alpha last
  double sum = 0.0;
  double cur_upper = 0.0;
  double cur_integral = 0.0;
  for (std::uint64_t kk = n + 1; kk-- > 0;) {
    const double ak = seq.value(kk);
    if (ak > cur_upper) {
      if (cur_upper == 0.0) {
        cur_integral = integrate_lower_improper(qp, ak, 1e-7);
      } else {
        cur_integral += integrate_down_to(qp, cur_upper, ak);
      }
      cur_upper = ak;
    }
    sum += std::pow(double(kk + 1), p - 2.0) * cur_integral;
  }
  return std::pow(double(n), 1.0 - p) * sum;
}

TailBoundValue tail_bound_vbe(const AlphaSequence& seq, const QuantileFn& Q,
                              std::uint64_t n, double x, double eta) {
  if (!(x > 0.0)) throw std::invalid_argument("tail_bound_vbe: x <= 0");
  if (!(eta >= 1.0 && eta < 2.0)) {
    throw std::invalid_argument("tail_bound_vbe: eta outside [1,2)");
  }
  const double c1 = 36.0;
  const double c2 = 64.0 / (2.0 - eta);
  const double v = R_n_inverse(seq, Q, x, n);
  double t1 = 0.0;
  if (v > 0.0) {
    t1 = c1 * double(n) / x *
         q_integral_near_zero([&](double u) { return Q(u); }, v);
  }
  double t2 = 0.0;
  if (v < 1.0) {
    t2 = c2 * double(n) / std::pow(x, eta) *
         integrate_down_to(
             [&](double u) {
               return std::pow(R_n(seq, Q, u, n), eta - 1.0) * Q(u);
             },
             v, 1.0 - 1e-12);
  }
  TailBoundValue out;
  out.raw = t1 + t2;
  out.value = std::min(1.0, out.raw);
  return out;
}

RosenthalBound bound_rosenthal(const AlphaSequence& seq1,
                               const AlphaSequence& seq2, const QuantileFn& Q,
                               const TailFn& H, double p, std::uint64_t n) {
  if (!(p > 2.0)) throw std::invalid_argument("bound_rosenthal: p <= 2");
  RosenthalBound rb;
  auto fs = [&](double t) {
    const double h = H(t);
    return h <= 0.0 ? 0.0 : std::sqrt(seq1.sum_min(h, n));
  };
  const double s = integrate_upper_improper(fs, 0.0, 1e-6);
  rb.variance_term = std::pow(s, p) / std::pow(double(n), p / 2.0);
  auto f = [&](double u) {
    const double inv = std::min(seq2.inverse(u), double(n));
    return std::pow(inv, p - 1.0) * std::pow(Q(u), p);
  };
  rb.tail_term =
      std::pow(double(n), 1.0 - p) * integrate_lower_improper(f, 1.0, 1e-7);
  rb.total = rb.variance_term + rb.tail_term;
  return rb;
}

// ---------------------------------------------------------------------------
// Rate predictions

namespace {

bool near(double a, double b) { return std::abs(a - b) <= 1e-12; }

RatePrediction pred(double e, double lp, const char* regime) {
  return {e, lp, regime};
}

}  // namespace

RatePrediction predicted_rate(double gamma, double b, SingularSide side,
                              const Statistic& stat) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw NoPrediction("no paper prediction: gamma outside (0,1)");
  }
  if (b < 0.0) throw NoPrediction("no paper prediction: b < 0");
  using K = Statistic::Kind;
  const bool zero_side = side == SingularSide::zero;

  switch (stat.kind) {
    case K::mean_w1: {
      if (zero_side) {
        if (!(b < 1.0 - gamma)) throw NoPrediction("no paper prediction: b >= 1-gamma");
        if (gamma < 0.5) {
          const double thr = (1.0 - 2.0 * gamma) / 2.0;
          if (near(b, thr)) return pred(-0.5, 1.0, "boundary-log");
          if (b < thr) return pred(-0.5, 0.0, "parametric");
          return pred(b + gamma - 1.0, 0.0, "slow");
        }
        if (near(gamma, 0.5)) {
          const double e = (1.0 - 2.0 * b) / 2.0;
          return pred(-e, e, "ln-rate");
        }
        return pred((b + gamma - 1.0) / (2.0 * gamma), 0.0, "slow");
      }
      if (!(b < 1.0)) throw NoPrediction("no paper prediction: b >= 1");
      if (gamma < 0.5) {
        const double thr = (1.0 - 2.0 * gamma) / (2.0 * (1.0 - gamma));
        if (near(b, thr)) return pred(-0.5, 1.0, "boundary-log");
        if (b < thr) return pred(-0.5, 0.0, "parametric");
        return pred((gamma - 1.0) * (1.0 - b), 0.0, "slow");
      }
      if (near(gamma, 0.5)) {
        const double e = (1.0 - b) / 2.0;
        return pred(-e, e, "ln-rate");
      }
      return pred((gamma - 1.0) * (1.0 - b) / (2.0 * gamma), 0.0, "slow");
    }

    case K::l2_w1: {
      if (zero_side) {
        if (!(b < 1.0 - gamma)) throw NoPrediction("no paper prediction: b >= 1-gamma");
        if (gamma < 0.5) {
          const double thr = (1.0 - 2.0 * gamma) / 2.0;
          if (near(b, thr)) return pred(-0.5, 1.0, "boundary-log");
          if (b < thr) return pred(-0.5, 0.0, "parametric");
          if (b < (1.0 - gamma) / 2.0) {
            return pred((2.0 * b + gamma - 1.0) / (2.0 * gamma), 0.0, "slow");
          }
          throw NoPrediction("no paper prediction: b >= (1-gamma)/2 for the L2 rate");
        }
        if (near(gamma, 0.5)) {
          if (!(b < 0.25)) throw NoPrediction("no paper prediction: b >= 1/4");
          const double e = (1.0 - 4.0 * b) / 2.0;
          return pred(-e, e, "ln-rate");
        }
        if (!(b < (1.0 - gamma) / 2.0)) {
          throw NoPrediction("no paper prediction: b >= (1-gamma)/2");
        }
        return pred((2.0 * b + gamma - 1.0) / (2.0 * gamma), 0.0, "slow");
      }
      if (!(b < 1.0)) throw NoPrediction("no paper prediction: b >= 1");
      if (gamma < 0.5) {
        const double thr = (1.0 - 2.0 * gamma) / (2.0 * (1.0 - gamma));
        if (near(b, thr)) return pred(-0.5, 1.0, "boundary-log");
        if (b < thr) return pred(-0.5, 0.0, "parametric");
        if (b < 0.5) {
          return pred((gamma - 1.0) * (1.0 - 2.0 * b) / (2.0 * gamma), 0.0, "slow");
        }
        throw NoPrediction("no paper prediction: b >= 1/2 for the L2 rate");
      }
      if (!(b < 0.5)) throw NoPrediction("no paper prediction: b >= 1/2");
      if (near(gamma, 0.5)) {
        const double e = (1.0 - 2.0 * b) / 2.0;
        return pred(-e, e, "ln-rate");
      }
      return pred((gamma - 1.0) * (1.0 - 2.0 * b) / (2.0 * gamma), 0.0, "slow");
    }

    case K::lp_w1: {
      const double p = stat.p;
      if (!(p > 1.0 && p < 2.0)) throw NoPrediction("lp rate needs p in (1,2)");
      if (zero_side) {
        if (!(b < (1.0 - gamma) / p)) {
          throw NoPrediction("no paper prediction: b >= (1-gamma)/p");
        }
        if (gamma < 1.0 / p) {
          const double thr = (1.0 - p * gamma) / p;
          if (near(b, thr)) return pred((1.0 - p) / p, 1.0 / p, "boundary-log");
          if (b < thr) return pred((1.0 - p) / p, 0.0, "parametric");
          return pred((p * b + gamma - 1.0) / (p * gamma), 0.0, "slow");
        }
        return pred((p * b + gamma - 1.0) / (p * gamma), 0.0, "slow");
      }
      if (!(b < 1.0 / p)) throw NoPrediction("no paper prediction: b >= 1/p");
      if (gamma < 1.0 / p) {
        const double thr = (1.0 - p * gamma) / (p * (1.0 - gamma));
        if (near(b, thr)) return pred((1.0 - p) / p, 1.0 / p, "boundary-log");
        if (b < thr) return pred((1.0 - p) / p, 0.0, "parametric");
        return pred((gamma - 1.0) * (1.0 - p * b) / (p * gamma), 0.0, "slow");
      }
      return pred((gamma - 1.0) * (1.0 - p * b) / (p * gamma), 0.0, "slow");
    }

    case K::rosenthal: {
      const double p = stat.p;
      if (!(p > 2.0)) throw NoPrediction("rosenthal rate needs p > 2");
      if (zero_side) {
        if (!(b < (1.0 - gamma) / p)) {
          throw NoPrediction("no paper prediction: b >= (1-gamma)/p");
        }
        if (gamma < 0.5) {
          const double thr = (2.0 - gamma * (p + 2.0)) / (2.0 * p);
          if (b <= thr + 1e-12) return pred(-0.5, 0.0, "parametric");
          return pred((p * b + gamma - 1.0) / (p * gamma), 0.0, "slow");
        }
        return pred((p * b + gamma - 1.0) / (p * gamma), 0.0, "slow");
      }
      if (!(b < 1.0 / p)) throw NoPrediction("no paper prediction: b >= 1/p");
      if (gamma < 0.5) {
        const double thr = (2.0 - gamma * (p + 2.0)) / (2.0 * p * (1.0 - gamma));
        if (b <= thr + 1e-12) return pred(-0.5, 0.0, "parametric");
        return pred((gamma - 1.0) * (1.0 - p * b) / (p * gamma), 0.0, "slow");
      }
      return pred((gamma - 1.0) * (1.0 - p * b) / (p * gamma), 0.0, "slow");
    }
  }
  throw NoPrediction("no paper prediction");
}

RatePrediction predicted_rate_iid(const Statistic& stat) {
  using K = Statistic::Kind;
  switch (stat.kind) {
    case K::mean_w1:
    case K::l2_w1:
      return pred(-0.5, 0.0, "iid");
    case K::lp_w1:
      if (!(stat.p > 1.0 && stat.p < 2.0)) throw NoPrediction("lp rate needs p in (1,2)");
      return pred((1.0 - stat.p) / stat.p, 0.0, "iid");
    case K::rosenthal:
      if (!(stat.p > 2.0)) throw NoPrediction("rosenthal rate needs p > 2");
      return pred(-0.5, 0.0, "iid");
  }
  throw NoPrediction("no paper prediction");
}

// ---------------------------------------------------------------------------
// CLT condition

CltConditionReport clt_condition_check(double gamma, const TailFn& H) {
  if (!(gamma > 0.0 && gamma < 0.5)) {
    throw std::invalid_argument("CLT condition requires gamma < 1/2");
  }
  const double kappa = (1.0 - 2.0 * gamma) / (2.0 * (1.0 - gamma));
  CltConditionReport rep;
  rep.closed_form = false;
  try {
    auto f = [&](double t) {
      const double h = H(t);
      return h <= 0.0 ? 0.0 : std::pow(h, kappa);
    };
    const double v = integrate_upper_improper(f, 0.0, 1e-6);
    rep.holds = std::isfinite(v);
    rep.detail = "condition integral = " + std::to_string(v);
  } catch (const DivergenceError&) {
    rep.holds = false;
    rep.detail = "condition integral diverges";
  }
  return rep;
}

CltConditionReport clt_condition_check(double gamma, double b_power,
                                       SingularSide side, double log_exp) {
  if (!(gamma > 0.0 && gamma < 0.5)) {
    throw std::invalid_argument("CLT condition requires gamma < 1/2");
  }
  const double critical = side == SingularSide::zero
                              ? (1.0 - 2.0 * gamma) / 2.0
                              : (1.0 - 2.0 * gamma) / (2.0 - 2.0 * gamma);
  CltConditionReport rep;
  rep.closed_form = true;
  if (b_power < critical - 1e-12) {
    rep.holds = true;
    rep.detail = "power below critical";
  } else if (near(b_power, critical)) {
    rep.holds = log_exp > 1.0;
    rep.detail = rep.holds ? "critical power, log exponent > 1"
                           : "critical power needs log exponent > 1";
  } else {
    rep.holds = false;
    rep.detail = "power above critical";
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Quantile conditions

namespace {

bool q_is_zero(const QuantileFn& Q) {
  for (double u : {1e-12, 1e-6, 1e-2, 0.5}) {
    if (Q(u) != 0.0) return false;
  }
  return true;
}

bool converges_on_unit(const Integrand& f) {
  try {
    const double v = integrate_lower_improper(f, 1.0, 1e-6);
    return std::isfinite(v);
  } catch (const DivergenceError&) {
    return false;
  }
}

}  // namespace

QuantileConditionReport quantile_conditions(const AlphaSequence& seq,
                                            const QuantileFn& Q) {
  QuantileConditionReport rep;
  rep.dmr = converges_on_unit([&](double u) {
    const double q = Q(u);
    return seq.inverse(u) * q * q;
  });
  if (!seq.summable()) {
    // int_0^u alpha^{-1} is infinite; the condition reduces to H == 0
    rep.dm = q_is_zero(Q);
  } else {
    rep.dm = converges_on_unit([&](double u) {
      const double denom = seq.sum_min_inf(u);
      if (denom <= 0.0) return 0.0;
      return seq.inverse(u) * Q(u) / std::sqrt(denom);
    });
  }
  rep.d = converges_on_unit([&](double u) {
    return std::sqrt(seq.inverse(u)) * Q(u) / std::sqrt(u);
  });
  if ((rep.d && !rep.dm) || (rep.dm && !rep.dmr)) {
    throw std::logic_error("quantile condition hierarchy violated");
  }
  return rep;
}

double equiv_identity_check(const AlphaSequence& seq, const TailFn& H) {
  if (!seq.summable()) {
    throw DivergenceError("equiv identity: alpha not summable");
  }
  auto lhs_f = [&](double t) {
    const double h = H(t);
    return h <= 0.0 ? 0.0 : std::sqrt(seq.sum_min_inf(h));
  };
  const double lhs = integrate_upper_improper(lhs_f, 0.0, 1e-7);

  auto G = [&](double x) { return std::sqrt(seq.sum_min_inf(x)); };
  const double g_top = G(1.0);
  auto G_inv = [&](double v) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 90; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (G(mid) >= v) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return hi;
  };
  auto Q = [&](double u) {
    return u >= 1.0 ? 0.0
                    : quantile_from_tail([&](double t) { return H(t); }, u);
  };
  auto rhs_f = [&](double v) { return Q(G_inv(v)); };
  const double rhs = integrate_lower_improper(
      [&](double s) { return rhs_f(s * g_top) * g_top; }, 1.0, 1e-7);

  if (lhs == 0.0 && rhs == 0.0) return 0.0;
  return std::abs(lhs - rhs) / std::max(lhs, 1e-300);
}

// ---------------------------------------------------------------------------
// Sufficient conditions (parametric)

TailModel TailModel::pareto(double p) {
  TailModel m;
  m.name = "pareto";
  m.H = [p](double t) { return t <= 1.0 ? 1.0 : std::pow(t, -p); };
  m.Q = [p](double u) { return u >= 1.0 ? 0.0 : std::pow(u, -1.0 / p); };
  m.finite_moments_below = p;
  return m;
}

TailModel TailModel::exponential(double rate) {
  TailModel m;
  m.name = "exponential";
  m.H = [rate](double t) { return std::exp(-rate * t); };
  m.Q = [rate](double u) { return u >= 1.0 ? 0.0 : -std::log(u) / rate; };
  m.finite_moments_below = kInf;
  return m;
}

TailModel TailModel::bounded(double M) {
  TailModel m;
  m.name = "bounded";
  m.H = [M](double t) { return t < M ? 1.0 : 0.0; };
  m.Q = [M](double u) { return u >= 1.0 ? 0.0 : M; };
  m.finite_moments_below = kInf;
  return m;
}

TailModel TailModel::uniform01() {
  TailModel m;
  m.name = "uniform01";
  m.H = [](double t) { return t >= 1.0 ? 0.0 : (t <= 0.0 ? 1.0 : 1.0 - t); };
  m.Q = [](double u) { return u >= 1.0 ? 0.0 : 1.0 - u; };
  m.finite_moments_below = kInf;
  return m;
}

namespace {

// Does sum_k (alpha(k)/k)^e converge, for the closed-form decay models?
bool series_alpha_over_k(const AlphaSequence& seq, double e) {
  switch (seq.kind()) {
    case AlphaKind::table:
      return true;  // finitely many nonzero terms (power tails use polynomial)
    case AlphaKind::polynomial:
      return (seq.model_a() + 1.0) * e > 1.0;
    case AlphaKind::geometric:
      return true;
    case AlphaKind::log_polynomial: {
      const double ke = 2.0 * e;
      if (ke > 1.0) return true;
      if (ke < 1.0) return false;
      return seq.model_a() * e > 1.0;
    }
  }
  return false;
}

// Does sum_k alpha(k)^e / sqrt(k) converge?
bool series_alpha_pow_over_sqrt(const AlphaSequence& seq, double e) {
  switch (seq.kind()) {
    case AlphaKind::table:
      return true;
    case AlphaKind::polynomial:
      return seq.model_a() * e + 0.5 > 1.0;
    case AlphaKind::geometric:
      return true;
    case AlphaKind::log_polynomial:
      return e + 0.5 > 1.0;  // ignoring log factors off the boundary
  }
  return false;
}

bool integral_converges_upper(const Integrand& f) {
  try {
    return std::isfinite(integrate_upper_improper(f, 0.0, 1e-6));
  } catch (const DivergenceError&) {
    return false;
  }
}

}  // namespace

SufficientConditionsReport sufficient_conditions(const AlphaSequence& seq,
                                                 const TailModel& tail) {
  SufficientConditionsReport rep;

  // item 1: E|X|^p < inf for some p > 2 and sum (alpha(k)/k)^{(p-2)/(2(p-1))}
  rep.items[0].applicable = tail.finite_moments_below > 2.0;
  if (rep.items[0].applicable) {
    const double pmax = std::min(tail.finite_moments_below, 40.0);
    for (double p = 2.05; p < pmax; p += 0.05) {
      if (series_alpha_over_k(seq, (p - 2.0) / (2.0 * (p - 1.0)))) {
        rep.items[0].holds = true;
        break;
      }
    }
  }

  // item 2: H(t) = O(t^-p) for some p > 2 and sum alpha^{(p-2)/(2p)} / sqrt k
  rep.items[1].applicable = tail.finite_moments_below > 2.0;
  if (rep.items[1].applicable) {
    const double pmax = std::min(tail.finite_moments_below, 40.0);
    for (double p = 2.05; p <= pmax; p += 0.05) {
      if (series_alpha_pow_over_sqrt(seq, (p - 2.0) / (2.0 * p))) {
        rep.items[1].holds = true;
        break;
      }
    }
  }

  // item 3: polynomial alpha with a > 1 and int H^{(a-1)/(2a)} < inf
  const bool poly_like =
      seq.kind() == AlphaKind::polynomial ||
      (seq.kind() == AlphaKind::table);
  rep.items[2].applicable = poly_like;
  if (poly_like) {
    const double a = seq.kind() == AlphaKind::polynomial ? seq.model_a() : 2.0;
    if (a > 1.0) {
      const double e = (a - 1.0) / (2.0 * a);
      rep.items[2].holds = integral_converges_upper([&](double t) {
        const double h = tail.H(t);
        return h <= 0.0 ? 0.0 : std::pow(h, e);
      });
    }
  }

  // item 4: log-polynomial alpha, int (ln(1 + 1/H))^{-(a-1)/2} < inf
  rep.items[3].applicable = seq.kind() == AlphaKind::log_polynomial;
  if (rep.items[3].applicable && seq.model_a() > 1.0) {
    const double e = (seq.model_a() - 1.0) / 2.0;
    rep.items[3].holds = integral_converges_upper([&](double t) {
      const double h = tail.H(t);
      if (h <= 0.0) return 0.0;
      return std::pow(std::log1p(1.0 / h), -e);
    });
  }

  // item 5: geometric alpha, int sqrt(H |ln H|) < inf
  rep.items[4].applicable = seq.kind() == AlphaKind::geometric;
  if (rep.items[4].applicable) {
    rep.items[4].holds = integral_converges_upper([&](double t) {
      const double h = tail.H(t);
      if (h <= 0.0 || h >= 1.0) return 0.0;
      return std::sqrt(h * std::abs(std::log(h)));
    });
  }

  return rep;
}

}  // namespace wlab
