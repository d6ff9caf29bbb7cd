#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace wlab {

// Sorted sample with uniform weights 1/n. Ties are allowed; the sort is
// stable so the empirical CDF is well defined under ties.
class EmpiricalMeasure {
 public:
  explicit EmpiricalMeasure(std::vector<double> pts) : points_(std::move(pts)) {
    if (points_.empty()) throw std::invalid_argument("empty sample");
    for (double v : points_) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite sample value");
    }
    std::stable_sort(points_.begin(), points_.end());
  }

  std::size_t n() const { return points_.size(); }
  const std::vector<double>& points() const { return points_; }
  double operator[](std::size_t i) const { return points_[i]; }
  double min() const { return points_.front(); }
  double max() const { return points_.back(); }

 private:
  std::vector<double> points_;
};

}  // namespace wlab
