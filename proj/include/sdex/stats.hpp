#pragma once

#include <functional>
#include <span>

namespace sdex {

// Population (biased) central-moment estimators.
struct MomentStats {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;
  double skew = 0.0;
  double excess_kurtosis = 0.0;  // kurtosis - 3
};

MomentStats moments(std::span<const double> xs);

double normal_cdf(double x);

// Sup distance between the empirical CDF of xs and `cdf`.
double ks_statistic(std::span<const double> xs, const std::function<double(double)>& cdf);
// Two-sample sup distance between empirical CDFs.
double ks_statistic(std::span<const double> xs, std::span<const double> ys);

struct TrendFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0;   // 95% interval on the slope
  double ci_high = 0.0;
  bool contains(double v) const { return ci_low <= v && v <= ci_high; }
};

// Ordinary least squares with a Student-t interval on the slope.
TrendFit trend_slope(std::span<const double> xs, std::span<const double> ys);

}  // namespace sdex
