#pragma once

#include <span>
#include <vector>

namespace scout::stats {

// Neumaier-compensated accumulator. Order of additions still matters for
// the last bit, so callers that need determinism feed values in a fixed order.
class CompensatedSum {
 public:
  void add(double v);
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

double sum(std::span<const double> xs);
double mean(std::span<const double> xs);

// Population variance (divides by n).
double variance(std::span<const double> xs);

// Sample variance (divides by n - 1).
double sample_variance(std::span<const double> xs);

// Standard error of the mean using the sample standard deviation.
double standard_error(std::span<const double> xs);

// Pearson correlation; returns 0 when either side has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

// Linear interpolation between order statistics (position q * (n - 1)).
double quantile(std::vector<double> xs, double q);

// One-sided paired t-test of H1: mean(a) < mean(b). Returns the p-value.
// Zero variance of the differences yields 0, 1 or 0.5 depending on the
// sign of the mean difference.
double paired_ttest_less(std::span<const double> a, std::span<const double> b);

// Student t cumulative distribution with `dof` degrees of freedom.
double student_t_cdf(double t, double dof);

}  // namespace scout::stats
