#include "scout/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace scout::stats {

void CompensatedSum::add(double v) {
  const double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v)) {
    compensation_ += (sum_ - t) + v;
  } else {
    compensation_ += (v - t) + sum_;
  }
  sum_ = t;
}

double sum(std::span<const double> xs) {
  CompensatedSum acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty sample");
  return sum(xs) / static_cast<double>(xs.size());
}

namespace {
double centered_sum_sq(std::span<const double> xs) {
  const double m = mean(xs);
  CompensatedSum acc;
  for (double x : xs) acc.add((x - m) * (x - m));
  return acc.value();
}
}  // namespace

double variance(std::span<const double> xs) {
  return centered_sum_sq(xs) / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  return centered_sum_sq(xs) / static_cast<double>(xs.size() - 1);
}

double standard_error(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  return std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("pearson: samples must be non-empty and aligned");
  }
  const double ma = mean(a);
  const double mb = mean(b);
  CompensatedSum sab, saa, sbb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab.add(da * db);
    saa.add(da * da);
    sbb.add(db * db);
  }
  if (saa.value() <= 0.0 || sbb.value() <= 0.0) return 0.0;
  return sab.value() / std::sqrt(saa.value() * sbb.value());
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile of empty sample");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile level outside [0,1]");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] + frac * (xs[hi] - xs[lo]);
}

double student_t_cdf(double t, double dof) {
  boost::math::students_t dist(dof);
  return boost::math::cdf(dist, t);
}

double paired_ttest_less(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired t-test: unequal sample sizes");
  if (a.size() < 2) throw std::invalid_argument("paired t-test: need at least two pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double md = mean(d);
  const double sd = std::sqrt(sample_variance(d));
  if (sd == 0.0) {
    if (md < 0.0) return 0.0;
    if (md > 0.0) return 1.0;
    return 0.5;
  }
  const double t = md / (sd / std::sqrt(static_cast<double>(d.size())));
  return student_t_cdf(t, static_cast<double>(d.size() - 1));
}

}  // namespace scout::stats
