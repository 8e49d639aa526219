#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace bflab {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
  MeanSe out;
  if (v.empty()) return out;
  const std::size_t n = v.size();
  for (double x : v) out.mean += x;
  out.mean /= double(n);
  if (n < 2) return out;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / double(n - 1) / double(n));
  return out;
}

inline double binomial_se(double p, int n) {
  return n > 0 ? std::sqrt(std::max(0.0, p * (1.0 - p)) / n) : 0.0;
}

struct PairCov {
  double cov = 0.0;
  double se = 0.0;
  double mean_x = 0.0;
  double mean_y = 0.0;
};

/// Sample covariance of paired indicators with a standard error from the
/// per-replicate products.
inline PairCov indicator_cov(const std::vector<std::uint8_t>& x,
                             const std::vector<std::uint8_t>& y) {
  PairCov out;
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) return out;
  for (std::size_t i = 0; i < n; ++i) {
    out.mean_x += x[i];
    out.mean_y += y[i];
  }
  out.mean_x /= double(n);
  out.mean_y /= double(n);
  std::vector<double> prod(n);
  for (std::size_t i = 0; i < n; ++i)
    prod[i] = (double(x[i]) - out.mean_x) * (double(y[i]) - out.mean_y);
  double s = 0.0;
  for (double p : prod) s += p;
  out.cov = s / double(n - 1);
  const double m = s / double(n);
  double ss = 0.0;
  for (double p : prod) ss += (p - m) * (p - m);
  out.se = std::sqrt(ss / double(n - 1) / double(n));
  return out;
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace bflab
