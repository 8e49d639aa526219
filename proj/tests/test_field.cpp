#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "bflab/errors.hpp"
#include "bflab/field.hpp"
#include "bflab/rng.hpp"

using namespace bflab;

namespace {

double ks_statistic_vs_normal(std::vector<double> v, double sigma) {
  std::sort(v.begin(), v.end());
  const double n = double(v.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-v[i] / (sigma * std::sqrt(2.0)));
    worst = std::max(worst, std::abs(cdf - double(i + 1) / n));
    worst = std::max(worst, std::abs(cdf - double(i) / n));
  }
  return worst;
}

double pair_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  const double n = double(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
    saa += a[i] * a[i];
    sbb += b[i] * b[i];
    sab += a[i] * b[i];
  }
  const double cov = sab / n - sa / n * sb / n;
  const double va = saa / n - sa / n * sa / n;
  const double vb = sbb / n - sb / n * sb / n;
  return cov / std::sqrt(va * vb);
}

}  // namespace

TEST_CASE("sample_noise determinism and kinds") {
  const Rect region{0, 0, 10, 10};
  const NoiseGrid a = sample_noise(region, 4, NoiseKind::Bernoulli, 42);
  const NoiseGrid b = sample_noise(region, 4, NoiseKind::Bernoulli, 42);
  CHECK(a.values == b.values);
  for (double v : a.values) CHECK((v == 1.0 || v == -1.0));

  const NoiseGrid c = sample_noise(region, 4, NoiseKind::Bernoulli, 43);
  CHECK(c.values != a.values);
}

TEST_CASE("bernoulli mean obeys the CLT bound") {
  const Rect region{0, 0, 250, 250};  // 10^6 cells at N=4
  const NoiseGrid g = sample_noise(region, 4, NoiseKind::Bernoulli, 7);
  CHECK(g.geom.size() >= 1000000);
  double mean = 0.0;
  for (double v : g.values) mean += v;
  mean /= double(g.values.size());
  CHECK(std::abs(mean) < 3e-3);
}

TEST_CASE("impulse noise places a single cell of value N at the center") {
  const NoiseGrid g = sample_noise({0, 0, 4, 4}, 2, NoiseKind::Impulse, 0);
  int nonzero = 0;
  for (double v : g.values)
    if (v != 0.0) {
      ++nonzero;
      CHECK(v == 2.0);
    }
  CHECK(nonzero == 1);
  const int ci = (g.geom.nx - 1) / 2;
  const int cj = (g.geom.ny - 1) / 2;
  CHECK(g.at(ci, cj) == 2.0);
}

TEST_CASE("impulse response reproduces the kernel to 1e-9") {
  const KernelSpec kernel = KernelSpec{}.truncated_at(6.0);
  const NoiseGrid g = sample_noise({-6, -6, 6, 6}, 4, NoiseKind::Impulse, 0);
  for (const ConvMethod m : {ConvMethod::Fft, ConvMethod::Direct}) {
    const FieldSample f = convolve(kernel, g, m);
    double worst = 0.0;
    for (int j = 0; j < f.geom.ny; ++j)
      for (int i = 0; i < f.geom.nx; ++i) {
        const Point x = f.geom.point(i, j);  // impulse sits at the origin
        worst = std::max(worst, std::abs(f.at(i, j) - eval_kernel(kernel, x)));
      }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("fft and direct convolution agree to 1e-9 on a 32x32 region") {
  const KernelSpec kernel = KernelSpec{}.truncated_at(8.0);
  const NoiseGrid g = sample_noise(Rect{0, 0, 32, 32}.inflated(4.0), 4,
                                   NoiseKind::Bernoulli, 99);
  const FieldSample a = convolve(kernel, g, ConvMethod::Fft);
  const FieldSample b = convolve(kernel, g, ConvMethod::Direct);
  REQUIRE(a.values.size() == b.values.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
  CHECK(worst < 1e-9);
}

TEST_CASE("convolve preconditions") {
  const NoiseGrid g = sample_noise({0, 0, 4, 4}, 2, NoiseKind::Bernoulli, 1);
  CHECK_THROWS_AS((void)convolve(KernelSpec{}, g), ConfigError);  // infinite radius
  CHECK_THROWS_AS((void)convolve(KernelSpec{}.truncated_at(30.0), g), ConfigError);
}

TEST_CASE("noise capacity error") {
  CHECK_THROWS_AS((void)sample_noise({0, 0, 1e6, 1e6}, 16, NoiseKind::Bernoulli, 1),
                  CapacityError);
}

TEST_CASE("monte carlo field variance matches the kernel quadrature") {
  const KernelSpec kernel = KernelSpec{}.truncated_at(8.0);
  const double want = autocorrelation(kernel, {0, 0});
  const Rect region{0, 0, 1, 1};
  const Rect noise_region = region.inflated(4.0);
  const int M = 10000;
  double s1 = 0.0, s2 = 0.0;
  for (int rep = 0; rep < M; ++rep) {
    const NoiseGrid g =
        sample_noise(noise_region, 4, NoiseKind::Bernoulli, 1000 + std::uint64_t(rep));
    const FieldSample f = convolve(kernel, g);
    const double v = f.at(f.geom.nx / 2, f.geom.ny / 2);
    s1 += v;
    s2 += v * v;
  }
  const double var = s2 / M - (s1 / M) * (s1 / M);
  const double se = std::sqrt(2.0 / M) * want;  // var-of-variance for gaussian-ish values
  CHECK(std::abs(var - want) < 3.0 * se);
}

TEST_CASE("poisson tail oracle values") {
  CHECK(poisson_upper_tail(9.0, 30) < 1.2e-8);
  CHECK(poisson_upper_tail(9.0, 30) > 0.0);
  CHECK(poisson_upper_tail(0.0, 0) == 0.0);
  // tail-variance identity: sum_{i+j=k} x1^2i x2^2j / (i! j!) = |x|^2k / k!
  const double x1 = 0.7, x2 = -1.3;
  const double r2 = x1 * x1 + x2 * x2;
  for (int k = 0; k <= 8; ++k) {
    double direct = 0.0;
    for (int i = 0; i <= k; ++i)
      direct += std::pow(x1 * x1, i) * std::pow(x2 * x2, k - i) /
                (std::tgamma(i + 1.0) * std::tgamma(k - i + 1.0));
    CHECK(direct == doctest::Approx(std::pow(r2, k) / std::tgamma(k + 1.0)).epsilon(1e-12));
  }
  const int d = required_series_degree(3.0);
  CHECK(poisson_upper_tail(9.0, d) < 1e-10);
  CHECK(poisson_upper_tail(9.0, d - 1) >= 1e-10);
}

TEST_CASE("series degree zero is a single gaussian amplitude") {
  // D=0 needs P[Poisson(R^2) > 0] < 1e-10, i.e. a hull radius below 1e-5
  const Rect region{-1e-6, -1e-6, 1e-6, 1e-6};
  const FieldSample f = sample_field_series(region, 200000, 0, 5);
  Rng rng(5);
  const double a00 = rng.gaussian();
  for (int j = 0; j < f.geom.ny; ++j)
    for (int i = 0; i < f.geom.nx; ++i) {
      const Point x = f.geom.point(i, j);
      CHECK(f.at(i, j) ==
            doctest::Approx(a00 * std::exp(-0.5 * x.norm2())).epsilon(1e-12));
    }
}

TEST_CASE("series degree precondition names the required degree") {
  try {
    (void)sample_field_series({-3, -3, 3, 3}, 2, 3, 1);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("need >=") != std::string::npos);
  }
}

TEST_CASE("series sampler covariance matches exp(-d^2/2)") {
  const Rect region{-1.5, -1.5, 1.5, 1.5};
  const int M = 4000;
  std::vector<FieldSample> samples;
  samples.reserve(M);
  for (int rep = 0; rep < M; ++rep)
    samples.push_back(sample_field_series(region, 2, -1, 500 + std::uint64_t(rep)));
  const std::vector<Point> lags = {{0, 0}, {0.5, 0}, {1, 0}, {2, 0}};
  const auto rows = empirical_covariance(samples, lags);
  for (const auto& row : rows) {
    REQUIRE(row.valid);
    const double want = std::exp(-0.5 * row.lag.norm2());
    CHECK(std::abs(row.estimate - want) < 3.0 * row.stderror);
  }
}

TEST_CASE("couple at t=0 copies the base and preserves marginals") {
  const NoiseGrid base = sample_noise({0, 0, 100, 100}, 4, NoiseKind::Gaussian, 21);
  const CoupledNoise pair = couple(base, 0.0, CouplingMode::Ou, 22);
  CHECK(pair.rho == 1.0);
  CHECK(pair.first.values == pair.second.values);

  const CoupledNoise moved = couple(base, 0.7, CouplingMode::Ou, 23);
  // one-sample KS for both members against N(0,1); 1% critical value
  const double crit = 1.628 / std::sqrt(double(base.geom.size()));
  CHECK(ks_statistic_vs_normal(moved.first.values, 1.0) < crit);
  CHECK(ks_statistic_vs_normal(moved.second.values, 1.0) < crit);
}

TEST_CASE("ou coupling correlation at t=1") {
  const NoiseGrid base = sample_noise({0, 0, 80, 80}, 4, NoiseKind::Gaussian, 31);
  const CoupledNoise pair = couple(base, 1.0, CouplingMode::Ou, 32);
  const double rho = pair_correlation(pair.first.values, pair.second.values);
  const double n = double(base.geom.size());
  const double want = std::exp(-1.0);
  const double se = (1.0 - want * want) / std::sqrt(n);
  CHECK(std::abs(rho - want) < 3.0 * se);
}

TEST_CASE("horizontal-plane coupling rho metadata") {
  const NoiseGrid base = sample_noise({0, 0, 4, 4}, 2, NoiseKind::Gaussian, 41);
  const double t = std::sqrt(2.0 * std::log(2.0));
  const CoupledNoise pair = couple(base, t, CouplingMode::HorizontalPlane, 42);
  CHECK(pair.rho == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("couple rejects bernoulli noise") {
  const NoiseGrid base = sample_noise({0, 0, 4, 4}, 2, NoiseKind::Bernoulli, 1);
  CHECK_THROWS_AS((void)couple(base, 1.0, CouplingMode::Ou, 2), ConfigError);
}

TEST_CASE("series field coupling keeps the marginal law") {
  const FieldSample base = sample_field_series({-1, -1, 1, 1}, 4, -1, 51);
  const CoupledField pair = couple(base, 0.4, CouplingMode::Ou, 52);
  CHECK(pair.rho == doctest::Approx(std::exp(-0.4)));
  CHECK(pair.first.values == base.values);
  // the center point has variance 1; rho^2 + (1-rho^2) = 1 by construction
  CHECK(pair.second.values.size() == base.values.size());

  FieldSample conv;
  conv.sampler = SamplerTag::Convolution;
  CHECK_THROWS_AS((void)couple(conv, 0.1, CouplingMode::Ou, 54), ConfigError);
}

TEST_CASE("resample_dynamics identity, correlation and independence limits") {
  const NoiseGrid base = sample_noise({0, 0, 250, 250}, 4, NoiseKind::Bernoulli, 61);

  const NoiseGrid same = resample_dynamics(base, 0.0, 62);
  CHECK(same.values == base.values);

  const double n = double(base.geom.size());
  const NoiseGrid half = resample_dynamics(base, std::log(2.0), 63);
  double corr = 0.0;
  for (std::size_t i = 0; i < base.values.size(); ++i) corr += base.values[i] * half.values[i];
  corr /= n;
  CHECK(std::abs(corr - 0.5) < 3.0 * std::sqrt(0.75 / n));

  const NoiseGrid far = resample_dynamics(base, 20.0, 64);
  corr = 0.0;
  for (std::size_t i = 0; i < base.values.size(); ++i) corr += base.values[i] * far.values[i];
  corr /= n;
  CHECK(std::abs(corr) < 3.0 / std::sqrt(n));
}

TEST_CASE("resample semigroup: t then s behaves like t+s") {
  const NoiseGrid base = sample_noise({0, 0, 250, 250}, 4, NoiseKind::Bernoulli, 71);
  const double t = 0.3, s = 0.5;
  const NoiseGrid mid = resample_dynamics(base, t, 72);
  const NoiseGrid end = resample_dynamics(mid, s, 73);
  const double n = double(base.geom.size());
  double corr = 0.0;
  for (std::size_t i = 0; i < base.values.size(); ++i) corr += base.values[i] * end.values[i];
  corr /= n;
  const double want = std::exp(-(t + s));
  CHECK(std::abs(corr - want) < 3.0 * std::sqrt((1.0 - want * want) / n));
}

TEST_CASE("empirical covariance on constant-zero synthetic samples") {
  FieldSample z;
  z.geom = LatticeGeom::covering({0, 0, 2, 2}, 2);
  z.values.assign(std::size_t(z.geom.size()), 0.0);
  const std::vector<FieldSample> samples{z, z};
  const auto rows = empirical_covariance(samples, {{0, 0}, {0.5, 0}, {99, 0}});
  CHECK(rows[0].valid);
  CHECK(rows[0].estimate == 0.0);
  CHECK(rows[0].stderror == 0.0);
  CHECK(rows[1].valid);
  CHECK_FALSE(rows[2].valid);  // lag outside the grid is skipped
}

TEST_CASE("convolution sampler covariance matches exp(-d^2/2) for r=8") {
  const KernelSpec kernel = KernelSpec{}.truncated_at(8.0);
  const Rect region{0, 0, 3, 3};
  const Rect noise_region = region.inflated(4.0);
  const int M = 3000;
  std::vector<FieldSample> samples;
  samples.reserve(M);
  for (int rep = 0; rep < M; ++rep)
    samples.push_back(convolve(
        kernel, sample_noise(noise_region, 4, NoiseKind::Gaussian, 9000 + std::uint64_t(rep))));
  const auto rows = empirical_covariance(samples, {{0, 0}, {1, 0}, {2, 0}});
  for (const auto& row : rows) {
    REQUIRE(row.valid);
    const double want = std::exp(-0.5 * row.lag.norm2());
    CHECK(std::abs(row.estimate - want) < 3.0 * row.stderror);
  }
}
