#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <bit>
#include <cmath>

#include "bflab/errors.hpp"
#include "bflab/rng.hpp"
#include "bflab/walsh.hpp"

using namespace bflab;

namespace {

// Brute-force transform: ghat(S) = 2^-m sum_a g(a) (-1)^{popcount(S & a)}.
std::vector<double> brute_spectrum(const std::vector<double>& table) {
  const std::size_t n = table.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    double acc = 0.0;
    for (std::size_t a = 0; a < n; ++a)
      acc += std::popcount(s & a) % 2 ? -table[a] : table[a];
    out[s] = acc / double(n);
  }
  return out;
}

// Exact covariance of g(sigma(0)), g(sigma(t)) under bit resampling, by
// enumerating configurations, keep/resample masks and fresh values.
double brute_noise_covariance(const std::vector<double>& table, double t) {
  int m = 0;
  while ((std::size_t(1) << m) < table.size()) ++m;
  const double keep = std::exp(-t);
  const std::size_t n = table.size();
  double e_prod = 0.0, e_g = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    e_g += table[a] / double(n);
    for (std::size_t mask = 0; mask < n; ++mask) {  // bit set = resampled
      const int k = std::popcount(mask);
      double p_mask = 1.0;
      for (int b = 0; b < m; ++b) p_mask *= ((mask >> b) & 1) ? (1.0 - keep) : keep;
      // average over fresh values of the resampled bits
      double avg = 0.0;
      const std::size_t sub = mask;
      std::size_t fresh = 0;
      std::size_t count = 0;
      for (;;) {  // iterate subsets `fresh` of `mask`
        const std::size_t b_new = (a & ~mask) | fresh;
        avg += table[b_new];
        ++count;
        if (fresh == sub) break;
        fresh = (fresh - sub) & sub;
      }
      avg /= double(count);
      e_prod += table[a] * avg * p_mask / double(n);
    }
  }
  return e_prod - e_g * e_g;
}

}  // namespace

TEST_CASE("basis functions transform to single coefficients") {
  // g = sigma_0 sigma_1 on 2 bits
  std::vector<double> t(4);
  for (std::size_t a = 0; a < 4; ++a)
    t[a] = (((a >> 0) & 1) ? -1.0 : 1.0) * (((a >> 1) & 1) ? -1.0 : 1.0);
  const WalshSpectrum spec = walsh_transform(t, RangeTag::PlusMinus);
  CHECK(spec.coef[3] == 1.0);
  CHECK(spec.coef[0] == 0.0);
  CHECK(spec.coef[1] == 0.0);
  CHECK(spec.coef[2] == 0.0);

  const WalshSpectrum dict = walsh_transform(dictator_table(1, 0), RangeTag::PlusMinus);
  CHECK(dict.coef[1] == 1.0);
  CHECK(dict.coef[0] == 0.0);
}

TEST_CASE("majority-of-3 spectrum matches the brute-force oracle exactly") {
  const auto table = majority3_table();
  const WalshSpectrum spec = walsh_transform(table, RangeTag::PlusMinus);
  const auto brute = brute_spectrum(table);
  for (std::size_t s = 0; s < 8; ++s) CHECK(spec.coef[s] == brute[s]);
  CHECK(spec.coef[0b001] == 0.5);
  CHECK(spec.coef[0b010] == 0.5);
  CHECK(spec.coef[0b100] == 0.5);
  CHECK(spec.coef[0b111] == -0.5);
  CHECK(spec.coef[0b011] == 0.0);
  CHECK(spec.mean() == 0.0);
}

TEST_CASE("parseval and inverse on random tables") {
  Rng rng(1);
  for (const int m : {3, 6, 10}) {
    std::vector<double> table(std::size_t(1) << m);
    for (auto& v : table) v = rng.gaussian();
    const WalshSpectrum spec = walsh_transform(table, RangeTag::PlusMinus);
    double table_ms = 0.0;
    for (double v : table) table_ms += v * v;
    table_ms /= double(table.size());
    CHECK(std::abs(spec.mean_square() - table_ms) < 1e-12);

    const auto back = inverse_walsh(spec);
    for (std::size_t i = 0; i < table.size(); ++i)
      CHECK(std::abs(back[i] - table[i]) < 1e-12);
  }
}

TEST_CASE("walsh transform input validation") {
  CHECK_THROWS_AS((void)walsh_transform({1.0, 2.0, 3.0}), ConfigError);
  CHECK_THROWS_AS((void)walsh_transform(std::vector<double>(1 << 22, 0.0)), CapacityError);
  // the override cap admits larger tables
  const WalshSpectrum big =
      walsh_transform(std::vector<double>(1 << 21, 0.0), RangeTag::ZeroOne, 24);
  CHECK(big.m == 21);
}

TEST_CASE("noise covariance closed forms") {
  const WalshSpectrum dict = walsh_transform(dictator_table(1, 0), RangeTag::PlusMinus);
  CHECK(noise_covariance(dict, std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-15));

  const WalshSpectrum maj = walsh_transform(majority3_table(), RangeTag::PlusMinus);
  for (const double t : {0.0, 0.3, 1.0, 2.5}) {
    const double want = (3.0 * std::exp(-t) + std::exp(-3.0 * t)) / 4.0;
    CHECK(noise_covariance(maj, t) == doctest::Approx(want).epsilon(1e-14));
  }
  CHECK(noise_covariance(maj, 0.0) == doctest::Approx(1.0));  // variance of +-1 majority

  for (const int m : {2, 5}) {
    const WalshSpectrum par = walsh_transform(parity_table(m), RangeTag::PlusMinus);
    CHECK(noise_covariance(par, 0.7) == doctest::Approx(std::exp(-0.7 * m)).epsilon(1e-14));
  }
}

TEST_CASE("noise covariance agrees with exhaustive resampling enumeration") {
  const auto maj = majority3_table();
  const WalshSpectrum spec = walsh_transform(maj, RangeTag::PlusMinus);
  for (const double t : {0.2, 0.9}) {
    CHECK(noise_covariance(spec, t) ==
          doctest::Approx(brute_noise_covariance(maj, t)).epsilon(1e-12));
  }
  const auto trib = tribes_table(2, 2);
  const WalshSpectrum tspec = walsh_transform(trib, RangeTag::ZeroOne);
  CHECK(noise_covariance(tspec, 0.4) ==
        doctest::Approx(brute_noise_covariance(trib, 0.4)).epsilon(1e-12));
}

TEST_CASE("conditional variance identity and values") {
  const WalshSpectrum dict = walsh_transform(dictator_table(1, 0), RangeTag::PlusMinus);
  CHECK(conditional_variance(dict, std::log(2.0)) == doctest::Approx(0.25).epsilon(1e-15));

  Rng rng(3);
  std::vector<double> table(64);
  for (auto& v : table) v = rng.gaussian();
  const WalshSpectrum spec = walsh_transform(table, RangeTag::PlusMinus);
  for (const double t : {0.0, 0.05, 0.4, 1.7, 6.0}) {
    CHECK(std::abs(conditional_variance(spec, t) - noise_covariance(spec, 2.0 * t)) <
          1e-15);
  }
  // t = 0 gives the variance
  const double var = spec.mean_square() - spec.mean() * spec.mean();
  CHECK(conditional_variance(spec, 0.0) == doctest::Approx(var).epsilon(1e-12));
}

TEST_CASE("noise covariance decays monotonically to zero") {
  Rng rng(4);
  std::vector<double> table(32);
  for (auto& v : table) v = rng.gaussian();
  // mean-zero spec
  double mean = 0.0;
  for (double v : table) mean += v / table.size();
  for (auto& v : table) v -= mean;
  const WalshSpectrum spec = walsh_transform(table, RangeTag::PlusMinus);
  double prev = noise_covariance(spec, 0.0);
  for (double t = 0.25; t <= 12.0; t += 0.25) {
    const double now = noise_covariance(spec, t);
    CHECK(now <= prev + 1e-15);
    prev = now;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("exact revealment: dictator reads its bit") {
  const auto rev = exact_revealment(dictator_algorithm(0), 1);
  CHECK(rev.delta == 1.0);
  CHECK(rev.per_bit[0] == 1.0);
}

TEST_CASE("exact revealment: majority of 3 in random order is 5/6") {
  const auto table = majority3_table();
  const auto rev = exact_revealment(majority3_random_order(), 3, &table);
  CHECK(rev.delta == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  for (int b = 0; b < 3; ++b)
    CHECK(rev.per_bit[b] == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("exact revealment: constant function with an empty algorithm") {
  DecisionTree leaf_only;
  leaf_only.nodes.push_back({-1, 1.0, -1, -1});
  const std::vector<double> table(8, 1.0);
  const auto rev = exact_revealment({{leaf_only}}, 3, &table);
  CHECK(rev.delta == 0.0);
}

TEST_CASE("determination failures are named") {
  // tree claims constant 1 but g is the dictator: fails on input 1
  DecisionTree leaf_only;
  leaf_only.nodes.push_back({-1, 1.0, -1, -1});
  const auto dict = dictator_table(1, 0);
  CHECK_THROWS_AS((void)exact_revealment({{leaf_only}}, 1, &dict), DeterminationError);

  // two trees that compute different functions
  DecisionTree leaf_zero;
  leaf_zero.nodes.push_back({-1, -1.0, -1, -1});
  CHECK_THROWS_AS((void)exact_revealment({{leaf_only, leaf_zero}}, 1, nullptr),
                  DeterminationError);
}

TEST_CASE("schramm-steif certificates") {
  const WalshSpectrum dict = walsh_transform(dictator_table(1, 0), RangeTag::PlusMinus);
  const auto rows = verify_schramm_steif(dict, 1.0);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].level_weight == 1.0);
  CHECK(rows[0].bound == 1.0);
  CHECK(rows[0].pass);

  const WalshSpectrum maj = walsh_transform(majority3_table(), RangeTag::PlusMinus);
  const auto ok = verify_schramm_steif(maj, 5.0 / 6.0);
  CHECK(ok[0].level_weight == 0.75);
  for (const auto& row : ok) CHECK(row.pass);

  // fabricated too-small delta fails at level 1
  const auto bad = verify_schramm_steif(maj, 0.5);
  CHECK_FALSE(bad[0].pass);
  CHECK(bad[0].level_weight == 0.75);
  CHECK(bad[0].bound == doctest::Approx(0.5));
}

TEST_CASE("tribes algorithm determines tribes and its certificate holds") {
  const auto table = tribes_table(3, 3);
  const auto alg = tribes_algorithm(3, 3);
  CHECK(alg.trees.size() == 6);
  const auto rev = exact_revealment(alg, 9, &table);
  CHECK(rev.delta > 0.5);
  CHECK(rev.delta < 1.0);
  // hand computation: first tribe bit read iff all earlier tribes failed;
  // a tribe fails with probability 7/8
  const double want = (1.0 + 7.0 / 8.0 + 49.0 / 64.0) / 3.0;
  CHECK(rev.per_bit[0] == doctest::Approx(want).epsilon(1e-14));
  const WalshSpectrum spec = walsh_transform(table, RangeTag::ZeroOne);
  for (const auto& row : verify_schramm_steif(spec, rev.delta)) CHECK(row.pass);
}

TEST_CASE("tiny field instance: truth table, monotonicity, index round trip") {
  TinyFieldConfig cfg;
  cfg.kernel = KernelSpec{}.truncated_at(3.0);
  cfg.quad = QuadSpec{1.0, 1.0, 1.0, SidePair::LeftRight};
  cfg.N = 1;
  const TinyFieldBoolean tiny = field_to_boolean(cfg);
  CHECK(tiny.m == 16);
  CHECK(tiny.table.size() == std::size_t(1) << 16);

  // index 0 is the all-(+1) assignment: positive field everywhere
  CHECK(tiny.table[0] == 1.0);
  // all-(-1) gives a negative field: no crossing
  CHECK(tiny.table[tiny.table.size() - 1] == 0.0);

  // monotone in every bit: clearing a bit (-1 -> +1) never destroys a crossing
  for (std::size_t a = 0; a < tiny.table.size(); ++a)
    for (int b = 0; b < tiny.m; ++b)
      if ((a >> b) & 1) CHECK(tiny.table[a & ~(std::size_t(1) << b)] >= tiny.table[a]);

  const NoiseGrid g = noise_from_index(tiny, 0x5a5a);
  CHECK(index_from_noise(tiny, g) == 0x5a5a);

  TinyFieldConfig big = cfg;
  big.N = 2;
  CHECK_THROWS_AS((void)field_to_boolean(big), CapacityError);
}

TEST_CASE("tiny field spectral covariance matches monte carlo resampling") {
  TinyFieldConfig cfg;
  cfg.kernel = KernelSpec{}.truncated_at(3.0);
  cfg.quad = QuadSpec{1.0, 1.0, 1.0, SidePair::LeftRight};
  cfg.N = 1;
  const TinyFieldBoolean tiny = field_to_boolean(cfg);
  const WalshSpectrum spec = walsh_transform(tiny.table, RangeTag::ZeroOne);

  const double t = 0.5;
  const double want = noise_covariance(spec, t);
  const int M = 40000;
  Rng rng(99);
  double sp = 0.0, s0 = 0.0, s1 = 0.0;
  for (int rep = 0; rep < M; ++rep) {
    const std::uint64_t a = rng.raw() & 0xffff;
    const NoiseGrid g0 = noise_from_index(tiny, a);
    const NoiseGrid g1 = resample_dynamics(g0, t, rng.raw());
    const double x = tiny.table[a];
    const double y = tiny.table[index_from_noise(tiny, g1)];
    sp += x * y;
    s0 += x;
    s1 += y;
  }
  const double cov = sp / M - (s0 / M) * (s1 / M);
  CHECK(std::abs(cov - want) < 3.0 / std::sqrt(double(M)));
}
