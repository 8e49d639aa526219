#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>

#include "bflab/errors.hpp"
#include "bflab/kernel.hpp"
#include "bflab/rng.hpp"

using namespace bflab;

namespace {
const double kBfPeak = std::sqrt(2.0 / 3.14159265358979323846);
}

TEST_CASE("bargmann-fock kernel values") {
  KernelSpec bf;
  CHECK(eval_kernel(bf, {0, 0}) == doctest::Approx(kBfPeak).epsilon(1e-14));
  CHECK(eval_kernel(bf, {1, 0}) == doctest::Approx(kBfPeak * std::exp(-1.0)).epsilon(1e-14));
  CHECK(eval_kernel(bf, {1, 1}) == doctest::Approx(kBfPeak * std::exp(-2.0)).epsilon(1e-14));
}

TEST_CASE("truncation plateau and support") {
  KernelSpec bf = KernelSpec{}.truncated_at(4.0);
  // |x| = r/2 is exactly zero
  CHECK(eval_kernel(bf, {2.0, 0.0}) == 0.0);
  CHECK(eval_kernel(bf, {0.0, -2.0}) == 0.0);
  CHECK(eval_kernel(bf, {3.0, 1.0}) == 0.0);
  // inside the plateau the cutoff is exactly 1
  const double want = kBfPeak * std::exp(-1.7 * 1.7);
  CHECK(eval_kernel(bf, {1.7, 0.0}) == doctest::Approx(want).epsilon(1e-14));

  // random points beyond r/2 evaluate to exactly 0
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const double rho = 2.0 + 3.0 * rng.u01();
    const double ang = 6.2831853 * rng.u01();
    CHECK(eval_kernel(bf, {rho * std::cos(ang), rho * std::sin(ang)}) == 0.0);
  }
}

TEST_CASE("cutoff profile is monotone and C2-ish") {
  const double r = 6.0;
  double prev = 1.0;
  for (double rho = 0.0; rho <= 3.5; rho += 1e-3) {
    const double v = cutoff_profile(rho, r);
    CHECK(v <= prev + 1e-15);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    prev = v;
  }
  // second difference stays bounded across the transition band (C2)
  const double h = 1e-4;
  for (double rho = 2.70; rho <= 3.01; rho += 7e-4) {
    const double second = (cutoff_profile(rho + h, r) - 2 * cutoff_profile(rho, r) +
                           cutoff_profile(rho - h, r)) / (h * h);
    CHECK(std::abs(second) < 400.0);
  }
}

TEST_CASE("kernel evenness is exact") {
  KernelSpec bf = KernelSpec{}.truncated_at(5.0);
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const Point x{(rng.u01() - 0.5) * 8, (rng.u01() - 0.5) * 8};
    CHECK(eval_kernel(bf, x) == eval_kernel(bf, -x));
  }
}

TEST_CASE("autocorrelation closed form vs quadrature oracle") {
  KernelSpec bf;
  CHECK(autocorrelation(bf, {0, 0}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(autocorrelation(bf, {1, 0}) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));

  for (const double d : {0.0, 0.7, 1.0, 2.5, 4.0, 6.0}) {
    const double closed = std::exp(-0.5 * d * d);
    const double quad = autocorrelation_quadrature(bf, {d, 0.0});
    CHECK(std::abs(quad - closed) < 1e-9);
  }
  // off-axis lag too
  CHECK(std::abs(autocorrelation_quadrature(bf, {1.2, -0.9}) -
                 std::exp(-0.5 * (1.2 * 1.2 + 0.81))) < 1e-9);
}

TEST_CASE("truncated autocorrelation close to untruncated at r=8") {
  KernelSpec bf8 = KernelSpec{}.truncated_at(8.0);
  const double trunc = autocorrelation(bf8, {1.0, 0.0});
  CHECK(std::abs(trunc - std::exp(-0.5)) < 1e-6);
}

TEST_CASE("autocorrelation is maximal at zero lag") {
  KernelSpec bf8 = KernelSpec{}.truncated_at(8.0);
  const double at0 = autocorrelation(bf8, {0, 0});
  CHECK(at0 > 0.0);
  for (const double d : {0.3, 0.9, 1.7, 2.8}) {
    CHECK(autocorrelation(bf8, {d, 0.1}) < at0);
  }
}

TEST_CASE("check_conditions: bargmann-fock passes all flags") {
  KernelSpec bf;
  const ConditionReport rep = check_conditions(bf, 6.0, 0.5);
  CHECK(rep.symmetry_ok);
  CHECK(rep.positive_correlations_ok);
  CHECK(rep.decay_ok);
  CHECK(rep.all_ok());
  CHECK(rep.fitted_decay_exponent >= bf.beta);
}

TEST_CASE("check_conditions: negated kernel still has q*q >= 0") {
  KernelSpec neg;
  neg.scale = -1.0;
  const ConditionReport rep = check_conditions(neg, 4.0, 0.5);
  CHECK(rep.symmetry_ok);
  CHECK(rep.positive_correlations_ok);
}

TEST_CASE("check_conditions: asymmetric table kernel fails the symmetry flag") {
  // one corrupted sample at (1, 0)
  const char* path = "asym_kernel.csv";
  {
    std::ofstream csv(path);
    for (int j = -4; j <= 4; ++j)
      for (int i = -4; i <= 4; ++i) {
        double v = std::exp(-double(i * i + j * j) / 4.0);
        if (i == 1 && j == 0) v += 0.5;
        csv << i << "," << j << "," << v << "\n";
      }
  }
  KernelSpec spec;
  spec.kind = KernelKind::Table;
  spec.table = std::make_shared<TableKernel>(TableKernel::load_csv(path));
  CHECK(eval_kernel(spec, {1, 0}) != eval_kernel(spec, {-1, 0}));
  const ConditionReport rep = check_conditions(spec, 3.0, 1.0);
  CHECK_FALSE(rep.symmetry_ok);
}

TEST_CASE("table kernel round trip through CSV") {
  const char* path = "round_kernel.csv";
  {
    std::ofstream csv(path);
    for (int j = -2; j <= 2; ++j)
      for (int i = -2; i <= 2; ++i)
        csv << i * 0.5 << "," << j * 0.5 << "," << std::exp(-(i * i + j * j) * 0.25) << "\n";
  }
  KernelSpec spec;
  spec.kind = KernelKind::Table;
  spec.table = std::make_shared<TableKernel>(TableKernel::load_csv(path));
  CHECK(eval_kernel(spec, {0, 0}) == doctest::Approx(1.0));
  CHECK(eval_kernel(spec, {0.5, 0}) == doctest::Approx(std::exp(-0.25)));
  // bilinear midpoint between samples
  const double mid = eval_kernel(spec, {0.25, 0});
  CHECK(mid == doctest::Approx(0.5 * (1.0 + std::exp(-0.25))));
  // outside the table extent
  CHECK(eval_kernel(spec, {9, 9}) == 0.0);
}

TEST_CASE("kernel spec json round trip") {
  KernelSpec bf = KernelSpec{}.truncated_at(6.0);
  bf.gamma = 0.35;
  bf.beta = 12.0;
  const KernelSpec back = KernelSpec::from_json_string(bf.to_json_string());
  CHECK(back.r == bf.r);
  CHECK(back.gamma == bf.gamma);
  CHECK(back.beta == bf.beta);
  CHECK(back.hash() == bf.hash());

  const KernelSpec inf_spec = KernelSpec::from_json_string("{\"kind\":\"bargmann-fock\",\"r\":\"inf\"}");
  CHECK_FALSE(inf_spec.truncated());
}

TEST_CASE("quadrature error signal") {
  // degenerate spec with absurd tolerance triggers the non-convergence signal
  KernelSpec bf = KernelSpec{}.truncated_at(4.0);
  CHECK_THROWS_AS((void)autocorrelation_quadrature(bf, {0.5, 0.0}, 1e-18), QuadratureError);
}
