#pragma once

#include <cstdint>
#include <vector>

#include "bflab/geom.hpp"
#include "bflab/kernel.hpp"

namespace bflab {

enum class NoiseKind { Bernoulli, Gaussian, Impulse };

/// Discrete white noise: one value per lattice cell of side 1/N, carrying
/// mass sigma_v / N, so that (q_r * W^N)(x) = (1/N) sum_v sigma_v q_r(x - v).
struct NoiseGrid {
  LatticeGeom geom;
  NoiseKind kind = NoiseKind::Bernoulli;
  std::uint64_t seed = 0;
  std::vector<double> values;

  double at(int i, int j) const { return values[geom.index(i, j)]; }
};

enum class SamplerTag { Convolution, Series };

/// Field values on a lattice over a rectangular region.
struct FieldSample {
  LatticeGeom geom;
  std::vector<double> values;
  SamplerTag sampler = SamplerTag::Convolution;
  std::uint64_t kernel_hash = 0;
  std::uint64_t seed = 0;
  int series_degree = -1;  // Series samples only

  double at(int i, int j) const { return values[geom.index(i, j)]; }
};

/// Cap on noise/field cells per grid (memory budget).
inline constexpr std::int64_t kMaxLatticeCells = std::int64_t(1) << 26;

NoiseGrid sample_noise(const Rect& region, int N, NoiseKind kind, std::uint64_t seed);

enum class ConvMethod { Fft, Direct };

/// f^N = q_r * W^N on the noise lattice deflated by r/2 (so every output
/// point has its full kernel footprint inside the noise grid). Requires a
/// finite truncation radius.
FieldSample convolve(const KernelSpec& spec, const NoiseGrid& noise,
                     ConvMethod method = ConvMethod::Fft);

/// P[Poisson(lambda) > d], by exact tail summation.
double poisson_upper_tail(double lambda, int d);

/// Smallest degree D with P[Poisson(R^2) > D] < tol.
int required_series_degree(double disk_radius, double tol = 1e-10);

/// Gaussian-coefficient entire-function sampler:
///   f(x) = e^{-|x|^2/2} sum_{i+j<=D} a_ij x1^i x2^j / sqrt(i! j!).
/// degree < 0 picks D by the Poisson tail rule for the region's disk radius.
FieldSample sample_field_series(const Rect& region, int N, int degree,
                                std::uint64_t seed);

enum class CouplingMode { Ou, HorizontalPlane };

inline double coupling_rho(double t, CouplingMode mode) {
  return mode == CouplingMode::Ou ? std::exp(-t) : std::exp(-t * t / 2.0);
}

struct CoupledNoise {
  NoiseGrid first, second;
  double t = 0.0;
  double rho = 1.0;
};

struct CoupledField {
  FieldSample first, second;
  double t = 0.0;
  double rho = 1.0;
};

/// second = rho * base + sqrt(1 - rho^2) * fresh, Gaussian kind only.
CoupledNoise couple(const NoiseGrid& base, double t, CouplingMode mode,
                    std::uint64_t seed);

/// Same linear coupling for a series-sampled field (the stored degree/region
/// make an independent fresh copy well-defined).
CoupledField couple(const FieldSample& base, double t, CouplingMode mode,
                    std::uint64_t seed);

/// Bernoulli dynamics: each bit is independently replaced by a fresh uniform
/// sign with probability 1 - e^{-t}, so E[sigma_v(0) sigma_v(t)] = e^{-t}.
NoiseGrid resample_dynamics(const NoiseGrid& noise, double t, std::uint64_t seed);

struct LagCovariance {
  Point lag;
  double estimate = 0.0;
  double stderror = 0.0;
  bool valid = false;
};

/// Cross-replicate covariance estimate at each lag, averaged over all valid
/// base points; lags that do not fit in the grid come back with valid=false.
std::vector<LagCovariance> empirical_covariance(
    const std::vector<FieldSample>& samples, const std::vector<Point>& lags);

}  // namespace bflab
