#include "bflab/field.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "bflab/errors.hpp"
#include "bflab/rng.hpp"

namespace bflab {

namespace {

void fill_values(NoiseGrid& g) {
  const auto n = g.geom.size();
  g.values.assign(std::size_t(n), 0.0);
  switch (g.kind) {
    case NoiseKind::Bernoulli: {
      Rng rng(g.seed);
      for (auto& v : g.values) v = rng.sign();
      break;
    }
    case NoiseKind::Gaussian: {
      Rng rng(g.seed);
      for (auto& v : g.values) v = rng.gaussian();
      break;
    }
    case NoiseKind::Impulse: {
      const int ci = (g.geom.nx - 1) / 2;
      const int cj = (g.geom.ny - 1) / 2;
      g.values[g.geom.index(ci, cj)] = double(g.geom.N);
      break;
    }
  }
}

}  // namespace

NoiseGrid sample_noise(const Rect& region, int N, NoiseKind kind, std::uint64_t seed) {
  if (N < 1) throw ConfigError("sample_noise: N must be >= 1");
  if (region.empty()) throw ConfigError("sample_noise: empty region");
  NoiseGrid g;
  g.geom = LatticeGeom::covering(region, N);
  if (g.geom.size() > kMaxLatticeCells)
    throw CapacityError("sample_noise: region needs " + std::to_string(g.geom.size()) +
                        " cells, cap is " + std::to_string(kMaxLatticeCells));
  g.kind = kind;
  g.seed = seed;
  fill_values(g);
  return g;
}

// ---------------------------------------------------------------------------
// Convolution

namespace {

int kernel_taps_halfwidth(const KernelSpec& spec, int N) {
  return int(std::floor(spec.r * N / 2.0 + 1e-12));
}

std::vector<double> kernel_taps(const KernelSpec& spec, int N, int kt) {
  const int side = 2 * kt + 1;
  std::vector<double> taps(std::size_t(side) * side);
  for (int dj = -kt; dj <= kt; ++dj)
    for (int di = -kt; di <= kt; ++di)
      taps[std::size_t(dj + kt) * side + (di + kt)] =
          eval_kernel(spec, {double(di) / N, double(dj) / N});
  return taps;
}

int next_fast_size(int n) {
  for (;; ++n) {
    int m = n;
    for (int f : {2, 3, 5, 7})
      while (m % f == 0) m /= f;
    if (m == 1) return n;
  }
}

struct FftBuf {
  double* ptr = nullptr;
  explicit FftBuf(std::size_t n) { ptr = fftw_alloc_real(n); }
  ~FftBuf() { fftw_free(ptr); }
  FftBuf(const FftBuf&) = delete;
};

struct FftCBuf {
  fftw_complex* ptr = nullptr;
  explicit FftCBuf(std::size_t n) { ptr = fftw_alloc_complex(n); }
  ~FftCBuf() { fftw_free(ptr); }
  FftCBuf(const FftCBuf&) = delete;
};

// Cached FFTW plans per transform shape. Plans are created once under a lock
// with FFTW_ESTIMATE (deterministic) and executed on per-call buffers via the
// new-array interface.
struct PlanEntry {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
  std::unique_ptr<FftBuf> scratch_r;
  std::unique_ptr<FftCBuf> scratch_c;
};

std::mutex g_fft_mutex;
std::map<std::pair<int, int>, PlanEntry>& plan_cache() {
  static auto* cache = new std::map<std::pair<int, int>, PlanEntry>();
  return *cache;
}

const PlanEntry& plans_for(int ly, int lx) {
  std::lock_guard<std::mutex> lock(g_fft_mutex);
  auto& cache = plan_cache();
  auto it = cache.find({ly, lx});
  if (it != cache.end()) return it->second;
  PlanEntry e;
  const std::size_t nreal = std::size_t(ly) * lx;
  const std::size_t ncplx = std::size_t(ly) * (lx / 2 + 1);
  e.scratch_r = std::make_unique<FftBuf>(nreal);
  e.scratch_c = std::make_unique<FftCBuf>(ncplx);
  e.fwd = fftw_plan_dft_r2c_2d(ly, lx, e.scratch_r->ptr, e.scratch_c->ptr, FFTW_ESTIMATE);
  e.inv = fftw_plan_dft_c2r_2d(ly, lx, e.scratch_c->ptr, e.scratch_r->ptr, FFTW_ESTIMATE);
  return cache.emplace(std::make_pair(ly, lx), std::move(e)).first->second;
}

// Kernel spectra reused across replicates of the same configuration.
using SpectrumKey = std::tuple<std::uint64_t, int, int, int>;
std::mutex g_spec_mutex;
std::map<SpectrumKey, std::shared_ptr<const std::vector<std::complex<double>>>>&
spectrum_cache() {
  static auto* cache =
      new std::map<SpectrumKey, std::shared_ptr<const std::vector<std::complex<double>>>>();
  return *cache;
}

std::shared_ptr<const std::vector<std::complex<double>>> kernel_spectrum(
    const KernelSpec& spec, int N, int kt, int ly, int lx) {
  const SpectrumKey key{spec.hash(), N, ly, lx};
  {
    std::lock_guard<std::mutex> lock(g_spec_mutex);
    auto it = spectrum_cache().find(key);
    if (it != spectrum_cache().end()) return it->second;
  }
  const auto taps = kernel_taps(spec, N, kt);
  const int side = 2 * kt + 1;
  const std::size_t nreal = std::size_t(ly) * lx;
  const std::size_t ncplx = std::size_t(ly) * (lx / 2 + 1);
  FftBuf img(nreal);
  FftCBuf out(ncplx);
  std::memset(img.ptr, 0, nreal * sizeof(double));
  for (int dj = -kt; dj <= kt; ++dj) {
    const int row = (dj + ly) % ly;
    for (int di = -kt; di <= kt; ++di) {
      const int col = (di + lx) % lx;
      img.ptr[std::size_t(row) * lx + col] = taps[std::size_t(dj + kt) * side + (di + kt)];
    }
  }
  const PlanEntry& pe = plans_for(ly, lx);
  fftw_execute_dft_r2c(pe.fwd, img.ptr, out.ptr);
  auto result = std::make_shared<std::vector<std::complex<double>>>(ncplx);
  std::memcpy(result->data(), out.ptr, ncplx * sizeof(std::complex<double>));
  std::lock_guard<std::mutex> lock(g_spec_mutex);
  return spectrum_cache().emplace(key, std::move(result)).first->second;
}

FieldSample convolve_direct(const KernelSpec& spec, const NoiseGrid& noise,
                            FieldSample out, int kt) {
  const auto taps = kernel_taps(spec, noise.geom.N, kt);
  const int side = 2 * kt + 1;
  const int nx = noise.geom.nx;
  const double inv_n = 1.0 / noise.geom.N;
  for (int j = 0; j < out.geom.ny; ++j) {
    for (int i = 0; i < out.geom.nx; ++i) {
      double acc = 0.0;
      for (int dj = -kt; dj <= kt; ++dj) {
        const double* nrow = &noise.values[std::size_t(j + kt + dj) * nx + (i + kt)];
        const double* trow = &taps[std::size_t(dj + kt) * side + kt];
        for (int di = -kt; di <= kt; ++di) acc += trow[di] * nrow[di];
      }
      out.values[out.geom.index(i, j)] = acc * inv_n;
    }
  }
  return out;
}

FieldSample convolve_fft(const KernelSpec& spec, const NoiseGrid& noise,
                         FieldSample out, int kt) {
  const int nx = noise.geom.nx;
  const int ny = noise.geom.ny;
  const int lx = next_fast_size(nx + 2 * kt);
  const int ly = next_fast_size(ny + 2 * kt);
  const std::size_t nreal = std::size_t(ly) * lx;
  const std::size_t ncplx = std::size_t(ly) * (lx / 2 + 1);

  const auto spectrum = kernel_spectrum(spec, noise.geom.N, kt, ly, lx);
  const PlanEntry& pe = plans_for(ly, lx);

  FftBuf img(nreal);
  FftCBuf freq(ncplx);
  std::memset(img.ptr, 0, nreal * sizeof(double));
  for (int j = 0; j < ny; ++j)
    std::memcpy(img.ptr + std::size_t(j) * lx, &noise.values[std::size_t(j) * nx],
                nx * sizeof(double));
  fftw_execute_dft_r2c(pe.fwd, img.ptr, freq.ptr);

  auto* f = reinterpret_cast<std::complex<double>*>(freq.ptr);
  const auto& k = *spectrum;
  for (std::size_t i = 0; i < ncplx; ++i) f[i] *= k[i];
  fftw_execute_dft_c2r(pe.inv, freq.ptr, img.ptr);

  const double scale = 1.0 / (double(lx) * ly * noise.geom.N);
  for (int j = 0; j < out.geom.ny; ++j)
    for (int i = 0; i < out.geom.nx; ++i)
      out.values[out.geom.index(i, j)] =
          img.ptr[std::size_t(j + kt) * lx + (i + kt)] * scale;
  return out;
}

}  // namespace

FieldSample convolve(const KernelSpec& spec, const NoiseGrid& noise, ConvMethod method) {
  if (!spec.truncated())
    throw ConfigError("convolve: kernel truncation radius must be finite");
  const int kt = kernel_taps_halfwidth(spec, noise.geom.N);
  FieldSample out;
  out.geom = noise.geom;
  out.geom.ix0 += kt;
  out.geom.iy0 += kt;
  out.geom.nx -= 2 * kt;
  out.geom.ny -= 2 * kt;
  if (out.geom.nx <= 0 || out.geom.ny <= 0)
    throw ConfigError("convolve: insufficient noise margin for truncation radius r=" +
                      std::to_string(spec.r));
  out.values.assign(std::size_t(out.geom.size()), 0.0);
  out.sampler = SamplerTag::Convolution;
  out.kernel_hash = spec.hash();
  out.seed = noise.seed;
  return method == ConvMethod::Direct ? convolve_direct(spec, noise, std::move(out), kt)
                                      : convolve_fft(spec, noise, std::move(out), kt);
}

// ---------------------------------------------------------------------------
// Series sampler

double poisson_upper_tail(double lambda, int d) {
  if (lambda <= 0.0) return 0.0;
  double term = std::exp(-lambda);
  double cdf = term;
  for (int k = 1; k <= d; ++k) {
    term *= lambda / k;
    cdf += term;
  }
  return std::max(0.0, 1.0 - cdf);
}

int required_series_degree(double disk_radius, double tol) {
  const double lambda = disk_radius * disk_radius;
  int d = int(lambda);
  while (poisson_upper_tail(lambda, d) >= tol) ++d;
  return d;
}

namespace {

// Basis column p_i(x) = x^i / sqrt(i!), evaluated with log-factorials.
void basis_row(double x, int degree, double* out) {
  if (x == 0.0) {
    out[0] = 1.0;
    for (int i = 1; i <= degree; ++i) out[i] = 0.0;
    return;
  }
  const double lax = std::log(std::abs(x));
  for (int i = 0; i <= degree; ++i) {
    double v = std::exp(i * lax - 0.5 * std::lgamma(double(i) + 1.0));
    if (x < 0.0 && (i & 1)) v = -v;
    out[i] = v;
  }
}

}  // namespace

FieldSample sample_field_series(const Rect& region, int N, int degree,
                                std::uint64_t seed) {
  if (region.empty()) throw ConfigError("sample_field_series: empty region");
  FieldSample f;
  f.geom = LatticeGeom::covering(region, N);
  if (f.geom.size() > kMaxLatticeCells)
    throw CapacityError("sample_field_series: region exceeds lattice cell cap");

  const Rect hull = f.geom.region();
  const double disk_radius =
      std::sqrt(std::max({Point{hull.x0, hull.y0}.norm2(), Point{hull.x1, hull.y0}.norm2(),
                          Point{hull.x0, hull.y1}.norm2(), Point{hull.x1, hull.y1}.norm2()}));
  const int needed = required_series_degree(disk_radius);
  if (degree < 0) {
    degree = needed;
  } else if (degree < needed) {
    throw ConfigError("sample_field_series: degree " + std::to_string(degree) +
                      " too small for region, need >= " + std::to_string(needed));
  }

  const int d1 = degree + 1;
  std::vector<double> coef(std::size_t(d1) * d1, 0.0);
  Rng rng(seed);
  for (int i = 0; i <= degree; ++i)
    for (int j = 0; j <= degree - i; ++j) coef[std::size_t(i) * d1 + j] = rng.gaussian();

  const int nx = f.geom.nx;
  const int ny = f.geom.ny;
  std::vector<double> px(std::size_t(nx) * d1);
  std::vector<double> py(std::size_t(ny) * d1);
  for (int c = 0; c < nx; ++c) basis_row(f.geom.point(c, 0).x, degree, &px[std::size_t(c) * d1]);
  for (int c = 0; c < ny; ++c) basis_row(f.geom.point(0, c).y, degree, &py[std::size_t(c) * d1]);

  // tmp[c][j] = sum_{i <= D-j} p_i(x_c) a_ij
  std::vector<double> tmp(std::size_t(nx) * d1, 0.0);
  for (int c = 0; c < nx; ++c) {
    const double* p = &px[std::size_t(c) * d1];
    double* t = &tmp[std::size_t(c) * d1];
    for (int j = 0; j <= degree; ++j) {
      double acc = 0.0;
      for (int i = 0; i <= degree - j; ++i) acc += p[i] * coef[std::size_t(i) * d1 + j];
      t[j] = acc;
    }
  }

  f.values.assign(std::size_t(f.geom.size()), 0.0);
  for (int jy = 0; jy < ny; ++jy) {
    const double* q = &py[std::size_t(jy) * d1];
    const double yy = f.geom.point(0, jy).y;
    for (int ix = 0; ix < nx; ++ix) {
      const double* t = &tmp[std::size_t(ix) * d1];
      double acc = 0.0;
      for (int j = 0; j <= degree; ++j) acc += t[j] * q[j];
      const double xx = f.geom.point(ix, 0).x;
      f.values[f.geom.index(ix, jy)] = acc * std::exp(-0.5 * (xx * xx + yy * yy));
    }
  }
  f.sampler = SamplerTag::Series;
  f.seed = seed;
  f.series_degree = degree;
  return f;
}

// ---------------------------------------------------------------------------
// Dynamics

CoupledNoise couple(const NoiseGrid& base, double t, CouplingMode mode,
                    std::uint64_t seed) {
  if (base.kind != NoiseKind::Gaussian)
    throw ConfigError("couple: base must be Gaussian noise (use resample_dynamics for Bernoulli)");
  if (t < 0.0) throw ConfigError("couple: t must be >= 0");
  CoupledNoise pair;
  pair.t = t;
  pair.rho = coupling_rho(t, mode);
  pair.first = base;
  pair.second = base;
  pair.second.seed = seed;
  const double mix = std::sqrt(std::max(0.0, 1.0 - pair.rho * pair.rho));
  Rng rng(seed);
  for (auto& v : pair.second.values) v = pair.rho * v + mix * rng.gaussian();
  return pair;
}

CoupledField couple(const FieldSample& base, double t, CouplingMode mode,
                    std::uint64_t seed) {
  if (base.sampler != SamplerTag::Series)
    throw ConfigError("couple: field coupling needs a series sample; couple the noise grid instead");
  if (t < 0.0) throw ConfigError("couple: t must be >= 0");
  CoupledField pair;
  pair.t = t;
  pair.rho = coupling_rho(t, mode);
  pair.first = base;
  const FieldSample fresh =
      sample_field_series(base.geom.region(), base.geom.N, base.series_degree, seed);
  pair.second = fresh;
  const double mix = std::sqrt(std::max(0.0, 1.0 - pair.rho * pair.rho));
  for (std::size_t i = 0; i < pair.second.values.size(); ++i)
    pair.second.values[i] = pair.rho * base.values[i] + mix * fresh.values[i];
  return pair;
}

NoiseGrid resample_dynamics(const NoiseGrid& noise, double t, std::uint64_t seed) {
  if (noise.kind != NoiseKind::Bernoulli)
    throw ConfigError("resample_dynamics: Bernoulli noise required");
  if (t < 0.0) throw ConfigError("resample_dynamics: t must be >= 0");
  NoiseGrid out = noise;
  out.seed = seed;
  const double p = 1.0 - std::exp(-t);
  Rng rng(seed);
  for (auto& v : out.values)
    if (rng.u01() < p) v = rng.sign();
  return out;
}

// ---------------------------------------------------------------------------
// Covariance estimation

std::vector<LagCovariance> empirical_covariance(
    const std::vector<FieldSample>& samples, const std::vector<Point>& lags) {
  if (samples.size() < 2)
    throw ConfigError("empirical_covariance: need at least 2 samples");
  const LatticeGeom geom = samples[0].geom;
  for (const auto& s : samples)
    if (!s.geom.same_shape(geom))
      throw ConfigError("empirical_covariance: samples must share one grid");
  const int S = int(samples.size());

  std::vector<double> mean(std::size_t(geom.size()), 0.0);
  for (const auto& s : samples)
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += s.values[i];
  for (auto& m : mean) m /= S;

  std::vector<LagCovariance> out;
  out.reserve(lags.size());
  for (const Point& lag : lags) {
    LagCovariance row;
    row.lag = lag;
    const int di = int(std::lround(lag.x * geom.N));
    const int dj = int(std::lround(lag.y * geom.N));
    const int i0 = std::max(0, -di), i1 = geom.nx - 1 - std::max(0, di);
    const int j0 = std::max(0, -dj), j1 = geom.ny - 1 - std::max(0, dj);
    if (i0 > i1 || j0 > j1) {
      out.push_back(row);  // lag outside grid: skipped entry
      continue;
    }
    const double npos = double(i1 - i0 + 1) * (j1 - j0 + 1);
    std::vector<double> per_sample(S, 0.0);
    for (int s = 0; s < S; ++s) {
      double acc = 0.0;
      for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) {
          const auto a = geom.index(i, j);
          const auto b = geom.index(i + di, j + dj);
          acc += (samples[s].values[a] - mean[a]) * (samples[s].values[b] - mean[b]);
        }
      per_sample[s] = acc / npos;
    }
    const double bias = double(S) / (S - 1);
    double m = 0.0;
    for (double v : per_sample) m += v;
    m /= S;
    double var = 0.0;
    for (double v : per_sample) var += (v - m) * (v - m);
    var = S > 1 ? var / (S - 1) : 0.0;
    row.estimate = bias * m;
    row.stderror = bias * std::sqrt(var / S);
    row.valid = true;
    out.push_back(row);
  }
  return out;
}

}  // namespace bflab
