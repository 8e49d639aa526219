#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "bflab/geom.hpp"

namespace bflab {

inline constexpr double kNoTruncation = std::numeric_limits<double>::infinity();

/// Radial cutoff profile: 1 for rho <= r/2 - 1/4, 0 for rho >= r/2, and a
/// monotone C^2 quintic smoothstep on the transition band between them.
double cutoff_profile(double rho, double r);

/// Kernel given by samples on a regular grid (bilinear interpolation inside
/// the table extent, zero outside). Loaded from CSV rows (x1, x2, value).
struct TableKernel {
  double x0 = 0.0, y0 = 0.0;
  double step = 1.0;
  int nx = 0, ny = 0;
  std::vector<double> values;

  double eval(Point p) const;
  static TableKernel load_csv(const std::string& path);
};

enum class KernelKind { BargmannFock, Table };

/// Convolution kernel q with an optional smooth truncation q_r.
/// The Bargmann-Fock kind is q(x) = scale * (2/pi)^{1/2} e^{-|x|^2}, whose
/// autocorrelation q*q is exactly scale^2 * e^{-|x|^2/2}.
struct KernelSpec {
  KernelKind kind = KernelKind::BargmannFock;
  double scale = 1.0;              // dimensionless normalization factor
  double r = kNoTruncation;        // truncation radius; q_r == 0 for |x| >= r/2
  double beta = 10.0;              // declared polynomial-decay exponent
  double gamma = 0.4;              // truncation exponent, r = n^gamma
  std::shared_ptr<const TableKernel> table;  // Table kind only

  bool truncated() const { return std::isfinite(r); }
  KernelSpec truncated_at(double radius) const;
  KernelSpec truncated_for_scale(double n) const;  // r = n^gamma

  std::uint64_t hash() const;        // stable content hash for output headers
  std::string to_json_string() const;
  static KernelSpec from_json_string(const std::string& text);
};

/// q_r(x) = cutoff(|x|) * q(x). Total function.
double eval_kernel(const KernelSpec& spec, Point x);

/// (q_r * q_r)(x): closed form for the untruncated Bargmann-Fock kind,
/// midpoint quadrature otherwise. Throws QuadratureError if the error
/// estimate cannot be brought under `tol`.
double autocorrelation(const KernelSpec& spec, Point x, double tol = 1e-9);

/// Quadrature route regardless of kind (oracle for the closed form).
double autocorrelation_quadrature(const KernelSpec& spec, Point x, double tol = 1e-9);

/// Integral of q_r^2 == autocorrelation at lag 0.
double kernel_l2sq(const KernelSpec& spec);

struct ConditionReport {
  bool symmetry_ok = false;
  double max_asymmetry = 0.0;      // worst deviation over the three symmetries
  bool positive_correlations_ok = false;
  double min_autocorrelation = 0.0;
  bool decay_ok = false;
  double fitted_decay_exponent = 0.0;

  bool all_ok() const { return symmetry_ok && positive_correlations_ok && decay_ok; }
};

/// Numerical check of the symmetry / positive-correlation / polynomial-decay
/// conditions on a sample grid of the given radius and step. Failures are
/// report entries, never exceptions.
ConditionReport check_conditions(const KernelSpec& spec, double sample_radius,
                                 double grid_step);

}  // namespace bflab
