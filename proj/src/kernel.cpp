#include "bflab/kernel.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "bflab/errors.hpp"
#include "bflab/rng.hpp"
#include "json.hpp"

namespace bflab {

namespace {
// 2D normalization giving q*q(0) = 1 for the Gaussian profile e^{-|x|^2}.
const double kBfNorm = std::sqrt(2.0 / 3.14159265358979323846);
}  // namespace

double cutoff_profile(double rho, double r) {
  if (!std::isfinite(r)) return 1.0;
  const double hi = r / 2.0;
  const double lo = hi - 0.25;
  if (rho <= lo) return 1.0;
  if (rho >= hi) return 0.0;
  const double u = (rho - lo) / (hi - lo);
  const double s = u * u * u * (u * (6.0 * u - 15.0) + 10.0);
  return 1.0 - s;
}

double TableKernel::eval(Point p) const {
  const double fx = (p.x - x0) / step;
  const double fy = (p.y - y0) / step;
  if (fx < 0.0 || fy < 0.0 || fx > nx - 1 || fy > ny - 1) return 0.0;
  int i = int(fx);
  int j = int(fy);
  if (i >= nx - 1) i = nx - 2;
  if (j >= ny - 1) j = ny - 2;
  if (nx == 1 || ny == 1) return values[std::size_t(j) * nx + i];
  const double ax = fx - i;
  const double ay = fy - j;
  const double v00 = values[std::size_t(j) * nx + i];
  const double v10 = values[std::size_t(j) * nx + i + 1];
  const double v01 = values[std::size_t(j + 1) * nx + i];
  const double v11 = values[std::size_t(j + 1) * nx + i + 1];
  return v00 * (1 - ax) * (1 - ay) + v10 * ax * (1 - ay) + v01 * (1 - ax) * ay +
         v11 * ax * ay;
}

TableKernel TableKernel::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("table kernel: cannot open " + path);
  std::map<double, std::map<double, double>> rows;  // y -> x -> value
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string a, b, c;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c))
      throw ConfigError("table kernel: malformed row: " + line);
    const double x = std::stod(a), y = std::stod(b), v = std::stod(c);
    rows[y][x] = v;
  }
  if (rows.empty()) throw ConfigError("table kernel: empty table " + path);

  TableKernel t;
  const auto& first_row = rows.begin()->second;
  t.ny = int(rows.size());
  t.nx = int(first_row.size());
  t.y0 = rows.begin()->first;
  t.x0 = first_row.begin()->first;
  if (t.nx > 1) {
    t.step = (first_row.rbegin()->first - t.x0) / (t.nx - 1);
  } else if (t.ny > 1) {
    t.step = (rows.rbegin()->first - t.y0) / (t.ny - 1);
  }
  t.values.reserve(std::size_t(t.nx) * t.ny);
  for (const auto& [y, row] : rows) {
    if (int(row.size()) != t.nx)
      throw ConfigError("table kernel: ragged rows in " + path);
    for (const auto& [x, v] : row) t.values.push_back(v);
  }
  return t;
}

KernelSpec KernelSpec::truncated_at(double radius) const {
  KernelSpec out = *this;
  out.r = radius;
  return out;
}

KernelSpec KernelSpec::truncated_for_scale(double n) const {
  return truncated_at(std::pow(n, gamma));
}

std::uint64_t KernelSpec::hash() const {
  std::uint64_t h = fnv1a64(kind == KernelKind::BargmannFock ? "bargmann-fock" : "table");
  auto mixd = [&h](double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    h = mix64(h ^ bits);
  };
  mixd(scale);
  mixd(r);
  mixd(beta);
  mixd(gamma);
  if (table) {
    mixd(table->x0);
    mixd(table->y0);
    mixd(table->step);
    for (double v : table->values) mixd(v);
  }
  return h;
}

std::string KernelSpec::to_json_string() const {
  nlohmann::json j;
  j["kind"] = kind == KernelKind::BargmannFock ? "bargmann-fock" : "table";
  j["r"] = std::isfinite(r) ? nlohmann::json(r) : nlohmann::json("inf");
  j["gamma"] = gamma;
  j["beta"] = beta;
  if (scale != 1.0) j["scale"] = scale;
  return j.dump();
}

KernelSpec KernelSpec::from_json_string(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  KernelSpec spec;
  const std::string kind = j.value("kind", "bargmann-fock");
  if (kind == "bargmann-fock") {
    spec.kind = KernelKind::BargmannFock;
  } else if (kind == "table") {
    spec.kind = KernelKind::Table;
    if (!j.contains("table")) throw ConfigError("table kernel requires \"table\" CSV path");
    spec.table = std::make_shared<TableKernel>(TableKernel::load_csv(j["table"]));
  } else {
    throw ConfigError("unknown kernel kind: " + kind);
  }
  if (j.contains("r")) {
    if (j["r"].is_string()) {
      const std::string s = j["r"];
      if (s != "inf" && s != "auto") throw ConfigError("kernel r must be a number, \"inf\" or \"auto\"");
      spec.r = kNoTruncation;
    } else {
      spec.r = j["r"];
    }
  }
  spec.gamma = j.value("gamma", 0.4);
  spec.beta = j.value("beta", 10.0);
  spec.scale = j.value("scale", 1.0);
  if (spec.gamma <= 0.0 || spec.gamma >= 1.0) throw ConfigError("kernel gamma must lie in (0,1)");
  return spec;
}

double eval_kernel(const KernelSpec& spec, Point x) {
  double base;
  if (spec.kind == KernelKind::BargmannFock) {
    base = kBfNorm * std::exp(-x.norm2());
  } else {
    base = spec.table ? spec.table->eval(x) : 0.0;
  }
  return spec.scale * cutoff_profile(x.norm(), spec.r) * base;
}

namespace {

// Midpoint rule for (q_r * q_r)(x) over the support intersection, refined
// until the Richardson estimate |I_h - I_{h/2}| / 3 falls under tol.
double autocorr_midpoint(const KernelSpec& spec, Point x, double h) {
  double support;
  if (spec.truncated()) {
    support = spec.r / 2.0;
  } else if (spec.kind == KernelKind::BargmannFock) {
    support = 7.0;  // e^{-49} is far below any tolerance used here
  } else {
    const auto& t = *spec.table;
    support = std::max({std::abs(t.x0), std::abs(t.y0),
                        std::abs(t.x0 + t.step * (t.nx - 1)),
                        std::abs(t.y0 + t.step * (t.ny - 1))});
  }
  // Integrand q(y) q(y + x) lives in disk(0, s) ∩ disk(-x, s).
  const double ax0 = std::max(-support, -x.x - support);
  const double ax1 = std::min(support, -x.x + support);
  const double ay0 = std::max(-support, -x.y - support);
  const double ay1 = std::min(support, -x.y + support);
  if (ax0 >= ax1 || ay0 >= ay1) return 0.0;

  const int mx = std::max(1, int(std::ceil((ax1 - ax0) / h)));
  const int my = std::max(1, int(std::ceil((ay1 - ay0) / h)));
  const double hx = (ax1 - ax0) / mx;
  const double hy = (ay1 - ay0) / my;
  double sum = 0.0;
  for (int j = 0; j < my; ++j) {
    const double yy = ay0 + (j + 0.5) * hy;
    double row = 0.0;
    for (int i = 0; i < mx; ++i) {
      const double yx = ax0 + (i + 0.5) * hx;
      row += eval_kernel(spec, {yx, yy}) * eval_kernel(spec, {yx + x.x, yy + x.y});
    }
    sum += row;
  }
  return sum * hx * hy;
}

}  // namespace

double autocorrelation_quadrature(const KernelSpec& spec, Point x, double tol) {
  double h = spec.truncated() ? std::min(0.05, spec.r / 200.0) : 0.05;
  double coarse = autocorr_midpoint(spec, x, h);
  for (int refine = 0; refine < 5; ++refine) {
    const double fine = autocorr_midpoint(spec, x, h / 2.0);
    const double est = std::abs(fine - coarse) / 3.0;
    if (est < tol) return fine;
    h /= 2.0;
    coarse = fine;
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "autocorrelation quadrature did not converge at lag (%g, %g)", x.x, x.y);
  throw QuadratureError(buf);
}

double autocorrelation(const KernelSpec& spec, Point x, double tol) {
  if (spec.kind == KernelKind::BargmannFock && !spec.truncated()) {
    return spec.scale * spec.scale * std::exp(-0.5 * x.norm2());
  }
  return autocorrelation_quadrature(spec, x, tol);
}

double kernel_l2sq(const KernelSpec& spec) { return autocorrelation(spec, {0, 0}); }

ConditionReport check_conditions(const KernelSpec& spec, double sample_radius,
                                 double grid_step) {
  if (sample_radius <= 0.0) throw ConfigError("check_conditions: sample_radius must be > 0");
  ConditionReport rep;

  // Symmetries: q(x) = q(-x), reflection in the x-axis, rotation by pi/2.
  double worst = 0.0;
  for (double yy = -sample_radius; yy <= sample_radius + 1e-12; yy += grid_step) {
    for (double xx = -sample_radius; xx <= sample_radius + 1e-12; xx += grid_step) {
      const double v = eval_kernel(spec, {xx, yy});
      worst = std::max(worst, std::abs(v - eval_kernel(spec, {-xx, -yy})));
      worst = std::max(worst, std::abs(v - eval_kernel(spec, {xx, -yy})));
      worst = std::max(worst, std::abs(v - eval_kernel(spec, {-yy, xx})));
    }
  }
  rep.max_asymmetry = worst;
  rep.symmetry_ok = worst <= 1e-10;

  // Positive correlations: q*q >= 0 on the sample grid (coarse quadrature).
  double min_ac = std::numeric_limits<double>::infinity();
  for (double yy = 0.0; yy <= sample_radius + 1e-12; yy += grid_step) {
    for (double xx = 0.0; xx <= sample_radius + 1e-12; xx += grid_step) {
      double ac;
      try {
        ac = autocorrelation(spec, {xx, yy}, 1e-7);
      } catch (const QuadratureError&) {
        ac = -std::numeric_limits<double>::infinity();
      }
      min_ac = std::min(min_ac, ac);
    }
  }
  rep.min_autocorrelation = min_ac;
  rep.positive_correlations_ok = min_ac >= -1e-12;

  // Decay: least-squares slope of log|q| against log rho along 8 rays.
  const Point dirs[8] = {{1, 0},  {0, 1},  {-1, 0}, {0, -1},
                         {0.7071067811865476, 0.7071067811865476},
                         {-0.7071067811865476, 0.7071067811865476},
                         {0.7071067811865476, -0.7071067811865476},
                         {-0.7071067811865476, -0.7071067811865476}};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int npts = 0;
  for (const Point& d : dirs) {
    for (double rho = 1.0; rho <= sample_radius + 1e-12; rho += grid_step) {
      const double v = std::abs(eval_kernel(spec, {d.x * rho, d.y * rho}));
      if (v < 1e-300) continue;
      const double lx = std::log(rho);
      const double ly = std::log(v);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++npts;
    }
  }
  if (npts >= 2 && sxx * npts - sx * sx > 1e-12) {
    const double slope = (npts * sxy - sx * sy) / (npts * sxx - sx * sx);
    rep.fitted_decay_exponent = -slope;
  } else {
    rep.fitted_decay_exponent = std::numeric_limits<double>::infinity();
  }
  rep.decay_ok = rep.fitted_decay_exponent >= spec.beta;
  return rep;
}

}  // namespace bflab
