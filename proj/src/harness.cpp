#include "bflab/harness.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include "bflab/errors.hpp"
#include "bflab/parallel.hpp"
#include "bflab/reveal.hpp"
#include "bflab/rng.hpp"
#include "bflab/stats.hpp"
#include "bflab/walsh.hpp"

namespace bflab {

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Config

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["experiment"] = experiment;
  nlohmann::json k = nlohmann::json::parse(kernel.to_json_string());
  if (kernel_r_auto) k["r"] = "auto";
  j["kernel"] = k;
  j["quad"] = {{"width", quad.width},
               {"height", quad.height},
               {"sides", quad.sides == SidePair::LeftRight ? "left-right" : "top-bottom"}};
  j["scales"] = scales;
  j["levels"] = levels;
  j["times"] = times;
  j["alpha"] = alpha;
  j["noise"] = noise == NoiseKind::Bernoulli ? "bernoulli"
               : noise == NoiseKind::Gaussian ? "gaussian"
                                              : "impulse";
  j["N"] = N;
  j["replicates"] = replicates;
  j["seed"] = seed;
  j["workers"] = workers;
  j["out"] = out;
  j["arm_c"] = arm_c;
  j["arm_replicates"] = arm_replicates;
  j["horizon"] = horizon;
  j["time_substeps"] = time_substeps;
  j["sup_hs"] = sup_hs;
  j["sup_c"] = sup_c;
  j["sup_exponent"] = sup_exponent;
  j["functions"] = functions;
  j["spectrum_times"] = spectrum_times;
  j["sampler"] = sampler;
  j["region"] = {region.x0, region.y0, region.x1, region.y1};
  j["degree"] = degree;
  j["csv_dump"] = csv_dump;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    cfg.experiment = j.value("experiment", "");
    if (j.contains("kernel")) {
      const auto& k = j["kernel"];
      cfg.kernel_r_auto = k.contains("r") && k["r"].is_string() &&
                          (k["r"] == "auto" || k["r"] == "inf");
      cfg.kernel = KernelSpec::from_json_string(k.dump());
    }
    if (j.contains("quad")) {
      const auto& q = j["quad"];
      cfg.quad.width = q.value("width", 1.0);
      cfg.quad.height = q.value("height", 1.0);
      const std::string sides = q.value("sides", "left-right");
      if (sides == "left-right")
        cfg.quad.sides = SidePair::LeftRight;
      else if (sides == "top-bottom")
        cfg.quad.sides = SidePair::TopBottom;
      else
        throw ConfigError("quad sides must be left-right or top-bottom");
      if (cfg.quad.width <= 0 || cfg.quad.height <= 0)
        throw ConfigError("quad dimensions must be positive");
    }
    if (j.contains("scales")) cfg.scales = j["scales"].get<std::vector<double>>();
    if (j.contains("levels")) cfg.levels = j["levels"].get<std::vector<double>>();
    if (j.contains("times")) cfg.times = j["times"].get<std::vector<double>>();
    cfg.alpha = j.value("alpha", 0.25);
    const std::string noise = j.value("noise", "gaussian");
    if (noise == "gaussian")
      cfg.noise = NoiseKind::Gaussian;
    else if (noise == "bernoulli")
      cfg.noise = NoiseKind::Bernoulli;
    else
      throw ConfigError("noise must be gaussian or bernoulli");
    cfg.N = j.value("N", 4);
    cfg.replicates = j.value("replicates", 1000);
    cfg.seed = j.value("seed", std::uint64_t(1));
    cfg.workers = j.value("workers", 0);
    cfg.out = j.value("out", "");
    cfg.arm_c = j.value("arm_c", 2.0);
    cfg.arm_replicates = j.value("arm_replicates", 0);
    cfg.horizon = j.value("horizon", 1.0);
    cfg.time_substeps = j.value("time_substeps", 10);
    if (j.contains("sup_hs")) cfg.sup_hs = j["sup_hs"].get<std::vector<double>>();
    cfg.sup_c = j.value("sup_c", 0.0);
    cfg.sup_exponent = j.value("sup_exponent", 0.4);
    if (j.contains("functions"))
      cfg.functions = j["functions"].get<std::vector<std::string>>();
    if (j.contains("spectrum_times"))
      cfg.spectrum_times = j["spectrum_times"].get<std::vector<double>>();
    cfg.sampler = j.value("sampler", "convolution");
    if (j.contains("region")) {
      const auto r = j["region"].get<std::vector<double>>();
      if (r.size() != 4) throw ConfigError("region must be [x0, y0, x1, y1]");
      cfg.region = {r[0], r[1], r[2], r[3]};
    }
    cfg.degree = j.value("degree", -1);
    cfg.csv_dump = j.value("csv_dump", false);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
  if (cfg.N < 1) throw ConfigError("N must be >= 1");
  if (cfg.replicates < 1) throw ConfigError("replicates must be >= 1");
  if (cfg.alpha <= 0) throw ConfigError("alpha must be > 0");
  for (double s : cfg.scales)
    if (s < 1) throw ConfigError("scales must be >= 1");
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config JSON: ") + e.what());
  }
  return from_json(j);
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(to_json().dump()); }

KernelSpec ExperimentConfig::kernel_at(double n) const {
  return kernel_r_auto ? kernel.truncated_for_scale(n) : kernel;
}

// ---------------------------------------------------------------------------
// Shared experiment machinery

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::uint64_t rep_stream(const ExperimentConfig& cfg, std::size_t scale_index, int rep) {
  const std::uint64_t name_hash = fnv1a64(cfg.experiment);
  const std::uint64_t idx =
      std::uint64_t(scale_index) * std::uint64_t(cfg.replicates) + std::uint64_t(rep);
  return stream_seed(cfg.seed, name_hash, idx);
}

FieldSample field_from_noise(const ExperimentConfig& cfg, const KernelSpec& kernel,
                             const NoiseGrid& noise) {
  return convolve(kernel, noise, ConvMethod::Fft);
}

double time_for_scale(const ExperimentConfig& cfg, std::size_t si, double n) {
  if (!cfg.times.empty()) {
    if (cfg.times.size() == 1) return cfg.times[0];
    if (si < cfg.times.size()) return cfg.times[si];
    throw ConfigError("times list must match scales");
  }
  return std::pow(n, -cfg.alpha);
}

}  // namespace

// ---------------------------------------------------------------------------
// crossing-prob

ExperimentResult run_crossing_probability(const ExperimentConfig& cfg) {
  Timer timer;
  ExperimentResult res;
  res.experiment = cfg.experiment.empty() ? "crossing-prob" : cfg.experiment;
  res.config_hash = cfg.hash();
  res.columns = {"n", "level", "p", "se", "M"};

  for (std::size_t si = 0; si < cfg.scales.size(); ++si) {
    const double n = cfg.scales[si];
    const KernelSpec kernel = cfg.kernel_at(n);
    QuadSpec quad = cfg.quad;
    quad.n = n;
    const Rect noise_region = quad.rect().inflated(kernel.r / 2.0);
    const int M = cfg.replicates;
    const std::size_t nlev = cfg.levels.size();

    std::vector<std::uint8_t> hits(std::size_t(M) * nlev, 0);
    parallel_replicates(M, cfg.workers, [&](int rep, int) {
      const std::uint64_t s = rep_stream(cfg, si, rep);
      const NoiseGrid noise = sample_noise(noise_region, cfg.N, cfg.noise, mix64(s ^ 1));
      const FieldSample field = field_from_noise(cfg, kernel, noise);
      for (std::size_t li = 0; li < nlev; ++li)
        hits[std::size_t(rep) * nlev + li] =
            crossing(threshold(field, cfg.levels[li]), quad) ? 1 : 0;
    });

    for (std::size_t li = 0; li < nlev; ++li) {
      double p = 0.0;
      for (int rep = 0; rep < M; ++rep) p += hits[std::size_t(rep) * nlev + li];
      p /= M;
      res.rows.push_back({n, cfg.levels[li], p, binomial_se(p, M), double(M)});
    }
  }
  res.wall_seconds = timer.seconds();
  return res;
}

// ---------------------------------------------------------------------------
// noise-sensitivity

ExperimentResult run_noise_sensitivity(const ExperimentConfig& cfg) {
  Timer timer;
  ExperimentResult res;
  res.experiment = "noise-sensitivity";
  res.config_hash = cfg.hash();
  res.columns = {"n", "t", "nodal", "cov", "se", "p0", "p1", "M"};

  for (std::size_t si = 0; si < cfg.scales.size(); ++si) {
    const double n = cfg.scales[si];
    const double t = time_for_scale(cfg, si, n);
    const KernelSpec kernel = cfg.kernel_at(n);
    QuadSpec quad = cfg.quad;
    quad.n = n;
    const Rect noise_region = quad.rect().inflated(kernel.r / 2.0);
    const int M = cfg.replicates;

    std::vector<std::uint8_t> c0(M), c1(M), n0(M), n1(M);
    parallel_replicates(M, cfg.workers, [&](int rep, int) {
      const std::uint64_t s = rep_stream(cfg, si, rep);
      FieldSample f0, f1;
      if (cfg.noise == NoiseKind::Gaussian) {
        const NoiseGrid base =
            sample_noise(noise_region, cfg.N, NoiseKind::Gaussian, mix64(s ^ 1));
        const CoupledNoise pair = couple(base, t, CouplingMode::Ou, mix64(s ^ 2));
        f0 = field_from_noise(cfg, kernel, pair.first);
        f1 = field_from_noise(cfg, kernel, pair.second);
      } else {
        const NoiseGrid base =
            sample_noise(noise_region, cfg.N, NoiseKind::Bernoulli, mix64(s ^ 1));
        const NoiseGrid moved = resample_dynamics(base, t, mix64(s ^ 2));
        f0 = field_from_noise(cfg, kernel, base);
        f1 = field_from_noise(cfg, kernel, moved);
      }
      c0[rep] = crossing(threshold(f0, 0.0), quad) ? 1 : 0;
      c1[rep] = crossing(threshold(f1, 0.0), quad) ? 1 : 0;
      n0[rep] = nodal_crossing(f0, quad) ? 1 : 0;
      n1[rep] = nodal_crossing(f1, quad) ? 1 : 0;
    });

    const PairCov cross_cov = indicator_cov(c0, c1);
    const PairCov nodal_cov = indicator_cov(n0, n1);
    res.rows.push_back(
        {n, t, 0.0, cross_cov.cov, cross_cov.se, cross_cov.mean_x, cross_cov.mean_y, double(M)});
    res.rows.push_back(
        {n, t, 1.0, nodal_cov.cov, nodal_cov.se, nodal_cov.mean_x, nodal_cov.mean_y, double(M)});
  }
  res.wall_seconds = timer.seconds();
  return res;
}

// ---------------------------------------------------------------------------
// near-critical

ExperimentResult run_near_critical(const ExperimentConfig& cfg) {
  Timer timer;
  ExperimentResult res;
  res.experiment = "near-critical";
  res.config_hash = cfg.hash();
  res.columns = {"s", "level", "p_plus", "se_plus", "p_zero", "se_zero",
                 "p_minus", "se_minus", "M"};

  for (std::size_t si = 0; si < cfg.scales.size(); ++si) {
    const double s_scale = cfg.scales[si];
    const double level = std::pow(s_scale, -cfg.alpha);
    const KernelSpec kernel = cfg.kernel_at(s_scale);
    QuadSpec quad = cfg.quad;
    quad.n = s_scale;
    const Rect noise_region = quad.rect().inflated(kernel.r / 2.0);
    const int M = cfg.replicates;

    std::vector<std::uint8_t> plus(M), zero(M), minus(M);
    parallel_replicates(M, cfg.workers, [&](int rep, int) {
      const std::uint64_t s = rep_stream(cfg, si, rep);
      const NoiseGrid noise = sample_noise(noise_region, cfg.N, cfg.noise, mix64(s ^ 1));
      const FieldSample field = field_from_noise(cfg, kernel, noise);
      const bool b_plus = crossing(threshold(field, level), quad);
      const bool b_zero = crossing(threshold(field, 0.0), quad);
      const bool b_minus = crossing(threshold(field, -level), quad);
      if ((b_minus && !b_zero) || (b_zero && !b_plus))
        throw std::logic_error("near-critical: threshold monotonicity violated");
      plus[rep] = b_plus;
      zero[rep] = b_zero;
      minus[rep] = b_minus;
    });

    auto prob = [M](const std::vector<std::uint8_t>& v) {
      double p = 0.0;
      for (auto b : v) p += b;
      return p / M;
    };
    const double pp = prob(plus), pz = prob(zero), pm = prob(minus);
    res.rows.push_back({s_scale, level, pp, binomial_se(pp, M), pz, binomial_se(pz, M),
                        pm, binomial_se(pm, M), double(M)});
  }
  res.wall_seconds = timer.seconds();
  return res;
}

// ---------------------------------------------------------------------------
// switch-count

ExperimentResult run_switch_count(const ExperimentConfig& cfg) {
  Timer timer;
  if (cfg.noise != NoiseKind::Gaussian)
    throw ConfigError("switch-count: gaussian noise required (chained couplings)");
  if (cfg.time_substeps < 10)
    throw ConfigError("switch-count: time_substeps must be >= 10 (dt <= t_n/10)");
  ExperimentResult res;
  res.experiment = "switch-count";
  res.config_hash = cfg.hash();
  res.columns = {"n", "t_n", "dt", "steps", "mean_switches", "se", "M"};

  for (std::size_t si = 0; si < cfg.scales.size(); ++si) {
    const double n = cfg.scales[si];
    const double t_n = time_for_scale(cfg, si, n);
    const double dt = t_n / cfg.time_substeps;
    const int steps = cfg.horizon <= 0.0 ? 0 : int(std::ceil(cfg.horizon / dt - 1e-9));
    const KernelSpec kernel = cfg.kernel_at(n);
    QuadSpec quad = cfg.quad;
    quad.n = n;
    const Rect noise_region = quad.rect().inflated(kernel.r / 2.0);
    const int M = cfg.replicates;

    std::vector<double> switches(M, 0.0);
    parallel_replicates(M, cfg.workers, [&](int rep, int) {
      const std::uint64_t s = rep_stream(cfg, si, rep);
      NoiseGrid cur = sample_noise(noise_region, cfg.N, NoiseKind::Gaussian, mix64(s ^ 1));
      bool prev = crossing(threshold(field_from_noise(cfg, kernel, cur), 0.0), quad);
      int count = 0;
      for (int step = 1; step <= steps; ++step) {
        cur = couple(cur, dt, CouplingMode::Ou, mix64(s ^ (0x100 + std::uint64_t(step))))
                  .second;
        const bool now =
            crossing(threshold(field_from_noise(cfg, kernel, cur), 0.0), quad);
        if (!prev && now) ++count;
        prev = now;
      }
      switches[rep] = count;
    });

    const MeanSe ms = mean_se(switches);
    res.rows.push_back({n, t_n, dt, double(steps), ms.mean, ms.se, double(M)});
  }
  res.wall_seconds = timer.seconds();
  return res;
}

// ---------------------------------------------------------------------------
// plane-restriction

ExperimentResult run_plane_restriction(const ExperimentConfig& cfg) {
  Timer timer;
  if (cfg.noise != NoiseKind::Gaussian)
    throw ConfigError("plane-restriction: gaussian noise required");
  ExperimentResult res;
  res.experiment = "plane-restriction";
  res.config_hash = cfg.hash();
  res.columns = {"n", "t", "rho", "nested_var", "nested_se", "ou_cov", "ou_se", "p", "M"};
  const std::vector<double> times = cfg.times.empty()
                                        ? std::vector<double>{0.2, 0.5, 1.0}
                                        : cfg.times;

  for (std::size_t si = 0; si < cfg.scales.size(); ++si) {
    const double n = cfg.scales[si];
    const KernelSpec kernel = cfg.kernel_at(n);
    QuadSpec quad = cfg.quad;
    quad.n = n;
    const Rect noise_region = quad.rect().inflated(kernel.r / 2.0);
    const int M = cfg.replicates;

    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      const double t = times[ti];
      const double rho = coupling_rho(t, CouplingMode::HorizontalPlane);
      std::vector<std::uint8_t> x1(M), x2(M), y0(M), y1(M);
      parallel_replicates(M, cfg.workers, [&](int rep, int) {
        const std::uint64_t s =
            mix64(rep_stream(cfg, si, rep) ^ (0x1000 + std::uint64_t(ti)));
        const NoiseGrid base =
            sample_noise(noise_region, cfg.N, NoiseKind::Gaussian, mix64(s ^ 1));
        // two conditionally independent horizontal-plane copies
        const NoiseGrid w1 =
            couple(base, t, CouplingMode::HorizontalPlane, mix64(s ^ 2)).second;
        const NoiseGrid w2 =
            couple(base, t, CouplingMode::HorizontalPlane, mix64(s ^ 3)).second;
        x1[rep] = crossing(threshold(field_from_noise(cfg, kernel, w1), 0.0), quad);
        x2[rep] = crossing(threshold(field_from_noise(cfg, kernel, w2), 0.0), quad);
        // direct OU pair at time t^2 for the identity check
        const NoiseGrid base2 =
            sample_noise(noise_region, cfg.N, NoiseKind::Gaussian, mix64(s ^ 4));
        const CoupledNoise ou = couple(base2, t * t, CouplingMode::Ou, mix64(s ^ 5));
        y0[rep] = crossing(threshold(field_from_noise(cfg, kernel, ou.first), 0.0), quad);
        y1[rep] = crossing(threshold(field_from_noise(cfg, kernel, ou.second), 0.0), quad);
      });

      double m12 = 0.0, psum = 0.0;
      for (int rep = 0; rep < M; ++rep) {
        m12 += double(x1[rep]) * x2[rep];
        psum += 0.5 * (double(x1[rep]) + x2[rep]);
      }
      m12 /= M;
      const double p = psum / M;
      const double nested = m12 - p * p;
      std::vector<double> infl(M);
      for (int rep = 0; rep < M; ++rep)
        infl[rep] = double(x1[rep]) * x2[rep] - p * (double(x1[rep]) + x2[rep]);
      const MeanSe infl_ms = mean_se(infl);
      const PairCov ou_cov = indicator_cov(y0, y1);
      res.rows.push_back(
          {n, t, rho, nested, infl_ms.se, ou_cov.cov, ou_cov.se, p, double(M)});
    }
  }
  res.wall_seconds = timer.seconds();
  return res;
}

// ---------------------------------------------------------------------------
// fluctuation

ExperimentResult run_fluctuation_check(const ExperimentConfig& cfg) {
  Timer timer;
  if (cfg.noise != NoiseKind::Gaussian)
    throw ConfigError("fluctuation: gaussian noise required");
  ExperimentResult res;
  res.experiment = "fluctuation";
  res.config_hash = cfg.hash();
  res.columns = {"kind", "x", "estimate", "se", "aux", "M"};

  const KernelSpec kernel = cfg.kernel_r_auto ? cfg.kernel.truncated_at(8.0) : cfg.kernel;
  const Rect space{0, 0, 1, 1};
  const Rect noise_region = space.inflated(kernel.r / 2.0);
  const int M = cfg.replicates;
  const double l2sq = kernel_l2sq(kernel);
  const std::vector<double> times =
      cfg.times.empty() ? std::vector<double>{std::log(2.0), 1.0} : cfg.times;

  // (i) pointwise increment variance per t
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    const double t = times[ti];
    std::vector<double> per_rep(M, 0.0);
    parallel_replicates(M, cfg.workers, [&](int rep, int) {
      const std::uint64_t s = mix64(rep_stream(cfg, ti, rep) ^ 0xf1);
      const NoiseGrid base =
          sample_noise(noise_region, cfg.N, NoiseKind::Gaussian, mix64(s ^ 1));
      const CoupledNoise pair = couple(base, t, CouplingMode::Ou, mix64(s ^ 2));
      const FieldSample f0 = convolve(kernel, pair.first);
      const FieldSample f1 = convolve(kernel, pair.second);
      double acc = 0.0;
      for (std::size_t i = 0; i < f0.values.size(); ++i) {
        const double d = f1.values[i] - f0.values[i];
        acc += d * d;
      }
      per_rep[rep] = acc / double(f0.values.size());
    });
    const MeanSe ms = mean_se(per_rep);
    const double expected = 2.0 * (1.0 - std::exp(-t)) * l2sq;
    res.rows.push_back({0.0, t, ms.mean, ms.se, expected, double(M)});
  }

  // (ii) sup-norm tail over [0,h] x [0,1]^2
  double c_used = cfg.sup_c;
  for (std::size_t hi = 0; hi < cfg.sup_hs.size(); ++hi) {
    const double h = cfg.sup_hs[hi];
    const int steps = cfg.time_substeps;
    std::vector<double> sup(M, 0.0);
    parallel_replicates(M, cfg.workers, [&](int rep, int) {
      const std::uint64_t s = mix64(rep_stream(cfg, 100 + hi, rep) ^ 0xf2);
      NoiseGrid base = sample_noise(noise_region, cfg.N, NoiseKind::Gaussian, mix64(s ^ 1));
      const FieldSample f0 = convolve(kernel, base);
      double worst = 0.0;
      if (h > 0.0) {
        const double dt = h / steps;
        NoiseGrid cur = base;
        for (int step = 1; step <= steps; ++step) {
          cur = couple(cur, dt, CouplingMode::Ou, mix64(s ^ (0x200 + std::uint64_t(step))))
                    .second;
          const FieldSample ft = convolve(kernel, cur);
          for (std::size_t i = 0; i < f0.values.size(); ++i)
            worst = std::max(worst, std::abs(ft.values[i] - f0.values[i]));
        }
      }
      sup[rep] = worst;
    });
    if (hi == 0 && c_used <= 0.0) {
      c_used = median_of(sup) / std::pow(h, cfg.sup_exponent);
    }
    const double threshold_value = c_used * std::pow(h, cfg.sup_exponent);
    double tail = 0.0;
    for (double v : sup) tail += v > threshold_value ? 1.0 : 0.0;
    tail /= M;
    res.rows.push_back({1.0, h, tail, binomial_se(tail, M), threshold_value, double(M)});
  }
  res.extra["sup_c"] = c_used;
  res.extra["kernel_l2sq"] = l2sq;
  res.wall_seconds = timer.seconds();
  return res;
}

// ---------------------------------------------------------------------------
// revealment

ExperimentResult run_revealment(const ExperimentConfig& cfg) {
  Timer timer;
  if (cfg.noise != NoiseKind::Bernoulli)
    throw ConfigError("revealment: bernoulli noise required");
  ExperimentResult res;
  res.experiment = "revealment";
  res.config_hash = cfg.hash();
  res.columns = {"n", "gamma", "M", "delta", "wilson", "arm_bound"};
  res.extra["arm_tables"] = nlohmann::json::array();
  res.extra["heatmaps"] = nlohmann::json::array();

  for (std::size_t si = 0; si < cfg.scales.size(); ++si) {
    const double n = cfg.scales[si];
    const KernelSpec kernel = cfg.kernel_at(n);
    RevealConfig rc;
    rc.kernel = kernel;
    rc.quad = cfg.quad;
    rc.quad.n = n;
    rc.N = cfg.N;
    rc.arm_c = cfg.arm_c;

    const std::uint64_t master = stream_seed(cfg.seed, fnv1a64("revealment"), si);
    RevealmentReport report = estimate_revealment(rc, cfg.replicates, master, cfg.workers);

    // Arm probabilities along the candidate lines.
    const double spacing = std::pow(n, kernel.gamma);
    const double r_in = cfg.arm_c * spacing;
    const int kmax = int(std::floor(std::pow(n, 1.0 - kernel.gamma) + 1e-9));
    std::map<int, double> arm_probs;
    double r_needed = 0.0;
    for (int k = 1; k <= kmax; ++k) {
      const double rk = double(k - 1) * spacing / cfg.arm_c;
      if (rk < r_in)
        arm_probs[k] = 1.0;  // sure event by convention
      else
        r_needed = std::max(r_needed, rk);
    }
    if (r_needed > 0.0) {
      const int Ma = cfg.arm_replicates > 0 ? cfg.arm_replicates : cfg.replicates;
      const Rect arm_region =
          Rect{-r_needed, -r_needed, r_needed, r_needed}.inflated(kernel.r / 2.0);
      std::vector<std::vector<std::uint8_t>> bits(
          std::size_t(kmax) + 1, std::vector<std::uint8_t>(std::size_t(Ma), 0));
      parallel_replicates(Ma, cfg.workers, [&](int rep, int) {
        const std::uint64_t s = mix64(stream_seed(cfg.seed, fnv1a64("arm"), si) ^
                                      std::uint64_t(rep));
        const NoiseGrid noise =
            sample_noise(arm_region, cfg.N, NoiseKind::Bernoulli, mix64(s ^ 1));
        const BinaryGrid occ = threshold(convolve(kernel, noise), 0.0);
        for (int k = 1; k <= kmax; ++k) {
          const double rk = double(k - 1) * spacing / cfg.arm_c;
          if (rk >= r_in) bits[std::size_t(k)][std::size_t(rep)] =
              arm_event(occ, r_in, rk) ? 1 : 0;
        }
      });
      for (int k = 1; k <= kmax; ++k) {
        const double rk = double(k - 1) * spacing / cfg.arm_c;
        if (rk < r_in) continue;
        double p = 0.0;
        for (auto b : bits[std::size_t(k)]) p += b;
        arm_probs[k] = p / Ma;
      }
    }
    report.arm_bound_value = arm_bound(rc, arm_probs);
    res.rows.push_back({n, kernel.gamma, double(cfg.replicates), report.delta_hat,
                        report.wilson_halfwidth, report.arm_bound_value});

    nlohmann::json arm_json;
    arm_json["n"] = n;
    arm_json["r_inner"] = r_in;
    for (const auto& [k, p] : arm_probs) arm_json["p"][std::to_string(k)] = p;
    res.extra["arm_tables"].push_back(arm_json);

    // Frequency heatmap, max-pooled to at most 64 cells per side.
    const auto& geom = report.noise_geom;
    const int pool = std::max(1, std::max(geom.nx, geom.ny) / 64 + 1);
    nlohmann::json hm;
    hm["n"] = n;
    hm["pool"] = pool;
    hm["nx"] = (geom.nx + pool - 1) / pool;
    hm["ny"] = (geom.ny + pool - 1) / pool;
    std::vector<double> pooled(std::size_t(hm["nx"].get<int>()) * hm["ny"].get<int>(), 0.0);
    for (int j = 0; j < geom.ny; ++j)
      for (int i = 0; i < geom.nx; ++i) {
        auto& cell = pooled[std::size_t(j / pool) * hm["nx"].get<int>() + i / pool];
        cell = std::max(cell, report.frequency[geom.index(i, j)]);
      }
    hm["max_frequency"] = pooled;
    res.extra["heatmaps"].push_back(hm);
  }
  res.wall_seconds = timer.seconds();
  return res;
}

// ---------------------------------------------------------------------------
// spectrum-check

ExperimentResult run_spectrum_check(const ExperimentConfig& cfg) {
  Timer timer;
  ExperimentResult res;
  res.experiment = "spectrum-check";
  res.config_hash = cfg.hash();
  res.columns = {"function", "k", "W_k", "bound", "pass"};
  res.extra["functions"] = nlohmann::json::array();

  for (std::size_t fi = 0; fi < cfg.functions.size(); ++fi) {
    const std::string& name = cfg.functions[fi];
    std::vector<double> table;
    RandomizedAlgorithm alg;
    RangeTag range;
    if (name == "dictator") {
      range = RangeTag::PlusMinus;
      table = dictator_table(1, 0, range);
      alg = dictator_algorithm(0, range);
    } else if (name == "majority3") {
      range = RangeTag::PlusMinus;
      table = majority3_table(range);
      alg = majority3_random_order(range);
    } else if (name == "tribes9") {
      range = RangeTag::ZeroOne;
      table = tribes_table(3, 3, range);
      alg = tribes_algorithm(3, 3, range);
    } else {
      throw ConfigError("spectrum-check: unknown function " + name);
    }
    int m = 0;
    while ((std::size_t(1) << m) < table.size()) ++m;
    const RevealmentExact rev = exact_revealment(alg, m, &table);
    const WalshSpectrum spec = walsh_transform(table, range);
    const auto rows = verify_schramm_steif(spec, rev.delta);
    for (const auto& row : rows)
      res.rows.push_back({double(fi), double(row.k), row.level_weight, row.bound,
                          row.pass ? 1.0 : 0.0});

    nlohmann::json fj;
    fj["name"] = name;
    fj["m"] = m;
    fj["delta"] = rev.delta;
    fj["mean_square"] = spec.mean_square();
    double parseval = 0.0;
    for (double g : table) parseval += g * g;
    parseval /= double(table.size());
    fj["parseval_residual"] = std::abs(parseval - spec.mean_square());
    double ident = 0.0;
    for (double t : cfg.spectrum_times)
      ident = std::max(ident,
                       std::abs(conditional_variance(spec, t) - noise_covariance(spec, 2.0 * t)));
    fj["cond_var_identity_residual"] = ident;
    res.extra["functions"].push_back(fj);
  }
  res.wall_seconds = timer.seconds();
  return res;
}

// ---------------------------------------------------------------------------

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const std::string& e = cfg.experiment;
  if (e == "crossing-prob") return run_crossing_probability(cfg);
  if (e == "noise-sensitivity") return run_noise_sensitivity(cfg);
  if (e == "near-critical") return run_near_critical(cfg);
  if (e == "switch-count") return run_switch_count(cfg);
  if (e == "plane-restriction") return run_plane_restriction(cfg);
  if (e == "fluctuation") return run_fluctuation_check(cfg);
  if (e == "revealment") return run_revealment(cfg);
  if (e == "spectrum-check") return run_spectrum_check(cfg);
  throw ConfigError("unknown experiment: " + e);
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

void write_csv(const ExperimentResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output " + path);
  out << "# config_hash=" << hash_hex(result.config_hash) << "\n";
  for (std::size_t c = 0; c < result.columns.size(); ++c)
    out << (c ? "," : "") << result.columns[c];
  out << "\n";
  for (const auto& row : result.rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      out << (c ? "," : "") << format_double(row[c]);
    out << "\n";
  }
}

void write_json(const ExperimentResult& result, const std::string& path) {
  nlohmann::json j;
  j["experiment"] = result.experiment;
  j["config_hash"] = hash_hex(result.config_hash);
  j["columns"] = result.columns;
  j["rows"] = result.rows;
  j["extra"] = result.extra;
  j["wall_seconds"] = result.wall_seconds;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output " + path);
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Field export / import

namespace {
constexpr char kFieldMagic[8] = {'B', 'F', 'L', 'D', '0', '0', '0', '1'};
}

void export_field(const FieldSample& field, std::uint64_t kernel_hash,
                  const std::string& path, bool csv_dump) {
  nlohmann::json header;
  const Rect region = field.geom.region();
  header["region"] = {region.x0, region.y0, region.x1, region.y1};
  header["N"] = field.geom.N;
  header["ix0"] = field.geom.ix0;
  header["iy0"] = field.geom.iy0;
  header["nx"] = field.geom.nx;
  header["ny"] = field.geom.ny;
  header["kernel_hash"] = hash_hex(kernel_hash);
  header["seed"] = field.seed;
  header["sampler"] = field.sampler == SamplerTag::Series ? "series" : "convolution";
  header["degree"] = field.series_degree;
  const std::string htext = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output " + path);
  out.write(kFieldMagic, sizeof(kFieldMagic));
  const std::uint32_t hlen = std::uint32_t(htext.size());
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(htext.data(), std::streamsize(htext.size()));
  out.write(reinterpret_cast<const char*>(field.values.data()),
            std::streamsize(field.values.size() * sizeof(double)));

  if (csv_dump) {
    std::ofstream csv(path + ".csv", std::ios::binary);
    csv << "x,y,value\n";
    for (int j = 0; j < field.geom.ny; ++j)
      for (int i = 0; i < field.geom.nx; ++i) {
        const Point p = field.geom.point(i, j);
        csv << format_double(p.x) << ',' << format_double(p.y) << ','
            << format_double(field.at(i, j)) << "\n";
      }
  }
}

FieldSample import_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open field file " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (std::memcmp(magic, kFieldMagic, sizeof(magic)) != 0)
    throw ConfigError("not a field file: " + path);
  std::uint32_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string htext(hlen, '\0');
  in.read(htext.data(), hlen);
  const nlohmann::json header = nlohmann::json::parse(htext);

  FieldSample f;
  f.geom.N = header["N"];
  f.geom.ix0 = header["ix0"];
  f.geom.iy0 = header["iy0"];
  f.geom.nx = header["nx"];
  f.geom.ny = header["ny"];
  f.seed = header["seed"];
  f.series_degree = header.value("degree", -1);
  f.sampler = header.value("sampler", "convolution") == std::string("series")
                  ? SamplerTag::Series
                  : SamplerTag::Convolution;
  f.values.resize(std::size_t(f.geom.size()));
  in.read(reinterpret_cast<char*>(f.values.data()),
          std::streamsize(f.values.size() * sizeof(double)));
  if (!in) throw ConfigError("truncated field file: " + path);
  return f;
}

void run_sample_field(const ExperimentConfig& cfg) {
  if (cfg.out.empty()) throw ConfigError("sample-field: --out path required");
  if (cfg.sampler == "series") {
    const FieldSample f = sample_field_series(cfg.region, cfg.N, cfg.degree, cfg.seed);
    export_field(f, 0, cfg.out, cfg.csv_dump);
  } else if (cfg.sampler == "convolution") {
    KernelSpec kernel = cfg.kernel;
    if (!kernel.truncated()) kernel = kernel.truncated_at(8.0);
    const NoiseGrid noise =
        sample_noise(cfg.region.inflated(kernel.r / 2.0), cfg.N, cfg.noise, cfg.seed);
    const FieldSample f = convolve(kernel, noise);
    export_field(f, kernel.hash(), cfg.out, cfg.csv_dump);
  } else {
    throw ConfigError("sample-field: sampler must be convolution or series");
  }
}

}  // namespace bflab
