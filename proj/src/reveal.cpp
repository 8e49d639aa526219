#include "bflab/reveal.hpp"

#include <cmath>
#include <deque>
#include <string>

#include "bflab/errors.hpp"
#include "bflab/parallel.hpp"
#include "bflab/rng.hpp"

namespace bflab {

int line_count(const QuadSpec& quad, double gamma) {
  const double spacing = std::pow(quad.n, gamma);
  int kmax = int(std::floor(std::pow(quad.n, 1.0 - gamma) + 1e-9));
  const double width = quad.n * quad.width;
  while (kmax >= 1 && double(kmax) * spacing > width + 1e-9) --kmax;
  return kmax;
}

double line_position(const QuadSpec& quad, double gamma, int k) {
  return double(k) * std::pow(quad.n, gamma);
}

namespace {

struct Explorer {
  const NoiseGrid& noise;
  const KernelSpec& spec;
  const QuadSpec& quad;
  Point anchor;

  double half_range = 0.0;  // r/2
  int wq = 0, hq = 0;       // quad lattice points per side
  int bw = 0, bh = 0;       // unit blocks per side
  double width = 0.0, height = 0.0;

  FieldSample field;     // full field; read only at determined points
  int fi0 = 0, fj0 = 0;  // quad lattice origin inside `field`

  // 0 unknown, 1 vacant, 2 occupied
  std::vector<std::uint8_t> state;
  std::vector<std::uint8_t> connected;
  std::vector<std::uint8_t> block_done;
  std::vector<std::int32_t> parent;
  std::deque<std::int32_t> queue;
  ExplorationTrace trace;

  Explorer(const NoiseGrid& noise_, const KernelSpec& spec_, const QuadSpec& quad_,
           Point anchor_)
      : noise(noise_), spec(spec_), quad(quad_), anchor(anchor_) {
    if (noise.kind != NoiseKind::Bernoulli)
      throw ConfigError("explore_crossing: Bernoulli noise required");
    if (!spec.truncated())
      throw ConfigError("explore_crossing: kernel truncation radius must be finite");
    half_range = spec.r / 2.0;
    width = quad.n * quad.width;
    height = quad.n * quad.height;
    const int N = noise.geom.N;
    const double wn = width * N;
    const double hn = height * N;
    if (std::abs(wn - std::llround(wn)) > 1e-9 || std::abs(hn - std::llround(hn)) > 1e-9)
      throw ConfigError("explore_crossing: quad sides must be lattice-aligned");
    if (!noise.geom.region().contains(quad.rect(anchor).inflated(half_range)))
      throw ConfigError("explore_crossing: noise must cover quad + r/2 margin");

    wq = int(std::llround(wn)) + 1;
    hq = int(std::llround(hn)) + 1;
    bw = std::max(1, int(std::ceil(width - 1e-9)));
    bh = std::max(1, int(std::ceil(height - 1e-9)));

    field = convolve(spec, noise, ConvMethod::Fft);
    fi0 = int(std::llround(anchor.x * N) - field.geom.ix0);
    fj0 = int(std::llround(anchor.y * N) - field.geom.iy0);

    state.assign(std::size_t(wq) * hq, 0);
    connected.assign(std::size_t(wq) * hq, 0);
    block_done.assign(std::size_t(bw) * bh, 0);
    parent.resize(std::size_t(wq) * hq);
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = std::int32_t(i);
    trace.revealed.assign(std::size_t(noise.geom.size()), 0);
    trace.noise_geom = noise.geom;
  }

  std::int32_t find(std::int32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[b] = a;
  }

  bool occupied(std::int32_t p) const { return state[p] == 2; }

  void reveal_near(const Rect& rc) {
    const auto& g = noise.geom;
    const int ci0 = std::max<std::int64_t>(
        0, std::int64_t(std::floor((rc.x0 - half_range) * g.N)) - g.ix0);
    const int ci1 = std::min<std::int64_t>(
        g.nx - 1, std::int64_t(std::ceil((rc.x1 + half_range) * g.N)) - g.ix0);
    const int cj0 = std::max<std::int64_t>(
        0, std::int64_t(std::floor((rc.y0 - half_range) * g.N)) - g.iy0);
    const int cj1 = std::min<std::int64_t>(
        g.ny - 1, std::int64_t(std::ceil((rc.y1 + half_range) * g.N)) - g.iy0);
    const double h2 = half_range * half_range;
    for (int cj = cj0; cj <= cj1; ++cj)
      for (int ci = ci0; ci <= ci1; ++ci) {
        const auto idx = g.index(ci, cj);
        if (trace.revealed[idx]) continue;
        if (rc.dist2(g.point(ci, cj)) < h2) {
          trace.revealed[idx] = 1;
          ++trace.revealed_count;
        }
      }
  }

  void determine(std::int32_t p) {
    const int i = int(p % wq);
    const int j = int(p / wq);
    state[p] = field.at(fi0 + i, fj0 + j) > 0.0 ? 2 : 1;
  }

  void try_connect(std::int32_t p, std::int32_t via) {
    if (!occupied(p)) return;
    if (connected[p]) {
      if (via >= 0) unite(p, via);
      return;
    }
    connected[p] = 1;
    if (via >= 0) unite(p, via);
    queue.push_back(p);
  }

  void discover_block(int a, int b) {
    const std::size_t bidx = std::size_t(b) * bw + a;
    if (block_done[bidx]) return;
    block_done[bidx] = 1;
    const Rect rc{anchor.x + a, anchor.y + b,
                  anchor.x + std::min(double(a + 1), width),
                  anchor.y + std::min(double(b + 1), height)};
    reveal_near(rc);
    const int N = noise.geom.N;
    const int pi0 = a * N;
    const int pi1 = std::min((a + 1) * N, wq - 1);
    const int pj0 = b * N;
    const int pj1 = std::min((b + 1) * N, hq - 1);
    for (int j = pj0; j <= pj1; ++j)
      for (int i = pi0; i <= pi1; ++i) {
        const std::int32_t p = std::int32_t(std::size_t(j) * wq + i);
        if (state[p] == 0) {
          determine(p);
          if (occupied(p)) {
            // joins the explored cluster if it already touches one
            for (const std::int32_t q : neighbors(p))
              if (q >= 0 && connected[q]) {
                try_connect(p, q);
                break;
              }
          }
        }
      }
  }

  std::array<std::int32_t, 4> neighbors(std::int32_t p) const {
    const int i = int(p % wq);
    const int j = int(p / wq);
    return {i + 1 < wq ? p + 1 : -1, i > 0 ? p - 1 : -1,
            j + 1 < hq ? p + wq : -1, j > 0 ? p - wq : -1};
  }

  void discover_blocks_containing(std::int32_t p) {
    const int N = noise.geom.N;
    const int i = int(p % wq);
    const int j = int(p / wq);
    const double xq = double(i) / N;
    const double yq = double(j) / N;
    int a0 = std::min(int(std::floor(xq + 1e-9)), bw - 1);
    int b0 = std::min(int(std::floor(yq + 1e-9)), bh - 1);
    const bool ax_edge = a0 >= 1 && std::abs(xq - a0) < 1e-9;
    const bool by_edge = b0 >= 1 && std::abs(yq - b0) < 1e-9;
    for (int da = ax_edge ? -1 : 0; da <= 0; ++da)
      for (int db = by_edge ? -1 : 0; db <= 0; ++db) discover_block(a0 + da, b0 + db);
  }

  ExplorationTrace run(int k_choice, std::uint64_t seed) {
    const double gamma = spec.gamma;
    const int kmax = line_count(quad, gamma);
    if (kmax < 1) throw ConfigError("explore_crossing: no admissible seed line");
    int k = k_choice;
    if (k < 1) {
      Rng rng(seed);
      k = 1 + int(rng.below(std::uint64_t(kmax)));
    } else if (k > kmax) {
      throw ConfigError("explore_crossing: k=" + std::to_string(k) +
                        " out of range 1.." + std::to_string(kmax));
    }
    trace.k = k;
    const int N = noise.geom.N;
    int i_line = int(std::llround(line_position(quad, gamma, k) * N));
    i_line = std::min(std::max(i_line, 0), wq - 1);
    trace.line_x = anchor.x + double(i_line) / N;

    reveal_near({trace.line_x, anchor.y, trace.line_x, anchor.y + height});
    for (int j = 0; j < hq; ++j) {
      const std::int32_t p = std::int32_t(std::size_t(j) * wq + i_line);
      determine(p);
      try_connect(p, -1);
    }

    while (!queue.empty()) {
      const std::int32_t p = queue.front();
      queue.pop_front();
      discover_blocks_containing(p);
      for (const std::int32_t q : neighbors(p)) {
        if (q < 0) continue;
        if (state[q] == 0) discover_blocks_containing(q);
        if (occupied(q)) try_connect(q, p);
      }
    }

    // A crossing exists iff one explored component touches both marked sides.
    std::vector<std::uint8_t> touch(std::size_t(wq) * hq, 0);
    auto mark = [&](std::int32_t p, std::uint8_t side) {
      if (connected[p]) touch[std::size_t(find(p))] |= side;
    };
    if (quad.sides == SidePair::LeftRight) {
      for (int j = 0; j < hq; ++j) {
        mark(std::int32_t(std::size_t(j) * wq), 1);
        mark(std::int32_t(std::size_t(j) * wq + wq - 1), 2);
      }
    } else {
      for (int i = 0; i < wq; ++i) {
        mark(std::int32_t(i), 1);
        mark(std::int32_t(std::size_t(hq - 1) * wq + i), 2);
      }
    }
    trace.outcome = false;
    for (const auto t : touch)
      if (t == 3) {
        trace.outcome = true;
        break;
      }
    return std::move(trace);
  }
};

}  // namespace

ExplorationTrace explore_crossing(const NoiseGrid& noise, const KernelSpec& spec,
                                  const QuadSpec& quad, int k, std::uint64_t seed,
                                  Point anchor) {
  Explorer ex(noise, spec, quad, anchor);
  return ex.run(k, seed);
}

RevealmentReport estimate_revealment(const RevealConfig& cfg, int M,
                                     std::uint64_t master_seed, int workers,
                                     const TraceHook& hook) {
  if (M < 1) throw ConfigError("estimate_revealment: M must be >= 1");
  const KernelSpec kernel =
      cfg.kernel.truncated() ? cfg.kernel : cfg.kernel.truncated_for_scale(cfg.quad.n);
  const Rect noise_region = cfg.quad.rect().inflated(kernel.r / 2.0);
  const LatticeGeom noise_geom = LatticeGeom::covering(noise_region, cfg.N);

  const int nworkers = std::min(resolve_workers(workers), std::max(M, 1));
  std::vector<std::vector<std::int64_t>> counts(
      std::size_t(nworkers), std::vector<std::int64_t>(std::size_t(noise_geom.size()), 0));
  const std::uint64_t name_hash = fnv1a64("reveal");

  parallel_replicates(M, nworkers, [&](int rep, int worker) {
    const std::uint64_t s = stream_seed(master_seed, name_hash, std::uint64_t(rep));
    const NoiseGrid noise =
        sample_noise(noise_region, cfg.N, NoiseKind::Bernoulli, mix64(s ^ 1));
    const ExplorationTrace trace =
        explore_crossing(noise, kernel, cfg.quad, 0, mix64(s ^ 2));
    auto& acc = counts[std::size_t(worker)];
    for (std::size_t i = 0; i < trace.revealed.size(); ++i) acc[i] += trace.revealed[i];
    if (hook) hook(trace, noise);
  });

  RevealmentReport rep;
  rep.noise_geom = noise_geom;
  rep.replicates = M;
  rep.frequency.assign(std::size_t(noise_geom.size()), 0.0);
  for (int w = 0; w < nworkers; ++w)
    for (std::size_t i = 0; i < rep.frequency.size(); ++i)
      rep.frequency[i] += double(counts[std::size_t(w)][i]);
  for (auto& f : rep.frequency) f /= M;
  for (const double f : rep.frequency) rep.delta_hat = std::max(rep.delta_hat, f);

  const double z = 1.959963984540054;
  const double p = rep.delta_hat;
  const double denom = 1.0 + z * z / M;
  rep.wilson_halfwidth =
      z * std::sqrt(p * (1.0 - p) / M + z * z / (4.0 * double(M) * M)) / denom;
  return rep;
}

double arm_bound(const RevealConfig& cfg, const std::map<int, double>& arm_probs) {
  const double n = cfg.quad.n;
  const double gamma = cfg.kernel.gamma;
  const int kmax = int(std::floor(std::pow(n, 1.0 - gamma) + 1e-9));
  double sum = 0.0;
  for (int k = 1; k <= kmax; ++k) {
    const auto it = arm_probs.find(k);
    if (it == arm_probs.end())
      throw ConfigError("arm_bound: missing arm probability for k=" + std::to_string(k));
    sum += it->second;
  }
  return cfg.arm_c * std::pow(n, gamma - 1.0) * sum;
}

}  // namespace bflab
