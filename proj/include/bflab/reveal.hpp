#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "bflab/field.hpp"
#include "bflab/kernel.hpp"
#include "bflab/perco.hpp"

namespace bflab {

/// One run of the line-seeded exploration of {f^N > 0} inside the quad.
struct ExplorationTrace {
  int k = 0;                            // chosen seed-line index (1-based)
  double line_x = 0.0;                  // snapped x coordinate of the line
  bool outcome = false;                 // crossing decided from revealed bits
  std::vector<std::uint8_t> revealed;   // over the noise grid cells
  std::int64_t revealed_count = 0;
  LatticeGeom noise_geom;
};

/// Number of candidate seed lines: floor(n^{1-gamma}), minus any lines that
/// would fall beyond the quad's right edge.
int line_count(const QuadSpec& quad, double gamma);

/// x position of line k relative to the quad's left edge: k * n^gamma.
double line_position(const QuadSpec& quad, double gamma, int k);

/// Runs the exploration on Bernoulli noise covering quad + r/2 margin.
/// Discovering a region reveals every bit within r/2 of it; growth proceeds
/// over unit blocks of the integer grid touched by the seed-connected part of
/// {f^N > 0}, FIFO order, until those components are closed. k < 1 draws the
/// line uniformly from `seed`.
ExplorationTrace explore_crossing(const NoiseGrid& noise, const KernelSpec& spec,
                                  const QuadSpec& quad, int k, std::uint64_t seed,
                                  Point anchor = {0, 0});

struct RevealConfig {
  KernelSpec kernel;  // truncated at n^gamma when r is not finite
  QuadSpec quad;
  int N = 4;
  double arm_c = 2.0;  // constant c in the arm-event bound
};

struct RevealmentReport {
  std::vector<double> frequency;  // per-bit reveal frequency
  LatticeGeom noise_geom;
  double delta_hat = 0.0;
  double wilson_halfwidth = 0.0;
  int replicates = 0;
  double arm_bound_value = 0.0;   // filled by the harness when estimated
};

using TraceHook = std::function<void(const ExplorationTrace&, const NoiseGrid&)>;

/// M independent replicates (fresh noise, fresh uniform line); per-bit reveal
/// frequencies, delta-hat = max frequency with a Wilson 95% half-width.
RevealmentReport estimate_revealment(const RevealConfig& cfg, int M,
                                     std::uint64_t master_seed, int workers = 0,
                                     const TraceHook& hook = nullptr);

/// c n^{gamma-1} sum_{k=1..floor(n^{1-gamma})} P[Arm_0(c n^gamma, (k-1) n^gamma / c)].
/// `arm_probs` must supply every k; missing entries raise naming the k.
double arm_bound(const RevealConfig& cfg, const std::map<int, double>& arm_probs);

}  // namespace bflab
