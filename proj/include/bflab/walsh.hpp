#pragma once

#include <cstdint>
#include <vector>

#include "bflab/field.hpp"
#include "bflab/kernel.hpp"
#include "bflab/perco.hpp"

namespace bflab {

inline constexpr int kDefaultBitCap = 20;
inline constexpr int kHardBitCap = 24;

enum class RangeTag { ZeroOne, PlusMinus };

/// Fourier-Walsh coefficients of a function on {-1,1}^m. Inputs are indexed
/// by bitmask with the convention sigma_i = +1 when bit i is 0, so that
/// chi_S(index a) = (-1)^{popcount(S & a)} (the plain Hadamard kernel).
struct WalshSpectrum {
  int m = 0;
  RangeTag range = RangeTag::ZeroOne;
  std::vector<double> coef;  // coef[S] = ghat(S), normalized by 2^-m

  double mean() const { return coef.empty() ? 0.0 : coef[0]; }
  double mean_square() const;            // E[g^2] = sum_S ghat(S)^2
  double level_weight(int k) const;      // W_k = sum_{|S|=k} ghat(S)^2
};

/// O(m 2^m) in-place butterfly transform of a dense truth table.
WalshSpectrum walsh_transform(const std::vector<double>& table,
                              RangeTag range = RangeTag::ZeroOne,
                              int bit_cap = kDefaultBitCap);

/// Reconstructs the truth table (exact inverse up to rounding).
std::vector<double> inverse_walsh(const WalshSpectrum& spec);

/// Cov[g(sigma(0)), g(sigma(t))] = sum_{S != 0} ghat(S)^2 e^{-t|S|}.
double noise_covariance(const WalshSpectrum& spec, double t);

/// Var E[g(sigma(t)) | sigma(0)] = sum_{S != 0} ghat(S)^2 e^{-2t|S|}.
double conditional_variance(const WalshSpectrum& spec, double t);

// --- Decision trees -------------------------------------------------------

struct DecisionNode {
  int query = -1;     // bit to read; -1 marks a leaf
  double leaf = 0.0;  // output value at a leaf
  int lo = -1;        // child when the queried bit is -1
  int hi = -1;        // child when the queried bit is +1
};

struct DecisionTree {
  std::vector<DecisionNode> nodes;
  int root = 0;
};

/// Randomized query algorithm: a uniform mixture of deterministic trees.
struct RandomizedAlgorithm {
  std::vector<DecisionTree> trees;
};

struct RevealmentExact {
  double delta = 0.0;
  std::vector<double> per_bit;
};

/// Exact per-bit query probabilities under uniform input and the uniform tree
/// choice. Verifies every input gets the same answer from every tree (and
/// matches `truth` when given); throws DeterminationError otherwise.
RevealmentExact exact_revealment(const RandomizedAlgorithm& alg, int m,
                                 const std::vector<double>* truth = nullptr);

struct SchrammSteifRow {
  int k = 0;
  double level_weight = 0.0;
  double bound = 0.0;
  bool pass = false;
};

/// Level-by-level check of W_k <= k * delta * E[g^2].
std::vector<SchrammSteifRow> verify_schramm_steif(const WalshSpectrum& spec,
                                                  double delta);

// --- Canonical functions and algorithms ------------------------------------

std::vector<double> dictator_table(int m, int bit, RangeTag range = RangeTag::PlusMinus);
std::vector<double> majority3_table(RangeTag range = RangeTag::PlusMinus);
std::vector<double> parity_table(int m, RangeTag range = RangeTag::PlusMinus);
/// OR of `tribes` disjoint ANDs of `tribe_size` bits ({0,1}: 1 iff some tribe
/// is all +1).
std::vector<double> tribes_table(int tribes, int tribe_size,
                                 RangeTag range = RangeTag::ZeroOne);

RandomizedAlgorithm dictator_algorithm(int bit, RangeTag range = RangeTag::PlusMinus);
/// Query in uniformly random order, stop when the majority is determined.
RandomizedAlgorithm majority3_random_order(RangeTag range = RangeTag::PlusMinus);
/// Uniformly random tribe order; bits within a tribe sequentially, skipping
/// to the next tribe on the first -1.
RandomizedAlgorithm tribes_algorithm(int tribes, int tribe_size,
                                     RangeTag range = RangeTag::ZeroOne);

// --- Bridge from tiny field instances ---------------------------------------

struct TinyFieldConfig {
  KernelSpec kernel;  // finite truncation radius
  QuadSpec quad;
  int N = 1;
  int bit_cap = kDefaultBitCap;
};

/// Crossing indicator of a tiny instance as a dense {0,1} truth table over
/// all Bernoulli assignments of the influencing noise cells (those within
/// r/2 of the quad; cells farther away have identically zero weight).
struct TinyFieldBoolean {
  std::vector<double> table;
  int m = 0;
  LatticeGeom noise_geom;              // bounding grid
  std::vector<std::int64_t> active;    // cell index per bit
  KernelSpec kernel;
  QuadSpec quad;
};

TinyFieldBoolean field_to_boolean(const TinyFieldConfig& cfg);

/// NoiseGrid for assignment index a (bit i of a set means sigma_i = -1).
NoiseGrid noise_from_index(const TinyFieldBoolean& tiny, std::uint64_t index);
std::uint64_t index_from_noise(const TinyFieldBoolean& tiny, const NoiseGrid& noise);

}  // namespace bflab
