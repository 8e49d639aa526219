#include "bflab/walsh.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "bflab/errors.hpp"

namespace bflab {

double WalshSpectrum::mean_square() const {
  double s = 0.0;
  for (double c : coef) s += c * c;
  return s;
}

double WalshSpectrum::level_weight(int k) const {
  double s = 0.0;
  for (std::size_t mask = 0; mask < coef.size(); ++mask)
    if (std::popcount(mask) == k) s += coef[mask] * coef[mask];
  return s;
}

namespace {

void butterfly(std::vector<double>& v) {
  const std::size_t n = v.size();
  for (std::size_t step = 1; step < n; step <<= 1) {
    for (std::size_t i = 0; i < n; i += step << 1) {
      for (std::size_t j = i; j < i + step; ++j) {
        const double a = v[j];
        const double b = v[j + step];
        v[j] = a + b;
        v[j + step] = a - b;
      }
    }
  }
}

int table_bits(std::size_t len, int bit_cap) {
  if (len == 0 || (len & (len - 1)) != 0)
    throw ConfigError("walsh: table length must be a power of two");
  int m = 0;
  while ((std::size_t(1) << m) < len) ++m;
  const int cap = std::min(bit_cap, kHardBitCap);
  if (m > cap)
    throw CapacityError("walsh: " + std::to_string(m) + " bits exceeds the cap of " +
                        std::to_string(cap));
  return m;
}

}  // namespace

WalshSpectrum walsh_transform(const std::vector<double>& table, RangeTag range,
                              int bit_cap) {
  WalshSpectrum spec;
  spec.m = table_bits(table.size(), bit_cap);
  spec.range = range;
  spec.coef = table;
  butterfly(spec.coef);
  const double scale = 1.0 / double(table.size());
  for (double& c : spec.coef) c *= scale;
  return spec;
}

std::vector<double> inverse_walsh(const WalshSpectrum& spec) {
  std::vector<double> table = spec.coef;
  butterfly(table);
  return table;
}

double noise_covariance(const WalshSpectrum& spec, double t) {
  double s = 0.0;
  for (std::size_t mask = 1; mask < spec.coef.size(); ++mask)
    s += spec.coef[mask] * spec.coef[mask] * std::exp(-t * double(std::popcount(mask)));
  return s;
}

double conditional_variance(const WalshSpectrum& spec, double t) {
  double s = 0.0;
  for (std::size_t mask = 1; mask < spec.coef.size(); ++mask)
    s += spec.coef[mask] * spec.coef[mask] *
         std::exp(-2.0 * t * double(std::popcount(mask)));
  return s;
}

// ---------------------------------------------------------------------------
// Decision trees

RevealmentExact exact_revealment(const RandomizedAlgorithm& alg, int m,
                                 const std::vector<double>* truth) {
  if (m < 0 || m > kHardBitCap) throw CapacityError("exact_revealment: m out of range");
  if (alg.trees.empty()) throw ConfigError("exact_revealment: empty algorithm");
  const std::size_t inputs = std::size_t(1) << m;
  if (truth && truth->size() != inputs)
    throw ConfigError("exact_revealment: truth table size mismatch");

  RevealmentExact out;
  out.per_bit.assign(std::size_t(std::max(m, 1)), 0.0);
  const double w = 1.0 / (double(alg.trees.size()) * double(inputs));

  std::vector<double> first_answer(inputs, 0.0);
  for (std::size_t ti = 0; ti < alg.trees.size(); ++ti) {
    const DecisionTree& tree = alg.trees[ti];
    for (std::size_t a = 0; a < inputs; ++a) {
      int node = tree.root;
      std::uint64_t queried = 0;
      while (tree.nodes[node].query >= 0) {
        const int bit = tree.nodes[node].query;
        queried |= std::uint64_t(1) << bit;
        const bool is_minus = (a >> bit) & 1;  // bit set means sigma = -1
        node = is_minus ? tree.nodes[node].lo : tree.nodes[node].hi;
        if (node < 0) throw ConfigError("exact_revealment: malformed tree");
      }
      const double answer = tree.nodes[node].leaf;
      if (ti == 0) {
        first_answer[a] = answer;
        if (truth && answer != (*truth)[a])
          throw DeterminationError("algorithm output differs from g on input " +
                                   std::to_string(a));
      } else if (answer != first_answer[a]) {
        throw DeterminationError("trees disagree on input " + std::to_string(a) +
                                 "; the algorithm does not determine one function");
      }
      for (int bit = 0; bit < m; ++bit)
        if ((queried >> bit) & 1) out.per_bit[bit] += w;
    }
  }
  for (double p : out.per_bit) out.delta = std::max(out.delta, p);
  return out;
}

std::vector<SchrammSteifRow> verify_schramm_steif(const WalshSpectrum& spec,
                                                  double delta) {
  if (delta < 0.0 || delta > 1.0)
    throw ConfigError("verify_schramm_steif: delta must lie in [0,1]");
  const double e2 = spec.mean_square();
  std::vector<double> weights(std::size_t(spec.m) + 1, 0.0);
  for (std::size_t mask = 0; mask < spec.coef.size(); ++mask)
    weights[std::size_t(std::popcount(mask))] += spec.coef[mask] * spec.coef[mask];

  std::vector<SchrammSteifRow> rows;
  for (int k = 1; k <= spec.m; ++k) {
    SchrammSteifRow row;
    row.k = k;
    row.level_weight = weights[std::size_t(k)];
    row.bound = double(k) * delta * e2;
    row.pass = row.level_weight <= row.bound;
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Canonical functions

namespace {

double sigma_of(std::size_t a, int bit) { return ((a >> bit) & 1) ? -1.0 : 1.0; }

double to_range(double plus_minus, RangeTag range) {
  return range == RangeTag::PlusMinus ? plus_minus : (plus_minus + 1.0) / 2.0;
}

int add_leaf(DecisionTree& t, double value) {
  t.nodes.push_back({-1, value, -1, -1});
  return int(t.nodes.size()) - 1;
}

int add_query(DecisionTree& t, int bit, int lo, int hi) {
  t.nodes.push_back({bit, 0.0, lo, hi});
  return int(t.nodes.size()) - 1;
}

}  // namespace

std::vector<double> dictator_table(int m, int bit, RangeTag range) {
  std::vector<double> t(std::size_t(1) << m);
  for (std::size_t a = 0; a < t.size(); ++a) t[a] = to_range(sigma_of(a, bit), range);
  return t;
}

std::vector<double> majority3_table(RangeTag range) {
  std::vector<double> t(8);
  for (std::size_t a = 0; a < 8; ++a) {
    const double s = sigma_of(a, 0) + sigma_of(a, 1) + sigma_of(a, 2);
    t[a] = to_range(s > 0 ? 1.0 : -1.0, range);
  }
  return t;
}

std::vector<double> parity_table(int m, RangeTag range) {
  std::vector<double> t(std::size_t(1) << m);
  for (std::size_t a = 0; a < t.size(); ++a)
    t[a] = to_range(std::popcount(a) % 2 == 0 ? 1.0 : -1.0, range);
  return t;
}

std::vector<double> tribes_table(int tribes, int tribe_size, RangeTag range) {
  const int m = tribes * tribe_size;
  std::vector<double> t(std::size_t(1) << m);
  for (std::size_t a = 0; a < t.size(); ++a) {
    bool any = false;
    for (int tr = 0; tr < tribes && !any; ++tr) {
      bool all = true;
      for (int b = 0; b < tribe_size; ++b)
        if (sigma_of(a, tr * tribe_size + b) < 0) {
          all = false;
          break;
        }
      any = all;
    }
    t[a] = to_range(any ? 1.0 : -1.0, range);
  }
  return t;
}

RandomizedAlgorithm dictator_algorithm(int bit, RangeTag range) {
  DecisionTree t;
  const int lo = add_leaf(t, to_range(-1.0, range));
  const int hi = add_leaf(t, to_range(1.0, range));
  t.root = add_query(t, bit, lo, hi);
  return {{t}};
}

RandomizedAlgorithm majority3_random_order(RangeTag range) {
  RandomizedAlgorithm alg;
  const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                           {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (const auto& p : perms) {
    DecisionTree t;
    // After two agreeing bits the majority is settled; otherwise the third
    // bit decides.
    auto third = [&](double) {
      const int lo = add_leaf(t, to_range(-1.0, range));
      const int hi = add_leaf(t, to_range(1.0, range));
      return add_query(t, p[2], lo, hi);
    };
    const int after_minus_lo = add_leaf(t, to_range(-1.0, range));   // -1, -1
    const int after_minus_hi = third(0);                             // -1, +1
    const int after_plus_lo = third(0);                              // +1, -1
    const int after_plus_hi = add_leaf(t, to_range(1.0, range));     // +1, +1
    const int q_minus = add_query(t, p[1], after_minus_lo, after_minus_hi);
    const int q_plus = add_query(t, p[1], after_plus_lo, after_plus_hi);
    t.root = add_query(t, p[0], q_minus, q_plus);
    alg.trees.push_back(std::move(t));
  }
  return alg;
}

namespace {

// Subtree reading tribes order[ti..]; returns the node index.
int build_tribes_subtree(DecisionTree& t, const std::vector<int>& order,
                         std::size_t ti, int tribe_size, RangeTag range) {
  if (ti == order.size()) return add_leaf(t, to_range(-1.0, range));  // all tribes failed
  const int base = order[ti] * tribe_size;
  // Innermost bit first: all +1 so far and bit b decides between success and
  // moving on.
  int fail_next = build_tribes_subtree(t, order, ti + 1, tribe_size, range);
  int node = add_leaf(t, to_range(1.0, range));  // whole tribe read as +1
  for (int b = tribe_size - 1; b >= 0; --b)
    node = add_query(t, base + b, fail_next, node);
  return node;
}

}  // namespace

RandomizedAlgorithm tribes_algorithm(int tribes, int tribe_size, RangeTag range) {
  RandomizedAlgorithm alg;
  std::vector<int> order(std::size_t(tribes));
  for (int i = 0; i < tribes; ++i) order[std::size_t(i)] = i;
  do {
    DecisionTree t;
    t.root = build_tribes_subtree(t, order, 0, tribe_size, range);
    alg.trees.push_back(std::move(t));
  } while (std::next_permutation(order.begin(), order.end()));
  return alg;
}

// ---------------------------------------------------------------------------
// Tiny field bridge

TinyFieldBoolean field_to_boolean(const TinyFieldConfig& cfg) {
  if (!cfg.kernel.truncated())
    throw ConfigError("field_to_boolean: kernel truncation radius must be finite");
  TinyFieldBoolean tiny;
  tiny.kernel = cfg.kernel;
  tiny.quad = cfg.quad;
  const Rect quad_rect = cfg.quad.rect();
  tiny.noise_geom = LatticeGeom::covering(quad_rect.inflated(cfg.kernel.r / 2.0), cfg.N);
  const double h2 = cfg.kernel.r * cfg.kernel.r / 4.0;
  for (int cj = 0; cj < tiny.noise_geom.ny; ++cj)
    for (int ci = 0; ci < tiny.noise_geom.nx; ++ci)
      if (quad_rect.dist2(tiny.noise_geom.point(ci, cj)) < h2)
        tiny.active.push_back(tiny.noise_geom.index(ci, cj));
  tiny.m = int(tiny.active.size());
  const int cap = std::min(cfg.bit_cap, kHardBitCap);
  if (tiny.m > cap)
    throw CapacityError("field_to_boolean: instance needs " + std::to_string(tiny.m) +
                        " bits, cap is " + std::to_string(cap));

  const LatticeGeom field_geom = LatticeGeom::covering(quad_rect, cfg.N);
  const int np = int(field_geom.size());
  // weights[p][bit]: field value at point p is (1/N) * sum_bit w * sigma.
  std::vector<double> weights(std::size_t(np) * tiny.m, 0.0);
  for (int j = 0; j < field_geom.ny; ++j)
    for (int i = 0; i < field_geom.nx; ++i) {
      const Point x = field_geom.point(i, j);
      double* row = &weights[std::size_t(field_geom.index(i, j)) * tiny.m];
      for (int b = 0; b < tiny.m; ++b) {
        const auto cell = tiny.active[std::size_t(b)];
        const Point v = tiny.noise_geom.point(int(cell % tiny.noise_geom.nx),
                                              int(cell / tiny.noise_geom.nx));
        row[b] = eval_kernel(cfg.kernel, x - v) / cfg.N;
      }
    }

  const std::size_t inputs = std::size_t(1) << tiny.m;
  tiny.table.assign(inputs, 0.0);
  std::vector<double> sigma(std::size_t(tiny.m));
  FieldSample f;
  f.geom = field_geom;
  f.values.assign(std::size_t(np), 0.0);
  f.kernel_hash = cfg.kernel.hash();
  for (std::size_t a = 0; a < inputs; ++a) {
    for (int b = 0; b < tiny.m; ++b) sigma[std::size_t(b)] = sigma_of(a, b);
    for (int p = 0; p < np; ++p) {
      const double* row = &weights[std::size_t(p) * tiny.m];
      double acc = 0.0;
      for (int b = 0; b < tiny.m; ++b) acc += row[b] * sigma[std::size_t(b)];
      f.values[std::size_t(p)] = acc;
    }
    tiny.table[a] = crossing(threshold(f, 0.0), cfg.quad) ? 1.0 : 0.0;
  }
  return tiny;
}

NoiseGrid noise_from_index(const TinyFieldBoolean& tiny, std::uint64_t index) {
  NoiseGrid g;
  g.geom = tiny.noise_geom;
  g.kind = NoiseKind::Bernoulli;
  g.seed = index;
  g.values.assign(std::size_t(tiny.noise_geom.size()), 1.0);
  for (int b = 0; b < tiny.m; ++b)
    g.values[std::size_t(tiny.active[std::size_t(b)])] = sigma_of(index, b);
  return g;
}

std::uint64_t index_from_noise(const TinyFieldBoolean& tiny, const NoiseGrid& noise) {
  if (!noise.geom.same_shape(tiny.noise_geom))
    throw ConfigError("index_from_noise: geometry mismatch");
  std::uint64_t a = 0;
  for (int b = 0; b < tiny.m; ++b)
    if (noise.values[std::size_t(tiny.active[std::size_t(b)])] < 0)
      a |= std::uint64_t(1) << b;
  return a;
}

}  // namespace bflab
