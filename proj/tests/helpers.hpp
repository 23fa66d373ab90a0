#pragma once

// Test-only utilities: fixed worked graphs, random graph/model generators for
// property tests, and brute-force probability oracles that stay independent
// of the library's evaluation path.

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "mcdn/mcdn.hpp"

namespace testutil {

using namespace mcdn;

// Four binary vertices, two districts: {X1,X2} with parent X4 and {X3,X4}
// with parent X1 (edges X1<->X2, X3<->X4, X4->X1, X1->X3).
inline Admg two_district_graph() {
  Admg g;
  g.add_ordinal("X1");
  g.add_ordinal("X2");
  g.add_ordinal("X3");
  g.add_ordinal("X4");
  g.add_bidirected_edge(0, 1);
  g.add_bidirected_edge(2, 3);
  g.add_directed_edge(3, 0);
  g.add_directed_edge(0, 2);
  return g;
}

// Five binary vertices forming a single district with internal directed
// edges (X1<->X3, X2<->X3, X3<->X4, X4<->X5; X2->X1, X4->X2, X5->X3).
inline Admg single_district_graph() {
  Admg g;
  for (int i = 1; i <= 5; ++i) g.add_ordinal("X" + std::to_string(i));
  g.add_bidirected_edge(0, 2);
  g.add_bidirected_edge(1, 2);
  g.add_bidirected_edge(2, 3);
  g.add_bidirected_edge(3, 4);
  g.add_directed_edge(1, 0);
  g.add_directed_edge(3, 1);
  g.add_directed_edge(4, 2);
  return g;
}

struct RandomGraphOptions {
  int min_vertices = 3;
  int max_vertices = 6;
  double p_directed = 0.3;
  double p_bidirected = 0.35;
  int max_cardinality = 2;       // >2 mixes in larger ordinal alphabets
  bool require_nonbarren = false;
};

inline Admg random_admg(Rng& rng, const RandomGraphOptions& opts = {}) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Admg g;
    int n = opts.min_vertices +
            static_cast<int>(rng.index(opts.max_vertices - opts.min_vertices + 1));
    for (int v = 0; v < n; ++v) {
      int card = 2 + static_cast<int>(rng.index(std::max(1, opts.max_cardinality - 1)));
      g.add_ordinal("V" + std::to_string(v), card);
    }
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        if (rng.uniform() < opts.p_directed) g.add_directed_edge(a, b);
        if (rng.uniform() < opts.p_bidirected) g.add_bidirected_edge(a, b);
      }
    if (opts.require_nonbarren) {
      bool any = false;
      for (const District& d : districts(g))
        if (!is_barren(d)) any = true;
      if (!any) continue;
    }
    return g;
  }
  throw std::runtime_error("random_admg: could not satisfy the constraints");
}

inline OrdinalMarginal random_ordinal_marginal(const Admg& g, VertexId v, Rng& rng) {
  OrdinalMarginal m;
  m.vertex = v;
  m.cardinality = g.cardinality(v);
  m.parents = g.parents(v);
  int configs = 1;
  for (VertexId p : m.parents) {
    m.parent_cards.push_back(g.cardinality(p));
    configs *= g.cardinality(p);
  }
  for (int c = 0; c < configs; ++c) {
    double total = 0.0;
    std::vector<double> row(m.cardinality);
    for (double& x : row) total += (x = rng.uniform(0.2, 1.0));
    for (double& x : row) m.probs.push_back(x / total);
  }
  return m;
}

// Theta draws matching the copula domains: any sign for pairs, positive for
// larger cliques.
inline std::map<std::vector<VertexId>, double> random_thetas(const Admg& g, Rng& rng) {
  std::map<std::vector<VertexId>, double> thetas;
  for (const District& d : districts(g))
    for (const auto& clique : d.cliques)
      thetas[clique] = clique.size() == 2 ? rng.uniform(-5.0, 8.0) : rng.uniform(0.1, 8.0);
  return thetas;
}

inline McdnModel random_ordinal_model(const Admg& g, Rng& rng) {
  std::vector<Marginal> marginals;
  for (VertexId v = 0; v < g.size(); ++v) marginals.push_back(random_ordinal_marginal(g, v, rng));
  return McdnModel(g, std::move(marginals), random_thetas(g, rng));
}

// ---------------------------------------------------------------------------
// Brute-force DAG oracle over binary variables: enumerates the joint directly
// from conditional probability tables, with no code shared with the library's
// model evaluation.

struct BinaryDag {
  std::vector<std::vector<int>> parents;   // per vertex
  std::vector<std::vector<double>> prob1;  // P(v = 1 | parent bits), indexed by packed parent bits

  int size() const { return static_cast<int>(parents.size()); }

  // Joint table indexed by bitmask (bit v = value of vertex v).
  std::vector<double> joint() const {
    int n = size();
    std::vector<double> table(std::size_t(1) << n, 1.0);
    for (std::uint32_t x = 0; x < table.size(); ++x) {
      double p = 1.0;
      for (int v = 0; v < n; ++v) {
        std::uint32_t cfg = 0;
        for (std::size_t i = 0; i < parents[v].size(); ++i)
          cfg |= ((x >> parents[v][i]) & 1u) << i;
        double p1 = prob1[v][cfg];
        p *= ((x >> v) & 1u) ? p1 : 1.0 - p1;
      }
      table[x] = p;
    }
    return table;
  }
};

// Marginalizes a bitmask-indexed table onto the vertices in `keep` (which are
// renumbered 0..k-1 in ascending order).
inline std::vector<double> marginalize_table(const std::vector<double>& table, int n,
                                             const std::vector<int>& keep) {
  std::vector<double> out(std::size_t(1) << keep.size(), 0.0);
  for (std::uint32_t x = 0; x < table.size(); ++x) {
    std::uint32_t y = 0;
    for (std::size_t i = 0; i < keep.size(); ++i) y |= ((x >> keep[i]) & 1u) << i;
    out[y] += table[x];
  }
  return out;
}

// Max violation of X _||_ Y | Z in a bitmask-indexed joint over n vertices.
inline double table_ci_violation(const std::vector<double>& table, int n,
                                 std::uint32_t xm, std::uint32_t ym, std::uint32_t zm,
                                 double min_context = 1e-12) {
  std::map<std::uint32_t, double> pz, pxz, pyz, pxyz;
  for (std::uint32_t x = 0; x < table.size(); ++x) {
    pz[x & zm] += table[x];
    pxz[x & (xm | zm)] += table[x];
    pyz[x & (ym | zm)] += table[x];
    pxyz[x & (xm | ym | zm)] += table[x];
  }
  double worst = 0.0;
  for (auto [key, pxyz_v] : pxyz) {
    double z = pz[key & zm];
    if (z < min_context) continue;
    double v = std::abs(pxyz_v / z - (pxz[key & (xm | zm)] / z) * (pyz[key & (ym | zm)] / z));
    worst = std::max(worst, v);
  }
  return worst;
}

// Signed-corner rectangle volume of an arbitrary CDF callable; non-negative
// for any genuine CDF.
template <class Cdf>
double rectangle_volume(Cdf&& cdf, std::span<const double> lo, std::span<const double> hi) {
  const int d = static_cast<int>(lo.size());
  std::vector<double> corner(d);
  double total = 0.0;
  for (std::uint32_t s = 0; s < (1u << d); ++s) {
    int ones = 0;
    for (int i = 0; i < d; ++i) {
      bool up = (s >> i) & 1u;
      corner[i] = up ? hi[i] : lo[i];
      ones += up;
    }
    double sign = ((d - ones) % 2 == 0) ? 1.0 : -1.0;
    total += sign * cdf(std::span<const double>(corner.data(), corner.size()));
  }
  return total;
}

}  // namespace testutil
