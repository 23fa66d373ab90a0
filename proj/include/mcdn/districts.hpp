#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcdn/admg.hpp"

namespace mcdn {

// A district: one connected component of the graph's bi-directed skeleton,
// together with the subgraph used to parameterize its factor.  The subgraph
// keeps the members plus their external parents and drops any edge running
// between two external parents.
struct District {
  std::vector<VertexId> members;           // ascending ids in the parent graph
  std::vector<VertexId> external_parents;  // pa(members) \ members, ascending
  std::vector<std::vector<VertexId>> cliques;  // maximal bi-directed cliques on members
  Admg subgraph;
  std::vector<VertexId> subgraph_vertices;  // subgraph id -> parent-graph id
};

namespace detail {

// Bron-Kerbosch with pivoting over a bitmask adjacency.  Vertices are visited
// in ascending order, so the clique list comes out in a stable order.
inline void maximal_cliques(std::uint64_t r, std::uint64_t p, std::uint64_t x,
                            const std::vector<std::uint64_t>& adj,
                            std::vector<std::uint64_t>& out) {
  if (p == 0 && x == 0) {
    if (std::popcount(r) >= 2) out.push_back(r);
    return;
  }
  std::uint64_t px = p | x;
  int pivot = std::countr_zero(px);
  int best = -1;
  for (std::uint64_t s = px; s;) {
    int v = std::countr_zero(s);
    s &= s - 1;
    int deg = std::popcount(p & adj[v]);
    if (deg > best) best = deg, pivot = v;
  }
  std::uint64_t candidates = p & ~adj[pivot];
  while (candidates) {
    int v = std::countr_zero(candidates);
    std::uint64_t bit = 1ull << v;
    candidates &= candidates - 1;
    maximal_cliques(r | bit, p & adj[v], x & adj[v], adj, out);
    p &= ~bit;
    x |= bit;
  }
}

}  // namespace detail

// Connected components of the bi-directed skeleton, ordered by their smallest
// member.  Singleton districts are included; their clique list is empty.
inline std::vector<District> districts(const Admg& g) {
  g.validate();
  const int n = g.size();
  std::vector<int> component(n, -1);
  std::vector<District> out;
  for (VertexId v = 0; v < n; ++v) {
    if (component[v] >= 0) continue;
    int id = static_cast<int>(out.size());
    std::vector<VertexId> members{v}, work{v};
    component[v] = id;
    while (!work.empty()) {
      VertexId u = work.back();
      work.pop_back();
      for (VertexId s : g.siblings(u))
        if (component[s] < 0) {
          component[s] = id;
          members.push_back(s);
          work.push_back(s);
        }
    }
    std::sort(members.begin(), members.end());

    District d;
    d.members = members;
    std::vector<char> is_member(n, 0);
    for (VertexId m : members) is_member[m] = 1;
    std::vector<char> is_parent(n, 0);
    for (VertexId m : members)
      for (VertexId p : g.parents(m))
        if (!is_member[p]) is_parent[p] = 1;
    for (VertexId u = 0; u < n; ++u)
      if (is_parent[u]) d.external_parents.push_back(u);

    // Subgraph on members + external parents, edges among external parents
    // excluded.
    std::vector<VertexId> nodes;
    for (VertexId u = 0; u < n; ++u)
      if (is_member[u] || is_parent[u]) nodes.push_back(u);
    std::vector<VertexId> to_sub(n, -1);
    for (VertexId u : nodes) {
      const Vertex& vx = g.vertex(u);
      to_sub[u] = d.subgraph.add_vertex(vx);
      d.subgraph_vertices.push_back(u);
    }
    for (auto [a, b] : g.directed_edges())
      if (to_sub[a] >= 0 && to_sub[b] >= 0 && !(is_parent[a] && is_parent[b]))
        d.subgraph.add_directed_edge(to_sub[a], to_sub[b]);
    for (auto [a, b] : g.bidirected_edges())
      if (to_sub[a] >= 0 && to_sub[b] >= 0 && !(is_parent[a] && is_parent[b]))
        d.subgraph.add_bidirected_edge(to_sub[a], to_sub[b]);

    // Maximal cliques of the skeleton restricted to the members.
    if (members.size() > 64)
      throw std::invalid_argument("district has more than 64 members");
    std::vector<std::uint64_t> adj(members.size(), 0);
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t j = i + 1; j < members.size(); ++j)
        if (g.has_bidirected_edge(members[i], members[j])) {
          adj[i] |= 1ull << j;
          adj[j] |= 1ull << i;
        }
    std::vector<std::uint64_t> cliques;
    if (members.size() >= 2)
      detail::maximal_cliques(0, (members.size() == 64) ? ~0ull : (1ull << members.size()) - 1,
                              0, adj, cliques);
    for (std::uint64_t mask : cliques) {
      std::vector<VertexId> c;
      for (std::uint64_t s = mask; s;) {
        int i = std::countr_zero(s);
        s &= s - 1;
        c.push_back(members[i]);
      }
      d.cliques.push_back(std::move(c));
    }
    std::sort(d.cliques.begin(), d.cliques.end());
    out.push_back(std::move(d));
  }
  return out;
}

// True iff no member has a parent that is also a member.
inline bool is_barren(const District& d) {
  std::vector<char> member_sub(d.subgraph.size(), 0);
  for (int i = 0; i < d.subgraph.size(); ++i) {
    VertexId orig = d.subgraph_vertices[i];
    member_sub[i] = std::binary_search(d.members.begin(), d.members.end(), orig) ? 1 : 0;
  }
  for (auto [a, b] : d.subgraph.directed_edges())
    if (member_sub[a] && member_sub[b]) return false;
  return true;
}

// Result of the artificial-vertex reduction: every vertex with at least one
// child gets a star companion that takes over its outgoing directed edges.
// Districts of the returned graph are all barren; the bi-directed structure
// is untouched, so the original districts survive as vertex sets and each
// star forms its own singleton district.
struct ArtificialTransform {
  Admg graph;
  std::vector<VertexId> star_of;  // original id -> star id, or -1 for childless vertices
};

inline ArtificialTransform transform_artificial(const Admg& g) {
  g.validate();
  ArtificialTransform t;
  t.star_of.assign(g.size(), -1);
  for (VertexId v = 0; v < g.size(); ++v) t.graph.add_vertex(g.vertex(v));
  for (VertexId v = 0; v < g.size(); ++v) {
    if (g.children(v).empty()) continue;
    Vertex star = g.vertex(v);
    star.name += "*";
    while (t.graph.find(star.name)) star.name += "*";
    t.star_of[v] = t.graph.add_vertex(star);
  }
  for (auto [a, b] : g.bidirected_edges()) t.graph.add_bidirected_edge(a, b);
  for (VertexId v = 0; v < g.size(); ++v)
    if (t.star_of[v] >= 0) t.graph.add_directed_edge(v, t.star_of[v]);
  for (auto [p, c] : g.directed_edges()) t.graph.add_directed_edge(t.star_of[p], c);
  return t;
}

}  // namespace mcdn
