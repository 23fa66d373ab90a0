#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <deque>
#include <set>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "mcdn/admg.hpp"

namespace mcdn {

// m-separation.  A walk is blocked by z when some non-collider on it lies in
// z, or some collider on it has no descendant in z (itself included).  Both
// endpoints of a bi-directed edge count as arrowheads, which is the only
// departure from plain d-separation.  Implemented as reachability over
// (vertex, entered-through-arrowhead) states, which is equivalent to the path
// definition because m-connecting walks exist iff m-connecting paths do.
inline bool m_separated(const Admg& g, std::span<const VertexId> x,
                        std::span<const VertexId> y, std::span<const VertexId> z) {
  const int n = g.size();
  std::vector<char> in_x(n, 0), in_y(n, 0), in_z(n, 0);
  auto mark = [&](std::span<const VertexId> s, std::vector<char>& flag, const char* which) {
    for (VertexId v : s) {
      if (v < 0 || v >= n) throw std::invalid_argument("m_separated: vertex id out of range");
      if (flag[v]) throw std::invalid_argument(std::string("m_separated: duplicate vertex in ") + which);
      flag[v] = 1;
    }
  };
  mark(x, in_x, "x");
  mark(y, in_y, "y");
  mark(z, in_z, "z");
  for (VertexId v = 0; v < n; ++v)
    if (in_x[v] + in_y[v] + in_z[v] > 1)
      throw std::invalid_argument("m_separated: x, y, z must be disjoint");

  // Vertices with a descendant in z (z itself included); these open colliders.
  std::vector<char> anz(n, 0);
  {
    std::vector<VertexId> work;
    for (VertexId v : z) anz[v] = 1, work.push_back(v);
    while (!work.empty()) {
      VertexId u = work.back();
      work.pop_back();
      for (VertexId p : g.parents(u))
        if (!anz[p]) anz[p] = 1, work.push_back(p);
    }
  }

  std::vector<std::array<char, 2>> seen(n, {0, 0});
  std::deque<std::pair<VertexId, int>> queue;
  bool reached = false;
  auto arrive = [&](VertexId w, int head) {
    if (in_y[w]) { reached = true; return; }
    if (!seen[w][head]) {
      seen[w][head] = 1;
      queue.emplace_back(w, head);
    }
  };

  for (VertexId s : x) {
    for (VertexId c : g.children(s)) arrive(c, 1);
    for (VertexId p : g.parents(s)) arrive(p, 0);
    for (VertexId b : g.siblings(s)) arrive(b, 1);
    if (reached) return false;
  }
  while (!queue.empty() && !reached) {
    auto [v, head] = queue.front();
    queue.pop_front();
    // Leaving through a tail at v makes v a non-collider on the walk;
    // leaving through an arrowhead makes it a collider iff we also arrived
    // through an arrowhead.
    if (!in_z[v])
      for (VertexId c : g.children(v)) arrive(c, 1);
    bool head_out_ok = head ? (anz[v] != 0) : !in_z[v];
    if (head_out_ok) {
      for (VertexId p : g.parents(v)) arrive(p, 0);
      for (VertexId b : g.siblings(v)) arrive(b, 1);
    }
  }
  return !reached;
}

inline bool m_separated(const Admg& g, std::initializer_list<VertexId> x,
                        std::initializer_list<VertexId> y, std::initializer_list<VertexId> z) {
  return m_separated(g, std::span<const VertexId>(x.begin(), x.size()),
                     std::span<const VertexId>(y.begin(), y.size()),
                     std::span<const VertexId>(z.begin(), z.size()));
}

// One ordered-local-Markov statement: target is independent of
// `independent_of` given `conditioning`, derived from the ancestral set
// `ancestral_set` and the fixed topological order.
struct IndependenceConstraint {
  VertexId target;
  std::vector<VertexId> conditioning;
  std::vector<VertexId> independent_of;
  std::vector<VertexId> ancestral_set;
};

// How many ancestral sets to enumerate per vertex.  The count of ancestral
// sets is exponential in the worst case, so `automatic` enumerates all of
// them only on small graphs and otherwise keeps just the smallest and the
// largest admissible set per vertex.
enum class ConstraintScope { automatic, exhaustive, bounded };

inline std::vector<IndependenceConstraint> ordered_local_constraints(
    const Admg& g, ConstraintScope scope = ConstraintScope::automatic) {
  const int n = g.size();
  if (n > 64) throw std::invalid_argument("ordered_local_constraints: more than 64 vertices");
  if (scope == ConstraintScope::automatic)
    scope = n <= 12 ? ConstraintScope::exhaustive : ConstraintScope::bounded;

  auto order = g.topological_order();
  std::vector<std::uint64_t> an(n, 0);  // proper ancestors as masks
  for (VertexId v : order)
    for (VertexId p : g.parents(v)) an[v] |= an[p] | (1ull << p);

  auto to_vec = [&](std::uint64_t mask) {
    std::vector<VertexId> out;
    for (std::uint64_t s = mask; s;) {
      int v = std::countr_zero(s);
      s &= s - 1;
      out.push_back(v);
    }
    return out;
  };

  std::vector<IndependenceConstraint> out;
  std::set<std::tuple<VertexId, std::uint64_t, std::uint64_t>> seen;
  std::uint64_t pred = 0;
  for (VertexId v : order) {
    const std::uint64_t self = 1ull << v;
    const std::uint64_t base = an[v] | self;
    const std::uint64_t free = pred & ~an[v];
    std::vector<std::uint64_t> candidates;
    if (scope == ConstraintScope::exhaustive) {
      if (std::popcount(free) > 20)
        throw std::invalid_argument(
            "ordered_local_constraints: exhaustive enumeration too large; use bounded scope");
      // All ancestral sets between an(v)+v and pred(v)+v.
      std::uint64_t sub = free;
      while (true) {
        bool closed = true;
        for (std::uint64_t s = sub; s && closed;) {
          int t = std::countr_zero(s);
          s &= s - 1;
          if ((an[t] & ~(base | sub)) != 0) closed = false;
        }
        if (closed) candidates.push_back(base | sub);
        if (sub == 0) break;
        sub = (sub - 1) & free;
      }
      std::sort(candidates.begin(), candidates.end());
    } else {
      candidates.push_back(base);
      if ((base | free) != base) candidates.push_back(base | free);
    }

    for (std::uint64_t a_mask : candidates) {
      // District of v inside the induced subgraph on the ancestral set.
      std::uint64_t district = self;
      std::vector<VertexId> work{v};
      while (!work.empty()) {
        VertexId u = work.back();
        work.pop_back();
        for (VertexId s : g.siblings(u)) {
          std::uint64_t bit = 1ull << s;
          if ((a_mask & bit) && !(district & bit)) {
            district |= bit;
            work.push_back(s);
          }
        }
      }
      std::uint64_t blanket = district;
      for (std::uint64_t s = district; s;) {
        int u = std::countr_zero(s);
        s &= s - 1;
        for (VertexId p : g.parents(u)) blanket |= 1ull << p;
      }
      blanket &= ~self;  // parents are ancestors, hence inside the ancestral set
      std::uint64_t indep = a_mask & ~(blanket | self);
      if (indep == 0) continue;
      if (!seen.emplace(v, blanket, indep).second) continue;
      out.push_back(IndependenceConstraint{v, to_vec(blanket), to_vec(indep), to_vec(a_mask)});
    }
    pred |= self;
  }
  return out;
}

}  // namespace mcdn
