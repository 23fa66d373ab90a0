#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcdn/model.hpp"

namespace mcdn {

// All vertex sets that are connected in the bi-directed skeleton, as bit
// masks in ascending order.  Singletons count; the empty set does not.
inline std::vector<std::uint32_t> connected_vertex_sets(const Admg& g) {
  const int n = g.size();
  if (n > 16) throw std::invalid_argument("connected-set enumeration capped at 16 vertices");
  std::vector<std::uint32_t> adj(n, 0);
  for (auto [a, b] : g.bidirected_edges()) {
    adj[a] |= 1u << b;
    adj[b] |= 1u << a;
  }
  std::vector<std::uint32_t> out;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::uint32_t start = mask & (~mask + 1);
    std::uint32_t reached = start, frontier = start;
    while (frontier) {
      std::uint32_t next = 0;
      for (std::uint32_t s = frontier; s;) {
        int v = std::countr_zero(s);
        s &= s - 1;
        next |= adj[v] & mask & ~reached;
      }
      reached |= next;
      frontier = next;
    }
    if (reached == mask) out.push_back(mask);
  }
  return out;
}

// The q_A = P(X_A = 0) parameterization of a binary bi-directed model.
// Values are stored for connected sets only; a disconnected set factors over
// its connected components.  Inverting the table with the alternating sum
//   P(X_A = 0, X_rest = 1) = sum_{B >= A} (-1)^{|B \ A|} q_B
// recovers the probability mass function.
class MoebiusTable {
 public:
  MoebiusTable(Admg graph, std::map<std::uint32_t, double> q_connected)
      : graph_(std::move(graph)), q_(std::move(q_connected)) {
    if (!graph_.directed_edges().empty())
      throw std::invalid_argument("Moebius table needs a purely bi-directed graph");
    for (VertexId v = 0; v < graph_.size(); ++v)
      if (graph_.kind(v) != VariableKind::ordinal || graph_.cardinality(v) != 2)
        throw std::invalid_argument("Moebius table needs binary vertices");
    connected_ = connected_vertex_sets(graph_);
    for (std::uint32_t mask : connected_)
      if (!q_.count(mask))
        throw std::invalid_argument("q value missing for a connected set");
    if (q_.size() != connected_.size())
      throw std::invalid_argument("q table names a set that is not connected");
    for (auto [mask, value] : q_)
      if (!(value >= 0.0 && value <= 1.0))
        throw std::invalid_argument("q values must lie in [0,1]");
    adj_.assign(graph_.size(), 0);
    for (auto [a, b] : graph_.bidirected_edges()) {
      adj_[a] |= 1u << b;
      adj_[b] |= 1u << a;
    }
  }

  const Admg& graph() const { return graph_; }
  const std::vector<std::uint32_t>& connected_sets() const { return connected_; }
  double q_connected(std::uint32_t mask) const { return q_.at(mask); }

  // q over an arbitrary set: product over its connected components.
  double q(std::uint32_t mask) const {
    double r = 1.0;
    std::uint32_t rest = mask;
    while (rest) {
      std::uint32_t start = rest & (~rest + 1);
      std::uint32_t comp = start, frontier = start;
      while (frontier) {
        std::uint32_t next = 0;
        for (std::uint32_t s = frontier; s;) {
          int v = std::countr_zero(s);
          s &= s - 1;
          next |= adj_[v] & mask & ~comp;
        }
        comp |= next;
        frontier = next;
      }
      r *= q_.at(comp);
      rest &= ~comp;
    }
    return r;
  }

  // Probability of a full 0/1 assignment by Moebius inversion.
  double pmf(const Configuration& assignment) const {
    const int n = graph_.size();
    if (assignment.size() != static_cast<std::size_t>(n))
      throw std::invalid_argument("assignment size mismatch");
    std::uint32_t zeros = 0;
    for (VertexId v = 0; v < n; ++v) {
      int level = detail::ordinal_value(assignment[v], 2, "vertex " + graph_.name(v));
      if (level == 0) zeros |= 1u << v;
    }
    std::uint32_t rest = ((n == 32 ? 0 : (1u << n)) - 1) & ~zeros;
    double total = 0.0;
    std::uint32_t t = rest;
    while (true) {
      double sign = (std::popcount(t) % 2 == 0) ? 1.0 : -1.0;
      total += sign * q(zeros | t);
      if (t == 0) break;
      t = (t - 1) & rest;
    }
    if (total < -1e-9)
      throw std::runtime_error("Moebius table is not a valid distribution: mass " +
                               std::to_string(total));
    return total < 0.0 ? 0.0 : total;
  }

 private:
  Admg graph_;
  std::map<std::uint32_t, double> q_;
  std::vector<std::uint32_t> connected_;
  std::vector<std::uint32_t> adj_;
};

// Extracts the q parameters of a purely bi-directed binary model by
// evaluating its joint CDF at (x_A = 0, x_rest = top).
inline MoebiusTable cdn_to_moebius(const McdnModel& model) {
  const Admg& g = model.graph();
  if (!g.directed_edges().empty())
    throw std::invalid_argument("cdn_to_moebius needs a purely bi-directed model");
  std::map<std::uint32_t, double> q;
  const double top = std::numeric_limits<double>::infinity();
  Configuration dummy(g.size(), 0.0);
  for (std::uint32_t mask : connected_vertex_sets(g)) {
    double value = 1.0;
    for (const auto& f : model.factors()) {
      std::vector<double> member_values;
      bool touches = false;
      for (VertexId v : f.district().members) {
        bool zero = (mask >> v) & 1u;
        member_values.push_back(zero ? 0.0 : top);
        touches |= zero;
      }
      if (touches) value *= f.cdf(member_values, dummy);
    }
    q[mask] = value;
  }
  return MoebiusTable(g, std::move(q));
}

// Key-value export of a table, matching the parameter file conventions.
inline void write_moebius(const MoebiusTable& t, std::ostream& out) {
  out << "moebius-table v1\n";
  for (std::uint32_t mask : t.connected_sets()) {
    out << "q";
    for (std::uint32_t s = mask; s;) {
      int v = std::countr_zero(s);
      s &= s - 1;
      out << " " << t.graph().name(v);
    }
    out << " | " << detail::format_double(t.q_connected(mask)) << "\n";
  }
}

inline MoebiusTable read_moebius(const Admg& graph, std::istream& in,
                                 std::string_view source = "<moebius>") {
  std::string line;
  int line_no = 0;
  bool header = false;
  std::map<std::uint32_t, double> q;
  while (std::getline(in, line)) {
    ++line_no;
    auto tok = detail::tokenize(line);
    if (tok.empty()) continue;
    if (!header) {
      if (tok.size() != 2 || tok[0] != "moebius-table" || tok[1] != "v1")
        throw ParseError(source, line_no, "expected header 'moebius-table v1'");
      header = true;
      continue;
    }
    if (tok[0] != "q" || tok.size() < 4 || tok[tok.size() - 2] != "|")
      throw ParseError(source, line_no, "expected 'q <names...> | <value>'");
    std::uint32_t mask = 0;
    for (std::size_t i = 1; i + 2 < tok.size(); ++i) mask |= 1u << graph.require(tok[i]);
    q[mask] = detail::parse_double(tok.back(), source, line_no);
  }
  return MoebiusTable(graph, std::move(q));
}

// ---------------------------------------------------------------------------
// Golden identities on two fixed worked graphs.  Both draw random parameters
// from the seed and return the largest absolute discrepancy between the
// model's factorized evaluation and a hand-expanded form; for a correct
// implementation the gap is pure floating-point noise.

namespace detail {

inline std::vector<double> random_binary_row(Rng& rng) {
  double p = rng.uniform(0.1, 0.9);
  return {p, 1.0 - p};
}

inline OrdinalMarginal random_binary_marginal(const Admg& g, VertexId v, Rng& rng) {
  OrdinalMarginal m;
  m.vertex = v;
  m.cardinality = 2;
  m.parents = g.parents(v);
  int configs = 1;
  for (VertexId p : m.parents) {
    m.parent_cards.push_back(g.cardinality(p));
    configs *= g.cardinality(p);
  }
  for (int c = 0; c < configs; ++c) {
    auto row = random_binary_row(rng);
    m.probs.insert(m.probs.end(), row.begin(), row.end());
  }
  return m;
}

inline double random_pair_theta(Rng& rng) {
  double theta = rng.uniform(-5.0, 8.0);
  if (std::abs(theta) < 0.2) theta = theta < 0 ? -0.2 : 0.2;
  return theta;
}

}  // namespace detail

// Four-vertex graph with two districts ({X1,X2} with parent X4 and {X3,X4}
// with parent X1).  Checks that the factorized probability of the assignment
// (0,1,1,0) matches its four-term expansion in district-CDF values:
//   P = q1 q4 - q34|1 q1 - q12|4 q4 + q12|4 q34|1.
inline double moebius_expansion_gap(std::uint64_t seed) {
  Admg g;
  VertexId x1 = g.add_ordinal("X1"), x2 = g.add_ordinal("X2");
  VertexId x3 = g.add_ordinal("X3"), x4 = g.add_ordinal("X4");
  g.add_bidirected_edge(x1, x2);
  g.add_bidirected_edge(x3, x4);
  g.add_directed_edge(x4, x1);
  g.add_directed_edge(x1, x3);

  Rng rng(seed);
  std::vector<Marginal> marginals;
  for (VertexId v = 0; v < g.size(); ++v)
    marginals.push_back(detail::random_binary_marginal(g, v, rng));
  std::map<std::vector<VertexId>, double> thetas;
  thetas[{x1, x2}] = detail::random_pair_theta(rng);
  thetas[{x3, x4}] = detail::random_pair_theta(rng);
  McdnModel model(g, std::move(marginals), thetas);

  Configuration x{0.0, 1.0, 1.0, 0.0};
  double lhs = model.joint_prob(x);

  const double top = std::numeric_limits<double>::infinity();
  const DistrictFactor& f12 = model.factors()[0];  // members X1 X2, parent X4
  const DistrictFactor& f34 = model.factors()[1];  // members X3 X4, parent X1
  double q1 = f12.cdf(std::vector<double>{0.0, top}, x);
  double q12_4 = f12.cdf(std::vector<double>{0.0, 0.0}, x);
  double q4 = f34.cdf(std::vector<double>{top, 0.0}, x);
  double q34_1 = f34.cdf(std::vector<double>{0.0, 0.0}, x);
  double rhs = q1 * q4 - q34_1 * q1 - q12_4 * q4 + q12_4 * q34_1;
  return std::abs(lhs - rhs);
}

// Five-vertex single-district graph (bi-directed path/star mix with internal
// directed edges), reduced by the artificial-vertex transform.  Checks that
// the probability of the all-zero assignment equals the explicit product of
// the four edge-copula factors and five power-corrected marginal terms, and
// that this product splits into a block on {X1..X4} times a block on
// {X4,X5}.
inline double zero_configuration_split_gap(std::uint64_t seed) {
  Admg g;
  VertexId x1 = g.add_ordinal("X1"), x2 = g.add_ordinal("X2"), x3 = g.add_ordinal("X3");
  VertexId x4 = g.add_ordinal("X4"), x5 = g.add_ordinal("X5");
  g.add_bidirected_edge(x1, x3);
  g.add_bidirected_edge(x2, x3);
  g.add_bidirected_edge(x3, x4);
  g.add_bidirected_edge(x4, x5);
  g.add_directed_edge(x2, x1);
  g.add_directed_edge(x4, x2);
  g.add_directed_edge(x5, x3);

  Rng rng(seed);
  std::vector<Marginal> marginals;
  for (VertexId v = 0; v < g.size(); ++v)
    marginals.push_back(detail::random_binary_marginal(g, v, rng));
  std::map<std::vector<VertexId>, double> thetas;
  thetas[{x1, x3}] = detail::random_pair_theta(rng);
  thetas[{x2, x3}] = detail::random_pair_theta(rng);
  thetas[{x3, x4}] = detail::random_pair_theta(rng);
  thetas[{x4, x5}] = detail::random_pair_theta(rng);
  McdnModel model(g, marginals, thetas);

  Configuration zeros(g.size(), 0.0);
  double p0 = model.joint_prob(zeros);

  // u_v = F_v(0 | parents at 0); exponents from clique membership counts
  // d = (1, 1, 3, 2, 1).
  auto u = [&](VertexId v) {
    return marginal_cdf(marginals[v], 0.0, zeros);
  };
  const int d[5] = {1, 1, 3, 2, 1};
  double a[5];
  for (int v = 0; v < 5; ++v) a[v] = std::pow(u(v), 1.0 / (d[v] + 1));
  auto edge = [&](VertexId p, VertexId q) {
    double args[2] = {a[p], a[q]};
    return FrankCopula(2, thetas.at({p, q})).cdf(std::span<const double>(args, 2));
  };
  double flat_product = edge(x1, x3) * edge(x2, x3) * edge(x3, x4) * edge(x4, x5) *
                        a[0] * a[1] * a[2] * a[3] * a[4];
  double block_left = edge(x1, x3) * edge(x2, x3) * edge(x3, x4) * a[0] * a[1] * a[2] * a[3];
  double block_right = edge(x4, x5) * a[4];
  return std::max(std::abs(p0 - flat_product), std::abs(p0 - block_left * block_right));
}

}  // namespace mcdn
