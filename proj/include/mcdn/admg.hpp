#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mcdn/text_format.hpp"

namespace mcdn {

using VertexId = int;

enum class VariableKind { ordinal, continuous };

struct Vertex {
  std::string name;
  VariableKind kind = VariableKind::ordinal;
  int cardinality = 2;  // ordinal levels are 0..cardinality-1; unused for continuous
};

// Acyclic directed mixed graph: directed edges (parent -> child) plus
// bi-directed edges.  Vertices are addressed by declaration index, and every
// tie-break in the library falls back to declaration order so results are
// reproducible.  Acyclicity is not enforced while edges are added; validate()
// or topological_order() report directed cycles.
class Admg {
 public:
  VertexId add_vertex(Vertex v) {
    if (v.name.empty()) throw std::invalid_argument("vertex name must not be empty");
    if (find(v.name)) throw std::invalid_argument("duplicate vertex name '" + v.name + "'");
    if (v.kind == VariableKind::ordinal && v.cardinality < 2)
      throw std::invalid_argument("ordinal vertex '" + v.name + "' needs cardinality >= 2");
    vertices_.push_back(std::move(v));
    parents_.emplace_back();
    children_.emplace_back();
    siblings_.emplace_back();
    return static_cast<VertexId>(vertices_.size()) - 1;
  }

  VertexId add_ordinal(const std::string& name, int cardinality = 2) {
    return add_vertex(Vertex{name, VariableKind::ordinal, cardinality});
  }

  VertexId add_continuous(const std::string& name) {
    return add_vertex(Vertex{name, VariableKind::continuous, 0});
  }

  void add_directed_edge(VertexId parent, VertexId child) {
    check_pair(parent, child);
    if (has_directed_edge(parent, child))
      throw std::invalid_argument("duplicate directed edge " + edge_str(parent, child, "->"));
    directed_.emplace_back(parent, child);
    insert_sorted(children_[parent], child);
    insert_sorted(parents_[child], parent);
  }

  void add_bidirected_edge(VertexId a, VertexId b) {
    check_pair(a, b);
    if (a > b) std::swap(a, b);
    if (has_bidirected_edge(a, b))
      throw std::invalid_argument("duplicate bi-directed edge " + edge_str(a, b, "<->"));
    bidirected_.emplace_back(a, b);
    insert_sorted(siblings_[a], b);
    insert_sorted(siblings_[b], a);
  }

  int size() const { return static_cast<int>(vertices_.size()); }
  const Vertex& vertex(VertexId v) const { return vertices_.at(v); }
  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::string& name(VertexId v) const { return vertices_.at(v).name; }
  VariableKind kind(VertexId v) const { return vertices_.at(v).kind; }
  int cardinality(VertexId v) const { return vertices_.at(v).cardinality; }

  std::optional<VertexId> find(const std::string& name) const {
    for (VertexId v = 0; v < size(); ++v)
      if (vertices_[v].name == name) return v;
    return std::nullopt;
  }

  VertexId require(const std::string& name) const {
    if (auto v = find(name)) return *v;
    throw std::invalid_argument("unknown vertex '" + name + "'");
  }

  const std::vector<VertexId>& parents(VertexId v) const { return parents_.at(v); }
  const std::vector<VertexId>& children(VertexId v) const { return children_.at(v); }
  // Bi-directed neighbours.
  const std::vector<VertexId>& siblings(VertexId v) const { return siblings_.at(v); }

  bool has_directed_edge(VertexId a, VertexId b) const {
    return std::binary_search(children_.at(a).begin(), children_.at(a).end(), b);
  }
  bool has_bidirected_edge(VertexId a, VertexId b) const {
    return std::binary_search(siblings_.at(a).begin(), siblings_.at(a).end(), b);
  }

  const std::vector<std::pair<VertexId, VertexId>>& directed_edges() const { return directed_; }
  const std::vector<std::pair<VertexId, VertexId>>& bidirected_edges() const { return bidirected_; }

  // Returns a directed cycle (first vertex repeated at the end) if one exists.
  std::optional<std::vector<VertexId>> find_directed_cycle() const {
    std::vector<int> state(size(), 0);  // 0 new, 1 on stack, 2 done
    std::vector<VertexId> stack;
    std::optional<std::vector<VertexId>> cycle;
    auto dfs = [&](auto&& self, VertexId v) -> bool {
      state[v] = 1;
      stack.push_back(v);
      for (VertexId c : children_[v]) {
        if (cycle) return true;
        if (state[c] == 1) {
          auto it = std::find(stack.begin(), stack.end(), c);
          cycle.emplace(it, stack.end());
          cycle->push_back(c);
          return true;
        }
        if (state[c] == 0 && self(self, c)) return true;
      }
      stack.pop_back();
      state[v] = 2;
      return false;
    };
    for (VertexId v = 0; v < size(); ++v)
      if (state[v] == 0 && dfs(dfs, v)) break;
    return cycle;
  }

  void validate() const {
    if (auto cycle = find_directed_cycle()) {
      std::string msg = "directed cycle:";
      for (VertexId v : *cycle) msg += " " + name(v);
      throw std::invalid_argument(msg);
    }
  }

  // Proper ancestors of v (v excluded), ascending ids.
  std::vector<VertexId> ancestors(VertexId v) const {
    std::vector<char> seen(size(), 0);
    std::vector<VertexId> work{v};
    while (!work.empty()) {
      VertexId u = work.back();
      work.pop_back();
      for (VertexId p : parents_[u])
        if (!seen[p]) seen[p] = 1, work.push_back(p);
    }
    std::vector<VertexId> out;
    for (VertexId u = 0; u < size(); ++u)
      if (seen[u]) out.push_back(u);
    return out;
  }

  // Smallest ancestral set containing `s`.
  std::vector<VertexId> ancestral_closure(const std::vector<VertexId>& s) const {
    std::vector<char> seen(size(), 0);
    std::vector<VertexId> work;
    for (VertexId v : s)
      if (!seen[v]) seen[v] = 1, work.push_back(v);
    while (!work.empty()) {
      VertexId u = work.back();
      work.pop_back();
      for (VertexId p : parents_[u])
        if (!seen[p]) seen[p] = 1, work.push_back(p);
    }
    std::vector<VertexId> out;
    for (VertexId v = 0; v < size(); ++v)
      if (seen[v]) out.push_back(v);
    return out;
  }

  // Kahn's algorithm; among vertices whose parents are all placed, the one
  // declared first goes next.  Throws on a directed cycle.
  std::vector<VertexId> topological_order() const {
    std::vector<int> indeg(size());
    for (VertexId v = 0; v < size(); ++v) indeg[v] = static_cast<int>(parents_[v].size());
    std::vector<VertexId> order;
    std::vector<char> placed(size(), 0);
    for (int step = 0; step < size(); ++step) {
      VertexId pick = -1;
      for (VertexId v = 0; v < size(); ++v)
        if (!placed[v] && indeg[v] == 0) { pick = v; break; }
      if (pick < 0) {
        validate();  // throws with the cycle listed
        throw std::logic_error("topological_order: no admissible vertex");
      }
      placed[pick] = 1;
      order.push_back(pick);
      for (VertexId c : children_[pick]) --indeg[c];
    }
    return order;
  }

  // Induced subgraph on `keep` (any order); vertices appear in declaration
  // order of this graph.  `from_old`, when given, receives old id -> new id
  // (or -1 when dropped).
  Admg induced(const std::vector<VertexId>& keep, std::vector<VertexId>* from_old = nullptr) const {
    std::vector<char> in(size(), 0);
    for (VertexId v : keep) in.at(v) = 1;
    std::vector<VertexId> map(size(), -1);
    Admg out;
    for (VertexId v = 0; v < size(); ++v)
      if (in[v]) map[v] = out.add_vertex(vertices_[v]);
    for (auto [a, b] : directed_)
      if (in[a] && in[b]) out.add_directed_edge(map[a], map[b]);
    for (auto [a, b] : bidirected_)
      if (in[a] && in[b]) out.add_bidirected_edge(map[a], map[b]);
    if (from_old) *from_old = std::move(map);
    return out;
  }

 private:
  void check_pair(VertexId a, VertexId b) const {
    if (a < 0 || b < 0 || a >= size() || b >= size())
      throw std::invalid_argument("edge endpoint out of range");
    if (a == b) throw std::invalid_argument("self loop on '" + name(a) + "'");
  }

  std::string edge_str(VertexId a, VertexId b, const char* arrow) const {
    return name(a) + " " + arrow + " " + name(b);
  }

  static void insert_sorted(std::vector<VertexId>& v, VertexId x) {
    v.insert(std::upper_bound(v.begin(), v.end(), x), x);
  }

  std::vector<Vertex> vertices_;
  std::vector<std::pair<VertexId, VertexId>> directed_;
  std::vector<std::pair<VertexId, VertexId>> bidirected_;  // stored with first < second
  std::vector<std::vector<VertexId>> parents_, children_, siblings_;
};

// ---------------------------------------------------------------------------
// Graph text format.  One directive per line, '#' starts a comment:
//   var <name> ordinal <k>
//   var <name> continuous
//   edge <a> -> <b>
//   edge <a> <-> <b>

inline Admg parse_graph(std::istream& in, std::string_view source = "<graph>") {
  Admg g;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tok = detail::tokenize(line);
    if (tok.empty()) continue;
    if (tok[0] == "var") {
      if (tok.size() < 3) throw ParseError(source, line_no, "var needs a name and a kind");
      if (tok[2] == "ordinal") {
        if (tok.size() != 4) throw ParseError(source, line_no, "ordinal var needs a cardinality");
        long card = detail::parse_long(tok[3], source, line_no);
        if (card < 2) throw ParseError(source, line_no, "cardinality must be >= 2");
        try {
          g.add_ordinal(tok[1], static_cast<int>(card));
        } catch (const std::invalid_argument& e) {
          throw ParseError(source, line_no, e.what());
        }
      } else if (tok[2] == "continuous") {
        if (tok.size() != 3) throw ParseError(source, line_no, "unexpected token after 'continuous'");
        try {
          g.add_continuous(tok[1]);
        } catch (const std::invalid_argument& e) {
          throw ParseError(source, line_no, e.what());
        }
      } else {
        throw ParseError(source, line_no, "unknown variable kind '" + tok[2] + "'");
      }
    } else if (tok[0] == "edge") {
      if (tok.size() != 4 || (tok[2] != "->" && tok[2] != "<->"))
        throw ParseError(source, line_no, "expected 'edge <a> -> <b>' or 'edge <a> <-> <b>'");
      auto a = g.find(tok[1]), b = g.find(tok[3]);
      if (!a) throw ParseError(source, line_no, "unknown vertex '" + tok[1] + "'");
      if (!b) throw ParseError(source, line_no, "unknown vertex '" + tok[3] + "'");
      try {
        if (tok[2] == "->")
          g.add_directed_edge(*a, *b);
        else
          g.add_bidirected_edge(*a, *b);
      } catch (const std::invalid_argument& e) {
        throw ParseError(source, line_no, e.what());
      }
    } else {
      throw ParseError(source, line_no, "unknown directive '" + tok[0] + "'");
    }
  }
  return g;
}

inline Admg parse_graph(const std::string& text, std::string_view source = "<graph>") {
  std::istringstream in(text);
  return parse_graph(in, source);
}

inline Admg read_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file '" + path + "'");
  return parse_graph(in, path);
}

inline std::string format_graph(const Admg& g) {
  std::string out;
  for (VertexId v = 0; v < g.size(); ++v) {
    const Vertex& vx = g.vertex(v);
    out += "var " + vx.name;
    if (vx.kind == VariableKind::ordinal)
      out += " ordinal " + std::to_string(vx.cardinality);
    else
      out += " continuous";
    out += "\n";
  }
  for (auto [a, b] : g.directed_edges()) out += "edge " + g.name(a) + " -> " + g.name(b) + "\n";
  for (auto [a, b] : g.bidirected_edges()) out += "edge " + g.name(a) + " <-> " + g.name(b) + "\n";
  return out;
}

inline void write_graph_file(const Admg& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write graph file '" + path + "'");
  out << format_graph(g);
}

}  // namespace mcdn
