#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mcdn/dataset.hpp"
#include "mcdn/district_factor.hpp"
#include "mcdn/districts.hpp"
#include "mcdn/params.hpp"
#include "mcdn/rng.hpp"
#include "mcdn/separation.hpp"

namespace mcdn {

// A complete joint assignment, indexed by vertex id of the model's graph.
// Coordinates may be +infinity for CDF-style queries.
using Configuration = std::vector<double>;

struct LoglikOptions {
  bool skip_zero_rows = false;  // otherwise a zero-probability row makes the total -inf
};

struct LoglikResult {
  double log_likelihood = 0.0;
  std::vector<std::size_t> zero_rows;
  std::size_t rows_used = 0;
};

// Exhaustively enumerated joint over ordinal vertices; vertex 0 is the least
// significant digit of the configuration index.
struct JointTable {
  std::vector<int> cards;
  std::vector<double> p;

  std::size_t config_count() const { return p.size(); }

  std::size_t index(std::span<const int> levels) const {
    std::size_t idx = 0;
    for (std::size_t v = cards.size(); v-- > 0;) idx = idx * cards[v] + levels[v];
    return idx;
  }

  void decode(std::size_t idx, std::span<int> levels) const {
    for (std::size_t v = 0; v < cards.size(); ++v) {
      levels[v] = static_cast<int>(idx % cards[v]);
      idx /= cards[v];
    }
  }

  double sum() const {
    double s = 0.0;
    for (double v : p) s += v;
    return s;
  }

  // Largest violation of X independent of Y given Z over all configurations:
  //   max_z max_{x,y} | P(x,y|z) - P(x|z) P(y|z) |,
  // contexts with P(z) below `min_context` skipped.
  double ci_violation(std::span<const VertexId> x, std::span<const VertexId> y,
                      std::span<const VertexId> z, double min_context = 1e-12) const {
    std::size_t nx = block_size(x), ny = block_size(y), nz = block_size(z);
    std::vector<double> pxyz(nx * ny * nz, 0.0);
    std::vector<int> levels(cards.size());
    for (std::size_t idx = 0; idx < p.size(); ++idx) {
      decode(idx, levels);
      std::size_t ix = block_index(x, levels), iy = block_index(y, levels),
                  iz = block_index(z, levels);
      pxyz[(iz * nx + ix) * ny + iy] += p[idx];
    }
    double worst = 0.0;
    for (std::size_t iz = 0; iz < nz; ++iz) {
      double pz = 0.0;
      std::vector<double> px(nx, 0.0), py(ny, 0.0);
      for (std::size_t ix = 0; ix < nx; ++ix)
        for (std::size_t iy = 0; iy < ny; ++iy) {
          double v = pxyz[(iz * nx + ix) * ny + iy];
          pz += v;
          px[ix] += v;
          py[iy] += v;
        }
      if (pz < min_context) continue;
      for (std::size_t ix = 0; ix < nx; ++ix)
        for (std::size_t iy = 0; iy < ny; ++iy) {
          double v = std::abs(pxyz[(iz * nx + ix) * ny + iy] / pz - (px[ix] / pz) * (py[iy] / pz));
          if (v > worst) worst = v;
        }
    }
    return worst;
  }

 private:
  std::size_t block_size(std::span<const VertexId> vs) const {
    std::size_t n = 1;
    for (VertexId v : vs) n *= cards[v];
    return n;
  }
  std::size_t block_index(std::span<const VertexId> vs, std::span<const int> levels) const {
    std::size_t idx = 0;
    for (VertexId v : vs) idx = idx * cards[v] + levels[v];
    return idx;
  }
};

struct MarkovCheckOptions {
  double tolerance = 1e-8;
  int msep_triples = 20;
  std::uint64_t seed = 0;
  ConstraintScope scope = ConstraintScope::automatic;
  double min_context_prob = 1e-12;
};

struct MarkovReport {
  double max_violation = 0.0;
  std::size_t constraints_checked = 0;
  std::size_t triples_checked = 0;
  std::string worst;  // description of the worst constraint
  double tolerance = 0.0;
  bool passed() const { return max_violation <= tolerance; }
};

// The assembled joint model: districts of the (artificially transformed when
// necessary) graph, each carrying its member marginals and product copula.
// Star vertices are bookkeeping only -- they are pinned to their originals,
// their factors are identically one, and every public surface works with
// configurations over the original vertex set.
class McdnModel {
 public:
  McdnModel(Admg graph, std::vector<Marginal> marginals,
            const std::map<std::vector<VertexId>, double>& clique_thetas)
      : graph_(std::move(graph)) {
    graph_.validate();
    const int n = graph_.size();
    if (static_cast<int>(marginals.size()) != n)
      throw std::invalid_argument("one marginal per vertex required");
    for (VertexId v = 0; v < n; ++v) {
      const Marginal& m = marginals[v];
      if (marginal_vertex(m) != v) throw std::invalid_argument("marginals out of order");
      if (marginal_parents(m) != graph_.parents(v))
        throw std::invalid_argument("marginal for '" + graph_.name(v) +
                                    "' does not condition on its graph parents");
      bool ordinal = std::holds_alternative<OrdinalMarginal>(m);
      if (ordinal != (graph_.kind(v) == VariableKind::ordinal))
        throw std::invalid_argument("marginal kind mismatch for '" + graph_.name(v) + "'");
      if (ordinal && std::get<OrdinalMarginal>(m).cardinality != graph_.cardinality(v))
        throw std::invalid_argument("cardinality mismatch for '" + graph_.name(v) + "'");
    }

    bool all_barren = true;
    for (const District& d : districts(graph_))
      if (!is_barren(d)) all_barren = false;
    if (all_barren) {
      eval_graph_ = graph_;
      star_of_.assign(n, -1);
    } else {
      ArtificialTransform t = transform_artificial(graph_);
      eval_graph_ = std::move(t.graph);
      star_of_ = std::move(t.star_of);
      transformed_ = true;
    }

    std::size_t used_thetas = 0;
    for (District& d : districts(eval_graph_)) {
      if (d.members.front() >= n) continue;  // star singleton, factor == 1
      std::vector<Marginal> member_marginals;
      std::vector<double> thetas;
      for (VertexId m : d.members) member_marginals.push_back(marginals[m]);
      for (const auto& clique : d.cliques) {
        auto it = clique_thetas.find(clique);
        if (it == clique_thetas.end()) {
          std::string names;
          for (VertexId v : clique) names += (names.empty() ? "" : " ") + graph_.name(v);
          throw std::invalid_argument("missing theta for clique {" + names + "}");
        }
        thetas.push_back(it->second);
        ++used_thetas;
      }
      factors_.emplace_back(std::move(d), std::move(member_marginals), thetas);
    }
    if (used_thetas != clique_thetas.size())
      throw std::invalid_argument("parameter set names cliques that are not in the graph");
    marginals_ = std::move(marginals);
  }

  static McdnModel from_params(const Admg& graph, const ModelParams& params) {
    const int n = graph.size();
    std::vector<Marginal> marginals;
    for (VertexId v = 0; v < n; ++v) {
      const MarginalParams* mp = params.find_marginal(graph.name(v));
      if (!mp) throw std::invalid_argument("parameters missing marginal for '" + graph.name(v) + "'");
      if (graph.kind(v) == VariableKind::ordinal) {
        const auto* op = std::get_if<OrdinalMarginalParams>(mp);
        if (!op) throw std::invalid_argument("'" + graph.name(v) + "' needs an ordinal marginal");
        OrdinalMarginal m;
        m.vertex = v;
        m.cardinality = op->cardinality;
        m.alpha = op->alpha;
        for (const auto& pname : op->parents) m.parents.push_back(graph.require(pname));
        if (m.parents != graph.parents(v))
          throw std::invalid_argument("parameter parents for '" + graph.name(v) +
                                      "' do not match the graph");
        if (op->parent_cards.size() != m.parents.size())
          throw std::invalid_argument("parent-levels for '" + graph.name(v) +
                                      "' do not match the parent list");
        for (std::size_t i = 0; i < m.parents.size(); ++i) {
          m.parent_cards.push_back(graph.cardinality(m.parents[i]));
          if (op->parent_cards[i] != m.parent_cards[i])
            throw std::invalid_argument("parent-levels for '" + graph.name(v) +
                                        "' do not match the graph");
        }
        m.probs = op->table;
        marginals.push_back(std::move(m));
      } else {
        const auto* gp = std::get_if<GaussianMarginalParams>(mp);
        if (!gp) throw std::invalid_argument("'" + graph.name(v) + "' needs a continuous marginal");
        GaussianMarginal m;
        m.vertex = v;
        for (const auto& pname : gp->parents) m.parents.push_back(graph.require(pname));
        if (m.parents != graph.parents(v))
          throw std::invalid_argument("parameter parents for '" + graph.name(v) +
                                      "' do not match the graph");
        m.weights = gp->weights;
        m.variance = gp->variance;
        marginals.push_back(std::move(m));
      }
    }
    if (params.marginals.size() != static_cast<std::size_t>(n))
      throw std::invalid_argument("parameter file names a vertex that is not in the graph");
    std::map<std::vector<VertexId>, double> thetas;
    for (const auto& c : params.cliques) {
      std::vector<VertexId> ids;
      for (const auto& name : c.members) ids.push_back(graph.require(name));
      std::sort(ids.begin(), ids.end());
      if (!thetas.emplace(std::move(ids), c.theta).second)
        throw std::invalid_argument("duplicate clique parameter block");
    }
    return McdnModel(graph, std::move(marginals), thetas);
  }

  const Admg& graph() const { return graph_; }
  const Admg& evaluation_graph() const { return eval_graph_; }
  bool transformed() const { return transformed_; }
  const std::vector<VertexId>& star_of() const { return star_of_; }
  const std::vector<DistrictFactor>& factors() const { return factors_; }
  const std::vector<Marginal>& marginals() const { return marginals_; }

  bool all_ordinal() const {
    for (const auto& f : factors_)
      if (!f.all_ordinal()) return false;
    return true;
  }

  double joint_log_prob(const Configuration& x) const {
    validate_configuration(x);
    double total = 0.0;
    for (const auto& f : factors_) {
      total += f.log_value(x);
      if (total == -std::numeric_limits<double>::infinity()) return total;
    }
    return total;
  }

  double joint_prob(const Configuration& x) const { return std::exp(joint_log_prob(x)); }

  LoglikResult loglik(const Dataset& data, const LoglikOptions& opts = {}) const {
    auto col = bind_columns(graph_, data);
    LoglikResult out;
    Configuration x(graph_.size());
    for (std::size_t r = 0; r < data.rows(); ++r) {
      for (VertexId v = 0; v < graph_.size(); ++v) x[v] = data.at(r, col[v]);
      double lp = joint_log_prob(x);
      if (lp == -std::numeric_limits<double>::infinity()) {
        out.zero_rows.push_back(r);
        if (!opts.skip_zero_rows) out.log_likelihood = lp;
        continue;
      }
      if (out.log_likelihood != -std::numeric_limits<double>::infinity())
        out.log_likelihood += lp;
      ++out.rows_used;
    }
    return out;
  }

  // Full joint over all (ordinal) configurations of the original vertices.
  JointTable enumerate_joint() const {
    if (!all_ordinal())
      throw std::invalid_argument("enumeration needs an all-ordinal model");
    JointTable t;
    std::size_t count = 1;
    for (VertexId v = 0; v < graph_.size(); ++v) {
      t.cards.push_back(graph_.cardinality(v));
      count *= static_cast<std::size_t>(t.cards.back());
      if (count > (1u << 20))
        throw std::invalid_argument("too many configurations to enumerate");
    }
    t.p.resize(count);
    std::vector<int> levels(graph_.size(), 0);
    Configuration x(graph_.size());
    for (std::size_t idx = 0; idx < count; ++idx) {
      t.decode(idx, levels);
      for (VertexId v = 0; v < graph_.size(); ++v) x[v] = levels[v];
      t.p[idx] = joint_prob(x);
    }
    return t;
  }

  // Enumerates the joint and tests every ordered-local-Markov constraint of
  // the graph plus a sample of random m-separation statements against it.
  MarkovReport check_markov(const MarkovCheckOptions& opts = {}) const {
    JointTable table = enumerate_joint();
    MarkovReport report;
    report.tolerance = opts.tolerance;
    auto describe = [&](std::span<const VertexId> x, std::span<const VertexId> y,
                        std::span<const VertexId> z) {
      std::string s;
      for (VertexId v : x) s += graph_.name(v) + " ";
      s += "_||_";
      for (VertexId v : y) s += " " + graph_.name(v);
      s += " |";
      if (z.empty()) s += " {}";
      for (VertexId v : z) s += " " + graph_.name(v);
      return s;
    };
    auto record = [&](double violation, const std::string& what) {
      if (violation > report.max_violation) {
        report.max_violation = violation;
        report.worst = what;
      }
    };
    for (const auto& c : ordered_local_constraints(graph_, opts.scope)) {
      std::vector<VertexId> target{c.target};
      double v = table.ci_violation(target, c.independent_of, c.conditioning,
                                    opts.min_context_prob);
      record(v, describe(target, c.independent_of, c.conditioning));
      ++report.constraints_checked;
    }
    Rng rng(mix_seed(opts.seed, 0x6d5e));
    const int n = graph_.size();
    int attempts = 0;
    while (report.triples_checked < static_cast<std::size_t>(opts.msep_triples) &&
           attempts < opts.msep_triples * 200) {
      ++attempts;
      std::vector<VertexId> x, y, z;
      for (VertexId v = 0; v < n; ++v) {
        switch (rng.index(4)) {
          case 0: x.push_back(v); break;
          case 1: y.push_back(v); break;
          case 2: z.push_back(v); break;
          default: break;
        }
      }
      if (x.empty() || y.empty()) continue;
      if (!m_separated(graph_, x, y, z)) continue;
      double v = table.ci_violation(x, y, z, opts.min_context_prob);
      record(v, describe(x, y, z));
      ++report.triples_checked;
    }
    return report;
  }

  // Exact sampling by enumerating the joint; deterministic for a given seed.
  Dataset sample_ordinal(std::size_t n, std::uint64_t seed) const {
    JointTable table = enumerate_joint();
    std::vector<double> cum(table.p.size());
    double total = 0.0;
    for (std::size_t i = 0; i < table.p.size(); ++i) cum[i] = (total += table.p[i]);
    Dataset out;
    for (VertexId v = 0; v < graph_.size(); ++v) out.columns.push_back(graph_.name(v));
    Rng rng(seed);
    std::vector<int> levels(graph_.size());
    std::vector<double> row(graph_.size());
    for (std::size_t k = 0; k < n; ++k) {
      double u = rng.uniform() * total;
      std::size_t idx = std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
      if (idx >= table.p.size()) idx = table.p.size() - 1;
      table.decode(idx, levels);
      for (std::size_t v = 0; v < row.size(); ++v) row[v] = levels[v];
      out.append_row(row);
    }
    return out;
  }

  // Parameters in serializable form; round-trips through the text format.
  ModelParams params() const {
    ModelParams p;
    for (VertexId v = 0; v < graph_.size(); ++v) {
      if (const auto* o = std::get_if<OrdinalMarginal>(&marginals_[v])) {
        OrdinalMarginalParams op;
        op.cardinality = o->cardinality;
        op.alpha = o->alpha;
        for (VertexId pa : o->parents) op.parents.push_back(graph_.name(pa));
        op.parent_cards = o->parent_cards;
        op.table = o->probs;
        p.marginals.emplace_back(graph_.name(v), std::move(op));
      } else {
        const auto& gm = std::get<GaussianMarginal>(marginals_[v]);
        GaussianMarginalParams gp;
        for (VertexId pa : gm.parents) gp.parents.push_back(graph_.name(pa));
        gp.weights = gm.weights;
        gp.variance = gm.variance;
        p.marginals.emplace_back(graph_.name(v), std::move(gp));
      }
    }
    for (const auto& f : factors_) {
      const auto& cliques = f.district().cliques;
      for (std::size_t s = 0; s < cliques.size(); ++s) {
        CliqueTheta ct;
        for (VertexId v : cliques[s]) ct.members.push_back(graph_.name(v));
        std::sort(ct.members.begin(), ct.members.end());
        ct.theta = f.copula().clique_copulas()[s].theta();
        p.cliques.push_back(std::move(ct));
      }
    }
    return p;
  }

 private:
  void validate_configuration(const Configuration& x) const {
    if (x.size() != static_cast<std::size_t>(graph_.size()))
      throw std::invalid_argument("configuration size does not match the vertex count");
    for (VertexId v = 0; v < graph_.size(); ++v) {
      if (graph_.kind(v) == VariableKind::ordinal)
        detail::ordinal_value(x[v], graph_.cardinality(v), "vertex " + graph_.name(v));
      else if (!std::isfinite(x[v]))
        throw std::invalid_argument("non-finite value for vertex " + graph_.name(v));
    }
  }

  Admg graph_;
  Admg eval_graph_;
  bool transformed_ = false;
  std::vector<VertexId> star_of_;
  std::vector<Marginal> marginals_;
  std::vector<DistrictFactor> factors_;
};

}  // namespace mcdn
