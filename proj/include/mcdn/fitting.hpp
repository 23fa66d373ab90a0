#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mcdn/dataset.hpp"
#include "mcdn/marginals.hpp"

namespace mcdn {

struct FitOptions {
  double alpha = 1.0;  // pseudo-count added to every ordinal cell; 0 gives raw frequencies
};

struct FitResult {
  std::vector<Marginal> marginals;  // one per vertex, in declaration order
  std::vector<std::string> warnings;
};

// Step one of the two-stage estimator: maximum-likelihood conditional
// marginals.  Ordinal vertices get smoothed frequency tables; continuous
// vertices get a least-squares affine regression on their parents with the
// maximum-likelihood residual variance.
inline FitResult fit_marginals(const Admg& g, const Dataset& data, const FitOptions& opts = {}) {
  if (opts.alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
  auto col = bind_columns(g, data);
  const std::size_t n = data.rows();
  FitResult out;
  for (VertexId v = 0; v < g.size(); ++v) {
    if (g.kind(v) == VariableKind::ordinal) {
      OrdinalMarginal m;
      m.vertex = v;
      m.cardinality = g.cardinality(v);
      m.parents = g.parents(v);
      m.alpha = opts.alpha;
      int configs = 1;
      for (VertexId p : m.parents) {
        if (g.kind(p) != VariableKind::ordinal)
          throw std::invalid_argument("ordinal vertex '" + g.name(v) +
                                      "' has a continuous parent");
        m.parent_cards.push_back(g.cardinality(p));
        configs *= g.cardinality(p);
      }
      std::vector<double> counts(static_cast<std::size_t>(configs) * m.cardinality, opts.alpha);
      for (std::size_t r = 0; r < n; ++r) {
        int cfg = 0;
        for (std::size_t i = 0; i < m.parents.size(); ++i) {
          int level = detail::ordinal_value(data.at(r, col[m.parents[i]]), m.parent_cards[i],
                                            "column " + g.name(m.parents[i]));
          cfg = cfg * m.parent_cards[i] + level;
        }
        int level = detail::ordinal_value(data.at(r, col[v]), m.cardinality, "column " + g.name(v));
        counts[static_cast<std::size_t>(cfg) * m.cardinality + level] += 1.0;
      }
      m.probs.resize(counts.size());
      for (int c = 0; c < configs; ++c) {
        double total = 0.0;
        for (int l = 0; l < m.cardinality; ++l) total += counts[c * m.cardinality + l];
        if (total == 0.0) {
          out.warnings.push_back("vertex " + g.name(v) + ": parent configuration " +
                                 std::to_string(c) + " unseen; using a uniform row");
          for (int l = 0; l < m.cardinality; ++l)
            m.probs[c * m.cardinality + l] = 1.0 / m.cardinality;
        } else {
          for (int l = 0; l < m.cardinality; ++l)
            m.probs[c * m.cardinality + l] = counts[c * m.cardinality + l] / total;
        }
      }
      out.marginals.emplace_back(std::move(m));
    } else {
      GaussianMarginal m;
      m.vertex = v;
      m.parents = g.parents(v);
      const std::size_t k = m.parents.size() + 1;
      if (n == 0) throw std::invalid_argument("cannot fit a continuous marginal with no rows");
      Eigen::MatrixXd a(n, k);
      Eigen::VectorXd b(n);
      for (std::size_t r = 0; r < n; ++r) {
        a(r, 0) = 1.0;
        for (std::size_t i = 0; i < m.parents.size(); ++i)
          a(r, i + 1) = data.at(r, col[m.parents[i]]);
        b(r) = data.at(r, col[v]);
      }
      Eigen::MatrixXd normal = a.transpose() * a;
      Eigen::VectorXd rhs = a.transpose() * b;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        normal.diagonal().array() += 1e-10 * (normal.trace() / k + 1.0);
        ldlt.compute(normal);
        out.warnings.push_back("vertex " + g.name(v) +
                               ": rank-deficient regression, ridge fallback used");
      }
      Eigen::VectorXd w = ldlt.solve(rhs);
      double rss = (b - a * w).squaredNorm();
      m.weights.assign(w.data(), w.data() + k);
      m.variance = rss / static_cast<double>(n);
      if (m.variance < 1e-12) {
        m.variance = 1e-12;
        out.warnings.push_back("vertex " + g.name(v) + ": zero residual variance, floored");
      }
      out.marginals.emplace_back(std::move(m));
    }
  }
  return out;
}

// Step two: the per-row conditional-CDF values the copulas consume.  Ordinal
// entries carry both lattice values needed by inclusion-exclusion (u at the
// observed level and at the level below); continuous entries carry the single
// CDF value plus the marginal log-density.
struct PseudoData {
  std::size_t rows = 0;
  std::size_t vars = 0;
  std::vector<double> u_hi;            // rows x vars
  std::vector<double> u_lo;            // rows x vars; NaN for continuous entries
  std::vector<double> marginal_logpdf;  // rows x vars; 0 for ordinal entries
  std::vector<char> ordinal;           // per vertex

  double hi(std::size_t r, std::size_t v) const { return u_hi[r * vars + v]; }
  double lo(std::size_t r, std::size_t v) const { return u_lo[r * vars + v]; }
  double logpdf(std::size_t r, std::size_t v) const { return marginal_logpdf[r * vars + v]; }
};

inline PseudoData pseudodata(const Admg& g, const std::vector<Marginal>& marginals,
                             const Dataset& data) {
  if (marginals.size() != static_cast<std::size_t>(g.size()))
    throw std::invalid_argument("one marginal per vertex required");
  auto col = bind_columns(g, data);
  PseudoData pd;
  pd.rows = data.rows();
  pd.vars = marginals.size();
  pd.u_hi.resize(pd.rows * pd.vars);
  pd.u_lo.resize(pd.rows * pd.vars);
  pd.marginal_logpdf.assign(pd.rows * pd.vars, 0.0);
  pd.ordinal.resize(pd.vars);
  std::vector<double> config(g.size());
  for (std::size_t r = 0; r < pd.rows; ++r) {
    for (VertexId v = 0; v < g.size(); ++v) config[v] = data.at(r, col[v]);
    for (std::size_t v = 0; v < pd.vars; ++v) {
      std::size_t at = r * pd.vars + v;
      if (const auto* o = std::get_if<OrdinalMarginal>(&marginals[v])) {
        pd.ordinal[v] = 1;
        int cfg = o->config_index(config);
        int level = detail::ordinal_value(config[v], o->cardinality, "column " + g.name(v));
        pd.u_hi[at] = o->cdf_level(level, cfg);
        pd.u_lo[at] = o->cdf_level(level - 1, cfg);
      } else {
        const auto& m = std::get<GaussianMarginal>(marginals[v]);
        pd.ordinal[v] = 0;
        pd.u_hi[at] = m.cdf(config[v], config);
        pd.u_lo[at] = std::numeric_limits<double>::quiet_NaN();
        pd.marginal_logpdf[at] = m.logpdf(config[v], config);
      }
    }
  }
  return pd;
}

}  // namespace mcdn
