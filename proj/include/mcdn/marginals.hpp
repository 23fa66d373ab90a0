#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mcdn/admg.hpp"

namespace mcdn {

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.7071067811865475244); }

inline double normal_logpdf(double z) {
  return -0.5 * z * z - 0.91893853320467274178;  // log sqrt(2*pi)
}

// Reads an ordinal value out of a configuration slot; values must be integral.
inline int ordinal_value(double x, int cardinality, const std::string& what) {
  double r = std::nearbyint(x);
  if (!(std::abs(x - r) < 1e-9))
    throw std::invalid_argument(what + ": expected an integer level, got " + std::to_string(x));
  int level = static_cast<int>(r);
  if (level < 0 || level >= cardinality)
    throw std::invalid_argument(what + ": level " + std::to_string(level) + " out of range");
  return level;
}

}  // namespace detail

// Conditional probability table for an ordinal vertex.  `probs` holds one
// probability vector per joint parent configuration; configurations are
// indexed with the first parent most significant.
struct OrdinalMarginal {
  VertexId vertex = -1;
  std::vector<VertexId> parents;
  std::vector<int> parent_cards;
  int cardinality = 2;
  std::vector<double> probs;  // [config * cardinality + level]
  double alpha = 0.0;         // smoothing pseudo-count used when fitted

  int config_count() const {
    int c = 1;
    for (int k : parent_cards) c *= k;
    return c;
  }

  // Parent configuration index, parent values read from a full configuration
  // indexed by vertex id.
  int config_index(std::span<const double> config) const {
    int idx = 0;
    for (std::size_t i = 0; i < parents.size(); ++i) {
      int level = detail::ordinal_value(config[parents[i]], parent_cards[i],
                                        "parent value of vertex " + std::to_string(vertex));
      idx = idx * parent_cards[i] + level;
    }
    return idx;
  }

  double pmf_level(int level, int cfg) const { return probs.at(cfg * cardinality + level); }

  // Cumulative sum up to `level`; below-minimum levels give 0, the top level
  // (or anything above) gives 1 exactly.
  double cdf_level(int level, int cfg) const {
    if (level < 0) return 0.0;
    if (level >= cardinality - 1) return 1.0;
    double s = 0.0;
    for (int l = 0; l <= level; ++l) s += probs.at(cfg * cardinality + l);
    return s;
  }

  void validate() const {
    if (cardinality < 2) throw std::invalid_argument("ordinal marginal needs cardinality >= 2");
    if (parents.size() != parent_cards.size())
      throw std::invalid_argument("parent/cardinality list size mismatch");
    if (static_cast<int>(probs.size()) != config_count() * cardinality)
      throw std::invalid_argument("ordinal table has the wrong number of entries");
    for (int c = 0; c < config_count(); ++c) {
      double s = 0.0;
      for (int l = 0; l < cardinality; ++l) {
        double p = probs[c * cardinality + l];
        if (p < 0.0) throw std::invalid_argument("negative probability in ordinal table");
        s += p;
      }
      if (std::abs(s - 1.0) > 1e-12)
        throw std::invalid_argument("ordinal table row does not sum to 1");
    }
  }
};

enum class RegressionBasis { affine };  // intercept plus one identity term per parent

// Conditional Gaussian marginal: mean is a linear function of fixed basis
// expansions of the parents, variance is constant.
struct GaussianMarginal {
  VertexId vertex = -1;
  std::vector<VertexId> parents;
  std::vector<double> weights;  // intercept followed by one weight per parent
  double variance = 1.0;
  RegressionBasis basis = RegressionBasis::affine;

  double mean(std::span<const double> config) const {
    double m = weights.at(0);
    for (std::size_t i = 0; i < parents.size(); ++i) m += weights.at(i + 1) * config[parents[i]];
    return m;
  }

  double cdf(double x, std::span<const double> config) const {
    if (x == std::numeric_limits<double>::infinity()) return 1.0;
    if (x == -std::numeric_limits<double>::infinity()) return 0.0;
    return detail::normal_cdf((x - mean(config)) / std::sqrt(variance));
  }

  double logpdf(double x, std::span<const double> config) const {
    double sd = std::sqrt(variance);
    return detail::normal_logpdf((x - mean(config)) / sd) - std::log(sd);
  }

  void validate() const {
    if (variance <= 0.0) throw std::invalid_argument("gaussian marginal needs variance > 0");
    if (weights.size() != parents.size() + 1)
      throw std::invalid_argument("gaussian marginal weight count does not match basis");
  }
};

using Marginal = std::variant<OrdinalMarginal, GaussianMarginal>;

inline VertexId marginal_vertex(const Marginal& m) {
  return std::visit([](const auto& x) { return x.vertex; }, m);
}

inline const std::vector<VertexId>& marginal_parents(const Marginal& m) {
  return std::visit([](const auto& x) -> const std::vector<VertexId>& { return x.parents; }, m);
}

// F_v(x | parents); x may be +/-infinity, ordinal x may also sit below the
// minimum level (giving 0) or at/above the top level (giving 1).
inline double marginal_cdf(const Marginal& m, double x, std::span<const double> config) {
  if (const auto* o = std::get_if<OrdinalMarginal>(&m)) {
    int cfg = o->config_index(config);
    if (x == std::numeric_limits<double>::infinity()) return 1.0;
    if (x == -std::numeric_limits<double>::infinity()) return 0.0;
    double r = std::nearbyint(x);
    if (!(std::abs(x - r) < 1e-9))
      throw std::invalid_argument("ordinal cdf: expected an integer level");
    double level = r;
    if (level < 0) return 0.0;
    if (level >= o->cardinality) return 1.0;
    return o->cdf_level(static_cast<int>(level), cfg);
  }
  return std::get<GaussianMarginal>(m).cdf(x, config);
}

// Log mass (ordinal) or log density (continuous) of the observed value.
inline double marginal_log_prob(const Marginal& m, double x, std::span<const double> config) {
  if (const auto* o = std::get_if<OrdinalMarginal>(&m)) {
    int level = detail::ordinal_value(x, o->cardinality, "vertex " + std::to_string(o->vertex));
    return std::log(o->pmf_level(level, o->config_index(config)));
  }
  return std::get<GaussianMarginal>(m).logpdf(x, config);
}

}  // namespace mcdn
