#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcdn/districts.hpp"
#include "mcdn/fitting.hpp"
#include "mcdn/rng.hpp"

namespace mcdn {

// The part of a model that survives once the marginals are fitted and frozen:
// districts (of the transformed graph when needed), their cliques, and which
// global copula parameter each clique uses.  Evaluating the likelihood of a
// theta vector against pseudodata is the inner loop of the MH sampler.
class CopulaStructure {
 public:
  struct DistrictSpec {
    std::vector<VertexId> members;               // original-graph ids
    std::vector<std::vector<int>> clique_positions;  // into members
    std::vector<std::size_t> clique_params;      // into the global theta vector
    bool ordinal = true;
    bool tree = false;
  };

  explicit CopulaStructure(const Admg& g) {
    g.validate();
    const int n = g.size();
    bool all_barren = true;
    for (const District& d : districts(g))
      if (!is_barren(d)) all_barren = false;
    const Admg* eval = &g;
    Admg transformed;
    if (!all_barren) {
      transformed = transform_artificial(g).graph;
      eval = &transformed;
    }
    for (const District& d : districts(*eval)) {
      if (d.members.front() >= n) continue;  // star singleton
      DistrictSpec spec;
      spec.members = d.members;
      spec.ordinal = g.kind(d.members.front()) == VariableKind::ordinal;
      for (VertexId m : d.members)
        if ((g.kind(m) == VariableKind::ordinal) != spec.ordinal)
          throw std::invalid_argument("mixed ordinal/continuous district is unsupported");
      for (const auto& clique : d.cliques) {
        std::vector<int> pos;
        for (VertexId v : clique) {
          auto it = std::lower_bound(d.members.begin(), d.members.end(), v);
          pos.push_back(static_cast<int>(it - d.members.begin()));
        }
        spec.clique_positions.push_back(std::move(pos));
        spec.clique_params.push_back(clique_members_.size());
        clique_members_.push_back(clique);
      }
      ProductCopula probe(static_cast<int>(spec.members.size()), spec.clique_positions,
                          std::vector<double>(spec.clique_positions.size(), 0.0));
      spec.tree = probe.has_tree_structure();
      districts_.push_back(std::move(spec));
    }
  }

  const std::vector<DistrictSpec>& district_specs() const { return districts_; }
  const std::vector<std::vector<VertexId>>& clique_members() const { return clique_members_; }
  std::size_t parameter_count() const { return clique_members_.size(); }

  // Cliques of three or more vertices need theta > 0, so they are sampled on
  // the log scale; pairs use the identity scale (theta near 0 already means
  // independence there).
  bool log_scale(std::size_t k) const { return clique_members_[k].size() >= 3; }

  std::vector<double> natural_theta(std::span<const double> transformed) const {
    std::vector<double> theta(transformed.begin(), transformed.end());
    for (std::size_t k = 0; k < theta.size(); ++k)
      if (log_scale(k)) theta[k] = std::exp(theta[k]);
    return theta;
  }

  // Independence initialization: 0 on the identity scale, log of a clipped
  // near-zero theta on the log scale.
  std::vector<double> initial_transformed() const {
    std::vector<double> t(parameter_count(), 0.0);
    for (std::size_t k = 0; k < t.size(); ++k)
      if (log_scale(k)) t[k] = std::log(1e-3);
    return t;
  }

  // log p(data | theta) with the marginals absorbed into the pseudodata.
  // Ordinal districts contribute inclusion-exclusion masses, continuous
  // districts the copula density plus the (theta-independent) marginal
  // log-densities, so the value is the full data log-likelihood.
  double log_likelihood(const PseudoData& pd, std::span<const double> theta) const {
    double total = 0.0;
    std::vector<double> u_hi, u_lo, u;
    for (const auto& spec : districts_) {
      std::vector<double> local_theta;
      for (std::size_t k : spec.clique_params) local_theta.push_back(theta[k]);
      ProductCopula copula(static_cast<int>(spec.members.size()), spec.clique_positions,
                           local_theta);
      const std::size_t m = spec.members.size();
      u_hi.resize(m);
      u_lo.resize(m);
      u.resize(m);
      for (std::size_t r = 0; r < pd.rows; ++r) {
        double term;
        if (spec.ordinal) {
          for (std::size_t i = 0; i < m; ++i) {
            u_hi[i] = pd.hi(r, spec.members[i]);
            u_lo[i] = pd.lo(r, spec.members[i]);
          }
          double mass = spec.tree ? copula.tree_mass(u_hi, u_lo) : copula.ie_mass(u_hi, u_lo);
          if (mass < -1e-9) return -std::numeric_limits<double>::infinity();
          term = std::log(std::max(mass, 0.0));
        } else {
          double marg = 0.0;
          for (std::size_t i = 0; i < m; ++i) {
            u[i] = pd.hi(r, spec.members[i]);
            marg += pd.logpdf(r, spec.members[i]);
          }
          term = std::log(copula.density(u)) + marg;
        }
        total += term;
        if (total == -std::numeric_limits<double>::infinity()) return total;
      }
    }
    return total;
  }

 private:
  std::vector<DistrictSpec> districts_;
  std::vector<std::vector<VertexId>> clique_members_;
};

struct MhConfig {
  std::size_t iterations = 2000;
  std::size_t burn_in = 500;
  std::size_t thinning = 1;
  double proposal_sd = 0.5;
  double prior_mean = 0.0;
  double prior_variance = 10.0;
  std::uint64_t seed = 0;
  bool adapt_proposal = true;       // pre-burn-in doubling/halving of the step
  std::size_t adapt_iterations = 400;
  std::size_t adapt_window = 50;

  void validate() const {
    if (iterations > 0 && burn_in >= iterations)
      throw std::invalid_argument("burn-in must be smaller than the iteration count");
    if (thinning == 0) throw std::invalid_argument("thinning must be >= 1");
    if (proposal_sd <= 0.0) throw std::invalid_argument("proposal sd must be > 0");
    if (prior_variance <= 0.0) throw std::invalid_argument("prior variance must be > 0");
  }
};

struct PosteriorSample {
  std::vector<double> transformed;  // sampling-scale coordinates
  std::vector<double> theta;        // natural-scale copula parameters
  double log_likelihood = 0.0;
};

struct MhResult {
  std::vector<PosteriorSample> samples;
  double acceptance_rate = 0.0;
  std::size_t nonfinite_rejections = 0;
  double tuned_proposal_sd = 0.0;
};

// Random-walk Metropolis over the transformed copula parameters.  The
// Gaussian prior sits on the sampling scale, so the target is simply
// loglik(theta(phi)) + log N(phi; mean, variance) and the symmetric proposal
// cancels from the ratio.  Before burn-in an optional tuning phase doubles or
// halves the step to land the acceptance rate in [0.2, 0.5].
inline MhResult mh_copula(const CopulaStructure& structure, const PseudoData& pd,
                          const MhConfig& cfg) {
  cfg.validate();
  const std::size_t dim = structure.parameter_count();
  Rng rng(cfg.seed);
  MhResult out;

  std::vector<double> phi = structure.initial_transformed();
  std::vector<double> theta = structure.natural_theta(phi);
  auto log_prior = [&](std::span<const double> t) {
    double s = 0.0;
    for (double v : t) {
      double d = v - cfg.prior_mean;
      s += -0.5 * d * d / cfg.prior_variance;
    }
    return s - 0.5 * static_cast<double>(t.size()) *
                   std::log(6.283185307179586 * cfg.prior_variance);
  };
  double cur_ll = structure.log_likelihood(pd, theta);
  double cur_post = cur_ll + log_prior(phi);

  double sd = cfg.proposal_sd;
  std::vector<double> prop(dim);

  auto step = [&](double scale) -> bool {
    for (std::size_t k = 0; k < dim; ++k) prop[k] = phi[k] + scale * rng.normal();
    std::vector<double> prop_theta = structure.natural_theta(prop);
    double ll = structure.log_likelihood(pd, prop_theta);
    if (!std::isfinite(ll)) {
      ++out.nonfinite_rejections;
      return false;
    }
    double post = ll + log_prior(prop);
    double log_u = std::log(std::max(rng.uniform(), 1e-300));
    if (!std::isfinite(cur_post) || log_u < post - cur_post) {
      phi = prop;
      theta = std::move(prop_theta);
      cur_ll = ll;
      cur_post = post;
      return true;
    }
    return false;
  };

  if (dim > 0 && cfg.adapt_proposal && cfg.iterations > 0) {
    std::size_t done = 0;
    while (done < cfg.adapt_iterations) {
      std::size_t window = std::min(cfg.adapt_window, cfg.adapt_iterations - done);
      std::size_t accepted = 0;
      for (std::size_t i = 0; i < window; ++i)
        if (step(sd)) ++accepted;
      double rate = static_cast<double>(accepted) / window;
      if (rate < 0.2) sd *= 0.5;
      else if (rate > 0.5) sd *= 2.0;
      done += window;
    }
  }
  out.tuned_proposal_sd = sd;

  if (cfg.iterations == 0 || dim == 0) {
    out.samples.push_back(PosteriorSample{phi, theta, cur_ll});
    return out;
  }

  std::size_t accepted = 0;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    if (step(sd)) ++accepted;
    if (it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thinning == 0)
      out.samples.push_back(PosteriorSample{phi, theta, cur_ll});
  }
  out.acceptance_rate = static_cast<double>(accepted) / cfg.iterations;
  return out;
}

}  // namespace mcdn
