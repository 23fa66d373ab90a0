#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "mcdn/mh.hpp"
#include "mcdn/model.hpp"

namespace mcdn {

namespace detail {

inline double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

constexpr double log2_e = 1.4426950408889634074;  // 1 / ln 2

}  // namespace detail

// log2 of the posterior-predictive probability of the whole test set:
// the per-sample test likelihoods are averaged in log space.
inline double posterior_predictive_log2(std::span<const PosteriorSample> samples,
                                        const CopulaStructure& structure,
                                        const PseudoData& test) {
  if (samples.empty()) throw std::invalid_argument("posterior predictive needs >= 1 sample");
  std::vector<double> ll;
  ll.reserve(samples.size());
  for (const auto& s : samples) ll.push_back(structure.log_likelihood(test, s.theta));
  return (detail::log_sum_exp(ll) - std::log(static_cast<double>(samples.size()))) *
         detail::log2_e;
}

inline double posterior_predictive_log2(std::span<const PosteriorSample> samples,
                                        const CopulaStructure& structure,
                                        const std::vector<Marginal>& marginals, const Admg& g,
                                        const Dataset& test) {
  PseudoData pd = pseudodata(g, marginals, test);
  return posterior_predictive_log2(samples, structure, pd);
}

// log2 probability a DAG model (no bi-directed edges) assigns to a dataset:
// the plain product of its conditional marginals.
inline double dag_log2_prob(const Admg& g, const std::vector<Marginal>& marginals,
                            const Dataset& data) {
  if (!g.bidirected_edges().empty())
    throw std::invalid_argument("the baseline graph must not have bi-directed edges");
  auto col = bind_columns(g, data);
  std::vector<double> config(g.size());
  double total = 0.0;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (VertexId v = 0; v < g.size(); ++v) config[v] = data.at(r, col[v]);
    for (VertexId v = 0; v < g.size(); ++v)
      total += marginal_log_prob(marginals[v], config[v], config);
  }
  return total * detail::log2_e;
}

inline Admg strip_bidirected(const Admg& g) {
  Admg out;
  for (const Vertex& v : g.vertices()) out.add_vertex(v);
  for (auto [a, b] : g.directed_edges()) out.add_directed_edge(a, b);
  return out;
}

// Cross-validation report: per-fold log2 predictive totals for the model and
// the baseline, and the fold-size-scaled difference in millibits.
struct EvalReport {
  std::vector<double> model_log2;     // per fold, totals over the fold
  std::vector<double> baseline_log2;  // per fold
  std::vector<std::size_t> fold_sizes;
  std::vector<double> delta_millibits;  // 1000/n_k * (model - baseline)
  double delta_mean = 0.0;
  double delta_se = 0.0;
};

inline EvalReport delta_dag(std::span<const double> model_log2,
                            std::span<const double> baseline_log2,
                            std::span<const std::size_t> fold_sizes) {
  if (model_log2.size() != baseline_log2.size() || model_log2.size() != fold_sizes.size())
    throw std::invalid_argument("per-fold vectors must have equal length");
  if (model_log2.empty()) throw std::invalid_argument("at least one fold required");
  EvalReport r;
  r.model_log2.assign(model_log2.begin(), model_log2.end());
  r.baseline_log2.assign(baseline_log2.begin(), baseline_log2.end());
  r.fold_sizes.assign(fold_sizes.begin(), fold_sizes.end());
  const std::size_t k = model_log2.size();
  for (std::size_t i = 0; i < k; ++i) {
    if (fold_sizes[i] == 0) throw std::invalid_argument("empty fold");
    r.delta_millibits.push_back(1000.0 / static_cast<double>(fold_sizes[i]) *
                                (model_log2[i] - baseline_log2[i]));
  }
  r.delta_mean = std::accumulate(r.delta_millibits.begin(), r.delta_millibits.end(), 0.0) /
                 static_cast<double>(k);
  double ss = 0.0;
  for (double d : r.delta_millibits) ss += (d - r.delta_mean) * (d - r.delta_mean);
  double sd = k > 1 ? std::sqrt(ss / static_cast<double>(k - 1)) : 0.0;
  r.delta_se = sd / std::sqrt(static_cast<double>(k));
  return r;
}

struct KfoldConfig {
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  double alpha = 1.0;  // marginal smoothing
  MhConfig mh;
};

// The evaluation protocol: per fold, refit the marginals on the training
// split, sample the copula parameters by MH, score the held-out split with
// the posterior predictive, and compare against the maximum-likelihood fit of
// the bi-directed-edge-free baseline graph.
inline EvalReport kfold_evaluate(const Admg& g, const Admg& baseline, const Dataset& data,
                                 const KfoldConfig& cfg) {
  const std::size_t n = data.rows();
  if (cfg.folds < 2) throw std::invalid_argument("K must be >= 2");
  if (cfg.folds > n) throw std::invalid_argument("K exceeds the number of rows");
  if (!baseline.bidirected_edges().empty())
    throw std::invalid_argument("the baseline graph must not have bi-directed edges");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng shuffle_rng(mix_seed(cfg.seed, 0xf01d));
  shuffle_rng.shuffle(perm);

  CopulaStructure structure(g);
  std::vector<double> model_log2, baseline_log2;
  std::vector<std::size_t> fold_sizes;
  for (std::size_t k = 0; k < cfg.folds; ++k) {
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < n; ++i)
      (i % cfg.folds == k ? test_idx : train_idx).push_back(perm[i]);
    Dataset train = data.select_rows(train_idx);
    Dataset test = data.select_rows(test_idx);

    FitOptions fit_opts{cfg.alpha};
    FitResult fit = fit_marginals(g, train, fit_opts);
    PseudoData train_pd = pseudodata(g, fit.marginals, train);
    MhConfig mh_cfg = cfg.mh;
    mh_cfg.seed = mix_seed(cfg.seed, k);
    MhResult chain = mh_copula(structure, train_pd, mh_cfg);
    PseudoData test_pd = pseudodata(g, fit.marginals, test);
    model_log2.push_back(posterior_predictive_log2(chain.samples, structure, test_pd));

    FitResult base_fit = fit_marginals(baseline, train, fit_opts);
    baseline_log2.push_back(dag_log2_prob(baseline, base_fit.marginals, test));
    fold_sizes.push_back(test_idx.size());
  }
  return delta_dag(model_log2, baseline_log2, fold_sizes);
}

}  // namespace mcdn
