#pragma once

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mcdn/evaluate.hpp"
#include "mcdn/mcdn.hpp"

namespace mcdn::cli {

// Exit codes: 0 success, 1 usage error, 2 input validation failure
// (malformed files, invalid graphs/parameters, failed checks).

namespace detail {

inline std::string kind_str(const Vertex& v) {
  return v.kind == VariableKind::ordinal ? "ordinal " + std::to_string(v.cardinality)
                                         : "continuous";
}

inline std::string join_names(const Admg& g, const std::vector<VertexId>& vs) {
  std::string s;
  for (VertexId v : vs) s += (s.empty() ? "" : " ") + g.name(v);
  return s.empty() ? "-" : s;
}

inline void print_districts(const Admg& g, std::ostream& out) {
  auto ds = districts(g);
  out << "graph: " << g.size() << " vertices, " << g.directed_edges().size()
      << " directed edges, " << g.bidirected_edges().size() << " bi-directed edges\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const District& d = ds[i];
    out << "district " << (i + 1) << ": members " << join_names(g, d.members) << " | parents "
        << join_names(g, d.external_parents) << " | "
        << (is_barren(d) ? "barren" : "not barren") << "\n";
    for (const auto& c : d.cliques) out << "  clique " << join_names(g, c) << "\n";
  }
}

struct MhFlags {
  std::size_t iters = 2000;
  std::size_t burn_in = 500;
  std::size_t thin = 1;
  double proposal_sd = 0.5;
  double prior_var = 10.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--mh-iters", iters, "MH iterations");
    cmd->add_option("--burn-in", burn_in, "MH burn-in iterations");
    cmd->add_option("--thin", thin, "keep every n-th post-burn-in sample");
    cmd->add_option("--proposal-sd", proposal_sd, "random-walk proposal sd");
    cmd->add_option("--prior-var", prior_var, "prior variance of the copula parameters");
  }

  MhConfig config(std::uint64_t seed) const {
    MhConfig c;
    c.iterations = iters;
    c.burn_in = burn_in;
    c.thinning = thin;
    c.proposal_sd = proposal_sd;
    c.prior_variance = prior_var;
    c.seed = seed;
    return c;
  }
};

// Posterior-mean point estimate of the clique parameters, written next to the
// fitted marginals.
inline ModelParams point_estimate(const Admg& g, const CopulaStructure& structure,
                                  const std::vector<Marginal>& marginals,
                                  const std::vector<PosteriorSample>& samples) {
  std::vector<double> mean(structure.parameter_count(), 0.0);
  for (const auto& s : samples)
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += s.theta[k];
  for (double& m : mean) m /= static_cast<double>(samples.size());
  std::map<std::vector<VertexId>, double> thetas;
  for (std::size_t k = 0; k < mean.size(); ++k)
    thetas[structure.clique_members()[k]] = mean[k];
  McdnModel model(g, marginals, thetas);
  return model.params();
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Probability models over acyclic directed mixed graphs"};
  app.require_subcommand(1);

  std::string graph_path, baseline_path, params_path, data_path, out_path;
  std::uint64_t seed = 0;
  double tol = 1e-8;
  int triples = 20;
  double alpha = 1.0;
  std::size_t n_samples = 0, folds = 5;
  bool skip_zero_rows = false;
  detail::MhFlags mh;

  auto* validate = app.add_subcommand("validate", "check a graph file and report its structure");
  validate->add_option("graph", graph_path, "graph file")->required();

  auto* dists = app.add_subcommand("districts", "list districts, parents and cliques");
  dists->add_option("graph", graph_path, "graph file")->required();

  auto* transform = app.add_subcommand("transform", "artificial-vertex reduction to barren districts");
  transform->add_option("graph", graph_path, "graph file")->required();
  transform->add_option("-o,--out", out_path, "output graph file")->required();

  auto* check = app.add_subcommand("check-markov", "verify the model against its graph's independences");
  check->add_option("graph", graph_path, "graph file")->required();
  check->add_option("--params", params_path, "parameter file")->required();
  check->add_option("--tol", tol, "violation tolerance");
  check->add_option("--triples", triples, "random m-separation triples to test");
  check->add_option("--seed", seed, "random seed");

  auto* loglik = app.add_subcommand("loglik", "log-likelihood of a dataset under a model");
  loglik->add_option("--graph", graph_path, "graph file")->required();
  loglik->add_option("--params", params_path, "parameter file")->required();
  loglik->add_option("--data", data_path, "CSV dataset")->required();
  loglik->add_flag("--skip-zero-rows", skip_zero_rows, "exclude zero-probability rows");

  auto* fit = app.add_subcommand("fit", "two-stage fit: marginals then MH over copula parameters");
  fit->add_option("--graph", graph_path, "graph file")->required();
  fit->add_option("--data", data_path, "CSV dataset")->required();
  fit->add_option("--alpha", alpha, "ordinal smoothing pseudo-count");
  fit->add_option("--seed", seed, "random seed");
  fit->add_option("-o,--out", out_path, "output parameter file")->required();
  mh.attach(fit);

  auto* sample = app.add_subcommand("sample", "draw rows from an all-ordinal model");
  sample->add_option("--graph", graph_path, "graph file")->required();
  sample->add_option("--params", params_path, "parameter file")->required();
  sample->add_option("-n", n_samples, "number of rows")->required();
  sample->add_option("--seed", seed, "random seed");
  sample->add_option("-o,--out", out_path, "output CSV file")->required();

  auto* evaluate = app.add_subcommand("evaluate", "K-fold predictive comparison against a DAG baseline");
  evaluate->add_option("--graph", graph_path, "graph file")->required();
  evaluate->add_option("--baseline", baseline_path,
                       "baseline DAG file (default: graph with bi-directed edges removed)");
  evaluate->add_option("--data", data_path, "CSV dataset")->required();
  evaluate->add_option("-K,--folds", folds, "number of folds");
  evaluate->add_option("--alpha", alpha, "ordinal smoothing pseudo-count");
  evaluate->add_option("--seed", seed, "random seed");
  evaluate->add_option("-o,--out", out_path, "report prefix (<prefix>.kv and <prefix>.csv)");
  mh.attach(evaluate);

  std::vector<const char*> argv;
  argv.push_back("mcdn");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (app.got_subcommand(validate)) {
      Admg g = read_graph_file(graph_path);
      g.validate();
      out << "ok: " << g.size() << " vertices\n";
      for (const Vertex& v : g.vertices()) out << "  var " << v.name << " " << detail::kind_str(v) << "\n";
      detail::print_districts(g, out);
      return 0;
    }
    if (app.got_subcommand(dists)) {
      Admg g = read_graph_file(graph_path);
      detail::print_districts(g, out);
      return 0;
    }
    if (app.got_subcommand(transform)) {
      Admg g = read_graph_file(graph_path);
      ArtificialTransform t = transform_artificial(g);
      write_graph_file(t.graph, out_path);
      out << "wrote " << out_path << "\n";
      for (VertexId v = 0; v < g.size(); ++v)
        if (t.star_of[v] >= 0)
          out << "  " << g.name(v) << " -> " << t.graph.name(t.star_of[v]) << "\n";
      return 0;
    }
    if (app.got_subcommand(check)) {
      Admg g = read_graph_file(graph_path);
      McdnModel model = McdnModel::from_params(g, read_params_file(params_path));
      MarkovCheckOptions opts;
      opts.tolerance = tol;
      opts.msep_triples = triples;
      opts.seed = seed;
      MarkovReport report = model.check_markov(opts);
      out << "constraints checked: " << report.constraints_checked << "\n";
      out << "m-separation triples checked: " << report.triples_checked << "\n";
      out << "max violation: " << report.max_violation << "\n";
      if (!report.worst.empty()) out << "worst: " << report.worst << "\n";
      out << (report.passed() ? "PASS" : "FAIL") << " (tolerance " << tol << ")\n";
      return report.passed() ? 0 : 2;
    }
    if (app.got_subcommand(loglik)) {
      Admg g = read_graph_file(graph_path);
      McdnModel model = McdnModel::from_params(g, read_params_file(params_path));
      LoglikResult r = model.loglik(read_csv_file(data_path), LoglikOptions{skip_zero_rows});
      out << "loglik " << mcdn::detail::format_double(r.log_likelihood) << "\n";
      out << "rows-used " << r.rows_used << "\n";
      for (std::size_t r0 : r.zero_rows) out << "zero-probability-row " << r0 << "\n";
      return 0;
    }
    if (app.got_subcommand(fit)) {
      Admg g = read_graph_file(graph_path);
      Dataset data = read_csv_file(data_path);
      FitResult fr = fit_marginals(g, data, FitOptions{alpha});
      for (const auto& w : fr.warnings) err << "warning: " << w << "\n";
      CopulaStructure structure(g);
      PseudoData pd = pseudodata(g, fr.marginals, data);
      MhResult chain = mh_copula(structure, pd, mh.config(seed));
      ModelParams params = detail::point_estimate(g, structure, fr.marginals, chain.samples);
      write_params_file(params, out_path);
      out << "wrote " << out_path << "\n";
      out << "acceptance-rate " << mcdn::detail::format_double(chain.acceptance_rate) << "\n";
      out << "tuned-proposal-sd " << mcdn::detail::format_double(chain.tuned_proposal_sd) << "\n";
      for (std::size_t k = 0; k < structure.parameter_count(); ++k) {
        out << "theta";
        for (VertexId v : structure.clique_members()[k]) out << " " << g.name(v);
        double mean = 0.0;
        for (const auto& s : chain.samples) mean += s.theta[k];
        out << " | " << mcdn::detail::format_double(mean / chain.samples.size()) << "\n";
      }
      return 0;
    }
    if (app.got_subcommand(sample)) {
      Admg g = read_graph_file(graph_path);
      McdnModel model = McdnModel::from_params(g, read_params_file(params_path));
      Dataset d = model.sample_ordinal(n_samples, seed);
      write_csv_file(d, out_path);
      out << "wrote " << out_path << " (" << d.rows() << " rows)\n";
      return 0;
    }
    if (app.got_subcommand(evaluate)) {
      Admg g = read_graph_file(graph_path);
      Admg baseline = baseline_path.empty() ? strip_bidirected(g) : read_graph_file(baseline_path);
      Dataset data = read_csv_file(data_path);
      KfoldConfig cfg;
      cfg.folds = folds;
      cfg.seed = seed;
      cfg.alpha = alpha;
      cfg.mh = mh.config(seed);
      EvalReport r = kfold_evaluate(g, baseline, data, cfg);
      std::ostringstream kv, csv;
      csv << "fold,n,model_log2,baseline_log2,delta_millibits\n";
      for (std::size_t k = 0; k < r.delta_millibits.size(); ++k) {
        out << "fold " << (k + 1) << ": n=" << r.fold_sizes[k] << " model "
            << mcdn::detail::format_double(r.model_log2[k]) << " baseline "
            << mcdn::detail::format_double(r.baseline_log2[k]) << " delta "
            << mcdn::detail::format_double(r.delta_millibits[k]) << " millibits\n";
        csv << (k + 1) << "," << r.fold_sizes[k] << ","
            << mcdn::detail::format_double(r.model_log2[k]) << ","
            << mcdn::detail::format_double(r.baseline_log2[k]) << ","
            << mcdn::detail::format_double(r.delta_millibits[k]) << "\n";
      }
      out << "delta-dag " << mcdn::detail::format_double(r.delta_mean) << " +- "
          << mcdn::detail::format_double(r.delta_se) << " millibits\n";
      kv << "evaluate-report v1\n";
      kv << "folds " << r.delta_millibits.size() << "\n";
      kv << "delta-dag-millibits " << mcdn::detail::format_double(r.delta_mean) << "\n";
      kv << "delta-dag-se " << mcdn::detail::format_double(r.delta_se) << "\n";
      if (!out_path.empty()) {
        std::ofstream kvf(out_path + ".kv");
        std::ofstream csvf(out_path + ".csv");
        if (!kvf || !csvf) throw std::runtime_error("cannot write report files at '" + out_path + "'");
        kvf << kv.str();
        csvf << csv.str();
        out << "wrote " << out_path << ".kv and " << out_path << ".csv\n";
      }
      return 0;
    }
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace mcdn::cli
