#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "mcdn/text_format.hpp"

namespace mcdn {

// Serializable model parameters, keyed by vertex / clique names so a file can
// be checked against a graph when the model is assembled.

struct OrdinalMarginalParams {
  int cardinality = 2;
  std::vector<std::string> parents;
  std::vector<int> parent_cards;  // parallel to `parents`
  std::vector<double> table;  // one row of `cardinality` probabilities per parent configuration
  double alpha = 0.0;
};

struct GaussianMarginalParams {
  std::vector<std::string> parents;
  std::vector<double> weights;  // intercept then one weight per parent
  double variance = 1.0;
};

using MarginalParams = std::variant<OrdinalMarginalParams, GaussianMarginalParams>;

struct CliqueTheta {
  std::vector<std::string> members;  // sorted by name at load/save time
  double theta = 0.0;
};

struct ModelParams {
  std::vector<std::pair<std::string, MarginalParams>> marginals;
  std::vector<CliqueTheta> cliques;

  const MarginalParams* find_marginal(const std::string& name) const {
    for (const auto& [n, m] : marginals)
      if (n == name) return &m;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Text format.  Nested key-value blocks, one file per model:
//
//   mcdn-params v1
//   marginal X1 {
//     kind ordinal
//     levels 2
//     parents X4
//     alpha 1
//     table 0 | 0.25 0.75
//     table 1 | 0.5 0.5
//   }
//   marginal Z {
//     kind continuous
//     parents X1
//     weights 0.5 2
//     variance 1.25
//   }
//   clique X1 X2 {
//     theta 4.5
//   }
//
// Ordinal `table` lines carry the parent levels (in `parents` order, first
// parent most significant) before the bar.  Numbers round-trip exactly.

inline void write_params(const ModelParams& p, std::ostream& out) {
  using detail::format_double;
  out << "mcdn-params v1\n";
  for (const auto& [name, m] : p.marginals) {
    out << "marginal " << name << " {\n";
    if (const auto* o = std::get_if<OrdinalMarginalParams>(&m)) {
      out << "  kind ordinal\n";
      out << "  levels " << o->cardinality << "\n";
      out << "  parents";
      for (const auto& pa : o->parents) out << " " << pa;
      out << "\n";
      if (!o->parents.empty()) {
        out << "  parent-levels";
        for (int k : o->parent_cards) out << " " << k;
        out << "\n";
      }
      out << "  alpha " << format_double(o->alpha) << "\n";
      std::size_t rows = o->table.size() / o->cardinality;
      std::vector<int> cfg(o->parents.size(), 0);
      for (std::size_t r = 0; r < rows; ++r) {
        out << "  table";
        for (int level : cfg) out << " " << level;
        out << " |";
        for (int l = 0; l < o->cardinality; ++l)
          out << " " << format_double(o->table[r * o->cardinality + l]);
        out << "\n";
        // Parent levels tick like an odometer, first parent most significant.
        for (int i = static_cast<int>(cfg.size()) - 1; i >= 0; --i) {
          if (++cfg[i] < o->parent_cards[i]) break;
          cfg[i] = 0;
        }
      }
    } else {
      const auto& gsn = std::get<GaussianMarginalParams>(m);
      out << "  kind continuous\n";
      out << "  parents";
      for (const auto& pa : gsn.parents) out << " " << pa;
      out << "\n";
      out << "  weights";
      for (double w : gsn.weights) out << " " << format_double(w);
      out << "\n";
      out << "  variance " << format_double(gsn.variance) << "\n";
    }
    out << "}\n";
  }
  for (const auto& c : p.cliques) {
    out << "clique";
    for (const auto& m : c.members) out << " " << m;
    out << " {\n  theta " << format_double(c.theta) << "\n}\n";
  }
}

inline ModelParams read_params(std::istream& in, std::string_view source = "<params>") {
  ModelParams p;
  std::string line;
  int line_no = 0;
  bool header_seen = false;

  enum class Block { none, ordinal_marginal, continuous_marginal, clique };
  Block block = Block::none;
  std::string block_name;
  OrdinalMarginalParams ord;
  GaussianMarginalParams gsn;
  CliqueTheta clique;
  bool kind_seen = false, theta_seen = false;

  auto close_block = [&](int ln) {
    switch (block) {
      case Block::ordinal_marginal: {
        if (ord.table.empty()) throw ParseError(source, ln, "marginal block has no table rows");
        if (ord.parent_cards.size() != ord.parents.size())
          throw ParseError(source, ln, "marginal block needs a parent-levels entry");
        std::size_t expected = static_cast<std::size_t>(ord.cardinality);
        for (int k : ord.parent_cards) expected *= static_cast<std::size_t>(k);
        if (ord.table.size() != expected)
          throw ParseError(source, ln, "table has " + std::to_string(ord.table.size()) +
                                           " entries, expected " + std::to_string(expected));
        p.marginals.emplace_back(block_name, ord);
        break;
      }
      case Block::continuous_marginal:
        if (gsn.weights.empty()) throw ParseError(source, ln, "marginal block has no weights");
        p.marginals.emplace_back(block_name, gsn);
        break;
      case Block::clique:
        if (!theta_seen) throw ParseError(source, ln, "clique block has no theta");
        p.cliques.push_back(clique);
        break;
      case Block::none:
        break;
    }
    block = Block::none;
  };

  while (std::getline(in, line)) {
    ++line_no;
    auto tok = detail::tokenize(line);
    if (tok.empty()) continue;
    if (!header_seen) {
      if (tok.size() != 2 || tok[0] != "mcdn-params" || tok[1] != "v1")
        throw ParseError(source, line_no, "expected header 'mcdn-params v1'");
      header_seen = true;
      continue;
    }
    if (block == Block::none) {
      if (tok[0] == "marginal") {
        if (tok.size() != 3 || tok[2] != "{")
          throw ParseError(source, line_no, "expected 'marginal <vertex> {'");
        if (p.find_marginal(tok[1]))
          throw ParseError(source, line_no, "duplicate marginal for '" + tok[1] + "'");
        block_name = tok[1];
        ord = OrdinalMarginalParams{};
        gsn = GaussianMarginalParams{};
        kind_seen = false;
        block = Block::ordinal_marginal;  // provisional until `kind`
      } else if (tok[0] == "clique") {
        if (tok.size() < 4 || tok.back() != "{")
          throw ParseError(source, line_no, "expected 'clique <members...> {'");
        clique = CliqueTheta{};
        clique.members.assign(tok.begin() + 1, tok.end() - 1);
        std::sort(clique.members.begin(), clique.members.end());
        theta_seen = false;
        block = Block::clique;
      } else {
        throw ParseError(source, line_no, "unknown directive '" + tok[0] + "'");
      }
      continue;
    }
    if (tok[0] == "}") {
      if (tok.size() != 1) throw ParseError(source, line_no, "unexpected tokens after '}'");
      if ((block == Block::ordinal_marginal || block == Block::continuous_marginal) && !kind_seen)
        throw ParseError(source, line_no, "marginal block is missing 'kind'");
      close_block(line_no);
      continue;
    }
    const std::string& key = tok[0];
    if (block == Block::clique) {
      if (key == "theta" && tok.size() == 2) {
        clique.theta = detail::parse_double(tok[1], source, line_no);
        theta_seen = true;
      } else {
        throw ParseError(source, line_no, "unknown clique entry '" + key + "'");
      }
      continue;
    }
    if (key == "kind") {
      if (tok.size() != 2) throw ParseError(source, line_no, "kind needs one value");
      if (tok[1] == "ordinal") block = Block::ordinal_marginal;
      else if (tok[1] == "continuous") block = Block::continuous_marginal;
      else throw ParseError(source, line_no, "unknown kind '" + tok[1] + "'");
      kind_seen = true;
    } else if (key == "parents") {
      auto& dst = block == Block::ordinal_marginal ? ord.parents : gsn.parents;
      dst.assign(tok.begin() + 1, tok.end());
    } else if (key == "levels" && block == Block::ordinal_marginal) {
      if (tok.size() != 2) throw ParseError(source, line_no, "levels needs one value");
      ord.cardinality = static_cast<int>(detail::parse_long(tok[1], source, line_no));
      if (ord.cardinality < 2) throw ParseError(source, line_no, "levels must be >= 2");
    } else if (key == "alpha" && block == Block::ordinal_marginal) {
      if (tok.size() != 2) throw ParseError(source, line_no, "alpha needs one value");
      ord.alpha = detail::parse_double(tok[1], source, line_no);
    } else if (key == "parent-levels" && block == Block::ordinal_marginal) {
      ord.parent_cards.clear();
      for (std::size_t i = 1; i < tok.size(); ++i) {
        long k = detail::parse_long(tok[i], source, line_no);
        if (k < 2) throw ParseError(source, line_no, "parent-levels entries must be >= 2");
        ord.parent_cards.push_back(static_cast<int>(k));
      }
    } else if (key == "table" && block == Block::ordinal_marginal) {
      auto bar = std::find(tok.begin(), tok.end(), "|");
      if (bar == tok.end()) throw ParseError(source, line_no, "table row is missing '|'");
      std::size_t levels_given = static_cast<std::size_t>(bar - tok.begin()) - 1;
      if (levels_given != ord.parents.size())
        throw ParseError(source, line_no, "table row has " + std::to_string(levels_given) +
                                              " parent levels, expected " +
                                              std::to_string(ord.parents.size()));
      std::size_t probs = tok.end() - bar - 1;
      if (static_cast<int>(probs) != ord.cardinality)
        throw ParseError(source, line_no, "table row has " + std::to_string(probs) +
                                              " probabilities, expected " +
                                              std::to_string(ord.cardinality));
      for (auto it = bar + 1; it != tok.end(); ++it)
        ord.table.push_back(detail::parse_double(*it, source, line_no));
    } else if (key == "weights" && block == Block::continuous_marginal) {
      for (std::size_t i = 1; i < tok.size(); ++i)
        gsn.weights.push_back(detail::parse_double(tok[i], source, line_no));
    } else if (key == "variance" && block == Block::continuous_marginal) {
      if (tok.size() != 2) throw ParseError(source, line_no, "variance needs one value");
      gsn.variance = detail::parse_double(tok[1], source, line_no);
    } else {
      throw ParseError(source, line_no, "unknown marginal entry '" + key + "'");
    }
  }
  if (!header_seen) throw ParseError(source, 1, "missing 'mcdn-params v1' header");
  if (block != Block::none) throw ParseError(source, line_no, "unterminated block");
  return p;
}

inline ModelParams read_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open parameter file '" + path + "'");
  return read_params(in, path);
}

inline void write_params_file(const ModelParams& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write parameter file '" + path + "'");
  write_params(p, out);
}

}  // namespace mcdn
