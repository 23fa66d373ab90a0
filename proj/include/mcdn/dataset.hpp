#pragma once

#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mcdn/admg.hpp"
#include "mcdn/text_format.hpp"

namespace mcdn {

// Rectangular column-named data, row major.  Ordinal columns hold
// non-negative integer levels, continuous columns decimals; there are no
// missing values.
struct Dataset {
  std::vector<std::string> columns;
  std::vector<double> values;

  std::size_t rows() const { return columns.empty() ? 0 : values.size() / columns.size(); }
  std::size_t cols() const { return columns.size(); }
  double at(std::size_t r, std::size_t c) const { return values[r * columns.size() + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * columns.size() + c]; }

  void append_row(std::span<const double> row) {
    if (row.size() != columns.size()) throw std::invalid_argument("row width mismatch");
    values.insert(values.end(), row.begin(), row.end());
  }

  Dataset select_rows(std::span<const std::size_t> idx) const {
    Dataset out;
    out.columns = columns;
    out.values.reserve(idx.size() * columns.size());
    for (std::size_t r : idx)
      for (std::size_t c = 0; c < columns.size(); ++c) out.values.push_back(at(r, c));
    return out;
  }
};

// Column index for every graph vertex, by name; the dataset must cover the
// vertex set exactly (extra columns are rejected to catch binding mistakes).
inline std::vector<std::size_t> bind_columns(const Admg& g, const Dataset& data) {
  if (data.cols() != static_cast<std::size_t>(g.size()))
    throw std::invalid_argument("dataset has " + std::to_string(data.cols()) +
                                " columns but the graph has " + std::to_string(g.size()) +
                                " vertices");
  std::vector<std::size_t> map(g.size());
  for (VertexId v = 0; v < g.size(); ++v) {
    bool found = false;
    for (std::size_t c = 0; c < data.cols(); ++c)
      if (data.columns[c] == g.name(v)) {
        map[v] = c;
        found = true;
        break;
      }
    if (!found) throw std::invalid_argument("dataset is missing column '" + g.name(v) + "'");
  }
  return map;
}

inline Dataset read_csv(std::istream& in, std::string_view source = "<csv>") {
  Dataset d;
  std::string line;
  int line_no = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == ',') out.push_back(cur), cur.clear();
      else if (c != '\r') cur.push_back(c);
    }
    out.push_back(cur);
    return out;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split(line);
    if (d.columns.empty()) {
      for (auto& f : fields)
        if (f.empty()) throw ParseError(source, line_no, "empty column name in header");
      d.columns = fields;
      continue;
    }
    if (fields.size() != d.columns.size())
      throw ParseError(source, line_no,
                       "expected " + std::to_string(d.columns.size()) + " fields, got " +
                           std::to_string(fields.size()));
    for (const auto& f : fields) d.values.push_back(detail::parse_double(f, source, line_no));
  }
  if (d.columns.empty()) throw ParseError(source, 1, "missing header row");
  return d;
}

inline Dataset read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open data file '" + path + "'");
  return read_csv(in, path);
}

inline void write_csv(const Dataset& d, std::ostream& out) {
  for (std::size_t c = 0; c < d.cols(); ++c) out << (c ? "," : "") << d.columns[c];
  out << "\n";
  for (std::size_t r = 0; r < d.rows(); ++r) {
    for (std::size_t c = 0; c < d.cols(); ++c)
      out << (c ? "," : "") << detail::format_double(d.at(r, c));
    out << "\n";
  }
}

inline void write_csv_file(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write data file '" + path + "'");
  write_csv(d, out);
}

}  // namespace mcdn
