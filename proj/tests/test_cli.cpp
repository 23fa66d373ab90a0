#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "mcdn/cli.hpp"

using namespace mcdn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("mcdn_test_" + std::to_string(Catch::rngSeed()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name, const std::string& content = "") const {
    fs::path p = path / name;
    if (!content.empty()) {
      std::ofstream out(p);
      out << content;
    }
    return p.string();
  }
};

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = mcdn::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

const char* kTwoDistrictGraph =
    "var X1 ordinal 2\n"
    "var X2 ordinal 2\n"
    "var X3 ordinal 2\n"
    "var X4 ordinal 2\n"
    "edge X1 <-> X2\n"
    "edge X3 <-> X4\n"
    "edge X4 -> X1\n"
    "edge X1 -> X3\n";

}  // namespace

TEST_CASE("districts subcommand prints the expected listing", "[cli]") {
  TempDir dir;
  auto graph = dir.file("g.graph", kTwoDistrictGraph);
  CliResult r = run_cli({"districts", graph});
  REQUIRE(r.code == 0);
  CHECK(r.out ==
        "graph: 4 vertices, 2 directed edges, 2 bi-directed edges\n"
        "district 1: members X1 X2 | parents X4 | barren\n"
        "  clique X1 X2\n"
        "district 2: members X3 X4 | parents X1 | barren\n"
        "  clique X3 X4\n");
}

TEST_CASE("validate rejects cyclic graphs with exit code 2", "[cli]") {
  TempDir dir;
  auto graph = dir.file("bad.graph",
                        "var A ordinal 2\nvar B ordinal 2\n"
                        "edge A -> B\nedge B -> A\n");
  CliResult r = run_cli({"validate", graph});
  CHECK(r.code == 2);
  CHECK(r.err.find("directed cycle") != std::string::npos);
  CHECK(r.err.find("A") != std::string::npos);
}

TEST_CASE("malformed graphs report the line number", "[cli]") {
  TempDir dir;
  auto graph = dir.file("bad.graph", "var A ordinal 2\nedg A -> B\n");
  CliResult r = run_cli({"validate", graph});
  CHECK(r.code == 2);
  CHECK(r.err.find(":2:") != std::string::npos);
}

TEST_CASE("usage errors exit with code 1", "[cli]") {
  CliResult r = run_cli({"districts"});
  CHECK(r.code == 1);
  CliResult unknown = run_cli({"frobnicate"});
  CHECK(unknown.code == 1);
  CliResult help = run_cli({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("validate") != std::string::npos);
}

TEST_CASE("transform writes a reparseable barren graph", "[cli]") {
  TempDir dir;
  auto graph = dir.file("g.graph",
                        "var X1 ordinal 2\nvar X2 ordinal 2\nvar X3 ordinal 2\n"
                        "edge X1 <-> X2\nedge X2 <-> X3\n"
                        "edge X1 -> X2\n");
  auto out_path = dir.file("t.graph");
  CliResult r = run_cli({"transform", graph, "-o", out_path});
  REQUIRE(r.code == 0);
  Admg t = read_graph_file(out_path);
  for (const District& d : districts(t)) CHECK(is_barren(d));
  CHECK(t.find("X1*").has_value());
}

TEST_CASE("fit, loglik, sample and check-markov chain together", "[cli]") {
  TempDir dir;
  auto graph = dir.file("g.graph", kTwoDistrictGraph);

  // Ground-truth model written by hand, sampled through the CLI.
  Rng rng(3);
  Admg g = read_graph_file(graph);
  McdnModel truth = testutil::random_ordinal_model(g, rng);
  auto truth_params = dir.file("truth.mdl");
  write_params_file(truth.params(), truth_params);

  auto data_csv = dir.file("d.csv");
  CliResult sample = run_cli({"sample", "--graph", graph, "--params", truth_params, "-n", "400",
                              "--seed", "7", "-o", data_csv});
  REQUIRE(sample.code == 0);

  // Determinism: the same seed writes identical bytes.
  auto data_csv2 = dir.file("d2.csv");
  run_cli({"sample", "--graph", graph, "--params", truth_params, "-n", "400", "--seed", "7",
           "-o", data_csv2});
  std::ifstream f1(data_csv), f2(data_csv2);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());

  auto fitted = dir.file("fit.mdl");
  CliResult fit = run_cli({"fit", "--graph", graph, "--data", data_csv, "--mh-iters", "400",
                           "--burn-in", "100", "--seed", "5", "-o", fitted});
  REQUIRE(fit.code == 0);
  CHECK(fit.out.find("acceptance-rate") != std::string::npos);

  CliResult ll = run_cli({"loglik", "--graph", graph, "--params", fitted, "--data", data_csv});
  REQUIRE(ll.code == 0);
  // The printed value matches the library computation exactly.
  McdnModel fitted_model = McdnModel::from_params(g, read_params_file(fitted));
  double expected = fitted_model.loglik(read_csv_file(data_csv)).log_likelihood;
  std::istringstream parse(ll.out);
  std::string word;
  parse >> word;
  REQUIRE(word == "loglik");
  double printed;
  parse >> printed;
  CHECK_THAT(printed, Catch::Matchers::WithinAbs(expected, 1e-9));

  CliResult markov = run_cli({"check-markov", graph, "--params", truth_params, "--seed", "2"});
  CHECK(markov.code == 0);
  CHECK(markov.out.find("PASS") != std::string::npos);
}

TEST_CASE("evaluate writes the report files", "[cli]") {
  TempDir dir;
  auto graph = dir.file("g.graph",
                        "var A ordinal 2\nvar B ordinal 2\n"
                        "edge A <-> B\n");
  Admg g = read_graph_file(graph);
  std::vector<Marginal> ms;
  Rng rng(9);
  for (VertexId v = 0; v < 2; ++v) ms.push_back(testutil::random_ordinal_marginal(g, v, rng));
  McdnModel truth(g, ms, {{{0, 1}, 6.0}});
  auto data_csv = dir.file("d.csv");
  write_csv_file(truth.sample_ordinal(200, 3), data_csv);

  auto prefix = (dir.path / "report").string();
  CliResult r = run_cli({"evaluate", "--graph", graph, "--data", data_csv, "-K", "4", "--seed",
                         "1", "--mh-iters", "200", "--burn-in", "50", "-o", prefix});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("delta-dag") != std::string::npos);
  REQUIRE(fs::exists(prefix + ".kv"));
  REQUIRE(fs::exists(prefix + ".csv"));
  std::ifstream csv(prefix + ".csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "fold,n,model_log2,baseline_log2,delta_millibits");
  int lines = 0;
  std::string line;
  while (std::getline(csv, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 4);
}

TEST_CASE("check-markov fails loudly on a broken parameter file", "[cli]") {
  TempDir dir;
  auto graph = dir.file("g.graph", kTwoDistrictGraph);
  auto params = dir.file("bad.mdl", "mcdn-params v1\nmarginal X1 {\n  kind ordinal\n");
  CliResult r = run_cli({"check-markov", graph, "--params", params});
  CHECK(r.code == 2);
  CHECK(r.err.find("bad.mdl") != std::string::npos);
}
