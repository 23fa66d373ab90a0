#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "mcdn/district_factor.hpp"

using namespace mcdn;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// A single-district factor built directly: members get the given ids.
DistrictFactor make_factor(const Admg& g, std::vector<Marginal> marginals,
                           std::span<const double> thetas) {
  auto ds = districts(g);
  for (auto& d : ds)
    if (d.members.size() == marginals.size()) return DistrictFactor(d, std::move(marginals), thetas);
  throw std::runtime_error("no district of the requested size");
}
}  // namespace

TEST_CASE("pmf_from_cdf on one coordinate", "[pmf]") {
  auto cdf = [](std::span<const int> x) { return x[0] == 0 ? 0.3 : 1.0; };
  std::vector<int> at{0};
  CHECK_THAT(pmf_from_cdf(cdf, at), WithinAbs(0.3, 1e-15));
  at[0] = 1;
  CHECK_THAT(pmf_from_cdf(cdf, at), WithinAbs(0.7, 1e-15));
}

TEST_CASE("pmf_from_cdf factorizes product CDFs", "[pmf]") {
  std::vector<double> f1{0.2, 0.7, 1.0}, f2{0.4, 1.0};
  auto cdf = [&](std::span<const int> x) { return f1[x[0]] * f2[x[1]]; };
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 2; ++b) {
      std::vector<int> at{a, b};
      double pa = f1[a] - (a ? f1[a - 1] : 0.0);
      double pb = f2[b] - (b ? f2[b - 1] : 0.0);
      CHECK_THAT(pmf_from_cdf(cdf, at), WithinAbs(pa * pb, 1e-14));
    }
}

TEST_CASE("pmf_from_cdf rejects non-increasing CDFs", "[pmf]") {
  // Corner weights 1 - 0.9 - 0.9 + 0.1 = -0.7: not 2-increasing.
  auto bad = [](std::span<const int> x) {
    if (x[0] == 0 && x[1] == 0) return 0.1;
    if (x[0] == 1 && x[1] == 1) return 1.0;
    return 0.9;
  };
  std::vector<int> at{1, 1};
  CHECK_THROWS_AS(pmf_from_cdf(bad, at), std::runtime_error);
}

TEST_CASE("district factor demands barren districts", "[district]") {
  Admg g;
  g.add_ordinal("A");
  g.add_ordinal("B");
  g.add_bidirected_edge(0, 1);
  g.add_directed_edge(0, 1);  // A is an internal parent
  auto ds = districts(g);
  Rng rng(3);
  std::vector<Marginal> ms{testutil::random_ordinal_marginal(g, 0, rng),
                           testutil::random_ordinal_marginal(g, 1, rng)};
  std::vector<double> theta{2.0};
  CHECK_THROWS_MATCHES(DistrictFactor(ds[0], ms, theta), std::invalid_argument,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("transform_artificial")));
}

TEST_CASE("district cdf at the top corner is one", "[district]") {
  Rng rng(7);
  Admg g = testutil::two_district_graph();
  std::vector<Marginal> ms{testutil::random_ordinal_marginal(g, 0, rng),
                           testutil::random_ordinal_marginal(g, 1, rng)};
  std::vector<double> theta{4.0};
  auto f = make_factor(g, ms, theta);
  std::vector<double> config{0.0, 0.0, 0.0, 1.0};
  std::vector<double> top{kInf, kInf};
  CHECK_THAT(f.cdf(top, config), WithinAbs(1.0, 1e-14));
}

TEST_CASE("district without bi-directed edges multiplies marginal CDFs", "[district]") {
  Admg g;
  g.add_ordinal("A", 3);
  Rng rng(9);
  auto m = testutil::random_ordinal_marginal(g, 0, rng);
  auto ds = districts(g);
  DistrictFactor f(ds[0], {m}, {});
  std::vector<double> config{0.0};
  for (int level = 0; level < 3; ++level) {
    std::vector<double> at{static_cast<double>(level)};
    CHECK_THAT(f.cdf(at, config), WithinAbs(m.cdf_level(level, 0), 1e-15));
  }
}

TEST_CASE("independence-limit copula gives the product of marginal CDFs", "[district]") {
  Rng rng(11);
  Admg g;
  g.add_ordinal("A");
  g.add_ordinal("B");
  g.add_bidirected_edge(0, 1);
  auto ma = testutil::random_ordinal_marginal(g, 0, rng);
  auto mb = testutil::random_ordinal_marginal(g, 1, rng);
  auto ds = districts(g);
  std::vector<double> theta{1e-12};
  DistrictFactor f(ds[0], {ma, mb}, theta);
  std::vector<double> config{0.0, 0.0};
  std::vector<double> at{0.0, 0.0};
  CHECK_THAT(f.cdf(at, config), WithinAbs(ma.cdf_level(0, 0) * mb.cdf_level(0, 0), 1e-9));
}

TEST_CASE("non-parents do not move a member's margin", "[district]") {
  // District {A,B} with external parents P -> A and Q -> B: fixing B at the
  // top, the cdf in A must not react to Q.
  Admg g;
  g.add_ordinal("A");
  g.add_ordinal("B");
  g.add_ordinal("P");
  g.add_ordinal("Q");
  g.add_bidirected_edge(0, 1);
  g.add_directed_edge(2, 0);
  g.add_directed_edge(3, 1);
  Rng rng(13);
  std::vector<Marginal> ms{testutil::random_ordinal_marginal(g, 0, rng),
                           testutil::random_ordinal_marginal(g, 1, rng)};
  std::vector<double> theta{3.0};
  auto f = make_factor(g, ms, theta);
  std::vector<double> at{0.0, kInf};
  std::vector<double> cfg_a{0.0, 0.0, 1.0, 0.0};
  std::vector<double> cfg_b{0.0, 0.0, 1.0, 1.0};  // only Q changed
  CHECK_THAT(f.cdf(at, cfg_a), WithinAbs(f.cdf(at, cfg_b), 1e-15));
}

TEST_CASE("tree pmf equals dense pmf", "[district]") {
  Rng rng(17);
  SECTION("path of three") {
    Admg g;
    for (int i = 0; i < 3; ++i) g.add_ordinal("V" + std::to_string(i), 2 + (i % 2));
    g.add_bidirected_edge(0, 1);
    g.add_bidirected_edge(1, 2);
    for (int trial = 0; trial < 10; ++trial) {
      auto model_marginals = std::vector<Marginal>{testutil::random_ordinal_marginal(g, 0, rng),
                                                   testutil::random_ordinal_marginal(g, 1, rng),
                                                   testutil::random_ordinal_marginal(g, 2, rng)};
      std::vector<double> thetas{rng.uniform(-5.0, 8.0), rng.uniform(-5.0, 8.0)};
      auto f = make_factor(g, model_marginals, thetas);
      REQUIRE(f.has_tree_structure());
      std::vector<double> config(3);
      for (int v = 0; v < 3; ++v) config[v] = static_cast<double>(rng.index(g.cardinality(v)));
      CHECK_THAT(f.tree_pmf(config), WithinAbs(f.dense_pmf(config), 1e-10));
    }
  }
  SECTION("star with four leaves") {
    Admg g;
    for (int i = 0; i < 5; ++i) g.add_ordinal("V" + std::to_string(i));
    for (int leaf = 1; leaf < 5; ++leaf) g.add_bidirected_edge(0, leaf);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<Marginal> ms;
      for (int v = 0; v < 5; ++v) ms.push_back(testutil::random_ordinal_marginal(g, v, rng));
      std::vector<double> thetas;
      for (int e = 0; e < 4; ++e) thetas.push_back(rng.uniform(-5.0, 8.0));
      auto f = make_factor(g, ms, thetas);
      std::vector<double> config(5);
      for (int v = 0; v < 5; ++v) config[v] = static_cast<double>(rng.index(2));
      CHECK_THAT(f.tree_pmf(config), WithinAbs(f.dense_pmf(config), 1e-10));
    }
  }
  SECTION("single vertex gives the marginal pmf") {
    Admg g;
    g.add_ordinal("A", 3);
    auto m = testutil::random_ordinal_marginal(g, 0, rng);
    DistrictFactor f(districts(g)[0], {m}, {});
    for (int level = 0; level < 3; ++level) {
      std::vector<double> config{static_cast<double>(level)};
      CHECK_THAT(f.tree_pmf(config), WithinAbs(m.pmf_level(level, 0), 1e-15));
      bool used_tree = false;
      f.pmf(config, &used_tree);
      CHECK(used_tree);
    }
  }
  SECTION("triangle falls back to the dense path") {
    Admg g;
    for (int i = 0; i < 3; ++i) g.add_ordinal("V" + std::to_string(i));
    g.add_bidirected_edge(0, 1);
    g.add_bidirected_edge(1, 2);
    g.add_bidirected_edge(0, 2);
    std::vector<Marginal> ms;
    for (int v = 0; v < 3; ++v) ms.push_back(testutil::random_ordinal_marginal(g, v, rng));
    std::vector<double> thetas{2.0, 3.0, 4.0};
    auto f = make_factor(g, ms, thetas);
    REQUIRE_FALSE(f.has_tree_structure());
    std::vector<double> config{0.0, 1.0, 0.0};
    CHECK_THROWS_AS(f.tree_pmf(config), std::invalid_argument);
    bool used_tree = true;
    double p = f.pmf(config, &used_tree);
    CHECK_FALSE(used_tree);
    CHECK(p >= 0.0);
  }
}

namespace {
GaussianMarginal gaussian(VertexId v, double mean, double var) {
  GaussianMarginal m;
  m.vertex = v;
  m.weights = {mean};
  m.variance = var;
  return m;
}
}  // namespace

TEST_CASE("continuous pair density matches finite differences of the cdf", "[district]") {
  Admg g;
  g.add_continuous("A");
  g.add_continuous("B");
  g.add_bidirected_edge(0, 1);
  std::vector<Marginal> ms{gaussian(0, 0.3, 1.5), gaussian(1, -1.0, 0.8)};
  std::vector<double> theta{4.0};
  auto f = make_factor(g, ms, theta);
  const double h = 1e-4;
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    double a = rng.uniform(-1.5, 2.0), b = rng.uniform(-2.5, 0.5);
    std::vector<double> config{a, b};
    double fd = 0.0;
    for (int sa : {-1, 1})
      for (int sb : {-1, 1}) {
        std::vector<double> at{a + sa * h / 2, b + sb * h / 2};
        fd += sa * sb * f.cdf(at, config);
      }
    fd /= h * h;
    CHECK_THAT(f.density(config), WithinRel(fd, 1e-5));
  }
}

TEST_CASE("continuous pair density integrates to one", "[district]") {
  Admg g;
  g.add_continuous("A");
  g.add_continuous("B");
  g.add_bidirected_edge(0, 1);
  std::vector<Marginal> ms{gaussian(0, 0.0, 1.0), gaussian(1, 0.5, 2.0)};
  std::vector<double> theta{-3.0};
  auto f = make_factor(g, ms, theta);
  // Midpoint rule over [-7, 7] x [-7, 7].
  const int steps = 160;
  const double lo = -7.0, hi = 7.0, dx = (hi - lo) / steps;
  double total = 0.0;
  for (int i = 0; i < steps; ++i)
    for (int j = 0; j < steps; ++j) {
      std::vector<double> config{lo + (i + 0.5) * dx, lo + (j + 0.5) * dx};
      total += f.density(config) * dx * dx;
    }
  CHECK_THAT(total, WithinAbs(1.0, 1e-3));
}

TEST_CASE("finite-difference fallback agrees with the analytic density", "[district]") {
  // A clique of three continuous variables forces the fallback; the analytic
  // product-copula density composed with the marginal densities is the oracle.
  Admg g;
  g.add_continuous("A");
  g.add_continuous("B");
  g.add_continuous("C");
  g.add_bidirected_edge(0, 1);
  g.add_bidirected_edge(1, 2);
  g.add_bidirected_edge(0, 2);
  std::vector<Marginal> ms{gaussian(0, 0.0, 1.0), gaussian(1, 0.2, 1.3), gaussian(2, -0.4, 0.7)};
  auto ds = districts(g);
  REQUIRE(ds[0].cliques.size() == 1);
  REQUIRE(ds[0].cliques[0].size() == 3);
  std::vector<double> theta{2.5};
  DistrictFactor f(ds[0], ms, theta);
  ProductCopula pc(3, {{0, 1, 2}}, theta);
  Rng rng(31);
  for (int trial = 0; trial < 8; ++trial) {
    std::vector<double> config{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                               rng.uniform(-1.0, 1.0)};
    std::vector<double> u(3);
    double marg = 0.0;
    for (int v = 0; v < 3; ++v) {
      const auto& m = std::get<GaussianMarginal>(ms[v]);
      u[v] = m.cdf(config[v], config);
      marg += m.logpdf(config[v], config);
    }
    double analytic = pc.density(u) * std::exp(marg);
    CHECK_THAT(f.density(config), WithinRel(analytic, 2e-3));
  }
}

TEST_CASE("mixed-kind districts are rejected at evaluation", "[district]") {
  Admg g;
  g.add_ordinal("A");
  g.add_continuous("B");
  g.add_bidirected_edge(0, 1);
  Rng rng(37);
  std::vector<Marginal> ms{testutil::random_ordinal_marginal(g, 0, rng), gaussian(1, 0.0, 1.0)};
  std::vector<double> theta{1.0};
  auto f = make_factor(g, ms, theta);
  std::vector<double> config{0.0, 0.3};
  CHECK_THROWS_MATCHES(f.pmf(config), std::invalid_argument,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("mixed")));
  CHECK_THROWS_AS(f.density(config), std::invalid_argument);
}
