#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mcdn {

namespace detail {

inline double ipow(double base, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

// Stirling numbers of the second kind, S(n, k).
inline double stirling2(int n, int k) {
  constexpr int N = 32;
  static const auto table = [] {
    std::vector<double> t(N * N, 0.0);
    t[0] = 1.0;  // S(0,0)
    for (int n = 1; n < N; ++n)
      for (int k = 1; k <= n; ++k)
        t[n * N + k] = k * t[(n - 1) * N + k] + t[(n - 1) * N + k - 1];
    return t;
  }();
  return table[n * N + k];
}

inline void check_unit_interval(std::span<const double> u) {
  for (double v : u)
    if (!(v >= 0.0 && v <= 1.0))
      throw std::domain_error("copula argument " + std::to_string(v) + " outside [0,1]");
}

}  // namespace detail

// Frank Archimedean copula with generator
//   psi(u) = -log((exp(-theta u) - 1) / (exp(-theta) - 1)),
// giving C(u) = -(1/theta) log(1 + prod_i (e^{-theta u_i} - 1) / (e^{-theta} - 1)^{t-1}).
// Any real theta is admissible for t = 2; complete monotonicity requires
// theta > 0 once t >= 3.  |theta| below independence_eps evaluates the
// product copula, which removes the 0/0 at the origin of the family.
class FrankCopula {
 public:
  static constexpr double independence_eps = 1e-8;

  FrankCopula(int dim, double theta) : dim_(dim), theta_(theta) {
    if (dim_ < 2) throw std::invalid_argument("FrankCopula needs dimension >= 2");
    indep_ = std::abs(theta_) < independence_eps;
    if (!indep_ && dim_ >= 3 && theta_ < 0.0)
      throw std::invalid_argument("Frank copula with dimension >= 3 needs theta > 0");
    if (!indep_) {
      d_ = std::expm1(-theta_);
      denom_ = detail::ipow(d_, dim_ - 1);
    }
  }

  int dim() const { return dim_; }
  double theta() const { return theta_; }
  bool independent() const { return indep_; }

  double cdf(std::span<const double> u) const {
    check(u);
    if (indep_) {
      double r = 1.0;
      for (double v : u) r *= v;
      return r;
    }
    double num = 1.0;
    for (double v : u) num *= std::expm1(-theta_ * v);
    return -std::log1p(num / denom_) / theta_;
  }

  // Mixed partial derivative with respect to the arguments flagged in
  // `which` (bit i = differentiate in u_i); which == 0 returns the CDF.
  // With P = prod_i g(u_i) / D^{t-1} and C = -(1/theta) log(1 + P), the
  // derivative over a set T expands over set partitions of T; because P is a
  // product of univariate factors every partition of the same size
  // contributes identically, which collapses the sum to Stirling numbers:
  //   d_T C = sum_k S(|T|,k) f^(k)(P) P^k prod_{j in T} g'(u_j)/g(u_j).
  double partial(std::span<const double> u, std::uint32_t which) const {
    check(u);
    if (which == 0) return cdf(u);
    if (indep_) {
      double r = 1.0;
      for (int i = 0; i < dim_; ++i)
        if (!(which & (1u << i))) r *= u[i];
      return r;
    }
    const int m = std::popcount(which);
    double sum = 0.0;
    std::vector<double> g(dim_), gp(dim_);
    double p = 1.0 / denom_;
    for (int i = 0; i < dim_; ++i) {
      g[i] = std::expm1(-theta_ * u[i]);
      gp[i] = -theta_ * std::exp(-theta_ * u[i]);
      p *= g[i];
    }
    const double one_p = 1.0 + p;
    double factk = 1.0;  // (k-1)!
    for (int k = 1; k <= m; ++k) {
      if (k > 1) factk *= (k - 1);
      double fk = -((k % 2 == 1) ? 1.0 : -1.0) * factk / (theta_ * detail::ipow(one_p, k));
      double a = 1.0 / detail::ipow(denom_, k);
      for (int i = 0; i < dim_; ++i) {
        if (which & (1u << i))
          a *= gp[i] * detail::ipow(g[i], k - 1);
        else
          a *= detail::ipow(g[i], k);
      }
      sum += detail::stirling2(m, k) * fk * a;
    }
    return sum;
  }

  double density(std::span<const double> u) const {
    return partial(u, (dim_ == 32) ? ~0u : (1u << dim_) - 1);
  }

 private:
  void check(std::span<const double> u) const {
    if (static_cast<int>(u.size()) != dim_)
      throw std::invalid_argument("Frank copula argument count mismatch");
    detail::check_unit_interval(u);
  }

  int dim_;
  double theta_;
  bool indep_ = true;
  double d_ = 0.0;      // expm1(-theta)
  double denom_ = 1.0;  // d^{dim-1}
};

// Product of clique copulas with power-corrected arguments:
//   C(u) = prod_S C_S(a_S) * prod_v a_v,   a_v = u_v^{1/(d_v+1)},
// where d_v counts the cliques containing v.  The exponents make every
// univariate margin uniform, so the product is itself a copula.  Vertices in
// no clique reduce to the bare factor u_v.
class ProductCopula {
 public:
  ProductCopula() = default;

  // `cliques` lists member positions (0-based, strictly increasing) per
  // clique; `thetas` is parallel to it.
  ProductCopula(int members, std::vector<std::vector<int>> cliques,
                std::span<const double> thetas)
      : members_(members), clique_pos_(std::move(cliques)) {
    if (thetas.size() != clique_pos_.size())
      throw std::invalid_argument("one theta per clique required");
    counts_.assign(members_, 0);
    for (std::size_t s = 0; s < clique_pos_.size(); ++s) {
      const auto& c = clique_pos_[s];
      if (c.size() < 2) throw std::invalid_argument("cliques need at least two members");
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (c[i] < 0 || c[i] >= members_) throw std::invalid_argument("clique position out of range");
        if (i > 0 && c[i] <= c[i - 1])
          throw std::invalid_argument("clique positions must be strictly increasing");
        ++counts_[c[i]];
      }
      copulas_.emplace_back(static_cast<int>(c.size()), thetas[s]);
    }
    beta_.resize(members_);
    for (int v = 0; v < members_; ++v) beta_[v] = 1.0 / (counts_[v] + 1);
  }

  int dim() const { return members_; }
  std::size_t clique_count() const { return clique_pos_.size(); }
  const std::vector<std::vector<int>>& clique_positions() const { return clique_pos_; }
  const std::vector<FrankCopula>& clique_copulas() const { return copulas_; }
  int membership_count(int v) const { return counts_.at(v); }
  double exponent(int v) const { return beta_.at(v); }

  double cdf(std::span<const double> u) const {
    check(u);
    std::vector<double> a(members_);
    for (int v = 0; v < members_; ++v) a[v] = std::pow(u[v], beta_[v]);
    double r = 1.0;
    std::vector<double> arg;
    for (std::size_t s = 0; s < clique_pos_.size(); ++s) {
      gather(a, clique_pos_[s], arg);
      r *= copulas_[s].cdf(arg);
    }
    for (int v = 0; v < members_; ++v) r *= a[v];
    return r;
  }

  // Inclusion-exclusion mass over the lattice cell (u_lo, u_hi]:
  //   sum over corners z of (-1)^{|z|} C(u(z)).  Exponential in the
  // dimension; tree_mass covers the large tree-structured case.
  double ie_mass(std::span<const double> u_hi, std::span<const double> u_lo) const {
    check(u_hi);
    check(u_lo);
    if (members_ > 25)
      throw std::invalid_argument("dense inclusion-exclusion limited to 25 members");
    std::vector<double> u(members_);
    double total = 0.0;
    for (std::uint32_t z = 0; z < (1u << members_); ++z) {
      for (int v = 0; v < members_; ++v) u[v] = (z & (1u << v)) ? u_lo[v] : u_hi[v];
      double sign = (std::popcount(z) % 2 == 0) ? 1.0 : -1.0;
      total += sign * cdf(u);
    }
    return total;
  }

  // A tree structure means every clique is an edge and the edges form a
  // forest over the members.
  bool has_tree_structure() const {
    for (const auto& c : clique_pos_)
      if (c.size() != 2) return false;
    // Acyclic check by union-find.
    std::vector<int> root(members_);
    for (int v = 0; v < members_; ++v) root[v] = v;
    auto find = [&](int v) {
      while (root[v] != v) v = root[v] = root[root[v]];
      return v;
    };
    for (const auto& c : clique_pos_) {
      int a = find(c[0]), b = find(c[1]);
      if (a == b) return false;
      root[a] = b;
    }
    return true;
  }

  // Same value as ie_mass, computed by sum-product message passing along the
  // tree in time linear in the member count.  Each member contributes a
  // two-state variable (upper or lower lattice corner, with alternating
  // sign); the factors are the bare a_v terms and the edge copulas.
  double tree_mass(std::span<const double> u_hi, std::span<const double> u_lo) const {
    check(u_hi);
    check(u_lo);
    if (!has_tree_structure())
      throw std::invalid_argument("tree evaluation needs edge cliques forming a forest");
    std::vector<std::array<double, 2>> a(members_);
    for (int v = 0; v < members_; ++v)
      a[v] = {std::pow(u_hi[v], beta_[v]), std::pow(u_lo[v], beta_[v])};

    std::vector<std::vector<std::pair<int, int>>> adj(members_);  // (neighbour, clique index)
    for (std::size_t s = 0; s < clique_pos_.size(); ++s) {
      adj[clique_pos_[s][0]].emplace_back(clique_pos_[s][1], static_cast<int>(s));
      adj[clique_pos_[s][1]].emplace_back(clique_pos_[s][0], static_cast<int>(s));
    }

    std::vector<char> visited(members_, 0);
    double total = 1.0;
    std::vector<std::array<double, 2>> msg(members_);  // message to parent, indexed by parent state
    for (int r = 0; r < members_; ++r) {
      if (visited[r]) continue;
      // Iterative post-order over the component rooted at r.
      std::vector<std::pair<int, int>> order;  // (vertex, parent)
      std::vector<std::pair<int, int>> stack{{r, -1}};
      visited[r] = 1;
      while (!stack.empty()) {
        auto [v, parent] = stack.back();
        stack.pop_back();
        order.emplace_back(v, parent);
        for (auto [w, s] : adj[v])
          if (!visited[w]) {
            visited[w] = 1;
            stack.emplace_back(w, v);
          }
      }
      std::vector<std::array<double, 2>> belief(members_);
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        auto [v, parent] = *it;
        belief[v] = {a[v][0], -a[v][1]};  // sign carried by the lower corner
        for (auto [w, s] : adj[v])
          if (w != parent) {
            belief[v][0] *= msg[w][0];
            belief[v][1] *= msg[w][1];
          }
        if (parent >= 0) {
          int s = -1;
          for (auto [w, si] : adj[v])
            if (w == parent) s = si;
          const FrankCopula& edge = copulas_[s];
          for (int zp = 0; zp < 2; ++zp) {
            double m = 0.0;
            for (int zv = 0; zv < 2; ++zv) {
              double args[2] = {a[v][zv], a[parent][zp]};
              m += belief[v][zv] * edge.cdf(std::span<const double>(args, 2));
            }
            msg[v][zp] = m;
          }
        } else {
          total *= belief[v][0] + belief[v][1];
        }
      }
    }
    return total;
  }

  // Density (mixed partial over all coordinates).  Differentiating the
  // product of factors sums over all ways of assigning each member to one
  // factor that contains it; the chain-rule term da_v/du_v factors out.
  double density(std::span<const double> u) const {
    check(u);
    std::vector<double> uu(u.begin(), u.end());
    for (double& v : uu) {
      if (v <= 0.0) return 0.0;
      if (v > 1.0) v = 1.0;
    }
    std::vector<double> a(members_), da(members_);
    for (int v = 0; v < members_; ++v) {
      a[v] = std::pow(uu[v], beta_[v]);
      da[v] = beta_[v] * std::pow(uu[v], beta_[v] - 1.0);
    }
    // Choice list per member: its cliques, then the bare factor.
    std::vector<std::vector<int>> choices(members_);
    for (std::size_t s = 0; s < clique_pos_.size(); ++s)
      for (int v : clique_pos_[s]) choices[v].push_back(static_cast<int>(s));
    double assignments = 1.0;
    for (int v = 0; v < members_; ++v) assignments *= choices[v].size() + 1;
    if (assignments > 4e6)
      throw std::invalid_argument("analytic density: too many derivative assignments");

    std::vector<int> pick(members_, 0);
    std::vector<std::uint32_t> mask(clique_pos_.size());
    std::vector<double> arg;
    double total = 0.0;
    while (true) {
      std::fill(mask.begin(), mask.end(), 0);
      double bare = 1.0;
      for (int v = 0; v < members_; ++v) {
        if (pick[v] < static_cast<int>(choices[v].size())) {
          int s = choices[v][pick[v]];
          const auto& pos = clique_pos_[s];
          for (std::size_t i = 0; i < pos.size(); ++i)
            if (pos[i] == v) mask[s] |= 1u << i;
        } else {
          continue;  // assigned to its bare factor: derivative handled by da
        }
        bare *= a[v];  // bare factor left undifferentiated
      }
      double term = bare;
      for (std::size_t s = 0; s < clique_pos_.size() && term != 0.0; ++s) {
        gather(a, clique_pos_[s], arg);
        term *= copulas_[s].partial(arg, mask[s]);
      }
      total += term;
      int v = 0;
      for (; v < members_; ++v) {
        if (++pick[v] <= static_cast<int>(choices[v].size())) break;
        pick[v] = 0;
      }
      if (v == members_) break;
    }
    for (int v = 0; v < members_; ++v) total *= da[v];
    return total;
  }

 private:
  void check(std::span<const double> u) const {
    if (static_cast<int>(u.size()) != members_)
      throw std::invalid_argument("product copula argument count mismatch");
    detail::check_unit_interval(u);
  }

  static void gather(const std::vector<double>& a, const std::vector<int>& pos,
                     std::vector<double>& out) {
    out.resize(pos.size());
    for (std::size_t i = 0; i < pos.size(); ++i) out[i] = a[pos[i]];
  }

  int members_ = 0;
  std::vector<std::vector<int>> clique_pos_;
  std::vector<FrankCopula> copulas_;
  std::vector<int> counts_;
  std::vector<double> beta_;
};

}  // namespace mcdn
