#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "mcdn/copulas.hpp"
#include "mcdn/districts.hpp"
#include "mcdn/marginals.hpp"

namespace mcdn {

// Policy for masses produced by inclusion-exclusion: tiny negatives are
// floating-point cancellation and snap to zero, anything past the hard limit
// means the supplied CDF is not d-increasing.
inline double finalize_mass(double mass) {
  if (mass < -1e-9)
    throw std::runtime_error("CDF not d-increasing: inclusion-exclusion mass " +
                             std::to_string(mass));
  if (mass < 0.0) return 0.0;
  if (mass > 1.0) return 1.0;
  return mass;
}

// Probability mass from a CDF over d ordinal coordinates via
//   P(x) = sum_{z in {0,1}^d} (-1)^{|z|} F(x - z);
// corners that fall below the minimum level contribute F = 0 and are skipped.
template <class Cdf>
double pmf_from_cdf(Cdf&& cdf, std::span<const int> x) {
  const int d = static_cast<int>(x.size());
  if (d > 25) throw std::invalid_argument("pmf_from_cdf limited to 25 coordinates");
  std::vector<int> corner(x.begin(), x.end());
  double total = 0.0;
  for (std::uint32_t z = 0; z < (1u << d); ++z) {
    bool below = false;
    for (int i = 0; i < d && !below; ++i) {
      corner[i] = x[i] - ((z >> i) & 1u);
      if (corner[i] < 0) below = true;
    }
    if (below) continue;
    double sign = (std::popcount(z) % 2 == 0) ? 1.0 : -1.0;
    total += sign * cdf(std::span<const int>(corner.data(), corner.size()));
  }
  return finalize_mass(total);
}

// The evaluation bundle for one (barren) district: member marginals plus the
// product copula over the district's cliques.  Member coordinates are looked
// up by position, parent values by vertex id in a full configuration.
class DistrictFactor {
 public:
  DistrictFactor() = default;

  DistrictFactor(District district, std::vector<Marginal> member_marginals,
                 std::span<const double> clique_thetas)
      : district_(std::move(district)), marginals_(std::move(member_marginals)) {
    if (!is_barren(district_))
      throw std::invalid_argument(
          "district is not barren; apply transform_artificial to the graph first");
    if (marginals_.size() != district_.members.size())
      throw std::invalid_argument("one marginal per district member required");
    for (std::size_t i = 0; i < marginals_.size(); ++i) {
      if (marginal_vertex(marginals_[i]) != district_.members[i])
        throw std::invalid_argument("marginal order must match district members");
      std::visit([](const auto& m) { m.validate(); }, marginals_[i]);
    }
    std::vector<std::vector<int>> positions;
    for (const auto& clique : district_.cliques) {
      std::vector<int> pos;
      for (VertexId v : clique) pos.push_back(member_position(v));
      positions.push_back(std::move(pos));
    }
    copula_ = ProductCopula(static_cast<int>(district_.members.size()), std::move(positions),
                            clique_thetas);
    ordinal_members_ = 0;
    for (const auto& m : marginals_)
      if (std::holds_alternative<OrdinalMarginal>(m)) ++ordinal_members_;
  }

  const District& district() const { return district_; }
  const ProductCopula& copula() const { return copula_; }
  const std::vector<Marginal>& member_marginals() const { return marginals_; }
  std::size_t member_count() const { return district_.members.size(); }
  bool all_ordinal() const { return ordinal_members_ == member_count(); }
  bool all_continuous() const { return ordinal_members_ == 0; }
  bool has_tree_structure() const { return copula_.has_tree_structure(); }

  // Conditional CDF of the member block: u_v = F_v(x_v | pa(v)) fed through
  // the product copula.  `member_values` follows the member order; parent
  // values are read from `config` by vertex id.
  double cdf(std::span<const double> member_values, std::span<const double> config) const {
    if (member_values.size() != member_count())
      throw std::invalid_argument("one value per district member required");
    std::vector<double> u(member_count());
    for (std::size_t i = 0; i < member_count(); ++i)
      u[i] = marginal_cdf(marginals_[i], member_values[i], config);
    return copula_.cdf(u);
  }

  // Conditional PMF via dense inclusion-exclusion (all members ordinal).
  double dense_pmf(std::span<const double> config) const {
    auto [u_hi, u_lo] = lattice_pairs(config);
    return finalize_mass(copula_.ie_mass(u_hi, u_lo));
  }

  // Linear-time tree evaluation; throws when the cliques do not form a tree.
  double tree_pmf(std::span<const double> config) const {
    auto [u_hi, u_lo] = lattice_pairs(config);
    return finalize_mass(copula_.tree_mass(u_hi, u_lo));
  }

  // Dispatches to the tree evaluator when possible; `used_tree` reports the
  // route taken so callers can see the fallback.
  double pmf(std::span<const double> config, bool* used_tree = nullptr) const {
    bool tree = has_tree_structure();
    if (used_tree) *used_tree = tree;
    return tree ? tree_pmf(config) : dense_pmf(config);
  }

  // Conditional density for an all-continuous district.  Cliques of size two
  // use the analytic copula density composed with the marginal densities;
  // districts containing larger cliques fall back to central finite
  // differences of the CDF with one step of Richardson extrapolation.
  double density(std::span<const double> config) const {
    require_kind(false);
    std::size_t n = member_count();
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = config[district_.members[i]];
    bool small_cliques = true;
    for (const auto& c : district_.cliques)
      if (c.size() > 2) small_cliques = false;
    if (small_cliques) {
      std::vector<double> u(n);
      double marg = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& m = std::get<GaussianMarginal>(marginals_[i]);
        u[i] = clamp_unit(m.cdf(x[i], config));
        marg += m.logpdf(x[i], config);
      }
      return copula_.density(u) * std::exp(marg);
    }
    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i)
      h[i] = 1e-4 * std::sqrt(std::get<GaussianMarginal>(marginals_[i]).variance);
    double coarse = fd_mixed(x, config, h);
    for (double& step : h) step *= 0.5;
    double fine = fd_mixed(x, config, h);
    return (4.0 * fine - coarse) / 3.0;  // central differences: error O(h^2)
  }

  // Log of the conditional mass/density, dispatching on the member kinds.
  double log_value(std::span<const double> config, bool* used_tree = nullptr) const {
    if (all_ordinal()) return std::log(pmf(config, used_tree));
    if (used_tree) *used_tree = false;
    return std::log(density(config));
  }

  std::pair<std::vector<double>, std::vector<double>> lattice_pairs(
      std::span<const double> config) const {
    require_kind(true);
    std::vector<double> u_hi(member_count()), u_lo(member_count());
    for (std::size_t i = 0; i < member_count(); ++i) {
      const auto& m = std::get<OrdinalMarginal>(marginals_[i]);
      int cfg = m.config_index(config);
      int level = detail::ordinal_value(config[district_.members[i]], m.cardinality,
                                        "vertex " + std::to_string(m.vertex));
      u_hi[i] = m.cdf_level(level, cfg);
      u_lo[i] = m.cdf_level(level - 1, cfg);
    }
    return {std::move(u_hi), std::move(u_lo)};
  }

 private:
  int member_position(VertexId v) const {
    auto it = std::lower_bound(district_.members.begin(), district_.members.end(), v);
    if (it == district_.members.end() || *it != v)
      throw std::invalid_argument("clique vertex is not a district member");
    return static_cast<int>(it - district_.members.begin());
  }

  void require_kind(bool ordinal) const {
    if (ordinal && !all_ordinal())
      throw std::invalid_argument(all_continuous()
                                      ? "mass evaluation needs an all-ordinal district"
                                      : "mixed ordinal/continuous district is unsupported");
    if (!ordinal && !all_continuous())
      throw std::invalid_argument(all_ordinal()
                                      ? "density evaluation needs an all-continuous district"
                                      : "mixed ordinal/continuous district is unsupported");
  }

  static double clamp_unit(double u) {
    if (u < 1e-300) return 1e-300;
    if (u > 1.0) return 1.0;
    return u;
  }

  double fd_mixed(std::span<const double> x, std::span<const double> config,
                  std::span<const double> h) const {
    const std::size_t n = x.size();
    if (n > 25) throw std::invalid_argument("finite-difference density limited to 25 members");
    std::vector<double> corner(n);
    double total = 0.0;
    for (std::uint32_t s = 0; s < (1u << n); ++s) {
      for (std::size_t i = 0; i < n; ++i)
        corner[i] = x[i] + (((s >> i) & 1u) ? 0.5 : -0.5) * h[i];
      double sign = ((n - std::popcount(s)) % 2 == 0) ? 1.0 : -1.0;
      total += sign * cdf(corner, config);
    }
    for (std::size_t i = 0; i < n; ++i) total /= h[i];
    return total;
  }

  District district_;
  std::vector<Marginal> marginals_;
  ProductCopula copula_;
  std::size_t ordinal_members_ = 0;
};

}  // namespace mcdn
