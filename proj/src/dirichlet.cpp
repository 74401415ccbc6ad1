#include "rwde/dirichlet.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace rwde {

AlphaParams::AlphaParams(int dim, std::vector<double> w) : d(dim), weights(std::move(w)) { validate(); }

void AlphaParams::validate() const {
  RWDE_REQUIRE(d >= 1 && d <= kMaxDim, ErrorKind::Parameter,
               "dimension must lie in [1, " + std::to_string(kMaxDim) + "], got " + std::to_string(d));
  RWDE_REQUIRE(weights.size() == static_cast<std::size_t>(2 * d), ErrorKind::Parameter,
               "expected " + std::to_string(2 * d) + " weights, got " + std::to_string(weights.size()));
  for (double w : weights) {
    RWDE_REQUIRE(std::isfinite(w) && w > 0.0, ErrorKind::Parameter, "weights must be finite and positive");
  }
}

AlphaParams AlphaParams::symmetric(int dim, double value) {
  return AlphaParams(dim, std::vector<double>(static_cast<std::size_t>(2 * dim), value));
}

std::vector<int> AlphaParams::canonical_permutation() const {
  validate();
  std::vector<int> perm(static_cast<std::size_t>(2 * d));
  std::iota(perm.begin(), perm.end(), 0);
  int best = -1;
  double best_abs = 0.0;
  for (int j = 0; j < d; ++j) {
    const double comp = std::abs(weights[j] - weights[j + d]);
    if (comp > best_abs) {
      best_abs = comp;
      best = j;
    }
  }
  if (best < 0) return perm;
  // Swap axis 0 with the chosen axis.
  std::swap(perm[0], perm[best]);
  std::swap(perm[d], perm[best + d]);
  // Flip the sign of the new first axis if needed.
  if (weights[perm[0]] < weights[perm[d]]) std::swap(perm[0], perm[d]);
  return perm;
}

AlphaParams AlphaParams::relabeled() const {
  const auto perm = canonical_permutation();
  std::vector<double> w(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) w[i] = weights[perm[i]];
  return AlphaParams(d, std::move(w));
}

bool ExponentSet::drift_is_zero() const noexcept {
  return std::all_of(drift.begin(), drift.end(), [](double v) { return v == 0.0; });
}

std::vector<int> ExponentSet::minimal_axes(double tol) const {
  std::vector<int> axes;
  for (std::size_t j = 0; j < kappa_j.size(); ++j) {
    if (std::abs(kappa_j[j] - kappa) <= tol) axes.push_back(static_cast<int>(j));
  }
  return axes;
}

ExponentSet compute_exponents(const AlphaParams& alpha) {
  alpha.validate();
  ExponentSet e;
  e.alpha_bar = std::accumulate(alpha.weights.begin(), alpha.weights.end(), 0.0);
  double max_pair = 0.0;
  e.kappa_j.resize(static_cast<std::size_t>(alpha.d));
  e.drift.resize(static_cast<std::size_t>(alpha.d));
  for (int j = 0; j < alpha.d; ++j) {
    const double pair = alpha.pair(j);
    max_pair = std::max(max_pair, pair);
    e.kappa_j[j] = 2.0 * e.alpha_bar - pair;
    e.drift[j] = alpha.weights[j] - alpha.weights[j + alpha.d];
  }
  e.kappa = 2.0 * e.alpha_bar - max_pair;
  e.kappa_prime = 3.0 * e.alpha_bar - 2.0 * max_pair;
  return e;
}

bool SiteDistribution::valid(double tol) const noexcept {
  double total = 0.0;
  for (double p : view()) {
    if (!(p > 0.0 && p <= 1.0)) return false;
    total += p;
  }
  return std::abs(total - 1.0) <= tol;
}

SiteDistribution SiteDistribution::uniform(int dim) {
  SiteDistribution s;
  s.dim = dim;
  for (int i = 0; i < 2 * dim; ++i) s.probs[i] = 1.0 / (2.0 * dim);
  return s;
}

SiteDistribution SiteDistribution::from(std::span<const double> p) {
  RWDE_REQUIRE(p.size() % 2 == 0 && p.size() >= 2 && p.size() <= 2 * kMaxDim, ErrorKind::Parameter,
               "site distribution needs 2d entries");
  SiteDistribution s;
  s.dim = static_cast<int>(p.size() / 2);
  std::copy(p.begin(), p.end(), s.probs.begin());
  return s;
}

Environment::Environment(AlphaParams alpha, std::uint64_t seed) : alpha_(std::move(alpha)), seed_(seed) {
  alpha_.validate();
}

SiteDistribution Environment::at(const Site& site) const {
  SiteDistribution out;
  out.dim = alpha_.d;
  CounterStream stream(hash_combine(seed_, site_hash(site)));
  sample_dirichlet(std::span<const double>(alpha_.weights), stream,
                   std::span<double>(out.probs.data(), static_cast<std::size_t>(2 * alpha_.d)));
  return out;
}

SiteDistribution PatchedField::at(const Site& site) const {
  if (auto it = overrides_.find(site); it != overrides_.end()) return it->second;
  return base_ ? base_->at(site) : SiteDistribution::uniform(dim_);
}

void PatchedField::set_edge(const Site& x, int dir, double forward, double backward) {
  const int n = 2 * dim_;
  const Site y = neighbor(x, dir, dim_);
  auto fill = [n](int keep, double mass) {
    SiteDistribution s;
    s.dim = n / 2;
    for (int i = 0; i < n; ++i) s.probs[i] = i == keep ? mass : (1.0 - mass) / (n - 1);
    return s;
  };
  overrides_[x] = fill(dir, forward);
  overrides_[y] = fill(opposite(dir, dim_), backward);
}

}  // namespace rwde
