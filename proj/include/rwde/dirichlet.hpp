#pragma once

// Dirichlet weights, their derived exponents, and the lazily sampled
// i.i.d. Dirichlet environment on Z^d.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "rwde/error.hpp"
#include "rwde/lattice.hpp"
#include "rwde/rng.hpp"

namespace rwde {

/// Dirichlet weights. weights[j] weights +e_{j+1}, weights[j + d] weights -e_{j+1}.
struct AlphaParams {
  int d = 0;
  std::vector<double> weights;

  AlphaParams() = default;
  AlphaParams(int dim, std::vector<double> w);

  /// Throws ErrorKind::Parameter on a bad dimension, length or non-positive weight.
  void validate() const;

  int directions() const noexcept { return 2 * d; }
  double pair(int axis) const { return weights[axis] + weights[axis + d]; }

  /// Permutation `perm` of direction indices (new index -> old index) after which
  /// the first axis carries a strictly positive drift component. Identity when the
  /// drift vanishes. The largest |drift| axis is moved first (lowest index on ties).
  std::vector<int> canonical_permutation() const;

  /// Weights relabelled by canonical_permutation().
  AlphaParams relabeled() const;

  static AlphaParams symmetric(int dim, double value);
};

struct ExponentSet {
  double alpha_bar = 0.0;
  double kappa = 0.0;
  double kappa_prime = 0.0;
  std::vector<double> kappa_j;
  std::vector<double> drift;

  bool drift_is_zero() const noexcept;
  bool ballistic() const noexcept { return kappa > 1.0; }
  /// Axes (0-based) with kappa_j == kappa.
  std::vector<int> minimal_axes(double tol = 1e-12) const;
};

ExponentSet compute_exponents(const AlphaParams& alpha);

/// Transition vector at one site: probs[i] = omega(x, x + e_i) in direction-index order.
struct SiteDistribution {
  int dim = 0;
  std::array<double, 2 * kMaxDim> probs{};

  std::span<const double> view() const noexcept { return {probs.data(), static_cast<std::size_t>(2 * dim)}; }
  double operator[](int dir) const noexcept { return probs[static_cast<std::size_t>(dir)]; }

  /// Normalized within `tol` and every entry in (0, 1].
  bool valid(double tol = 1e-12) const noexcept;

  static SiteDistribution uniform(int dim);
  static SiteDistribution from(std::span<const double> p);
};

/// Anything that assigns a transition vector to every lattice site.
class TransitionField {
 public:
  virtual ~TransitionField() = default;
  virtual int dim() const noexcept = 0;
  virtual SiteDistribution at(const Site& site) const = 0;
};

// ---------------------------------------------------------------------------
// Gamma / Dirichlet variates in log space.

/// log of a Gamma(shape, 1) variate. Marsaglia-Tsang for shape >= 1; for
/// shape < 1 the boost G(a) = G(a + 1) U^{1/a} is applied in log space so tiny
/// shapes never underflow.
template <class Gen>
double log_gamma_variate(double shape, Gen& gen) {
  if (shape < 1.0) {
    return log_gamma_variate(shape + 1.0, gen) + std::log(gen.uniform()) / shape;
  }
  const double dd = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * dd);
  for (;;) {
    double x;
    double v;
    do {
      x = gen.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = gen.uniform();
    const double lv = std::log(v);
    if (std::log(u) < 0.5 * x * x + dd - dd * v + dd * lv) return std::log(dd) + lv;
  }
}

constexpr double kMinComponent = 1e-300;

/// Dirichlet(alpha) draw written into `out` (same length as alpha).
template <class Gen>
void sample_dirichlet(std::span<const double> alpha, Gen& gen, std::span<double> out) {
  std::array<double, 2 * kMaxDim> logs{};
  double top = -INFINITY;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    logs[i] = log_gamma_variate(alpha[i], gen);
    top = std::max(top, logs[i]);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    out[i] = std::max(std::exp(logs[i] - top), kMinComponent);
    total += out[i];
  }
  for (std::size_t i = 0; i < alpha.size(); ++i) out[i] /= total;
}

/// The i.i.d. Dirichlet environment: a pure function of (seed, site).
class Environment final : public TransitionField {
 public:
  Environment(AlphaParams alpha, std::uint64_t seed);

  int dim() const noexcept override { return alpha_.d; }
  SiteDistribution at(const Site& site) const override;

  const AlphaParams& alpha() const noexcept { return alpha_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  AlphaParams alpha_;
  std::uint64_t seed_;
};

/// Free-function spelling of Environment::at.
inline SiteDistribution sample_site(const Environment& env, const Site& site) { return env.at(site); }

/// A field that defaults to a base field (or the uniform walk) with per-site overrides.
class PatchedField final : public TransitionField {
 public:
  explicit PatchedField(int dim) : dim_(dim) {}
  explicit PatchedField(const TransitionField& base) : dim_(base.dim()), base_(&base) {}

  int dim() const noexcept override { return dim_; }
  SiteDistribution at(const Site& site) const override;

  /// Stores `dist` verbatim; validity is checked when the walk reads it.
  void set(const Site& site, const SiteDistribution& dist) { overrides_[site] = dist; }
  /// Convenience for building a trap: sets omega(x,y) on x and omega(y,x) on y,
  /// spreading the remaining mass uniformly over the other directions.
  void set_edge(const Site& x, int dir, double forward, double backward);

 private:
  int dim_;
  const TransitionField* base_ = nullptr;
  std::unordered_map<Site, SiteDistribution, SiteHash> overrides_;
};

}  // namespace rwde
