#pragma once

// Per-replica memo of the environment around a running walk.
//
// Sites get dense indices on first touch. Each index carries its transition
// vector, lazily resolved neighbour links (so a bouncing walk never hashes),
// a visited flag, and the lazily evaluated trap partner direction.

#include <cstdint>
#include <span>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "rwde/dirichlet.hpp"
#include "rwde/lattice.hpp"

namespace rwde {

class SiteCache {
 public:
  static constexpr std::int8_t kTrapUnknown = -2;
  static constexpr std::int8_t kNoTrap = -1;

  explicit SiteCache(const TransitionField& field);

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return sites_.size(); }

  /// Dense index of `s`, sampling and validating its distribution on first touch.
  /// Throws ErrorKind::Internal when the field returns a vector that is not
  /// normalized to within 1e-9.
  std::int32_t index_of(const Site& s);

  const Site& site(std::int32_t idx) const { return sites_[static_cast<std::size_t>(idx)]; }
  std::span<const double> probs(std::int32_t idx) const {
    return {probs_.data() + static_cast<std::size_t>(idx) * stride_, stride_};
  }
  double prob(std::int32_t idx, int dir) const { return probs_[static_cast<std::size_t>(idx) * stride_ + dir]; }

  std::int32_t neighbor(std::int32_t idx, int dir) {
    const auto link = links_[static_cast<std::size_t>(idx) * stride_ + dir];
    return link >= 0 ? link : resolve_link(idx, dir);
  }

  /// Direction from `idx` to its trap partner, or kNoTrap.
  int trap_dir(std::int32_t idx) {
    const auto t = trap_[static_cast<std::size_t>(idx)];
    return t == kTrapUnknown ? evaluate_trap(idx) : t;
  }

  void mark_visited(std::int32_t idx) { visited_[static_cast<std::size_t>(idx)] = 1; }
  bool visited(std::int32_t idx) const { return visited_[static_cast<std::size_t>(idx)] != 0; }

 private:
  std::int32_t resolve_link(std::int32_t idx, int dir);
  int evaluate_trap(std::int32_t idx);

  const TransitionField& field_;
  int dim_;
  std::size_t stride_;
  absl::flat_hash_map<Site, std::int32_t, SiteHash> index_;
  std::vector<Site> sites_;
  std::vector<double> probs_;
  std::vector<std::int32_t> links_;
  std::vector<std::int8_t> trap_;
  std::vector<std::uint8_t> visited_;
};

/// Direction index selected by a uniform u in (0,1) against `probs`.
inline int choose_direction(std::span<const double> probs, double u) noexcept {
  const int last = static_cast<int>(probs.size()) - 1;
  for (int i = 0; i < last; ++i) {
    if (u < probs[static_cast<std::size_t>(i)]) return i;
    u -= probs[static_cast<std::size_t>(i)];
  }
  return last;
}

}  // namespace rwde
