#include "rwde/site_cache.hpp"

#include <cmath>
#include <limits>

namespace rwde {

SiteCache::SiteCache(const TransitionField& field)
    : field_(field), dim_(field.dim()), stride_(static_cast<std::size_t>(2 * field.dim())) {}

std::int32_t SiteCache::index_of(const Site& s) {
  if (auto it = index_.find(s); it != index_.end()) return it->second;
  const SiteDistribution dist = field_.at(s);
  RWDE_REQUIRE(dist.dim == dim_ && dist.valid(1e-9), ErrorKind::Internal, "corrupt site distribution");
  RWDE_REQUIRE(sites_.size() < static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()),
               ErrorKind::Capability, "site cache exhausted");
  const auto idx = static_cast<std::int32_t>(sites_.size());
  index_.emplace(s, idx);
  sites_.push_back(s);
  probs_.insert(probs_.end(), dist.probs.begin(), dist.probs.begin() + static_cast<std::ptrdiff_t>(stride_));
  links_.insert(links_.end(), stride_, -1);
  trap_.push_back(kTrapUnknown);
  visited_.push_back(0);
  return idx;
}

std::int32_t SiteCache::resolve_link(std::int32_t idx, int dir) {
  const Site target = rwde::neighbor(sites_[static_cast<std::size_t>(idx)], dir, dim_);
  const std::int32_t other = index_of(target);
  links_[static_cast<std::size_t>(idx) * stride_ + dir] = other;
  links_[static_cast<std::size_t>(other) * stride_ + opposite(dir, dim_)] = idx;
  return other;
}

int SiteCache::evaluate_trap(std::int32_t idx) {
  // omega(x, y) > 3/2 - omega(y, x) > 1/2 singles out at most one direction.
  int dir = kNoTrap;
  for (std::size_t i = 0; i < stride_; ++i) {
    if (prob(idx, static_cast<int>(i)) > 0.5) dir = static_cast<int>(i);
  }
  if (dir == kNoTrap) {
    trap_[static_cast<std::size_t>(idx)] = kNoTrap;
    return kNoTrap;
  }
  const std::int32_t other = neighbor(idx, dir);
  const int back = opposite(dir, dim_);
  const double forward = prob(idx, dir);
  const double backward = prob(other, back);
  if (forward + backward > 1.5) {
    trap_[static_cast<std::size_t>(idx)] = static_cast<std::int8_t>(dir);
    trap_[static_cast<std::size_t>(other)] = static_cast<std::int8_t>(back);
    return dir;
  }
  trap_[static_cast<std::size_t>(idx)] = kNoTrap;
  if (backward > 0.5) trap_[static_cast<std::size_t>(other)] = kNoTrap;
  return kNoTrap;
}

}  // namespace rwde
