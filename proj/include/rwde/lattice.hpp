#pragma once

// Points and directions of Z^d.
//
// Direction indices follow the weight convention: index i in [0, d) is +e_{i+1},
// index i in [d, 2d) is -e_{i-d+1}. The opposite of direction i is (i + d) mod 2d.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <functional>

#include "rwde/rng.hpp"

namespace rwde {

constexpr int kMaxDim = 6;

struct Site {
  std::array<std::int32_t, kMaxDim> c{};

  constexpr std::int32_t operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
  constexpr std::int32_t& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  friend constexpr bool operator==(const Site&, const Site&) = default;
  friend constexpr auto operator<=>(const Site&, const Site&) = default;
};

constexpr int opposite(int dir, int dim) noexcept { return dir < dim ? dir + dim : dir - dim; }

/// Axis (0-based) of a direction index.
constexpr int axis_of(int dir, int dim) noexcept { return dir < dim ? dir : dir - dim; }

constexpr Site neighbor(Site s, int dir, int dim) noexcept {
  if (dir < dim) {
    ++s[dir];
  } else {
    --s[dir - dim];
  }
  return s;
}

/// Direction index d such that b = a + e_d, or -1 if the sites are not adjacent.
inline int direction_between(const Site& a, const Site& b, int dim) noexcept {
  int found = -1;
  for (int i = 0; i < dim; ++i) {
    const int delta = b[i] - a[i];
    if (delta == 0) continue;
    if (found != -1 || std::abs(delta) != 1) return -1;
    found = delta == 1 ? i : i + dim;
  }
  return found;
}

inline std::int64_t l1_norm(const Site& s, int dim) noexcept {
  std::int64_t n = 0;
  for (int i = 0; i < dim; ++i) n += std::abs(static_cast<std::int64_t>(s[i]));
  return n;
}

inline std::int64_t sup_norm(const Site& s, int dim) noexcept {
  std::int64_t n = 0;
  for (int i = 0; i < dim; ++i) n = std::max<std::int64_t>(n, std::abs(static_cast<std::int64_t>(s[i])));
  return n;
}

inline Site difference(const Site& a, const Site& b) noexcept {
  Site r;
  for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] - b[i];
  return r;
}

inline Site sum(const Site& a, const Site& b) noexcept {
  Site r;
  for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] + b[i];
  return r;
}

inline std::uint64_t site_hash(const Site& s) noexcept {
  std::uint64_t h = 0x51ED27;
  for (auto v : s.c) h = hash_combine(h, static_cast<std::uint32_t>(v));
  return h;
}

struct SiteHash {
  std::size_t operator()(const Site& s) const noexcept { return static_cast<std::size_t>(site_hash(s)); }
};

}  // namespace rwde
