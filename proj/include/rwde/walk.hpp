#pragma once

// The discrete walk Y_n, renewal times in direction e_1, and slab statistics.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rwde/dirichlet.hpp"
#include "rwde/lattice.hpp"
#include "rwde/rng.hpp"
#include "rwde/site_cache.hpp"

namespace rwde {

/// A nearest-neighbour path started at the origin, stored as one direction byte per step.
class Trajectory {
 public:
  explicit Trajectory(int dim) : dim_(dim) {}

  /// Throws ErrorKind::Precondition unless consecutive sites are adjacent and the first is the origin.
  static Trajectory from_positions(int dim, std::span<const Site> positions);
  /// e_1 coordinates only; the other axes are filled with transverse moves (+e_2 / -e_2 alternately)
  /// whenever the level does not change, so the result is a genuine lattice path. Needs dim >= 2
  /// for flat stretches.
  static Trajectory from_levels(int dim, std::span<const std::int64_t> levels);

  int dim() const noexcept { return dim_; }
  /// Number of positions (steps + 1).
  std::size_t size() const noexcept { return moves_.size() + 1; }
  std::size_t steps() const noexcept { return moves_.size(); }
  const std::vector<std::uint8_t>& moves() const noexcept { return moves_; }

  void push(int dir) { moves_.push_back(static_cast<std::uint8_t>(dir)); }
  void truncate(std::size_t positions) { moves_.resize(positions == 0 ? 0 : positions - 1); }

  std::vector<Site> positions() const;
  std::vector<std::int64_t> levels() const;
  Site end() const;

  template <class F>
  void for_each_position(F&& f) const {
    Site s{};
    f(std::size_t{0}, s);
    for (std::size_t n = 0; n < moves_.size(); ++n) {
      s = neighbor(s, moves_[n], dim_);
      f(n + 1, s);
    }
  }

 private:
  int dim_;
  std::vector<std::uint8_t> moves_;
};

/// One step from `pos`: pos + e_i with probability omega(pos, pos + e_i).
/// Throws ErrorKind::Internal if the site vector is off normalization by more than 1e-9.
Site step(const TransitionField& field, const Site& pos, Rng& rng);

/// `steps` steps of the walk from the origin in `field`, driven by Rng(walk_seed).
Trajectory simulate_walk(const TransitionField& field, std::uint64_t walk_seed, std::size_t steps);

struct RenewalPolicy {
  int k_discard = 2;              // trailing renewals always dropped
  std::int64_t safety_band = 20;  // renewals with level > record - band are dropped
};

struct RenewalLog {
  std::vector<std::int64_t> renewal_indices;  // tau_1 < tau_2 < ... relative to the finite path
  std::vector<std::int64_t> levels;           // Y_{tau_i} . e_1
  std::int64_t horizon = 0;                   // positions in the path
  std::int64_t record_level = 0;              // max level over the path
  std::size_t confirmed_count = 0;            // leading renewals kept by the policy
};

/// Streaming finite-horizon renewal detection: one pass, keeping the running
/// record level and the stack of still-valid candidates.
class RenewalTracker {
 public:
  void observe(std::int64_t index, std::int64_t level) {
    if (first_ || level > record_) {
      candidates_.push_back({index, level});
      record_ = level;
      first_ = false;
    } else {
      while (!candidates_.empty() && candidates_.back().level >= level) candidates_.pop_back();
    }
    ++count_;
  }

  std::size_t candidate_count() const noexcept { return candidates_.size(); }
  /// Candidates at levels strictly below `level`.
  std::size_t candidates_below(std::int64_t level) const noexcept;
  std::int64_t record() const noexcept { return record_; }

  RenewalLog finish(const RenewalPolicy& policy = {}) const;

 private:
  struct Candidate {
    std::int64_t index;
    std::int64_t level;
  };
  std::vector<Candidate> candidates_;
  std::int64_t record_ = 0;
  std::int64_t count_ = 0;
  bool first_ = true;
};

/// Apply the confirmation policy to a raw log in place.
void confirm_renewals(RenewalLog& log, const RenewalPolicy& policy);

RenewalLog detect_renewals(const Trajectory& traj, const RenewalPolicy& policy = {});

struct SlabRecord {
  std::uint32_t replica = 0;
  std::uint32_t slab_index = 0;  // i for the slab [tau_i, tau_{i+1}), 1-based
  std::int64_t tau_gap = 0;
  Site displacement{};
  std::int64_t distinct_points = 0;
};

/// Slabs i >= 2 between confirmed renewals of `log` (tau_1 slab excluded).
std::vector<SlabRecord> slab_records(const Trajectory& traj, const RenewalLog& log, std::uint32_t replica = 0);

/// Walk driver on a SiteCache. The observer receives (step index n >= 1,
/// site index after the step, direction taken).
class CachedWalk {
 public:
  CachedWalk(SiteCache& cache, std::uint64_t walk_seed) : cache_(cache), rng_(walk_seed), current_(cache.index_of(Site{})) {
    cache_.mark_visited(current_);
  }

  std::int32_t current() const noexcept { return current_; }
  std::int64_t time() const noexcept { return time_; }

  template <class Observer>
  void advance(std::int64_t steps, Observer&& obs) {
    for (std::int64_t k = 0; k < steps; ++k) {
      const int dir = choose_direction(cache_.probs(current_), rng_.uniform());
      current_ = cache_.neighbor(current_, dir);
      cache_.mark_visited(current_);
      ++time_;
      obs(time_, current_, dir);
    }
  }

  /// Advance until `stop()` returns true (checked every `check_every` steps) or `max_steps` total.
  template <class Observer, class Stop>
  void advance_until(std::int64_t max_steps, std::int64_t check_every, Observer&& obs, Stop&& stop) {
    while (time_ < max_steps) {
      advance(std::min(check_every, max_steps - time_), obs);
      if (stop()) break;
    }
  }

 private:
  SiteCache& cache_;
  Rng rng_;
  std::int32_t current_;
  std::int64_t time_ = 0;
};

/// Number of distinct visited sites of a cache per e_1 level, as a dense table from `min_level`.
struct LevelCensus {
  std::int64_t min_level = 0;
  std::vector<std::int64_t> counts;
  std::int64_t between(std::int64_t lo, std::int64_t hi) const;  // levels in [lo, hi)
};
LevelCensus visited_level_census(const SiteCache& cache);

struct ReplicaDiagnostics {
  std::size_t requested = 0;
  std::size_t used = 0;
  std::size_t dropped_few_renewals = 0;  // fewer than 3 confirmed renewals within the horizon
  std::size_t short_of_budget = 0;       // used replicas that hit the horizon before the slab budget
  std::int64_t total_steps = 0;
};

struct ReplicaBatch {
  std::vector<SlabRecord> records;  // sorted by (replica, slab_index)
  ReplicaDiagnostics diagnostics;
};

struct ReplicaRequest {
  AlphaParams alpha;
  std::vector<std::uint64_t> env_seeds;
  std::int64_t horizon = 0;
  std::int64_t slab_budget = 0;  // per replica; stop early once this many slabs are safely below the record
  RenewalPolicy policy{};
  int threads = 1;
};

/// Independent replicas (fresh environment each), pooled slab records for slab indices >= 2.
ReplicaBatch run_replicas(const ReplicaRequest& request);

/// Walk seed paired with an environment seed.
inline std::uint64_t walk_seed_for(std::uint64_t env_seed) { return derive_seed(env_seed, 0x77A1CULL, 0); }

}  // namespace rwde
