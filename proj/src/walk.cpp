#include "rwde/walk.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "rwde/parallel.hpp"

namespace rwde {

Trajectory Trajectory::from_positions(int dim, std::span<const Site> positions) {
  Trajectory t(dim);
  RWDE_REQUIRE(!positions.empty() && positions.front() == Site{}, ErrorKind::Precondition,
               "trajectory must start at the origin");
  for (std::size_t i = 1; i < positions.size(); ++i) {
    const int dir = direction_between(positions[i - 1], positions[i], dim);
    RWDE_REQUIRE(dir >= 0, ErrorKind::Precondition, "consecutive positions must be lattice neighbours");
    t.push(dir);
  }
  return t;
}

Trajectory Trajectory::from_levels(int dim, std::span<const std::int64_t> levels) {
  RWDE_REQUIRE(!levels.empty() && levels.front() == 0, ErrorKind::Precondition, "levels must start at 0");
  Trajectory t(dim);
  bool up = true;
  for (std::size_t i = 1; i < levels.size(); ++i) {
    const auto delta = levels[i] - levels[i - 1];
    if (delta == 1) {
      t.push(0);
    } else if (delta == -1) {
      t.push(dim);
    } else {
      RWDE_REQUIRE(delta == 0 && dim >= 2, ErrorKind::Precondition, "levels must move by at most one");
      t.push(up ? 1 : 1 + dim);
      up = !up;
    }
  }
  return t;
}

std::vector<Site> Trajectory::positions() const {
  std::vector<Site> out;
  out.reserve(size());
  for_each_position([&](std::size_t, const Site& s) { out.push_back(s); });
  return out;
}

std::vector<std::int64_t> Trajectory::levels() const {
  std::vector<std::int64_t> out;
  out.reserve(size());
  for_each_position([&](std::size_t, const Site& s) { out.push_back(s[0]); });
  return out;
}

Site Trajectory::end() const {
  Site last{};
  for_each_position([&](std::size_t, const Site& s) { last = s; });
  return last;
}

Site step(const TransitionField& field, const Site& pos, Rng& rng) {
  const SiteDistribution dist = field.at(pos);
  RWDE_REQUIRE(dist.valid(1e-9), ErrorKind::Internal, "corrupt site distribution");
  return neighbor(pos, choose_direction(dist.view(), rng.uniform()), field.dim());
}

Trajectory simulate_walk(const TransitionField& field, std::uint64_t walk_seed, std::size_t steps) {
  SiteCache cache(field);
  CachedWalk walk(cache, walk_seed);
  Trajectory traj(field.dim());
  traj.truncate(0);
  walk.advance(static_cast<std::int64_t>(steps), [&](std::int64_t, std::int32_t, int dir) { traj.push(dir); });
  return traj;
}

std::size_t RenewalTracker::candidates_below(std::int64_t level) const noexcept {
  const auto it = std::lower_bound(candidates_.begin(), candidates_.end(), level,
                                   [](const Candidate& c, std::int64_t v) { return c.level < v; });
  return static_cast<std::size_t>(it - candidates_.begin());
}

void confirm_renewals(RenewalLog& log, const RenewalPolicy& policy) {
  const std::size_t n = log.renewal_indices.size();
  std::size_t keep = n > static_cast<std::size_t>(policy.k_discard) ? n - static_cast<std::size_t>(policy.k_discard) : 0;
  while (keep > 0 && log.levels[keep - 1] > log.record_level - policy.safety_band) --keep;
  log.confirmed_count = keep;
}

RenewalLog RenewalTracker::finish(const RenewalPolicy& policy) const {
  RenewalLog log;
  log.horizon = count_;
  log.record_level = record_;
  log.renewal_indices.reserve(candidates_.size());
  log.levels.reserve(candidates_.size());
  for (const auto& c : candidates_) {
    log.renewal_indices.push_back(c.index);
    log.levels.push_back(c.level);
  }
  confirm_renewals(log, policy);
  return log;
}

RenewalLog detect_renewals(const Trajectory& traj, const RenewalPolicy& policy) {
  RenewalTracker tracker;
  traj.for_each_position(
      [&](std::size_t n, const Site& s) { tracker.observe(static_cast<std::int64_t>(n), s[0]); });
  return tracker.finish(policy);
}

std::vector<SlabRecord> slab_records(const Trajectory& traj, const RenewalLog& log, std::uint32_t replica) {
  std::vector<SlabRecord> out;
  if (log.confirmed_count < 3) return out;
  const auto positions = traj.positions();
  for (std::size_t i = 1; i + 1 < log.confirmed_count; ++i) {
    const auto from = static_cast<std::size_t>(log.renewal_indices[i]);
    const auto to = static_cast<std::size_t>(log.renewal_indices[i + 1]);
    std::unordered_set<Site, SiteHash> seen(positions.begin() + static_cast<std::ptrdiff_t>(from),
                                            positions.begin() + static_cast<std::ptrdiff_t>(to));
    SlabRecord r;
    r.replica = replica;
    r.slab_index = static_cast<std::uint32_t>(i + 1);
    r.tau_gap = static_cast<std::int64_t>(to - from);
    r.displacement = difference(positions[to], positions[from]);
    r.distinct_points = static_cast<std::int64_t>(seen.size());
    out.push_back(r);
  }
  return out;
}

std::int64_t LevelCensus::between(std::int64_t lo, std::int64_t hi) const {
  std::int64_t total = 0;
  for (std::int64_t l = std::max(lo, min_level); l < hi && l - min_level < static_cast<std::int64_t>(counts.size()); ++l) {
    total += counts[static_cast<std::size_t>(l - min_level)];
  }
  return total;
}

LevelCensus visited_level_census(const SiteCache& cache) {
  LevelCensus census;
  if (cache.size() == 0) return census;
  std::int64_t lo = cache.site(0)[0];
  std::int64_t hi = lo;
  for (std::size_t i = 0; i < cache.size(); ++i) {
    const auto l = cache.site(static_cast<std::int32_t>(i))[0];
    lo = std::min<std::int64_t>(lo, l);
    hi = std::max<std::int64_t>(hi, l);
  }
  census.min_level = lo;
  census.counts.assign(static_cast<std::size_t>(hi - lo + 1), 0);
  for (std::size_t i = 0; i < cache.size(); ++i) {
    const auto idx = static_cast<std::int32_t>(i);
    if (cache.visited(idx)) ++census.counts[static_cast<std::size_t>(cache.site(idx)[0] - lo)];
  }
  return census;
}

namespace {

struct ReplicaOutcome {
  std::vector<SlabRecord> records;
  std::int64_t steps = 0;
  bool dropped = false;
};

ReplicaOutcome run_one_replica(const ReplicaRequest& req, std::uint32_t replica) {
  const std::uint64_t env_seed = req.env_seeds[replica];
  Environment env(req.alpha, env_seed);
  SiteCache cache(env);
  CachedWalk walk(cache, walk_seed_for(env_seed));
  RenewalTracker tracker;
  tracker.observe(0, 0);
  // Positions at renewal candidates are recovered from the cache: record the
  // site index at every new record level.
  std::vector<std::int32_t> record_site{walk.current()};
  std::vector<std::int64_t> record_time{0};
  auto obs = [&](std::int64_t n, std::int32_t idx, int) {
    const std::int64_t level = cache.site(idx)[0];
    if (level > tracker.record()) {
      record_site.push_back(idx);
      record_time.push_back(n);
    }
    tracker.observe(n, level);
  };
  const std::int64_t need = req.slab_budget + req.policy.k_discard + 2;
  walk.advance_until(req.horizon, 4096, obs, [&] {
    return req.slab_budget > 0 &&
           static_cast<std::int64_t>(tracker.candidates_below(tracker.record() - req.policy.safety_band)) >= need;
  });

  ReplicaOutcome out;
  out.steps = walk.time();
  const RenewalLog log = tracker.finish(req.policy);
  if (log.confirmed_count < 3) {
    out.dropped = true;
    return out;
  }
  const LevelCensus census = visited_level_census(cache);
  // Record levels are 0, 1, 2, ... in order, so the k-th record sits at level k.
  auto site_at_level = [&](std::int64_t level) { return cache.site(record_site[static_cast<std::size_t>(level)]); };
  std::size_t limit = log.confirmed_count;
  if (req.slab_budget > 0) limit = std::min<std::size_t>(limit, static_cast<std::size_t>(req.slab_budget) + 2);
  for (std::size_t i = 1; i + 1 < limit; ++i) {
    SlabRecord r;
    r.replica = replica;
    r.slab_index = static_cast<std::uint32_t>(i + 1);
    r.tau_gap = log.renewal_indices[i + 1] - log.renewal_indices[i];
    r.displacement = difference(site_at_level(log.levels[i + 1]), site_at_level(log.levels[i]));
    r.distinct_points = census.between(log.levels[i], log.levels[i + 1]);
    out.records.push_back(r);
  }
  return out;
}

}  // namespace

ReplicaBatch run_replicas(const ReplicaRequest& req) {
  req.alpha.validate();
  RWDE_REQUIRE(req.horizon > 0 && req.slab_budget >= 0, ErrorKind::Precondition, "horizon must be positive");
  std::vector<ReplicaOutcome> outcomes(req.env_seeds.size());
  parallel_for(outcomes.size(), req.threads,
               [&](std::size_t i) { outcomes[i] = run_one_replica(req, static_cast<std::uint32_t>(i)); });
  ReplicaBatch batch;
  batch.diagnostics.requested = outcomes.size();
  for (auto& o : outcomes) {
    batch.diagnostics.total_steps += o.steps;
    if (o.dropped) {
      ++batch.diagnostics.dropped_few_renewals;
      continue;
    }
    ++batch.diagnostics.used;
    if (req.slab_budget > 0 && static_cast<std::int64_t>(o.records.size()) < req.slab_budget) {
      ++batch.diagnostics.short_of_budget;
    }
    batch.records.insert(batch.records.end(), o.records.begin(), o.records.end());
  }
  return batch;
}

}  // namespace rwde
