#include "rwde/traps.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include "rwde/error.hpp"

namespace rwde {

std::vector<Edge> box_edges(int dim, int radius) {
  RWDE_REQUIRE(dim >= 1 && dim <= kMaxDim && radius >= 0, ErrorKind::Parameter, "bad box");
  std::vector<Edge> out;
  Site s{};
  for (int i = 0; i < dim; ++i) s[i] = -radius;
  for (;;) {
    for (int dir = 0; dir < dim; ++dir) {
      if (s[dir] < radius) out.push_back({s, dir});
    }
    int i = 0;
    while (i < dim && s[i] == radius) s[i++] = -radius;
    if (i == dim) break;
    ++s[i];
  }
  return out;
}

std::vector<Trap> find_traps(const TransitionField& field, std::span<const Edge> region) {
  const int dim = field.dim();
  std::vector<Trap> out;
  for (const auto& e : region) {
    const Site y = neighbor(e.x, e.dir, dim);
    const double forward = field.at(e.x)[e.dir];
    const double backward = field.at(y)[opposite(e.dir, dim)];
    if (!is_trap(forward, backward)) continue;
    out.push_back({e.x, y, axis_of(e.dir, dim), forward, backward, trap_strength(forward, backward)});
  }
  return out;
}

int FieldTrapLookup::partner_dir(const Site& s) const {
  const int dim = field_.dim();
  const SiteDistribution here = field_.at(s);
  for (int dir = 0; dir < 2 * dim; ++dir) {
    if (here[dir] <= 0.5) continue;
    const double back = field_.at(neighbor(s, dir, dim))[opposite(dir, dim)];
    return is_trap(here[dir], back) ? dir : -1;
  }
  return -1;
}

EdgeTrapLookup::EdgeTrapLookup(int dim, std::span<const Edge> edges) : dim_(dim) {
  for (const auto& e : edges) {
    entries_.push_back({e.x, e.dir});
    entries_.push_back({neighbor(e.x, e.dir, dim), opposite(e.dir, dim)});
  }
  std::sort(entries_.begin(), entries_.end());
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    RWDE_REQUIRE(!(entries_[i].first == entries_[i - 1].first), ErrorKind::Precondition,
                 "a vertex belongs to two traps");
  }
}

int EdgeTrapLookup::partner_dir(const Site& s) const {
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), s,
                                   [](const std::pair<Site, int>& e, const Site& v) { return e.first < v; });
  return it != entries_.end() && it->first == s ? it->second : -1;
}

ForgottenPath forget_path(std::span<const Site> positions, int dim, const TrapLookup& traps) {
  ForgottenPath out;
  const auto n = static_cast<std::int64_t>(positions.size());
  auto at = [&](std::int64_t i) -> const Site& { return positions[static_cast<std::size_t>(i)]; };
  std::int64_t t = 0;
  while (t < n) {
    const Site& anchor = at(t);
    const int pd = traps.partner_dir(anchor);
    auto in_class = [&](const Site& v) { return v == anchor || (pd >= 0 && v == neighbor(anchor, pd, dim)); };
    // s = first n >= t inside {anchor, partner} whose successor leaves it.
    std::int64_t s = t;
    while (s + 1 < n && !(in_class(at(s)) && !in_class(at(s + 1)))) ++s;
    if (s + 1 >= n) {
      // No exit observed. Outside a trap the last position is simply kept; inside a
      // trap the open visit is dropped.
      if (pd >= 0) {
        out.truncated = true;
      } else {
        out.positions.push_back(anchor);
        out.times.push_back(t);
      }
      break;
    }
    out.positions.push_back(anchor);
    out.times.push_back(t);
    t = at(s) == anchor ? s + 1 : s;
  }
  return out;
}

ForgottenPath forget_path(const Trajectory& traj, const TrapLookup& traps) {
  const auto pos = traj.positions();
  return forget_path(pos, traj.dim(), traps);
}

namespace {

std::int64_t edge_key(std::int32_t a, std::int32_t b) {
  const auto lo = static_cast<std::int64_t>(std::min(a, b));
  const auto hi = static_cast<std::int64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

}  // namespace

void TrapVisitTracker::observe(std::int64_t n, std::int32_t idx) {
  if (run_length_ > 0) {
    if (idx == run_a_ || idx == run_b_) {
      ++run_length_;
      ++in_trap_steps_;
      run_last_ = idx;
      return;
    }
    close_run();
  }
  const std::int32_t p = partner_(idx);
  if (p < 0) return;
  run_a_ = idx;
  run_b_ = p;
  run_last_ = idx;
  run_start_ = n;
  run_length_ = 1;
  ++in_trap_steps_;
}

void TrapVisitTracker::close_run() {
  const auto key = edge_key(run_a_, run_b_);
  auto [it, inserted] = index_.try_emplace(key, traps_.size());
  if (inserted) {
    Accum acc;
    acc.x = run_a_;
    acc.y = run_b_;
    traps_.push_back(std::move(acc));
  }
  Accum& acc = traps_[it->second];
  const bool from_x = run_a_ == acc.x;
  const bool to_x = run_last_ == acc.x;
  auto& c = acc.config;
  if (from_x && to_x) ++c.n_xx;
  if (from_x && !to_x) ++c.n_xy;
  if (!from_x && to_x) ++c.n_yx;
  if (!from_x && !to_x) ++c.n_yy;
  // Same-side visits have odd length 2H + 1, crossings even length 2H + 2.
  const std::int64_t overhead = run_last_ == run_a_ ? 1 : 2;
  acc.bounces.push_back((run_length_ - overhead) / 2);
  acc.occupation += run_length_;
  acc.delta_p += overhead;
  if (on_visit) on_visit({run_a_, run_last_, run_start_, run_length_});
  run_length_ = 0;
  run_a_ = run_b_ = run_last_ = -1;
}

bool TrapVisitTracker::known(std::int32_t a, std::int32_t b) const { return index_.contains(edge_key(a, b)); }

void TrapVisitTracker::finish() {
  if (run_length_ > 0) {
    open_ = {run_a_, run_b_};
    ++truncated_;
    in_trap_steps_ -= run_length_;
    run_length_ = 0;
    run_a_ = run_b_ = run_last_ = -1;
  }
}

namespace {

TrapStats make_stats(const TrapVisitTracker::Accum& acc, const Site& x, const Site& y, double forward, double backward,
                     int dim) {
  TrapStats s;
  const int dir = direction_between(x, y, dim);
  s.trap = {x, y, axis_of(dir, dim), forward, backward, trap_strength(forward, backward)};
  s.config = acc.config;
  s.config.axis = s.trap.axis;
  s.entries = acc.config.total();
  s.occupation = acc.occupation;
  s.bounces = acc.bounces;
  s.delta_p = acc.delta_p;
  return s;
}

}  // namespace

TrapVisitReport trap_visit_stats(const Trajectory& traj, const TransitionField& field, const TrapLookup& traps) {
  const int dim = traj.dim();
  std::unordered_map<Site, std::int32_t, SiteHash> index;
  std::vector<Site> sites;
  auto idx_of = [&](const Site& s) {
    auto [it, inserted] = index.try_emplace(s, static_cast<std::int32_t>(sites.size()));
    if (inserted) sites.push_back(s);
    return it->second;
  };
  TrapVisitTracker tracker([&](std::int32_t i) -> std::int32_t {
    const Site s = sites[static_cast<std::size_t>(i)];
    const int pd = traps.partner_dir(s);
    return pd < 0 ? -1 : idx_of(neighbor(s, pd, dim));
  });
  traj.for_each_position([&](std::size_t n, const Site& s) { tracker.observe(static_cast<std::int64_t>(n), idx_of(s)); });
  tracker.finish();
  TrapVisitReport report;
  report.truncated_visits = tracker.truncated_visits();
  for (const auto& acc : tracker.traps()) {
    const Site x = sites[static_cast<std::size_t>(acc.x)];
    const Site y = sites[static_cast<std::size_t>(acc.y)];
    const int dir = direction_between(x, y, dim);
    report.stats.push_back(make_stats(acc, x, y, field.at(x)[dir], field.at(y)[opposite(dir, dim)], dim));
  }
  return report;
}

TrapVisitReport trap_visit_stats(const Trajectory& traj, const TransitionField& field) {
  const FieldTrapLookup lookup(field);
  return trap_visit_stats(traj, field, lookup);
}

std::vector<TrapStats> collect_trap_stats(const TrapVisitTracker& tracker, const SiteCache& cache) {
  std::vector<TrapStats> out;
  out.reserve(tracker.traps().size());
  const int dim = cache.dim();
  for (const auto& acc : tracker.traps()) {
    const Site& x = cache.site(acc.x);
    const Site& y = cache.site(acc.y);
    const int dir = direction_between(x, y, dim);
    out.push_back(make_stats(acc, x, y, cache.prob(acc.x, dir), cache.prob(acc.y, opposite(dir, dim)), dim));
  }
  return out;
}

WalkTrapRecords walk_trap_stats(const AlphaParams& alpha, std::uint64_t env_seed, std::int64_t steps) {
  const Environment env(alpha, env_seed);
  SiteCache cache(env);
  CachedWalk walk(cache, walk_seed_for(env_seed));
  TrapVisitTracker tracker([&](std::int32_t idx) -> std::int32_t {
    const int dir = cache.trap_dir(idx);
    return dir < 0 ? -1 : cache.neighbor(idx, dir);
  });
  tracker.observe(0, walk.current());
  walk.advance(steps, [&](std::int64_t n, std::int32_t idx, int) { tracker.observe(n, idx); });
  tracker.finish();
  WalkTrapRecords out;
  out.traps = collect_trap_stats(tracker, cache);
  out.truncated_visits = tracker.truncated_visits();
  out.steps_in_traps = tracker.steps_in_traps();
  const auto [a, b] = tracker.open_visit();
  if (a >= 0 && !tracker.known(a, b)) {
    const int dir = direction_between(cache.site(a), cache.site(b), cache.dim());
    const double f = cache.prob(a, dir);
    const double g = cache.prob(b, opposite(dir, cache.dim()));
    out.open_trap = Trap{cache.site(a), cache.site(b), axis_of(dir, cache.dim()), f, g, trap_strength(f, g)};
  }
  return out;
}

std::vector<std::pair<Edge, TrapConfiguration>> configurations_from_forgotten(const ForgottenPath& path, int dim,
                                                                              const TrapLookup& traps) {
  struct Entry {
    Site x;
    Site y;
    TrapConfiguration config;
  };
  std::vector<Entry> entries;
  std::unordered_map<Site, std::size_t, SiteHash> slot;  // keyed by both endpoints
  const auto& p = path.positions;
  std::size_t i = 0;
  while (i < p.size()) {
    const int pd = traps.partner_dir(p[i]);
    if (pd < 0) {
      ++i;
      continue;
    }
    const Site entry = p[i];
    const Site partner = neighbor(entry, pd, dim);
    Site exit = entry;
    std::size_t next = i + 1;
    if (next < p.size() && p[next] == partner) {
      exit = partner;
      ++next;
    }
    auto it = slot.find(entry);
    if (it == slot.end()) {
      entries.push_back({entry, partner, {}});
      entries.back().config.axis = axis_of(pd, dim);
      slot[entry] = slot[partner] = entries.size() - 1;
      it = slot.find(entry);
    }
    auto& e = entries[it->second];
    const bool from_x = entry == e.x;
    const bool to_x = exit == e.x;
    if (from_x && to_x) ++e.config.n_xx;
    if (from_x && !to_x) ++e.config.n_xy;
    if (!from_x && to_x) ++e.config.n_yx;
    if (!from_x && !to_x) ++e.config.n_yy;
    i = next;
  }
  std::vector<std::pair<Edge, TrapConfiguration>> out;
  for (const auto& e : entries) out.push_back({Edge{e.x, direction_between(e.x, e.y, dim)}, e.config});
  return out;
}

std::string trap_csv_header() {
  return "replica,x,y,axis,forward,backward,strength,n_xx,n_xy,n_yx,n_yy,entries,occupation,delta_p";
}

namespace {

std::string site_text(const Site& s, int dim) {
  std::string out;
  for (int i = 0; i < dim; ++i) {
    if (i > 0) out += ' ';
    out += std::to_string(s[i]);
  }
  return out;
}

}  // namespace

std::string trap_csv_row(const TrapStats& s, int dim, std::uint32_t replica) {
  char nums[160];
  std::snprintf(nums, sizeof nums, "%.17g,%.17g,%.17g", s.trap.forward, s.trap.backward, s.trap.strength);
  return std::to_string(replica) + "," + site_text(s.trap.x, dim) + "," + site_text(s.trap.y, dim) + "," +
         std::to_string(s.trap.axis + 1) + "," + nums + "," + std::to_string(s.config.n_xx) + "," +
         std::to_string(s.config.n_xy) + "," + std::to_string(s.config.n_yx) + "," + std::to_string(s.config.n_yy) + "," +
         std::to_string(s.entries) + "," + std::to_string(s.occupation) + "," + std::to_string(s.delta_p);
}

TailTestReport conditional_tail_test(const std::function<bool(const TrapConfiguration&)>& filter,
                                     std::span<const StrengthSample> samples, const AlphaParams& alpha,
                                     const TailTestOptions& options) {
  std::vector<double> s;
  std::int64_t n_max = 0;
  int axis = -1;
  for (const auto& sample : samples) {
    if (!filter(sample.config)) continue;
    s.push_back(sample.strength);
    n_max = std::max(n_max, sample.config.total());
    if (axis < 0) axis = sample.config.axis;
    RWDE_REQUIRE(axis == sample.config.axis, ErrorKind::Precondition, "tail test mixes trap directions");
  }
  RWDE_REQUIRE(!s.empty() && s.size() >= options.min_samples, ErrorKind::StatisticalPower,
               "too few samples in the filtered configuration");
  const ExponentSet ex = compute_exponents(alpha);
  const double kappa_j = ex.kappa_j[static_cast<std::size_t>(axis)];

  TailTestReport r;
  r.samples = s.size();
  r.expected_slope = -kappa_j;
  r.grid = stats::log_grid(options.a_min, options.a_max, options.grid_points);
  r.survival = stats::survival_at(s, r.grid);
  const auto fit = stats::loglog_tail_slope(s, r.grid);
  r.slope = fit.slope;
  r.slope_se = fit.slope_se;

  double log_d = 0.0;
  int used = 0;
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    if (r.survival[i] <= 0.0) continue;
    log_d += std::log(r.survival[i]) + kappa_j * std::log(r.grid[i]);
    ++used;
  }
  r.fitted_d = used > 0 ? std::exp(log_d / used) : 0.0;
  const double c = 5.0 * (static_cast<double>(n_max) + 2.0 * ex.alpha_bar);
  const double n = static_cast<double>(s.size());
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    const double a = r.grid[i];
    const double centre = r.fitted_d * std::pow(a, -kappa_j);
    const double band = options.sigmas * std::sqrt(std::max(r.survival[i] * (1.0 - r.survival[i]), 1.0 / n) / n);
    const double lo = centre * std::exp(-c / a) - band;
    const double hi = centre * std::exp(c / a) + band;
    if (r.survival[i] < lo || r.survival[i] > hi) ++r.envelope_violations;
  }
  r.violation_fraction = static_cast<double>(r.envelope_violations) / static_cast<double>(r.grid.size());
  return r;
}

bool VisitTestReport::passed() const {
  return std::all_of(cells.begin(), cells.end(), [](const VisitTestCell& c) { return c.pass; });
}

VisitTestReport strength_vs_visits_test(std::span<const StrengthSample> samples, double kappa_j,
                                        const VisitTestOptions& options) {
  RWDE_REQUIRE(samples.size() >= options.min_samples, ErrorKind::StatisticalPower,
               "too few trap records for the visit-count test");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(options.seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t half = order.size() / 2;
  const std::span<const std::size_t> train(order.data(), half);
  const std::span<const std::size_t> valid(order.data() + half, order.size() - half);

  auto moments = [&](std::span<const std::size_t> idx, double g, double a, std::vector<double>* tail_terms) {
    double all = 0.0;
    double tail = 0.0;
    std::size_t count = 0;
    for (auto i : idx) {
      const double w = std::pow(static_cast<double>(samples[i].config.total()), g);
      all += w;
      const bool hit = samples[i].strength >= a;
      if (hit) {
        tail += w;
        ++count;
      }
      if (tail_terms) tail_terms->push_back(hit ? w : 0.0);
    }
    return std::tuple{tail / static_cast<double>(idx.size()), all / static_cast<double>(idx.size()), count};
  };

  VisitTestReport report;
  report.kappa_j = kappa_j;
  for (double g : options.gammas) {
    for (double a : options.thresholds) {
      const auto [tail, all, count] = moments(train, g, a, nullptr);
      (void)count;
      if (all > 0.0) report.fitted_c = std::max(report.fitted_c, tail / all / std::pow(a, -kappa_j));
    }
  }
  for (double g : options.gammas) {
    for (double a : options.thresholds) {
      std::vector<double> terms;
      const auto [tail, all, count] = moments(valid, g, a, &terms);
      VisitTestCell cell;
      cell.gamma = g;
      cell.threshold = a;
      cell.tail_count = count;
      cell.ratio = all > 0.0 ? tail / all : 0.0;
      cell.bound = report.fitted_c * std::pow(a, -kappa_j);
      cell.band = all > 0.0 ? options.sigmas * stats::standard_error(terms) / all : 0.0;
      cell.pass = cell.ratio <= cell.bound + cell.band;
      report.cells.push_back(cell);
    }
  }
  std::vector<double> strengths;
  strengths.reserve(samples.size());
  for (const auto& s : samples) strengths.push_back(s.strength);
  try {
    report.marginal_slope = stats::loglog_tail_slope(strengths, options.thresholds).slope;
  } catch (const Error&) {
    report.marginal_slope = 0.0;
  }
  return report;
}

}  // namespace rwde
