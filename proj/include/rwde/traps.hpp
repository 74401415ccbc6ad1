#pragma once

// Traps (edges with omega(x,y) + omega(y,x) > 3/2), the partially forgotten path,
// per-trap visit statistics and the tail tests built on them.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "rwde/dirichlet.hpp"
#include "rwde/lattice.hpp"
#include "rwde/site_cache.hpp"
#include "rwde/stats.hpp"
#include "rwde/walk.hpp"

namespace rwde {

inline bool is_trap(double forward, double backward) noexcept { return forward + backward > 1.5; }
inline double trap_strength(double forward, double backward) noexcept {
  return 1.0 / ((1.0 - forward) + (1.0 - backward));
}

struct Trap {
  Site x{};
  Site y{};
  int axis = 0;         // 0-based; y = x +- e_{axis+1}
  double forward = 0;   // omega(x, y)
  double backward = 0;  // omega(y, x)
  double strength = 0;
};

/// Undirected edge {x, x + e_dir} (dir is a direction index).
struct Edge {
  Site x{};
  int dir = 0;
};

/// All edges with both endpoints in the sup-norm box of the given radius around the origin.
std::vector<Edge> box_edges(int dim, int radius);

/// Exactly the edges of `region` that are traps, with strengths attached. x is the
/// endpoint the edge was listed from.
std::vector<Trap> find_traps(const TransitionField& field, std::span<const Edge> region);

/// Answers "which neighbour (if any) shares a trap with this site".
class TrapLookup {
 public:
  virtual ~TrapLookup() = default;
  /// Direction index towards the trap partner, or -1.
  virtual int partner_dir(const Site& s) const = 0;
};

/// Evaluates the trap predicate on a field.
class FieldTrapLookup final : public TrapLookup {
 public:
  explicit FieldTrapLookup(const TransitionField& field) : field_(field) {}
  int partner_dir(const Site& s) const override;

 private:
  const TransitionField& field_;
};

/// An explicit trap set. Throws ErrorKind::Precondition if a vertex is in two edges.
class EdgeTrapLookup final : public TrapLookup {
 public:
  EdgeTrapLookup(int dim, std::span<const Edge> edges);
  int partner_dir(const Site& s) const override;

 private:
  int dim_;
  std::vector<std::pair<Site, int>> entries_;  // sorted by site
};

struct ForgottenPath {
  std::vector<Site> positions;
  std::vector<std::int64_t> times;  // index into the original path of each kept position
  bool truncated = false;           // the path ended inside a trap; that last visit is dropped
};

/// The partially forgotten path: t_0 = 0,
///   s_i = inf{n >= t_i : (sigma_n = sigma_{t_i} or {sigma_n, sigma_{t_i}} is a trap)
///                        and sigma_{n+1} is neither sigma_{t_i} nor its trap partner},
///   t_{i+1} = s_i + 1 if sigma_{s_i} = sigma_{t_i}, else s_i,
/// keeping sigma_{t_i}. A visit x -> y -> x -> y -> z becomes x, y, z.
ForgottenPath forget_path(std::span<const Site> positions, int dim, const TrapLookup& traps);
ForgottenPath forget_path(const Trajectory& traj, const TrapLookup& traps);

struct TrapConfiguration {
  int axis = 0;  // 0-based direction of the edge
  std::int64_t n_xx = 0;
  std::int64_t n_xy = 0;
  std::int64_t n_yx = 0;
  std::int64_t n_yy = 0;

  std::int64_t n_x() const noexcept { return n_xx + n_yx; }  // visits leaving from x
  std::int64_t n_y() const noexcept { return n_xy + n_yy; }
  std::int64_t total() const noexcept { return n_x() + n_y(); }
  bool operator==(const TrapConfiguration&) const = default;
};

struct TrapStats {
  Trap trap;  // x is the first vertex of the edge the walk entered
  TrapConfiguration config;
  std::int64_t entries = 0;         // completed visits
  std::int64_t occupation = 0;      // steps with Y_n in {x, y} over completed visits
  std::vector<std::int64_t> bounces;  // completed round trips per visit
  std::int64_t delta_p = 0;         // occupation - 2 sum(bounces)
};

/// Per-visit record emitted by the tracker.
struct TrapVisit {
  std::int32_t entry = -1;  // site index where the visit started
  std::int32_t exit = -1;   // last site index of the visit inside the trap
  std::int64_t start = 0;   // time of entry
  std::int64_t length = 0;  // steps inside the trap (positions)
};

/// Streaming visit tracker over dense site indices. `partner(idx)` returns the trap
/// partner index or -1. Maximal runs of consecutive positions inside one trap edge are
/// visits; a run that is still open when `finish()` is called is discarded and counted.
class TrapVisitTracker {
 public:
  using PartnerFn = std::function<std::int32_t(std::int32_t)>;
  explicit TrapVisitTracker(PartnerFn partner) : partner_(std::move(partner)) {}

  void observe(std::int64_t n, std::int32_t idx);
  void finish();

  struct Accum {
    std::int32_t x = -1;  // first entered vertex
    std::int32_t y = -1;
    TrapConfiguration config;
    std::int64_t occupation = 0;
    std::int64_t delta_p = 0;
    std::vector<std::int64_t> bounces;
  };
  /// Traps in order of first completed visit.
  const std::vector<Accum>& traps() const noexcept { return traps_; }
  std::int64_t truncated_visits() const noexcept { return truncated_; }
  std::int64_t steps_in_traps() const noexcept { return in_trap_steps_; }
  bool inside() const noexcept { return run_length_ > 0; }
  /// Endpoints (entry first) of the visit discarded by finish(), or {-1, -1}.
  std::pair<std::int32_t, std::int32_t> open_visit() const noexcept { return open_; }
  /// Whether the edge {a, b} has a completed visit.
  bool known(std::int32_t a, std::int32_t b) const;

  /// Called for every completed visit (after the accumulators are updated).
  std::function<void(const TrapVisit&)> on_visit;

 private:
  void close_run();

  PartnerFn partner_;
  std::int32_t run_a_ = -1;  // current trap endpoints (entry and partner)
  std::int32_t run_b_ = -1;
  std::int32_t run_last_ = -1;
  std::int64_t run_start_ = 0;
  std::int64_t run_length_ = 0;
  std::int64_t truncated_ = 0;
  std::int64_t in_trap_steps_ = 0;
  std::pair<std::int32_t, std::int32_t> open_{-1, -1};
  std::vector<Accum> traps_;
  absl::flat_hash_map<std::int64_t, std::size_t> index_;  // edge key -> slot in traps_
};

struct TrapVisitReport {
  std::vector<TrapStats> stats;
  std::int64_t truncated_visits = 0;
};

/// Batch statistics for a stored trajectory in `field`.
TrapVisitReport trap_visit_stats(const Trajectory& traj, const TransitionField& field);
/// Batch statistics against an explicit trap lookup; strengths are read from `field`.
TrapVisitReport trap_visit_stats(const Trajectory& traj, const TransitionField& field, const TrapLookup& traps);

/// Build TrapStats from tracker accumulators over a SiteCache.
std::vector<TrapStats> collect_trap_stats(const TrapVisitTracker& tracker, const SiteCache& cache);

/// One walk of `steps` steps in a fresh environment, tracked visit by visit.
struct WalkTrapRecords {
  std::vector<TrapStats> traps;
  /// The trap the walk sits in at the horizon when it has no completed visit. Its strength
  /// belongs to the observed sample even though the visit is excluded from the statistics;
  /// dropping it would remove the strongest trap of most walks.
  std::optional<Trap> open_trap;
  std::int64_t truncated_visits = 0;
  std::int64_t steps_in_traps = 0;
};
WalkTrapRecords walk_trap_stats(const AlphaParams& alpha, std::uint64_t env_seed, std::int64_t steps);

/// Configuration counts read back from a forgotten path (runs of length one are
/// same-side visits, runs of length two are crossings).
std::vector<std::pair<Edge, TrapConfiguration>> configurations_from_forgotten(const ForgottenPath& path, int dim,
                                                                              const TrapLookup& traps);

/// CSV header and row for per-trap output.
std::string trap_csv_header();
std::string trap_csv_row(const TrapStats& s, int dim, std::uint32_t replica);

// ---------------------------------------------------------------------------
// Tail tests.

struct StrengthSample {
  double strength = 0.0;
  TrapConfiguration config;
};

struct TailTestOptions {
  double a_min = 5.0;
  double a_max = 100.0;
  int grid_points = 12;
  std::size_t min_samples = 10000;
  double sigmas = 3.0;
};

struct TailTestReport {
  std::size_t samples = 0;
  double slope = 0.0;
  double slope_se = 0.0;
  double expected_slope = 0.0;  // -kappa_j
  double fitted_d = 0.0;
  std::vector<double> grid;
  std::vector<double> survival;
  std::size_t envelope_violations = 0;
  double violation_fraction = 0.0;
};

/// P(s >= A | configuration) on a log grid, its log-log slope, and the two-sided envelope
/// D A^{-kappa_j} exp(+-5 (N + 2 alpha_bar) / A) with D fitted by log least squares.
/// Throws ErrorKind::StatisticalPower when fewer than options.min_samples samples pass the filter.
TailTestReport conditional_tail_test(const std::function<bool(const TrapConfiguration&)>& filter,
                                     std::span<const StrengthSample> samples, const AlphaParams& alpha,
                                     const TailTestOptions& options = {});

struct VisitTestOptions {
  std::vector<double> gammas{0.0, 0.5, 1.0};
  std::vector<double> thresholds{5.0, 10.0, 20.0};
  std::size_t min_samples = 1000;
  double sigmas = 3.0;
  std::uint64_t seed = 13;
};

struct VisitTestCell {
  double gamma = 0.0;
  double threshold = 0.0;
  double ratio = 0.0;  // E(N^g 1{s >= A}) / E(N^g) on validation data
  double bound = 0.0;  // C A^{-kappa_j}
  double band = 0.0;
  std::size_t tail_count = 0;
  bool pass = true;
};

struct VisitTestReport {
  double fitted_c = 0.0;
  double kappa_j = 0.0;
  double marginal_slope = 0.0;  // log-log slope of P(s >= A) over the thresholds
  std::vector<VisitTestCell> cells;
  bool passed() const;
};

/// E(N^g 1{s >= A}) <= C A^{-kappa_j} E(N^g): C is fitted on a random half and validated
/// on the other. Throws ErrorKind::StatisticalPower below options.min_samples samples.
VisitTestReport strength_vs_visits_test(std::span<const StrengthSample> samples, double kappa_j,
                                        const VisitTestOptions& options = {});

}  // namespace rwde
