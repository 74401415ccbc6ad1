#pragma once

// Independent reference implementations shared by the unit tests and the acceptance gate.

#include <cstdint>
#include <vector>

#include "rwde/dirichlet.hpp"
#include "rwde/rng.hpp"

namespace rwde::oracle {

// Direct reading of the renewal definition: every earlier level strictly below, every
// later level strictly above. Quadratic on purpose.
inline std::vector<std::int64_t> brute_force_renewals(const std::vector<std::int64_t>& lv) {
  std::vector<std::int64_t> out;
  for (std::size_t n = 0; n < lv.size(); ++n) {
    bool ok = true;
    for (std::size_t m = 0; m < n && ok; ++m) ok = lv[m] < lv[n];
    for (std::size_t m = n + 1; m < lv.size() && ok; ++m) ok = lv[m] > lv[n];
    if (ok) out.push_back(static_cast<std::int64_t>(n));
  }
  return out;
}

// Lazy random level path of length 1..max_len starting at 0, with a random upward bias.
inline std::vector<std::int64_t> random_levels(Rng& rng, std::size_t max_len) {
  const std::size_t len = 1 + rng.below(max_len);
  const double up = 0.3 + 0.5 * rng.uniform();
  std::vector<std::int64_t> lv{0};
  while (lv.size() < len) {
    const double u = rng.uniform();
    lv.push_back(lv.back() + (u < up ? 1 : (u < up + 0.2 ? 0 : -1)));
  }
  return lv;
}

// d = 1: trap {0, 1} with omega(0,1) = f and omega(1,0) = b; elsewhere the walk steps
// towards the trap with probability `pull`.
class FrozenTrapLine final : public TransitionField {
 public:
  FrozenTrapLine(double f, double b, double pull) : f_(f), b_(b), pull_(pull) {}
  int dim() const noexcept override { return 1; }
  SiteDistribution at(const Site& s) const override {
    SiteDistribution d;
    d.dim = 1;
    double right = 0.0;
    if (s[0] == 0) {
      right = f_;
    } else if (s[0] == 1) {
      right = 1.0 - b_;
    } else {
      right = s[0] < 0 ? pull_ : 1.0 - pull_;
    }
    d.probs[0] = right;
    d.probs[1] = 1.0 - right;
    return d;
  }

 private:
  double f_, b_, pull_;
};

}  // namespace rwde::oracle
