#pragma once

#include <span>
#include <vector>

#include "levydiv/stats.hpp"
#include "levydiv/valuation.hpp"

namespace levydiv {

enum class Regularity { regular, irregular };

const char* to_string(Regularity r) noexcept;

struct GProfile {
    std::vector<double> grid;
    std::vector<DiscountedStatistic> gvals;
};

// g(a) = beta E_a[e^{-q kappa}] for all a in the grid from one set of paths.
// The process U^a - a does not depend on a, so a single process reflected
// at 0 is run and kappa(a) is its first passage below -a.
GProfile g_profile(const McContext& ctx, std::vector<double> a_grid, std::size_t n);

DiscountedStatistic estimate_g(const McContext& ctx, double a, std::size_t n);

Regularity classify_regularity(const ValidatedModel& model);

struct BarrierSearchOptions {
    double tol_a = 0.02;
    double z = 3.0;                     // confidence multiplier on the standard error
    std::size_t n_initial = 100000;
    std::size_t n_max = 1600000;
    std::size_t points_per_pass = 16;   // interior points per refinement pass
    double hi_initial = 1.0;
    double hi_max = 1024.0;
};

struct BarrierResult {
    double a_star = 0.0;
    double lo = 0.0, hi = 0.0;
    Regularity regularity = Regularity::regular;
    DiscountedStatistic g_at_zero;
    GProfile profile;   // every evaluation, sorted by a; latest sample size kept
};

// a* = inf{a : g(a) <= 1}. The bracket [lo, hi] has g(lo) > 1 and g(hi) <= 1
// at confidence z unless a* = 0. Refinement evaluates several interior points
// per pass on common paths and grows the sample size when noise stops the
// bracket from shrinking.
BarrierResult find_barrier(const McContext& ctx, const BarrierSearchOptions& opt);

// Empirical p-quantile of the maximum drawdown of X over the horizon.
// Interior maxima between events are not sampled, so this is slightly low.
double horizon_drawdown_quantile(const McContext& ctx, double p, std::size_t n);

}  // namespace levydiv
