#include "levydiv/barrier_search.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include <fmt/format.h>

#include "levydiv/errors.hpp"
#include "levydiv/parallel.hpp"

namespace levydiv {

namespace {

class GLevels {
public:
    GLevels(std::span<const double> depths, double q) : d_(depths.begin(), depths.end()), out_(d_.size(), 0.0), q_(q) {}

    bool on_event(const PathEvent& e) {
        while (k_ < d_.size() && e.below(L_ - d_[k_]) && e.low() - L_ < -d_[k_]) {
            out_[k_] = std::exp(-q_ * e.crossing_time(L_ - d_[k_]));
            ++k_;
        }
        if (k_ == d_.size()) return false;
        if ((e.kinds & kObservation) && e.x - L_ > 0.0) L_ = e.x;
        return true;
    }
    double value(std::size_t k) const { return out_[k]; }

private:
    std::vector<double> d_, out_;
    double q_;
    double L_ = 0.0;
    std::size_t k_ = 0;
};

enum class Side { above, below, ambiguous };

Side classify(const DiscountedStatistic& g, double z) {
    if (g.mean - z * g.std_error > 1.0) return Side::above;
    if (g.mean + z * g.std_error <= 1.0) return Side::below;
    return Side::ambiguous;
}

struct Recorder {
    std::map<double, DiscountedStatistic> seen;
    void add(const GProfile& p) {
        for (std::size_t k = 0; k < p.grid.size(); ++k) {
            auto it = seen.find(p.grid[k]);
            if (it == seen.end() || it->second.n <= p.gvals[k].n) seen[p.grid[k]] = p.gvals[k];
        }
    }
    GProfile profile() const {
        GProfile p;
        for (const auto& [a, g] : seen) {
            p.grid.push_back(a);
            p.gvals.push_back(g);
        }
        return p;
    }
};

}  // namespace

const char* to_string(Regularity r) noexcept { return r == Regularity::regular ? "regular" : "irregular"; }

GProfile g_profile(const McContext& ctx, std::vector<double> a_grid, std::size_t n) {
    if (n == 0) throw EmptySample();
    std::sort(a_grid.begin(), a_grid.end());
    a_grid.erase(std::unique(a_grid.begin(), a_grid.end()), a_grid.end());
    for (double a : a_grid)
        if (!(a >= 0.0)) throw std::invalid_argument("g requires a >= 0");
    SampleMatrix s(n, a_grid.size());
    parallel_for(n, ctx.sim.threads, [&](std::size_t i) {
        GLevels gl(a_grid, ctx.params.q);
        drive_path(ctx, i, 0.0, gl);
        for (std::size_t k = 0; k < a_grid.size(); ++k) s.at(i, k) = ctx.params.beta * gl.value(k);
    });
    GProfile p;
    p.grid = a_grid;
    const double tb = ctx.params.beta * exit_tail_bound(ctx);
    for (std::size_t k = 0; k < a_grid.size(); ++k) p.gvals.push_back(s.stat(k, tb));
    return p;
}

DiscountedStatistic estimate_g(const McContext& ctx, double a, std::size_t n) {
    return g_profile(ctx, {a}, n).gvals.front();
}

Regularity classify_regularity(const ValidatedModel& model) {
    if (model.sigma() > 0.0 || model.variation() == VariationClass::unbounded) return Regularity::regular;
    const double delta = *model.effective_drift();
    if (delta < 0.0) return Regularity::regular;
    if (delta == 0.0) {
        const auto& sj = model.triple().jumps.small_jump;
        if (sj && sj->c_down > 0.0 && sj->cutoff == 0.0) return Regularity::regular;
    }
    return Regularity::irregular;
}

BarrierResult find_barrier(const McContext& ctx, const BarrierSearchOptions& opt) {
    if (!(opt.tol_a > 0.0)) throw std::invalid_argument("tol_a must be positive");
    BarrierResult res;
    res.regularity = classify_regularity(ctx.model);
    Recorder rec;
    const double z = opt.z;
    std::size_t n = opt.n_initial;

    GProfile p0 = g_profile(ctx, {0.0}, n);
    Side s0 = classify(p0.gvals[0], z);
    if (res.regularity == Regularity::irregular) {
        while (s0 == Side::ambiguous && n < opt.n_max) {
            n = std::min(4 * n, opt.n_max);
            p0 = g_profile(ctx, {0.0}, n);
            s0 = classify(p0.gvals[0], z);
        }
    }
    rec.add(p0);
    res.g_at_zero = p0.gvals[0];
    if (s0 == Side::ambiguous)
        throw AmbiguousBracket(fmt::format("g(0) = {} +- {} straddles 1 at n = {}", p0.gvals[0].mean,
                                           p0.gvals[0].std_error, n));
    if (s0 == Side::below) {
        res.a_star = res.lo = res.hi = 0.0;
        res.profile = rec.profile();
        return res;
    }

    n = opt.n_initial;
    double lo = 0.0, hi = opt.hi_initial;
    for (;;) {
        const GProfile ph = g_profile(ctx, {hi}, n);
        rec.add(ph);
        const Side s = classify(ph.gvals[0], z);
        if (s == Side::below) break;
        if (s == Side::above) lo = hi;
        hi *= 2.0;
        if (hi > opt.hi_max)
            throw AmbiguousBracket(fmt::format("no a <= {} with g(a) clearly below 1", opt.hi_max));
    }

    while (hi - lo > opt.tol_a) {
        std::vector<double> grid;
        const std::size_t m = opt.points_per_pass;
        for (std::size_t k = 1; k <= m; ++k) grid.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(m + 1));
        const GProfile pp = g_profile(ctx, grid, n);
        rec.add(pp);
        double nlo = lo, nhi = hi;
        for (std::size_t k = 0; k < pp.grid.size(); ++k) {
            const Side s = classify(pp.gvals[k], z);
            if (s == Side::above) nlo = std::max(nlo, pp.grid[k]);
            if (s == Side::below) nhi = std::min(nhi, pp.grid[k]);
        }
        if (!(nlo < nhi))
            throw AmbiguousBracket(fmt::format("inconsistent g classification in [{}, {}]", lo, hi));
        const bool shrank = (nhi - nlo) < 0.5 * (hi - lo);
        lo = nlo;
        hi = nhi;
        if (hi - lo <= opt.tol_a) break;
        if (!shrank) {
            if (n >= opt.n_max)
                throw AmbiguousBracket(fmt::format("bracket [{}, {}] wider than tol_a at the maximum budget",
                                                   lo, hi));
            n = std::min(4 * n, opt.n_max);
        }
    }
    res.lo = lo;
    res.hi = hi;
    res.a_star = 0.5 * (lo + hi);
    res.profile = rec.profile();
    return res;
}

double horizon_drawdown_quantile(const McContext& ctx, double p, std::size_t n) {
    if (n == 0) throw EmptySample();
    std::vector<double> dd(n, 0.0);
    parallel_for(n, ctx.sim.threads, [&](std::size_t i) {
        struct Track {
            double runmax = 0.0, worst = 0.0;
            bool on_event(const PathEvent& e) {
                worst = std::max(worst, runmax - e.low());
                runmax = std::max(runmax, e.x);
                return true;
            }
        } t;
        drive_path(ctx, i, 0.0, t);
        dd[i] = t.worst;
    });
    std::sort(dd.begin(), dd.end());
    const auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n))) - 1;
    return dd[std::min(k, n - 1)];
}

}  // namespace levydiv
