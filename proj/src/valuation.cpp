#include "levydiv/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "levydiv/errors.hpp"
#include "levydiv/parallel.hpp"

namespace levydiv {

namespace {

std::vector<double> sorted_unique(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

void require_samples(std::size_t n) {
    if (n == 0) throw EmptySample();
}

// Bounds on E[sup X] and E[-inf X] over an independent exponential(r) time.
void excursion_means(const McContext& ctx, double& up, double& down) {
    const auto& m = ctx.model;
    const double r = ctx.params.r;
    const double drift = m.simulation_drift();
    const double gauss = m.sigma() / std::sqrt(2.0 * r);
    up = gauss + (std::max(drift, 0.0) + m.up_jump_mean_rate()) / r;
    down = gauss + (std::max(-drift, 0.0) + m.down_jump_mean_rate()) / r;
}

}  // namespace

double default_horizon(double q, double tail_tol) { return std::log(1.0 / tail_tol) / q; }

McContext McContext::with_family(std::uint64_t tag) const {
    McContext c = *this;
    c.streams = streams.derive(tag);
    return c;
}

TailBounds value_tail_bounds(const McContext& ctx, double a, double x) {
    const double H = ctx.horizon();
    const double q = ctx.params.q, r = ctx.params.r;
    const double Me = r / (r + q);
    double up, down;
    excursion_means(ctx, up, down);
    const double dq = std::exp(-q * H);
    TailBounds t;
    t.injections = {H, Me, dq * down / (1.0 - Me)};
    const double no_decision = std::exp(-r * H) * (std::max(x, 0.0) + (r * H + 1.0) * (up + down));
    t.dividends = {H, Me, dq * (std::max(x - a, 0.0) + (up + down) / (1.0 - Me) + no_decision)};
    t.value = t.dividends.bound + ctx.params.beta * t.injections.bound;
    return t;
}

double exit_tail_bound(const McContext& ctx) { return std::exp(-ctx.params.q * ctx.horizon()); }

double npv(const ControlledTrajectory& traj, double q, double beta) {
    CompensatedSum s;
    double prevL = 0.0, prevR = 0.0;
    for (const auto& p : traj.events) {
        const double dL = p.L - prevL, dR = p.R - prevR;
        if (dL != 0.0 || dR != 0.0) s.add(std::exp(-q * p.time) * (dL - beta * dR));
        prevL = p.L;
        prevR = p.R;
    }
    return s.value();
}

ValueLevels::ValueLevels(double a, std::span<const double> shifts, double q, bool stop_when_merged)
    : q_(q), stop_(stop_when_merged) {
    lv_.reserve(shifts.size());
    for (std::size_t k = 0; k < shifts.size(); ++k) {
        if (k > 0 && !(shifts[k] > shifts[k - 1])) throw std::invalid_argument("levels must increase");
        lv_.push_back(Level{PeriodicClassical(a, shifts[k])});
        active_.push_back(static_cast<int>(k));
    }
}

bool ValueLevels::on_event(const PathEvent& e) {
    const bool obs = (e.kinds & kObservation) != 0;
    double df = -1.0;
    for (int k : active_) {
        Level& l = lv_[static_cast<std::size_t>(k)];
        const auto inc = l.pc.step(e, obs);
        l.anchor = 0;
        if (inc.dL > 0.0 || inc.dR > 0.0) {
            if (df < 0.0) df = std::exp(-q_ * e.time);
            l.dl += df * inc.dL;
            l.dr += df * inc.dR;
            l.anchor = inc.dL > 0.0 ? 2 : 1;
        }
    }
    if (df >= 0.0 && active_.size() > 1) {
        std::size_t w = 1;
        for (std::size_t i = 1; i < active_.size(); ++i) {
            Level& cur = lv_[static_cast<std::size_t>(active_[i])];
            const int prev = active_[w - 1];
            const Level& p = lv_[static_cast<std::size_t>(prev)];
            if (cur.anchor != 0 && cur.anchor == p.anchor) {
                cur.leader = prev;
                cur.off_l = cur.dl - p.dl;
                cur.off_r = cur.dr - p.dr;
            } else {
                active_[w++] = active_[i];
            }
        }
        active_.resize(w);
    }
    return !(stop_ && active_.size() == 1);
}

void ValueLevels::results(std::span<double> dl, std::span<double> dr) const {
    for (std::size_t k = 0; k < lv_.size(); ++k) {
        const Level& l = lv_[k];
        if (l.leader < 0) {
            dl[k] = l.dl;
            dr[k] = l.dr;
        } else {
            dl[k] = dl[static_cast<std::size_t>(l.leader)] + l.off_l;
            dr[k] = dr[static_cast<std::size_t>(l.leader)] + l.off_r;
        }
    }
}

ExitRaceLevels::ExitRaceLevels(double a, std::span<const double> shifts, double q)
    : a_(a), q_(q), s_(shifts.begin(), shifts.end()), A_(shifts.size(), 0.0), B_(shifts.size(), 0.0),
      hi_(shifts.size()) {}

bool ExitRaceLevels::on_event(const PathEvent& e) {
    if (lo_ >= hi_) return false;
    double df = -1.0;
    while (lo_ < hi_ && e.below(-s_[lo_]) && e.low() + s_[lo_] < 0.0) {
        A_[lo_] = std::exp(-q_ * e.crossing_time(-s_[lo_]));
        ++lo_;
    }
    if (e.kinds & kObservation) {
        while (hi_ > lo_ && e.x + s_[hi_ - 1] > a_) {
            if (df < 0.0) df = std::exp(-q_ * e.time);
            B_[--hi_] = df;
        }
    }
    return lo_ < hi_;
}

DiscountedStatistic ValueGrid::vL(std::size_t j) const { return dividends.stat(j, tail[j]); }
DiscountedStatistic ValueGrid::vR(std::size_t j) const { return injections.stat(j, tail[j]); }

DiscountedStatistic ValueGrid::v(std::size_t j) const {
    std::vector<double> c(dividends.rows());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = dividends.at(i, j) - beta * injections.at(i, j);
    return summarize(c, tail[j]);
}

double ValueGrid::mean_v(std::size_t j) const { return v(j).mean; }

DiscountedStatistic ValueGrid::linear_v(std::span<const double> coeffs, double constant, double tb) const {
    std::vector<double> c(dividends.rows());
    for (std::size_t i = 0; i < c.size(); ++i) {
        CompensatedSum s;
        s.add(constant);
        for (std::size_t j = 0; j < xs.size(); ++j)
            if (coeffs[j] != 0.0) s.add(coeffs[j] * (dividends.at(i, j) - beta * injections.at(i, j)));
        c[i] = s.value();
    }
    return summarize(c, tb);
}

std::size_t ValueGrid::index_of(double x) const {
    for (std::size_t j = 0; j < xs.size(); ++j)
        if (std::abs(xs[j] - x) <= 1e-12 * (1.0 + std::abs(x))) return j;
    throw std::out_of_range("level not in value grid");
}

ValueGrid value_grid(const McContext& ctx, double a, std::vector<double> xs, std::size_t n) {
    require_samples(n);
    ValueGrid g;
    g.barrier = a;
    g.beta = ctx.params.beta;
    g.xs = sorted_unique(std::move(xs));
    const std::size_t m = g.xs.size();
    g.dividends = SampleMatrix(n, m);
    g.injections = SampleMatrix(n, m);
    for (double x : g.xs) g.tail.push_back(value_tail_bounds(ctx, a, x).value);
    parallel_for(n, ctx.sim.threads, [&](std::size_t i) {
        ValueLevels lv(a, g.xs, ctx.params.q, false);
        drive_path(ctx, i, 0.0, lv);
        lv.results(g.dividends.row(i), g.injections.row(i));
    });
    return g;
}

DiscountedStatistic estimate_value(const McContext& ctx, double a, double x, std::size_t n) {
    return value_grid(ctx, a, {x}, n).v(0);
}

DiscountedStatistic ExitRaceProfile::A(std::size_t k) const { return samples.stat(2 * k, tail); }
DiscountedStatistic ExitRaceProfile::B(std::size_t k) const { return samples.stat(2 * k + 1, tail); }

DiscountedStatistic ExitRaceProfile::vR_prime(std::size_t k) const {
    DiscountedStatistic d = A(k);
    d.mean = -d.mean;
    d.ci95 = {-d.ci95.second, -d.ci95.first};
    return d;
}

DiscountedStatistic ExitRaceProfile::v_prime(std::size_t k) const {
    std::vector<double> coeffs(samples.cols(), 0.0);
    coeffs[2 * k] = beta;
    coeffs[2 * k + 1] = 1.0;
    return samples.linear_stat(coeffs, 0.0, beta * tail);
}

ExitRaceProfile exit_race_profile(const McContext& ctx, double a, std::vector<double> xs, std::size_t n) {
    require_samples(n);
    ExitRaceProfile p;
    p.barrier = a;
    p.beta = ctx.params.beta;
    p.xs = sorted_unique(std::move(xs));
    p.samples = SampleMatrix(n, 2 * p.xs.size());
    p.tail = exit_tail_bound(ctx);
    parallel_for(n, ctx.sim.threads, [&](std::size_t i) {
        ExitRaceLevels er(a, p.xs, ctx.params.q);
        drive_path(ctx, i, 0.0, er);
        auto row = p.samples.row(i);
        for (std::size_t k = 0; k < p.xs.size(); ++k) {
            row[2 * k] = er.A(k);
            row[2 * k + 1] = er.B(k);
        }
    });
    return p;
}

DiscountedStatistic estimate_dividend_derivative(const McContext& ctx, double a, double x, std::size_t n) {
    return exit_race_profile(ctx, a, {x}, n).B(0);
}

DiscountedStatistic estimate_injection_derivative(const McContext& ctx, double a, double x, std::size_t n) {
    return exit_race_profile(ctx, a, {x}, n).vR_prime(0);
}

DiscountedStatistic estimate_vprime(const McContext& ctx, double a, double x, std::size_t n) {
    return exit_race_profile(ctx, a, {x}, n).v_prime(0);
}

DifferenceProfile value_difference_profile(const McContext& ctx, double a, std::span<const double> xs,
                                           double h, std::size_t n) {
    require_samples(n);
    if (!(h > 0.0)) throw std::invalid_argument("difference step must be positive");
    std::vector<double> levels;
    for (double x : xs) {
        levels.push_back(x - h);
        levels.push_back(x + h);
    }
    levels = sorted_unique(std::move(levels));
    const std::size_t m = levels.size();
    auto idx = [&](double v) {
        return static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), v) - levels.begin());
    };
    SampleMatrix dl(n, m), dr(n, m);
    parallel_for(n, ctx.sim.threads, [&](std::size_t i) {
        ValueLevels lv(a, levels, ctx.params.q, true);
        drive_path(ctx, i, 0.0, lv);
        lv.results(dl.row(i), dr.row(i));
    });
    const double beta = ctx.params.beta;
    const double tb = exit_tail_bound(ctx);
    DifferenceProfile out;
    out.xs.assign(xs.begin(), xs.end());
    out.h = h;
    std::vector<double> cL(n), cR(n), cV(n);
    for (double x : xs) {
        const std::size_t lo = idx(x - h), hi = idx(x + h);
        for (std::size_t i = 0; i < n; ++i) {
            cL[i] = (dl.at(i, hi) - dl.at(i, lo)) / (2.0 * h);
            cR[i] = (dr.at(i, hi) - dr.at(i, lo)) / (2.0 * h);
            cV[i] = cL[i] - beta * cR[i];
        }
        // After the horizon the level difference is at most 2h, so each part is off by <= e^{-qH} (times beta).
        out.dL.push_back(summarize(cL, tb));
        out.dR.push_back(summarize(cR, beta * tb));
        out.dv.push_back(summarize(cV, beta * tb));
    }
    return out;
}

namespace {

class KappaLevels {
public:
    KappaLevels(double a, std::span<const double> shifts, double q) : q_(q), out_(shifts.size(), 0.0) {
        for (double s : shifts) po_.emplace_back(a, s);
        left_ = shifts.size();
    }
    bool on_event(const PathEvent& e) {
        const bool obs = (e.kinds & kObservation) != 0;
        for (std::size_t k = 0; k < po_.size(); ++k) {
            if (po_[k].ruined()) continue;
            po_[k].step(e, obs);
            if (po_[k].ruined()) {
                out_[k] = std::exp(-q_ * po_[k].ruin_time(e));
                --left_;
            }
        }
        return left_ > 0;
    }
    double value(std::size_t k) const { return out_[k]; }

private:
    double q_;
    std::vector<PeriodicOnly> po_;
    std::vector<double> out_;
    std::size_t left_;
};

}  // namespace

std::vector<DiscountedStatistic> kappa_laplace(const McContext& ctx, double a, std::span<const double> xs,
                                               std::size_t n) {
    require_samples(n);
    SampleMatrix s(n, xs.size());
    parallel_for(n, ctx.sim.threads, [&](std::size_t i) {
        KappaLevels kl(a, xs, ctx.params.q);
        drive_path(ctx, i, 0.0, kl);
        for (std::size_t k = 0; k < xs.size(); ++k) s.at(i, k) = kl.value(k);
    });
    std::vector<DiscountedStatistic> out;
    for (std::size_t k = 0; k < xs.size(); ++k) out.push_back(s.stat(k, exit_tail_bound(ctx)));
    return out;
}

}  // namespace levydiv
