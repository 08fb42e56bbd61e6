#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "levydiv/levy_model.hpp"
#include "levydiv/path_engine.hpp"
#include "levydiv/reflection.hpp"
#include "levydiv/rng.hpp"
#include "levydiv/stats.hpp"

namespace levydiv {

struct SimSettings {
    double horizon = 0.0;   // 0 selects default_horizon(q, tail_tol)
    double tail_tol = 1e-4;
    double gridstep = 1e-3;
    bool bridge = true;
    unsigned threads = 1;
};

double default_horizon(double q, double tail_tol = 1e-4);

// Everything an estimator needs. Path i of a family is the same noise for
// every estimator and every starting level, which gives common random numbers.
struct McContext {
    ValidatedModel model;
    ProblemParams params;
    SimSettings sim;
    StreamFamily streams;

    double horizon() const { return sim.horizon > 0.0 ? sim.horizon : default_horizon(params.q, sim.tail_tol); }
    PathSettings path_settings() const { return PathSettings{sim.gridstep, sim.bridge}; }
    McContext with_family(std::uint64_t tag) const;
};

// Runs path i from x0 through a consumer with bool on_event(const PathEvent&);
// a false return stops the path early.
template <class Consumer>
void drive_path(const McContext& ctx, std::uint64_t i, double x0, Consumer& c) {
    const double H = ctx.horizon();
    PathGenerator gen(ctx.model, x0, H, ctx.params.r, ctx.streams.substream(i, StreamPurpose::clock),
                      ctx.path_settings(), ctx.streams.substream(i, StreamPurpose::path));
    if (!c.on_event(gen.current())) return;
    while (gen.advance())
        if (!c.on_event(gen.current())) return;
}

struct TruncationBound {
    double horizon = 0.0;
    double Me = 0.0;
    double bound = 0.0;
};

// Bound on the discounted dividends and injections after the horizon.
// With u, d bounds on E[sup X] and E[-inf X] over an exponential(r) time,
// the R-part is at most e^{-qH} d / (1 - Me) and the L-part at most
// e^{-qH} ((x - a)^+ + (u + d) / (1 - Me)) up to an e^{-rH} term.
struct TailBounds {
    TruncationBound dividends;
    TruncationBound injections;
    double value = 0.0;  // dividends + beta * injections
};
TailBounds value_tail_bounds(const McContext& ctx, double a, double x);

// Tail for estimators of the form E[e^{-q T}; T < ...]: e^{-qH}.
double exit_tail_bound(const McContext& ctx);

double npv(const ControlledTrajectory& traj, double q, double beta);

// Multi-level periodic-classical engine on one path. Levels are shifts of the
// same path; once two adjacent levels touch the same anchor (0 or a) at the
// same event they coincide forever and only the lower one is simulated.
class ValueLevels {
public:
    ValueLevels(double a, std::span<const double> shifts, double q, bool stop_when_merged);

    bool on_event(const PathEvent& e);
    std::size_t size() const noexcept { return lv_.size(); }
    // Discounted dividends and injections per level.
    void results(std::span<double> dl, std::span<double> dr) const;

private:
    struct Level {
        PeriodicClassical pc;
        double dl = 0.0, dr = 0.0;
        int leader = -1;
        double off_l = 0.0, off_r = 0.0;
        int anchor = 0;
    };
    std::vector<Level> lv_;
    std::vector<int> active_;
    double q_;
    bool stop_;
};

// Exit race from several levels against barrier a:
//   A = e^{-q tau} 1{tau < T},  B = e^{-q T} 1{T < tau}, ties to tau.
class ExitRaceLevels {
public:
    ExitRaceLevels(double a, std::span<const double> shifts, double q);
    bool on_event(const PathEvent& e);
    double A(std::size_t k) const noexcept { return A_[k]; }
    double B(std::size_t k) const noexcept { return B_[k]; }

private:
    double a_, q_;
    std::vector<double> s_, A_, B_;
    std::size_t lo_ = 0, hi_;
};

struct ValueGrid {
    double barrier = 0.0;
    double beta = 0.0;
    std::vector<double> xs;
    SampleMatrix dividends;   // n x |xs|
    SampleMatrix injections;  // n x |xs|
    std::vector<double> tail; // value truncation bound per x

    DiscountedStatistic v(std::size_t j) const;
    DiscountedStatistic vL(std::size_t j) const;
    DiscountedStatistic vR(std::size_t j) const;
    double mean_v(std::size_t j) const;
    // Per-path coefficient weights for v at level j: dividends - beta * injections.
    DiscountedStatistic linear_v(std::span<const double> coeffs, double constant, double tb) const;
    std::size_t index_of(double x) const;  // exact-level lookup, throws if absent
};

DiscountedStatistic estimate_value(const McContext& ctx, double a, double x, std::size_t n);

// v, v^L, v^R at all xs from shared paths. xs need not be sorted.
ValueGrid value_grid(const McContext& ctx, double a, std::vector<double> xs, std::size_t n);

struct ExitRaceProfile {
    double barrier = 0.0;
    double beta = 0.0;
    std::vector<double> xs;
    SampleMatrix samples;  // columns 2k: A at xs[k], 2k+1: B at xs[k]
    double tail = 0.0;

    DiscountedStatistic A(std::size_t k) const;  // E[e^{-q tau}; tau < T]
    DiscountedStatistic B(std::size_t k) const;  // E[e^{-q T}; T < tau]
    DiscountedStatistic vL_prime(std::size_t k) const { return B(k); }
    DiscountedStatistic vR_prime(std::size_t k) const;
    DiscountedStatistic v_prime(std::size_t k) const;
};

ExitRaceProfile exit_race_profile(const McContext& ctx, double a, std::vector<double> xs, std::size_t n);

DiscountedStatistic estimate_dividend_derivative(const McContext& ctx, double a, double x, std::size_t n);
DiscountedStatistic estimate_injection_derivative(const McContext& ctx, double a, double x, std::size_t n);
DiscountedStatistic estimate_vprime(const McContext& ctx, double a, double x, std::size_t n);

// Central differences (f(x+h) - f(x-h)) / 2h of v^L, v^R and v from common paths.
struct DifferenceProfile {
    std::vector<double> xs;
    double h = 0.0;
    std::vector<DiscountedStatistic> dL, dR, dv;
};
DifferenceProfile value_difference_profile(const McContext& ctx, double a, std::span<const double> xs,
                                           double h, std::size_t n);

// E_x[e^{-q kappa}] for the periodic-only process with barrier a.
std::vector<DiscountedStatistic> kappa_laplace(const McContext& ctx, double a, std::span<const double> xs,
                                               std::size_t n);

}  // namespace levydiv
