#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "levydiv/levy_model.hpp"
#include "levydiv/rng.hpp"

namespace levydiv {

struct ObservationClock {
    std::vector<double> arrivals;  // strictly increasing, all > 0
    double horizon = 0.0;
};

ObservationClock sample_clock(double r, double horizon, RngStream& stream);

enum EventKind : std::uint8_t {
    kGrid = 1,
    kJump = 2,
    kObservation = 4,
};

struct PathEvent {
    double time = 0.0;
    double x = 0.0;       // X just after the event (jump applied)
    double jump = 0.0;    // jump size applied at this event, 0 if none
    double x_prev = 0.0;  // X at the previous event
    double xc = 0.0;      // continuous part at t, before the jump
    double bvar = 0.0;    // sigma^2 * dt of the interval; 0 without a bridge draw
    double u = 0.0;       // uniform driving the bridge minimum
    std::uint8_t kinds = 0;
    double t_prev = 0.0;  // time of the previous event

    // Infimum of the continuous part on (t_prev, t], before the jump.
    double interval_min() const noexcept;

    // Infimum of X over (t_prev, t] including the post-jump value.
    double low() const noexcept {
        const double m = interval_min();
        return m < x ? m : x;
    }

    // low() < level, evaluated without the bridge formula when it cannot matter.
    bool below(double level) const noexcept {
        if (x < level) return true;
        const double a = x_prev, b = xc;
        if (a < level || b < level) return true;
        if (bvar <= 0.0) return false;
        // P(bridge min < m) = exp(-2 (a - m)(b - m) / bvar); u is compared against it.
        const double e = -2.0 * (a - level) * (b - level) / bvar;
        if (e < -745.0) return false;
        return interval_min() < level;
    }

    // First time in [t_prev, t] at which X is below level, given below(level).
    // A bridge crossing is timed by a draw from the conditional first-passage
    // law, keyed on the event so that repeated calls agree.
    double crossing_time(double level) const noexcept;
};

struct PathSettings {
    double gridstep = 1e-3;
    bool bridge = true;
};

// Streaming generator. Events: t = 0 first, then the union of grid times
// k * gridstep, clock arrivals and jump times, and finally the horizon.
class PathGenerator {
public:
    PathGenerator(const ValidatedModel& model, double x0, double horizon,
                  std::span<const double> arrivals, const PathSettings& settings, RngStream stream);
    // Observation clock drawn on demand from `clock`; the arrivals equal those of
    // sample_clock(r, horizon, clock).
    PathGenerator(const ValidatedModel& model, double x0, double horizon, double r, RngStream clock,
                  const PathSettings& settings, RngStream stream);

    const PathEvent& current() const noexcept { return ev_; }
    bool done() const noexcept { return done_; }
    // Moves to the next event; returns false once the horizon event has been passed.
    bool advance();

private:
    double peek_arrival() const noexcept;
    void pop_arrival() noexcept;

    const ValidatedModel* model_;
    double horizon_;
    std::span<const double> arrivals_;
    std::size_t next_arrival_ = 0;
    bool lazy_clock_ = false;
    double clock_rate_ = 0.0;
    double lazy_next_ = 0.0;
    RngStream clock_{0};
    double gridstep_;
    std::uint64_t next_grid_ = 1;
    bool bridge_;
    double drift_, sigma_;
    double next_jump_;
    RngStream rng_;
    PathEvent ev_;
    bool done_ = false;
};

struct RawPath {
    std::vector<PathEvent> events;
    double x0 = 0.0;
    double horizon = 0.0;
    double gridstep = 0.0;
    bool bridged = false;
};

RawPath simulate_path(const ValidatedModel& model, double x0, double horizon,
                      const ObservationClock& clock, const PathSettings& settings, RngStream stream);

RawPath shift_path(const RawPath& path, double eps);

// Sample of the minimum of a Brownian bridge from a to b over duration dt.
double bridge_minimum(double a, double b, double sigma, double dt, double u) noexcept;

// Fixed header: time,kind,X,jumpsize
void write_path_csv(std::ostream& os, const RawPath& path);

std::string event_kind_label(std::uint8_t kinds);

}  // namespace levydiv
