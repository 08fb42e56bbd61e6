#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

#include "levydiv/path_engine.hpp"

namespace levydiv {

inline constexpr double kNever = std::numeric_limits<double>::infinity();

// Periodic-classical barrier strategy on one (possibly shifted) path:
// X + shift is reflected at 0 through its running infimum, and at each
// observation with U > a the excess is paid out.
class PeriodicClassical {
public:
    explicit PeriodicClassical(double barrier, double shift = 0.0) noexcept : a_(barrier), s_(shift) {}

    struct Increment {
        double dL = 0.0;
        double dR = 0.0;
    };

    // Same call for the t = 0 event and every later one. Observation marks
    // are honoured only when observe is true.
    Increment step(const PathEvent& e, bool observe) noexcept {
        Increment inc;
        if (e.below(L_ - R_ - s_)) {
            const double rneed = L_ - (e.low() + s_);
            if (rneed > R_) {
                inc.dR = rneed - R_;
                R_ = rneed;
            }
        }
        if (observe) {
            const double u = e.x + s_ - L_ + R_;
            if (u > a_) {
                inc.dL = u - a_;
                L_ = e.x + s_ + R_ - a_;
            }
        }
        return inc;
    }

    double U(const PathEvent& e) const noexcept { return e.x + s_ - L_ + R_; }
    double L() const noexcept { return L_; }
    double R() const noexcept { return R_; }
    double barrier() const noexcept { return a_; }
    double shift() const noexcept { return s_; }

private:
    double a_, s_;
    double L_ = 0.0, R_ = 0.0;
};

// Periodic reflection above a only; ruin is the first time U < 0.
class PeriodicOnly {
public:
    explicit PeriodicOnly(double barrier, double shift = 0.0) noexcept : a_(barrier), s_(shift) {}

    // Returns the payout at this event; sets ruined() when U < 0 strictly.
    // Ruin is checked before the dividend decision.
    double step(const PathEvent& e, bool observe) noexcept {
        if (e.below(L_ - s_) && e.low() + s_ - L_ < 0.0) {
            ruined_ = true;
            return 0.0;
        }
        if (observe) {
            const double u = e.x + s_ - L_;
            if (u > a_) {
                L_ = e.x + s_ - a_;
                return u - a_;
            }
        }
        return 0.0;
    }

    // Lowest U over the last interval.
    double low_U(const PathEvent& e) const noexcept { return e.low() + s_ - L_; }
    double U(const PathEvent& e) const noexcept { return e.x + s_ - L_; }
    // Time of ruin within the ruin event's interval.
    double ruin_time(const PathEvent& e) const noexcept { return e.crossing_time(L_ - s_); }
    double L() const noexcept { return L_; }
    bool ruined() const noexcept { return ruined_; }

private:
    double a_, s_;
    double L_ = 0.0;
    bool ruined_ = false;
};

struct TrajectoryPoint {
    double time = 0.0;
    double x = 0.0;
    double U = 0.0;
    double L = 0.0;
    double R = 0.0;
    double dividend = 0.0;
    std::uint8_t kinds = 0;
};

struct ControlledTrajectory {
    std::vector<TrajectoryPoint> events;
    double barrier = 0.0;
    double horizon = 0.0;
};

struct ExitReport {
    double tau0 = kNever;     // first time X < 0 strictly
    double Ta_plus = kNever;  // first observation with X > a strictly
    double kappa = kNever;    // first time the periodic-only process is < 0

    static bool finite(double t) noexcept { return t != kNever; }
};

ControlledTrajectory apply_periodic_classical(const RawPath& path, const ObservationClock& clock, double a);

struct PeriodicOnlyResult {
    ControlledTrajectory trajectory;
    ExitReport exits;
};

PeriodicOnlyResult apply_periodic_only(const RawPath& path, const ObservationClock& clock, double a);

ExitReport exit_times(const RawPath& path, const ObservationClock& clock, double a);

// Observation flags per event, derived from the clock. Throws
// std::invalid_argument when an arrival is missing from the path.
std::vector<bool> observation_mask(const RawPath& path, const ObservationClock& clock);

// Fixed header: time,U,L,R,event_kind
void write_trajectory_csv(std::ostream& os, const ControlledTrajectory& traj);

}  // namespace levydiv
