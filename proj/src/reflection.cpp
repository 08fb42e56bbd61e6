#include "levydiv/reflection.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace levydiv {

std::vector<bool> observation_mask(const RawPath& path, const ObservationClock& clock) {
    std::vector<bool> mask(path.events.size(), false);
    std::size_t k = 0;
    for (double ta : clock.arrivals) {
        if (ta > path.horizon) break;
        while (k < path.events.size() && path.events[k].time < ta - 1e-12 * (1.0 + ta)) ++k;
        if (k == path.events.size() || std::abs(path.events[k].time - ta) > 1e-12 * (1.0 + ta) ||
            k == 0)
            throw std::invalid_argument("clock arrival is not an event of the path");
        mask[k] = true;
    }
    return mask;
}

ControlledTrajectory apply_periodic_classical(const RawPath& path, const ObservationClock& clock, double a) {
    const auto mask = observation_mask(path, clock);
    ControlledTrajectory traj;
    traj.barrier = a;
    traj.horizon = path.horizon;
    traj.events.reserve(path.events.size());
    PeriodicClassical pc(a);
    for (std::size_t i = 0; i < path.events.size(); ++i) {
        const auto& e = path.events[i];
        const auto inc = pc.step(e, mask[i]);
        traj.events.push_back({e.time, e.x, pc.U(e), pc.L(), pc.R(), inc.dL, e.kinds});
    }
    return traj;
}

PeriodicOnlyResult apply_periodic_only(const RawPath& path, const ObservationClock& clock, double a) {
    const auto mask = observation_mask(path, clock);
    PeriodicOnlyResult out;
    out.trajectory.barrier = a;
    out.trajectory.horizon = path.horizon;
    PeriodicOnly po(a);
    for (std::size_t i = 0; i < path.events.size(); ++i) {
        const auto& e = path.events[i];
        const double paid = po.step(e, mask[i]);
        if (po.ruined()) {
            // The ruin event is kept with its lowest level.
            out.trajectory.events.push_back({e.time, e.x, po.low_U(e), po.L(), 0.0, 0.0, e.kinds});
            out.exits.kappa = po.ruin_time(e);
            break;
        }
        out.trajectory.events.push_back({e.time, e.x, po.U(e), po.L(), 0.0, paid, e.kinds});
    }
    const ExitReport ex = exit_times(path, clock, a);
    out.exits.tau0 = ex.tau0;
    out.exits.Ta_plus = ex.Ta_plus;
    return out;
}

ExitReport exit_times(const RawPath& path, const ObservationClock& clock, double a) {
    const auto mask = observation_mask(path, clock);
    ExitReport r;
    PeriodicOnly po(a);
    for (std::size_t i = 0; i < path.events.size(); ++i) {
        const auto& e = path.events[i];
        if (r.tau0 == kNever && e.below(0.0) && e.low() < 0.0) r.tau0 = e.crossing_time(0.0);
        if (r.Ta_plus == kNever && mask[i] && e.x > a) r.Ta_plus = e.time;
        if (r.kappa == kNever) {
            po.step(e, mask[i]);
            if (po.ruined()) r.kappa = po.ruin_time(e);
        }
    }
    return r;
}

void write_trajectory_csv(std::ostream& os, const ControlledTrajectory& traj) {
    os << "time,U,L,R,event_kind\n";
    for (const auto& p : traj.events)
        os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{}\n", p.time, p.U, p.L, p.R,
                          event_kind_label(p.kinds));
}

}  // namespace levydiv
