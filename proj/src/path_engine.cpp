#include "levydiv/path_engine.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <ostream>
#include <string>

#include <fmt/format.h>

namespace levydiv {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Events closer than this are merged into one.
double merge_tol(double t) { return 1e-12 * (1.0 + t); }
}  // namespace

ObservationClock sample_clock(double r, double horizon, RngStream& stream) {
    ObservationClock c;
    c.horizon = horizon;
    if (!(horizon > 0.0)) return c;
    double t = 0.0;
    for (;;) {
        t += stream.exponential(r);
        if (t > horizon) break;
        c.arrivals.push_back(t);
    }
    return c;
}

double bridge_minimum(double a, double b, double sigma, double dt, double u) noexcept {
    const double d = b - a;
    return 0.5 * (a + b - std::sqrt(d * d - 2.0 * sigma * sigma * dt * std::log(u)));
}

double PathEvent::interval_min() const noexcept {
    const double b = xc;
    const double lo = x_prev < b ? x_prev : b;
    if (bvar <= 0.0) return lo;
    const double d = b - x_prev;
    const double m = 0.5 * (x_prev + b - std::sqrt(d * d - bvar * std::log(u) * 2.0));
    return m < lo ? m : lo;
}

double PathEvent::crossing_time(double level) const noexcept {
    if (x_prev < level) return t_prev;
    const double h = time - t_prev;
    const double a = x_prev - level, b = xc - level;
    if (bvar <= 0.0) {
        if (b >= 0.0) return time;
        return t_prev + h * a / (a - b);
    }
    if (a == 0.0) return t_prev;
    // With X(t) = a + (b - a) t/h + (h - t)/h W(t h/(h - t)), the bridge hits the
    // level when a + (b/h) s + W(s) reaches 0, s = t h/(h - t). Given that it does,
    // s is inverse Gaussian with mean a h/|b| and shape a^2/sigma^2.
    std::uint64_t ku, kl, kt;
    std::memcpy(&ku, &u, sizeof ku);
    std::memcpy(&kl, &level, sizeof kl);
    std::memcpy(&kt, &time, sizeof kt);
    std::uint64_t st = ku ^ (kl * 0x9e3779b97f4a7c15ULL) ^ (kt * 0xc2b2ae3d27d4eb4fULL);
    RngStream rng(splitmix64(st));
    const double s2 = bvar / h;
    const double lam = a * a / s2;
    const double z = rng.normal();
    const double y = z * z;
    double s;
    if (b == 0.0) {
        s = lam / y;
    } else {
        const double mu = a * h / std::abs(b);
        const double w = mu * y / (2.0 * lam);
        const double x1 = mu / (1.0 + w + std::sqrt(w * w + 2.0 * w));
        s = rng.uniform() * (mu + x1) <= mu ? x1 : mu * mu / x1;
    }
    if (!(s < kInf)) return time;
    const double t = t_prev + s * h / (h + s);
    return t < time ? t : time;
}

PathGenerator::PathGenerator(const ValidatedModel& model, double x0, double horizon,
                             std::span<const double> arrivals, const PathSettings& settings,
                             RngStream stream)
    : model_(&model),
      horizon_(horizon),
      arrivals_(arrivals),
      gridstep_(settings.gridstep),
      bridge_(settings.bridge && model.sigma() > 0.0),
      drift_(model.simulation_drift()),
      sigma_(model.sigma()),
      rng_(stream) {
    const double rate = model.total_rate();
    next_jump_ = rate > 0.0 ? rng_.exponential(rate) : kInf;
    ev_ = PathEvent{0.0, x0, 0.0, x0, x0, 0.0, 0.0, kGrid, 0.0};
    done_ = !(horizon > 0.0);
}

PathGenerator::PathGenerator(const ValidatedModel& model, double x0, double horizon, double r, RngStream clock,
                             const PathSettings& settings, RngStream stream)
    : PathGenerator(model, x0, horizon, std::span<const double>{}, settings, stream) {
    lazy_clock_ = true;
    clock_rate_ = r;
    clock_ = clock;
    lazy_next_ = r > 0.0 ? clock_.exponential(r) : kInf;
    if (lazy_next_ > horizon_) lazy_next_ = kInf;
}

double PathGenerator::peek_arrival() const noexcept {
    if (lazy_clock_) return lazy_next_;
    return next_arrival_ < arrivals_.size() ? arrivals_[next_arrival_] : kInf;
}

void PathGenerator::pop_arrival() noexcept {
    if (!lazy_clock_) {
        ++next_arrival_;
        return;
    }
    lazy_next_ += clock_.exponential(clock_rate_);
    if (lazy_next_ > horizon_) lazy_next_ = kInf;
}

bool PathGenerator::advance() {
    if (done_) return false;
    const double t0 = ev_.time;
    const double tg = static_cast<double>(next_grid_) * gridstep_;
    const double ta = peek_arrival();
    double t = std::min({tg, ta, next_jump_, horizon_});
    const double tol = merge_tol(t);

    std::uint8_t kinds = 0;
    bool at_end = false;
    // Representative time by priority: arrival, horizon, jump, grid.
    double rep = -1.0;
    if (ta <= horizon_ + tol && ta - t <= tol) {
        kinds |= kObservation;
        rep = ta;
        pop_arrival();
    }
    if (horizon_ - t <= tol) {
        at_end = true;
        kinds |= kGrid;
        if (rep < 0.0) rep = horizon_;
    }
    const bool jump = next_jump_ - t <= tol && next_jump_ <= horizon_ + tol;
    if (jump) {
        kinds |= kJump;
        if (rep < 0.0) rep = next_jump_;
    }
    while (static_cast<double>(next_grid_) * gridstep_ - t <= tol) {
        kinds |= kGrid;
        ++next_grid_;
    }
    if (rep < 0.0) rep = t;
    t = std::min(rep, horizon_);

    const double dt = t - t0;
    double x_end = ev_.x + drift_ * dt;
    double bvar = 0.0, u = 0.0;
    if (sigma_ > 0.0 && dt > 0.0) {
        x_end += sigma_ * std::sqrt(dt) * rng_.normal();
        if (bridge_) {
            u = rng_.uniform_pos();
            bvar = sigma_ * sigma_ * dt;
        }
    }
    double j = 0.0;
    if (jump) {
        j = model_->sample_jump(rng_);
        next_jump_ = t + rng_.exponential(model_->total_rate());
    }
    ev_ = PathEvent{t, x_end + j, j, ev_.x, x_end, bvar, u, kinds, t0};
    if (at_end) done_ = true;
    return true;
}

RawPath simulate_path(const ValidatedModel& model, double x0, double horizon,
                      const ObservationClock& clock, const PathSettings& settings, RngStream stream) {
    RawPath p;
    p.x0 = x0;
    p.horizon = horizon;
    p.gridstep = settings.gridstep;
    p.bridged = settings.bridge && model.sigma() > 0.0;
    PathGenerator gen(model, x0, horizon, clock.arrivals, settings, stream);
    p.events.push_back(gen.current());
    while (gen.advance()) p.events.push_back(gen.current());
    return p;
}

RawPath shift_path(const RawPath& path, double eps) {
    RawPath p = path;
    p.x0 += eps;
    for (auto& e : p.events) {
        e.x += eps;
        e.x_prev += eps;
        e.xc += eps;
    }
    return p;
}

std::string event_kind_label(std::uint8_t kinds) {
    std::string s;
    auto add = [&](const char* w) {
        if (!s.empty()) s += '+';
        s += w;
    };
    if (kinds & kGrid) add("grid");
    if (kinds & kJump) add("jump");
    if (kinds & kObservation) add("observation");
    return s;
}

void write_path_csv(std::ostream& os, const RawPath& path) {
    os << "time,kind,X,jumpsize\n";
    for (const auto& e : path.events)
        os << fmt::format("{:.17g},{},{:.17g},{:.17g}\n", e.time, event_kind_label(e.kinds), e.x, e.jump);
}

}  // namespace levydiv
