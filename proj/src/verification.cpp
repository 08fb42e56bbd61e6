#include "levydiv/verification.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "levydiv/errors.hpp"
#include "levydiv/parallel.hpp"
#include "levydiv/reflection.hpp"

namespace levydiv {

const char* to_string(CouplingProperty p) noexcept {
    switch (p) {
        case CouplingProperty::R_monotone: return "R-monotone";
        case CouplingProperty::R_range: return "R-range";
        case CouplingProperty::U_monotone: return "U-monotone";
        case CouplingProperty::U_range: return "U-range";
        case CouplingProperty::L_monotone: return "L-monotone";
        case CouplingProperty::L_range: return "L-range";
        case CouplingProperty::event_identity: return "event-identity";
    }
    return "?";
}

namespace {

struct PairResult {
    std::vector<CouplingViolation> violations;
    std::size_t count = 0;
    double max_excess = 0.0;
    int cls = 0;                  // 1: tau class, 2: T class
    double terminal_error = 0.0;
};

class PairChecker {
public:
    PairChecker(std::size_t id, double a, double x, double eps, double tol, bool identities, std::size_t cap)
        : id_(id), a_(a), x_(x), eps_(eps), tol_(tol), identities_(identities), cap_(cap),
          p0_(a, x), p1_(a, x + eps), prev_dU_(eps) {}

    bool on_event(const PathEvent& e) {
        const bool obs = (e.kinds & kObservation) != 0;
        p0_.step(e, obs);
        p1_.step(e, obs);
        const double dR = p1_.R() - p0_.R();
        const double dL = p1_.L() - p0_.L();
        const double dU = p1_.U(e) - p0_.U(e);
        const double t = e.time;
        if (!identities_) {
            check(t, CouplingProperty::R_monotone, dR - prev_dR_);
            check(t, CouplingProperty::R_range, std::max(-eps_ - dR, dR));
            check(t, CouplingProperty::U_monotone, dU - prev_dU_);
            check(t, CouplingProperty::U_range, std::max(-dU, dU - eps_));
            check(t, CouplingProperty::L_monotone, prev_dL_ - dL);
            check(t, CouplingProperty::L_range, std::max(-dL, dL - eps_));
        } else {
            if (tau0_ == kNever && e.below(-x_) && e.low() + x_ < 0.0) tau0_ = t;
            if (tau1_ == kNever && e.below(-x_ - eps_) && e.low() + x_ + eps_ < 0.0) tau1_ = t;
            if (obs && T0_ == kNever && e.x + x_ > a_) T0_ = t;
            if (obs && T1_ == kNever && e.x + x_ + eps_ > a_) T1_ = t;
            if (std::abs(dL) > tol_ && fL_nz_ == kNever) fL_nz_ = t;
            if (std::abs(dR) > tol_ && fR_nz_ == kNever) fR_nz_ = t;
            if (dR < -tol_ && fR_neg_ == kNever) fR_neg_ = t;
            if (dL > tol_ && fL_pos_ == kNever) fL_pos_ = t;
            max_dL_ = std::max(max_dL_, std::abs(dL));
            max_dR_ = std::max(max_dR_, std::abs(dR));
            // From tau^{(x+eps)} on, within its class, R-diff = -eps.
            if (tau1_ != kNever && tau1_ <= T1_) check(t, CouplingProperty::event_identity, std::abs(dR + eps_));
            // From T^{(x)} on, within its class, L-diff = eps.
            if (T0_ != kNever && T0_ < tau0_) check(t, CouplingProperty::event_identity, std::abs(dL - eps_));
        }
        prev_dR_ = dR;
        prev_dU_ = dU;
        prev_dL_ = dL;
        return true;
    }

    PairResult finish() {
        if (identities_) {
            if (tau1_ != kNever && tau1_ <= T1_) {
                res_.cls = 1;
                res_.terminal_error = std::abs(prev_dR_ + eps_);
                if (fL_nz_ != kNever) check(fL_nz_, CouplingProperty::event_identity, max_dL_);
                if (fR_nz_ < tau0_) check(fR_nz_, CouplingProperty::event_identity, max_dR_);
            } else if (T0_ != kNever && T0_ < tau0_) {
                res_.cls = 2;
                res_.terminal_error = std::abs(prev_dL_ - eps_);
                if (fR_nz_ != kNever) check(fR_nz_, CouplingProperty::event_identity, max_dR_);
                if (fL_nz_ < T1_) check(fL_nz_, CouplingProperty::event_identity, max_dL_);
            }
            if (tau0_ != kNever && tau0_ <= T0_ && fR_neg_ < tau0_)
                check(fR_neg_, CouplingProperty::event_identity, max_dR_);
            if (T1_ != kNever && T1_ < tau1_ && fL_pos_ < T1_)
                check(fL_pos_, CouplingProperty::event_identity, max_dL_);
        }
        return std::move(res_);
    }

private:
    void check(double t, CouplingProperty p, double excess) {
        if (excess > res_.max_excess) res_.max_excess = excess;
        if (excess > tol_) {
            ++res_.count;
            if (res_.violations.size() < cap_) res_.violations.push_back({id_, t, p, excess});
        }
    }

    std::size_t id_;
    double a_, x_, eps_, tol_;
    bool identities_;
    std::size_t cap_;
    PeriodicClassical p0_, p1_;
    double prev_dR_ = 0.0, prev_dU_, prev_dL_ = 0.0;
    double tau0_ = kNever, tau1_ = kNever, T0_ = kNever, T1_ = kNever;
    double fL_nz_ = kNever, fR_nz_ = kNever, fR_neg_ = kNever, fL_pos_ = kNever;
    double max_dL_ = 0.0, max_dR_ = 0.0;
    PairResult res_;
};

CouplingReport run_pairs(const McContext& ctx, double a, double x, double eps, std::size_t n_pairs,
                         const CouplingOptions& opt, bool identities) {
    if (!(eps >= 0.0)) throw std::invalid_argument("eps must be nonnegative");
    std::vector<PairResult> per(n_pairs);
    parallel_for(n_pairs, ctx.sim.threads, [&](std::size_t i) {
        PairChecker pc(i, a, x, eps, opt.tolerance, identities, opt.max_recorded);
        drive_path(ctx, i, 0.0, pc);
        per[i] = pc.finish();
    });
    CouplingReport rep;
    rep.n_pairs = n_pairs;
    rep.tolerance = opt.tolerance;
    for (const auto& p : per) {
        rep.violation_count += p.count;
        rep.max_violation = std::max(rep.max_violation, p.max_excess);
        for (const auto& v : p.violations)
            if (rep.violations.size() < opt.max_recorded) rep.violations.push_back(v);
        if (p.cls == 1) {
            ++rep.tau_class;
            rep.max_terminal_error_tau = std::max(rep.max_terminal_error_tau, p.terminal_error);
        } else if (p.cls == 2) {
            ++rep.T_class;
            rep.max_terminal_error_T = std::max(rep.max_terminal_error_T, p.terminal_error);
        }
    }
    return rep;
}

}  // namespace

CouplingReport coupling_check(const McContext& ctx, double a, double x, double eps, std::size_t n_pairs,
                              const CouplingOptions& opt) {
    return run_pairs(ctx, a, x, eps, n_pairs, opt, false);
}

CouplingReport event_identity_check(const McContext& ctx, double a, double x, double eps, std::size_t n_pairs,
                                    const CouplingOptions& opt) {
    return run_pairs(ctx, a, x, eps, n_pairs, opt, true);
}

TabulatedFunction::TabulatedFunction(std::vector<double> xs, std::vector<double> vs, double beta)
    : xs_(std::move(xs)), vs_(std::move(vs)), beta_(beta) {
    if (xs_.size() < 2 || xs_.size() != vs_.size()) throw std::invalid_argument("need >= 2 matching points");
    for (std::size_t k = 1; k < xs_.size(); ++k)
        if (!(xs_[k] > xs_[k - 1])) throw std::invalid_argument("grid must increase");
    has_zero_ = xs_.front() <= 1e-12;
    v0_ = 0.0;
    if (has_zero_) {
        if (xs_.front() >= 0.0) {
            v0_ = vs_.front();
        } else {
            auto it = std::upper_bound(xs_.begin(), xs_.end(), 0.0);
            const std::size_t k = static_cast<std::size_t>(it - xs_.begin());
            const double w = (0.0 - xs_[k - 1]) / (xs_[k] - xs_[k - 1]);
            v0_ = vs_[k - 1] + w * (vs_[k] - vs_[k - 1]);
        }
    }
}

double TabulatedFunction::operator()(double y) const {
    if (y < 0.0) {
        if (!has_zero_) throw GridTooCoarse("tabulated function needs v(0) for the affine extension");
        return beta_ * y + v0_;
    }
    if (y < xs_.front() - 1e-12 * (1.0 + xs_.front()))
        throw GridTooCoarse("query below the tabulated grid");
    std::size_t k;
    if (y >= xs_.back()) {
        k = xs_.size() - 1;
    } else {
        k = static_cast<std::size_t>(std::upper_bound(xs_.begin(), xs_.end(), y) - xs_.begin());
        if (k == 0) k = 1;
    }
    const double x0 = xs_[k - 1], x1 = xs_[k];
    if (y == x1) return vs_[k];
    return vs_[k - 1] + (y - x0) * (vs_[k] - vs_[k - 1]) / (x1 - x0);
}

double TabulatedFunction::max_spacing(double lo, double hi) const {
    double m = 0.0;
    for (std::size_t k = 1; k < xs_.size(); ++k)
        if (xs_[k] > lo && xs_[k - 1] < hi) m = std::max(m, xs_[k] - xs_[k - 1]);
    return m;
}

double TabulatedFunction::expect_exponential(double x, double s, double mean) const {
    // Breakpoints in the jump variable y >= 0 where v(x + s y) changes slope.
    std::vector<double> knots{0.0};
    if (s > 0.0) {
        for (double g : xs_)
            if (g > x) knots.push_back(g - x);
    } else {
        for (auto it = xs_.rbegin(); it != xs_.rend(); ++it)
            if (*it < x && *it > 0.0) knots.push_back(x - *it);
        if (x > 0.0) knots.push_back(x);
    }
    auto F = [&](double y) { return std::exp(-y / mean); };
    auto val = [&](double y) { return (*this)(x + s * y); };
    double acc = 0.0;
    for (std::size_t k = 0; k < knots.size(); ++k) {
        const double c = knots[k];
        const double vc = val(c);
        if (k + 1 < knots.size()) {
            const double d = knots[k + 1];
            const double kappa = (val(d) - vc) / (d - c);
            acc += vc * (F(c) - F(d)) + kappa * (mean * (F(c) - F(d)) - (d - c) * F(d));
        } else {
            const double kappa = (val(c + 1.0) - vc);  // slope of the final affine piece
            acc += vc * F(c) + kappa * mean * F(c);
        }
    }
    return acc;
}

double generator_apply(const TabulatedFunction& v, const ValidatedModel& model, double x, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("h must be positive");
    const auto& xs = v.xs();
    const double slack = 1e-12 * (1.0 + std::abs(x));
    if (x - h < xs.front() - slack || x + h > xs.back() + slack)
        throw GridTooCoarse("stencil leaves the tabulated grid");
    if (v.max_spacing(x - h, x + h) > h * (1.0 + 1e-9))
        throw GridTooCoarse("grid spacing exceeds the difference step");

    const double vm = v(x - h), v0 = v(x), vp = v(x + h);
    const double d1 = (vp - vm) / (2.0 * h);
    const double d2 = (vp - 2.0 * v0 + vm) / (h * h);
    const bool bv = model.variation() == VariationClass::bounded;
    const auto& tr = model.triple();

    double g = bv ? *model.effective_drift() * d1 : tr.gamma * d1 + 0.5 * tr.sigma * tr.sigma * d2;

    for (const auto& c : tr.jumps.components) {
        const double s = c.direction == JumpDirection::up ? 1.0 : -1.0;
        double ev;
        if (const auto* e = std::get_if<ExponentialMagnitude>(&c.magnitude)) {
            ev = v.expect_exponential(x, s, e->mean);
        } else if (const auto* d = std::get_if<DeterministicMagnitude>(&c.magnitude)) {
            ev = v(x + s * d->size);
        } else {
            const auto& emp = std::get<EmpiricalMagnitude>(c.magnitude);
            double acc = 0.0, w = 0.0;
            for (std::size_t k = 0; k < emp.sizes.size(); ++k) {
                acc += emp.weights[k] * v(x + s * emp.sizes[k]);
                w += emp.weights[k];
            }
            ev = acc / w;
        }
        double term = ev - v0;
        if (!bv) term -= d1 * s * magnitude_truncated_mean(c.magnitude);
        g += c.rate * term;
    }

    if (tr.jumps.small_jump) {
        const auto& sj = *tr.jumps.small_jump;
        // Below the difference step the tabulated v is replaced by its local quadratic.
        const double split = std::clamp(h, sj.cutoff, 1.0);
        const double m2 = small_jump_variance(sj, sj.cutoff, split);
        g += 0.5 * d2 * m2;
        if (bv) g += d1 * small_jump_first_moment(sj, sj.cutoff, split);
        if (split < 1.0) {
            using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
            auto side = [&](double cdens, double s) {
                if (cdens == 0.0) return 0.0;
                auto f = [&](double y) {
                    double t = v(x + s * y) - v0;
                    if (!bv) t -= d1 * s * y;
                    return t * cdens * std::pow(y, -1.0 - sj.alpha);
                };
                // Integrate knot to knot so each piece is smooth.
                std::vector<double> br{split};
                for (double gx : xs) {
                    const double y = s * (gx - x);
                    if (y > split && y < 1.0) br.push_back(y);
                }
                if (s < 0.0 && x > split && x < 1.0) br.push_back(x);
                br.push_back(1.0);
                std::sort(br.begin(), br.end());
                double acc = 0.0;
                for (std::size_t k = 0; k + 1 < br.size(); ++k)
                    if (br[k + 1] > br[k]) acc += GK::integrate(f, br[k], br[k + 1], 0);
                return acc;
            };
            g += side(sj.c_up, 1.0) + side(sj.c_down, -1.0);
        }
    }
    return g;
}

std::vector<double> HjbReport::grid() const {
    std::vector<double> g;
    for (const auto& p : points) g.push_back(p.x);
    return g;
}

std::vector<double> hjb_levels(std::span<const double> xs, double h, double a_star) {
    std::vector<double> lv{0.0, a_star};
    for (double x : xs)
        for (double d : {-2.0 * h, -h, 0.0, h, 2.0 * h}) lv.push_back(x + d);
    std::sort(lv.begin(), lv.end());
    lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
    return lv;
}

namespace {

// Residual (L - q) v(x) + r maxterm as constant + sum_j c_j v_j over the grid values.
void residual_coefficients(const ValidatedModel& model, const ProblemParams& pp, const std::vector<double>& grid,
                           double a_star, std::size_t ia, std::size_t ix, double x, double h,
                           std::vector<double>& coeffs, double& constant) {
    const std::size_t m = grid.size();
    std::vector<double> zero(m, 0.0);
    const double g0 = generator_apply(TabulatedFunction(grid, zero, pp.beta), model, x, h);
    coeffs.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        std::vector<double> e(m, 0.0);
        e[j] = 1.0;
        coeffs[j] = generator_apply(TabulatedFunction(grid, e, pp.beta), model, x, h) - g0;
    }
    constant = g0;
    coeffs[ix] -= pp.q;
    if (x >= a_star) {
        constant += pp.r * (x - a_star);
        coeffs[ia] += pp.r;
        coeffs[ix] -= pp.r;
    }
}

}  // namespace

HjbReport hjb_residual(const McContext& ctx, double a_star, const ValueGrid& vgrid, double h,
                       std::span<const double> xs, const HjbOptions& opt) {
    HjbReport rep;
    rep.a_star = a_star;
    rep.h = h;
    rep.z = opt.z;
    const auto& pp = ctx.params;
    const double z = opt.z;
    const std::vector<double>& grid = vgrid.xs;
    const std::size_t ia = vgrid.index_of(a_star);
    (void)vgrid.index_of(0.0);

    const double H = ctx.horizon();
    const double D = std::exp(-pp.q * H);
    const auto& model = ctx.model;
    double jump_mass = model.up_jump_mean_rate() + model.down_jump_mean_rate();
    const double drift = model.variation() == VariationClass::bounded ? *model.effective_drift() : model.gamma();
    const double dq = 1.0 - std::exp(-pp.q * ctx.sim.gridstep);

    ExitRaceProfile er = exit_race_profile(ctx.with_family(0x5107E), a_star, {xs.begin(), xs.end()}, opt.n_vprime);

    std::vector<double> coeffs;
    double constant = 0.0;
    rep.min_v = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < grid.size(); ++j) rep.min_v = std::min(rep.min_v, vgrid.mean_v(j));

    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double x = xs[k];
        if (x < h) throw GridTooCoarse("HJB grid must stay h away from 0");
        HjbPoint pt;
        pt.x = x;
        const std::size_t ix = vgrid.index_of(x);
        pt.v = vgrid.v(ix);
        pt.maxterm = x >= a_star ? (x - a_star) + vgrid.mean_v(ia) - pt.v.mean : 0.0;

        const double tb_x = vgrid.tail[ix];
        residual_coefficients(model, pp, grid, a_star, ia, ix, x, h, coeffs, constant);
        pt.residual_eq = vgrid.linear_v(coeffs, constant, 0.0);
        if (x >= 2.0 * h) {
            residual_coefficients(model, pp, grid, a_star, ia, ix, x, 2.0 * h, coeffs, constant);
            pt.residual_eq_2h = vgrid.linear_v(coeffs, constant, 0.0);
        } else {
            pt.residual_eq_2h = pt.residual_eq;
        }

        // Tail after the horizon: |T(x) - T(y)| <= beta |x - y| e^{-qH}, so difference
        // quotients of the tail are bounded by beta e^{-qH} (first) and 2 beta e^{-qH} / h (second).
        const double trunc = D * pp.beta *
                                 (std::abs(drift) + model.sigma() * model.sigma() / h + 2.0 * jump_mass) +
                             pp.q * tb_x + (x >= a_star ? pp.r * pp.beta * (x - a_star) * D : 0.0);
        // Injections are booked at the end of their step, which scales v^R by at most e^{-q dt}.
        const double timing = dq * pp.beta * vgrid.vR(ix).mean * (pp.q + (x >= a_star ? pp.r : 0.0));
        const double richardson = std::abs(pt.residual_eq.mean - pt.residual_eq_2h.mean) / 3.0;
        pt.residual_eq.truncation_bound = trunc + timing;
        pt.budget = z * pt.residual_eq.std_error + richardson + trunc + timing;
        pt.eq_ok = std::isfinite(pt.residual_eq.mean) && std::abs(pt.residual_eq.mean) <= pt.budget;

        pt.vprime = er.v_prime(k);
        pt.residual_slope = pt.vprime;
        pt.residual_slope.mean -= pp.beta;
        pt.residual_slope.ci95 = {pt.vprime.ci95.first - pp.beta, pt.vprime.ci95.second - pp.beta};
        rep.points.push_back(pt);
    }

    rep.eq_ok = std::all_of(rep.points.begin(), rep.points.end(), [](const HjbPoint& p) { return p.eq_ok; });
    rep.slope_ok = std::all_of(rep.points.begin(), rep.points.end(), [&](const HjbPoint& p) {
        return p.residual_slope.lower(z) <= 0.0 && p.vprime.upper(z) >= 0.0;
    });
    rep.concavity_ok = true;
    for (std::size_t k = 1; k < rep.points.size(); ++k)
        if (rep.points[k].vprime.lower(z) > rep.points[k - 1].vprime.upper(z)) rep.concavity_ok = false;

    // v >= -beta * (discounted injections) >= -beta d / (1 - Me) with the tail-bound constants.
    McContext c0 = ctx;
    c0.sim.horizon = 1e-300;
    const TailBounds tb0 = value_tail_bounds(c0, a_star, 0.0);
    rep.lower_bound = -pp.beta * tb0.injections.bound;
    rep.lower_bound_ok = std::isfinite(rep.min_v) && rep.min_v > rep.lower_bound;

    if (a_star > 0.0) {
        const SmoothFit sf = smooth_fit_check(ctx.with_family(0x5F17), a_star, opt.n_vprime);
        rep.smooth_fit_gap = sf.gap;
        rep.smooth_fit_se = sf.se;
    }
    return rep;
}

SmoothFit smooth_fit_check(const McContext& ctx, double a_star, std::size_t n) {
    if (!(a_star > 0.0)) throw std::invalid_argument("smooth fit needs a* > 0");
    SmoothFit sf;
    sf.vprime = estimate_vprime(ctx, a_star, a_star, n);
    sf.gap = std::abs(sf.vprime.mean - 1.0);
    sf.se = sf.vprime.std_error;
    return sf;
}

}  // namespace levydiv
