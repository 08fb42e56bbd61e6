#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "levydiv/stats.hpp"
#include "levydiv/valuation.hpp"

namespace levydiv {

enum class CouplingProperty { R_monotone, R_range, U_monotone, U_range, L_monotone, L_range, event_identity };

const char* to_string(CouplingProperty p) noexcept;

struct CouplingViolation {
    std::size_t pair = 0;
    double time = 0.0;
    CouplingProperty property = CouplingProperty::R_monotone;
    double magnitude = 0.0;
};

struct CouplingReport {
    std::size_t n_pairs = 0;
    double tolerance = 0.0;
    std::vector<CouplingViolation> violations;  // at most max_recorded, in pair order
    std::size_t violation_count = 0;
    double max_violation = 0.0;                 // largest raw excess, before the tolerance
    // Event-identity bookkeeping.
    std::size_t tau_class = 0;                  // pairs with tau^{(x+eps)} < T^{(x+eps)}
    std::size_t T_class = 0;                    // pairs with T^{(x)} < tau^{(x)}
    double max_terminal_error_tau = 0.0;        // max |R-diff(H) + eps| over the tau class
    double max_terminal_error_T = 0.0;          // max |L-diff(H) - eps| over the T class
};

struct CouplingOptions {
    double tolerance = 1e-9;
    std::size_t max_recorded = 1000;
};

// Runs the periodic-classical strategy from x and x + eps on common paths and
// checks at every event that R-, U- and L-differences are monotone and lie
// in [-eps, 0], [0, eps], [0, eps].
CouplingReport coupling_check(const McContext& ctx, double a, double x, double eps, std::size_t n_pairs,
                              const CouplingOptions& opt = {});

// Pathwise identities for the differences on the exit events {tau < T} and {T < tau}.
CouplingReport event_identity_check(const McContext& ctx, double a, double x, double eps, std::size_t n_pairs,
                                    const CouplingOptions& opt = {});

// Piecewise-linear function on an increasing grid. Below 0 it is extended as
// beta * y + v(0); above the grid it continues along the last segment.
class TabulatedFunction {
public:
    TabulatedFunction(std::vector<double> xs, std::vector<double> vs, double beta);

    double operator()(double y) const;
    // E[v(x + s Y)] for Y exponential with the given mean.
    double expect_exponential(double x, double s, double mean) const;

    const std::vector<double>& xs() const noexcept { return xs_; }
    const std::vector<double>& vs() const noexcept { return vs_; }
    double max_spacing(double lo, double hi) const;

private:
    std::vector<double> xs_, vs_;
    double beta_;
    double v0_;
    bool has_zero_;
};

// (L v)(x) by central differences of step h and per-family jump expectations.
double generator_apply(const TabulatedFunction& v, const ValidatedModel& model, double x, double h);

struct HjbPoint {
    double x = 0.0;
    DiscountedStatistic v;
    double maxterm = 0.0;
    DiscountedStatistic residual_eq;     // step h
    DiscountedStatistic residual_eq_2h;  // step 2h, for the Richardson estimate
    double budget = 0.0;                 // z SE + |R(h) - R(2h)| / 3 + truncation + timing terms
    DiscountedStatistic vprime;
    DiscountedStatistic residual_slope;  // v' - beta
    bool eq_ok = false;
};

struct HjbReport {
    double a_star = 0.0;
    double h = 0.0;
    double z = 3.0;
    std::vector<HjbPoint> points;
    double smooth_fit_gap = 0.0;
    double smooth_fit_se = 0.0;
    double min_v = 0.0;
    double lower_bound = 0.0;  // -m
    bool lower_bound_ok = false;
    bool slope_ok = false;
    bool concavity_ok = false;
    bool eq_ok = false;

    std::vector<double> grid() const;
};

// Levels a value grid must contain for hjb_residual: 0, a*, and x, x +- h, x +- 2h.
std::vector<double> hjb_levels(std::span<const double> xs, double h, double a_star);

struct HjbOptions {
    double z = 3.0;
    std::size_t n_vprime = 100000;
};

HjbReport hjb_residual(const McContext& ctx, double a_star, const ValueGrid& vgrid, double h,
                       std::span<const double> xs, const HjbOptions& opt = {});

struct SmoothFit {
    double gap = 0.0;
    double se = 0.0;
    DiscountedStatistic vprime;
};

SmoothFit smooth_fit_check(const McContext& ctx, double a_star, std::size_t n);

}  // namespace levydiv
