#include "levydiv/levy_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "levydiv/errors.hpp"

namespace levydiv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sign_of(JumpDirection d) { return d == JumpDirection::up ? 1.0 : -1.0; }

// Power-law side c x^{-1-alpha} on [lo, hi).
double power_mass(double c, double alpha, double lo, double hi) {
    if (c == 0.0 || hi <= lo) return 0.0;
    if (lo == 0.0) return kInf;
    return c * (std::pow(lo, -alpha) - std::pow(hi, -alpha)) / alpha;
}

double power_first(double c, double alpha, double lo, double hi) {
    if (c == 0.0 || hi <= lo) return 0.0;
    if (alpha == 1.0) return lo == 0.0 ? kInf : c * std::log(hi / lo);
    if (lo == 0.0 && alpha > 1.0) return kInf;
    return c * (std::pow(hi, 1.0 - alpha) - std::pow(lo, 1.0 - alpha)) / (1.0 - alpha);
}

double power_second(double c, double alpha, double lo, double hi) {
    if (c == 0.0 || hi <= lo) return 0.0;
    return c * (std::pow(hi, 2.0 - alpha) - std::pow(lo, 2.0 - alpha)) / (2.0 - alpha);
}

// E[|J| ; |J| < 1] for one magnitude law.
double truncated_mean(const MagnitudeDistribution& m) {
    struct V {
        double operator()(const ExponentialMagnitude& e) const {
            return e.mean * (1.0 - std::exp(-1.0 / e.mean) * (1.0 + 1.0 / e.mean));
        }
        double operator()(const DeterministicMagnitude& d) const { return d.size < 1.0 ? d.size : 0.0; }
        double operator()(const EmpiricalMagnitude& e) const {
            double s = 0.0, w = 0.0;
            for (std::size_t i = 0; i < e.sizes.size(); ++i) {
                w += e.weights[i];
                if (e.sizes[i] < 1.0) s += e.weights[i] * e.sizes[i];
            }
            return s / w;
        }
    };
    return std::visit(V{}, m);
}

// E[e^{i l J}] for J = s * |J|.
std::complex<double> magnitude_cf(const MagnitudeDistribution& m, double s, double lambda) {
    using C = std::complex<double>;
    struct V {
        double sl;
        C operator()(const ExponentialMagnitude& e) const { return 1.0 / C(1.0, -sl * e.mean); }
        C operator()(const DeterministicMagnitude& d) const { return std::polar(1.0, sl * d.size); }
        C operator()(const EmpiricalMagnitude& e) const {
            C acc = 0.0;
            double w = 0.0;
            for (std::size_t i = 0; i < e.sizes.size(); ++i) {
                acc += e.weights[i] * std::polar(1.0, sl * e.sizes[i]);
                w += e.weights[i];
            }
            return acc / w;
        }
    };
    return std::visit(V{s * lambda}, m);
}

void check_positive_finite(double v, const std::string& what) {
    if (!(v > 0.0)) throw InvalidModel(what + " must be positive");
    if (!std::isfinite(v)) throw RejectInfiniteMeanJumps(what + " is infinite");
}

void validate_density(const SmallJumpDensity& d) {
    if (!(d.alpha < 2.0))
        throw NonIntegrableSmallJumps("small-jump index alpha must be < 2 for int x^2 nu(dx) < inf");
    if (!(d.alpha > 0.0)) throw InvalidModel("small-jump index alpha must be positive");
    if (!(d.c_up >= 0.0) || !(d.c_down >= 0.0) || !std::isfinite(d.c_up) || !std::isfinite(d.c_down))
        throw InvalidModel("small-jump intensities must be finite and nonnegative");
    if (!(d.cutoff >= 0.0) || !(d.cutoff < 1.0)) throw InvalidModel("small-jump cutoff must lie in [0, 1)");
}

double small_signed_mean(const SmallJumpDensity& d) {
    const double up = power_first(d.c_up, d.alpha, d.cutoff, 1.0);
    const double dn = power_first(d.c_down, d.alpha, d.cutoff, 1.0);
    if (std::isinf(up) || std::isinf(dn)) return kInf;
    return up - dn;
}

double components_truncated_signed(const JumpSpec& j) {
    double s = 0.0;
    for (const auto& c : j.components) s += c.rate * sign_of(c.direction) * truncated_mean(c.magnitude);
    return s;
}

// 1 - cos z and z - sin z without cancellation near 0.
double one_minus_cos(double z) {
    const double h = std::sin(0.5 * z);
    return 2.0 * h * h;
}
double z_minus_sin(double z) {
    if (std::abs(z) < 1e-2) {
        const double z2 = z * z;
        return z * z2 / 6.0 * (1.0 - z2 / 20.0 * (1.0 - z2 / 42.0));
    }
    return z - std::sin(z);
}

}  // namespace

double magnitude_mean(const MagnitudeDistribution& m) {
    struct V {
        double operator()(const ExponentialMagnitude& e) const { return e.mean; }
        double operator()(const DeterministicMagnitude& d) const { return d.size; }
        double operator()(const EmpiricalMagnitude& e) const {
            double s = 0.0, w = 0.0;
            for (std::size_t i = 0; i < e.sizes.size(); ++i) {
                s += e.weights[i] * e.sizes[i];
                w += e.weights[i];
            }
            return s / w;
        }
    };
    return std::visit(V{}, m);
}

LevyTriple LevyTriple::from_effective_drift(double delta, double sigma, JumpSpec jumps) {
    double small = 0.0;
    if (jumps.small_jump) {
        validate_density(*jumps.small_jump);
        small = small_signed_mean(*jumps.small_jump);
        if (std::isinf(small))
            throw InvalidModel("effective drift undefined: small jumps have unbounded variation");
    }
    const double gamma = delta + components_truncated_signed(jumps) + small;
    return LevyTriple{gamma, sigma, std::move(jumps)};
}

void ProblemParams::validate() const {
    if (!(q > 0.0) || !std::isfinite(q)) throw InvalidModel("q must be positive and finite");
    if (!(r > 0.0) || !std::isfinite(r)) throw InvalidModel("r must be positive and finite");
    if (!(beta > 1.0) || !std::isfinite(beta)) throw InvalidModel("beta must exceed 1");
}

std::optional<double> ValidatedModel::effective_drift() const noexcept {
    if (variation_ != VariationClass::bounded) return std::nullopt;
    return triple_.gamma - components_truncated_signed(triple_.jumps) - small_mean_signed_;
}

double ValidatedModel::simulation_drift() const {
    if (!finite_activity_)
        throw InvalidModel("simulation requires finite jump activity; apply asmussen_truncate first");
    return triple_.gamma - components_truncated_signed(triple_.jumps) - small_mean_signed_;
}

double ValidatedModel::sample_jump(RngStream& rng) const {
    const double u = rng.uniform();
    std::size_t k = static_cast<std::size_t>(
        std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
    if (k >= sources_.size()) k = sources_.size() - 1;
    const Source& src = sources_[k];
    if (src.component < 0) {
        const auto& d = *triple_.jumps.small_jump;
        const double a = d.alpha;
        const double lo = std::pow(d.cutoff, -a), hi = 1.0;
        const double mag = std::pow(lo - rng.uniform() * (lo - hi), -1.0 / a);
        return src.component == -1 ? mag : -mag;
    }
    const JumpComponent& c = triple_.jumps.components[static_cast<std::size_t>(src.component)];
    double mag = 0.0;
    if (const auto* e = std::get_if<ExponentialMagnitude>(&c.magnitude)) {
        mag = -e->mean * std::log(rng.uniform_pos());
    } else if (const auto* d = std::get_if<DeterministicMagnitude>(&c.magnitude)) {
        mag = d->size;
    } else {
        const auto& emp = std::get<EmpiricalMagnitude>(c.magnitude);
        const auto& cdf = empirical_cdf_[static_cast<std::size_t>(src.component)];
        const double v = rng.uniform();
        std::size_t i = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), v) - cdf.begin());
        if (i >= emp.sizes.size()) i = emp.sizes.size() - 1;
        mag = emp.sizes[i];
    }
    return sign_of(c.direction) * mag;
}

ValidatedModel validate_model(const LevyTriple& triple) {
    if (!std::isfinite(triple.gamma)) throw InvalidModel("gamma must be finite");
    if (!(triple.sigma >= 0.0) || !std::isfinite(triple.sigma))
        throw InvalidModel("sigma must be finite and nonnegative");

    ValidatedModel m;
    m.triple_ = triple;
    m.empirical_cdf_.resize(triple.jumps.components.size());
    double mean_big = 0.0;

    for (std::size_t i = 0; i < triple.jumps.components.size(); ++i) {
        const auto& c = triple.jumps.components[i];
        if (!(c.rate > 0.0) || !std::isfinite(c.rate))
            throw InvalidModel("jump rate must be positive and finite");
        if (const auto* e = std::get_if<ExponentialMagnitude>(&c.magnitude)) {
            check_positive_finite(e->mean, "exponential jump mean");
        } else if (const auto* d = std::get_if<DeterministicMagnitude>(&c.magnitude)) {
            check_positive_finite(d->size, "deterministic jump size");
        } else {
            const auto& emp = std::get<EmpiricalMagnitude>(c.magnitude);
            if (emp.sizes.empty() || emp.sizes.size() != emp.weights.size())
                throw InvalidModel("empirical jump law needs matching sizes and weights");
            double w = 0.0;
            for (std::size_t k = 0; k < emp.sizes.size(); ++k) {
                check_positive_finite(emp.sizes[k], "empirical jump size");
                if (!(emp.weights[k] >= 0.0) || !std::isfinite(emp.weights[k]))
                    throw InvalidModel("empirical jump weights must be finite and nonnegative");
                w += emp.weights[k];
            }
            if (!(w > 0.0)) throw InvalidModel("empirical jump weights sum to zero");
            auto& cdf = m.empirical_cdf_[i];
            double acc = 0.0;
            for (double wk : emp.weights) cdf.push_back((acc += wk) / w);
        }
        const double mean = magnitude_mean(c.magnitude);
        const double big = mean - truncated_mean(c.magnitude);
        mean_big += c.rate * sign_of(c.direction) * big;
        (c.direction == JumpDirection::up ? m.up_mean_rate_ : m.down_mean_rate_) += c.rate * mean;
        m.sources_.push_back({c.rate, static_cast<int>(i)});
    }

    if (triple.jumps.small_jump) {
        const auto& d = *triple.jumps.small_jump;
        validate_density(d);
        m.small_mean_signed_ = small_signed_mean(d);
        m.small_mean_finite_ = std::isfinite(m.small_mean_signed_);
        const double mu = power_mass(d.c_up, d.alpha, d.cutoff, 1.0);
        const double md = power_mass(d.c_down, d.alpha, d.cutoff, 1.0);
        m.finite_activity_ = std::isfinite(mu) && std::isfinite(md);
        if (m.finite_activity_) {
            if (mu > 0.0) m.sources_.push_back({mu, -1});
            if (md > 0.0) m.sources_.push_back({md, -2});
            m.up_mean_rate_ += power_first(d.c_up, d.alpha, d.cutoff, 1.0);
            m.down_mean_rate_ += power_first(d.c_down, d.alpha, d.cutoff, 1.0);
        }
    }

    m.mean_increment_ = triple.gamma + mean_big;
    m.variation_ = (triple.sigma == 0.0 && m.small_mean_finite_) ? VariationClass::bounded
                                                                   : VariationClass::unbounded;

    if (triple.sigma == 0.0 && m.finite_activity_) {
        const double delta = *m.effective_drift();
        if (std::abs(delta) <= 1e-12 * (1.0 + std::abs(triple.gamma))) throw RejectDriftlessCompoundPoisson();
    }

    double acc = 0.0;
    for (const auto& s : m.sources_) acc += s.rate;
    m.total_rate_ = m.finite_activity_ ? acc : kInf;
    double run = 0.0;
    for (const auto& s : m.sources_) m.cumulative_.push_back((run += s.rate) / acc);
    return m;
}

std::complex<double> char_exponent(const LevyTriple& triple, double lambda) {
    using C = std::complex<double>;
    C psi(0.5 * triple.sigma * triple.sigma * lambda * lambda, -triple.gamma * lambda);
    for (const auto& c : triple.jumps.components) {
        const double s = sign_of(c.direction);
        const C cf = magnitude_cf(c.magnitude, s, lambda);
        psi += c.rate * (1.0 - cf + C(0.0, lambda * s * truncated_mean(c.magnitude)));
    }
    if (triple.jumps.small_jump && lambda != 0.0) {
        const auto& d = *triple.jumps.small_jump;
        boost::math::quadrature::tanh_sinh<double> ts;
        const double a = d.alpha;
        // Near 0 the leading powers are folded into y^{1-a} and y^{2-a} so that
        // tiny y does not produce 0 * inf.
        auto re = [&](double y) {
            const double z = lambda * y;
            if (std::abs(z) < 1e-4) return 0.5 * lambda * lambda * std::pow(y, 1.0 - a) * (1.0 - z * z / 12.0);
            return one_minus_cos(z) * std::pow(y, -1.0 - a);
        };
        auto im = [&](double y) {
            const double z = lambda * y;
            if (std::abs(z) < 1e-4)
                return lambda * lambda * lambda / 6.0 * std::pow(y, 2.0 - a) * (1.0 - z * z / 20.0);
            return z_minus_sin(z) * std::pow(y, -1.0 - a);
        };
        const double lo = d.cutoff;
        const double ire = ts.integrate(re, lo, 1.0);
        const double iim = ts.integrate(im, lo, 1.0);
        psi += C((d.c_up + d.c_down) * ire, (d.c_up - d.c_down) * iim);
    }
    return psi;
}

double small_jump_variance(const SmallJumpDensity& d, double eps_lo, double eps_hi) {
    return power_second(d.c_up, d.alpha, eps_lo, eps_hi) + power_second(d.c_down, d.alpha, eps_lo, eps_hi);
}

double small_jump_first_moment(const SmallJumpDensity& d, double eps_lo, double eps_hi) {
    return power_first(d.c_up, d.alpha, eps_lo, eps_hi) - power_first(d.c_down, d.alpha, eps_lo, eps_hi);
}

double magnitude_truncated_mean(const MagnitudeDistribution& m) { return truncated_mean(m); }

LevyTriple asmussen_truncate(const LevyTriple& triple, double eps) {
    if (!triple.jumps.small_jump) throw InvalidModel("asmussen_truncate needs a small-jump density");
    if (!(eps > 0.0)) throw InvalidModel("truncation level must be positive");
    const auto& d = *triple.jumps.small_jump;
    validate_density(d);
    const double cut = std::min(eps, 1.0);
    if (cut <= d.cutoff) return triple;

    LevyTriple out = triple;
    const double var = small_jump_variance(d, d.cutoff, cut);
    out.sigma = std::sqrt(triple.sigma * triple.sigma + var);
    if (cut >= 1.0)
        out.jumps.small_jump.reset();
    else
        out.jumps.small_jump->cutoff = cut;
    // gamma is untouched: the removed jumps were compensated, so their mean is zero.
    return out;
}

}  // namespace levydiv
