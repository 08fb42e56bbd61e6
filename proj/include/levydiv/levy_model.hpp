#pragma once

#include <complex>
#include <optional>
#include <variant>
#include <vector>

#include "levydiv/rng.hpp"

namespace levydiv {

enum class JumpDirection { up, down };

struct ExponentialMagnitude {
    double mean = 1.0;
};
struct DeterministicMagnitude {
    double size = 1.0;
};
struct EmpiricalMagnitude {
    std::vector<double> sizes;
    std::vector<double> weights;  // normalized on validation
};
using MagnitudeDistribution =
    std::variant<ExponentialMagnitude, DeterministicMagnitude, EmpiricalMagnitude>;

struct JumpComponent {
    double rate = 0.0;
    JumpDirection direction = JumpDirection::up;
    MagnitudeDistribution magnitude = ExponentialMagnitude{};
};

// Power-law small-jump density c_up x^{-1-alpha} on [cutoff, 1) and
// c_down |x|^{-1-alpha} on (-1, -cutoff]. cutoff = 0 is infinite activity.
struct SmallJumpDensity {
    double c_up = 0.0;
    double c_down = 0.0;
    double alpha = 0.5;
    double cutoff = 0.0;
};

struct JumpSpec {
    std::vector<JumpComponent> components;
    std::optional<SmallJumpDensity> small_jump;
};

// Characteristic triple with |x| < 1 truncation:
//   psi(l) = -i gamma l + sigma^2 l^2 / 2 + int (1 - e^{ilx} + ilx 1{|x|<1}) nu(dx).
struct LevyTriple {
    double gamma = 0.0;
    double sigma = 0.0;
    JumpSpec jumps;

    // Triple whose bounded-variation drift equals delta.
    static LevyTriple from_effective_drift(double delta, double sigma, JumpSpec jumps);
};

struct ProblemParams {
    double q = 0.05;
    double r = 1.0;
    double beta = 1.5;

    void validate() const;
};

enum class VariationClass { bounded, unbounded };

class ValidatedModel {
public:
    const LevyTriple& triple() const noexcept { return triple_; }
    VariationClass variation() const noexcept { return variation_; }
    bool finite_activity() const noexcept { return finite_activity_; }
    double gamma() const noexcept { return triple_.gamma; }
    double sigma() const noexcept { return triple_.sigma; }

    // delta = gamma - int_{|x|<1} x nu(dx); only finite for bounded variation.
    std::optional<double> effective_drift() const noexcept;

    // gamma + int_{|x|>=1} x nu(dx).
    double mean_increment() const noexcept { return mean_increment_; }

    double total_rate() const noexcept { return total_rate_; }

    // Drift used between jump events; requires finite activity.
    double simulation_drift() const;

    // Sum of rate * E|J| over downward (resp. upward) finite-activity parts.
    double down_jump_mean_rate() const noexcept { return down_mean_rate_; }
    double up_jump_mean_rate() const noexcept { return up_mean_rate_; }

    // Draws one jump from the normalized finite-activity measure.
    double sample_jump(RngStream& rng) const;

    friend ValidatedModel validate_model(const LevyTriple& triple);

private:
    struct Source {
        double rate;
        int component;   // index into components, or -1 / -2 for small-jump up / down
    };

    LevyTriple triple_;
    VariationClass variation_ = VariationClass::unbounded;
    bool finite_activity_ = true;
    double small_mean_signed_ = 0.0;   // int_{|x|<1} x nu(dx) when finite
    bool small_mean_finite_ = true;
    double mean_increment_ = 0.0;
    double total_rate_ = 0.0;
    double down_mean_rate_ = 0.0;
    double up_mean_rate_ = 0.0;
    std::vector<Source> sources_;
    std::vector<double> cumulative_;   // cumulative source rates / total
    std::vector<std::vector<double>> empirical_cdf_;
};

ValidatedModel validate_model(const LevyTriple& triple);

std::complex<double> char_exponent(const LevyTriple& triple, double lambda);

// Replaces the jumps in |x| < eps by a Brownian component of equal variance.
LevyTriple asmussen_truncate(const LevyTriple& triple, double eps);

// int x^2 nu(dx) over eps_lo <= |x| < eps_hi for the small-jump density.
double small_jump_variance(const SmallJumpDensity& d, double eps_lo, double eps_hi);

// int x nu(dx) over eps_lo <= |x| < eps_hi, signed (up minus down).
double small_jump_first_moment(const SmallJumpDensity& d, double eps_lo, double eps_hi);

double magnitude_mean(const MagnitudeDistribution& m);
// E[|J| ; |J| < 1].
double magnitude_truncated_mean(const MagnitudeDistribution& m);

}  // namespace levydiv
