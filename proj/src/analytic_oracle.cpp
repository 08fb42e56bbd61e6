#include "levydiv/analytic_oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace levydiv {

double bm_down_laplace(double x, const BrownianSpec& spec, double q) {
    if (!(spec.sig > 0.0) || !(q > 0.0)) throw std::invalid_argument("need sig > 0 and q > 0");
    const double s2 = spec.sig * spec.sig;
    const double root = std::sqrt(spec.mu * spec.mu + 2.0 * q * s2);
    // root + mu, rewritten for mu < 0 where the sum cancels.
    const double k = spec.mu >= 0.0 ? root + spec.mu : 2.0 * q * s2 / (root - spec.mu);
    return std::exp(-x * k / s2);
}

std::pair<double, double> bm_psi_roots(const BrownianSpec& spec, double theta) {
    if (!(spec.sig > 0.0) || !(theta > 0.0)) throw std::invalid_argument("need sig > 0 and theta > 0");
    const double s2 = spec.sig * spec.sig;
    const double s = std::sqrt(spec.mu * spec.mu + 2.0 * s2 * theta);
    // Pick the cancellation-free form for each root.
    if (spec.mu >= 0.0) return {2.0 * theta / (spec.mu + s), -(spec.mu + s) / s2};
    return {(s - spec.mu) / s2, -2.0 * theta / (s - spec.mu)};
}

}  // namespace levydiv
