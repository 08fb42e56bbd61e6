#pragma once

#include <utility>

namespace levydiv {

// X = mu t + sig B.
struct BrownianSpec {
    double mu = 0.0;
    double sig = 1.0;
};

// E_x[e^{-q tau_0^-}] = exp(-x (sqrt(mu^2 + 2 q sig^2) + mu) / sig^2).
double bm_down_laplace(double x, const BrownianSpec& spec, double q);

// Roots of sig^2 l^2 / 2 + mu l - theta = 0 as (positive, negative).
std::pair<double, double> bm_psi_roots(const BrownianSpec& spec, double theta);

}  // namespace levydiv
