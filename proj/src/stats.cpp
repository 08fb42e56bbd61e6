#include "levydiv/stats.hpp"

#include <cmath>

#include "levydiv/errors.hpp"

namespace levydiv {

DiscountedStatistic summarize(std::span<const double> samples, double truncation_bound) {
    if (samples.empty()) throw EmptySample();
    const std::size_t n = samples.size();
    CompensatedSum s;
    for (double v : samples) s.add(v);
    const double mean = s.value() / static_cast<double>(n);
    CompensatedSum ss;
    for (double v : samples) ss.add((v - mean) * (v - mean));
    const double var = n > 1 ? ss.value() / static_cast<double>(n - 1) : 0.0;
    DiscountedStatistic d;
    d.mean = mean;
    d.n = n;
    d.std_error = std::sqrt(var / static_cast<double>(n));
    d.ci95 = {mean - 1.96 * d.std_error, mean + 1.96 * d.std_error};
    d.truncation_bound = truncation_bound;
    return d;
}

double combined_se(std::initializer_list<double> ses) noexcept {
    double s = 0.0;
    for (double v : ses) s += v * v;
    return std::sqrt(s);
}

std::vector<double> SampleMatrix::column(std::size_t j) const {
    std::vector<double> c(n_);
    for (std::size_t i = 0; i < n_; ++i) c[i] = at(i, j);
    return c;
}

DiscountedStatistic SampleMatrix::stat(std::size_t j, double truncation_bound) const {
    return summarize(column(j), truncation_bound);
}

DiscountedStatistic SampleMatrix::linear_stat(std::span<const double> coeffs, double constant,
                                              double truncation_bound) const {
    std::vector<double> c(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        CompensatedSum s;
        s.add(constant);
        for (std::size_t j = 0; j < k_ && j < coeffs.size(); ++j)
            if (coeffs[j] != 0.0) s.add(coeffs[j] * at(i, j));
        c[i] = s.value();
    }
    return summarize(c, truncation_bound);
}

}  // namespace levydiv
