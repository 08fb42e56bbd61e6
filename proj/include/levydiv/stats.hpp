#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace levydiv {

// Neumaier compensated sum.
class CompensatedSum {
public:
    void add(double v) noexcept {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            c_ += (sum_ - t) + v;
        else
            c_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + c_; }

private:
    double sum_ = 0.0, c_ = 0.0;
};

struct DiscountedStatistic {
    double mean = 0.0;
    double std_error = 0.0;  // sample standard deviation / sqrt(n)
    std::size_t n = 0;
    std::pair<double, double> ci95{0.0, 0.0};
    double truncation_bound = 0.0;

    double lower(double z) const noexcept { return mean - z * std_error; }
    double upper(double z) const noexcept { return mean + z * std_error; }
};

DiscountedStatistic summarize(std::span<const double> samples, double truncation_bound = 0.0);

// sqrt(se1^2 + se2^2 + ...)
double combined_se(std::initializer_list<double> ses) noexcept;

// Per-path samples of k quantities, row-major (path-major).
class SampleMatrix {
public:
    SampleMatrix() = default;
    SampleMatrix(std::size_t n, std::size_t k) : n_(n), k_(k), data_(n * k, 0.0) {}

    std::size_t rows() const noexcept { return n_; }
    std::size_t cols() const noexcept { return k_; }
    double& at(std::size_t i, std::size_t j) noexcept { return data_[i * k_ + j]; }
    double at(std::size_t i, std::size_t j) const noexcept { return data_[i * k_ + j]; }
    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * k_, k_}; }

    std::vector<double> column(std::size_t j) const;
    DiscountedStatistic stat(std::size_t j, double truncation_bound = 0.0) const;
    // Statistic of constant + sum_j coeffs[j] * column j, per path.
    DiscountedStatistic linear_stat(std::span<const double> coeffs, double constant = 0.0,
                                    double truncation_bound = 0.0) const;

private:
    std::size_t n_ = 0, k_ = 0;
    std::vector<double> data_;
};

}  // namespace levydiv
