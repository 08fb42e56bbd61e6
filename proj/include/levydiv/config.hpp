#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "levydiv/levy_model.hpp"
#include "levydiv/valuation.hpp"

namespace levydiv {

struct TaskSection {
    double a = 1.0;
    double x = 0.0;
    std::vector<double> x_grid;
    double eps = 0.0;
    double tol_a = 0.02;
    std::size_t n_pairs = 2000;
    double coupling_tol = 1e-9;
    std::optional<double> a_star;
    std::size_t hjb_points = 20;
    std::optional<double> hjb_lo, hjb_hi;
    std::optional<double> h;
    std::uint64_t path_index = 0;
    double z = 3.0;
    std::size_t n_vprime = 100000;
};

struct RunConfig {
    LevyTriple triple;              // as configured, before truncation
    std::optional<double> truncation;
    ProblemParams params;
    SimSettings sim;
    std::size_t n_paths = 0;
    std::uint64_t master_seed = 0;
    TaskSection task;
    std::uint64_t hash = 0;         // FNV-1a of the canonical key listing
};

// Parses the INI text; `origin` names the source in error messages.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);

// Triple actually simulated: truncated when the small-jump part has infinite activity.
LevyTriple simulated_triple(const RunConfig& cfg);

std::uint64_t fnv1a64(const std::string& s) noexcept;

}  // namespace levydiv
