#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "levydiv/config.hpp"

namespace levydiv {

struct RunOptions {
    std::optional<std::uint64_t> seed;   // overrides sim.master_seed
    std::string out_dir;                 // empty: $LEVYDIV_OUT_DIR, else "."
    std::optional<unsigned> threads;     // overrides sim.threads
};

enum ExitStatus : int { kOk = 0, kFailure = 1, kConfigError = 2, kNumericalFailure = 3 };

// Context of a run: simulated model, parameters and stream family for the seed.
McContext make_context(const RunConfig& cfg, std::uint64_t seed, unsigned threads);

// Executes one command and writes its CSV files. Errors are reported on `err`
// and mapped to the exit status.
int run(const std::string& command, const RunConfig& cfg, const RunOptions& opt, std::ostream& log,
        std::ostream& err);

// Loads the config file and runs; config errors give kConfigError.
int run_file(const std::string& command, const std::string& config_path, const RunOptions& opt,
             std::ostream& log, std::ostream& err);

}  // namespace levydiv
