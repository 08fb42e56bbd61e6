#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "levydiv/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Periodic-classical dividend barrier toolkit"};
    app.require_subcommand(1);
    std::string config;
    long long seed = -1;
    std::string out_dir;
    unsigned threads = 0;

    for (const char* name : {"simulate", "value", "find-barrier", "verify", "couple"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("config", config, "INI configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override sim.master_seed")->check(CLI::NonNegativeNumber);
        sub->add_option("--out-dir", out_dir, "output directory (default $LEVYDIV_OUT_DIR or .)");
        sub->add_option("--threads", threads, "worker threads; results do not depend on it");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Usage errors count as configuration errors; --help succeeds.
        const int rc = app.exit(e);
        return rc == 0 ? levydiv::kOk : levydiv::kConfigError;
    }

    levydiv::RunOptions opt;
    if (seed >= 0) opt.seed = static_cast<std::uint64_t>(seed);
    opt.out_dir = out_dir;
    if (threads > 0) opt.threads = threads;
    const std::string command = app.get_subcommands().front()->get_name();
    return levydiv::run_file(command, config, opt, std::cout, std::cerr);
}
