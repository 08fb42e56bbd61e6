#include "levydiv/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "levydiv/barrier_search.hpp"
#include "levydiv/errors.hpp"
#include "levydiv/path_engine.hpp"
#include "levydiv/reflection.hpp"
#include "levydiv/valuation.hpp"
#include "levydiv/verification.hpp"

namespace levydiv {

namespace fs = std::filesystem;

namespace {

// Stream tags per command keep estimators independent of each other.
enum : std::uint64_t { kTagValue = 1, kTagDeriv = 2, kTagBarrier = 3, kTagVerify = 4, kTagCouple = 5,
                       kTagSim = 6 };

std::string g17(double v) { return fmt::format("{:.17g}", v); }

class Output {
public:
    Output(fs::path dir, std::string command, const RunConfig& cfg, std::uint64_t seed)
        : dir_(std::move(dir)),
          meta_(fmt::format("# levydiv {} config_hash={:016x} master_seed={}\n", command, cfg.hash, seed)) {
        fs::create_directories(dir_);
    }

    std::ofstream open(const std::string& name, const std::string& header) {
        std::ofstream os(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot write " + (dir_ / name).string());
        os << meta_;
        if (!header.empty()) os << header << '\n';
        return os;
    }
    fs::path path(const std::string& name) const { return dir_ / name; }

private:
    fs::path dir_;
    std::string meta_;
};


void write_stat(std::ostream& os, const DiscountedStatistic& s) {
    os << g17(s.mean) << ',' << g17(s.std_error) << ',' << s.n << ',' << g17(s.truncation_bound);
}

std::vector<double> x_grid_or(const RunConfig& cfg) {
    return cfg.task.x_grid.empty() ? std::vector<double>{cfg.task.x} : cfg.task.x_grid;
}

void cmd_simulate(const McContext& ctx, const RunConfig& cfg, Output& out) {
    const McContext c = ctx.with_family(kTagSim);
    const std::uint64_t i = cfg.task.path_index;
    RngStream cs = c.streams.substream(i, StreamPurpose::clock);
    const ObservationClock clk = sample_clock(c.params.r, c.horizon(), cs);
    const RawPath path = simulate_path(c.model, cfg.task.x, c.horizon(), clk, c.path_settings(),
                                       c.streams.substream(i, StreamPurpose::path));
    {
        auto os = out.open("path.csv", "");
        write_path_csv(os, path);
    }
    const ControlledTrajectory traj = apply_periodic_classical(path, clk, cfg.task.a);
    {
        auto os = out.open("trajectory.csv", "");
        write_trajectory_csv(os, traj);
    }
    const ExitReport ex = exit_times(path, clk, cfg.task.a);
    auto os = out.open("exits.csv", "tau0,Ta_plus,kappa,npv");
    auto t = [](double v) { return v == kNever ? std::string("inf") : g17(v); };
    os << t(ex.tau0) << ',' << t(ex.Ta_plus) << ',' << t(ex.kappa) << ','
       << g17(npv(traj, c.params.q, c.params.beta)) << '\n';
}

void cmd_value(const McContext& ctx, const RunConfig& cfg, Output& out) {
    const auto xs = x_grid_or(cfg);
    const double a = cfg.task.a;
    const ValueGrid vg = value_grid(ctx.with_family(kTagValue), a, xs, cfg.n_paths);
    {
        auto os = out.open("value.csv", "x,a,mean,stderr,n,truncation_bound");
        for (std::size_t j = 0; j < vg.xs.size(); ++j) {
            os << g17(vg.xs[j]) << ',' << g17(a) << ',';
            write_stat(os, vg.v(j));
            os << '\n';
        }
    }
    std::vector<double> pos;
    for (double x : vg.xs)
        if (x > 0.0) pos.push_back(x);
    auto os = out.open("derivatives.csv", "x,a,quantity,mean,stderr,n,truncation_bound");
    if (pos.empty()) return;
    const ExitRaceProfile er = exit_race_profile(ctx.with_family(kTagDeriv), a, pos, cfg.n_paths);
    for (std::size_t k = 0; k < er.xs.size(); ++k) {
        const std::pair<const char*, DiscountedStatistic> rows[] = {
            {"vL_prime", er.vL_prime(k)}, {"vR_prime", er.vR_prime(k)}, {"v_prime", er.v_prime(k)}};
        for (const auto& [name, s] : rows) {
            os << g17(er.xs[k]) << ',' << g17(a) << ',' << name << ',';
            write_stat(os, s);
            os << '\n';
        }
    }
}

BarrierSearchOptions barrier_options(const RunConfig& cfg) {
    BarrierSearchOptions o;
    o.tol_a = cfg.task.tol_a;
    o.z = cfg.task.z;
    o.n_initial = cfg.n_paths;
    o.n_max = std::max<std::size_t>(cfg.n_paths, 16 * cfg.n_paths);
    return o;
}

BarrierResult write_barrier(const McContext& ctx, const RunConfig& cfg, Output& out) {
    const BarrierResult br = find_barrier(ctx.with_family(kTagBarrier), barrier_options(cfg));
    {
        auto os = out.open("barrier.csv", "a_star,lo,hi,g0_mean,g0_stderr,g0_n,regularity");
        os << g17(br.a_star) << ',' << g17(br.lo) << ',' << g17(br.hi) << ',' << g17(br.g_at_zero.mean) << ','
           << g17(br.g_at_zero.std_error) << ',' << br.g_at_zero.n << ',' << to_string(br.regularity) << '\n';
    }
    auto os = out.open("gprofile.csv", "a,mean,stderr,n,truncation_bound");
    for (std::size_t k = 0; k < br.profile.grid.size(); ++k) {
        os << g17(br.profile.grid[k]) << ',';
        write_stat(os, br.profile.gvals[k]);
        os << '\n';
    }
    return br;
}

void write_coupling(const CouplingReport& rep, Output& out, const std::string& stem) {
    {
        auto os = out.open(stem + ".csv", "pair,time,property,magnitude");
        for (const auto& v : rep.violations)
            os << v.pair << ',' << g17(v.time) << ',' << to_string(v.property) << ',' << g17(v.magnitude) << '\n';
    }
    auto os = out.open(stem + "_summary.csv",
                       "n_pairs,tolerance,violation_count,max_violation,tau_class,T_class,"
                       "max_terminal_error_tau,max_terminal_error_T");
    os << rep.n_pairs << ',' << g17(rep.tolerance) << ',' << rep.violation_count << ','
       << g17(rep.max_violation) << ',' << rep.tau_class << ',' << rep.T_class << ','
       << g17(rep.max_terminal_error_tau) << ',' << g17(rep.max_terminal_error_T) << '\n';
}

void cmd_couple(const McContext& ctx, const RunConfig& cfg, Output& out) {
    const CouplingOptions co{cfg.task.coupling_tol, 1000};
    const McContext c = ctx.with_family(kTagCouple);
    write_coupling(coupling_check(c, cfg.task.a, cfg.task.x, cfg.task.eps, cfg.task.n_pairs, co), out, "coupling");
    write_coupling(event_identity_check(c, cfg.task.a, cfg.task.x, cfg.task.eps, cfg.task.n_pairs, co), out,
                   "event_identity");
}

int cmd_verify(const McContext& ctx, const RunConfig& cfg, Output& out, std::ostream& log) {
    const auto& t = cfg.task;
    double a_star;
    if (t.a_star) {
        a_star = *t.a_star;
    } else {
        log << "locating a* ...\n";
        a_star = write_barrier(ctx, cfg, out).a_star;
    }
    std::vector<std::string> lines;
    bool all_ok = true;
    auto verdict = [&](bool ok, const std::string& what) {
        lines.push_back(fmt::format("{} {}", ok ? "PASS" : "FAIL", what));
        all_ok = all_ok && ok;
    };

    if (a_star > 0.0) {
        const double lo = t.hjb_lo.value_or(0.2 * a_star);
        const double hi = t.hjb_hi.value_or(1.6 * a_star);
        const std::size_t m = t.hjb_points;
        std::vector<double> xs;
        for (std::size_t k = 0; k < m; ++k)
            xs.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(m - 1));
        const double h = t.h.value_or(2.0 * (hi - lo) / static_cast<double>(m - 1));
        const ValueGrid vg = value_grid(ctx.with_family(kTagVerify), a_star, hjb_levels(xs, h, a_star), cfg.n_paths);
        const HjbReport rep = hjb_residual(ctx.with_family(kTagVerify + 100), a_star, vg, h, xs,
                                           HjbOptions{t.z, t.n_vprime});
        auto os = out.open("hjb.csv",
                           "x,v,v_stderr,maxterm,residual_eq,residual_eq_stderr,residual_eq_2h,budget,eq_ok,"
                           "vprime,vprime_stderr,residual_slope");
        for (const auto& p : rep.points)
            os << g17(p.x) << ',' << g17(p.v.mean) << ',' << g17(p.v.std_error) << ',' << g17(p.maxterm) << ','
               << g17(p.residual_eq.mean) << ',' << g17(p.residual_eq.std_error) << ','
               << g17(p.residual_eq_2h.mean) << ',' << g17(p.budget) << ',' << (p.eq_ok ? 1 : 0) << ','
               << g17(p.vprime.mean) << ',' << g17(p.vprime.std_error) << ',' << g17(p.residual_slope.mean)
               << '\n';
        verdict(rep.eq_ok, fmt::format("hjb-equality: |residual| within budget at {} points (a* = {:.6g}, h = {:.4g})",
                                       rep.points.size(), a_star, h));
        verdict(rep.slope_ok, fmt::format("slope-bound: 0 <= v' <= beta within {} SE", t.z));
        verdict(rep.concavity_ok, "concavity: v' non-increasing within CI overlap");
        verdict(rep.lower_bound_ok, fmt::format("lower-bound: min v = {:.6g} > {:.6g}", rep.min_v, rep.lower_bound));
        verdict(rep.smooth_fit_gap <= t.tol_a,
                fmt::format("smooth-fit: |v'(a*) - 1| = {:.3g} (SE {:.2g}) <= {}", rep.smooth_fit_gap,
                            rep.smooth_fit_se, t.tol_a));
    } else {
        lines.push_back("SKIP hjb-equality, smooth-fit: a* = 0");
    }

    if (t.eps > 0.0) {
        const CouplingOptions co{t.coupling_tol, 1000};
        const McContext c = ctx.with_family(kTagCouple);
        const auto cr = coupling_check(c, a_star, t.x, t.eps, t.n_pairs, co);
        write_coupling(cr, out, "coupling");
        verdict(cr.violation_count == 0, fmt::format("coupling: {} violations over {} pairs (max excess {:.3g})",
                                                     cr.violation_count, cr.n_pairs, cr.max_violation));
    }
    auto os = out.open("summary.txt", "");
    for (const auto& l : lines) os << l << '\n';
    for (const auto& l : lines) log << l << '\n';
    return all_ok ? kOk : kNumericalFailure;
}

}  // namespace

McContext make_context(const RunConfig& cfg, std::uint64_t seed, unsigned threads) {
    McContext ctx{validate_model(simulated_triple(cfg)), cfg.params, cfg.sim, StreamFamily{seed, 0}};
    ctx.sim.threads = threads;
    return ctx;
}

int run(const std::string& command, const RunConfig& cfg, const RunOptions& opt, std::ostream& log,
        std::ostream& err) {
    try {
        const std::uint64_t seed = opt.seed.value_or(cfg.master_seed);
        std::string dir = opt.out_dir;
        if (dir.empty()) {
            const char* env = std::getenv("LEVYDIV_OUT_DIR");
            dir = env && *env ? env : ".";
        }
        const McContext ctx = make_context(cfg, seed, opt.threads.value_or(cfg.sim.threads));
        Output out(dir, command, cfg, seed);
        if (command == "simulate") {
            cmd_simulate(ctx, cfg, out);
        } else if (command == "value") {
            cmd_value(ctx, cfg, out);
        } else if (command == "find-barrier") {
            write_barrier(ctx, cfg, out);
        } else if (command == "couple") {
            cmd_couple(ctx, cfg, out);
        } else if (command == "verify") {
            return cmd_verify(ctx, cfg, out, log);
        } else {
            err << "unknown command: " << command << '\n';
            return kFailure;
        }
        return kOk;
    } catch (const ConfigError& e) {
        err << e.what() << '\n';
        return kConfigError;
    } catch (const NumericalFailure& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

int run_file(const std::string& command, const std::string& config_path, const RunOptions& opt,
             std::ostream& log, std::ostream& err) {
    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const ConfigError& e) {
        err << e.what() << '\n';
        return kConfigError;
    }
    return run(command, cfg, opt, log, err);
}

}  // namespace levydiv
