// Acceptance checks. Usage: acceptance <k> [<k> ...] | all
// Prints one PASS/FAIL line per criterion; exit status 0 iff all selected pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "levydiv/analytic_oracle.hpp"
#include "levydiv/barrier_search.hpp"
#include "levydiv/cli.hpp"
#include "levydiv/config.hpp"
#include "levydiv/parallel.hpp"
#include "levydiv/reflection.hpp"
#include "levydiv/verification.hpp"
#include "oracles.hpp"

using namespace levydiv;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

const fs::path kConfigDir = LEVYDIV_ACCEPTANCE_CONFIGS;

RunConfig config(const std::string& name) { return load_config((kConfigDir / name).string()); }

McContext context(const RunConfig& cfg, std::uint64_t family = 0) {
    return make_context(cfg, cfg.master_seed, cfg.sim.threads).with_family(family);
}

bool within3(double diff, double se) { return std::abs(diff) <= 3.0 * se; }

// 1. U = X - L + R at every event, with L and R rebuilt segment by segment
// between observations straight from the raw path.
Verdict decomposition() {
    const RunConfig cfg = config("jump_diffusion.ini");
    const McContext ctx = context(cfg);
    const double a = cfg.task.a, x0 = cfg.task.x, H = ctx.horizon();
    const std::size_t n = cfg.n_paths;
    std::vector<double> worst_id(n, 0.0), worst_ref(n, 0.0);
    std::vector<std::size_t> events(n, 0);
    parallel_for(n, ctx.sim.threads, [&](std::size_t i) {
        RngStream cs = ctx.streams.substream(i, StreamPurpose::clock);
        const ObservationClock clk = sample_clock(ctx.params.r, H, cs);
        const RawPath p = simulate_path(ctx.model, x0, H, clk, ctx.path_settings(),
                                        ctx.streams.substream(i, StreamPurpose::path));
        const ControlledTrajectory tr = apply_periodic_classical(p, clk, a);
        // Reference: on each segment between observations L is frozen and R is the
        // running maximum of L - inf X; at an observation the excess over a is paid.
        double L = 0.0, R = 0.0;
        std::size_t next_obs = 0;
        double wi = 0.0, wr = 0.0;
        for (std::size_t k = 0; k < p.events.size(); ++k) {
            const PathEvent& e = p.events[k];
            double lo = std::min(e.x_prev, e.xc);
            if (e.bvar > 0.0) {
                const double d = e.xc - e.x_prev;
                lo = std::min(lo, 0.5 * (e.x_prev + e.xc - std::sqrt(d * d - 2.0 * e.bvar * std::log(e.u))));
            }
            lo = std::min(lo, e.x);
            R = std::max(R, L - lo);
            const bool obs = next_obs < clk.arrivals.size() && std::abs(clk.arrivals[next_obs] - e.time) <= 1e-9;
            if (obs) {
                ++next_obs;
                const double u = e.x - L + R;
                if (u > a) L += u - a;
            }
            const TrajectoryPoint& t = tr.events[k];
            wi = std::max(wi, std::abs(t.U - (t.x - t.L + t.R)));
            wr = std::max({wr, std::abs(t.L - L), std::abs(t.R - R), std::abs(t.U - (e.x - L + R))});
        }
        worst_id[i] = wi;
        worst_ref[i] = wr;
        events[i] = p.events.size();
    });
    const double mi = *std::max_element(worst_id.begin(), worst_id.end());
    const double mr = *std::max_element(worst_ref.begin(), worst_ref.end());
    std::size_t total = 0;
    for (auto c : events) total += c;
    return {mi <= 1e-12 && mr <= 1e-12,
            fmt::format("{} paths, {} events: max |U - (X - L + R)| = {:.3g}, max deviation from segment-wise "
                        "reference = {:.3g}, tolerance 1e-12",
                        n, total, mi, mr)};
}

// 2a. Coupling on the compound Poisson model.
Verdict coupling_cp() {
    const RunConfig cfg = config("compound_poisson.ini");
    const auto& t = cfg.task;
    const auto rep = coupling_check(context(cfg, 1), t.a, t.x, t.eps, t.n_pairs, {t.coupling_tol, 100});
    return {rep.violation_count == 0 && rep.n_pairs == t.n_pairs,
            fmt::format("{} pairs, eps = {}, a = {}, x = {}: {} violations at {:g}, max excess {:.3g}", rep.n_pairs,
                        t.eps, t.a, t.x, rep.violation_count, t.coupling_tol, rep.max_violation)};
}

// 2b. Coupling on the Brownian variant at two grid steps.
Verdict coupling_bm() {
    const RunConfig cfg = config("brownian_coupling.ini");
    const auto& t = cfg.task;
    const auto coarse = coupling_check(context(cfg, 2), t.a, t.x, t.eps, t.n_pairs, {t.coupling_tol, 100});
    RunConfig fine_cfg = cfg;
    fine_cfg.sim.gridstep = 1e-4;
    const auto fine = coupling_check(context(fine_cfg, 2), t.a, t.x, t.eps, t.n_pairs, {t.coupling_tol, 100});
    // Excesses at rounding level carry no grid dependence.
    const double floor = 1e-12;
    const bool shrinks = fine.max_violation <= std::max(coarse.max_violation, floor);
    return {coarse.violation_count == 0 && fine.violation_count == 0 && shrinks,
            fmt::format("{} pairs: gridstep 1e-3 {} violations (max excess {:.3g}), gridstep 1e-4 {} violations "
                        "(max excess {:.3g}), tolerance {:g}",
                        t.n_pairs, coarse.violation_count, coarse.max_violation, fine.violation_count,
                        fine.max_violation, t.coupling_tol)};
}

// 3. Event identities on the compound Poisson model.
Verdict event_identities() {
    const RunConfig cfg = config("compound_poisson.ini");
    const auto& t = cfg.task;
    const auto rep = event_identity_check(context(cfg, 3), t.a, t.x, t.eps, t.n_pairs, {t.coupling_tol, 100});
    const bool ok = rep.violation_count == 0 && rep.tau_class > 0 && rep.T_class > 0 &&
                    rep.max_terminal_error_tau <= 1e-12 && rep.max_terminal_error_T <= 1e-12;
    return {ok, fmt::format("{} pairs: tau class {} (max |dR + eps| = {:.3g}), T class {} (max |dL - eps| = {:.3g}), "
                            "{} violations",
                            rep.n_pairs, rep.tau_class, rep.max_terminal_error_tau, rep.T_class,
                            rep.max_terminal_error_T, rep.violation_count)};
}

// 4. CRN central differences against the exit-race representation.
Verdict derivative_representation() {
    const RunConfig cfg = config("brownian.ini");
    const McContext ctx = context(cfg);
    const auto& xs = cfg.task.x_grid;
    const double a = cfg.task.a, h = *cfg.task.h;
    const auto fd = value_difference_profile(ctx.with_family(41), a, xs, h, cfg.n_paths);
    const auto er = exit_race_profile(ctx.with_family(42), a, xs, cfg.n_paths);
    bool ok = true;
    double worst = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const std::pair<DiscountedStatistic, DiscountedStatistic> pairs[] = {
            {fd.dL[k], er.vL_prime(k)}, {fd.dR[k], er.vR_prime(k)}, {fd.dv[k], er.v_prime(k)}};
        for (const auto& [d, e] : pairs) {
            const double z = std::abs(d.mean - e.mean) / combined_se({d.std_error, e.std_error});
            worst = std::max(worst, z);
            ok = ok && z <= 3.0;
        }
    }
    return {ok, fmt::format("n = {}, x in {{0.4, 0.8, 1.2, 1.6}}, h = {}: largest |difference| = {:.2f} combined SE",
                            cfg.n_paths, h, worst)};
}

// 5. E_x[e^{-q kappa}] = A(x) + B(x) E_a[e^{-q kappa}].
Verdict markov_identity() {
    const RunConfig cfg = config("brownian.ini");
    const McContext ctx = context(cfg);
    const double a = cfg.task.a, x = cfg.task.x;
    const std::size_t n = cfg.n_paths;
    const std::vector<double> at_x{x}, at_a{a};
    const auto lhs = kappa_laplace(ctx.with_family(51), a, at_x, n)[0];
    const auto er = exit_race_profile(ctx.with_family(52), a, at_x, n);
    const auto ka = kappa_laplace(ctx.with_family(53), a, at_a, n)[0];
    const double rhs = er.A(0).mean + er.B(0).mean * ka.mean;
    const double se_rhs = std::sqrt(std::pow(er.A(0).std_error, 2) + std::pow(ka.mean * er.B(0).std_error, 2) +
                                    std::pow(er.B(0).mean * ka.std_error, 2));
    const double se = combined_se({lhs.std_error, se_rhs});
    return {within3(lhs.mean - rhs, se),
            fmt::format("x = {}, a = {}, n = {}: lhs {:.6f}, rhs {:.6f}, difference {:.2f} combined SE", x, a, n,
                        lhs.mean, rhs, std::abs(lhs.mean - rhs) / se)};
}

// First passage below 0 of the uncontrolled path from several shifts.
class FirstPassage {
public:
    FirstPassage(std::span<const double> shifts, double q) : s_(shifts.begin(), shifts.end()), out_(s_.size(), 0.0), q_(q) {}
    bool on_event(const PathEvent& e) {
        while (k_ < s_.size() && e.below(-s_[k_])) {
            out_[k_] = std::exp(-q_ * e.crossing_time(-s_[k_]));
            ++k_;
        }
        return k_ < s_.size();
    }
    double value(std::size_t k) const { return out_[k]; }

private:
    std::vector<double> s_, out_;
    double q_;
    std::size_t k_ = 0;
};

// 6. Monte Carlo first-passage transform against the closed form.
Verdict oracle_match() {
    std::string detail;
    bool ok = true;
    for (const char* name : {"oracle_mu0.ini", "oracle_mu02.ini"}) {
        const RunConfig cfg = config(name);
        const McContext ctx = context(cfg, 61);
        std::vector<double> xs = cfg.task.x_grid;
        std::sort(xs.begin(), xs.end());
        const std::size_t n = cfg.n_paths;
        SampleMatrix s(n, xs.size());
        parallel_for(n, ctx.sim.threads, [&](std::size_t i) {
            FirstPassage fp(xs, ctx.params.q);
            drive_path(ctx, i, 0.0, fp);
            for (std::size_t k = 0; k < xs.size(); ++k) s.at(i, k) = fp.value(k);
        });
        const BrownianSpec spec{cfg.triple.gamma, cfg.triple.sigma};
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const auto st = s.stat(k, exit_tail_bound(ctx));
            const double ref = bm_down_laplace(xs[k], spec, ctx.params.q);
            ok = ok && within3(st.mean - ref, st.std_error);
            detail += fmt::format("{}mu={} x={}: {:.2f} SE", detail.empty() ? "" : ", ", spec.mu, xs[k],
                                  std::abs(st.mean - ref) / st.std_error);
        }
    }
    return {ok, "n = 100000, q = 0.5: " + detail};
}

// 7. Barrier bracket, smooth fit, and a* = 0 for the irregular model.
Verdict barrier_and_smooth_fit() {
    const RunConfig cfg = config("barrier.ini");
    const McContext ctx = context(cfg);
    BarrierSearchOptions opt;
    opt.tol_a = cfg.task.tol_a;
    opt.n_initial = cfg.n_paths;
    const BarrierResult br = find_barrier(ctx.with_family(71), opt);
    const auto vp = estimate_vprime(ctx.with_family(72), br.a_star, br.a_star, cfg.task.n_vprime);
    const double ref = oracle::a_star({cfg.triple.gamma, cfg.triple.sigma}, cfg.params.q, cfg.params.r,
                                      cfg.params.beta);

    const RunConfig irr_cfg = config("irregular.ini");
    BarrierSearchOptions iopt;
    iopt.tol_a = irr_cfg.task.tol_a;
    iopt.n_initial = irr_cfg.n_paths;
    const BarrierResult irr = find_barrier(context(irr_cfg, 73), iopt);

    const double width = br.hi - br.lo;
    const bool ok = width <= 0.02 && std::abs(vp.mean - 1.0) <= 0.02 && irr.a_star == 0.0;
    return {ok, fmt::format("bracket [{:.5f}, {:.5f}] width {:.4f} (closed form a* = {:.5f}), v'(a*, a*) = {:.5f} +- "
                            "{:.1g} at n = {}; irregular model g(0) = {:.4f} +- {:.1g}, a* = {}",
                            br.lo, br.hi, width, ref, vp.mean, vp.std_error, vp.n, irr.g_at_zero.mean,
                            irr.g_at_zero.std_error, irr.a_star)};
}

// 8. Range, monotonicity, decay and the value at 0 of g.
Verdict g_properties() {
    const RunConfig cfg = config("gprofile.ini");
    const McContext ctx = context(cfg);
    const double beta = ctx.params.beta;
    const double probe = horizon_drawdown_quantile(ctx.with_family(81), 0.999, cfg.n_paths / 10);
    std::vector<double> grid = cfg.task.x_grid;
    grid.push_back(probe);
    const GProfile gp = g_profile(ctx.with_family(82), grid, cfg.n_paths);
    bool range = true, monotone = true;
    for (std::size_t k = 0; k < gp.grid.size(); ++k) {
        range = range && gp.gvals[k].mean >= 0.0 && gp.gvals[k].mean <= beta;
        if (k > 0) monotone = monotone && gp.gvals[k].lower(1.96) <= gp.gvals[k - 1].upper(1.96);
    }
    const auto& g0 = gp.gvals.front();
    const auto& gl = gp.gvals.back();
    const bool at0 = gp.grid.front() == 0.0 && std::abs(g0.mean - beta) <= 3.0 * g0.std_error;
    return {range && monotone && gl.mean < 0.05 && at0,
            fmt::format("{} grid points, n = {}: range {}, monotone {}, g({:.3f}) = {:.2g} at the 0.999 drawdown "
                        "quantile, g(0) = {:.10g} +- {:.2g} (beta = {})",
                        gp.grid.size(), cfg.n_paths, range ? "ok" : "violated", monotone ? "ok" : "violated",
                        gp.grid.back(), gl.mean, g0.mean, g0.std_error, beta)};
}

// 9. HJB residuals at the pinned a*.
Verdict hjb() {
    const RunConfig cfg = config("hjb.ini");
    const McContext ctx = context(cfg);
    const auto& t = cfg.task;
    const double a_star = *t.a_star;
    const double lo = t.hjb_lo.value_or(0.2 * a_star), hi = t.hjb_hi.value_or(1.6 * a_star);
    std::vector<double> xs;
    for (std::size_t k = 0; k < t.hjb_points; ++k)
        xs.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(t.hjb_points - 1));
    const double h = *t.h;
    const ValueGrid vg = value_grid(ctx.with_family(91), a_star, hjb_levels(xs, h, a_star), cfg.n_paths);
    const HjbReport rep = hjb_residual(ctx.with_family(92), a_star, vg, h, xs, HjbOptions{t.z, t.n_vprime});
    double worst = 0.0;
    for (const auto& p : rep.points) worst = std::max(worst, std::abs(p.residual_eq.mean) / p.budget);
    return {rep.eq_ok && rep.slope_ok && rep.concavity_ok,
            fmt::format("{} points on [{:.3f}, {:.3f}], a* = {}, h = {}: max |residual| / budget = {:.2f}, slope {}, "
                        "v' monotone {}",
                        rep.points.size(), lo, hi, a_star, h, worst, rep.slope_ok ? "ok" : "violated",
                        rep.concavity_ok ? "ok" : "violated")};
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        files[fs::relative(e.path(), dir).string()] = ss.str();
    }
    return files;
}

// 10. Byte-identical outputs for repeated runs at 1 and 8 threads.
Verdict determinism() {
    const RunConfig cfg = config("determinism.ini");
    const fs::path root = fs::temp_directory_path() / fmt::format("levydiv_acceptance_{}", cfg.hash);
    fs::remove_all(root);
    const char* commands[] = {"simulate", "value", "find-barrier", "couple", "verify"};
    std::vector<std::map<std::string, std::string>> trees;
    std::string failure;
    for (unsigned threads : {1u, 8u}) {
        for (int rep = 0; rep < 2; ++rep) {
            const fs::path dir = root / fmt::format("t{}_{}", threads, rep);
            for (const char* cmd : commands) {
                RunOptions opt;
                opt.out_dir = dir.string();
                opt.threads = threads;
                std::ostringstream log, err;
                const int rc = run(cmd, cfg, opt, log, err);
                if (rc != kOk && rc != kNumericalFailure) failure += fmt::format(" {} exited {}: {}", cmd, rc, err.str());
            }
            trees.push_back(read_tree(dir));
        }
    }
    fs::remove_all(root);
    bool same = failure.empty() && !trees.front().empty();
    for (const auto& t : trees) same = same && t == trees.front();
    std::size_t bytes = 0;
    for (const auto& [name, body] : trees.front()) bytes += body.size();
    return {same, fmt::format("{} commands, {} files ({} bytes) compared across 2 runs x {{1, 8}} threads{}",
                              std::size(commands), trees.front().size(), bytes, failure)};
}

struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Verdict()> fn;
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> all = {
        {1, "decomposition", 60, decomposition},
        {2, "coupling", 360,
         [] {
             const auto t0 = std::chrono::steady_clock::now();
             Verdict a = coupling_cp();
             const double ta = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
             Verdict b = coupling_bm();
             const double tb = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() - ta;
             const bool each = ta < 180.0 && tb < 180.0;
             return Verdict{a.pass && b.pass && each,
                            fmt::format("compound Poisson: {} [{:.1f} s]; Brownian: {} [{:.1f} s]; limit 180 s each",
                                        a.detail, ta, b.detail, tb)};
         }},
        {3, "event identities", 120, event_identities},
        {4, "derivative representation", 300, derivative_representation},
        {5, "Markov identity", 120, markov_identity},
        {6, "first-passage oracle", 120, oracle_match},
        {7, "barrier and smooth fit", 900, barrier_and_smooth_fit},
        {8, "g properties", 300, g_properties},
        {9, "HJB", 600, hjb},
        {10, "determinism", 60, determinism},
    };
    return all;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> ids;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "all") {
            for (const auto& c : criteria()) ids.push_back(c.id);
        } else {
            ids.push_back(std::atoi(a.c_str()));
        }
    }
    if (ids.empty()) {
        std::cerr << "usage: acceptance <criterion 1-10> ... | all\n";
        return 2;
    }
    bool all_pass = true;
    for (int id : ids) {
        const auto it = std::find_if(criteria().begin(), criteria().end(), [&](const Criterion& c) { return c.id == id; });
        if (it == criteria().end()) {
            std::cerr << "unknown criterion " << id << '\n';
            return 2;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = it->fn();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool pass = v.pass && secs < it->limit_s;
        all_pass = all_pass && pass;
        std::cout << fmt::format("criterion {} ({}): {} - {} [{:.1f} s, limit {:.0f} s]\n", it->id, it->name,
                                 pass ? "PASS" : "FAIL", v.detail, secs, it->limit_s)
                  << std::flush;
    }
    return all_pass ? 0 : 1;
}
