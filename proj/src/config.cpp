#include "levydiv/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "levydiv/errors.hpp"

namespace levydiv {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Locates "key" inside "[section]" for error messages.
class LineIndex {
public:
    explicit LineIndex(const std::string& text) {
        std::istringstream is(text);
        std::string line, section;
        long n = 0;
        while (std::getline(is, line)) {
            ++n;
            const std::string t = trim(line);
            if (t.empty() || t[0] == ';' || t[0] == '#') continue;
            if (t.front() == '[' && t.back() == ']') {
                section = trim(t.substr(1, t.size() - 2));
                lines_[section] = n;
                continue;
            }
            const auto eq = t.find('=');
            if (eq != std::string::npos) lines_[section + "." + trim(t.substr(0, eq))] = n;
        }
    }
    long find(const std::string& field) const {
        auto it = lines_.find(field);
        return it == lines_.end() ? -1 : it->second;
    }

private:
    std::map<std::string, long> lines_;
};

class Reader {
public:
    Reader(const pt::ptree& tree, const LineIndex& lines) : tree_(tree), lines_(lines) {}

    const pt::ptree* section(const std::string& name) const {
        for (const auto& [k, v] : tree_)
            if (k == name) return &v;
        return nullptr;
    }

    std::optional<std::string> raw(const std::string& sec, const std::string& key) const {
        used_.insert(sec + "." + key);
        const pt::ptree* s = section(sec);
        if (!s) return std::nullopt;
        for (const auto& [k, v] : *s)
            if (k == key) return trim(v.data());
        return std::nullopt;
    }

    [[noreturn]] void fail(const std::string& sec, const std::string& key, const std::string& msg) const {
        const std::string field = key.empty() ? sec : sec + "." + key;
        throw ConfigError(field, msg, lines_.find(field));
    }

    double parse_number(const std::string& sec, const std::string& key, const std::string& s) const {
        double v = 0.0;
        const char* b = s.data();
        const char* e = s.data() + s.size();
        auto [p, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || p != e) fail(sec, key, "expected a number, got '" + s + "'");
        return v;
    }

    std::optional<double> num(const std::string& sec, const std::string& key) const {
        auto r = raw(sec, key);
        if (!r) return std::nullopt;
        return parse_number(sec, key, *r);
    }
    double num(const std::string& sec, const std::string& key, double dflt) const {
        return num(sec, key).value_or(dflt);
    }
    double required(const std::string& sec, const std::string& key) const {
        auto v = num(sec, key);
        if (!v) fail(sec, key, "missing required value");
        return *v;
    }

    std::optional<std::uint64_t> count(const std::string& sec, const std::string& key) const {
        auto r = raw(sec, key);
        if (!r) return std::nullopt;
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(r->data(), r->data() + r->size(), v);
        if (ec != std::errc() || p != r->data() + r->size())
            fail(sec, key, "expected a nonnegative integer, got '" + *r + "'");
        return v;
    }

    std::vector<double> list(const std::string& sec, const std::string& key) const {
        std::vector<double> out;
        auto r = raw(sec, key);
        if (!r) return out;
        std::stringstream ss(*r);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse_number(sec, key, trim(item)));
        return out;
    }

    bool flag(const std::string& sec, const std::string& key, bool dflt) const {
        auto r = raw(sec, key);
        if (!r) return dflt;
        std::string s = *r;
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (s == "true" || s == "on" || s == "yes" || s == "1") return true;
        if (s == "false" || s == "off" || s == "no" || s == "0") return false;
        fail(sec, key, "expected on/off, got '" + *r + "'");
    }

    const pt::ptree& tree() const { return tree_; }

    // Keys present in the file that no reader asked for.
    void reject_unused() const {
        for (const auto& [sec, body] : tree_)
            for (const auto& [k, v] : body)
                if (!used_.count(sec + "." + k)) fail(sec, k, "unknown key, or not used with these settings");
    }

private:
    const pt::ptree& tree_;
    const LineIndex& lines_;
    mutable std::set<std::string> used_;
};

std::string canonical(const pt::ptree& tree) {
    std::map<std::string, std::string> kv;
    for (const auto& [sec, body] : tree)
        for (const auto& [k, v] : body) {
            if (sec == "sim" && k == "threads") continue;  // parallelism never changes results
            kv[sec + "." + k] = trim(v.data());
        }
    std::string s;
    for (const auto& [k, v] : kv) s += k + "=" + v + "\n";
    return s;
}

JumpComponent read_component(const Reader& rd, const std::string& sec) {
    JumpComponent c;
    c.rate = rd.required(sec, "rate");
    if (!(c.rate > 0.0)) rd.fail(sec, "rate", "must be positive");
    const std::string sign = rd.raw(sec, "sign").value_or("");
    if (sign == "up")
        c.direction = JumpDirection::up;
    else if (sign == "down")
        c.direction = JumpDirection::down;
    else
        rd.fail(sec, "sign", "expected up or down");
    const std::string dist = rd.raw(sec, "dist").value_or("exponential");
    if (dist == "exponential") {
        c.magnitude = ExponentialMagnitude{rd.required(sec, "mean")};
    } else if (dist == "deterministic") {
        c.magnitude = DeterministicMagnitude{rd.required(sec, "size")};
    } else if (dist == "empirical") {
        EmpiricalMagnitude e{rd.list(sec, "sizes"), rd.list(sec, "weights")};
        if (e.weights.empty()) e.weights.assign(e.sizes.size(), 1.0);
        if (e.sizes.empty() || e.sizes.size() != e.weights.size())
            rd.fail(sec, "weights", "sizes and weights must be non-empty and of equal length");
        c.magnitude = std::move(e);
    } else {
        rd.fail(sec, "dist", "expected exponential, deterministic or empirical");
    }
    return c;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
    pt::ptree tree;
    try {
        std::istringstream is(text);
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("", origin + ": " + e.message(), static_cast<long>(e.line()));
    }
    const LineIndex lines(text);
    const Reader rd(tree, lines);
    RunConfig cfg;
    cfg.hash = fnv1a64(canonical(tree));

    for (const auto& [sec, body] : tree) {
        static const char* known[] = {"model", "small_jump", "params", "sim", "task"};
        const bool ok = std::find(std::begin(known), std::end(known), sec) != std::end(known) ||
                        sec.rfind("jump.", 0) == 0;
        if (!ok) rd.fail(sec, "", "unknown section");
    }

    if (!rd.section("model")) rd.fail("model", "", "missing section");
    const double sigma = rd.num("model", "sigma", 0.0);
    if (!(sigma >= 0.0)) rd.fail("model", "sigma", "must be nonnegative");
    JumpSpec jumps;
    for (const auto& [sec, body] : tree)
        if (sec.rfind("jump.", 0) == 0) jumps.components.push_back(read_component(rd, sec));
    if (rd.section("small_jump")) {
        SmallJumpDensity d;
        d.c_up = rd.num("small_jump", "c_up", 0.0);
        d.c_down = rd.num("small_jump", "c_down", 0.0);
        d.alpha = rd.required("small_jump", "alpha");
        d.cutoff = rd.num("small_jump", "cutoff", 0.0);
        jumps.small_jump = d;
        cfg.truncation = rd.num("small_jump", "truncation");
        if (cfg.truncation && !(*cfg.truncation > 0.0)) rd.fail("small_jump", "truncation", "must be positive");
    }
    const auto gamma = rd.num("model", "gamma");
    const auto delta = rd.num("model", "delta");
    if (gamma && delta) rd.fail("model", "delta", "give either gamma or delta, not both");
    try {
        if (delta)
            cfg.triple = LevyTriple::from_effective_drift(*delta, sigma, jumps);
        else
            cfg.triple = LevyTriple{gamma.value_or(0.0), sigma, jumps};
        (void)validate_model(simulated_triple(cfg));
    } catch (const InvalidModel& e) {
        rd.fail("model", "", e.what());
    }

    cfg.params.q = rd.required("params", "q");
    cfg.params.r = rd.required("params", "r");
    cfg.params.beta = rd.required("params", "beta");
    if (!(cfg.params.q > 0.0)) rd.fail("params", "q", "must be positive");
    if (!(cfg.params.r > 0.0)) rd.fail("params", "r", "must be positive");
    if (!(cfg.params.beta > 1.0)) rd.fail("params", "beta", "must exceed 1");

    cfg.sim.horizon = rd.num("sim", "horizon", 0.0);
    cfg.sim.tail_tol = rd.num("sim", "tail_tol", 1e-4);
    cfg.sim.gridstep = rd.num("sim", "gridstep", 1e-3);
    cfg.sim.bridge = rd.flag("sim", "bridge", true);
    cfg.sim.threads = static_cast<unsigned>(rd.count("sim", "threads").value_or(1));
    if (!(cfg.sim.horizon >= 0.0)) rd.fail("sim", "horizon", "must be nonnegative (0 selects the default)");
    if (!(cfg.sim.tail_tol > 0.0 && cfg.sim.tail_tol < 1.0)) rd.fail("sim", "tail_tol", "must lie in (0, 1)");
    if (!(cfg.sim.gridstep > 0.0)) rd.fail("sim", "gridstep", "must be positive");
    const auto n = rd.count("sim", "n_paths");
    if (!n) rd.fail("sim", "n_paths", "missing required value");
    if (*n == 0) rd.fail("sim", "n_paths", "must be at least 1");
    cfg.n_paths = *n;
    const auto seed = rd.count("sim", "master_seed");
    if (!seed) rd.fail("sim", "master_seed", "missing required value (no clock seeding)");
    cfg.master_seed = *seed;

    auto& t = cfg.task;
    t.a = rd.num("task", "a", t.a);
    if (!(t.a >= 0.0)) rd.fail("task", "a", "must be nonnegative");
    t.x = rd.num("task", "x", t.x);
    t.x_grid = rd.list("task", "x_grid");
    for (double x : t.x_grid)
        if (!(x >= 0.0)) rd.fail("task", "x_grid", "entries must be nonnegative");
    t.eps = rd.num("task", "eps", t.eps);
    if (!(t.eps >= 0.0)) rd.fail("task", "eps", "must be nonnegative");
    t.tol_a = rd.num("task", "tol_a", t.tol_a);
    if (!(t.tol_a > 0.0)) rd.fail("task", "tol_a", "must be positive");
    t.n_pairs = rd.count("task", "n_pairs").value_or(t.n_pairs);
    t.coupling_tol = rd.num("task", "coupling_tol", t.coupling_tol);
    t.a_star = rd.num("task", "a_star");
    t.hjb_points = rd.count("task", "hjb_points").value_or(t.hjb_points);
    if (t.hjb_points < 2) rd.fail("task", "hjb_points", "need at least 2 points");
    t.hjb_lo = rd.num("task", "hjb_lo");
    t.hjb_hi = rd.num("task", "hjb_hi");
    t.h = rd.num("task", "h");
    if (t.h && !(*t.h > 0.0)) rd.fail("task", "h", "must be positive");
    t.path_index = rd.count("task", "path_index").value_or(0);
    t.z = rd.num("task", "z", t.z);
    t.n_vprime = rd.count("task", "n_vprime").value_or(cfg.n_paths);
    if (t.n_vprime == 0) rd.fail("task", "n_vprime", "must be at least 1");
    rd.reject_unused();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

LevyTriple simulated_triple(const RunConfig& cfg) {
    const auto& sj = cfg.triple.jumps.small_jump;
    if (sj && sj->cutoff == 0.0 && (sj->c_up > 0.0 || sj->c_down > 0.0)) {
        if (!cfg.truncation)
            throw InvalidModel("infinite-activity small jumps need small_jump.truncation");
        return asmussen_truncate(cfg.triple, *cfg.truncation);
    }
    return cfg.triple;
}

}  // namespace levydiv
