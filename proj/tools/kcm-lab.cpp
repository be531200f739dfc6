// kcm-lab: command-line front end for the kcm library.
//
// Every subcommand reads its parameters from an optional key=value config file
// (--config) overridden by flags, writes its payload atomically to --out and
// prints a one-line JSON summary on stdout.
// Exit codes: 0 ok, 1 runtime failure (or failed verification), 2 invalid input.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kcm/bootstrap.hpp"
#include "kcm/config.hpp"
#include "kcm/duality.hpp"
#include "kcm/parallel.hpp"
#include "kcm/rng.hpp"
#include "kcm/sim.hpp"
#include "kcm/spectral.hpp"
#include "kcm/stats.hpp"
#include "kcm/verify.hpp"

#ifndef KCM_VERSION
#define KCM_VERSION "0.0.0"
#endif

using nlohmann::json;
using kcm::config::Config;
using kcm::config::ConfigError;
namespace sp = kcm::spectral;

namespace {

struct KeyDef {
    std::string name;
    std::string def;
    std::string help;
    bool is_flag = false;
};

struct Payload {
    json summary = json::object();
    std::string text;  // file body without the metadata line
    bool csv = false;
    bool failed = false;  // verify: some criterion failed
};

struct Command {
    std::string name;
    std::string help;
    std::vector<KeyDef> keys;
    std::function<Payload(const Config&)> run;
};

// Keys that do not change results and stay out of the config hash.
const std::set<std::string> kUnhashed = {"out", "workers"};

std::vector<KeyDef> model_keys() {
    return {{"model", "fa1f", "fa1f | east | east-polluted | delta-west | babp | dfp"},
            {"q", "0.5", "equilibrium infected density"},
            {"lambda", "", "q/p for babp and dfp (overrides q when set)"},
            {"delta", "0.1", "west rate of delta-west"},
            {"types", "EF", "periodic E/F pattern of east-polluted"}};
}

std::vector<KeyDef> common_keys() {
    return {{"seed", "1", "master seed"},
            {"out", "", "output file (written atomically)"},
            {"workers", "0", "worker threads (0: KCM_WORKERS or hardware)"}};
}

std::vector<KeyDef> operator+(std::vector<KeyDef> a, const std::vector<KeyDef>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

kcm::ModelSpec build_model(const Config& c) {
    kcm::ModelKind kind;
    try {
        kind = kcm::parse_model(c.str("model"));
    } catch (const std::invalid_argument&) {
        c.fail("model", "unknown model");
    }
    const double q = c.real("q");
    const bool has_lambda = !c.str("lambda").empty();
    const double lambda = has_lambda ? c.real("lambda") : q / (1.0 - q);
    kcm::ModelSpec m;
    try {
        switch (kind) {
            case kcm::ModelKind::FA1f: m = kcm::ModelSpec::fa1f(q); break;
            case kcm::ModelKind::East: m = kcm::ModelSpec::east(q); break;
            case kcm::ModelKind::EastPolluted:
                m = kcm::ModelSpec::east_polluted(q, kcm::TypeMap::periodic(c.str("types")));
                break;
            case kcm::ModelKind::DeltaWest: m = kcm::ModelSpec::delta_west(q, c.real("delta")); break;
            case kcm::ModelKind::BABP: m = has_lambda ? kcm::ModelSpec::babp_lambda(lambda) : kcm::ModelSpec::babp(q); break;
            case kcm::ModelKind::DFP: m = kcm::ModelSpec::dfp(lambda); break;
        }
        m.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid model parameters: ") + e.what());
    }
    return m;
}

kcm::SiteState parse_state(const Config& c, const std::string& key, const std::string& s) {
    if (s == "healthy" || s == "1") return kcm::SiteState::healthy;
    if (s == "infected" || s == "0") return kcm::SiteState::infected;
    c.fail(key, "expected healthy or infected");
}

kcm::BoundaryCondition parse_bc(const Config& c) {
    const std::string& v = c.str("bc");
    const auto comma = v.find(',');
    if (comma == std::string::npos) {
        const auto s = parse_state(c, "bc", v);
        return {s, s};
    }
    return {parse_state(c, "bc", v.substr(0, comma)), parse_state(c, "bc", v.substr(comma + 1))};
}

int positive_int(const Config& c, const std::string& key, long long max = 1LL << 30) {
    const long long v = c.integer(key);
    if (v < 1 || v > max) c.fail(key, "must lie in [1, " + std::to_string(max) + "]");
    return static_cast<int>(v);
}

double positive_real(const Config& c, const std::string& key) {
    const double v = c.real(key);
    if (!(v > 0) || !std::isfinite(v)) c.fail(key, "must be positive");
    return v;
}

unsigned workers(const Config& c) {
    const long long w = c.integer("workers");
    if (w < 0) c.fail("workers", "must be non-negative");
    return static_cast<unsigned>(w);
}

std::uint64_t seed(const Config& c) {
    const long long s = c.integer("seed");
    if (s < 0) c.fail("seed", "must be non-negative");
    return static_cast<std::uint64_t>(s);
}

kcm::Window window_from(const Config& c) {
    const int n = positive_int(c, "n", 4096);
    const long long lo = c.integer("lo");
    return kcm::Window(static_cast<int>(lo), static_cast<int>(lo) + n - 1);
}

kcm::Configuration parse_bits(const Config& c, const std::string& key, int lo) {
    try {
        return kcm::Configuration::parse(c.str(key), lo);
    } catch (const std::invalid_argument&) {
        c.fail(key, "expected a string of 0/1 characters");
    }
}

// Initial configuration: explicit bits, "healthy", "infected" or "random" (product stationary law).
kcm::Configuration initial_state(const Config& c, const kcm::ModelSpec& m, const kcm::Window& w) {
    const std::string& v = c.str("init");
    if (v == "healthy") return kcm::Configuration::all_healthy(w);
    if (v == "infected") return kcm::Configuration::all_infected(w);
    if (v == "random" || v.empty()) {
        kcm::rng::Stream s(seed(c), 0x1217);
        kcm::Configuration eta(w);
        const double ph = kcm::equilibrium_healthy_density(m);
        for (int x = w.lo; x <= w.hi; ++x) eta.set(x, s.unit() < ph);
        return eta;
    }
    kcm::Configuration eta = parse_bits(c, "init", w.lo);
    if (eta.size() != w.size()) c.fail("init", "length differs from n = " + std::to_string(w.size()));
    return eta;
}

sp::Restriction parse_restriction(const Config& c) {
    const std::string& v = c.str("restriction");
    if (v == "none") return sp::Restriction::none();
    if (v == "at-least-one") return sp::Restriction::at_least_one_infection();
    if (v == "even" || v == "+") return sp::Restriction::parity_sector(kcm::Parity::even);
    if (v == "odd" || v == "-") return sp::Restriction::parity_sector(kcm::Parity::odd);
    if (v.rfind("blocks:", 0) == 0) {
        try {
            const int ell = std::stoi(v.substr(7));
            if (ell >= 1) return sp::Restriction::one_infection_per_block(ell);
        } catch (const std::exception&) {
        }
    }
    c.fail("restriction", "expected none, at-least-one, even, odd or blocks:<ell>");
}

struct Chain {
    sp::SpacePtr space;
    sp::Generator gen;
    sp::MeasureVector mu;
};

Chain build_chain(const Config& c) {
    const kcm::ModelSpec m = build_model(c);
    const kcm::Window w = window_from(c);
    if (w.size() > 24) c.fail("n", "exact analysis supports at most 24 sites");
    auto space = sp::build_state_space(m, w, parse_bc(c), parse_restriction(c));
    auto gen = sp::build_generator(space);
    auto mu = sp::reference_measure(space);
    return {space, std::move(gen), std::move(mu)};
}

std::string csv_num(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

template <class T>
std::string opt_num(const std::optional<T>& v) {
    return v ? std::to_string(*v) : std::string();
}

// ---- subcommands ----

Payload cmd_simulate(const Config& c) {
    const kcm::ModelSpec m = build_model(c);
    const kcm::Window w = window_from(c);
    const double T = positive_real(c, "T");
    const double dt = positive_real(c, "dt");
    const auto eta0 = initial_state(c, m, w);
    const auto tl = kcm::sim::build_timeline(m, w, T, seed(c));
    const auto tr = kcm::sim::evolve(m, eta0, parse_bc(c), tl, kcm::sim::RecordOptions::snapshots(dt));
    Payload p;
    p.csv = true;
    p.text = "t,infections,parity,config\n";
    for (const auto& [t, eta] : tr.snapshots)
        p.text += csv_num(t) + "," + std::to_string(kcm::count_infections(eta)) + "," +
                  kcm::parity_symbol(kcm::parity(eta)) + "," + eta.str() + "\n";
    p.summary = {{"initial", eta0.str()}, {"final", tr.final.str()},
                 {"final_infections", kcm::count_infections(tr.final)}, {"rings", tl.ring_count()},
                 {"snapshots", tr.snapshots.size()}};
    return p;
}

Payload cmd_front(const Config& c) {
    const kcm::ModelSpec m = build_model(c);
    const double T = positive_real(c, "T");
    const double dt = positive_real(c, "dt");
    const int runs = positive_int(c, "runs", 1000000);
    kcm::Configuration eta0 = c.str("init").empty() ? kcm::Configuration::all_infected(kcm::Window(0, 0))
                                                     : parse_bits(c, "init", static_cast<int>(c.integer("lo")));
    if (kcm::count_infections(eta0) == 0) c.fail("init", "needs at least one infection");
    kcm::sim::FrontOptions fo;
    fo.speed_bound = positive_real(c, "speed");
    std::vector<kcm::sim::FrontTrace> traces(static_cast<std::size_t>(runs));
    kcm::parallel_for(
        traces.size(),
        [&](std::size_t r) { traces[r] = kcm::sim::front_trace(m, eta0, T, dt, kcm::replica_seed(seed(c), r), fo); },
        workers(c));
    Payload p;
    p.csv = true;
    p.text = "run,t,x_minus,x_plus,y,d\n";
    std::vector<double> yt, dtv;
    std::size_t edge = 0, absorbed = 0;
    for (std::size_t r = 0; r < traces.size(); ++r) {
        for (const auto& s : traces[r].samples)
            p.text += std::to_string(r) + "," + csv_num(s.t) + "," + opt_num(s.f.x_minus) + "," + opt_num(s.f.x_plus) +
                      "," + opt_num(s.f.y) + "," + opt_num(s.f.d) + "\n";
        const auto& last = traces[r].samples.back().f;
        if (last.y) yt.push_back(*last.y / T);
        if (last.d) dtv.push_back(*last.d / T);
        edge += traces[r].edge_hit;
        absorbed += traces[r].absorbed;
    }
    p.summary = {{"runs", runs}, {"T", T}, {"edge_hits", edge}, {"absorbed", absorbed}};
    if (!yt.empty())
        p.summary["Y_over_T"] = {{"q05", kcm::stats::quantile(yt, 0.05)}, {"median", kcm::stats::quantile(yt, 0.5)},
                                 {"q95", kcm::stats::quantile(yt, 0.95)}};
    if (!dtv.empty())
        p.summary["D_over_T"] = {{"q05", kcm::stats::quantile(dtv, 0.05)}, {"median", kcm::stats::quantile(dtv, 0.5)},
                                 {"q95", kcm::stats::quantile(dtv, 0.95)}};
    return p;
}

Payload cmd_persistence(const Config& c) {
    const kcm::ModelSpec m = build_model(c);
    const int n = positive_int(c, "n", 10000);
    const int pad = static_cast<int>(c.integer("pad"));
    if (pad < 0) c.fail("pad", "must be non-negative");
    kcm::sim::PersistenceQuery q;
    q.model = m;
    if (m.kind == kcm::ModelKind::EastPolluted) {
        const auto [lo, hi] = kcm::sim::east_region(m, n);
        q.region_lo = lo;
        q.region_hi = hi;
    } else {
        q.region_lo = -n;
        q.region_hi = 0;
    }
    q.eta0 = kcm::Configuration::all_infected(kcm::Window(q.region_lo - pad, 0));
    q.bc = kcm::BoundaryCondition::infected();
    q.horizon = positive_real(c, "T");
    q.replicas = static_cast<std::size_t>(positive_int(c, "replicas"));
    q.seed = seed(c);
    const std::string& v = c.str("variant");
    if (v == "at-time") q.variant = kcm::sim::PersistenceVariant::at_time;
    else if (v == "by-time") q.variant = kcm::sim::PersistenceVariant::by_time;
    else c.fail("variant", "expected at-time or by-time");
    const auto est = kcm::sim::persistence_estimate(q, workers(c));
    Payload p;
    p.summary = {{"region", {q.region_lo, q.region_hi}}, {"estimate", est.estimate}, {"stderr", est.stderr_},
                 {"ci", {est.ci_lo, est.ci_hi}}, {"successes", est.successes}, {"replicas", est.replicas},
                 {"low_replicas", est.low_replicas}, {"p_pow_n", std::pow(m.p(), n)}};
    p.text = p.summary.dump() + "\n";
    return p;
}

Payload cmd_barriers(const Config& c) {
    const kcm::ModelSpec m = build_model(c);
    if (m.kind != kcm::ModelKind::DeltaWest) c.fail("model", "barriers need the delta-west model");
    const long long ell_in = c.integer("ell");
    const int ell = ell_in > 0 ? static_cast<int>(ell_in) : kcm::sim::default_block_length(m.delta);
    const kcm::Window w = window_from(c);
    const double T = positive_real(c, "T");
    const auto tl = kcm::sim::build_timeline(m, w, T, seed(c));
    const auto grid = kcm::sim::good_point_grid(tl, ell);
    kcm::sim::BarrierKind kind;
    if (c.str("kind") == "ne") kind = kcm::sim::BarrierKind::ne_barrier;
    else if (c.str("kind") == "nw") kind = kcm::sim::BarrierKind::nw_gate;
    else c.fail("kind", "expected ne or nw");
    const auto path = kcm::sim::find_barrier(grid, kind, w.lo, w.hi);
    Payload p;
    p.summary = {{"ell", ell}, {"blocks", grid.blocks}, {"good_fraction", grid.good_fraction()},
                 {"expected_fraction", std::exp(-m.delta * ell)}, {"found", path.has_value()}};
    if (path) {
        json corners = json::array();
        for (const auto& [x, t] : path->corners) corners.push_back({x, t});
        p.summary["start_site"] = path->start_site;
        p.summary["corners"] = corners;
        p.summary["good"] = kcm::sim::barrier_is_good(tl, *path, ell);
    }
    p.text = p.summary.dump() + "\n";
    return p;
}

Payload cmd_bootstrap(const Config& c) {
    const kcm::ModelSpec m = build_model(c);
    if (c.str("init").empty()) c.fail("init", "bootstrap needs an initial configuration");
    const auto eta = parse_bits(c, "init", static_cast<int>(c.integer("lo")));
    const auto bc = parse_bc(c);
    const auto closure = kcm::bootstrap::bp_closure(m, eta, bc);
    const auto cls = kcm::bootstrap::classify_stable(m, closure, bc);
    Payload p;
    p.summary = {{"initial", eta.str()}, {"closure", closure.str()},
                 {"stable_class", cls ? cls->describe() : std::string("unclassified")},
                 {"infections", kcm::count_infections(closure)}};
    p.text = p.summary.dump() + "\n";
    return p;
}

sp::GapMethod parse_method(const Config& c) {
    const std::string& v = c.str("method");
    if (v == "auto") return sp::GapMethod::automatic;
    if (v == "dense") return sp::GapMethod::dense;
    if (v == "lanczos") return sp::GapMethod::lanczos;
    if (v == "lopcg") return sp::GapMethod::lopcg;
    c.fail("method", "expected auto, dense, lanczos or lopcg");
}

const char* method_name(sp::GapMethod m) {
    switch (m) {
        case sp::GapMethod::dense: return "dense";
        case sp::GapMethod::lanczos: return "lanczos";
        case sp::GapMethod::lopcg: return "lopcg";
        default: return "auto";
    }
}

Payload cmd_spectrum(const Config& c) {
    const auto method = parse_method(c);
    const Chain ch = build_chain(c);
    const auto g = sp::spectral_gap(ch.gen, ch.mu, method);
    Payload p;
    p.summary = {{"model", ch.space->model.describe()}, {"window", {ch.space->window.lo, ch.space->window.hi}},
                 {"restriction", ch.space->restriction.describe()}, {"states", ch.space->size()}, {"gap", g.gap},
                 {"method", method_name(g.method)}, {"iterations", g.iterations}, {"residual", g.residual}};
    p.text = p.summary.dump() + "\n";
    return p;
}

Payload cmd_logsob(const Config& c) {
    const Chain ch = build_chain(c);
    sp::LogSobolevOptions lo;
    lo.restarts = positive_int(c, "restarts", 10000);
    lo.seed = seed(c);
    const auto r = sp::log_sobolev_constant(ch.gen, ch.mu, lo);
    Payload p;
    p.summary = {{"model", ch.space->model.describe()}, {"states", ch.space->size()},
                 {"restriction", ch.space->restriction.describe()}, {"c_sob", r.c_sob},
                 {"best_ratio", r.best_ratio}, {"gap_bound", r.gap_bound}, {"from_gap_limit", r.from_gap_limit},
                 {"certificate", {{"ent", r.ent}, {"dirichlet", r.dir}}}, {"restarts", r.restarts},
                 {"successful", r.successful}};
    p.text = p.summary.dump() + "\n";
    return p;
}

Payload cmd_mixing(const Config& c) {
    const Chain ch = build_chain(c);
    const double T = positive_real(c, "T");
    const double dt = positive_real(c, "dt");
    const double eps = positive_real(c, "eps");
    std::vector<double> times;
    for (int k = 0; k * dt <= T + 1e-12; ++k) times.push_back(k * dt);
    std::vector<std::size_t> starts;
    const std::string& s = c.str("start");
    if (s == "worst") {
        if (ch.space->size() > 4096) c.fail("start", "worst-case profile supports at most 4096 states");
        for (std::size_t a = 0; a < ch.space->size(); ++a) starts.push_back(a);
    } else {
        const auto eta = parse_bits(c, "start", ch.space->window.lo);
        const auto idx = eta.size() == ch.space->window.size() ? ch.space->index(eta.code()) : -1;
        if (idx < 0) c.fail("start", "configuration is not in the state space");
        starts.push_back(static_cast<std::size_t>(idx));
    }
    std::vector<double> worst(times.size(), 0.0);
    for (auto a : starts) {
        const auto prof = sp::mixing_profile(ch.gen, ch.mu, a, times, eps);
        for (std::size_t k = 0; k < times.size(); ++k) worst[k] = std::max(worst[k], prof.distance[k]);
    }
    std::optional<double> tmix;
    for (std::size_t k = 0; k < times.size() && !tmix; ++k)
        if (worst[k] <= eps)
            tmix = k == 0 ? times[0]
                          : times[k - 1] + (worst[k - 1] - eps) / (worst[k - 1] - worst[k]) * (times[k] - times[k - 1]);
    Payload p;
    p.csv = true;
    p.text = "t,distance\n";
    for (std::size_t k = 0; k < times.size(); ++k) p.text += csv_num(times[k]) + "," + csv_num(worst[k]) + "\n";
    p.summary = {{"states", ch.space->size()}, {"starts", starts.size()}, {"eps", eps}};
    p.summary["t_mix"] = tmix ? json(*tmix) : json(nullptr);
    return p;
}

kcm::duality::SetDescriptor parse_set(const Config& c, const std::string& key) {
    const std::string& v = c.str(key);
    if (v == "full") return kcm::duality::SetDescriptor::full();
    if (v.rfind("bernoulli:", 0) == 0) {
        char* end = nullptr;
        const double pr = std::strtod(v.c_str() + 10, &end);
        if (end == v.c_str() + 10 || *end != '\0' || !(pr >= 0 && pr <= 1)) c.fail(key, "expected bernoulli:<prob in [0,1]>");
        return kcm::duality::SetDescriptor::bernoulli(pr);
    }
    return kcm::duality::SetDescriptor::of(c.int_list(key));
}

json value_json(const kcm::duality::Value& v) { return {{"value", v.value}, {"stderr", v.stderr_}}; }

Payload cmd_duality(const Config& c) {
    const double lambda = positive_real(c, "lambda");
    const double t = c.real("t");
    if (!(t >= 0)) c.fail("t", "must be non-negative");
    auto B = kcm::duality::SetDescriptor::of(c.int_list("B")).sites;
    const bool exact = c.flag("exact"), mc = c.flag("mc");
    if (exact && mc) c.fail("mc", "choose one of --exact and --mc");
    kcm::duality::DualityOptions o;
    o.method = mc ? kcm::duality::Method::monte_carlo : kcm::duality::Method::exact;
    o.replicas = static_cast<std::size_t>(positive_int(c, "replicas"));
    o.seed = seed(c);
    o.workers = workers(c);
    if (!c.str("window").empty()) {
        const auto wl = c.int_list("window");
        if (wl.size() != 2 || wl[0] > wl[1]) c.fail("window", "expected lo,hi");
        o.window = kcm::Window(wl[0], wl[1]);
    }
    const bool quasi = !c.str("D").empty();
    if (quasi && !c.str("Bprime").empty()) c.fail("D", "give either Bprime (self-duality) or D (quasi-duality)");
    if (!quasi && c.str("Bprime").empty()) c.fail("Bprime", "self-duality needs Bprime (or D for quasi-duality)");
    const auto rep = quasi ? kcm::duality::quasi_duality_sides(B, parse_set(c, "D"), t, lambda, o)
                           : kcm::duality::self_duality_sides(B, parse_set(c, "Bprime"), t, lambda, o);
    Payload p;
    p.summary = {{"identity", rep.identity}, {"method", rep.method == kcm::duality::Method::exact ? "exact" : "monte_carlo"},
                 {"lambda", rep.lambda}, {"t", rep.t}, {"window", {rep.window.lo, rep.window.hi}},
                 {"B", rep.B}, {quasi ? "D" : "Bprime", rep.other.describe()}, {"lhs", value_json(rep.lhs)},
                 {"rhs", value_json(rep.rhs)}, {"difference", rep.difference()},
                 {"weight_unbounded", rep.weight_unbounded}};
    if (quasi) p.summary["dfp_time"] = rep.dfp_time;
    if (rep.single_site_form) p.summary["single_site_form"] = value_json(*rep.single_site_form);
    if (rep.method == kcm::duality::Method::monte_carlo) p.summary["replicas"] = rep.replicas;
    p.text = p.summary.dump() + "\n";
    return p;
}

Payload cmd_dfp_ergodicity(const Config& c) {
    const double lambda = positive_real(c, "lambda");
    const int n = positive_int(c, "n", kcm::duality::kExactMaxSites);
    kcm::duality::ErgodicityOptions o;
    const std::string& sec = c.str("sector");
    if (sec == "even" || sec == "+") o.sector = kcm::Parity::even;
    else if (sec == "odd" || sec == "-") o.sector = kcm::Parity::odd;
    else c.fail("sector", "expected even or odd");
    const std::string& st = c.str("start");
    if (st == "worst") o.start = kcm::duality::ProbeStart::worst;
    else if (st == "stationary") o.start = kcm::duality::ProbeStart::stationary;
    else {
        o.start = kcm::duality::ProbeStart::configuration;
        o.eta0 = parse_bits(c, "start", -(n / 2));
        if (o.eta0->size() != n) c.fail("start", "length differs from n");
    }
    const double T = positive_real(c, "T"), dt = positive_real(c, "dt");
    for (int k = 0; k * dt <= T + 1e-12; ++k) o.times.push_back(k * dt);
    o.fit_from = c.real("fit-from");
    const auto tr = kcm::duality::dfp_ergodicity_probe(lambda, n, o);
    Payload p;
    p.csv = true;
    p.text = "t,trace\n";
    for (std::size_t k = 0; k < tr.times.size(); ++k) p.text += csv_num(tr.times[k]) + "," + csv_num(tr.trace[k]) + "\n";
    p.summary = {{"lambda", lambda}, {"n", n}, {"sector", std::string(1, kcm::parity_symbol(tr.sector))},
                 {"rate", tr.rate}, {"r2", tr.r2}, {"fit_points", tr.fit_points}, {"gap", tr.gap}};
    return p;
}

Payload cmd_verify(const Config& c) {
    kcm::verify::VerifyOptions o;
    const std::string& s = c.str("suite");
    if (s == "quick") o.suite = kcm::verify::Suite::quick;
    else if (s == "full") o.suite = kcm::verify::Suite::full;
    else c.fail("suite", "expected quick or full");
    o.seed = seed(c);
    o.workers = workers(c);
    o.only = c.int_list("criteria");
    for (int id : o.only)
        if (id < 1 || id > kcm::verify::kCriteria) c.fail("criteria", "criterion ids run from 1 to 16");
    o.enforce_runtime = !c.flag("no-budget");
    Payload p;
    int failed = 0, total = 0;
    kcm::verify::run_suite(o, [&](const kcm::verify::CriterionResult& r) {
        std::cerr << kcm::verify::format_line(r) << "\n";
        p.text += kcm::verify::to_jsonl(r) + "\n";
        failed += !r.pass;
        ++total;
    });
    p.summary = {{"suite", s}, {"criteria", total}, {"failed", failed}};
    p.failed = failed > 0;
    return p;
}

std::vector<Command> commands() {
    const auto M = model_keys();
    const auto C = common_keys();
    const std::vector<KeyDef> win = {{"n", "8", "number of sites"}, {"lo", "0", "leftmost site"}};
    const std::vector<KeyDef> chain = {{"bc", "infected,infected", "boundary: left,right (healthy|infected)"},
                                       {"restriction", "none", "none | at-least-one | even | odd | blocks:<ell>"}};
    return {
        {"simulate", "Graphical-construction trajectory with snapshots (CSV)",
         M + C + win + std::vector<KeyDef>{{"init", "random", "0/1 string, healthy, infected or random"},
                                           {"bc", "healthy,healthy", "boundary"},
                                           {"T", "10", "horizon"},
                                           {"dt", "1", "snapshot spacing"}},
         cmd_simulate},
        {"front", "Front traces X-, X+, Y, D from a finite infection (CSV)",
         M + C + std::vector<KeyDef>{{"init", "", "0/1 string (default: single infection at 0)"},
                                     {"lo", "0", "site of the first init character"},
                                     {"T", "50", "horizon"},
                                     {"dt", "1", "sample spacing"},
                                     {"runs", "10", "independent runs"},
                                     {"speed", "2", "window half-width per unit time"}},
         cmd_front},
        {"persistence", "Probability that the region left of the origin is healthy (JSONL)",
         M + C + std::vector<KeyDef>{{"n", "3", "region size"},
                                     {"pad", "5", "extra infected sites left of the region"},
                                     {"T", "50", "time"},
                                     {"replicas", "10000", "replicas"},
                                     {"variant", "at-time", "at-time | by-time"}},
         cmd_persistence},
        {"barriers", "Good points and barrier search for delta-west (JSONL)",
         M + C + std::vector<KeyDef>{{"n", "200", "window width"},
                                     {"lo", "0", "leftmost site"},
                                     {"T", "200", "horizon"},
                                     {"ell", "0", "block length (0: default)"},
                                     {"kind", "ne", "ne | nw"}},
         cmd_barriers},
        {"bootstrap", "Bootstrap closure and stable class (JSONL)",
         M + C + std::vector<KeyDef>{{"init", "", "0/1 string"},
                                     {"lo", "0", "site of the first character"},
                                     {"bc", "healthy,healthy", "boundary"}},
         cmd_bootstrap},
        {"spectrum", "Spectral gap of the finite chain (JSONL)",
         M + C + win + chain + std::vector<KeyDef>{{"method", "auto", "auto | dense | lanczos | lopcg"}}, cmd_spectrum},
        {"logsob", "Log-Sobolev constant of the finite chain (JSONL)",
         M + C + win + chain + std::vector<KeyDef>{{"restarts", "24", "random restarts"}}, cmd_logsob},
        {"mixing", "Total-variation mixing profile (CSV)",
         M + C + win + chain + std::vector<KeyDef>{{"T", "20", "horizon"},
                                                   {"dt", "0.5", "grid spacing"},
                                                   {"eps", "0.25", "threshold"},
                                                   {"start", "worst", "worst or a 0/1 string"}},
         cmd_mixing},
        {"duality", "Self-duality or quasi-duality sides (JSONL)",
         C + std::vector<KeyDef>{{"lambda", "1", "q/p"},
                                 {"B", "0", "BABP start set, comma separated"},
                                 {"Bprime", "", "self-duality set: list, full or bernoulli:<prob>"},
                                 {"D", "", "quasi-duality set: list, full or bernoulli:<prob>"},
                                 {"t", "0.5", "time"},
                                 {"window", "", "lo,hi (default: padded hull)"},
                                 {"exact", "false", "exact evaluation (default)", true},
                                 {"mc", "false", "Monte Carlo evaluation", true},
                                 {"replicas", "20000", "Monte Carlo replicas"}},
         cmd_duality},
        {"dfp-ergodicity", "Decay of |E f(eta_t) - pi(f)| for the DFP (CSV)",
         C + std::vector<KeyDef>{{"lambda", "3", "q/p"},
                                 {"n", "8", "sites"},
                                 {"sector", "even", "even | odd"},
                                 {"start", "worst", "worst, stationary or a 0/1 string"},
                                 {"T", "8", "horizon"},
                                 {"dt", "0.5", "grid spacing"},
                                 {"fit-from", "3", "fit window start"}},
         cmd_dfp_ergodicity},
        {"verify", "Acceptance-criteria suite (JSONL ledger)",
         C + std::vector<KeyDef>{{"suite", "quick", "quick | full"},
                                 {"criteria", "", "subset, comma separated"},
                                 {"no-budget", "false", "ignore runtime budgets", true}},
         cmd_verify},
    };
}

std::string metadata(const std::string& cmd, const Config& cfg, const std::string& hash) {
    return "# kcm-lab " KCM_VERSION " command=" + cmd + " config_hash=" + hash + " seed=" + cfg.str("seed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kcm-lab: kinetically constrained models laboratory"};
    app.set_version_flag("--version", KCM_VERSION);
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);

    const auto cmds = commands();
    std::map<std::string, std::map<std::string, std::string>> values;
    std::map<std::string, std::map<std::string, CLI::Option*>> opts;
    std::map<std::string, std::map<std::string, bool>> flags;
    for (const auto& cmd : cmds) {
        CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
        sub->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
        for (const auto& k : cmd.keys) {
            if (k.is_flag)
                opts[cmd.name][k.name] = sub->add_flag("--" + k.name, flags[cmd.name][k.name], k.help);
            else
                opts[cmd.name][k.name] = sub->add_option("--" + k.name, values[cmd.name][k.name], k.help + " [" + k.def + "]");
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const Command* cmd = nullptr;
    for (const auto& c : cmds)
        if (app.got_subcommand(c.name)) cmd = &c;

    Config cfg;
    std::string hash;
    try {
        std::set<std::string> allowed;
        for (const auto& k : cmd->keys) {
            allowed.insert(k.name);
            cfg.set(k.name, k.def, "default");
        }
        if (!config_path.empty()) kcm::config::load_file(cfg, config_path, allowed);
        for (const auto& k : cmd->keys) {
            if (opts[cmd->name][k.name]->count() == 0) continue;
            cfg.set(k.name, k.is_flag ? "true" : values[cmd->name][k.name], "--" + k.name);
        }
        cfg.set("command", cmd->name, "command");
        hash = cfg.hash(kUnhashed);
    } catch (const ConfigError& e) {
        std::cerr << "kcm-lab: invalid configuration: " << e.what() << "\n";
        return 2;
    }

    const auto t0 = std::chrono::steady_clock::now();
    Payload p;
    try {
        p = cmd->run(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "kcm-lab: invalid configuration: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "kcm-lab " << cmd->name << ": " << e.what() << "\n";
        return 1;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::string out = cfg.str("out");
    if (!out.empty()) {
        std::string body;
        if (p.csv) {
            body = metadata(cmd->name, cfg, hash) + "\n" + p.text;
        } else {
            // one JSON object per line, each carrying provenance
            std::istringstream in(p.text);
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                json j = json::parse(line);
                j["command"] = cmd->name;
                j["config_hash"] = hash;
                j["seed"] = cfg.str("seed");
                j["version"] = KCM_VERSION;
                body += j.dump() + "\n";
            }
        }
        try {
            kcm::config::write_atomic(out, body);
        } catch (const std::exception& e) {
            std::cerr << "kcm-lab: " << e.what() << "\n";
            return 1;
        }
    }
    json rec = {{"command", cmd->name}, {"version", KCM_VERSION}, {"config_hash", hash}, {"seed", cfg.str("seed")},
                {"wall_seconds", wall}, {"output", out.empty() ? json(nullptr) : json(out)}, {"result", p.summary}};
    std::cout << rec.dump() << std::endl;
    return p.failed ? 1 : 0;
}
