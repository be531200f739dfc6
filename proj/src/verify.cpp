#include "kcm/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kcm/bootstrap.hpp"
#include "kcm/duality.hpp"
#include "kcm/parallel.hpp"
#include "kcm/rng.hpp"
#include "kcm/sim.hpp"
#include "kcm/spectral.hpp"
#include "kcm/stats.hpp"

namespace kcm::verify {

using nlohmann::json;
namespace sp = kcm::spectral;

namespace {

struct Outcome {
    std::string name;
    std::string observed;
    std::string tolerance;
    bool ok = false;
    json details = json::object();
};

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

bool quick(const VerifyOptions& o) { return o.suite == Suite::quick; }

const double kBudget[kCriteria + 1] = {0, 10, 5, 30, 120, 120, 180, 180, 30, 60, 120, 600, 300, 600, 600, 60, 60};
const std::vector<double> kQs = {0.2, 0.5, 0.8};

std::vector<std::pair<std::string, ModelSpec>> vertex_models(double q) {
    return {{"FA1f", ModelSpec::fa1f(q)},
            {"East", ModelSpec::east(q)},
            {"EastPolluted", ModelSpec::east_polluted(q, TypeMap::periodic("EF"))},
            {"DeltaWest(0.1)", ModelSpec::delta_west(q, 0.1)},
            {"DeltaWest(1)", ModelSpec::delta_west(q, 1.0)},
            {"BABP", ModelSpec::babp(q)}};
}

Outcome reversibility(const VerifyOptions& opt) {
    Outcome o{"reversibility", "", "<= 1e-12"};
    double worst = 0;
    std::string where;
    for (double q : kQs) {
        auto models = vertex_models(q);
        models.emplace_back("DFP", ModelSpec::dfp(q / (1.0 - q)));
        for (const auto& [name, m] : models)
            for (int n = 1; n <= 8; ++n)
                for (const auto& bc : {BoundaryCondition::healthy(), BoundaryCondition::infected()}) {
                    if (m.kind == ModelKind::DFP && bc == BoundaryCondition::infected()) continue;
                    const auto space = sp::build_state_space(m, Window(0, n - 1), bc, sp::Restriction::none());
                    sp::BalanceOptions bo;
                    if (m.kind == ModelKind::DFP) {
                        DfpEdgeRates r = dfp_edge_rates(m.lambda());
                        r.r_create *= opt.dfp_create_scale;
                        bo.generator.dfp_rates = r;
                    }
                    const double v = sp::check_detailed_balance(sp::reference_measure(space), bo);
                    if (v > worst || where.empty()) {
                        if (v > worst) worst = v;
                        where = name + " n=" + std::to_string(n) + " q=" + fmt(q);
                    }
                }
    }
    o.observed = "max violation " + fmt(worst) + " (" + where + ")";
    o.ok = worst <= 1e-12;
    o.details = {{"max_violation", worst}, {"worst_case", where}};
    return o;
}

Outcome east_family(const VerifyOptions&) {
    Outcome o{"east stationary family", "", "<= 1e-12"};
    using bootstrap::StepPosition;
    const std::vector<std::pair<std::string, StepPosition>> steps = {{"-inf", StepPosition::minus_inf()},
                                                                     {"-2", StepPosition::at(-2)},
                                                                     {"0", StepPosition::at(0)},
                                                                     {"3", StepPosition::at(3)},
                                                                     {"+inf", StepPosition::plus_inf()}};
    const Window w(-5, 5);
    double worst = 0;
    json per = json::object();
    for (double q : kQs) {
        const auto space =
            sp::build_state_space(ModelSpec::east(q), w, BoundaryCondition::healthy(), sp::Restriction::none());
        for (const auto& [label, i] : steps) {
            const auto mu = sp::product_measure(space, bootstrap::east_stationary_marginals(i, q, w));
            const double v = sp::check_detailed_balance(mu);
            worst = std::max(worst, v);
            per[label + "@q=" + fmt(q)] = v;
        }
    }
    o.observed = "max violation " + fmt(worst);
    o.ok = worst <= 1e-12;
    o.details = {{"max_violation", worst}, {"cases", per}};
    return o;
}

Outcome ergodic_components(const VerifyOptions&) {
    Outcome o{"ergodic components", "", "0 mismatches"};
    const Window w(0, 7);
    const auto bc = BoundaryCondition::healthy();
    std::size_t mismatches = 0;
    json per = json::object();
    for (const auto& m : {ModelSpec::fa1f(0.5), ModelSpec::east(0.5)}) {
        const auto comp = bootstrap::legal_flip_components(m, w, bc);
        std::map<int, std::uint64_t> comp_bp;
        std::map<std::uint64_t, int> bp_comp;
        std::size_t bad = 0;
        for (std::uint64_t s = 0; s < 256; ++s) {
            const std::uint64_t b = bootstrap::bp_closure(m, Configuration::from_code(w, s), bc).code();
            const int c = comp[s];
            auto [it1, ins1] = comp_bp.emplace(c, b);
            auto [it2, ins2] = bp_comp.emplace(b, c);
            if (it1->second != b || it2->second != c) ++bad;
        }
        per[std::string(model_name(m.kind))] = {{"components", comp_bp.size()}, {"closures", bp_comp.size()}, {"mismatches", bad}};
        mismatches += bad;
    }
    o.observed = std::to_string(mismatches) + " mismatches";
    o.ok = mismatches == 0;
    o.details = per;
    return o;
}

Outcome simulator_oracle(const VerifyOptions& opt) {
    Outcome o{"simulator vs generator", "", "TV <= 3 x aggregate SE"};
    const std::size_t R = quick(opt) ? 20000 : 100000;
    const Window w(0, 5);
    const double t = 2.0;
    auto models = vertex_models(0.5);
    models.emplace_back("DFP", ModelSpec::dfp(1.0));
    const Configuration eta0 = Configuration::parse("110101");
    bool ok = true;
    double worst_ratio = 0;
    json per = json::object();
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        const auto& [name, m] = models[mi];
        const auto bc = m.kind == ModelKind::DFP ? BoundaryCondition::healthy() : BoundaryCondition::infected();
        const auto space = sp::build_state_space(m, w, bc, sp::Restriction::none());
        const auto gen = sp::build_generator(space);
        std::vector<double> v(space->size(), 0.0);
        v[static_cast<std::size_t>(space->index(eta0.code()))] = 1.0;
        const auto exact = sp::propagate(gen, v, t);
        std::vector<std::uint32_t> finals(R);
        const std::uint64_t seed = replica_seed(opt.seed, 1000 + mi);
        parallel_for(
            R,
            [&](std::size_t r) {
                const auto tl = sim::build_timeline(m, w, t, replica_seed(seed, r));
                finals[r] = static_cast<std::uint32_t>(sim::evolve(m, eta0, bc, tl).final.code());
            },
            opt.workers);
        std::vector<double> emp(space->size(), 0.0);
        for (auto c : finals) emp[static_cast<std::size_t>(space->index(c))] += 1.0 / static_cast<double>(R);
        double tv = 0, se = 0;
        for (std::size_t a = 0; a < emp.size(); ++a) {
            tv += 0.5 * std::abs(emp[a] - exact[a]);
            se += 0.5 * std::sqrt(std::max(0.0, exact[a] * (1 - exact[a])) / static_cast<double>(R));
        }
        const bool mok = tv <= 3 * se;
        ok = ok && mok;
        worst_ratio = std::max(worst_ratio, tv / se);
        per[name] = {{"tv", tv}, {"se", se}, {"pass", mok}};
    }
    o.observed = "max TV/SE " + fmt(worst_ratio, 3);
    o.ok = ok;
    o.details = {{"replicas", R}, {"models", per}};
    return o;
}

std::vector<std::vector<int>> small_sets(int lo, int hi) {
    std::vector<std::vector<int>> out{{}};
    for (int a = lo; a <= hi; ++a) out.push_back({a});
    for (int a = lo; a <= hi; ++a)
        for (int b = a + 1; b <= hi; ++b) out.push_back({a, b});
    return out;
}

Outcome self_duality(const VerifyOptions&) {
    Outcome o{"self-duality", "", "|lhs - rhs| <= 1e-8"};
    const auto sets = small_sets(-5, 5);
    double worst = 0;
    std::size_t pairs = 0;
    for (double lambda : {0.5, 1.0, 3.0})
        for (double t : {0.2, 0.7}) {
            const duality::ExactDuality ex(lambda, Window(-6, 6));
            std::vector<std::vector<double>> u;
            for (const auto& s : sets) u.push_back(ex.self_vector(duality::SetDescriptor::of(s), t));
            for (std::size_t i = 0; i < sets.size(); ++i)
                for (std::size_t j = 0; j < sets.size(); ++j) {
                    const double lhs = ex.babp_read(u[j], duality::SetDescriptor::of(sets[i]));
                    const double rhs = ex.babp_read(u[i], duality::SetDescriptor::of(sets[j]));
                    worst = std::max(worst, std::abs(lhs - rhs));
                    ++pairs;
                }
        }
    o.observed = "max |lhs-rhs| " + fmt(worst) + " over " + std::to_string(pairs) + " pairs";
    o.ok = worst <= 1e-8;
    o.details = {{"max_difference", worst}, {"pairs", pairs}, {"window", "[-6,6]"}};
    return o;
}

Outcome quasi_duality(const VerifyOptions&) {
    Outcome o{"quasi-duality", "", "|lhs - rhs| <= 1e-8"};
    const auto sets = small_sets(-5, 5);
    std::vector<duality::SetDescriptor> ds;
    for (const auto& s : sets) ds.push_back(duality::SetDescriptor::of(s));
    ds.push_back(duality::SetDescriptor::full());
    double worst = 0, worst_single = 0;
    std::size_t pairs = 0;
    for (double lambda : {0.5, 1.0, 3.0})
        for (double t : {0.2, 0.7}) {
            const duality::ExactDuality ex(lambda, Window(-6, 6));
            const auto& par = ex.params();
            std::vector<std::vector<double>> lv, rv;
            for (const auto& d : ds) lv.push_back(ex.babp_quasi_vector(d, t));
            for (const auto& b : sets) rv.push_back(ex.dfp_quasi_vector(b, t));
            for (std::size_t i = 0; i < sets.size(); ++i)
                for (std::size_t j = 0; j < ds.size(); ++j) {
                    const double lhs = ex.babp_read(lv[j], duality::SetDescriptor::of(sets[i]));
                    const double rhs = ex.dfp_read(rv[i], ds[j]);
                    worst = std::max(worst, std::abs(lhs - rhs));
                    ++pairs;
                    if (ds[j].kind == duality::SetDescriptor::Kind::full && sets[i].size() == 1) {
                        const double occ = ex.dfp_full_occupation(sets[i][0], t);
                        const double form = (1.0 / (par.y - 1.0)) * ((2.0 * par.y / (par.y + 1.0)) * occ - 1.0);
                        worst_single = std::max(worst_single, std::abs(lhs - form));
                    }
                }
        }
    o.observed = "max |lhs-rhs| " + fmt(worst) + ", single-site form " + fmt(worst_single);
    o.ok = worst <= 1e-8 && worst_single <= 1e-8;
    o.details = {{"max_difference", worst}, {"single_site_form_difference", worst_single}, {"pairs", pairs}};
    return o;
}

Outcome persistence(const VerifyOptions& opt) {
    Outcome o{"persistence bound", "", "estimate <= p^n + 3 stderr"};
    const std::size_t R = quick(opt) ? 2000 : 10000;
    bool ok = true;
    double worst = -std::numeric_limits<double>::infinity();
    json per = json::array();
    for (double q : {0.3, 0.5})
        for (int n = 1; n <= 5; ++n) {
            sim::PersistenceQuery pq;
            pq.model = ModelSpec::east(q);
            pq.eta0 = Configuration::all_infected(Window(-(n + 5), 0));
            pq.bc = BoundaryCondition::infected();
            pq.region_lo = -n;
            pq.region_hi = 0;
            pq.horizon = 50;
            pq.replicas = R;
            pq.seed = replica_seed(opt.seed, static_cast<std::uint64_t>(700 + 10 * n + (q < 0.4 ? 0 : 1)));
            const auto est = sim::persistence_estimate(pq, opt.workers);
            const double bound = std::pow(1 - q, n);
            const double margin = est.estimate - (bound + 3 * est.stderr_);
            worst = std::max(worst, margin);
            ok = ok && margin <= 0;
            per.push_back({{"q", q}, {"n", n}, {"estimate", est.estimate}, {"stderr", est.stderr_}, {"bound", bound}});
        }
    o.observed = "max(estimate - p^n - 3se) " + fmt(worst);
    o.ok = ok;
    o.details = {{"replicas", R}, {"cases", per}};
    return o;
}

Outcome good_points(const VerifyOptions& opt) {
    Outcome o{"good-point density", "", "|fraction - exp(-delta l)| <= 3 sigma"};
    bool ok = true;
    double worst = 0;
    json per = json::array();
    for (auto [delta, ell] : {std::pair{0.1, 10.0}, std::pair{0.05, 20.0}}) {
        const Window w(0, 999);
        const int blocks = 100;
        const auto tl = sim::build_timeline(ModelSpec::delta_west(0.5, delta), w, blocks * ell,
                                            replica_seed(opt.seed, static_cast<std::uint64_t>(800 + ell)));
        const auto grid = sim::good_point_grid(tl, ell);
        const double cells = static_cast<double>(grid.cells.size());
        const double P = std::exp(-delta * ell);
        const double sigma = std::sqrt(P * (1 - P) / cells);
        const double z = std::abs(grid.good_fraction() - P) / sigma;
        worst = std::max(worst, z);
        ok = ok && z <= 3;
        per.push_back({{"delta", delta}, {"ell", ell}, {"cells", cells}, {"fraction", grid.good_fraction()}, {"expected", P}, {"z", z}});
    }
    o.observed = "max |z| " + fmt(worst, 3);
    o.ok = ok;
    o.details = per;
    return o;
}

Outcome dfp_parity(const VerifyOptions& opt) {
    Outcome o{"DFP parity conservation", "", "0 violations"};
    const std::size_t R = quick(opt) ? 20000 : 100000;
    const ModelSpec m = ModelSpec::dfp(1.0);
    const Window w(0, 19);
    const double ph = equilibrium_healthy_density(m);
    std::vector<std::uint32_t> bad(R, 0);
    parallel_for(
        R,
        [&](std::size_t r) {
            const std::uint64_t s = replica_seed(opt.seed ^ 0xD0Full, r);
            rng::Stream st(s, 0x1717);
            Configuration eta(w);
            for (int x = w.lo; x <= w.hi; ++x) eta.set(x, st.unit() < ph);
            const auto tl = sim::build_timeline(m, w, 5.0, s);
            const auto tr = sim::evolve(m, eta, BoundaryCondition::healthy(), tl, sim::RecordOptions::snapshots(0.25));
            const Parity p0 = parity(eta);
            for (const auto& [t, c] : tr.snapshots) bad[r] += parity(c) != p0;
            bad[r] += parity(tr.final) != p0;
        },
        opt.workers);
    std::size_t total = 0;
    for (auto b : bad) total += b;
    o.observed = std::to_string(total) + " violations over " + std::to_string(R) + " trajectories";
    o.ok = total == 0;
    o.details = {{"violations", total}, {"trajectories", R}};
    return o;
}

Outcome dfp_ergodicity(const VerifyOptions&) {
    Outcome o{"DFP ergodicity", "", "rate > 0, R^2 >= 0.99, |m8 - m12| <= 0.2 m12"};
    bool ok = true;
    json per = json::array();
    std::string obs;
    for (Parity s : {Parity::even, Parity::odd}) {
        duality::ErgodicityOptions eo;
        eo.sector = s;
        const auto a = duality::dfp_ergodicity_probe(3.0, 8, eo);
        const auto b = duality::dfp_ergodicity_probe(3.0, 12, eo);
        const double rel = std::abs(a.rate - b.rate) / b.rate;
        const bool sok = a.rate > 0 && b.rate > 0 && a.r2 >= 0.99 && b.r2 >= 0.99 && rel <= 0.2;
        ok = ok && sok;
        per.push_back({{"sector", std::string(1, parity_symbol(s))},
                       {"rate8", a.rate}, {"r2_8", a.r2}, {"gap8", a.gap},
                       {"rate12", b.rate}, {"r2_12", b.r2}, {"gap12", b.gap}, {"relative_difference", rel}});
        obs += std::string(obs.empty() ? "" : "; ") + parity_symbol(s) + ": m8=" + fmt(a.rate, 3) + " m12=" +
               fmt(b.rate, 3) + " R2>=" + fmt(std::min(a.r2, b.r2), 4) + " rel=" + fmt(rel, 3);
    }
    o.observed = obs;
    o.ok = ok;
    o.details = per;
    return o;
}

Outcome dfp_log_sobolev(const VerifyOptions& opt) {
    Outcome o{"log-Sobolev boundedness", "", "max_{7<=n<=10} <= 1.2 max_{n<=6}"};
    const int nmax = quick(opt) ? 8 : 10;
    bool ok = true;
    json per = json::array();
    std::string obs;
    for (double lambda : {1.0, 3.0}) {
        double small = 0, large = 0;
        json vals = json::array();
        for (int n = 2; n <= nmax; ++n)
            for (Parity s : {Parity::even, Parity::odd}) {
                const auto space = sp::build_state_space(ModelSpec::dfp(lambda), Window(0, n - 1),
                                                         BoundaryCondition::healthy(), sp::Restriction::parity_sector(s));
                const auto gen = sp::build_generator(space);
                const auto mu = sp::reference_measure(space);
                double c = 0;
                if (space->size() >= 2) c = sp::log_sobolev_constant(gen, mu).c_sob;
                (n <= 6 ? small : large) = std::max(n <= 6 ? small : large, c);
                vals.push_back({{"n", n}, {"sector", std::string(1, parity_symbol(s))}, {"c_sob", c}});
            }
        const double ratio = large / small;
        ok = ok && ratio <= 1.2;
        per.push_back({{"lambda", lambda}, {"max_small", small}, {"max_large", large}, {"ratio", ratio}, {"values", vals}});
        obs += std::string(obs.empty() ? "" : "; ") + "lambda=" + fmt(lambda, 2) + ": ratio " + fmt(ratio, 4);
    }
    o.observed = obs;
    o.ok = ok;
    o.details = per;
    return o;
}

Outcome restricted_scaling(const VerifyOptions&) {
    Outcome o{"restricted-chain scaling", "", "max/min of c_sob/l < 2"};
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    json per = json::array();
    for (int ell = 2; ell <= 4; ++ell) {
        const auto r = sp::restricted_block_log_sobolev(0.5, ell, 2, 0.1);
        const double v = r.c_sob / ell;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        per.push_back({{"ell", ell}, {"c_sob", r.c_sob}, {"c_over_ell", v}, {"gap_bound", r.gap_bound}});
    }
    o.observed = "max/min " + fmt(hi / lo, 4);
    o.ok = hi / lo < 2;
    o.details = per;
    return o;
}

Outcome mixing_linearity(const VerifyOptions& opt) {
    Outcome o{"mixing linearity", "", "slope > 0, relative residual <= 0.1"};
    const int nmax = quick(opt) ? 9 : 12;
    std::vector<double> ns, ts;
    json per = json::array();
    for (int n = 4; n <= nmax; ++n) {
        const auto space = sp::build_state_space(ModelSpec::fa1f(0.8), Window(1, n), BoundaryCondition::healthy(),
                                                 sp::Restriction::at_least_one_infection());
        const auto gen = sp::build_generator(space);
        const auto mu = sp::reference_measure(space);
        std::vector<std::uint64_t> starts{0};
        const std::uint64_t full = (std::uint64_t{1} << n) - 1;
        for (int i = 0; i < n; ++i) starts.push_back(full & ~(std::uint64_t{1} << i));
        double worst = 0;
        for (auto c : starts) {
            const auto tm = sp::mixing_time(gen, mu, static_cast<std::size_t>(space->index(c)), 0.25, 0.1, 1000);
            worst = std::max(worst, tm ? *tm : std::numeric_limits<double>::infinity());
        }
        ns.push_back(n);
        ts.push_back(worst);
        per.push_back({{"n", n}, {"t_mix", worst}});
    }
    const auto fit = stats::fit_line(ns, ts);
    o.observed = "slope " + fmt(fit.slope) + ", relative residual " + fmt(fit.relative_residual, 3);
    o.ok = fit.slope > 0 && fit.relative_residual <= 0.1;
    o.details = {{"points", per}, {"slope", fit.slope}, {"intercept", fit.intercept}, {"relative_residual", fit.relative_residual}};
    return o;
}

Outcome front_growth(const VerifyOptions& opt) {
    Outcome o{"front growth", "", "5th pct > 0.02 and 95th pct < 2 for Y/T and D/T"};
    const std::size_t runs = quick(opt) ? 60 : 200;
    const double T = quick(opt) ? 100 : 200;
    bool ok = true;
    json per = json::array();
    std::string obs;
    const std::vector<std::pair<std::string, ModelSpec>> models = {{"FA1f", ModelSpec::fa1f(0.5)},
                                                                   {"BABP", ModelSpec::babp_lambda(1.0)}};
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        const auto& [name, m] = models[mi];
        std::vector<double> ys(runs), ds(runs);
        std::vector<std::uint8_t> edge(runs, 0);
        const Configuration eta0 = Configuration::all_infected(Window(0, 0));
        parallel_for(
            runs,
            [&](std::size_t r) {
                const auto tr = sim::front_trace(m, eta0, T, T / 20, replica_seed(opt.seed + 1400 + mi, r));
                const auto& f = tr.samples.back().f;
                ys[r] = f.y ? *f.y / T : 0.0;
                ds[r] = f.d ? *f.d / T : 0.0;
                edge[r] = tr.edge_hit;
            },
            opt.workers);
        const double y05 = stats::quantile(ys, 0.05), y95 = stats::quantile(ys, 0.95);
        const double d05 = stats::quantile(ds, 0.05), d95 = stats::quantile(ds, 0.95);
        std::size_t edges = 0;
        for (auto e : edge) edges += e;
        const bool mok = y05 > 0.02 && y95 < 2 && d05 > 0.02 && d95 < 2;
        ok = ok && mok;
        per.push_back({{"model", name}, {"y05", y05}, {"y95", y95}, {"d05", d05}, {"d95", d95}, {"edge_hits", edges}});
        obs += std::string(obs.empty() ? "" : "; ") + name + ": Y/T [" + fmt(y05, 3) + "," + fmt(y95, 3) + "] D/T [" +
               fmt(d05, 3) + "," + fmt(d95, 3) + "]";
    }
    o.observed = obs;
    o.ok = ok;
    o.details = {{"runs", runs}, {"T", T}, {"models", per}};
    return o;
}

Outcome entropy_inequalities(const VerifyOptions& opt) {
    Outcome o{"entropy-production inequalities", "", "violations <= 1e-10"};
    const Window W(0, 6), L(1, 5);
    const std::vector<Window> bigger = {Window(0, 5), Window(1, 6), Window(0, 6)};
    const auto space = sp::build_state_space(ModelSpec::fa1f(0.5), W, BoundaryCondition::healthy(), sp::Restriction::none());
    double worst_beta = -std::numeric_limits<double>::infinity(), worst_mono = worst_beta, min_alpha = 0;
    rng::Stream st(opt.seed, 0xE17);
    for (int k = 0; k < 100; ++k) {
        sp::MeasureVector mu{space, std::vector<double>(space->size())};
        double z = 0;
        for (double& v : mu.w) z += (v = 0.02 + st.unit());
        for (double& v : mu.w) v /= z;
        const auto base = sp::entropy_production(mu, L);
        for (std::size_t i = 0; i < base.sites.size(); ++i) {
            if (!base.interior[i]) continue;
            const double a = base.alpha[i], b = base.beta[i];
            worst_beta = std::max(worst_beta, b * b - 2 * a);
            min_alpha = std::min(min_alpha, a);
            for (const auto& Lp : bigger) {
                const auto big = sp::entropy_production(mu, Lp);
                const std::size_t j = static_cast<std::size_t>(base.sites[i] - Lp.lo);
                worst_mono = std::max(worst_mono, a - big.alpha[j]);
            }
        }
    }
    o.observed = "max(beta^2-2alpha) " + fmt(worst_beta) + ", max(alpha_L-alpha_L') " + fmt(worst_mono) +
                 ", min alpha " + fmt(min_alpha);
    o.ok = worst_beta <= 1e-10 && worst_mono <= 1e-10 && min_alpha >= -1e-10;
    o.details = {{"max_beta_excess", worst_beta}, {"max_monotonicity_excess", worst_mono}, {"min_alpha", min_alpha}};
    return o;
}

Outcome hitting_tail(const VerifyOptions&) {
    Outcome o{"hitting-tail bound", "", "P(tau_n > t) <= exp(-q gamma_n t)/(p^{2n} q)"};
    bool ok = true;
    double worst = 0;
    json per = json::array();
    const std::vector<double> times = {1, 5, 10};
    for (double q : {0.3, 0.5, 0.7})
        for (int n = 3; n <= 6; ++n) {
            const Window w(-n, n);
            const auto space = sp::build_state_space(ModelSpec::fa1f(q), w, BoundaryCondition::healthy(),
                                                     sp::Restriction::at_least_one_infection());
            const auto gen = sp::build_generator(space);
            const auto mu = sp::reference_measure(space);
            const double gamma = sp::spectral_gap(gen, mu).gap;
            std::vector<double> start(space->size(), 0.0);
            const std::uint64_t full = (std::uint64_t{1} << w.size()) - 1;
            start[static_cast<std::size_t>(space->index(full & ~(std::uint64_t{1} << n)))] = 1.0;
            std::vector<bool> target(space->size());
            for (std::size_t a = 0; a < space->size(); ++a) {
                const auto c = space->code(a);
                target[a] = !(c & 1u) || !((c >> (2 * n)) & 1u);
            }
            const auto tail = sp::hitting_time_tail(gen, start, target, times);
            const double p = 1 - q;
            for (std::size_t k = 0; k < times.size(); ++k) {
                const double bound = std::exp(-q * gamma * times[k]) / (std::pow(p, 2 * n) * q);
                worst = std::max(worst, tail[k] / bound);
                ok = ok && tail[k] <= bound;
                per.push_back({{"q", q}, {"n", n}, {"t", times[k]}, {"tail", tail[k]}, {"bound", bound}, {"gap", gamma}});
            }
        }
    o.observed = "max tail/bound " + fmt(worst, 4);
    o.ok = ok;
    o.details = per;
    return o;
}

Outcome dispatch(int id, const VerifyOptions& opt) {
    switch (id) {
        case 1: return reversibility(opt);
        case 2: return east_family(opt);
        case 3: return ergodic_components(opt);
        case 4: return simulator_oracle(opt);
        case 5: return self_duality(opt);
        case 6: return quasi_duality(opt);
        case 7: return persistence(opt);
        case 8: return good_points(opt);
        case 9: return dfp_parity(opt);
        case 10: return dfp_ergodicity(opt);
        case 11: return dfp_log_sobolev(opt);
        case 12: return restricted_scaling(opt);
        case 13: return mixing_linearity(opt);
        case 14: return front_growth(opt);
        case 15: return entropy_inequalities(opt);
        case 16: return hitting_tail(opt);
        default: throw std::invalid_argument("verify: unknown criterion " + std::to_string(id));
    }
}

}  // namespace

CriterionResult run_criterion(int id, const VerifyOptions& opt) {
    CriterionResult r;
    r.id = id;
    r.budget = id >= 1 && id <= kCriteria ? kBudget[id] : 0;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        Outcome o = dispatch(id, opt);
        r.name = o.name;
        r.observed = o.observed;
        r.tolerance = o.tolerance;
        r.value_ok = o.ok;
        r.details = o.details.dump();
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception& e) {
        r.name = "criterion " + std::to_string(id);
        r.observed = std::string("error: ") + e.what();
        r.value_ok = false;
        r.details = json{{"error", e.what()}}.dump();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.pass = r.value_ok && (!opt.enforce_runtime || r.seconds <= r.budget);
    return r;
}

std::vector<CriterionResult> run_suite(const VerifyOptions& opt,
                                       const std::function<void(const CriterionResult&)>& on_result) {
    std::vector<int> ids = opt.only;
    if (ids.empty())
        for (int i = 1; i <= kCriteria; ++i) ids.push_back(i);
    std::vector<CriterionResult> out;
    for (int id : ids) {
        out.push_back(run_criterion(id, opt));
        if (on_result) on_result(out.back());
    }
    return out;
}

std::string format_line(const CriterionResult& r) {
    char head[160];
    std::snprintf(head, sizeof head, "[%s] %2d %-32s ", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str());
    std::ostringstream os;
    os << head << r.observed << " | tol " << r.tolerance << " | " << fmt(r.seconds, 3) << "s (budget "
       << fmt(r.budget, 4) << "s)";
    if (r.value_ok && !r.pass) os << " over budget";
    return os.str();
}

std::string to_jsonl(const CriterionResult& r) {
    json j{{"criterion", r.id},    {"name", r.name},       {"observed", r.observed},
           {"tolerance", r.tolerance}, {"value_ok", r.value_ok}, {"seconds", r.seconds},
           {"budget_seconds", r.budget}, {"pass", r.pass},     {"details", json::parse(r.details.empty() ? "{}" : r.details)}};
    return j.dump();
}

}  // namespace kcm::verify
