#include "kcm/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "engine.hpp"
#include "kcm/parallel.hpp"
#include "kcm/rng.hpp"
#include "kcm/stats.hpp"

namespace kcm::sim {

std::string_view clock_name(ClockType c) {
    switch (c) {
        case ClockType::unit: return "unit";
        case ClockType::left: return "left";
        case ClockType::right: return "right";
        case ClockType::east: return "east";
        case ClockType::west: return "west";
        case ClockType::edge: return "edge";
    }
    return "?";
}

const ClockStream* Timeline::find(int site, ClockType c) const {
    for (const auto& s : streams)
        if (s.site == site && s.clock == c) return &s;
    return nullptr;
}

std::size_t Timeline::ring_count() const {
    std::size_t n = 0;
    for (const auto& s : streams) n += s.rings.size();
    return n;
}

namespace {

constexpr std::uint32_t clock_tag(ClockType c) { return 0x100u + static_cast<std::uint32_t>(c); }

ClockStream make_stream(int site, ClockType c, double rate, double horizon, std::uint64_t seed) {
    ClockStream s{site, c, rate, {}};
    if (rate <= 0) return s;
    s.rings.reserve(static_cast<std::size_t>(rate * horizon * 1.2) + 8);
    double t = 0;
    for (std::uint64_t k = 0;; ++k) {
        const auto u = rng::uniform_pair(seed, static_cast<std::uint32_t>(site), clock_tag(c), k);
        t += -std::log(u.u0) / rate;
        if (t > horizon) break;
        s.rings.push_back({t, u.u1});
    }
    return s;
}

}  // namespace

Timeline build_timeline(const ModelSpec& model, const Window& window, double horizon, std::uint64_t seed) {
    model.validate();
    if (!(horizon >= 0) || !std::isfinite(horizon)) throw std::invalid_argument("timeline: horizon must be >= 0");
    Timeline tl{model, window, horizon, seed, {}};
    auto add = [&](int x, ClockType c, double rate) { tl.streams.push_back(make_stream(x, c, rate, horizon, seed)); };
    switch (model.kind) {
        case ModelKind::FA1f:
        case ModelKind::East:
        case ModelKind::EastPolluted:
            for (int x = window.lo; x <= window.hi; ++x) add(x, ClockType::unit, 1.0);
            break;
        case ModelKind::BABP:
            for (int x = window.lo; x <= window.hi; ++x) {
                add(x, ClockType::left, 1.0);
                add(x, ClockType::right, 1.0);
            }
            break;
        case ModelKind::DeltaWest:
            for (int x = window.lo; x <= window.hi; ++x) {
                add(x, ClockType::east, 1.0);
                add(x, ClockType::west, model.delta);
            }
            break;
        case ModelKind::DFP: {
            const double rate = dfp_edge_rates(model.lambda()).r_create;
            const int last = window.topology == Topology::circle && window.size() > 2 ? window.hi : window.hi - 1;
            for (int x = window.lo; x <= last; ++x) add(x, ClockType::edge, rate);
            break;
        }
    }
    return tl;
}

namespace detail {

void check_compatible(const ModelSpec& model, const Timeline& tl) {
    if (model.kind != tl.model.kind) throw std::invalid_argument("evolve: timeline built for a different model");
    if (model.kind == ModelKind::DeltaWest && std::abs(model.delta - tl.model.delta) > 1e-12)
        throw std::invalid_argument("evolve: timeline built for a different delta");
    if (model.kind == ModelKind::DFP && std::abs(model.lambda() - tl.model.lambda()) > 1e-12 * tl.model.lambda())
        throw std::invalid_argument("evolve: timeline built for a different lambda");
}

}  // namespace detail

Trajectory evolve(const ModelSpec& model, const Configuration& eta0, const BoundaryCondition& bc,
                  const Timeline& timeline, RecordOptions record) {
    if (!(eta0.window() == timeline.window)) throw std::invalid_argument("evolve: window mismatch");
    detail::check_compatible(model, timeline);
    if (record.mode == RecordMode::snapshots && !(record.dt > 0))
        throw std::invalid_argument("evolve: snapshot spacing must be positive");
    detail::Engine eng(model, bc, eta0.window());
    eng.load(eta0);
    Trajectory tr;
    tr.initial = eta0;
    if (record.mode == RecordMode::events) tr.events.reserve(timeline.ring_count());
    std::size_t next_snap = 0;
    auto snap_time = [&](std::size_t k) { return static_cast<double>(k) * record.dt; };
    detail::Merge merge(timeline);
    while (!merge.empty()) {
        const auto [k, r] = merge.pop();
        const ClockStream& cs = timeline.streams[k];
        const Ring& ring = cs.rings[r];
        if (record.mode == RecordMode::snapshots)
            while (snap_time(next_snap) < ring.t && snap_time(next_snap) <= timeline.horizon)
                tr.snapshots.emplace_back(snap_time(next_snap++), eng.store(eta0.window()));
        bool changed = false;
        std::uint8_t ns = 0;
        const bool legal = eng.apply(cs, ring, changed, ns);
        if (record.mode == RecordMode::events) tr.events.push_back({ring.t, cs.site, cs.clock, ns, legal});
    }
    if (record.mode == RecordMode::snapshots)
        while (snap_time(next_snap) <= timeline.horizon + 1e-12)
            tr.snapshots.emplace_back(snap_time(next_snap++), eng.store(eta0.window()));
    tr.final = eng.store(eta0.window());
    return tr;
}

Configuration replay(const Trajectory& tr) {
    Configuration c = tr.initial;
    const Window& w = c.window();
    for (const auto& e : tr.events) {
        if (!e.legal) continue;
        if (e.clock == ClockType::edge) {
            const int y = (e.site == w.hi) ? w.lo : e.site + 1;
            c.set(e.site, e.new_state & 1u);
            c.set(y, (e.new_state >> 1) & 1u);
        } else {
            c.set(e.site, e.new_state != 0);
        }
    }
    return c;
}

namespace {

FrontSummary scan_fronts(const detail::Engine& eng) {
    const auto& s = eng.raw();
    FrontSummary f;
    int first = -1, last = -1;
    for (int i = 1; i <= eng.n(); ++i)
        if (!s[static_cast<std::size_t>(i)]) {
            first = i;
            break;
        }
    if (first < 0) return f;
    for (int i = eng.n(); i >= 1; --i)
        if (!s[static_cast<std::size_t>(i)]) {
            last = i;
            break;
        }
    const int xm = eng.lo() + first - 1, xp = eng.lo() + last - 1;
    f.x_minus = xm;
    f.x_plus = xp;
    f.d = xp - xm;
    f.y = std::max(std::abs(xm), std::abs(xp));
    return f;
}

}  // namespace

FrontTrace front_trace(const ModelSpec& model, const Configuration& eta0, double horizon, double sample_dt,
                       std::uint64_t seed, FrontOptions opt) {
    if (count_infections(eta0) == 0) throw std::invalid_argument("front_trace: initial configuration has no infection");
    if (!(sample_dt > 0)) throw std::invalid_argument("front_trace: sample_dt must be positive");
    if (eta0.window().topology != Topology::line) throw std::invalid_argument("front_trace: line topology only");
    const int half = static_cast<int>(std::ceil(opt.speed_bound * horizon));
    const Window w(std::min(-half, eta0.window().lo), std::max(half, eta0.window().hi));
    Configuration start = Configuration::all_healthy(w);
    for (int x = eta0.window().lo; x <= eta0.window().hi; ++x) start.set(x, eta0.get(x));

    const Timeline tl = build_timeline(model, w, horizon, seed);
    detail::Engine eng(model, opt.bc, w);
    eng.load(start);
    FrontTrace out;
    out.window = w;
    out.seed = seed;
    std::size_t k = 0;
    auto ts = [&](std::size_t i) { return static_cast<double>(i) * sample_dt; };
    detail::Merge merge(tl);
    while (!merge.empty()) {
        const auto [si, ri] = merge.pop();
        const ClockStream& cs = tl.streams[si];
        const Ring& ring = cs.rings[ri];
        while (ts(k) < ring.t && ts(k) <= horizon) out.samples.push_back({ts(k++), scan_fronts(eng)});
        bool changed = false;
        std::uint8_t ns = 0;
        eng.apply(cs, ring, changed, ns);
        if (!changed) continue;
        const bool at_edge = cs.site == w.lo || cs.site == w.hi || (cs.clock == ClockType::edge && cs.site + 1 == w.hi);
        if (at_edge && (!eng.value(w.lo) || !eng.value(w.hi))) out.edge_hit = true;
        if (eng.infections() == 0 && !out.absorbed) {
            out.absorbed = true;
            out.absorbed_at = ring.t;
        }
    }
    while (ts(k) <= horizon + 1e-12) out.samples.push_back({ts(k++), scan_fronts(eng)});
    out.final_infections = eng.infections();
    return out;
}

PersistenceEstimate persistence_estimate(const PersistenceQuery& q, unsigned workers) {
    const ModelKind k = q.model.kind;
    if (k != ModelKind::EastPolluted && k != ModelKind::East && k != ModelKind::DeltaWest && k != ModelKind::FA1f)
        throw std::invalid_argument("persistence: model must be East, East-polluted, delta-West or FA1f");
    const Window& w = q.eta0.window();
    if (q.region_lo > q.region_hi || !w.contains(q.region_lo) || !w.contains(q.region_hi))
        throw std::invalid_argument("persistence: region must lie inside the window");
    std::vector<std::uint8_t> hit(q.replicas, 0);
    auto region_healthy = [&](const detail::Engine& e) {
        for (int x = q.region_lo; x <= q.region_hi; ++x)
            if (!e.value(x)) return false;
        return true;
    };
    parallel_for(
        q.replicas,
        [&](std::size_t r) {
            const Timeline tl = build_timeline(q.model, w, q.horizon, replica_seed(q.seed, r));
            detail::Engine eng(q.model, q.bc, w);
            eng.load(q.eta0);
            bool ok = q.variant == PersistenceVariant::by_time && region_healthy(eng);
            detail::Merge merge(tl);
            while (!ok && !merge.empty()) {
                const auto [si, ri] = merge.pop();
                const ClockStream& cs = tl.streams[si];
                bool changed = false;
                std::uint8_t ns = 0;
                eng.apply(cs, cs.rings[ri], changed, ns);
                if (q.variant == PersistenceVariant::by_time && changed && cs.site + 1 >= q.region_lo &&
                    cs.site <= q.region_hi && region_healthy(eng))
                    ok = true;
            }
            if (q.variant == PersistenceVariant::at_time) ok = region_healthy(eng);
            hit[r] = ok;
        },
        workers);
    PersistenceEstimate est;
    est.replicas = q.replicas;
    for (auto h : hit) est.successes += h;
    est.estimate = q.replicas ? static_cast<double>(est.successes) / static_cast<double>(q.replicas) : 0.0;
    est.stderr_ = stats::binomial_se(est.estimate, q.replicas);
    const auto ci = stats::wilson(est.successes, q.replicas);
    est.ci_lo = ci.lo;
    est.ci_hi = ci.hi;
    est.low_replicas = q.replicas < 100;
    return est;
}

std::pair<int, int> east_region(const ModelSpec& model, int n, int search_limit) {
    if (n < 1) throw std::invalid_argument("east_region: n must be >= 1");
    if (model.kind == ModelKind::East) return {-n, 0};
    if (model.kind != ModelKind::EastPolluted) throw std::invalid_argument("east_region: East or East-polluted only");
    int found = 0;
    for (int x = -1; x >= -search_limit; --x)
        if (model.types.at(x) == SiteType::E && ++found == n) return {x, 0};
    throw std::invalid_argument("east_region: not enough East sites left of the origin");
}

}  // namespace kcm::sim
