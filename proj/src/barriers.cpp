#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "engine.hpp"
#include "kcm/rng.hpp"
#include "kcm/sim.hpp"

namespace kcm::sim {

double GoodPointGrid::good_fraction() const {
    if (cells.empty()) return 0.0;
    std::size_t g = 0;
    for (auto c : cells) g += c;
    return static_cast<double>(g) / static_cast<double>(cells.size());
}

GoodPointGrid good_point_grid(const Timeline& timeline, double ell) {
    if (timeline.model.kind != ModelKind::DeltaWest) throw std::invalid_argument("good_point_grid: needs West clocks");
    if (!(ell > 0)) throw std::invalid_argument("good_point_grid: ell must be positive");
    GoodPointGrid g;
    g.ell = ell;
    g.window = timeline.window;
    g.blocks = static_cast<int>(std::floor(timeline.horizon / ell + 1e-12));
    g.cells.assign(static_cast<std::size_t>(g.window.size()) * static_cast<std::size_t>(g.blocks), 1);
    for (const auto& s : timeline.streams) {
        if (s.clock != ClockType::west) continue;
        const std::size_t base = static_cast<std::size_t>(s.site - g.window.lo) * static_cast<std::size_t>(g.blocks);
        for (const auto& r : s.rings) {
            const int j = static_cast<int>(std::floor(r.t / ell));
            if (j < g.blocks) g.cells[base + static_cast<std::size_t>(j)] = 0;
        }
    }
    return g;
}

int BarrierPath::at(double s, double ell) const {
    if (columns.empty()) return start_site;
    if (s <= 0) return columns.front();
    double b = s / ell;
    long j = static_cast<long>(std::floor(b));
    if (std::abs(b - std::round(b)) < 1e-12) j = std::lround(b) - 1;
    j = std::clamp<long>(j, 0, static_cast<long>(columns.size()) - 1);
    return columns[static_cast<std::size_t>(j)];
}

std::optional<BarrierPath> find_barrier(const GoodPointGrid& grid, BarrierKind kind, int start_lo, int start_hi) {
    if (start_lo > start_hi) throw std::invalid_argument("find_barrier: empty start region");
    if (grid.blocks < 1) throw std::invalid_argument("find_barrier: grid has no complete time block");
    const Window& w = grid.window;
    start_lo = std::max(start_lo, w.lo);
    start_hi = std::min(start_hi, w.hi);
    if (start_lo > start_hi) throw std::invalid_argument("find_barrier: start region outside grid");
    const int J = grid.blocks;
    // leftmost admissible step first
    const int steps[2] = {kind == BarrierKind::ne_barrier ? 0 : -1, kind == BarrierKind::ne_barrier ? 1 : 0};
    std::vector<std::uint8_t> dead(grid.cells.size(), 0);
    auto idx = [&](int x, int j) { return static_cast<std::size_t>(x - w.lo) * static_cast<std::size_t>(J) + j; };

    struct Frame {
        int x;
        int choice;
    };
    for (int x0 = start_lo; x0 <= start_hi; ++x0) {
        if (!grid.good(x0, 0) || dead[idx(x0, 0)]) continue;
        std::vector<Frame> stack{{x0, 0}};
        while (!stack.empty()) {
            const int j = static_cast<int>(stack.size()) - 1;
            if (j == J - 1) break;
            Frame& f = stack.back();
            if (f.choice == 2) {
                dead[idx(f.x, j)] = 1;
                stack.pop_back();
                continue;
            }
            const int nx = f.x + steps[f.choice++];
            if (nx < w.lo || nx > w.hi) continue;
            if (!grid.good(nx, j + 1) || dead[idx(nx, j + 1)]) continue;
            stack.push_back({nx, 0});
        }
        if (stack.empty()) continue;
        BarrierPath p;
        p.kind = kind;
        p.start_site = x0;
        p.good = true;
        for (const auto& f : stack) p.columns.push_back(f.x);
        p.corners.emplace_back(p.columns[0], 0.0);
        for (int j = 1; j < J; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            if (p.columns[uj] == p.columns[uj - 1]) continue;
            p.corners.emplace_back(p.columns[uj - 1], j * grid.ell);
            p.corners.emplace_back(p.columns[uj], j * grid.ell);
        }
        p.corners.emplace_back(p.columns.back(), J * grid.ell);
        return p;
    }
    return std::nullopt;
}

bool barrier_is_good(const Timeline& timeline, const BarrierPath& path, double ell) {
    for (std::size_t j = 0; j < path.columns.size(); ++j) {
        const ClockStream* s = timeline.find(path.columns[j], ClockType::west);
        if (!s) continue;
        const double a = static_cast<double>(j) * ell, b = a + ell;
        for (const auto& r : s->rings)
            if (r.t >= a && r.t < b) return false;
    }
    return true;
}

int default_block_length(double delta, double good_prob) {
    if (!(delta > 0)) throw std::invalid_argument("default_block_length: delta must be positive");
    if (!(good_prob > 0 && good_prob < 1)) throw std::invalid_argument("default_block_length: good_prob in (0,1)");
    const double kappa = -std::log(good_prob);
    return std::max(1, static_cast<int>(std::floor(kappa / delta)));
}

std::size_t gate_locality_mismatches(const ModelSpec& model, const Configuration& eta0, const BoundaryCondition& bc,
                                     const Timeline& timeline, const BarrierPath& gate, double ell,
                                     std::uint64_t scramble_seed) {
    if (gate.kind != BarrierKind::nw_gate) throw std::invalid_argument("locality: expected an NW-gate");
    const double end = static_cast<double>(gate.columns.size()) * ell;
    Timeline cut = timeline;
    for (auto& s : cut.streams) {
        std::erase_if(s.rings, [&](const Ring& r) { return s.site > gate.at(r.t, ell); });
    }
    Configuration scrambled = eta0;
    for (int x = gate.at(0, ell) + 1; x <= eta0.window().hi; ++x)
        scrambled.set(x, rng::uniform(scramble_seed, static_cast<std::uint32_t>(x), 0x5C, 0) < 0.5);
    const auto full = evolve(model, eta0, bc, timeline, RecordOptions::snapshots(ell));
    const auto part = evolve(model, scrambled, bc, cut, RecordOptions::snapshots(ell));
    std::size_t bad = 0;
    for (std::size_t k = 0; k < full.snapshots.size() && k < part.snapshots.size(); ++k) {
        const double t = full.snapshots[k].first;
        if (t > end + 1e-9) break;
        const int edge = gate.at(t, ell);
        for (int x = eta0.window().lo; x <= edge; ++x)
            bad += full.snapshots[k].second.get(x) != part.snapshots[k].second.get(x);
    }
    return bad;
}

std::optional<AttractivenessWitness> find_non_attractive_witness(const ModelSpec& model, int n, double horizon,
                                                                 std::uint64_t seeds) {
    if (!model.is_vertex()) throw std::invalid_argument("attractiveness search: vertex models only");
    const Window w(0, n - 1);
    const BoundaryCondition bc{};
    for (std::uint64_t s = 0; s < seeds; ++s) {
        rng::Stream g(s, 0xA77);
        Configuration upper(w, false), lower(w, false);
        for (int x = 0; x < n; ++x) {
            const bool u = g.unit() < 0.6;
            upper.set(x, u);
            lower.set(x, u && g.unit() < 0.5);
        }
        if (upper == lower || count_infections(lower) == 0) continue;
        const Timeline tl = build_timeline(model, w, horizon, s);
        detail::Engine a(model, bc, w), b(model, bc, w);
        a.load(lower);
        b.load(upper);
        detail::Merge merge(tl);
        while (!merge.empty()) {
            const auto [si, ri] = merge.pop();
            const ClockStream& cs = tl.streams[si];
            bool ch = false;
            std::uint8_t ns = 0;
            a.apply(cs, cs.rings[ri], ch, ns);
            b.apply(cs, cs.rings[ri], ch, ns);
            bool ordered = true;
            for (int x = 0; x < n && ordered; ++x) ordered = !(a.value(x) && !b.value(x));
            if (!ordered) return AttractivenessWitness{model, s, lower, upper, cs.rings[ri].t, a.store(w), b.store(w)};
        }
    }
    return std::nullopt;
}

}  // namespace kcm::sim
