#include "kcm/bootstrap.hpp"

#include <deque>
#include <stdexcept>

namespace kcm::bootstrap {

std::string StableDescriptor::describe() const {
    switch (cls) {
        case StableClass::all_healthy: return "all_healthy";
        case StableClass::all_infected: return "all_infected";
        case StableClass::east_step: return "east_step(" + std::to_string(i) + ")";
        case StableClass::east_polluted_step:
            return "east_polluted_step(" + std::to_string(i) + "," + std::to_string(k) + ")";
        case StableClass::other: return "other";
    }
    return "?";
}

Configuration materialize(const StableDescriptor& beta, const Window& w) {
    Configuration c(w, true);
    for (int x = w.lo; x <= w.hi; ++x) {
        bool v = true;
        switch (beta.cls) {
            case StableClass::all_healthy: v = true; break;
            case StableClass::all_infected: v = false; break;
            case StableClass::east_step: v = x < beta.i; break;
            case StableClass::east_polluted_step: v = x < beta.i - beta.k; break;
            case StableClass::other: throw std::invalid_argument("materialize: descriptor has no closed form");
        }
        c.set(x, v);
    }
    return c;
}

Configuration bp_closure(const ModelSpec& m, const Configuration& eta, const BoundaryCondition& bc) {
    if (!m.is_vertex()) throw std::invalid_argument("bp_closure: DFP is not a vertex model");
    Configuration c = eta;
    const Window& w = c.window();
    const bool circle = w.topology == Topology::circle;
    auto wrap = [&](int x) {
        if (!circle) return x;
        const int n = w.size();
        int r = (x - w.lo) % n;
        if (r < 0) r += n;
        return w.lo + r;
    };
    std::deque<int> work;
    for (int x = w.lo; x <= w.hi; ++x) work.push_back(x);
    while (!work.empty()) {
        const int x = work.front();
        work.pop_front();
        if (!c.get(x)) continue;
        if (constraint_from_neighbors(m, x, site_value(c, bc, x - 1), site_value(c, bc, x + 1)) <= 0) continue;
        c.set(x, false);
        for (int y : {wrap(x - 1), wrap(x + 1)})
            if (w.contains(y) && c.get(y)) work.push_back(y);
    }
    return c;
}

std::optional<StableDescriptor> classify_stable(const ModelSpec& m, const Configuration& eta,
                                                const BoundaryCondition& bc) {
    if (!(bp_closure(m, eta, bc) == eta)) return std::nullopt;
    const Window& w = eta.window();
    const int zeros = count_infections(eta);
    if (zeros == 0) return StableDescriptor::all_healthy(m.kind);
    if (zeros == w.size()) return StableDescriptor::all_infected(m.kind);
    int z = w.lo;
    while (eta.get(z)) ++z;
    bool step = true;
    for (int x = z; x <= w.hi && step; ++x) step = !eta.get(x);
    if (step && m.kind == ModelKind::East) return StableDescriptor::east_step(z);
    if (step && m.kind == ModelKind::EastPolluted) {
        int i = z;
        while (i <= w.hi && m.types.at(i) != SiteType::E) ++i;
        if (i <= w.hi) return StableDescriptor::east_polluted_step(i, i - z);
    }
    return StableDescriptor{m.kind, StableClass::other, 0, 0};
}

static Configuration restrict_to(const Configuration& eta, const Window& w) {
    const Window& ew = eta.window();
    if (w.lo < ew.lo || w.hi > ew.hi) throw std::invalid_argument("window not contained in configuration window");
    Configuration c(Window(w.lo, w.hi), true);
    for (int x = w.lo; x <= w.hi; ++x) c.set(x, eta.get(x));
    return c;
}

bool internally_spans(const ModelSpec& m, const Configuration& eta, const Window& w, const StableDescriptor& beta) {
    const Configuration bp = bp_closure(m, restrict_to(eta, w), BoundaryCondition::healthy());
    return bp == materialize(beta, bp.window());
}

bool externally_spans(const ModelSpec& m, const Configuration& eta, const Window& outer, const Window& inner,
                      const StableDescriptor& beta) {
    if (inner.lo < outer.lo || inner.hi > outer.hi) throw std::invalid_argument("externally_spans: inner not inside outer");
    Configuration c = restrict_to(eta, outer);
    for (int x = inner.lo; x <= inner.hi; ++x) c.set(x, true);
    const Configuration bp = bp_closure(m, c, BoundaryCondition::healthy());
    const Window iw(inner.lo, inner.hi);
    return restrict_to(bp, iw) == materialize(beta, iw);
}

std::vector<double> east_stationary_marginals(StepPosition i, double q, const Window& w) {
    if (!(q > 0 && q < 1)) throw std::invalid_argument("east_stationary_marginals: q must lie in (0,1)");
    std::vector<double> out(static_cast<std::size_t>(w.size()));
    for (int x = w.lo; x <= w.hi; ++x) {
        double v = 1.0 - q;
        if (i.kind == StepPosition::Kind::plus_infinity) v = 1.0;
        else if (i.kind == StepPosition::Kind::finite) v = x < i.i ? 1.0 : (x == i.i ? 0.0 : 1.0 - q);
        out[static_cast<std::size_t>(x - w.lo)] = v;
    }
    return out;
}

std::vector<int> legal_flip_components(const ModelSpec& m, const Window& w, const BoundaryCondition& bc) {
    const int n = w.size();
    if (n > 24) throw std::invalid_argument("legal_flip_components: window too large");
    const std::uint64_t N = std::uint64_t{1} << n;
    std::vector<int> comp(N, -1);
    int next = 0;
    std::vector<std::uint64_t> queue;
    for (std::uint64_t s = 0; s < N; ++s) {
        if (comp[s] >= 0) continue;
        comp[s] = next;
        queue.assign(1, s);
        for (std::size_t h = 0; h < queue.size(); ++h) {
            const Configuration c = Configuration::from_code(w, queue[h]);
            for (int i = 0; i < n; ++i) {
                const int x = w.lo + i;
                if (constraint_from_neighbors(m, x, site_value(c, bc, x - 1), site_value(c, bc, x + 1)) <= 0) continue;
                const std::uint64_t t = queue[h] ^ (std::uint64_t{1} << i);
                if (comp[t] < 0) {
                    comp[t] = next;
                    queue.push_back(t);
                }
            }
        }
        ++next;
    }
    return comp;
}

}  // namespace kcm::bootstrap
