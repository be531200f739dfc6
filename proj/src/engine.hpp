#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "kcm/models.hpp"
#include "kcm/sim.hpp"

namespace kcm::sim::detail {

// Mutable padded state: s[0] and s[n+1] hold boundary (or wrapped) values.
class Engine {
public:
    Engine(const ModelSpec& m, const BoundaryCondition& bc, const Window& w)
        : m_(m), lo_(w.lo), n_(w.size()), circle_(w.topology == Topology::circle),
          p_(m.p()), s_(static_cast<std::size_t>(w.size()) + 2, 1) {
        if (m.kind == ModelKind::DFP) dr_ = dfp_edge_rates(m.lambda());
        if (!circle_) {
            s_[0] = bc.left == SiteState::healthy;
            s_[static_cast<std::size_t>(n_) + 1] = bc.right == SiteState::healthy;
        }
    }

    void load(const Configuration& eta) {
        for (int i = 0; i < n_; ++i) s_[static_cast<std::size_t>(i) + 1] = eta.get(lo_ + i);
        infections_ = 0;
        for (int i = 1; i <= n_; ++i) infections_ += !s_[static_cast<std::size_t>(i)];
        sync();
    }

    Configuration store(const Window& w) const {
        Configuration c(w, false);
        for (int i = 0; i < n_; ++i)
            if (s_[static_cast<std::size_t>(i) + 1]) c.set(lo_ + i, true);
        return c;
    }

    bool value(int x) const { return s_[static_cast<std::size_t>(x - lo_ + 1)] != 0; }
    int infections() const { return infections_; }
    int lo() const { return lo_; }
    int n() const { return n_; }
    const std::vector<std::uint8_t>& raw() const { return s_; }

    // Applies one ring. Returns legality; `changed` reports whether any site changed.
    bool apply(const ClockStream& cs, const Ring& r, bool& changed, std::uint8_t& new_state) {
        const std::size_t i = static_cast<std::size_t>(cs.site - lo_ + 1);
        changed = false;
        if (cs.clock == ClockType::edge) {
            const std::size_t j = (circle_ && i == static_cast<std::size_t>(n_)) ? 1 : i + 1;
            const bool a = s_[i], b = s_[j];
            const double rate = dfp_pair_rate(dr_, a, b);
            const bool legal = r.mark * cs.rate < rate;
            std::uint8_t na = a, nb = b;
            if (legal) {
                if (a == b) {
                    na = nb = !a;
                    infections_ += a ? 2 : -2;
                } else {
                    na = b;
                    nb = a;
                }
                changed = true;
                s_[i] = na;
                s_[j] = nb;
                sync_at(i);
                sync_at(j);
            }
            new_state = static_cast<std::uint8_t>(na | (nb << 1));
            return legal;
        }
        bool legal = false;
        switch (cs.clock) {
            case ClockType::unit:
                legal = constraint_from_neighbors(m_, cs.site, s_[i - 1], s_[i + 1]) > 0;
                break;
            case ClockType::left:
            case ClockType::east: legal = !s_[i - 1]; break;
            case ClockType::right:
            case ClockType::west: legal = !s_[i + 1]; break;
            case ClockType::edge: break;
        }
        const std::uint8_t v = s_[i];
        if (!legal) {
            new_state = v;
            return false;
        }
        const std::uint8_t nv = r.mark < p_;
        new_state = nv;
        if (nv != v) {
            changed = true;
            s_[i] = nv;
            infections_ += nv ? -1 : 1;
            sync_at(i);
        }
        return true;
    }

private:
    void sync() {
        if (!circle_) return;
        s_[0] = s_[static_cast<std::size_t>(n_)];
        s_[static_cast<std::size_t>(n_) + 1] = s_[1];
    }
    void sync_at(std::size_t i) {
        if (circle_ && (i == 1 || i == static_cast<std::size_t>(n_))) sync();
    }

    ModelSpec m_;
    int lo_;
    int n_;
    bool circle_;
    double p_;
    DfpEdgeRates dr_{};
    std::vector<std::uint8_t> s_;
    int infections_ = 0;
};

// k-way merge over per-clock ring streams in global time order.
class Merge {
public:
    explicit Merge(const Timeline& tl) : tl_(tl), pos_(tl.streams.size(), 0) {
        for (std::size_t k = 0; k < tl.streams.size(); ++k)
            if (!tl.streams[k].rings.empty()) heap_.push({tl.streams[k].rings[0].t, k});
    }

    bool empty() const { return heap_.empty(); }
    double peek() const { return heap_.top().first; }

    // Pops the next ring; returns stream index and ring index.
    std::pair<std::size_t, std::size_t> pop() {
        const auto [t, k] = heap_.top();
        heap_.pop();
        const std::size_t r = pos_[k]++;
        if (pos_[k] < tl_.streams[k].rings.size()) heap_.push({tl_.streams[k].rings[pos_[k]].t, k});
        return {k, r};
    }

private:
    using Item = std::pair<double, std::size_t>;
    const Timeline& tl_;
    std::vector<std::size_t> pos_;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap_;
};

void check_compatible(const ModelSpec& model, const Timeline& tl);

}  // namespace kcm::sim::detail
