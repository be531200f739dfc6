#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kcm {

enum class Topology : std::uint8_t { line, circle };

// Inclusive integer interval [lo, hi]; circle wraps hi+1 -> lo.
struct Window {
    int lo = 0;
    int hi = 0;
    Topology topology = Topology::line;

    Window() = default;
    Window(int lo_, int hi_, Topology t = Topology::line);

    int size() const noexcept { return hi - lo + 1; }
    bool contains(int x) const noexcept { return x >= lo && x <= hi; }
    bool operator==(const Window&) const = default;
};

enum class SiteState : std::uint8_t { infected = 0, healthy = 1 };

struct BoundaryCondition {
    SiteState left = SiteState::healthy;
    SiteState right = SiteState::healthy;

    static BoundaryCondition healthy() { return {}; }
    static BoundaryCondition infected() { return {SiteState::infected, SiteState::infected}; }
    bool operator==(const BoundaryCondition&) const = default;
};

// Packed 0/1 word; bit i holds site window.lo + i. 0 = infected, 1 = healthy.
class Configuration {
public:
    Configuration() = default;
    explicit Configuration(Window w, bool healthy = true);

    static Configuration all_healthy(Window w) { return Configuration(w, true); }
    static Configuration all_infected(Window w) { return Configuration(w, false); }
    // Characters '0'/'1', first character is site lo.
    static Configuration parse(std::string_view bits, int lo = 0, Topology t = Topology::line);
    // Bit i of code is site lo + i. Requires size <= 64.
    static Configuration from_code(Window w, std::uint64_t code);

    const Window& window() const noexcept { return w_; }
    int size() const noexcept { return w_.size(); }

    bool at(int x) const;  // range checked
    bool get(int x) const noexcept {
        const unsigned i = static_cast<unsigned>(x - w_.lo);
        return (words_[i >> 6] >> (i & 63)) & 1u;
    }
    void set(int x, bool v) noexcept {
        const unsigned i = static_cast<unsigned>(x - w_.lo);
        const std::uint64_t m = std::uint64_t{1} << (i & 63);
        if (v) words_[i >> 6] |= m; else words_[i >> 6] &= ~m;
    }
    void toggle(int x) noexcept {
        const unsigned i = static_cast<unsigned>(x - w_.lo);
        words_[i >> 6] ^= std::uint64_t{1} << (i & 63);
    }

    std::uint64_t code() const;  // size <= 64
    std::string str() const;
    std::span<const std::uint64_t> words() const noexcept { return words_; }

    // Pointwise eta <= other (same window).
    bool below(const Configuration& other) const;

    bool operator==(const Configuration&) const = default;

private:
    Window w_;
    std::vector<std::uint64_t> words_;
    void clear_tail() noexcept;
};

// State of site x seen from inside the window: in-window value, wrap on circle, bc on line.
inline bool site_value(const Configuration& eta, const BoundaryCondition& bc, int x) noexcept {
    const Window& w = eta.window();
    if (x >= w.lo && x <= w.hi) return eta.get(x);
    if (w.topology == Topology::circle) {
        const int n = w.size();
        int r = (x - w.lo) % n;
        if (r < 0) r += n;
        return eta.get(w.lo + r);
    }
    return x < w.lo ? bc.left == SiteState::healthy : bc.right == SiteState::healthy;
}

Configuration flip(const Configuration& eta, int x);
Configuration concat(const Configuration& a, const Configuration& b);
int count_infections(const Configuration& eta);

enum class Parity : std::uint8_t { even, odd };
Parity parity(const Configuration& eta);
inline char parity_symbol(Parity p) { return p == Parity::even ? '+' : '-'; }

struct FrontSummary {
    std::optional<int> x_minus;
    std::optional<int> x_plus;
    std::optional<int> y;
    std::optional<int> d;
    bool operator==(const FrontSummary&) const = default;
};

FrontSummary fronts(const Configuration& eta);

}  // namespace kcm
