#include "kcm/lattice.hpp"

#include <bit>
#include <stdexcept>

namespace kcm {

Window::Window(int lo_, int hi_, Topology t) : lo(lo_), hi(hi_), topology(t) {
    if (lo > hi) throw std::invalid_argument("window: lo > hi");
}

Configuration::Configuration(Window w, bool healthy)
    : w_(w), words_((static_cast<std::size_t>(w.size()) + 63) / 64, healthy ? ~std::uint64_t{0} : 0) {
    clear_tail();
}

void Configuration::clear_tail() noexcept {
    const int r = size() & 63;
    if (r && !words_.empty()) words_.back() &= (std::uint64_t{1} << r) - 1;
}

Configuration Configuration::parse(std::string_view bits, int lo, Topology t) {
    if (bits.empty()) throw std::invalid_argument("configuration: empty bit string");
    Configuration c(Window(lo, lo + static_cast<int>(bits.size()) - 1, t), false);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] == '1') c.set(lo + static_cast<int>(i), true);
        else if (bits[i] != '0') throw std::invalid_argument("configuration: expected '0' or '1'");
    }
    return c;
}

Configuration Configuration::from_code(Window w, std::uint64_t code) {
    if (w.size() > 64) throw std::invalid_argument("configuration: code needs size <= 64");
    Configuration c(w, false);
    c.words_[0] = code;
    c.clear_tail();
    return c;
}

bool Configuration::at(int x) const {
    if (!w_.contains(x)) throw std::out_of_range("site " + std::to_string(x) + " outside window");
    return get(x);
}

std::uint64_t Configuration::code() const {
    if (size() > 64) throw std::logic_error("configuration: code needs size <= 64");
    return words_[0];
}

std::string Configuration::str() const {
    std::string s(static_cast<std::size_t>(size()), '0');
    for (int i = 0; i < size(); ++i)
        if (get(w_.lo + i)) s[static_cast<std::size_t>(i)] = '1';
    return s;
}

bool Configuration::below(const Configuration& other) const {
    if (!(w_ == other.w_)) throw std::invalid_argument("configuration: window mismatch");
    for (std::size_t k = 0; k < words_.size(); ++k)
        if (words_[k] & ~other.words_[k]) return false;
    return true;
}

Configuration flip(const Configuration& eta, int x) {
    if (!eta.window().contains(x)) throw std::out_of_range("flip: site " + std::to_string(x) + " outside window");
    Configuration r = eta;
    r.toggle(x);
    return r;
}

Configuration concat(const Configuration& a, const Configuration& b) {
    const Window& wa = a.window();
    const Window& wb = b.window();
    if (wa.topology != Topology::line || wb.topology != Topology::line)
        throw std::invalid_argument("concat: line windows only");
    const Window* left = &wa;
    const Configuration* first = &a;
    const Configuration* second = &b;
    if (wb.hi + 1 == wa.lo) {
        left = &wb;
        std::swap(first, second);
    } else if (wa.hi + 1 != wb.lo) {
        throw std::invalid_argument("concat: windows overlap or are not adjacent");
    }
    Configuration r(Window(left->lo, left->lo + wa.size() + wb.size() - 1), false);
    for (int x = first->window().lo; x <= first->window().hi; ++x) r.set(x, first->get(x));
    for (int x = second->window().lo; x <= second->window().hi; ++x) r.set(x, second->get(x));
    return r;
}

int count_infections(const Configuration& eta) {
    int ones = 0;
    for (auto w : eta.words()) ones += std::popcount(w);
    return eta.size() - ones;
}

Parity parity(const Configuration& eta) {
    return count_infections(eta) % 2 == 0 ? Parity::even : Parity::odd;
}

FrontSummary fronts(const Configuration& eta) {
    FrontSummary f;
    const auto words = eta.words();
    const int n = eta.size();
    const int lo = eta.window().lo;
    int first = -1, last = -1;
    for (std::size_t k = 0; k < words.size(); ++k) {
        std::uint64_t z = ~words[k];
        if (k + 1 == words.size() && (n & 63)) z &= (std::uint64_t{1} << (n & 63)) - 1;
        if (!z) continue;
        if (first < 0) first = static_cast<int>(k * 64) + std::countr_zero(z);
        last = static_cast<int>(k * 64) + 63 - std::countl_zero(z);
    }
    if (first < 0) return f;
    const int xm = lo + first, xp = lo + last;
    f.x_minus = xm;
    f.x_plus = xp;
    f.d = xp - xm;
    f.y = std::max(xp < 0 ? -xp : xp, xm < 0 ? -xm : xm);
    return f;
}

}  // namespace kcm
