#include "kcm/models.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "kcm/rng.hpp"

namespace kcm {

std::string_view model_name(ModelKind k) {
    switch (k) {
        case ModelKind::FA1f: return "fa1f";
        case ModelKind::East: return "east";
        case ModelKind::EastPolluted: return "east-polluted";
        case ModelKind::DeltaWest: return "delta-west";
        case ModelKind::BABP: return "babp";
        case ModelKind::DFP: return "dfp";
    }
    return "?";
}

ModelKind parse_model(std::string_view s) {
    std::string t;
    for (char c : s)
        if (c != '-' && c != '_') t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (t == "fa1f") return ModelKind::FA1f;
    if (t == "east") return ModelKind::East;
    if (t == "eastpolluted") return ModelKind::EastPolluted;
    if (t == "deltawest" || t == "west") return ModelKind::DeltaWest;
    if (t == "babp") return ModelKind::BABP;
    if (t == "dfp") return ModelKind::DFP;
    throw std::invalid_argument("unknown model '" + std::string(s) + "'");
}

static std::string check_types(std::string s) {
    for (char& c : s) {
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (c != 'E' && c != 'F') throw std::invalid_argument("type map: expected 'E' or 'F'");
    }
    if (s.empty()) throw std::invalid_argument("type map: empty");
    return s;
}

TypeMap TypeMap::periodic(std::string pattern, int phase) {
    TypeMap t;
    t.pattern_ = check_types(std::move(pattern));
    t.offset_ = phase;
    t.periodic_ = true;
    return t;
}

TypeMap TypeMap::explicit_list(std::string types, int lo) {
    TypeMap t;
    t.pattern_ = check_types(std::move(types));
    t.offset_ = lo;
    t.periodic_ = false;
    return t;
}

TypeMap TypeMap::bernoulli(double rho, Window w, std::uint64_t seed) {
    if (!(rho > 0 && rho < 1)) throw std::invalid_argument("type map: rho must lie in (0,1)");
    std::string s(static_cast<std::size_t>(w.size()), 'F');
    for (int i = 0; i < w.size(); ++i) {
        // stream 0xE7 reserved for type maps
        const double u = rng::uniform(seed, static_cast<std::uint32_t>(w.lo + i), 0xE7u, 0);
        if (u < rho) s[static_cast<std::size_t>(i)] = 'E';
    }
    return explicit_list(std::move(s), w.lo);
}

SiteType TypeMap::at(int x) const noexcept {
    if (pattern_.empty()) return SiteType::E;
    const int n = static_cast<int>(pattern_.size());
    int i = x - offset_;
    if (periodic_) {
        i %= n;
        if (i < 0) i += n;
    } else if (i < 0 || i >= n) {
        return SiteType::F;
    }
    return pattern_[static_cast<std::size_t>(i)] == 'E' ? SiteType::E : SiteType::F;
}

bool TypeMap::covers_origin(const Window& w) const {
    bool left = false, right = false;
    for (int x = w.lo; x <= w.hi; ++x) {
        if (at(x) != SiteType::E) continue;
        if (x < 0) left = true; else right = true;
    }
    return left && right;
}

std::string TypeMap::describe() const {
    if (pattern_.empty()) return "all-E";
    return (periodic_ ? "periodic:" : "list@" + std::to_string(offset_) + ":") + pattern_;
}

ModelSpec ModelSpec::fa1f(double q) { return {ModelKind::FA1f, q, 0.0, {}}; }
ModelSpec ModelSpec::east(double q) { return {ModelKind::East, q, 0.0, {}}; }
ModelSpec ModelSpec::east_polluted(double q, TypeMap t) { return {ModelKind::EastPolluted, q, 0.0, std::move(t)}; }
ModelSpec ModelSpec::delta_west(double q, double delta) { return {ModelKind::DeltaWest, q, delta, {}}; }
ModelSpec ModelSpec::babp(double q) { return {ModelKind::BABP, q, 0.0, {}}; }
ModelSpec ModelSpec::babp_lambda(double lambda) { return {ModelKind::BABP, lambda / (1.0 + lambda), 0.0, {}}; }
ModelSpec ModelSpec::dfp(double lambda) {
    if (!(lambda > 0)) throw std::invalid_argument("dfp: lambda must be positive");
    return {ModelKind::DFP, lambda / (1.0 + lambda), 0.0, {}};
}

void ModelSpec::validate() const {
    if (!(q > 0 && q < 1)) throw std::invalid_argument("q must lie in (0,1)");
    if (kind == ModelKind::DeltaWest && !(delta >= 0 && delta <= 1))
        throw std::invalid_argument("delta must lie in [0,1]");
    if (kind == ModelKind::EastPolluted && types.empty())
        throw std::invalid_argument("east-polluted model needs a type map");
}

std::string ModelSpec::describe() const {
    std::ostringstream os;
    os << model_name(kind) << "(q=" << q;
    if (kind == ModelKind::DeltaWest) os << ",delta=" << delta;
    if (kind == ModelKind::DFP || kind == ModelKind::BABP) os << ",lambda=" << lambda();
    if (kind == ModelKind::EastPolluted) os << ",types=" << types.describe();
    os << ")";
    return os.str();
}

DfpEdgeRates dfp_edge_rates(double lambda) {
    if (!(lambda > 0) || !std::isfinite(lambda)) throw std::invalid_argument("dfp: lambda must be positive");
    DfpEdgeRates r;
    r.y = std::sqrt(1.0 + lambda);
    r.r_create = (r.y + 1.0) * (r.y + 1.0) / 2.0;
    // (y-1)^2 = lambda^2/(y+1)^2 avoids cancellation for small lambda
    const double ym1 = lambda / (r.y + 1.0);
    r.r_annihilate = ym1 * ym1 / 2.0;
    r.r_swap = lambda / 2.0;
    r.p_hat = (r.y + 1.0) / (2.0 * r.y);
    return r;
}

double constraint_rate(const ModelSpec& m, const Configuration& eta, const BoundaryCondition& bc, int x) {
    if (m.kind == ModelKind::DFP) throw std::invalid_argument("constraint_rate: DFP is an edge process");
    if (!eta.window().contains(x)) throw std::out_of_range("constraint_rate: site outside window");
    return constraint_from_neighbors(m, x, site_value(eta, bc, x - 1), site_value(eta, bc, x + 1));
}

double flip_rate(const ModelSpec& m, const Configuration& eta, const BoundaryCondition& bc, int x) {
    const double c = constraint_rate(m, eta, bc, x);
    return c * (eta.get(x) ? m.q : m.p());
}

double equilibrium_healthy_density(const ModelSpec& m) {
    if (m.kind == ModelKind::DFP) return dfp_edge_rates(m.lambda()).p_hat;
    return m.p();
}

}  // namespace kcm
