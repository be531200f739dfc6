#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "kcm/lattice.hpp"

namespace kcm {

enum class ModelKind : std::uint8_t { FA1f, East, EastPolluted, DeltaWest, BABP, DFP };

std::string_view model_name(ModelKind k);
ModelKind parse_model(std::string_view s);  // case-insensitive, accepts "fa1f", "east", "east-polluted", ...

enum class SiteType : std::uint8_t { E, F };

// Site types for the East-polluted model.
class TypeMap {
public:
    TypeMap() = default;
    // pattern[(x - phase) mod len], e.g. "EFF".
    static TypeMap periodic(std::string pattern, int phase = 0);
    // Explicit per-site list starting at site lo; sites outside the list are F.
    static TypeMap explicit_list(std::string types, int lo);
    // Independent sites, East with probability rho, drawn from the seed.
    static TypeMap bernoulli(double rho, Window w, std::uint64_t seed);

    SiteType at(int x) const noexcept;
    bool empty() const noexcept { return pattern_.empty(); }
    // At least one E strictly left of the origin and one at or right of it inside w.
    bool covers_origin(const Window& w) const;
    std::string describe() const;

private:
    std::string pattern_;
    int offset_ = 0;
    bool periodic_ = true;
};

struct ModelSpec {
    ModelKind kind = ModelKind::FA1f;
    double q = 0.5;
    double delta = 0.0;
    TypeMap types;

    static ModelSpec fa1f(double q);
    static ModelSpec east(double q);
    static ModelSpec east_polluted(double q, TypeMap t);
    static ModelSpec delta_west(double q, double delta);
    static ModelSpec babp(double q);
    static ModelSpec babp_lambda(double lambda);
    static ModelSpec dfp(double lambda);

    double p() const noexcept { return 1.0 - q; }
    double lambda() const noexcept { return q / (1.0 - q); }
    bool is_vertex() const noexcept { return kind != ModelKind::DFP; }
    void validate() const;  // throws std::invalid_argument
    std::string describe() const;
};

struct DfpEdgeRates {
    double r_create = 0;      // (0,0) -> (1,1)
    double r_annihilate = 0;  // (1,1) -> (0,0)
    double r_swap = 0;        // (1,0) <-> (0,1)
    double y = 0;
    double p_hat = 0;
    double q_hat() const noexcept { return 1.0 - p_hat; }
};

DfpEdgeRates dfp_edge_rates(double lambda);

// Rate of the pair move from (a, b) at edge {x, x+1}; bits as in Configuration.
inline double dfp_pair_rate(const DfpEdgeRates& r, bool a, bool b) noexcept {
    if (a == b) return a ? r.r_annihilate : r.r_create;
    return r.r_swap;
}

double constraint_rate(const ModelSpec& m, const Configuration& eta, const BoundaryCondition& bc, int x);
double flip_rate(const ModelSpec& m, const Configuration& eta, const BoundaryCondition& bc, int x);

// Constraint from neighbour values only (l = eta_{x-1}, r = eta_{x+1}).
inline double constraint_from_neighbors(const ModelSpec& m, int x, bool l, bool r) noexcept {
    switch (m.kind) {
        case ModelKind::FA1f: return (l && r) ? 0.0 : 1.0;
        case ModelKind::East: return l ? 0.0 : 1.0;
        case ModelKind::EastPolluted:
            if (m.types.at(x) == SiteType::E) return l ? 0.0 : 1.0;
            return (l && r) ? 0.0 : 1.0;
        case ModelKind::DeltaWest: return (l ? 0.0 : 1.0) + m.delta * (r ? 0.0 : 1.0);
        case ModelKind::BABP: return 2.0 - static_cast<double>(l) - static_cast<double>(r);
        case ModelKind::DFP: break;
    }
    return 0.0;
}

// Density of healthy sites under the reversible product measure: p, or p_hat for DFP.
double equilibrium_healthy_density(const ModelSpec& m);

}  // namespace kcm
