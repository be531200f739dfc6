#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kcm/lattice.hpp"
#include "kcm/models.hpp"

namespace kcm::bootstrap {

enum class StableClass : std::uint8_t { all_healthy, all_infected, east_step, east_polluted_step, other };

struct StableDescriptor {
    ModelKind model = ModelKind::FA1f;
    StableClass cls = StableClass::all_healthy;
    int i = 0;  // step position (east_step, east_polluted_step)
    int k = 0;  // F-run length (east_polluted_step)

    static StableDescriptor all_healthy(ModelKind m) { return {m, StableClass::all_healthy, 0, 0}; }
    static StableDescriptor all_infected(ModelKind m) { return {m, StableClass::all_infected, 0, 0}; }
    static StableDescriptor east_step(int i) { return {ModelKind::East, StableClass::east_step, i, 0}; }
    static StableDescriptor east_polluted_step(int i, int k) {
        return {ModelKind::EastPolluted, StableClass::east_polluted_step, i, k};
    }
    std::string describe() const;
    bool operator==(const StableDescriptor&) const = default;
};

// The stable configuration restricted to a window.
Configuration materialize(const StableDescriptor& beta, const Window& w);

// Least fixed point of emptying constraint-satisfied sites.
Configuration bp_closure(const ModelSpec& m, const Configuration& eta, const BoundaryCondition& bc);

std::optional<StableDescriptor> classify_stable(const ModelSpec& m, const Configuration& eta,
                                                const BoundaryCondition& bc);

// BP of eta restricted to the window with filled (healthy) boundary agrees with beta there.
bool internally_spans(const ModelSpec& m, const Configuration& eta, const Window& w, const StableDescriptor& beta);

// Fill the inner window with healthy sites, run BP on the outer window, compare on the inner one.
bool externally_spans(const ModelSpec& m, const Configuration& eta, const Window& outer, const Window& inner,
                      const StableDescriptor& beta);

struct StepPosition {
    enum class Kind : std::uint8_t { minus_infinity, finite, plus_infinity } kind = Kind::finite;
    int i = 0;
    static StepPosition minus_inf() { return {Kind::minus_infinity, 0}; }
    static StepPosition plus_inf() { return {Kind::plus_infinity, 0}; }
    static StepPosition at(int i) { return {Kind::finite, i}; }
};

// Healthy-site marginals of the East stationary measure mu^(i) on the window.
std::vector<double> east_stationary_marginals(StepPosition i, double q, const Window& w);

// Connected components of the legal-flip graph over all 2^n configurations (n <= 24).
std::vector<int> legal_flip_components(const ModelSpec& m, const Window& w, const BoundaryCondition& bc);

}  // namespace kcm::bootstrap
