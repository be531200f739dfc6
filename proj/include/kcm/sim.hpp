#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kcm/lattice.hpp"
#include "kcm/models.hpp"

namespace kcm::sim {

// unit: the single clock of FA1f/East/EastPolluted.
// left/right: the two unit clocks of BABP (one per neighbour term).
// east/west: the delta-West pair at rates 1 and delta.
// edge: one DFP clock per edge {x, x+1}, thinned by the edge state.
enum class ClockType : std::uint8_t { unit = 0, left = 1, right = 2, east = 3, west = 4, edge = 5 };

std::string_view clock_name(ClockType c);

struct Ring {
    double t;
    double mark;  // uniform on (0,1); coin toss is mark < p
    bool operator==(const Ring&) const = default;
};

struct ClockStream {
    int site;  // left endpoint for edge clocks
    ClockType clock;
    double rate;
    std::vector<Ring> rings;
    bool operator==(const ClockStream&) const = default;
};

struct Timeline {
    ModelSpec model;
    Window window;
    double horizon = 0;
    std::uint64_t seed = 0;
    std::vector<ClockStream> streams;

    const ClockStream* find(int site, ClockType c) const;
    std::size_t ring_count() const;
    bool same_rings(const Timeline& o) const { return window == o.window && horizon == o.horizon && streams == o.streams; }
};

Timeline build_timeline(const ModelSpec& model, const Window& window, double horizon, std::uint64_t seed);

struct Event {
    double t;
    int site;
    ClockType clock;
    std::uint8_t new_state;  // site value, or (a | b << 1) for an edge
    bool legal;
};

enum class RecordMode : std::uint8_t { events, snapshots, final_only };

struct RecordOptions {
    RecordMode mode = RecordMode::final_only;
    double dt = 1.0;  // snapshot spacing
    static RecordOptions events() { return {RecordMode::events, 0}; }
    static RecordOptions snapshots(double dt) { return {RecordMode::snapshots, dt}; }
    static RecordOptions final_only() { return {}; }
};

struct Trajectory {
    Configuration initial;
    std::vector<Event> events;
    std::vector<std::pair<double, Configuration>> snapshots;
    Configuration final;
};

Trajectory evolve(const ModelSpec& model, const Configuration& eta0, const BoundaryCondition& bc,
                  const Timeline& timeline, RecordOptions record = {});

// Applies the legal events of a trajectory to its initial state.
Configuration replay(const Trajectory& tr);

struct FrontSample {
    double t;
    FrontSummary f;
};

struct FrontTrace {
    std::vector<FrontSample> samples;
    Window window;
    std::uint64_t seed = 0;
    bool absorbed = false;  // all infections vanished
    double absorbed_at = 0;
    bool edge_hit = false;  // an infection reached the window edge
    int final_infections = 0;
};

struct FrontOptions {
    double speed_bound = 2.0;  // window [-ceil(M T), ceil(M T)]
    BoundaryCondition bc = {};
};

FrontTrace front_trace(const ModelSpec& model, const Configuration& eta0, double horizon, double sample_dt,
                       std::uint64_t seed, FrontOptions opt = {});

enum class PersistenceVariant : std::uint8_t { at_time, by_time };

struct PersistenceQuery {
    ModelSpec model;
    Configuration eta0;
    BoundaryCondition bc;
    int region_lo = 0;
    int region_hi = 0;
    double horizon = 0;
    std::size_t replicas = 1000;
    std::uint64_t seed = 0;
    PersistenceVariant variant = PersistenceVariant::at_time;
};

struct PersistenceEstimate {
    double estimate = 0;
    double stderr_ = 0;
    double ci_lo = 0;
    double ci_hi = 0;
    std::size_t successes = 0;
    std::size_t replicas = 0;
    bool low_replicas = false;
};

PersistenceEstimate persistence_estimate(const PersistenceQuery& q, unsigned workers = 0);

// [x^(n), 0]: x^(n) is the n-th East site strictly left of the origin.
std::pair<int, int> east_region(const ModelSpec& model, int n, int search_limit = 100000);

struct GoodPointGrid {
    double ell = 0;
    Window window;
    int blocks = 0;  // floor(T / ell)
    std::vector<std::uint8_t> cells;  // (x - lo) * blocks + j

    bool good(int x, int j) const { return cells[static_cast<std::size_t>(x - window.lo) * blocks + j] != 0; }
    double good_fraction() const;
};

GoodPointGrid good_point_grid(const Timeline& timeline, double ell);

enum class BarrierKind : std::uint8_t { ne_barrier, nw_gate };

struct BarrierPath {
    BarrierKind kind = BarrierKind::ne_barrier;
    int start_site = 0;
    std::vector<int> columns;                   // site occupied during time block j
    std::vector<std::pair<int, double>> corners;  // (site, time), times multiples of ell
    bool good = false;

    // Spatial coordinate at time s (left limit at multiples of ell).
    int at(double s, double ell) const;
};

std::optional<BarrierPath> find_barrier(const GoodPointGrid& grid, BarrierKind kind, int start_lo, int start_hi);

// No ring of a West clock on any vertical segment of the path.
bool barrier_is_good(const Timeline& timeline, const BarrierPath& path, double ell);

// Default block length floor(kappa / delta) with exp(-kappa) = good_prob.
int default_block_length(double delta, double good_prob = 0.8);

// Sites left of (at or below) a good NW-gate are determined by rings on the left side.
// Compares the evolution from the full timeline with one where rings right of the gate
// and initial values right of the gate are replaced. Returns number of mismatches.
std::size_t gate_locality_mismatches(const ModelSpec& model, const Configuration& eta0,
                                     const BoundaryCondition& bc, const Timeline& timeline,
                                     const BarrierPath& gate, double ell, std::uint64_t scramble_seed);

struct AttractivenessWitness {
    ModelSpec model;
    std::uint64_t seed = 0;
    Configuration lower;
    Configuration upper;
    double time = 0;
    Configuration lower_at;
    Configuration upper_at;
};

// Searches small windows for ordered initial states whose coupled evolutions lose the order.
std::optional<AttractivenessWitness> find_non_attractive_witness(const ModelSpec& model, int n, double horizon,
                                                                 std::uint64_t seeds);

}  // namespace kcm::sim
