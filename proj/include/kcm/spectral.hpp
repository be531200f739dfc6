#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kcm/kernels.hpp"
#include "kcm/lattice.hpp"
#include "kcm/models.hpp"

namespace kcm::spectral {

enum class RestrictionKind : std::uint8_t { none, at_least_one_infection, one_infection_per_block, parity_sector };

struct Restriction {
    RestrictionKind kind = RestrictionKind::none;
    int ell = 0;  // blocks have ell + 1 sites
    Parity sector = Parity::even;

    static Restriction none() { return {}; }
    static Restriction at_least_one_infection() { return {RestrictionKind::at_least_one_infection, 0, Parity::even}; }
    static Restriction one_infection_per_block(int ell) { return {RestrictionKind::one_infection_per_block, ell, Parity::even}; }
    static Restriction parity_sector(Parity p) { return {RestrictionKind::parity_sector, 0, p}; }
    std::string describe() const;
};

class StateSpace {
public:
    ModelSpec model;
    Window window;
    BoundaryCondition bc;
    Restriction restriction;

    std::size_t size() const noexcept { return codes_.size(); }
    std::uint64_t code(std::size_t i) const { return codes_[i]; }
    // -1 when the configuration is outside the space
    std::int64_t index(std::uint64_t code) const {
        return code < index_.size() ? index_[code] : -1;
    }
    Configuration config(std::size_t i) const { return Configuration::from_code(window, codes_[i]); }
    bool contains(std::uint64_t code) const { return index(code) >= 0; }
    // Restricted chain: transitions leaving the space are suppressed rather than rejected.
    bool suppresses_exits() const noexcept { return restriction.kind == RestrictionKind::one_infection_per_block; }

private:
    friend std::shared_ptr<const StateSpace> build_state_space(const ModelSpec&, const Window&, const BoundaryCondition&,
                                                               const Restriction&, std::size_t);
    std::vector<std::uint64_t> codes_;
    std::vector<std::int32_t> index_;
};

using SpacePtr = std::shared_ptr<const StateSpace>;

struct ClosureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

SpacePtr build_state_space(const ModelSpec& model, const Window& window, const BoundaryCondition& bc,
                           const Restriction& restriction, std::size_t cap = std::size_t{1} << 20);

struct GeneratorOptions {
    std::optional<DfpEdgeRates> dfp_rates;  // override, used by mutation tests
};

// Off-diagonal rates in CSR form (rows = from-state) plus a transposed copy.
class Generator {
public:
    SpacePtr space;
    std::vector<std::int64_t> row_ptr;
    std::vector<std::int32_t> col;
    std::vector<double> val;
    std::vector<double> diag;  // -row sums
    std::vector<std::int64_t> t_row_ptr;
    std::vector<std::int32_t> t_col;
    std::vector<double> t_val;

    std::size_t size() const noexcept { return diag.size(); }
    kernels::Csr csr() const { return {size(), row_ptr.data(), col.data(), val.data()}; }
    kernels::Csr csr_t() const { return {size(), t_row_ptr.data(), t_col.data(), t_val.data()}; }
    void apply(const double* x, double* y) const { kernels::spmv(csr(), diag.data(), x, y); }       // y = L x
    void apply_left(const double* x, double* y) const { kernels::spmv(csr_t(), diag.data(), x, y); }  // y = x L
    double rate(std::size_t a, std::size_t b) const;
    double max_exit_rate() const;
};

Generator build_generator(const SpacePtr& space, const GeneratorOptions& opt = {});

struct MeasureVector {
    SpacePtr space;
    std::vector<double> w;
    double operator[](std::size_t i) const { return w[i]; }
};

// Product Bernoulli(healthy density) conditioned on the state space.
MeasureVector product_measure(const SpacePtr& space, double healthy_density);
// Product of per-site healthy probabilities conditioned on the state space.
MeasureVector product_measure(const SpacePtr& space, const std::vector<double>& healthy);
// The analytic reversible measure: pi, pi_hat^*, or the block product.
MeasureVector reference_measure(const SpacePtr& space);

struct ReducibleError : std::runtime_error {
    std::vector<std::vector<std::size_t>> classes;
    ReducibleError(const std::string& m, std::vector<std::vector<std::size_t>> c)
        : std::runtime_error(m), classes(std::move(c)) {}
};

// Strongly connected components of the transition graph.
std::vector<std::vector<std::size_t>> communicating_classes(const Generator& g);

MeasureVector stationary_vector(const Generator& g);

struct BalanceOptions {
    bool include_boundary = true;  // false: only x with x-1, x+1 inside the window
    GeneratorOptions generator;    // DFP flux form uses these rates
};

// max |c_x(z)(pi(z^x) mu(z) - pi(z) mu(z^x))| for vertex models, flux form for DFP.
double check_detailed_balance(const MeasureVector& mu, const BalanceOptions& opt = {});
// max |mu(a) L(a,b) - mu(b) L(b,a)|
double flux_violation(const Generator& g, const std::vector<double>& mu);
// max |S - S^T| for S = D^{1/2} L D^{-1/2}
double symmetrization_defect(const Generator& g, const std::vector<double>& mu);

double dirichlet_form(const Generator& g, const MeasureVector& mu, const std::vector<double>& f);
double dirichlet_form_half_sum(const Generator& g, const MeasureVector& mu, const std::vector<double>& f);
// sum_x pi(c_x Var_x f) over single-site flips (vertex models, unrestricted or closed spaces)
double dirichlet_form_site_variance(const Generator& g, const MeasureVector& mu, const std::vector<double>& f);

double entropy_f2(const std::vector<double>& mu, const std::vector<double>& f);
double variance(const std::vector<double>& mu, const std::vector<double>& f);

struct EntropyReport {
    Window lambda;
    std::vector<int> sites;
    std::vector<std::vector<double>> gamma;  // [site][zeta]
    std::vector<double> alpha;               // NaN at non-interior sites
    std::vector<double> beta;
    std::vector<bool> interior;
    double h_bulk = 0;
    double h_boundary = 0;
    std::optional<double> boundary_bound;  // for the supplied lambda0
};

// mu lives on the state-space window W; lambda must be a sub-window of W.
EntropyReport entropy_production(const MeasureVector& mu, const Window& lambda, std::optional<double> lambda0 = {});

enum class GapMethod : std::uint8_t { automatic, dense, lanczos, lopcg };

struct GapResult {
    double gap = 0;
    GapMethod method = GapMethod::automatic;
    int iterations = 0;
    double residual = 0;
    std::vector<double> eigenvector;  // in the mu-weighted (unsymmetrized) basis, when available
};

inline constexpr std::size_t kDenseLimit = std::size_t{1} << 11;

GapResult spectral_gap(const Generator& g, const MeasureVector& mu, GapMethod method = GapMethod::automatic);

struct LogSobolevOptions {
    int restarts = 24;
    std::uint64_t seed = 12345;
    int max_iter = 2000;
    std::size_t max_states = std::size_t{1} << 14;
};

struct LogSobolevResult {
    double c_sob = 0;
    double best_ratio = 0;    // best Ent/D found by the optimizer
    double gap_bound = 0;     // 2 / gap (local limit near constants)
    bool from_gap_limit = false;
    double ent = 0;           // certificate pair for the returned f
    double dir = 0;
    std::vector<double> f;
    int restarts = 0;
    int successful = 0;
};

LogSobolevResult log_sobolev_constant(const Generator& g, const MeasureVector& mu, const LogSobolevOptions& opt = {});

struct BlockChain {
    SpacePtr space;
    Generator gen;
    MeasureVector mu;
};

// delta-West on [1, N(ell+1)], infected boundary, at least one infection per block of ell+1 sites.
BlockChain restricted_block_chain(double q, int ell, int N, double delta);
LogSobolevResult restricted_block_log_sobolev(double q, int ell, int N, double delta, const LogSobolevOptions& opt = {});

// Row-vector propagation v exp(tL) by uniformization; tol bounds the dropped Poisson mass.
std::vector<double> propagate(const Generator& g, const std::vector<double>& v, double t, double tol = 1e-13);
// Column action exp(tL) f.
std::vector<double> semigroup(const Generator& g, const std::vector<double>& f, double t, double tol = 1e-13);

struct MixingProfile {
    std::vector<double> times;
    std::vector<double> distance;
    std::optional<double> t_mix;  // first crossing of eps, linearly interpolated
    double eps = 0.25;
};

MixingProfile mixing_profile(const Generator& g, const MeasureVector& mu, std::size_t start,
                             const std::vector<double>& times, double eps = 0.25);
// Steps the grid dt until d(t) <= eps (or t_max).
std::optional<double> mixing_time(const Generator& g, const MeasureVector& mu, std::size_t start, double eps,
                                  double dt, double t_max);

// P(tau_target > t) from the start distribution via the killed generator.
std::vector<double> hitting_time_tail(const Generator& g, const std::vector<double>& start,
                                      const std::vector<bool>& target, const std::vector<double>& times);

}  // namespace kcm::spectral
