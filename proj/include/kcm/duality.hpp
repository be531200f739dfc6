#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kcm/lattice.hpp"
#include "kcm/spectral.hpp"

namespace kcm::duality {

struct DualityParams {
    double lambda = 1;
    double y = 0;            // sqrt(1 + lambda)
    double w_in = 0;         // 1/(y+1)
    double w_out = 0;        // -1/(y-1)
    double self_weight = 0;  // -1/lambda

    static DualityParams from_lambda(double lambda);
};

// A finite set of sites, the whole window, or an independent random set.
struct SetDescriptor {
    enum class Kind : std::uint8_t { explicit_set, full, bernoulli };
    Kind kind = Kind::explicit_set;
    std::vector<int> sites;  // explicit_set only, sorted and unique
    double prob = 0;         // bernoulli: P(x in set)

    static SetDescriptor of(std::vector<int> sites);
    static SetDescriptor full() { return {Kind::full, {}, 0}; }
    static SetDescriptor bernoulli(double prob);
    std::string describe() const;
};

enum class Method : std::uint8_t { exact, monte_carlo };

struct Value {
    double value = 0;
    double stderr_ = 0;  // zero for exact evaluations
};

struct DualityReport {
    std::string identity;  // "self" or "quasi"
    Method method = Method::exact;
    double lambda = 0;
    double t = 0;
    double dfp_time = 0;  // quasi only: time at which the DFP side is read
    Window window;
    int padding = 0;
    std::vector<int> B;
    SetDescriptor other;
    Value lhs;
    Value rhs;
    std::optional<Value> single_site_form;  // quasi, D full and |B| = 1
    bool weight_unbounded = false;          // |averaged weight| >= 1 for a Bernoulli descriptor
    std::size_t replicas = 0;
    std::uint64_t seed = 0;

    double difference() const;
};

inline constexpr int kExactMaxSites = 14;

struct DualityOptions {
    Method method = Method::exact;
    std::optional<Window> window;  // default: hull of the sets padded by ceil(M t) + 4
    double speed = 2.0;            // M
    std::size_t replicas = 20000;
    std::uint64_t seed = 1;
    unsigned workers = 0;
};

// Hull of B and the explicit other set padded by ceil(M t) + 4; exact mode clips
// the padding so that the window has at most kExactMaxSites sites.
Window duality_window(const std::vector<int>& B, const SetDescriptor& other, double t, const DualityOptions& opt,
                      int* padding = nullptr);

DualityReport self_duality_sides(const std::vector<int>& B, const SetDescriptor& Bprime, double t, double lambda,
                                 const DualityOptions& opt = {});
DualityReport quasi_duality_sides(const std::vector<int>& B, const SetDescriptor& D, double t, double lambda,
                                  const DualityOptions& opt = {});

// Exact evaluations on one window, reusable across many (B, B') pairs.
class ExactDuality {
public:
    ExactDuality(double lambda, const Window& w);

    const DualityParams& params() const { return par_; }
    const Window& window() const { return w_; }

    // State vector u with u[state(B)] = E_B[(-1/lambda)^{|B(t) cap B'|}] (averaged over B' if random).
    std::vector<double> self_vector(const SetDescriptor& Bprime, double t) const;
    // u[state(B)] = E_B[H(B(t), D)] with H(B, D) = w_in^{|B cap D|} w_out^{|B \ D|}.
    std::vector<double> babp_quasi_vector(const SetDescriptor& D, double t) const;
    // v[dfp_state(D)] = E_D[H(B, D(p t))].
    std::vector<double> dfp_quasi_vector(const std::vector<int>& B, double t) const;

    // Reads a vector at a set, averaging over the descriptor when it is random.
    double babp_read(const std::vector<double>& u, const SetDescriptor& B) const;
    double dfp_read(const std::vector<double>& v, const SetDescriptor& D) const;
    // P(x in D(p t)) from D = window.
    double dfp_full_occupation(int x, double t) const;

private:
    DualityParams par_;
    Window w_;
    spectral::SpacePtr babp_space_, dfp_space_;
    spectral::Generator babp_, dfp_;
};

enum class ProbeStart : std::uint8_t { worst, configuration, stationary };

struct ErgodicityOptions {
    Parity sector = Parity::even;
    ProbeStart start = ProbeStart::worst;
    std::optional<Configuration> eta0;  // for ProbeStart::configuration, window [-(n/2), n-1-n/2]
    std::vector<double> times;          // default 0, 0.5, ..., 8
    double fit_from = 3.0;
};

struct ErgodicityTrace {
    double lambda = 0;
    int n = 0;
    Parity sector = Parity::even;
    std::vector<double> times;
    std::vector<double> trace;  // |E f(eta_t) - pi_hat(f)|, f = eta_0
    double rate = 0;            // fitted decay rate on t >= fit_from
    double intercept = 0;
    double r2 = 0;
    std::size_t fit_points = 0;
    double gap = 0;
};

ErgodicityTrace dfp_ergodicity_probe(double lambda, int n, const ErgodicityOptions& opt = {});

}  // namespace kcm::duality
