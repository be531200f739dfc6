#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "kcm/spectral.hpp"

namespace kcm::spectral {

std::string Restriction::describe() const {
    switch (kind) {
        case RestrictionKind::none: return "none";
        case RestrictionKind::at_least_one_infection: return "at_least_one_infection";
        case RestrictionKind::one_infection_per_block: return "one_infection_per_block(" + std::to_string(ell) + ")";
        case RestrictionKind::parity_sector: return std::string("parity_sector(") + parity_symbol(sector) + ")";
    }
    return "?";
}

namespace {

std::string bits_of(std::uint64_t code, int n) {
    std::string s(static_cast<std::size_t>(n), '0');
    for (int i = 0; i < n; ++i)
        if ((code >> i) & 1u) s[static_cast<std::size_t>(i)] = '1';
    return s;
}

// Visits every positive-rate move out of `code`: f(target, rate, site).
template <class F>
void for_each_move(const ModelSpec& m, const Window& w, const BoundaryCondition& bc, const DfpEdgeRates& dr,
                   std::uint64_t code, F&& f) {
    const int n = w.size();
    if (m.kind == ModelKind::DFP) {
        const int edges = w.topology == Topology::circle && n > 2 ? n : n - 1;
        for (int i = 0; i < edges; ++i) {
            const int j = (i + 1) % n;
            const bool a = (code >> i) & 1u, b = (code >> j) & 1u;
            const double r = dfp_pair_rate(dr, a, b);
            if (r <= 0) continue;
            f(code ^ ((std::uint64_t{1} << i) | (std::uint64_t{1} << j)), r, w.lo + i);
        }
        return;
    }
    const bool circle = w.topology == Topology::circle;
    const bool bl = bc.left == SiteState::healthy, br = bc.right == SiteState::healthy;
    for (int i = 0; i < n; ++i) {
        const bool l = i > 0 ? ((code >> (i - 1)) & 1u) : (circle ? ((code >> (n - 1)) & 1u) : bl);
        const bool r = i < n - 1 ? ((code >> (i + 1)) & 1u) : (circle ? (code & 1u) : br);
        const double c = constraint_from_neighbors(m, w.lo + i, l, r);
        if (c <= 0) continue;
        const bool v = (code >> i) & 1u;
        f(code ^ (std::uint64_t{1} << i), c * (v ? m.q : m.p()), w.lo + i);
    }
}

}  // namespace

SpacePtr build_state_space(const ModelSpec& model, const Window& window, const BoundaryCondition& bc,
                           const Restriction& restriction, std::size_t cap) {
    model.validate();
    const int n = window.size();
    if (n > 30 || (std::uint64_t{1} << n) > cap)
        throw std::invalid_argument("state space: 2^" + std::to_string(n) + " exceeds the configured cap");
    auto sp = std::make_shared<StateSpace>();
    sp->model = model;
    sp->window = window;
    sp->bc = bc;
    sp->restriction = restriction;
    const std::uint64_t N = std::uint64_t{1} << n;
    const std::uint64_t full = N - 1;
    std::uint64_t block_mask = 0;
    int bs = 0;
    if (restriction.kind == RestrictionKind::one_infection_per_block) {
        bs = restriction.ell + 1;
        if (restriction.ell < 0 || n % bs != 0)
            throw std::invalid_argument("state space: window size must be a multiple of the block size");
        block_mask = (std::uint64_t{1} << bs) - 1;
    }
    auto member = [&](std::uint64_t c) {
        switch (restriction.kind) {
            case RestrictionKind::none: return true;
            case RestrictionKind::at_least_one_infection: return c != full;
            case RestrictionKind::parity_sector: {
                const int zeros = n - std::popcount(c);
                return (zeros % 2 == 0) == (restriction.sector == Parity::even);
            }
            case RestrictionKind::one_infection_per_block:
                for (int b = 0; b < n; b += bs)
                    if (((c >> b) & block_mask) == block_mask) return false;
                return true;
        }
        return false;
    };
    sp->index_.assign(N, -1);
    for (std::uint64_t c = 0; c < N; ++c)
        if (member(c)) {
            sp->index_[c] = static_cast<std::int32_t>(sp->codes_.size());
            sp->codes_.push_back(c);
        }
    if (sp->codes_.empty()) throw std::invalid_argument("state space: restriction leaves no states");
    if (!sp->suppresses_exits()) {
        const DfpEdgeRates dr = model.kind == ModelKind::DFP ? dfp_edge_rates(model.lambda()) : DfpEdgeRates{};
        for (std::uint64_t c : sp->codes_)
            for_each_move(model, window, bc, dr, c, [&](std::uint64_t t, double, int site) {
                if (sp->index_[t] >= 0) return;
                std::ostringstream os;
                os << "restriction " << restriction.describe() << " not closed under " << model_name(model.kind)
                   << ": " << bits_of(c, n) << " -> " << bits_of(t, n) << " at site " << site;
                throw ClosureError(os.str());
            });
    }
    return sp;
}

double Generator::rate(std::size_t a, std::size_t b) const {
    for (auto k = row_ptr[a]; k < row_ptr[a + 1]; ++k)
        if (static_cast<std::size_t>(col[static_cast<std::size_t>(k)]) == b) return val[static_cast<std::size_t>(k)];
    return a == b ? diag[a] : 0.0;
}

double Generator::max_exit_rate() const {
    double m = 0;
    for (double d : diag) m = std::max(m, -d);
    return m;
}

Generator build_generator(const SpacePtr& space, const GeneratorOptions& opt) {
    Generator g;
    g.space = space;
    const StateSpace& sp = *space;
    const std::size_t N = sp.size();
    DfpEdgeRates dr{};
    if (sp.model.kind == ModelKind::DFP) dr = opt.dfp_rates ? *opt.dfp_rates : dfp_edge_rates(sp.model.lambda());
    g.row_ptr.assign(N + 1, 0);
    g.diag.assign(N, 0.0);
    for (std::size_t a = 0; a < N; ++a) {
        double out = 0;
        for_each_move(sp.model, sp.window, sp.bc, dr, sp.code(a), [&](std::uint64_t t, double r, int) {
            const auto b = sp.index(t);
            if (b < 0) return;  // suppressed exit of a restricted chain
            g.col.push_back(static_cast<std::int32_t>(b));
            g.val.push_back(r);
            out += r;
        });
        g.diag[a] = -out;
        g.row_ptr[a + 1] = static_cast<std::int64_t>(g.col.size());
    }
    // transpose
    g.t_row_ptr.assign(N + 1, 0);
    for (auto c : g.col) ++g.t_row_ptr[static_cast<std::size_t>(c) + 1];
    for (std::size_t i = 0; i < N; ++i) g.t_row_ptr[i + 1] += g.t_row_ptr[i];
    g.t_col.resize(g.col.size());
    g.t_val.resize(g.val.size());
    std::vector<std::int64_t> pos(g.t_row_ptr.begin(), g.t_row_ptr.end() - 1);
    for (std::size_t a = 0; a < N; ++a)
        for (auto k = g.row_ptr[a]; k < g.row_ptr[a + 1]; ++k) {
            const auto uk = static_cast<std::size_t>(k);
            const auto p = static_cast<std::size_t>(pos[static_cast<std::size_t>(g.col[uk])]++);
            g.t_col[p] = static_cast<std::int32_t>(a);
            g.t_val[p] = g.val[uk];
        }
    return g;
}

MeasureVector product_measure(const SpacePtr& space, const std::vector<double>& healthy) {
    const StateSpace& sp = *space;
    const int n = sp.window.size();
    if (static_cast<int>(healthy.size()) != n) throw std::invalid_argument("product_measure: marginal length mismatch");
    MeasureVector m{space, std::vector<double>(sp.size())};
    double z = 0;
    for (std::size_t a = 0; a < sp.size(); ++a) {
        const std::uint64_t c = sp.code(a);
        double w = 1;
        for (int i = 0; i < n; ++i) w *= ((c >> i) & 1u) ? healthy[static_cast<std::size_t>(i)] : 1.0 - healthy[static_cast<std::size_t>(i)];
        m.w[a] = w;
        z += w;
    }
    if (!(z > 0)) throw std::invalid_argument("product_measure: zero mass on the state space");
    for (double& w : m.w) w /= z;
    return m;
}

MeasureVector product_measure(const SpacePtr& space, double healthy_density) {
    return product_measure(space, std::vector<double>(static_cast<std::size_t>(space->window.size()), healthy_density));
}

MeasureVector reference_measure(const SpacePtr& space) {
    return product_measure(space, equilibrium_healthy_density(space->model));
}

std::vector<std::vector<std::size_t>> communicating_classes(const Generator& g) {
    const std::size_t N = g.size();
    std::vector<std::int64_t> index(N, -1), low(N, 0);
    std::vector<std::uint8_t> on_stack(N, 0);
    std::vector<std::size_t> stack;
    std::vector<std::vector<std::size_t>> classes;
    std::int64_t counter = 0;
    struct Frame {
        std::size_t v;
        std::int64_t k;
    };
    std::vector<Frame> call;
    for (std::size_t s = 0; s < N; ++s) {
        if (index[s] >= 0) continue;
        call.push_back({s, g.row_ptr[s]});
        index[s] = low[s] = counter++;
        stack.push_back(s);
        on_stack[s] = 1;
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.k < g.row_ptr[f.v + 1]) {
                const auto w = static_cast<std::size_t>(g.col[static_cast<std::size_t>(f.k++)]);
                if (index[w] < 0) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w, g.row_ptr[w]});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
                continue;
            }
            const std::size_t v = f.v;
            call.pop_back();
            if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
            if (low[v] == index[v]) {
                std::vector<std::size_t> cls;
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    cls.push_back(w);
                } while (w != v);
                std::sort(cls.begin(), cls.end());
                classes.push_back(std::move(cls));
            }
        }
    }
    return classes;
}

MeasureVector stationary_vector(const Generator& g) {
    const std::size_t N = g.size();
    auto classes = communicating_classes(g);
    if (classes.size() > 1) {
        std::ostringstream os;
        os << "generator is reducible: " << classes.size() << " communicating classes";
        const int n = g.space->window.size();
        for (std::size_t c = 0; c < std::min<std::size_t>(classes.size(), 8); ++c) {
            os << (c ? "; " : " [") << "{";
            for (std::size_t k = 0; k < std::min<std::size_t>(classes[c].size(), 4); ++k)
                os << (k ? "," : "") << bits_of(g.space->code(classes[c][k]), n);
            if (classes[c].size() > 4) os << ",...(" << classes[c].size() << ")";
            os << "}";
        }
        os << (classes.size() > 8 ? "; ...]" : "]");
        throw ReducibleError(os.str(), std::move(classes));
    }
    if (N == 1) return {g.space, {1.0}};
    // Solve mu L = 0 with the last equation replaced by normalization.
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(g.val.size() + 2 * N);
    const auto last = static_cast<int>(N - 1);
    for (std::size_t a = 0; a < N; ++a) {
        if (static_cast<int>(a) != last) trip.emplace_back(static_cast<int>(a), static_cast<int>(a), g.diag[a]);
        for (auto k = g.row_ptr[a]; k < g.row_ptr[a + 1]; ++k) {
            const int b = g.col[static_cast<std::size_t>(k)];
            if (b != last) trip.emplace_back(b, static_cast<int>(a), g.val[static_cast<std::size_t>(k)]);
        }
        trip.emplace_back(last, static_cast<int>(a), 1.0);
    }
    Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw std::runtime_error("stationary_vector: factorization failed");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
    rhs[last] = 1.0;
    Eigen::VectorXd x = lu.solve(rhs);
    MeasureVector m{g.space, std::vector<double>(N)};
    double z = 0;
    for (std::size_t a = 0; a < N; ++a) {
        m.w[a] = std::max(0.0, x[static_cast<Eigen::Index>(a)]);
        z += m.w[a];
    }
    for (double& w : m.w) w /= z;
    return m;
}

double flux_violation(const Generator& g, const std::vector<double>& mu) {
    double worst = 0;
    for (std::size_t a = 0; a < g.size(); ++a)
        for (auto k = g.row_ptr[a]; k < g.row_ptr[a + 1]; ++k) {
            const auto b = static_cast<std::size_t>(g.col[static_cast<std::size_t>(k)]);
            worst = std::max(worst, std::abs(mu[a] * g.val[static_cast<std::size_t>(k)] - mu[b] * g.rate(b, a)));
        }
    return worst;
}

double symmetrization_defect(const Generator& g, const std::vector<double>& mu) {
    double worst = 0;
    for (std::size_t a = 0; a < g.size(); ++a)
        for (auto k = g.row_ptr[a]; k < g.row_ptr[a + 1]; ++k) {
            const auto b = static_cast<std::size_t>(g.col[static_cast<std::size_t>(k)]);
            if (mu[a] <= 0 || mu[b] <= 0) continue;
            const double sab = std::sqrt(mu[a] / mu[b]) * g.val[static_cast<std::size_t>(k)];
            const double sba = std::sqrt(mu[b] / mu[a]) * g.rate(b, a);
            worst = std::max(worst, std::abs(sab - sba));
        }
    return worst;
}

double check_detailed_balance(const MeasureVector& mu, const BalanceOptions& opt) {
    const StateSpace& sp = *mu.space;
    if (sp.model.kind == ModelKind::DFP) {
        const Generator g = build_generator(mu.space, opt.generator);
        return flux_violation(g, mu.w);
    }
    const int n = sp.window.size();
    const double p = sp.model.p(), q = sp.model.q;
    const bool circle = sp.window.topology == Topology::circle;
    const bool bl = sp.bc.left == SiteState::healthy, br = sp.bc.right == SiteState::healthy;
    auto pi = [&](std::uint64_t c) {
        const int ones = std::popcount(c);
        return std::pow(p, ones) * std::pow(q, n - ones);
    };
    double worst = 0;
    for (std::size_t a = 0; a < sp.size(); ++a) {
        const std::uint64_t c = sp.code(a);
        for (int i = 0; i < n; ++i) {
            if (!opt.include_boundary && !circle && (i == 0 || i == n - 1)) continue;
            const bool l = i > 0 ? ((c >> (i - 1)) & 1u) : (circle ? ((c >> (n - 1)) & 1u) : bl);
            const bool r = i < n - 1 ? ((c >> (i + 1)) & 1u) : (circle ? (c & 1u) : br);
            const double cx = constraint_from_neighbors(sp.model, sp.window.lo + i, l, r);
            if (cx <= 0) continue;
            const std::uint64_t t = c ^ (std::uint64_t{1} << i);
            const auto b = sp.index(t);
            if (b < 0 && sp.suppresses_exits()) continue;
            const double mub = b < 0 ? 0.0 : mu.w[static_cast<std::size_t>(b)];
            worst = std::max(worst, std::abs(cx * (pi(t) * mu.w[a] - pi(c) * mub)));
        }
    }
    return worst;
}

static void require_reversible(const Generator& g, const MeasureVector& mu) {
    double scale = 0;
    for (std::size_t a = 0; a < g.size(); ++a) scale = std::max(scale, mu.w[a] * -g.diag[a]);
    if (flux_violation(g, mu.w) > 1e-9 * std::max(scale, 1e-300))
        throw std::invalid_argument("dirichlet_form: measure is not reversible for the generator");
}

double dirichlet_form(const Generator& g, const MeasureVector& mu, const std::vector<double>& f) {
    require_reversible(g, mu);
    std::vector<double> lf(g.size());
    g.apply(f.data(), lf.data());
    double s = 0;
    for (std::size_t a = 0; a < g.size(); ++a) s += mu.w[a] * f[a] * lf[a];
    return -s;
}

double dirichlet_form_half_sum(const Generator& g, const MeasureVector& mu, const std::vector<double>& f) {
    require_reversible(g, mu);
    double s = 0;
    for (std::size_t a = 0; a < g.size(); ++a)
        for (auto k = g.row_ptr[a]; k < g.row_ptr[a + 1]; ++k) {
            const auto b = static_cast<std::size_t>(g.col[static_cast<std::size_t>(k)]);
            const double d = f[b] - f[a];
            s += mu.w[a] * g.val[static_cast<std::size_t>(k)] * d * d;
        }
    return 0.5 * s;
}

double dirichlet_form_site_variance(const Generator& g, const MeasureVector& mu, const std::vector<double>& f) {
    const StateSpace& sp = *g.space;
    if (sp.model.kind == ModelKind::DFP) throw std::invalid_argument("site-variance form: vertex models only");
    const int n = sp.window.size();
    const double pq = sp.model.p() * sp.model.q;
    const bool circle = sp.window.topology == Topology::circle;
    const bool bl = sp.bc.left == SiteState::healthy, br = sp.bc.right == SiteState::healthy;
    double s = 0;
    for (std::size_t a = 0; a < sp.size(); ++a) {
        const std::uint64_t c = sp.code(a);
        for (int i = 0; i < n; ++i) {
            const bool l = i > 0 ? ((c >> (i - 1)) & 1u) : (circle ? ((c >> (n - 1)) & 1u) : bl);
            const bool r = i < n - 1 ? ((c >> (i + 1)) & 1u) : (circle ? (c & 1u) : br);
            const double cx = constraint_from_neighbors(sp.model, sp.window.lo + i, l, r);
            if (cx <= 0) continue;
            const auto b = sp.index(c ^ (std::uint64_t{1} << i));
            if (b < 0) continue;
            const double d = f[static_cast<std::size_t>(b)] - f[a];
            s += mu.w[a] * cx * pq * d * d;
        }
    }
    return s;
}

double entropy_f2(const std::vector<double>& mu, const std::vector<double>& f) {
    double m = 0, e = 0;
    for (std::size_t a = 0; a < mu.size(); ++a) {
        const double w = f[a] * f[a];
        m += mu[a] * w;
        if (w > 0) e += mu[a] * w * std::log(w);
    }
    return m > 0 ? e - m * std::log(m) : 0.0;
}

double variance(const std::vector<double>& mu, const std::vector<double>& f) {
    double m = 0, s = 0;
    for (std::size_t a = 0; a < mu.size(); ++a) m += mu[a] * f[a];
    for (std::size_t a = 0; a < mu.size(); ++a) s += mu[a] * (f[a] - m) * (f[a] - m);
    return s;
}

EntropyReport entropy_production(const MeasureVector& mu, const Window& lambda, std::optional<double> lambda0) {
    const StateSpace& sp = *mu.space;
    if (!sp.model.is_vertex()) throw std::invalid_argument("entropy_production: vertex models only");
    const Window& W = sp.window;
    if (lambda.lo < W.lo || lambda.hi > W.hi) throw std::invalid_argument("entropy_production: window not inside the space");
    const int n = W.size();
    const int m = lambda.size();
    const int off = lambda.lo - W.lo;
    const std::size_t Z = std::size_t{1} << m;
    const double p = sp.model.p(), q = sp.model.q;
    const bool bl = sp.bc.left == SiteState::healthy, br = sp.bc.right == SiteState::healthy;
    const bool circle = W.topology == Topology::circle;

    EntropyReport rep;
    rep.lambda = lambda;
    rep.gamma.assign(static_cast<std::size_t>(m), std::vector<double>(Z, 0.0));
    std::vector<double> marg(Z, 0.0);
    for (std::size_t a = 0; a < sp.size(); ++a) {
        const std::uint64_t c = sp.code(a);
        const std::size_t z = (c >> off) & (Z - 1);
        marg[z] += mu.w[a];
        for (int k = 0; k < m; ++k) {
            const int i = off + k;
            const bool l = i > 0 ? ((c >> (i - 1)) & 1u) : (circle ? ((c >> (n - 1)) & 1u) : bl);
            const bool r = i < n - 1 ? ((c >> (i + 1)) & 1u) : (circle ? (c & 1u) : br);
            const double cx = constraint_from_neighbors(sp.model, W.lo + i, l, r);
            const bool v = (c >> i) & 1u;
            rep.gamma[static_cast<std::size_t>(k)][z] += mu.w[a] * cx * (v ? q : p);
        }
    }
    auto pi = [&](std::size_t z) {
        const int ones = std::popcount(z);
        return std::pow(p, ones) * std::pow(q, m - ones);
    };
    const double inf = std::numeric_limits<double>::infinity();
    double boundary_beta = 0;
    for (int k = 0; k < m; ++k) {
        const auto& G = rep.gamma[static_cast<std::size_t>(k)];
        const bool interior = k >= 1 && k <= m - 2;
        double alpha = 0, beta = 0, hb = 0;
        for (std::size_t z = 0; z < Z; ++z) {
            const std::size_t zx = z ^ (std::size_t{1} << k);
            const double a = G[z], b = G[zx];
            beta += std::abs(a - b);
            if (a == b) continue;
            if (interior) alpha += (a > 0 && b > 0) ? (a - b) * std::log(a / b) : inf;
            if (!interior) {
                if (marg[z] > 0) hb += (a - b) * std::log(marg[z] / pi(z));
                else hb += (a - b) > 0 ? -inf : inf;
            }
        }
        rep.sites.push_back(lambda.lo + k);
        rep.interior.push_back(interior);
        rep.alpha.push_back(interior ? alpha : std::numeric_limits<double>::quiet_NaN());
        rep.beta.push_back(beta);
        if (interior) rep.h_bulk -= 0.5 * alpha;
        else {
            rep.h_boundary += hb;
            boundary_beta += beta;
        }
    }
    if (lambda0) {
        const double lo = std::min(p, q), hi = std::max(p, q);
        rep.boundary_bound = *lambda0 / 2.0 * boundary_beta + hi * hi / lo * 2.0 * (*lambda0) * std::exp(-*lambda0);
    }
    return rep;
}

}  // namespace kcm::spectral
