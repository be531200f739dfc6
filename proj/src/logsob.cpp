#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "kcm/rng.hpp"
#include "kcm/spectral.hpp"

namespace kcm::spectral {

namespace {

struct Problem {
    const Generator& g;
    const std::vector<double>& mu;
    std::vector<double> f, gf;

    Problem(const Generator& g_, const std::vector<double>& mu_) : g(g_), mu(mu_), f(mu_.size()), gf(mu_.size()) {}

    // Ent(f^2) and D(f,f) for an explicit f.
    std::pair<double, double> pair(const std::vector<double>& ff) const {
        double D = 0;
        for (std::size_t a = 0; a < g.size(); ++a)
            for (auto k = g.row_ptr[a]; k < g.row_ptr[a + 1]; ++k) {
                const auto b = static_cast<std::size_t>(g.col[static_cast<std::size_t>(k)]);
                const double d = ff[b] - ff[a];
                D += 0.5 * mu[a] * g.val[static_cast<std::size_t>(k)] * d * d;
            }
        return {entropy_f2(mu, ff), D};
    }

    // J(x) = log D - log Ent with f = exp(x - max x); grad optional.
    double eval(const double* x, double* grad) {
        const std::size_t n = mu.size();
        const double xm = *std::max_element(x, x + n);
        double W = 0, E = 0;
        for (std::size_t a = 0; a < n; ++a) {
            const double s = x[a] - xm;
            f[a] = std::exp(s);
            const double w = f[a] * f[a];
            W += mu[a] * w;
            E += mu[a] * w * 2.0 * s;
        }
        const double logW = std::log(W);
        const double ent = E - W * logW;
        std::fill(gf.begin(), gf.end(), 0.0);
        double D = 0;
        for (std::size_t a = 0; a < n; ++a)
            for (auto k = g.row_ptr[a]; k < g.row_ptr[a + 1]; ++k) {
                const auto b = static_cast<std::size_t>(g.col[static_cast<std::size_t>(k)]);
                const double c = mu[a] * g.val[static_cast<std::size_t>(k)];
                const double d = f[b] - f[a];
                D += 0.5 * c * d * d;
                gf[a] -= c * d;
                gf[b] += c * d;
            }
        if (!(ent > 0) || !(D > 0) || !std::isfinite(ent) || !std::isfinite(D)) {
            if (grad) std::fill(grad, grad + n, 0.0);
            return 1e10;
        }
        if (grad)
            for (std::size_t a = 0; a < n; ++a) {
                const double w = f[a] * f[a];
                const double dent = 2.0 * mu[a] * w * (2.0 * (x[a] - xm) - logW);
                const double dd = f[a] * gf[a];
                grad[a] = dd / D - dent / ent;
            }
        return std::log(D) - std::log(ent);
    }
};

double gsl_f(const gsl_vector* v, void* p) { return static_cast<Problem*>(p)->eval(v->data, nullptr); }
void gsl_df(const gsl_vector* v, void* p, gsl_vector* df) { static_cast<Problem*>(p)->eval(v->data, df->data); }
void gsl_fdf(const gsl_vector* v, void* p, double* f, gsl_vector* df) {
    *f = static_cast<Problem*>(p)->eval(v->data, df->data);
}

struct RunResult {
    double ratio = 0;
    std::vector<double> x;
    bool ok = false;
};

RunResult optimise(Problem& pb, std::vector<double> x0, int max_iter) {
    const std::size_t n = x0.size();
    gsl_multimin_function_fdf fn{gsl_f, gsl_df, gsl_fdf, n, &pb};
    gsl_vector* x = gsl_vector_alloc(n);
    for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x, i, x0[i]);
    gsl_multimin_fdfminimizer* s = gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n);
    RunResult r;
    if (gsl_multimin_fdfminimizer_set(s, &fn, x, 0.05, 0.1) == GSL_SUCCESS) {
        for (int it = 0; it < max_iter; ++it) {
            if (gsl_multimin_fdfminimizer_iterate(s) != GSL_SUCCESS) break;
            if (gsl_multimin_test_gradient(s->gradient, 1e-9) == GSL_SUCCESS) break;
        }
        const double J = s->f;
        if (J < 1e9 && std::isfinite(J)) {
            r.ok = true;
            r.ratio = std::exp(-J);
            r.x.assign(s->x->data, s->x->data + n);
        }
    }
    gsl_multimin_fdfminimizer_free(s);
    gsl_vector_free(x);
    return r;
}

}  // namespace

LogSobolevResult log_sobolev_constant(const Generator& g, const MeasureVector& mu, const LogSobolevOptions& opt) {
    const std::size_t n = g.size();
    if (n > opt.max_states) throw std::invalid_argument("log_sobolev_constant: too many states");
    if (n < 2) throw std::invalid_argument("log_sobolev_constant: needs at least two states");
    const GapResult gap = spectral_gap(g, mu);
    gsl_set_error_handler_off();
    Problem pb(g, mu.w);
    LogSobolevResult res;
    res.gap_bound = 2.0 / gap.gap;

    auto consider = [&](const std::vector<double>& f) {
        const auto [e, d] = pb.pair(f);
        if (!(e > 0 && d > 0)) return;
        const double ratio = e / d;
        if (ratio > res.best_ratio) {
            res.best_ratio = ratio;
            res.ent = e;
            res.dir = d;
            res.f = f;
        }
    };

    std::vector<std::vector<double>> starts;
    double vmax = 0;
    for (double v : gap.eigenvector) vmax = std::max(vmax, std::abs(v));
    if (vmax > 0) {
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = gap.eigenvector[i] / vmax;
            b[i] = -a[i];
        }
        starts.push_back(a);
        starts.push_back(b);
    }
    const std::size_t rare = static_cast<std::size_t>(std::min_element(mu.w.begin(), mu.w.end()) - mu.w.begin());
    std::vector<double> spike(n, 0.0);
    spike[rare] = 2.0;
    starts.push_back(spike);
    rng::Stream stream(opt.seed, 0x150B);
    std::normal_distribution<double> nd(0.0, 1.0);
    const double sigmas[3] = {0.3, 1.0, 2.5};
    for (int r = 0; r < opt.restarts; ++r) {
        std::vector<double> x(n);
        for (double& v : x) v = sigmas[r % 3] * nd(stream);
        starts.push_back(std::move(x));
    }
    for (const auto& x0 : starts) {
        ++res.restarts;
        const RunResult rr = optimise(pb, x0, opt.max_iter);
        if (!rr.ok) continue;
        ++res.successful;
        const double xm = *std::max_element(rr.x.begin(), rr.x.end());
        std::vector<double> f(n);
        for (std::size_t i = 0; i < n; ++i) f[i] = std::exp(rr.x[i] - xm);
        consider(f);
    }
    // spike limits f = 1 + a 1_s
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<double> f(n, 1.0);
        f[s] = 1e4;
        consider(f);
    }
    // local limit near constants: f = 1 + eps v2 gives Ent/D -> 2/gap
    if (vmax > 0) {
        std::vector<double> f(n);
        for (std::size_t i = 0; i < n; ++i) f[i] = 1.0 + 1e-4 * gap.eigenvector[i] / vmax;
        consider(f);
    }
    if (res.successful == 0)
        throw std::runtime_error("log_sobolev_constant: optimisation failed on all " + std::to_string(res.restarts) +
                                 " restarts (gap " + std::to_string(gap.gap) + ")");
    res.c_sob = std::max(res.best_ratio, res.gap_bound);
    res.from_gap_limit = res.gap_bound >= res.best_ratio;
    return res;
}

BlockChain restricted_block_chain(double q, int ell, int N, double delta) {
    if (ell < 1 || N < 1) throw std::invalid_argument("restricted block chain: ell and N must be >= 1");
    const Window w(1, N * (ell + 1));
    auto space = build_state_space(ModelSpec::delta_west(q, delta), w, BoundaryCondition::infected(),
                                   Restriction::one_infection_per_block(ell));
    Generator gen = build_generator(space);
    MeasureVector mu = reference_measure(space);
    return {space, std::move(gen), std::move(mu)};
}

LogSobolevResult restricted_block_log_sobolev(double q, int ell, int N, double delta, const LogSobolevOptions& opt) {
    const BlockChain bc = restricted_block_chain(q, ell, N, delta);
    return log_sobolev_constant(bc.gen, bc.mu, opt);
}

}  // namespace kcm::spectral
