#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kcm/kernels.hpp"
#include "kcm/spectral.hpp"

namespace kcm::spectral {

namespace {

// v exp(tA) with A = offdiag(a) + diag, all exit rates <= rate.
std::vector<double> uniformize(const kernels::Csr& a, const std::vector<double>& diag, double rate,
                               std::vector<double> v, double t, double tol) {
    if (t < 0) throw std::invalid_argument("uniformization: negative time");
    if (t == 0 || rate <= 0) return v;
    const std::size_t n = v.size();
    const double m = rate * t;
    std::vector<double> out(n, 0.0), y(n);
    double cum = 0;
    const double inv = 1.0 / rate;
    for (std::size_t k = 0;; ++k) {
        const double lw = -m + static_cast<double>(k) * std::log(m) - std::lgamma(static_cast<double>(k) + 1.0);
        const double w = std::exp(lw);
        if (w > 0) kernels::axpy(n, w, v.data(), out.data());
        cum += w;
        if (static_cast<double>(k) > m && 1.0 - cum <= tol) break;
        if (k > static_cast<std::size_t>(m + 50.0 * std::sqrt(m + 1.0) + 200.0)) break;
        kernels::spmv(a, diag.data(), v.data(), y.data());
        kernels::axpy(n, inv, y.data(), v.data());
    }
    return out;
}

}  // namespace

std::vector<double> propagate(const Generator& g, const std::vector<double>& v, double t, double tol) {
    if (v.size() != g.size()) throw std::invalid_argument("propagate: vector size mismatch");
    return uniformize(g.csr_t(), g.diag, g.max_exit_rate(), v, t, tol);
}

std::vector<double> semigroup(const Generator& g, const std::vector<double>& f, double t, double tol) {
    if (f.size() != g.size()) throw std::invalid_argument("semigroup: vector size mismatch");
    return uniformize(g.csr(), g.diag, g.max_exit_rate(), f, t, tol);
}

static double tv(const std::vector<double>& a, const std::vector<double>& b) {
    return 0.5 * kernels::l1_distance(a.size(), a.data(), b.data());
}

static std::optional<double> first_crossing(const std::vector<double>& t, const std::vector<double>& d, double eps) {
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (d[i] > eps) continue;
        if (i == 0) return t[0];
        const double f = (d[i - 1] - eps) / (d[i - 1] - d[i]);
        return t[i - 1] + f * (t[i] - t[i - 1]);
    }
    return std::nullopt;
}

MixingProfile mixing_profile(const Generator& g, const MeasureVector& mu, std::size_t start,
                             const std::vector<double>& times, double eps) {
    if (start >= g.size()) throw std::invalid_argument("mixing_profile: start state out of range");
    if (!std::is_sorted(times.begin(), times.end())) throw std::invalid_argument("mixing_profile: times must be sorted");
    MixingProfile prof;
    prof.eps = eps;
    prof.times = times;
    std::vector<double> v(g.size(), 0.0);
    v[start] = 1.0;
    double now = 0;
    for (double t : times) {
        v = propagate(g, v, t - now);
        now = t;
        prof.distance.push_back(tv(v, mu.w));
    }
    prof.t_mix = first_crossing(prof.times, prof.distance, eps);
    return prof;
}

std::optional<double> mixing_time(const Generator& g, const MeasureVector& mu, std::size_t start, double eps, double dt,
                                  double t_max) {
    if (!(dt > 0)) throw std::invalid_argument("mixing_time: dt must be positive");
    std::vector<double> v(g.size(), 0.0);
    v[start] = 1.0;
    double prev_t = 0, prev_d = tv(v, mu.w);
    if (prev_d <= eps) return 0.0;
    for (double t = dt; t <= t_max + 1e-12; t += dt) {
        v = propagate(g, v, dt);
        const double d = tv(v, mu.w);
        if (d <= eps) return prev_t + (prev_d - eps) / (prev_d - d) * (t - prev_t);
        prev_t = t;
        prev_d = d;
    }
    return std::nullopt;
}

std::vector<double> hitting_time_tail(const Generator& g, const std::vector<double>& start,
                                      const std::vector<bool>& target, const std::vector<double>& times) {
    const std::size_t N = g.size();
    if (start.size() != N || target.size() != N) throw std::invalid_argument("hitting_time_tail: size mismatch");
    std::vector<std::int64_t> map(N, -1);
    std::size_t m = 0;
    for (std::size_t a = 0; a < N; ++a)
        if (!target[a]) map[a] = static_cast<std::int64_t>(m++);
    if (m == N && N > 0) {
        bool any = false;
        for (bool b : target) any = any || b;
        if (!any) throw std::invalid_argument("hitting_time_tail: empty target");
    }
    std::vector<double> out;
    if (m == 0) return std::vector<double>(times.size(), 0.0);
    // killed generator restricted to the complement, transposed for row action
    std::vector<std::int64_t> rp(m + 1, 0);
    std::vector<std::int32_t> cl;
    std::vector<double> vl, dg(m);
    std::vector<std::vector<std::pair<std::int32_t, double>>> rows(m);
    for (std::size_t a = 0; a < N; ++a) {
        if (map[a] < 0) continue;
        dg[static_cast<std::size_t>(map[a])] = g.diag[a];
        for (auto k = g.row_ptr[a]; k < g.row_ptr[a + 1]; ++k) {
            const auto b = static_cast<std::size_t>(g.col[static_cast<std::size_t>(k)]);
            if (map[b] < 0) continue;
            rows[static_cast<std::size_t>(map[b])].emplace_back(static_cast<std::int32_t>(map[a]), g.val[static_cast<std::size_t>(k)]);
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        for (auto [c, v] : rows[i]) {
            cl.push_back(c);
            vl.push_back(v);
        }
        rp[i + 1] = static_cast<std::int64_t>(cl.size());
    }
    const kernels::Csr at{m, rp.data(), cl.data(), vl.data()};
    double rate = 0;
    for (double d : dg) rate = std::max(rate, -d);
    std::vector<double> v(m);
    for (std::size_t a = 0; a < N; ++a)
        if (map[a] >= 0) v[static_cast<std::size_t>(map[a])] = start[a];
    double now = 0;
    std::vector<double> order(times);
    if (!std::is_sorted(order.begin(), order.end())) throw std::invalid_argument("hitting_time_tail: times must be sorted");
    for (double t : times) {
        v = uniformize(at, dg, rate, v, t - now, 1e-14);
        now = t;
        double s = 0;
        for (double x : v) s += x;
        out.push_back(std::max(0.0, s));
    }
    return out;
}

}  // namespace kcm::spectral
