#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "kcm/kernels.hpp"
#include "kcm/rng.hpp"
#include "kcm/spectral.hpp"

namespace kcm::spectral {

namespace {

// y = -S x with S = D^{1/2} L D^{-1/2}, symmetric when mu is reversible.
struct SymOp {
    const Generator& g;
    std::vector<double> sq, isq;
    mutable std::vector<double> tmp, tmp2;

    SymOp(const Generator& g_, const std::vector<double>& mu) : g(g_), sq(mu.size()), isq(mu.size()),
        tmp(mu.size()), tmp2(mu.size()) {
        for (std::size_t i = 0; i < mu.size(); ++i) {
            if (!(mu[i] > 0)) throw std::invalid_argument("spectral_gap: measure must be strictly positive");
            sq[i] = std::sqrt(mu[i]);
            isq[i] = 1.0 / sq[i];
        }
    }
    std::size_t size() const { return sq.size(); }
    void operator()(const double* x, double* y) const {
        const std::size_t n = size();
        for (std::size_t i = 0; i < n; ++i) tmp[i] = isq[i] * x[i];
        g.apply(tmp.data(), tmp2.data());
        for (std::size_t i = 0; i < n; ++i) y[i] = -sq[i] * tmp2[i];
    }
};

void deflate(std::vector<double>& x, const std::vector<double>& v0) {
    const double c = kernels::dot(x.size(), x.data(), v0.data());
    kernels::axpy(x.size(), -c, v0.data(), x.data());
}

double norm(const std::vector<double>& x) { return std::sqrt(kernels::dot(x.size(), x.data(), x.data())); }

std::vector<double> unit_v0(const SymOp& op) {
    std::vector<double> v0 = op.sq;
    const double nv = norm(v0);
    for (double& v : v0) v /= nv;
    return v0;
}

std::vector<double> random_start(std::size_t n, const std::vector<double>& v0, std::uint64_t seed) {
    rng::Stream s(seed, 0x1A2C);
    std::vector<double> x(n);
    for (double& v : x) v = s.unit() - 0.5;
    deflate(x, v0);
    const double nx = norm(x);
    for (double& v : x) v /= nx;
    return x;
}

GapResult dense_gap(const SymOp& op) {
    const std::size_t N = op.size();
    Eigen::MatrixXd S(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    std::vector<double> e(N, 0.0), col(N);
    for (std::size_t j = 0; j < N; ++j) {
        e[j] = 1.0;
        op(e.data(), col.data());
        e[j] = 0.0;
        for (std::size_t i = 0; i < N; ++i) S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    }
    const Eigen::MatrixXd Ssym = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ssym);
    if (es.info() != Eigen::Success) throw std::runtime_error("spectral_gap: dense eigensolver failed");
    GapResult r;
    r.method = GapMethod::dense;
    r.gap = es.eigenvalues()[1];
    r.eigenvector.resize(N);
    for (std::size_t i = 0; i < N; ++i) r.eigenvector[i] = es.eigenvectors()(static_cast<Eigen::Index>(i), 1) * op.isq[i];
    return r;
}

// Lanczos with full reorthogonalisation on the complement of the ground state.
GapResult lanczos_gap(const SymOp& op, double tol = 1e-12, std::size_t max_steps = 1200) {
    const std::size_t N = op.size();
    const auto v0 = unit_v0(op);
    const std::size_t m_max = std::min(max_steps, N - 1);
    std::vector<std::vector<double>> V;
    V.reserve(m_max + 1);
    V.push_back(random_start(N, v0, 7));
    std::vector<double> alpha, beta, w(N);
    GapResult r;
    r.method = GapMethod::lanczos;
    for (std::size_t j = 0; j < m_max; ++j) {
        op(V[j].data(), w.data());
        const double a = kernels::dot(N, w.data(), V[j].data());
        alpha.push_back(a);
        for (int pass = 0; pass < 2; ++pass) {
            deflate(w, v0);
            for (const auto& v : V) kernels::axpy(N, -kernels::dot(N, w.data(), v.data()), v.data(), w.data());
        }
        const double b = norm(w);
        const std::size_t m = alpha.size();
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i) {
            T(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = alpha[i];
            if (i + 1 < m) {
                T(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1)) = beta[i];
                T(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(i)) = beta[i];
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        const double theta = es.eigenvalues()[0];
        const double resid = std::abs(b * es.eigenvectors()(static_cast<Eigen::Index>(m - 1), 0));
        r.gap = theta;
        r.iterations = static_cast<int>(m);
        r.residual = resid;
        const bool done = resid <= tol * std::max(1.0, std::abs(theta)) || b < 1e-14 || m == m_max;
        if (done) {
            std::vector<double> x(N, 0.0);
            for (std::size_t i = 0; i < m; ++i)
                kernels::axpy(N, es.eigenvectors()(static_cast<Eigen::Index>(i), 0), V[i].data(), x.data());
            r.eigenvector.resize(N);
            for (std::size_t i = 0; i < N; ++i) r.eigenvector[i] = x[i] * op.isq[i];
            return r;
        }
        beta.push_back(b);
        for (double& v : w) v /= b;
        V.push_back(w);
    }
    return r;
}

// Locally optimal CG on the Rayleigh quotient restricted to the complement of v0.
GapResult lopcg_gap(const SymOp& op, double tol = 1e-11, int max_iter = 50000) {
    const std::size_t N = op.size();
    const auto v0 = unit_v0(op);
    std::vector<double> x = random_start(N, v0, 11), ax(N), r(N), p, ap(N), ar(N);
    op(x.data(), ax.data());
    double theta = kernels::dot(N, x.data(), ax.data());
    GapResult res;
    res.method = GapMethod::lopcg;
    for (int it = 0; it < max_iter; ++it) {
        for (std::size_t i = 0; i < N; ++i) r[i] = ax[i] - theta * x[i];
        deflate(r, v0);
        const double rn = norm(r);
        res.iterations = it;
        res.residual = rn;
        if (rn <= tol * std::max(1.0, std::abs(theta))) break;
        // basis [x, r, p], orthonormalised
        std::vector<std::vector<double>> B{x, r};
        if (!p.empty()) B.push_back(p);
        std::vector<std::vector<double>> Q;
        for (auto& b : B) {
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& qv : Q) kernels::axpy(N, -kernels::dot(N, b.data(), qv.data()), qv.data(), b.data());
            const double bn = norm(b);
            if (bn < 1e-13) continue;
            for (double& v : b) v /= bn;
            Q.push_back(b);
        }
        const auto k = static_cast<Eigen::Index>(Q.size());
        std::vector<std::vector<double>> AQ(Q.size(), std::vector<double>(N));
        for (std::size_t i = 0; i < Q.size(); ++i) op(Q[i].data(), AQ[i].data());
        Eigen::MatrixXd H(k, k);
        for (Eigen::Index i = 0; i < k; ++i)
            for (Eigen::Index j = 0; j < k; ++j)
                H(i, j) = kernels::dot(N, Q[static_cast<std::size_t>(i)].data(), AQ[static_cast<std::size_t>(j)].data());
        H = 0.5 * (H + H.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
        const Eigen::VectorXd c = es.eigenvectors().col(0);
        std::vector<double> xn(N, 0.0), axn(N, 0.0), pn(N, 0.0), apn(N, 0.0);
        for (Eigen::Index i = 0; i < k; ++i) {
            kernels::axpy(N, c[i], Q[static_cast<std::size_t>(i)].data(), xn.data());
            kernels::axpy(N, c[i], AQ[static_cast<std::size_t>(i)].data(), axn.data());
            if (i > 0) {
                kernels::axpy(N, c[i], Q[static_cast<std::size_t>(i)].data(), pn.data());
                kernels::axpy(N, c[i], AQ[static_cast<std::size_t>(i)].data(), apn.data());
            }
        }
        deflate(xn, v0);
        const double xnn = norm(xn);
        for (std::size_t i = 0; i < N; ++i) {
            x[i] = xn[i] / xnn;
            ax[i] = axn[i] / xnn;
        }
        p = pn;
        theta = kernels::dot(N, x.data(), ax.data());
    }
    res.gap = theta;
    res.eigenvector.resize(N);
    for (std::size_t i = 0; i < N; ++i) res.eigenvector[i] = x[i] * op.isq[i];
    return res;
}

}  // namespace

GapResult spectral_gap(const Generator& g, const MeasureVector& mu, GapMethod method) {
    if (g.size() < 2) throw std::invalid_argument("spectral_gap: needs at least two states");
    if (communicating_classes(g).size() > 1) throw ReducibleError("spectral_gap: generator is reducible", {});
    const SymOp op(g, mu.w);
    if (method == GapMethod::automatic) method = g.size() <= kDenseLimit ? GapMethod::dense : GapMethod::lanczos;
    switch (method) {
        case GapMethod::dense: return dense_gap(op);
        case GapMethod::lanczos: return lanczos_gap(op);
        case GapMethod::lopcg: return lopcg_gap(op);
        case GapMethod::automatic: break;
    }
    return dense_gap(op);
}

}  // namespace kcm::spectral
