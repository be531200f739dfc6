#include <doctest.h>

#include <stdexcept>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <numeric>

#include "kcm/rng.hpp"
#include "kcm/spectral.hpp"

using namespace kcm;
using namespace kcm::spectral;

namespace {

// East on one site with an infected boundary: 0 -> 1 at rate p, 1 -> 0 at rate q.
Generator two_state(double q) {
    return build_generator(build_state_space(ModelSpec::east(q), Window(0, 0), BoundaryCondition::infected(), Restriction::none()));
}

Eigen::MatrixXd dense(const Generator& g) {
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (auto k = g.row_ptr[static_cast<std::size_t>(a)]; k < g.row_ptr[static_cast<std::size_t>(a) + 1]; ++k)
            L(a, g.col[static_cast<std::size_t>(k)]) += g.val[static_cast<std::size_t>(k)];
    for (Eigen::Index a = 0; a < n; ++a) L(a, a) = -L.row(a).sum();
    return L;
}

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    rng::Stream s(seed, 4);
    std::vector<double> v(n);
    for (auto& x : v) x = s.unit() * 2 - 1;
    return v;
}

}  // namespace

TEST_CASE("two-state chain") {
    const double q = 0.3, p = 0.7;
    const auto g = two_state(q);
    REQUIRE(g.size() == 2);
    const std::size_t s0 = static_cast<std::size_t>(g.space->index(0)), s1 = static_cast<std::size_t>(g.space->index(1));
    CHECK(g.rate(s0, s1) == doctest::Approx(p));
    CHECK(g.rate(s1, s0) == doctest::Approx(q));
    const auto mu = stationary_vector(g);
    CHECK(mu[s0] == doctest::Approx(q));
    CHECK(mu[s1] == doctest::Approx(p));
    CHECK(spectral_gap(g, mu).gap == doctest::Approx(1.0));

    std::vector<double> f(2);
    f[s0] = 2.0;
    f[s1] = -1.0;
    CHECK(dirichlet_form(g, mu, f) == doctest::Approx(p * q * 9.0));
    CHECK(variance(mu.w, f) == doctest::Approx(p * q * 9.0));

    // P(t) from the infected state: healthy with probability p(1 - e^{-t})
    std::vector<double> v(2, 0.0);
    v[s0] = 1.0;
    const auto pt = propagate(g, v, 0.8);
    CHECK(pt[s1] == doctest::Approx(p * (1 - std::exp(-0.8))));

    // TV distance p e^{-t}; first crossing of eps at log(p / eps)
    const auto prof = mixing_profile(g, mu, s0, {0.0, 0.5, 1.0}, 0.25);
    CHECK(prof.distance[1] == doctest::Approx(p * std::exp(-0.5)));
    const auto tm = mixing_time(g, mu, s0, 0.25, 1e-3, 10.0);
    REQUIRE(tm.has_value());
    CHECK(*tm == doctest::Approx(std::log(p / 0.25)).epsilon(1e-3));

    // hitting the healthy state from the infected one is exponential with rate p
    std::vector<bool> target(2, false);
    target[s1] = true;
    const auto tail = hitting_time_tail(g, v, target, {0.0, 1.0, 2.5});
    CHECK(tail[0] == doctest::Approx(1.0));
    CHECK(tail[1] == doctest::Approx(std::exp(-p)));
    CHECK(tail[2] == doctest::Approx(std::exp(-2.5 * p)));
}

TEST_CASE("two-state log-Sobolev constant") {
    for (double q : {0.5, 0.3, 0.1, 0.02}) {
        const double p = 1 - q;
        const auto g = two_state(q);
        const auto mu = stationary_vector(g);
        const auto r = log_sobolev_constant(g, mu);
        const double closed = q == 0.5 ? 2.0 : std::log(p / q) / (p - q);
        CHECK(r.c_sob == doctest::Approx(closed).epsilon(1e-4));
        // independent scan over f = (1, s)
        double best = 0;
        for (int k = -4000; k <= 4000; ++k) {
            const double s = std::exp(k * 0.005);
            std::vector<double> f = {1.0, s};
            const double d = dirichlet_form(g, mu, f);
            if (d > 0) best = std::max(best, entropy_f2(mu.w, f) / d);
        }
        CHECK(r.c_sob >= best * (1 - 1e-6));
        CHECK(r.c_sob == doctest::Approx(best).epsilon(1e-3));
        CHECK(r.c_sob >= r.gap_bound * (1 - 1e-12));
    }
}

TEST_CASE("generator rows sum to zero and match detailed balance") {
    const std::vector<ModelSpec> models = {ModelSpec::fa1f(0.3), ModelSpec::east(0.6),
                                           ModelSpec::east_polluted(0.4, TypeMap::periodic("EF")),
                                           ModelSpec::delta_west(0.3, 0.4), ModelSpec::babp(0.5)};
    for (const auto& m : models) {
        const auto sp = build_state_space(m, Window(0, 6), BoundaryCondition::infected(), Restriction::none());
        const auto g = build_generator(sp);
        for (std::size_t a = 0; a < g.size(); ++a) {
            double s = g.diag[a];
            for (auto k = g.row_ptr[a]; k < g.row_ptr[a + 1]; ++k) {
                CHECK(g.val[static_cast<std::size_t>(k)] > 0);
                s += g.val[static_cast<std::size_t>(k)];
            }
            CHECK(std::abs(s) < 1e-12);
        }
        const auto mu = reference_measure(sp);
        CHECK(flux_violation(g, mu.w) < 1e-14);
        CHECK(symmetrization_defect(g, mu.w) < 1e-12);
        CHECK(check_detailed_balance(mu) < 1e-14);
        const auto st = stationary_vector(g);
        for (std::size_t a = 0; a < g.size(); ++a) CHECK(st[a] == doctest::Approx(mu[a]).epsilon(1e-9));
    }
}

TEST_CASE("DFP reference measure is stationary in each parity sector") {
    for (Parity s : {Parity::even, Parity::odd}) {
        const auto sp = build_state_space(ModelSpec::dfp(2.0), Window(0, 7), {}, Restriction::parity_sector(s));
        const auto g = build_generator(sp);
        const auto mu = reference_measure(sp);
        CHECK(flux_violation(g, mu.w) < 1e-14);
        CHECK(check_detailed_balance(mu) < 1e-14);
        for (std::size_t a = 0; a < sp->size(); ++a) CHECK(parity(sp->config(a)) == s);
    }
}

TEST_CASE("Dirichlet form variants agree") {
    const auto sp = build_state_space(ModelSpec::east(0.35), Window(0, 5), BoundaryCondition::infected(), Restriction::none());
    const auto g = build_generator(sp);
    const auto mu = reference_measure(sp);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto f = random_vec(g.size(), seed);
        const double d = dirichlet_form(g, mu, f);
        CHECK(dirichlet_form_half_sum(g, mu, f) == doctest::Approx(d));
        CHECK(dirichlet_form_site_variance(g, mu, f) == doctest::Approx(d));
        // D(f) = -<f, L f>_mu
        std::vector<double> lf(g.size());
        g.apply(f.data(), lf.data());
        double ip = 0;
        for (std::size_t a = 0; a < g.size(); ++a) ip += mu[a] * f[a] * lf[a];
        CHECK(-ip == doctest::Approx(d));
    }
}

TEST_CASE("gap methods agree") {
    const auto sp = build_state_space(ModelSpec::fa1f(0.4), Window(0, 7), BoundaryCondition::healthy(),
                                      Restriction::at_least_one_infection());
    const auto g = build_generator(sp);
    const auto mu = reference_measure(sp);
    const double dense_gap = spectral_gap(g, mu, GapMethod::dense).gap;
    CHECK(spectral_gap(g, mu, GapMethod::lanczos).gap == doctest::Approx(dense_gap).epsilon(1e-8));
    CHECK(spectral_gap(g, mu, GapMethod::lopcg).gap == doctest::Approx(dense_gap).epsilon(1e-6));
    // independent oracle: eigenvalues of the symmetrized dense matrix
    const Eigen::MatrixXd L = dense(g);
    Eigen::VectorXd s(L.rows());
    for (Eigen::Index a = 0; a < s.size(); ++a) s(a) = std::sqrt(mu[static_cast<std::size_t>(a)]);
    const Eigen::MatrixXd S = s.asDiagonal() * L * s.cwiseInverse().asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()));
    const auto ev = es.eigenvalues();
    CHECK(-ev(ev.size() - 2) == doctest::Approx(dense_gap).epsilon(1e-10));
}

TEST_CASE("propagate and semigroup against a dense matrix exponential") {
    const auto sp = build_state_space(ModelSpec::babp(0.45), Window(0, 5), BoundaryCondition::infected(), Restriction::none());
    const auto g = build_generator(sp);
    const Eigen::MatrixXd L = dense(g);
    for (double t : {0.0, 0.3, 2.0, 7.5}) {
        const Eigen::MatrixXd P = (t * L).exp();
        const auto v = random_vec(g.size(), 1);
        const auto f = random_vec(g.size(), 2);
        const auto vp = propagate(g, v, t);
        const auto sf = semigroup(g, f, t);
        const Eigen::Map<const Eigen::VectorXd> V(v.data(), static_cast<Eigen::Index>(v.size()));
        const Eigen::Map<const Eigen::VectorXd> F(f.data(), static_cast<Eigen::Index>(f.size()));
        const Eigen::VectorXd left = P.transpose() * V;
        const Eigen::VectorXd right = P * F;
        for (std::size_t a = 0; a < g.size(); ++a) {
            CHECK(std::abs(vp[a] - left(static_cast<Eigen::Index>(a))) < 1e-11);
            CHECK(std::abs(sf[a] - right(static_cast<Eigen::Index>(a))) < 1e-11);
        }
    }
}

TEST_CASE("entropy production vanishes at the reversible measure") {
    const auto sp = build_state_space(ModelSpec::east(0.4), Window(0, 7), BoundaryCondition::infected(), Restriction::none());
    const auto mu = reference_measure(sp);
    const auto rep = entropy_production(mu, Window(2, 6));
    for (std::size_t k = 0; k < rep.sites.size(); ++k)
        if (rep.interior[k]) CHECK(std::abs(rep.alpha[k]) < 1e-12);
    CHECK(std::abs(rep.h_bulk) < 1e-12);
    // a non-stationary measure produces entropy
    const auto other = product_measure(sp, 0.3);
    const auto rep2 = entropy_production(other, Window(2, 6));
    CHECK(rep2.h_bulk < -1e-6);
}

TEST_CASE("restricted block chain size") {
    for (int ell : {1, 2, 3})
        for (int N : {1, 2}) {
            const auto bc = restricted_block_chain(0.5, ell, N, 0.3);
            const auto per = static_cast<std::size_t>((1 << (ell + 1)) - 1);
            std::size_t expect = 1;
            for (int b = 0; b < N; ++b) expect *= per;
            CHECK(bc.space->size() == expect);
            CHECK(std::accumulate(bc.mu.w.begin(), bc.mu.w.end(), 0.0) == doctest::Approx(1.0));
            CHECK(flux_violation(bc.gen, bc.mu.w) < 1e-14);
        }
}

TEST_CASE("closure and reducibility errors") {
    // East with an infected left boundary can remove the last infection
    CHECK_THROWS_AS(build_state_space(ModelSpec::east(0.5), Window(0, 4), BoundaryCondition::infected(),
                                      Restriction::at_least_one_infection()),
                    ClosureError);
    // with a healthy boundary the all-healthy state is isolated
    const auto sp = build_state_space(ModelSpec::fa1f(0.5), Window(0, 4), BoundaryCondition::healthy(), Restriction::none());
    const auto g = build_generator(sp);
    CHECK(communicating_classes(g).size() == 2);
    try {
        stationary_vector(g);
        FAIL("expected ReducibleError");
    } catch (const ReducibleError& e) {
        CHECK(e.classes.size() == 2);
    }
    CHECK_THROWS_AS(spectral_gap(g, product_measure(sp, 0.5)), ReducibleError);
    CHECK_THROWS_AS(build_state_space(ModelSpec::fa1f(0.5), Window(0, 30), {}, Restriction::none(), 1 << 10),
                    std::exception);
}
