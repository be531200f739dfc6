#include <doctest.h>

#include <stdexcept>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <functional>

#include "kcm/duality.hpp"

using namespace kcm;
using namespace kcm::duality;

namespace {

// Independent dense oracles on the window [0, n-1]. A set S is stored as the
// bit mask s with bit i set iff site i is in S.

// BABP as a set process of infected sites, healthy outside: site i flips at
// rate (#infected neighbours), landing infected with probability q.
Eigen::MatrixXd babp_set_generator(int n, double lambda) {
    const double q = lambda / (1 + lambda), p = 1 - q;
    const int N = 1 << n;
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(N, N);
    for (int s = 0; s < N; ++s)
        for (int i = 0; i < n; ++i) {
            const int c = (i > 0 && (s >> (i - 1) & 1)) + (i < n - 1 && (s >> (i + 1) & 1));
            if (!c) continue;
            const bool in = s >> i & 1;
            L(s, s ^ (1 << i)) += c * (in ? p : q);
        }
    for (int s = 0; s < N; ++s) L(s, s) = -L.row(s).sum();
    return L;
}

// DFP on internal edges; a set is the set of sites holding a particle (bit 1).
Eigen::MatrixXd dfp_set_generator(int n, double lambda) {
    const double y = std::sqrt(1 + lambda);
    const double create = (y + 1) * (y + 1) / 2, annihilate = (y - 1) * (y - 1) / 2, hop = lambda / 2;
    const int N = 1 << n;
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(N, N);
    for (int s = 0; s < N; ++s)
        for (int i = 0; i + 1 < n; ++i) {
            const bool a = s >> i & 1, b = s >> (i + 1) & 1;
            const int t = s ^ (3 << i);
            if (a == b) L(s, t) += a ? annihilate : create;
            else L(s, t) += hop;
        }
    for (int s = 0; s < N; ++s) L(s, s) = -L.row(s).sum();
    return L;
}

int mask(const std::vector<int>& sites, int lo) {
    int m = 0;
    for (int x : sites) m |= 1 << (x - lo);
    return m;
}

// E_start[h(S_t)] for the given generator.
double expect(const Eigen::MatrixXd& L, double t, int start, const std::function<double(int)>& h) {
    const Eigen::MatrixXd P = (t * L).exp();
    double s = 0;
    for (int k = 0; k < L.rows(); ++k) s += P(start, k) * h(k);
    return s;
}

}  // namespace

TEST_CASE("parameters") {
    const auto d = DualityParams::from_lambda(3.0);
    CHECK(d.y == doctest::Approx(2.0));
    CHECK(d.w_in == doctest::Approx(1.0 / 3));
    CHECK(d.w_out == doctest::Approx(-1.0));
    CHECK(d.self_weight == doctest::Approx(-1.0 / 3));
    CHECK(SetDescriptor::of({3, 1, 3}).sites == std::vector<int>{1, 3});
    CHECK(SetDescriptor::of({0, 1}).describe() == "{0,1}");
    CHECK(SetDescriptor::full().describe() == "full");
    CHECK(SetDescriptor::bernoulli(0.3).describe() == "bernoulli(0.3)");
    CHECK_THROWS(SetDescriptor::bernoulli(1.5));
}

TEST_CASE("both sides at t = 0") {
    const double lambda = 2.0;
    const auto par = DualityParams::from_lambda(lambda);
    const auto self = self_duality_sides({0, 1, 2}, SetDescriptor::of({1, 2, 5}), 0.0, lambda);
    CHECK(self.lhs.value == doctest::Approx(std::pow(par.self_weight, 2)));
    CHECK(self.rhs.value == doctest::Approx(std::pow(par.self_weight, 2)));
    const auto quasi = quasi_duality_sides({0, 1, 2}, SetDescriptor::of({1, 4}), 0.0, lambda);
    const double h = par.w_in * par.w_out * par.w_out;
    CHECK(quasi.lhs.value == doctest::Approx(h));
    CHECK(quasi.rhs.value == doctest::Approx(h));
}

TEST_CASE("self-duality against a dense oracle") {
    const int n = 7;
    const Window w(0, n - 1);
    DualityOptions opt;
    opt.window = w;
    for (double lambda : {0.5, 1.0, 4.0}) {
        const Eigen::MatrixXd L = babp_set_generator(n, lambda);
        const double sw = -1.0 / lambda;
        for (double t : {0.4, 1.5}) {
            const std::vector<int> B = {2, 3}, Bp = {3, 5};
            const int b = mask(B, 0), bp = mask(Bp, 0);
            const double lhs = expect(L, t, b, [&](int s) { return std::pow(sw, std::popcount(static_cast<unsigned>(s & bp))); });
            const double rhs = expect(L, t, bp, [&](int s) { return std::pow(sw, std::popcount(static_cast<unsigned>(s & b))); });
            const auto rep = self_duality_sides(B, SetDescriptor::of(Bp), t, lambda, opt);
            CHECK(rep.lhs.value == doctest::Approx(lhs).epsilon(1e-10));
            CHECK(rep.rhs.value == doctest::Approx(rhs).epsilon(1e-10));
            CHECK(std::abs(lhs - rhs) < 1e-10);
        }
    }
}

TEST_CASE("quasi-duality against dense oracles") {
    const int n = 7;
    const Window w(0, n - 1);
    DualityOptions opt;
    opt.window = w;
    for (double lambda : {0.5, 2.0, 6.0}) {
        const auto par = DualityParams::from_lambda(lambda);
        const Eigen::MatrixXd Lb = babp_set_generator(n, lambda);
        const Eigen::MatrixXd Ld = dfp_set_generator(n, lambda);
        const std::vector<int> B = {3}, D = {2, 3, 4, 5};
        const int b = mask(B, 0), d = mask(D, 0);
        auto H = [&](int bs, int ds) {
            return std::pow(par.w_in, std::popcount(static_cast<unsigned>(bs & ds))) *
                   std::pow(par.w_out, std::popcount(static_cast<unsigned>(bs & ~ds)));
        };
        const double t = 0.9;
        const double lhs = expect(Lb, t, b, [&](int s) { return H(s, d); });
        const double rhs = expect(Ld, t / (1 + lambda), d, [&](int s) { return H(b, s); });
        const auto rep = quasi_duality_sides(B, SetDescriptor::of(D), t, lambda, opt);
        CHECK(rep.dfp_time == doctest::Approx(t / (1 + lambda)));
        CHECK(rep.lhs.value == doctest::Approx(lhs).epsilon(1e-10));
        CHECK(rep.rhs.value == doctest::Approx(rhs).epsilon(1e-10));
        CHECK(std::abs(lhs - rhs) < 1e-9);
    }
}

TEST_CASE("single-site form with D full") {
    DualityOptions opt;
    opt.window = Window(-4, 4);
    const auto rep = quasi_duality_sides({0}, SetDescriptor::full(), 1.2, 1.5, opt);
    REQUIRE(rep.single_site_form.has_value());
    CHECK(rep.single_site_form->value == doctest::Approx(rep.lhs.value).epsilon(1e-10));
    CHECK(rep.rhs.value == doctest::Approx(rep.lhs.value).epsilon(1e-10));
}

TEST_CASE("Bernoulli descriptors average the weights per site") {
    const double lambda = 1.7, rho = 0.35;
    const auto par = DualityParams::from_lambda(lambda);
    ExactDuality ex(lambda, Window(0, 6));
    const auto u = ex.self_vector(SetDescriptor::bernoulli(rho), 0.0);
    CHECK(ex.babp_read(u, SetDescriptor::of({1, 4})) ==
          doctest::Approx(std::pow(rho * par.self_weight + 1 - rho, 2)));
    const auto uq = ex.babp_quasi_vector(SetDescriptor::bernoulli(rho), 0.0);
    CHECK(ex.babp_read(uq, SetDescriptor::of({0, 2, 6})) ==
          doctest::Approx(std::pow(rho * par.w_in + (1 - rho) * par.w_out, 3)));
    // flagged when the averaged quasi weight reaches 1 in absolute value
    const auto unbounded = quasi_duality_sides({0}, SetDescriptor::bernoulli(0.1), 0.5, lambda);
    CHECK(unbounded.weight_unbounded == (std::abs(0.1 * par.w_in + 0.9 * par.w_out) >= 1));
}

TEST_CASE("Monte Carlo agrees with the exact value") {
    DualityOptions ex_opt;
    ex_opt.window = Window(-5, 5);
    const auto exact = self_duality_sides({0}, SetDescriptor::of({0, 1}), 0.7, 1.5, ex_opt);
    DualityOptions mc = ex_opt;
    mc.method = Method::monte_carlo;
    mc.replicas = 6000;
    mc.seed = 3;
    const auto est = self_duality_sides({0}, SetDescriptor::of({0, 1}), 0.7, 1.5, mc);
    CHECK(est.lhs.stderr_ > 0);
    CHECK(std::abs(est.lhs.value - exact.lhs.value) < 3.5 * est.lhs.stderr_);
    CHECK(std::abs(est.rhs.value - exact.rhs.value) < 3.5 * est.rhs.stderr_);
    // reproducible
    const auto again = self_duality_sides({0}, SetDescriptor::of({0, 1}), 0.7, 1.5, mc);
    CHECK(again.lhs.value == est.lhs.value);
}

TEST_CASE("exact values are stable under window growth") {
    DualityOptions a, b;
    a.window = Window(-4, 5);
    b.window = Window(-6, 7);
    const double t = 0.3;
    const auto ra = self_duality_sides({0, 1}, SetDescriptor::of({1}), t, 1.0, a);
    const auto rb = self_duality_sides({0, 1}, SetDescriptor::of({1}), t, 1.0, b);
    // information travels at most 4 sites with probability below the Poisson tail P(Poi(2t) >= 4)
    const double m = 2 * t * 2;
    const double tail = 1 - std::exp(-m) * (1 + m + m * m / 2 + m * m * m / 6);
    CHECK(std::abs(ra.lhs.value - rb.lhs.value) <= 4 * tail + 1e-12);
}

TEST_CASE("window padding and clipping") {
    int pad = 0;
    DualityOptions opt;
    const auto w = duality_window({0, 2}, SetDescriptor::of({1}), 1.0, opt, &pad);
    CHECK(pad == (kExactMaxSites - 3) / 2);
    CHECK(w.size() <= kExactMaxSites);
    opt.method = Method::monte_carlo;
    const auto wm = duality_window({0, 2}, SetDescriptor::of({1}), 1.0, opt, &pad);
    CHECK(pad == 6);
    CHECK(wm == Window(-6, 8));
    CHECK_THROWS_AS(duality_window({0, 20}, SetDescriptor::full(), 1.0, DualityOptions{}), std::invalid_argument);
}

TEST_CASE("ergodicity probe") {
    ErgodicityOptions opt;
    opt.start = ProbeStart::stationary;
    const auto st = dfp_ergodicity_probe(1.0, 8, opt);
    for (double v : st.trace) CHECK(std::abs(v) < 1e-12);

    opt.start = ProbeStart::worst;
    const auto tr = dfp_ergodicity_probe(1.0, 8, opt);
    CHECK(tr.gap > 0);
    CHECK(tr.rate > 0);
    CHECK(tr.trace.back() < tr.trace.front());
    // the fitted decay rate is at least the gap once transients have died out
    CHECK(tr.rate >= 0.9 * tr.gap);
    CHECK_THROWS_AS(dfp_ergodicity_probe(1.0, 16), std::invalid_argument);
}
