#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "kcm/parallel.hpp"
#include "kcm/rng.hpp"
#include "kcm/stats.hpp"

using namespace kcm;

TEST_CASE("philox4x32-10 known-answer vectors") {
    using rng::philox4x32;
    const auto a = philox4x32({0, 0, 0, 0}, {0, 0});
    CHECK(a == rng::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    const auto b = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    CHECK(b == rng::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    const auto c = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    CHECK(c == rng::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
    static_assert(rng::philox4x32({0, 0, 0, 0}, {0, 0})[0] == 0x6627e8d5u);
}

TEST_CASE("open_unit stays inside (0,1)") {
    CHECK(rng::open_unit(0, 0) > 0.0);
    CHECK(rng::open_unit(0xffffffffu, 0xffffffffu) < 1.0);
}

TEST_CASE("streams are deterministic and distinct") {
    rng::Stream a(5, 1), b(5, 1), c(5, 2), d(6, 1);
    bool differ_c = false, differ_d = false;
    for (int i = 0; i < 20; ++i) {
        const auto x = a();
        CHECK(x == b());
        differ_c = differ_c || x != c();
        differ_d = differ_d || x != d();
    }
    CHECK(differ_c);
    CHECK(differ_d);
}

TEST_CASE("uniform moments") {
    rng::Stream s(17, 3);
    double m = 0, m2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = s.unit();
        m += u;
        m2 += u * u;
    }
    m /= n;
    m2 /= n;
    CHECK(std::abs(m - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
    CHECK(std::abs(m2 - 1.0 / 3) < 0.003);
}

TEST_CASE("replica seeds differ") {
    CHECK(replica_seed(1, 0) != replica_seed(1, 1));
    CHECK(replica_seed(1, 0) != replica_seed(2, 0));
}

TEST_CASE("parallel_for covers every index once and propagates errors") {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 4);
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(100, [](std::size_t i) { if (i == 37) throw std::runtime_error("x"); }, 3),
                    std::runtime_error);
}

TEST_CASE("wilson interval") {
    // k = 5, n = 10: classic value (0.2366, 0.7634)
    const auto w = stats::wilson(5, 10);
    CHECK(w.lo == doctest::Approx(0.2366).epsilon(1e-3));
    CHECK(w.hi == doctest::Approx(0.7634).epsilon(1e-3));
    const auto z = stats::wilson(0, 100);
    CHECK(z.lo == doctest::Approx(0.0));
    CHECK(z.hi > 0.0);
}

TEST_CASE("fit_line recovers an exact line") {
    const std::vector<double> x = {1, 2, 3, 4, 5};
    const std::vector<double> y = {3, 5, 7, 9, 11};
    const auto f = stats::fit_line(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r2 == doctest::Approx(1.0));
    CHECK(f.relative_residual == doctest::Approx(0.0));
}

TEST_CASE("quantile interpolates") {
    CHECK(stats::quantile({4, 1, 3, 2}, 0.5) == doctest::Approx(2.5));
    CHECK(stats::quantile({4, 1, 3, 2}, 0.0) == doctest::Approx(1.0));
    CHECK(stats::quantile({4, 1, 3, 2}, 1.0) == doctest::Approx(4.0));
    const auto m = stats::moments(std::vector<double>{1, 2, 3, 4});
    CHECK(m.mean == doctest::Approx(2.5));
    CHECK(m.stderr_ == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
}
