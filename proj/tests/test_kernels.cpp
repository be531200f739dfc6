#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "kcm/kernels.hpp"
#include "kcm/rng.hpp"

using namespace kcm;

namespace {

struct RandomCsr {
    std::vector<std::int64_t> row_ptr{0};
    std::vector<std::int32_t> col;
    std::vector<double> val;
    kernels::Csr view() const { return {row_ptr.size() - 1, row_ptr.data(), col.data(), val.data()}; }
};

RandomCsr make_csr(std::size_t n, std::uint64_t seed) {
    rng::Stream s(seed, 1);
    RandomCsr m;
    for (std::size_t r = 0; r < n; ++r) {
        const int k = static_cast<int>(s() % 9);
        for (int j = 0; j < k; ++j) {
            m.col.push_back(static_cast<std::int32_t>(s() % n));
            m.val.push_back(s.unit() * 2 - 1);
        }
        m.row_ptr.push_back(static_cast<std::int64_t>(m.col.size()));
    }
    return m;
}

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    rng::Stream s(seed, 2);
    std::vector<double> v(n);
    for (auto& x : v) x = s.unit() * 4 - 2;
    return v;
}

}  // namespace

TEST_CASE("scalar kernels against direct loops") {
    const auto& k = kernels::scalar();
    const auto x = random_vec(37, 1), y = random_vec(37, 2);
    double dot = 0, l1 = 0, mx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        dot += x[i] * y[i];
        l1 += std::abs(x[i] - y[i]);
        mx = std::max(mx, std::abs(x[i]));
    }
    CHECK(k.dot(x.size(), x.data(), y.data()) == doctest::Approx(dot));
    CHECK(k.l1_distance(x.size(), x.data(), y.data()) == doctest::Approx(l1));
    CHECK(k.max_abs(x.size(), x.data()) == mx);
    auto z = y;
    k.axpy(z.size(), 0.5, x.data(), z.data());
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == doctest::Approx(y[i] + 0.5 * x[i]));
}

TEST_CASE("AVX2 kernels agree with the scalar reference") {
    const auto* v = kernels::avx2();
    if (!v) {
        MESSAGE("AVX2 not available on this CPU; skipping");
        return;
    }
    const auto& s = kernels::scalar();
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 15u, 16u, 17u, 257u, 1000u}) {
        const auto x = random_vec(n, n + 1), y = random_vec(n, n + 2), d = random_vec(n, n + 3);
        const double scale = 1e-13 * (1.0 + static_cast<double>(n));
        CHECK(std::abs(v->dot(n, x.data(), y.data()) - s.dot(n, x.data(), y.data())) <= scale);
        CHECK(std::abs(v->l1_distance(n, x.data(), y.data()) - s.l1_distance(n, x.data(), y.data())) <= scale);
        CHECK(v->max_abs(n, x.data()) == s.max_abs(n, x.data()));
        auto a = y, b = y;
        v->axpy(n, -1.25, x.data(), a.data());
        s.axpy(n, -1.25, x.data(), b.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-15));
        if (n == 0) continue;
        const auto m = make_csr(n, n);
        std::vector<double> ya(n), yb(n);
        v->spmv(m.view(), d.data(), x.data(), ya.data());
        s.spmv(m.view(), d.data(), x.data(), yb.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(ya[i] - yb[i]) <= 1e-13);
        v->spmv(m.view(), nullptr, x.data(), ya.data());
        s.spmv(m.view(), nullptr, x.data(), yb.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(ya[i] - yb[i]) <= 1e-13);
    }
}

TEST_CASE("active table is one of the two") {
    const auto& a = kernels::active();
    CHECK((a.name == kernels::scalar().name || (kernels::avx2() && a.name == kernels::avx2()->name)));
}
