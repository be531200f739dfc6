#include <doctest.h>

#include <stdexcept>

#include <random>

#include "kcm/lattice.hpp"
#include "kcm/rng.hpp"

using namespace kcm;

TEST_CASE("window validation and size") {
    CHECK(Window(-3, 4).size() == 8);
    CHECK(Window(2, 2).contains(2));
    CHECK_FALSE(Window(2, 2).contains(3));
    CHECK_THROWS_AS(Window(3, 2), std::invalid_argument);
}

TEST_CASE("parse, str and code round trip") {
    const auto c = Configuration::parse("0110", -1);
    CHECK(c.window() == Window(-1, 2));
    CHECK_FALSE(c.get(-1));
    CHECK(c.get(0));
    CHECK(c.get(1));
    CHECK_FALSE(c.get(2));
    CHECK(c.str() == "0110");
    CHECK(c.code() == 0b0110u);
    CHECK(Configuration::from_code(c.window(), c.code()) == c);
    CHECK_THROWS(Configuration::parse("01x"));
    CHECK_THROWS_AS(c.at(7), std::out_of_range);
}

TEST_CASE("all healthy and all infected") {
    const Window w(0, 99);
    CHECK(count_infections(Configuration::all_healthy(w)) == 0);
    CHECK(count_infections(Configuration::all_infected(w)) == 100);
    CHECK(Configuration::all_infected(w).below(Configuration::all_healthy(w)));
    CHECK_FALSE(Configuration::all_healthy(w).below(Configuration::all_infected(w)));
}

TEST_CASE("flip") {
    const auto c = Configuration::parse("000");
    CHECK(flip(c, 1).str() == "010");
    CHECK(flip(flip(c, 1), 1) == c);
    CHECK_THROWS_AS(flip(c, 3), std::out_of_range);
}

TEST_CASE("concat of adjacent windows in either order") {
    const auto a = Configuration::parse("01", 0);
    const auto b = Configuration::parse("110", 2);
    CHECK(concat(a, b).str() == "01110");
    CHECK(concat(b, a).str() == "01110");
    CHECK(concat(a, b).window() == Window(0, 4));
    CHECK_THROWS_AS(concat(a, Configuration::parse("1", 5)), std::invalid_argument);
    CHECK_THROWS_AS(concat(a, Configuration::parse("1", 1)), std::invalid_argument);
}

TEST_CASE("parity counts infections") {
    CHECK(parity(Configuration::parse("1111")) == Parity::even);
    CHECK(parity(Configuration::parse("1011")) == Parity::odd);
    CHECK(parity(Configuration::parse("0000")) == Parity::even);
    CHECK(parity_symbol(Parity::odd) == '-');
}

TEST_CASE("fronts") {
    SUBCASE("no infection") {
        const auto f = fronts(Configuration::all_healthy(Window(-4, 4)));
        CHECK_FALSE(f.x_minus.has_value());
        CHECK_FALSE(f.y.has_value());
    }
    SUBCASE("two infections") {
        const auto f = fronts(Configuration::parse("101110111", -4));  // infections at -3 and 1
        CHECK(*f.x_minus == -3);
        CHECK(*f.x_plus == 1);
        CHECK(*f.y == 3);
        CHECK(*f.d == 4);
    }
    SUBCASE("words beyond the first") {
        Configuration c = Configuration::all_healthy(Window(-100, 100));
        c.set(-70, false);
        c.set(90, false);
        const auto f = fronts(c);
        CHECK(*f.x_minus == -70);
        CHECK(*f.x_plus == 90);
        CHECK(*f.y == 90);
        CHECK(*f.d == 160);
    }
}

TEST_CASE("site_value uses boundary and wrap") {
    const auto line = Configuration::parse("10", 0);
    CHECK(site_value(line, BoundaryCondition::infected(), -1) == false);
    CHECK(site_value(line, BoundaryCondition::healthy(), 2) == true);
    const auto circ = Configuration::parse("10", 0, Topology::circle);
    CHECK(site_value(circ, BoundaryCondition::healthy(), -1) == false);  // wraps to site 1
    CHECK(site_value(circ, BoundaryCondition::infected(), 2) == true);   // wraps to site 0
}

TEST_CASE("property: packed operations agree with a naive vector") {
    rng::Stream s(99, 1);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + static_cast<int>(s() % 150);
        const int lo = static_cast<int>(s() % 40) - 20;
        Configuration c(Window(lo, lo + n - 1));
        std::vector<bool> v(static_cast<std::size_t>(n), true);
        for (int k = 0; k < 3 * n; ++k) {
            const int i = static_cast<int>(s() % static_cast<std::uint64_t>(n));
            c.toggle(lo + i);
            v[static_cast<std::size_t>(i)] = !v[static_cast<std::size_t>(i)];
        }
        int inf = 0, first = -1, last = -1;
        for (int i = 0; i < n; ++i)
            if (!v[static_cast<std::size_t>(i)]) {
                ++inf;
                if (first < 0) first = i;
                last = i;
            }
        CHECK(count_infections(c) == inf);
        const auto f = fronts(c);
        if (inf == 0) {
            CHECK_FALSE(f.x_minus.has_value());
        } else {
            CHECK(*f.x_minus == lo + first);
            CHECK(*f.x_plus == lo + last);
        }
    }
}
