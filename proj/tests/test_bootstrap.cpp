#include <doctest.h>

#include <stdexcept>

#include <set>

#include "kcm/bootstrap.hpp"
#include "kcm/rng.hpp"

using namespace kcm;
using namespace kcm::bootstrap;

namespace {

// Naive oracle: sweep until no constraint-satisfied healthy site is left.
Configuration naive_closure(const ModelSpec& m, Configuration c, const BoundaryCondition& bc) {
    for (bool changed = true; changed;) {
        changed = false;
        for (int x = c.window().lo; x <= c.window().hi; ++x)
            if (c.get(x) && constraint_from_neighbors(m, x, site_value(c, bc, x - 1), site_value(c, bc, x + 1)) > 0) {
                c.set(x, false);
                changed = true;
            }
    }
    return c;
}

}  // namespace

TEST_CASE("closure of small East and FA1f states") {
    const auto bc = BoundaryCondition::healthy();
    const auto east = bp_closure(ModelSpec::east(0.5), Configuration::parse("1101111"), bc);
    CHECK(east.str() == "1100000");
    CHECK(*classify_stable(ModelSpec::east(0.5), east, bc) == StableDescriptor::east_step(2));
    CHECK(bp_closure(ModelSpec::fa1f(0.5), Configuration::parse("1110111"), bc).str() == "0000000");
    CHECK(bp_closure(ModelSpec::east(0.5), Configuration::parse("1111"), BoundaryCondition::infected()).str() == "0000");
    CHECK(bp_closure(ModelSpec::east(0.5), Configuration::parse("1111"), bc).str() == "1111");
    CHECK_THROWS_AS(bp_closure(ModelSpec::dfp(1.0), Configuration::parse("11"), bc), std::invalid_argument);
}

TEST_CASE("east-polluted step stops at an East site") {
    const auto m = ModelSpec::east_polluted(0.5, TypeMap::explicit_list("FFEFF", 0));
    const auto bc = BoundaryCondition::healthy();
    // an infection at site 0 spreads through F sites in both directions only where FA1f allows
    const auto c = bp_closure(m, Configuration::parse("01111"), bc);
    CHECK(c.str() == "00000");
    const auto m2 = ModelSpec::east_polluted(0.5, TypeMap::explicit_list("EFFEF", 0));
    const auto s = Configuration::parse("10000");
    REQUIRE(classify_stable(m2, s, bc).has_value());
    CHECK(*classify_stable(m2, s, bc) == StableDescriptor::east_polluted_step(3, 2));
    CHECK(materialize(StableDescriptor::east_polluted_step(3, 2), s.window()) == s);
    // a healthy F site next to an infection is not stable
    CHECK_FALSE(classify_stable(m, Configuration::parse("11000"), bc).has_value());
}

TEST_CASE("materialize inverts classify") {
    const Window w(-4, 6);
    CHECK(materialize(StableDescriptor::east_step(2), w).str() == "11111100000");
    CHECK(materialize(StableDescriptor::all_infected(ModelKind::FA1f), w).str() == "00000000000");
    CHECK(materialize(StableDescriptor::east_polluted_step(3, 2), w).str() == "11111000000");
    CHECK_THROWS(materialize(StableDescriptor{ModelKind::BABP, StableClass::other, 0, 0}, w));
}

TEST_CASE("property: closure matches the naive oracle, is idempotent, below and monotone") {
    rng::Stream s(11, 2);
    const std::vector<ModelSpec> models = {ModelSpec::fa1f(0.5), ModelSpec::east(0.5),
                                           ModelSpec::east_polluted(0.5, TypeMap::periodic("EFF")),
                                           ModelSpec::delta_west(0.5, 0.5), ModelSpec::babp(0.5)};
    for (int trial = 0; trial < 200; ++trial) {
        const auto& m = models[static_cast<std::size_t>(trial) % models.size()];
        const Window w(-6, 9);
        Configuration a(w), b(w);
        for (int x = w.lo; x <= w.hi; ++x) {
            const bool v = s.unit() < 0.85;
            a.set(x, v);
            b.set(x, v || s.unit() < 0.5);  // a <= b
        }
        const auto bc = (trial & 1) ? BoundaryCondition::healthy() : BoundaryCondition::infected();
        const auto ca = bp_closure(m, a, bc);
        CHECK(ca == naive_closure(m, a, bc));
        CHECK(bp_closure(m, ca, bc) == ca);
        CHECK(ca.below(a));
        CHECK(ca.below(bp_closure(m, b, bc)));
        CHECK(classify_stable(m, ca, bc).has_value());
        if (!(ca == a)) CHECK_FALSE(classify_stable(m, a, bc).has_value());
    }
}

TEST_CASE("spanning") {
    const auto m = ModelSpec::east(0.5);
    const auto eta = Configuration::parse("1111011111", 0);
    CHECK(internally_spans(m, eta, Window(2, 7), StableDescriptor::east_step(4)));
    CHECK_FALSE(internally_spans(m, eta, Window(5, 9), StableDescriptor::east_step(4)));
    CHECK(externally_spans(m, eta, Window(0, 9), Window(6, 8), StableDescriptor::all_infected(ModelKind::East)));
}

TEST_CASE("legal-flip components") {
    const Window w(0, 5);
    const auto count = [](const std::vector<int>& c) { return std::set<int>(c.begin(), c.end()).size(); };
    // with healthy boundary the all-healthy state is isolated and everything else is connected
    for (const auto& m : {ModelSpec::fa1f(0.5), ModelSpec::babp(0.5)}) {
        const auto c = legal_flip_components(m, w, BoundaryCondition::healthy());
        CHECK(c.size() == 64);
        CHECK(count(c) == 2);
        CHECK(c[63] != c[0]);
    }
    // East with a healthy left boundary freezes its leftmost healthy prefix: n + 1 classes
    CHECK(count(legal_flip_components(ModelSpec::east(0.5), w, BoundaryCondition::healthy())) == 7);
    CHECK(count(legal_flip_components(ModelSpec::fa1f(0.5), w, BoundaryCondition::infected())) == 1);
    CHECK(count(legal_flip_components(ModelSpec::east(0.5), w, BoundaryCondition::infected())) == 1);
    CHECK_THROWS_AS(legal_flip_components(ModelSpec::east(0.5), Window(0, 24), {}), std::invalid_argument);
}

TEST_CASE("East stationary marginals") {
    const auto m = east_stationary_marginals(StepPosition::at(1), 0.3, Window(-1, 3));
    CHECK(m == std::vector<double>{1.0, 1.0, 0.0, 0.7, 0.7});
    CHECK(east_stationary_marginals(StepPosition::minus_inf(), 0.3, Window(0, 1)) == std::vector<double>{0.7, 0.7});
    CHECK(east_stationary_marginals(StepPosition::plus_inf(), 0.3, Window(0, 1)) == std::vector<double>{1.0, 1.0});
}
