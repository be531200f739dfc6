#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "kcm/models.hpp"

using namespace kcm;

TEST_CASE("parse_model names") {
    CHECK(parse_model("FA1f") == ModelKind::FA1f);
    CHECK(parse_model("east") == ModelKind::East);
    CHECK(parse_model("east-polluted") == ModelKind::EastPolluted);
    CHECK(parse_model("delta-west") == ModelKind::DeltaWest);
    CHECK(parse_model("BABP") == ModelKind::BABP);
    CHECK(parse_model("dfp") == ModelKind::DFP);
    CHECK_THROWS_AS(parse_model("ising"), std::invalid_argument);
}

TEST_CASE("constraints from the neighbour table") {
    const auto fa = ModelSpec::fa1f(0.3);
    CHECK(constraint_from_neighbors(fa, 0, true, true) == 0.0);
    CHECK(constraint_from_neighbors(fa, 0, false, true) == 1.0);
    CHECK(constraint_from_neighbors(fa, 0, true, false) == 1.0);
    CHECK(constraint_from_neighbors(fa, 0, false, false) == 1.0);

    const auto e = ModelSpec::east(0.3);
    CHECK(constraint_from_neighbors(e, 0, false, true) == 1.0);
    CHECK(constraint_from_neighbors(e, 0, true, false) == 0.0);

    const auto dw = ModelSpec::delta_west(0.3, 0.25);
    CHECK(constraint_from_neighbors(dw, 0, false, false) == doctest::Approx(1.25));
    CHECK(constraint_from_neighbors(dw, 0, true, false) == doctest::Approx(0.25));
    CHECK(constraint_from_neighbors(dw, 0, false, true) == doctest::Approx(1.0));

    const auto b = ModelSpec::babp(0.3);
    CHECK(constraint_from_neighbors(b, 0, false, false) == 2.0);
    CHECK(constraint_from_neighbors(b, 0, true, false) == 1.0);
    CHECK(constraint_from_neighbors(b, 0, true, true) == 0.0);
}

TEST_CASE("delta-west interpolates east and babp") {
    for (bool l : {false, true})
        for (bool r : {false, true}) {
            CHECK(constraint_from_neighbors(ModelSpec::delta_west(0.4, 0.0), 0, l, r) ==
                  constraint_from_neighbors(ModelSpec::east(0.4), 0, l, r));
            CHECK(constraint_from_neighbors(ModelSpec::delta_west(0.4, 1.0), 0, l, r) ==
                  constraint_from_neighbors(ModelSpec::babp(0.4), 0, l, r));
        }
}

TEST_CASE("east-polluted uses the site type") {
    const auto m = ModelSpec::east_polluted(0.5, TypeMap::periodic("EF"));
    // site 0 is E, site 1 is F
    CHECK(constraint_from_neighbors(m, 0, true, false) == 0.0);
    CHECK(constraint_from_neighbors(m, 1, true, false) == 1.0);
    CHECK(m.types.at(-2) == SiteType::E);
    CHECK(m.types.at(-1) == SiteType::F);
}

TEST_CASE("type maps") {
    const auto ex = TypeMap::explicit_list("EEF", 3);
    CHECK(ex.at(3) == SiteType::E);
    CHECK(ex.at(5) == SiteType::F);
    CHECK(ex.at(100) == SiteType::F);
    CHECK(TypeMap().at(7) == SiteType::E);
    const auto bern = TypeMap::bernoulli(0.5, Window(0, 999), 4);
    int es = 0;
    for (int x = 0; x < 1000; ++x) es += bern.at(x) == SiteType::E;
    CHECK(es > 430);
    CHECK(es < 570);
    CHECK(TypeMap::bernoulli(0.5, Window(0, 999), 4).describe() == bern.describe());
}

TEST_CASE("flip rates: c p from infected, c q from healthy") {
    const auto m = ModelSpec::fa1f(0.2);
    const auto eta = Configuration::parse("001", 0);
    const auto bc = BoundaryCondition::healthy();
    CHECK(flip_rate(m, eta, bc, 0) == doctest::Approx(0.8));
    CHECK(flip_rate(m, eta, bc, 1) == doctest::Approx(0.8));
    CHECK(flip_rate(m, eta, bc, 2) == doctest::Approx(0.2));
    CHECK(constraint_rate(m, Configuration::parse("010"), bc, 0) == 0.0);
    CHECK(flip_rate(m, Configuration::parse("111"), bc, 1) == 0.0);
}

TEST_CASE("DFP rates against the closed form") {
    for (double lambda : {0.3, 1.0, 3.0, 8.0}) {
        const auto r = dfp_edge_rates(lambda);
        const double y = std::sqrt(1 + lambda);
        CHECK(r.y == doctest::Approx(y));
        CHECK(r.r_create == doctest::Approx((y + 1) * (y + 1) / 2));
        CHECK(r.r_annihilate == doctest::Approx((y - 1) * (y - 1) / 2));
        CHECK(r.r_swap == doctest::Approx(lambda / 2));
        CHECK(r.p_hat == doctest::Approx((y + 1) / (2 * y)));
        // pair detailed balance under Bernoulli(p_hat): q^2 r_create = p^2 r_annihilate
        CHECK(r.q_hat() * r.q_hat() * r.r_create == doctest::Approx(r.p_hat * r.p_hat * r.r_annihilate));
        CHECK(dfp_pair_rate(r, false, false) == r.r_create);
        CHECK(dfp_pair_rate(r, true, true) == r.r_annihilate);
        CHECK(dfp_pair_rate(r, true, false) == r.r_swap);
    }
    // tiny lambda keeps the annihilation rate accurate
    CHECK(dfp_edge_rates(1e-10).r_annihilate == doctest::Approx(1.25e-21).epsilon(1e-6));
}

TEST_CASE("model parameters") {
    const auto d = ModelSpec::dfp(3.0);
    CHECK(d.q == doctest::Approx(0.75));
    CHECK(d.lambda() == doctest::Approx(3.0));
    CHECK(equilibrium_healthy_density(d) == doctest::Approx(0.75));  // (2+1)/(2*2)
    CHECK(equilibrium_healthy_density(ModelSpec::east(0.3)) == doctest::Approx(0.7));
    CHECK(ModelSpec::babp_lambda(1.0).q == doctest::Approx(0.5));
    CHECK_THROWS_AS(ModelSpec::fa1f(1.0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(ModelSpec::delta_west(0.5, -1).validate(), std::invalid_argument);
    CHECK_THROWS_AS(constraint_rate(d, Configuration::parse("00"), BoundaryCondition::healthy(), 0), std::invalid_argument);
}
