#include <doctest.h>

#include <stdexcept>

#include "kcm/verify.hpp"

using namespace kcm::verify;

TEST_CASE("stationarity criterion passes on the true rates") {
    VerifyOptions opt;
    const auto r = run_criterion(1, opt);
    CHECK(r.value_ok);
    CHECK(r.pass);
    CHECK(format_line(r).rfind("[PASS]  1 ", 0) == 0);
    CHECK(to_jsonl(r).find("\"criterion\":1") != std::string::npos);
}

TEST_CASE("a tampered DFP creation rate is caught") {
    VerifyOptions opt;
    opt.dfp_create_scale = 1.1;
    const auto r = run_criterion(1, opt);
    CHECK_FALSE(r.value_ok);
    CHECK_FALSE(r.pass);
    CHECK(format_line(r).rfind("[FAIL]  1 ", 0) == 0);
}

TEST_CASE("unknown criterion ids are rejected") {
    CHECK_THROWS(run_criterion(0, VerifyOptions{}));
    CHECK_THROWS(run_criterion(kCriteria + 1, VerifyOptions{}));
}
