#include <doctest.h>

#include <stdexcept>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "kcm/config.hpp"

using namespace kcm::config;

TEST_CASE("sha256 known answers") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("typed access") {
    Config c;
    c.set("q", "0.25", "default");
    c.set("n", "12", "default");
    c.set("flag", "true", "default");
    c.set("B", "0, 1,5", "default");
    c.set("empty", "", "default");
    CHECK(c.real("q") == 0.25);
    CHECK(c.integer("n") == 12);
    CHECK(c.flag("flag"));
    CHECK(c.int_list("B") == std::vector<int>{0, 1, 5});
    CHECK(c.int_list("empty").empty());
    c.set("q", "abc", "--q");
    CHECK_THROWS_AS(c.real("q"), ConfigError);
    try {
        c.real("q");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("--q") != std::string::npos);
    }
    CHECK_THROWS_AS(c.entry("missing"), ConfigError);
}

TEST_CASE("config files report line numbers") {
    Config c;
    const std::set<std::string> allowed = {"q", "model"};
    load_text(c, "# comment\nmodel = east\n\nq = 0.3  # trailing\n", "run.cfg", allowed);
    CHECK(c.str("model") == "east");
    CHECK(c.real("q") == doctest::Approx(0.3));
    CHECK(c.entry("q").origin == "run.cfg:4");
    try {
        load_text(c, "model = east\nlamda = 2\n", "bad.cfg", allowed);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("bad.cfg:2") != std::string::npos);
        CHECK(std::string(e.what()).find("lamda") != std::string::npos);
    }
    CHECK_THROWS_AS(load_text(c, "model east\n", "x.cfg", allowed), ConfigError);
    CHECK_THROWS_AS(load_file(c, "/nonexistent/file.cfg", allowed), ConfigError);
}

TEST_CASE("hash ignores insertion order and excluded keys") {
    Config a, b;
    a.set("q", "0.3", "x");
    a.set("model", "east", "x");
    a.set("out", "a.csv", "x");
    b.set("model", "east", "y");
    b.set("out", "b.csv", "y");
    b.set("q", "0.3", "y");
    CHECK(a.hash({"out"}) == b.hash({"out"}));
    CHECK(a.hash() != b.hash());
    CHECK(a.canonical({"out"}) == "model=east\nq=0.3\n");
    b.set("q", "0.31", "y");
    CHECK(a.hash({"out"}) != b.hash({"out"}));
}

TEST_CASE("atomic write replaces the file and leaves no temporary") {
    const auto dir = std::filesystem::temp_directory_path() / "kcm_config_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "out.txt").string();
    write_atomic(path, "first\n");
    write_atomic(path, "second\n");
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == "second\n");
    int files = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
    CHECK(files == 1);
    std::filesystem::remove_all(dir);
    CHECK_THROWS(write_atomic("/nonexistent/dir/x.txt", "x"));
}
