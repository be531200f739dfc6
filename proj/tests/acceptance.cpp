// Runs every acceptance criterion at full scale and prints one line per criterion.
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include "kcm/verify.hpp"

int main(int argc, char** argv) {
    kcm::verify::VerifyOptions opt;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--quick") == 0) opt.suite = kcm::verify::Suite::quick;
        else if (std::strcmp(argv[i], "--no-budget") == 0) opt.enforce_runtime = false;
        else opt.only.push_back(std::atoi(argv[i]));
    }
    int failed = 0;
    kcm::verify::run_suite(opt, [&](const kcm::verify::CriterionResult& r) {
        std::printf("%s\n", kcm::verify::format_line(r).c_str());
        std::fflush(stdout);
        failed += !r.pass;
    });
    std::printf("%d criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
