#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kcm/models.hpp"

namespace kcm::verify {

enum class Suite : std::uint8_t { quick, full };

struct VerifyOptions {
    Suite suite = Suite::full;
    std::uint64_t seed = 20240601;
    unsigned workers = 0;
    std::vector<int> only;                    // empty: all criteria
    double dfp_create_scale = 1.0;            // test fixture: tampers the DFP creation rate
    bool enforce_runtime = true;              // runtime budget is part of the verdict
};

struct CriterionResult {
    int id = 0;
    std::string name;
    std::string observed;
    std::string tolerance;
    bool value_ok = false;
    double seconds = 0;
    double budget = 0;  // seconds
    bool pass = false;
    std::string details;  // JSON object text
};

inline constexpr int kCriteria = 16;

CriterionResult run_criterion(int id, const VerifyOptions& opt);
std::vector<CriterionResult> run_suite(const VerifyOptions& opt,
                                       const std::function<void(const CriterionResult&)>& on_result = {});

std::string format_line(const CriterionResult& r);
std::string to_jsonl(const CriterionResult& r);

}  // namespace kcm::verify
