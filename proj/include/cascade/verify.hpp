#pragma once

// The statistical acceptance suite. Almost-sure limit theorems are not
// reproducible at finite horizon, so every criterion is a finite-n proxy
// with explicit tolerances, pinned here in code. One pass/fail line per
// criterion; failures never abort the remaining criteria.

#include <cstdint>
#include <string>
#include <vector>

namespace cascade {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct VerifySummary {
    std::vector<CriterionResult> criteria;
    bool all_pass = false;
    std::uint64_t master_seed = 0;
};

VerifySummary run_verification(std::uint64_t seed, int workers, const std::string& out_dir);

std::string verify_to_json(const VerifySummary& summary);

} // namespace cascade
