#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace splitkin {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;  // measured values, 17 significant digits
};

struct AcceptanceOptions {
    int threads = 2;
    std::uint64_t seed = 20240901;
    bool verbose = true;  // print one pass/fail line per criterion
    // Monte Carlo gates rerun once with 4x samples before reporting failure.
    bool retry_with_more_samples = true;
};

/// Runs the full acceptance suite (criteria 1-12) at desk scale and returns
/// one result per criterion. Tolerances are pinned in code.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts);

}  // namespace splitkin
