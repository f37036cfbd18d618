#pragma once

#include <string>
#include <vector>

#include "kronsolve/types.hpp"

namespace kronsolve {

struct VerifyCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct VerifyReport {
    std::vector<VerifyCheck> checks;
    bool all_passed = true;
    double seconds = 0.0;
    bool over_budget = false;  // soft 60 s budget
};

/// Runs the oracle suite on random instances below the size cap. `inject`
/// names a deliberate defect for mutation sanity tests
/// ("flip-kinv-residual-sign").
VerifyReport run_verification(Index size_cap = 4096,
                              const std::string& inject = "");

}  // namespace kronsolve
