#pragma once

// Deterministic self-check suite behind the CLI validate task: one named
// check per library invariant. Every check draws its random instances from
// its own generator seeded by the suite seed mixed with a hash of the check
// name, so the report is byte-stable for a fixed seed and reordering or
// adding checks does not disturb the others.

#include <cstdint>
#include <string>
#include <vector>

namespace propkit {

struct CheckResult {
    std::string name;
    bool passed = false;
    // Largest observed violation metric and the value it must not exceed.
    // Checks that assert an exact identity use bound 0.
    double worst = 0.0;
    double bound = 0.0;
    std::string note; // deterministic context (counts, orders), no timings
};

struct ValidationReport {
    std::uint64_t seed = 0;
    std::vector<CheckResult> checks;
    int failed = 0;
};

// Runs every check in a fixed order. A check that throws is reported as
// failed with the error text in its note; the suite itself does not throw.
ValidationReport run_validation(std::uint64_t seed);

// Stable text rendering, one line per check plus a summary line.
std::string format_report(const ValidationReport& report);

} // namespace propkit
