/**
 * @file suite.hpp
 * @brief The acceptance battery: twelve numbered criteria, each a
 *        self-contained computation with a pass/fail verdict.
 *
 * The same code backs `heislab suite` and the acceptance test binary, so a
 * criterion cannot pass in one and fail in the other.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace heis {

struct SuiteOptions {
    std::uint64_t seed = 1;
    int threads = 0;
    /// Multiplies every time step used by the flow criteria.
    double dt_scale = 1.0;
    /// Criterion ids to run; empty runs all of them.
    std::vector<int> only;
};

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct SuiteSummary {
    std::vector<CriterionResult> results;
    bool all_pass() const;
    std::vector<int> failed() const;
};

/// Ids 1..12 with their one-line titles.
const std::vector<std::pair<int, std::string>>& criterion_titles();

/// Runs one criterion. Exceptions inside the computation count as failure
/// and are reported in the detail string.
CriterionResult run_criterion(int id, const SuiteOptions& opts = {});

SuiteSummary run_suite(const SuiteOptions& opts = {}, const std::function<void(const CriterionResult&)>& on_result = {});

/// "PASS [03] title :: detail (1.23 s)"
std::string format_result(const CriterionResult& r);

/// Machine-readable summary: {"seed", "dt_scale", "passed", "failed": [...], "criteria": [...]}.
void write_suite_json(std::ostream& out, const SuiteSummary& s, const SuiteOptions& opts);

}  // namespace heis
