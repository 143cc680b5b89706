// Run reports: result tables, summary statistics, tolerance checks, and
// deterministic CSV/JSON emission.

#ifndef FRAGWAVE_REPORT_HPP
#define FRAGWAVE_REPORT_HPP

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fragwave/stats.hpp"

namespace fragwave {

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

// a named statistic: either a sample summary or a single scalar value
struct SummaryEntry {
    std::string label;
    bool is_scalar = false;
    double value = 0.0;  // scalar case
    Summary stats;       // sample case
    std::map<std::string, double> extra;
};

struct CheckResult {
    std::string label;
    bool passed = false;
    std::string detail;  // cites the tolerance that was applied
};

struct RunReport {
    nlohmann::json config_echo;
    std::vector<Table> tables;
    std::vector<SummaryEntry> summaries;
    std::vector<CheckResult> checks;
    double wall_seconds = 0.0;
    std::uint64_t fragments_explored = 0;

    bool all_passed() const {
        for (const CheckResult& c : checks)
            if (!c.passed) return false;
        return true;
    }
    const SummaryEntry* find_summary(const std::string& label) const;
};

// shortest round-trip decimal rendering (std::to_chars)
std::string render_double(double v);
std::string render_cell(const Cell& c);

// writes <table>.csv (format "csv"), <table>.json (format "json"), or both,
// plus report.json with summaries, checks and diagnostics
std::vector<std::string> emit(const RunReport& report, const std::string& out_dir,
                              const std::string& format);

nlohmann::json report_to_json(const RunReport& report);

} // namespace fragwave

#endif
