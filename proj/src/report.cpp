#include "fragwave/report.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace fragwave {

using nlohmann::json;

const SummaryEntry* RunReport::find_summary(const std::string& label) const {
    for (const SummaryEntry& s : summaries)
        if (s.label == label) return &s;
    return nullptr;
}

std::string render_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string render_cell(const Cell& c) {
    if (std::holds_alternative<std::int64_t>(c))
        return std::to_string(std::get<std::int64_t>(c));
    if (std::holds_alternative<double>(c)) return render_double(std::get<double>(c));
    return std::get<std::string>(c);
}

namespace {

json summary_to_json(const SummaryEntry& s) {
    json j;
    j["label"] = s.label;
    if (s.is_scalar) {
        j["value"] = s.value;
    } else {
        j["n"] = s.stats.n;
        j["mean"] = s.stats.mean;
        j["std_dev"] = s.stats.std_dev;
        j["std_error"] = s.stats.std_error;
        j["median"] = s.stats.median;
        j["trimmed_mean"] = s.stats.trimmed_mean;
        j["min"] = s.stats.min;
        j["max"] = s.stats.max;
    }
    if (!s.extra.empty()) j["extra"] = s.extra;
    return j;
}

json cell_to_json(const Cell& c) {
    if (std::holds_alternative<std::int64_t>(c)) return std::get<std::int64_t>(c);
    if (std::holds_alternative<double>(c)) {
        const double v = std::get<double>(c);
        if (std::isnan(v)) return "nan";  // JSON has no NaN literal
        return v;
    }
    return std::get<std::string>(c);
}

} // namespace

json report_to_json(const RunReport& report) {
    json j;
    j["config"] = report.config_echo;
    j["summaries"] = json::array();
    for (const SummaryEntry& s : report.summaries) j["summaries"].push_back(summary_to_json(s));
    j["checks"] = json::array();
    for (const CheckResult& c : report.checks) {
        json cj;
        cj["label"] = c.label;
        cj["passed"] = c.passed;
        cj["detail"] = c.detail;
        j["checks"].push_back(cj);
    }
    j["all_passed"] = report.all_passed();
    j["diagnostics"]["wall_seconds"] = report.wall_seconds;
    j["diagnostics"]["fragments_explored"] = report.fragments_explored;
    return j;
}

std::vector<std::string> emit(const RunReport& report, const std::string& out_dir,
                              const std::string& format) {
    if (format != "csv" && format != "json" && format != "both")
        throw std::invalid_argument("emit: format must be csv, json or both");
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("emit: cannot create " + out_dir + ": " + ec.message());

    std::vector<std::string> written;
    auto open = [&](const std::string& name) {
        const std::string path = (fs::path(out_dir) / name).string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("emit: cannot write " + path);
        written.push_back(path);
        return out;
    };

    for (const Table& t : report.tables) {
        if (format == "csv" || format == "both") {
            std::ofstream out = open(t.name + ".csv");
            for (std::size_t c = 0; c < t.columns.size(); ++c)
                out << (c ? "," : "") << t.columns[c];
            out << "\n";
            for (const auto& row : t.rows) {
                for (std::size_t c = 0; c < row.size(); ++c)
                    out << (c ? "," : "") << render_cell(row[c]);
                out << "\n";
            }
        }
        if (format == "json" || format == "both") {
            std::ofstream out = open(t.name + ".json");
            json tj;
            tj["columns"] = t.columns;
            tj["rows"] = json::array();
            for (const auto& row : t.rows) {
                json rj = json::array();
                for (const Cell& c : row) rj.push_back(cell_to_json(c));
                tj["rows"].push_back(rj);
            }
            out << tj.dump(1) << "\n";
        }
    }
    {
        std::ofstream out = open("report.json");
        out << report_to_json(report).dump(1) << "\n";
    }
    return written;
}

} // namespace fragwave
