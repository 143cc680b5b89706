// Experiment configuration: a single JSON document drives every run, so a
// result is reproducible from (config, master_seed) alone.

#ifndef FRAGWAVE_CONFIG_HPP
#define FRAGWAVE_CONFIG_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fragwave/dislocation.hpp"

namespace fragwave {

struct ConfigError : std::runtime_error {
    ConfigError(const std::string& path, const std::string& msg)
        : std::runtime_error(path + ": " + msg), field_path(path) {}
    std::string field_path;
};

struct ExperimentSection {
    std::string name;  // table/file name; defaults to the kind
    std::string kind;  // exponents | simulate | martingale | line | lln |
                       // wave | residual | speed | many_to_one
    nlohmann::json params;
    std::vector<nlohmann::json> checks;
};

struct ExperimentConfig {
    nlohmann::json raw;
    DislocationMeasure measure = DislocationMeasure::uniform_binary();
    int quadrature_nodes = 64;
    std::uint64_t master_seed = 0;
    int workers = 1;          // 0 = hardware concurrency
    std::string output = "out";
    std::vector<ExperimentSection> experiments;

    static ExperimentConfig parse(const nlohmann::json& doc);
    static ExperimentConfig parse_file(const std::string& path);
};

DislocationMeasure parse_measure(const nlohmann::json& spec, const std::string& path);

} // namespace fragwave

#endif
