#include "fragwave/config.hpp"

#include <fstream>
#include <set>

namespace fragwave {

using nlohmann::json;

namespace {

const std::set<std::string> kKinds = {"exponents", "simulate", "martingale",
                                      "line",      "lln",      "wave",
                                      "residual",  "speed",    "many_to_one"};

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
}

} // namespace

DislocationMeasure parse_measure(const json& spec, const std::string& path) {
    require_object(spec, path);
    if (!spec.contains("kind")) throw ConfigError(path + ".kind", "missing");
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "uniform_binary") return DislocationMeasure::uniform_binary();
    if (kind != "discrete_atoms")
        throw ConfigError(path + ".kind", "unknown measure kind '" + kind + "'");
    if (!spec.contains("atoms") || !spec.at("atoms").is_array())
        throw ConfigError(path + ".atoms", "missing atom list");
    std::vector<DiscreteAtom> atoms;
    std::size_t i = 0;
    for (const json& a : spec.at("atoms")) {
        const std::string apath = path + ".atoms[" + std::to_string(i++) + "]";
        if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_array())
            throw ConfigError(apath, "expected [weight, [s1, s2, ...]]");
        DiscreteAtom atom;
        atom.weight = a[0].get<double>();
        for (const json& s : a[1]) {
            if (!s.is_number()) throw ConfigError(apath, "ratios must be numbers");
            atom.ratios.push_back(s.get<double>());
        }
        atoms.push_back(std::move(atom));
    }
    try {
        return DislocationMeasure::discrete_atoms(std::move(atoms));
    } catch (const std::exception& e) {
        throw ConfigError(path, e.what());
    }
}

ExperimentConfig ExperimentConfig::parse(const json& doc) {
    require_object(doc, "$");
    ExperimentConfig cfg;
    cfg.raw = doc;

    if (!doc.contains("measure")) throw ConfigError("$.measure", "missing");
    cfg.measure = parse_measure(doc.at("measure"), "$.measure");

    if (!doc.contains("master_seed") || !doc.at("master_seed").is_number_unsigned())
        throw ConfigError("$.master_seed", "missing or not a nonnegative integer");
    cfg.master_seed = doc.at("master_seed").get<std::uint64_t>();

    if (doc.contains("quadrature_nodes")) {
        cfg.quadrature_nodes = doc.at("quadrature_nodes").get<int>();
        if (cfg.quadrature_nodes < 8)
            throw ConfigError("$.quadrature_nodes", "must be >= 8");
    }
    if (doc.contains("workers")) {
        cfg.workers = doc.at("workers").get<int>();
        if (cfg.workers < 0) throw ConfigError("$.workers", "must be >= 0");
    }
    if (doc.contains("output")) cfg.output = doc.at("output").get<std::string>();

    // either a single experiment inline or an "experiments" array
    std::vector<json> sections;
    if (doc.contains("experiments")) {
        if (!doc.at("experiments").is_array() || doc.at("experiments").empty())
            throw ConfigError("$.experiments", "must be a non-empty array");
        for (const json& e : doc.at("experiments")) sections.push_back(e);
    } else {
        sections.push_back(doc);
    }

    std::set<std::string> names;
    std::size_t i = 0;
    for (const json& e : sections) {
        const std::string epath =
            doc.contains("experiments") ? "$.experiments[" + std::to_string(i) + "]" : "$";
        require_object(e, epath);
        ExperimentSection sec;
        if (!e.contains("kind")) throw ConfigError(epath + ".kind", "missing");
        sec.kind = e.at("kind").get<std::string>();
        if (!kKinds.count(sec.kind))
            throw ConfigError(epath + ".kind", "unknown experiment kind '" + sec.kind + "'");
        sec.name = e.contains("name") ? e.at("name").get<std::string>() : sec.kind;
        if (!names.insert(sec.name).second)
            throw ConfigError(epath + ".name", "duplicate experiment name '" + sec.name + "'");
        sec.params = e.contains("params") ? e.at("params") : json::object();
        if (!sec.params.is_object()) throw ConfigError(epath + ".params", "expected object");
        if (e.contains("checks")) {
            if (!e.at("checks").is_array())
                throw ConfigError(epath + ".checks", "expected array");
            for (const json& c : e.at("checks")) sec.checks.push_back(c);
        }
        cfg.experiments.push_back(std::move(sec));
        ++i;
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }
    return parse(doc);
}

} // namespace fragwave
