// fragwave: config-driven experiment runner for homogeneous fragmentation
// processes, their martingales, stopping lines and travelling waves.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fragwave/config.hpp"
#include "fragwave/report.hpp"
#include "fragwave/runner.hpp"

namespace {

fragwave::DislocationMeasure measure_from_string(const std::string& spec) {
    if (spec == "uniform_binary") return fragwave::DislocationMeasure::uniform_binary();
    if (spec == "binary_half") return fragwave::DislocationMeasure::binary_half();
    if (!spec.empty() && spec.front() == '{')
        return fragwave::parse_measure(nlohmann::json::parse(spec), "--measure");
    throw std::runtime_error("unknown measure '" + spec +
                             "' (use uniform_binary, binary_half, or inline JSON)");
}

int resolve_workers(bool flag_set, int flag_value, const fragwave::ExperimentConfig& cfg) {
    if (flag_set) return flag_value;
    if (cfg.raw.contains("workers")) return cfg.workers;
    if (const char* env = std::getenv("FRAGWAVE_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) return w;
    }
    return 0;  // hardware concurrency
}

void print_checks(const fragwave::RunReport& report) {
    for (const auto& c : report.checks)
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.label << ": " << c.detail << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fragwave: homogeneous fragmentation wave laboratory"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "run an experiment config");
    std::string config_path, out_dir, format = "csv";
    std::uint64_t seed_override = 0;
    int workers_flag = 0;
    run_cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
    auto* out_opt = run_cmd->add_option("--out", out_dir, "output directory");
    auto* seed_opt = run_cmd->add_option("--seed", seed_override, "master seed override");
    auto* workers_opt =
        run_cmd->add_option("--workers", workers_flag, "worker thread count");
    run_cmd->add_option("--format", format, "csv | json | both")
        ->check(CLI::IsMember({"csv", "json", "both"}));

    auto* exp_cmd = app.add_subcommand("exponents", "print spectral quantities");
    std::string measure_spec, p_grid = "-0.5:3:0.25";
    int nodes = 64;
    exp_cmd->add_option("--measure", measure_spec, "uniform_binary | binary_half | JSON")
        ->required();
    exp_cmd->add_option("--p-grid", p_grid, "a:b:step");
    exp_cmd->add_option("--nodes", nodes, "quadrature nodes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*run_cmd) {
            fragwave::ExperimentConfig cfg =
                fragwave::ExperimentConfig::parse_file(config_path);
            if (*seed_opt) cfg.master_seed = seed_override;
            cfg.workers = resolve_workers(workers_opt->count() > 0, workers_flag, cfg);
            if (*out_opt) cfg.output = out_dir;

            const fragwave::RunReport report = fragwave::run(cfg);
            const auto files = fragwave::emit(report, cfg.output, format);
            print_checks(report);
            for (const auto& f : files) std::cout << "wrote " << f << "\n";
            return report.all_passed() ? 0 : 2;
        }

        // exponents subcommand
        const auto measure = measure_from_string(measure_spec);
        fragwave::SpectralProfile profile(measure, nodes);
        double a = 0, b = 0, step = 0;
        if (std::sscanf(p_grid.c_str(), "%lf:%lf:%lf", &a, &b, &step) != 3 || step <= 0)
            throw std::runtime_error("bad --p-grid, expected a:b:step");
        std::cout << "p_lower = " << fragwave::render_double(profile.p_lower()) << "\n";
        std::cout << "p_bar   = " << fragwave::render_double(profile.p_bar()) << "\n";
        std::cout << "c_pbar  = "
                  << fragwave::render_double(profile.wave_speed(profile.p_bar())) << "\n";
        std::cout << "p,phi,phi_prime,c_p\n";
        for (double p = a; p <= b + 1e-12; p += step) {
            if (!(p > profile.p_lower())) continue;
            const double cp =
                std::abs(p + 1.0) < 1e-12 ? std::nan("") : profile.wave_speed(p);
            std::cout << fragwave::render_double(p) << ","
                      << fragwave::render_double(profile.phi(p)) << ","
                      << fragwave::render_double(profile.phi_prime(p)) << ","
                      << fragwave::render_double(cp) << "\n";
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
