#include "fragwave/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "fragwave/frag_sim.hpp"
#include "fragwave/martingales.hpp"
#include "fragwave/spine.hpp"
#include "fragwave/stopping_lines.hpp"
#include "fragwave/waves.hpp"

namespace fragwave {

using nlohmann::json;

int effective_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for_indexed(std::size_t n, int workers,
                          const std::function<void(std::size_t)>& fn) {
    workers = effective_workers(workers);
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int k = std::min<std::size_t>(workers, n);
    pool.reserve(k);
    for (int t = 0; t < k; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

namespace {

// ---- parameter access with field-path errors --------------------------

struct Params {
    const json& j;
    std::string path;

    bool has(const std::string& key) const { return j.contains(key); }

    double number(const std::string& key) const {
        require(key);
        if (!j.at(key).is_number()) throw ConfigError(path + "." + key, "expected number");
        return j.at(key).get<double>();
    }
    double number_or(const std::string& key, double def) const {
        return has(key) ? number(key) : def;
    }
    std::int64_t integer(const std::string& key) const {
        require(key);
        if (!j.at(key).is_number_integer())
            throw ConfigError(path + "." + key, "expected integer");
        return j.at(key).get<std::int64_t>();
    }
    std::int64_t integer_or(const std::string& key, std::int64_t def) const {
        return has(key) ? integer(key) : def;
    }
    std::size_t count(const std::string& key) const {
        const std::int64_t v = integer(key);
        if (v < 1) throw ConfigError(path + "." + key, "must be >= 1");
        return static_cast<std::size_t>(v);
    }
    std::string text_or(const std::string& key, const std::string& def) const {
        if (!has(key)) return def;
        if (!j.at(key).is_string()) throw ConfigError(path + "." + key, "expected string");
        return j.at(key).get<std::string>();
    }
    std::vector<double> number_list(const std::string& key) const {
        require(key);
        if (!j.at(key).is_array()) throw ConfigError(path + "." + key, "expected array");
        std::vector<double> out;
        for (const json& v : j.at(key)) {
            if (!v.is_number()) throw ConfigError(path + "." + key, "expected numbers");
            out.push_back(v.get<double>());
        }
        if (out.empty()) throw ConfigError(path + "." + key, "must be non-empty");
        return out;
    }
    const json& sub(const std::string& key) const {
        require(key);
        if (!j.at(key).is_object()) throw ConfigError(path + "." + key, "expected object");
        return j.at(key);
    }
    void require(const std::string& key) const {
        if (!j.contains(key)) throw ConfigError(path + "." + key, "missing");
    }
};

// p entries may be numbers or the literal "p_bar"
double resolve_p(const json& v, const SpectralProfile& profile, const std::string& path) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string() && v.get<std::string>() == "p_bar") return profile.p_bar();
    throw ConfigError(path, "expected a number or \"p_bar\"");
}

std::vector<double> resolve_p_list(const json& params, const std::string& key,
                                   const SpectralProfile& profile,
                                   const std::string& path) {
    if (!params.contains(key)) throw ConfigError(path + "." + key, "missing");
    if (!params.at(key).is_array()) throw ConfigError(path + "." + key, "expected array");
    std::vector<double> out;
    for (const json& v : params.at(key)) out.push_back(resolve_p(v, profile, path + "." + key));
    if (out.empty()) throw ConfigError(path + "." + key, "must be non-empty");
    return out;
}

std::string label_num(double v) { return render_double(v); }

SummaryEntry scalar_entry(const std::string& label, double value) {
    SummaryEntry e;
    e.label = label;
    e.is_scalar = true;
    e.value = value;
    return e;
}

SummaryEntry sample_entry(const std::string& label, const std::vector<double>& xs) {
    SummaryEntry e;
    e.label = label;
    e.stats = summarize(xs);
    return e;
}

TestFunctional functional_from(const json& spec, const std::string& path) {
    if (!spec.is_object() || !spec.contains("name"))
        throw ConfigError(path, "expected {\"name\": ..., [\"param\": ...]}");
    const std::string name = spec.at("name").get<std::string>();
    const double param = spec.contains("param") ? spec.at("param").get<double>() : 0.0;
    if (name == "bounded_custom_grid") {
        if (!spec.contains("xs") || !spec.contains("ys"))
            throw ConfigError(path, "bounded_custom_grid needs xs and ys arrays");
        return TestFunctional::bounded_custom_grid(
            spec.at("xs").get<std::vector<double>>(),
            spec.at("ys").get<std::vector<double>>());
    }
    try {
        return TestFunctional::by_name(name, param);
    } catch (const std::exception& e) {
        throw ConfigError(path, e.what());
    }
}

// ---- experiment sections ----------------------------------------------

void run_exponents(const ExperimentConfig& cfg, const SpectralProfile& profile,
                   const ExperimentSection& sec, RunReport& report) {
    Params params{sec.params, "$.params"};
    std::vector<double> ps;
    if (params.has("p_list")) {
        ps = resolve_p_list(sec.params, "p_list", profile, "$.params");
    } else if (params.has("p_grid")) {
        const auto grid = params.number_list("p_grid");
        if (grid.size() != 3 || !(grid[2] > 0.0) || !(grid[1] >= grid[0]))
            throw ConfigError("$.params.p_grid", "expected [start, stop, step]");
        for (double p = grid[0]; p <= grid[1] + 1e-12; p += grid[2]) ps.push_back(p);
    } else {
        throw ConfigError("$.params", "needs p_list or p_grid");
    }

    Table t;
    t.name = sec.name;
    t.columns = {"p", "phi", "phi_prime", "c_p"};
    for (double p : ps) {
        if (!(p > profile.p_lower())) continue;
        const double cp = std::abs(p + 1.0) < 1e-12 ? std::nan("") : profile.wave_speed(p);
        t.rows.push_back({p, profile.phi(p), profile.phi_prime(p), cp});
    }
    report.tables.push_back(std::move(t));

    report.summaries.push_back(scalar_entry("p_bar", profile.p_bar()));
    report.summaries.push_back(
        scalar_entry("c_pbar", profile.wave_speed(profile.p_bar())));
    report.summaries.push_back(scalar_entry("p_lower", profile.p_lower()));
    if (params.has("eta_p")) {
        for (const json& v : sec.params.at("eta_p")) {
            const double p = resolve_p(v, profile, "$.params.eta_p");
            report.summaries.push_back(
                scalar_entry("eta[p=" + label_num(p) + "]", profile.eta_root(p)));
        }
    }
}

void run_simulate(const ExperimentConfig& cfg, const SpectralProfile& profile,
                  const ExperimentSection& sec, RunReport& report) {
    Params params{sec.params, "$.params"};
    const double horizon = params.number("horizon");
    const std::size_t reps = params.count("replicates");
    std::vector<double> t_list =
        params.has("t_list") ? params.number_list("t_list") : std::vector<double>{horizon};
    std::sort(t_list.begin(), t_list.end());

    SimControls controls;
    controls.size_floor = params.number_or("size_floor", 1e-12);
    controls.max_fragments =
        static_cast<std::uint64_t>(params.integer_or("max_fragments", 20'000'000));

    bool with_slope = params.has("slope_window");
    double w0 = 0, w1 = 0;
    std::vector<double> slope_grid;
    if (with_slope) {
        const auto w = params.number_list("slope_window");
        if (w.size() != 2 || !(w[1] > w[0]))
            throw ConfigError("$.params.slope_window", "expected [t0, t1] with t0 < t1");
        w0 = w[0];
        w1 = w[1];
        if (w1 > horizon) throw ConfigError("$.params.slope_window", "window exceeds horizon");
        for (double t = w0; t <= w1 + 1e-12; t += 0.25) slope_grid.push_back(std::min(t, w1));
    }

    // merged snapshot times: t_list plus the slope grid
    std::vector<double> times = t_list;
    times.insert(times.end(), slope_grid.begin(), slope_grid.end());
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    struct RepResult {
        std::vector<std::array<double, 4>> at_t;  // n_alive, min_x, sum_mass, dropped
        std::vector<double> slope_min;
    };
    std::vector<RepResult> results(reps);
    std::atomic<std::uint64_t> explored{0};

    parallel_for_indexed(reps, cfg.workers, [&](std::size_t r) {
        RepResult res;
        res.at_t.resize(t_list.size());
        res.slope_min.resize(slope_grid.size());
        const FragTrajectory traj = simulate_with_snapshots(
            cfg.measure, horizon, cfg.master_seed, r, controls, times,
            [&](std::size_t k, double time, const FragTrajectory& st) {
                double n = 0, mn = std::numeric_limits<double>::infinity(), mass = 0;
                st.for_each_alive(time, [&](std::size_t i) {
                    n += 1;
                    mn = std::min(mn, st.x[i]);
                    mass += std::exp(-st.x[i]);
                });
                const auto it = std::lower_bound(t_list.begin(), t_list.end(), time);
                if (it != t_list.end() && *it == time)
                    res.at_t[it - t_list.begin()] = {n, mn, mass, st.dropped_mass};
                if (with_slope) {
                    const auto is =
                        std::lower_bound(slope_grid.begin(), slope_grid.end(), time);
                    if (is != slope_grid.end() && *is == time)
                        res.slope_min[is - slope_grid.begin()] = mn;
                }
            },
            false);
        explored += traj.size();
        results[r] = std::move(res);
    });

    Table t;
    t.name = sec.name;
    t.columns = {"run_id", "seed", "t", "n_alive", "min_x", "sum_mass", "dropped_mass"};
    double cons_err = 0.0;
    std::vector<std::vector<double>> n_by_t(t_list.size()), minx_by_t(t_list.size());
    for (std::size_t r = 0; r < reps; ++r) {
        for (std::size_t k = 0; k < t_list.size(); ++k) {
            const auto& a = results[r].at_t[k];
            t.rows.push_back({static_cast<std::int64_t>(r), static_cast<std::int64_t>(r),
                              t_list[k], static_cast<std::int64_t>(a[0]), a[1], a[2],
                              a[3]});
            cons_err = std::max(cons_err, std::abs(a[2] + a[3] - 1.0));
            n_by_t[k].push_back(a[0]);
            minx_by_t[k].push_back(a[1]);
        }
    }
    report.tables.push_back(std::move(t));
    report.fragments_explored += explored.load();

    for (std::size_t k = 0; k < t_list.size(); ++k) {
        report.summaries.push_back(
            sample_entry("n_alive[t=" + label_num(t_list[k]) + "]", n_by_t[k]));
        report.summaries.push_back(
            sample_entry("min_x[t=" + label_num(t_list[k]) + "]", minx_by_t[k]));
    }
    report.summaries.push_back(scalar_entry("conservation_max_abs_err", cons_err));

    if (with_slope) {
        std::vector<double> mean_min(slope_grid.size(), 0.0);
        for (std::size_t r = 0; r < reps; ++r)
            for (std::size_t k = 0; k < slope_grid.size(); ++k)
                mean_min[k] += results[r].slope_min[k];
        for (double& v : mean_min) v /= static_cast<double>(reps);
        report.summaries.push_back(scalar_entry("slope", ls_slope(slope_grid, mean_min)));
    }
}

void run_martingale(const ExperimentConfig& cfg, const SpectralProfile& profile,
                    const ExperimentSection& sec, RunReport& report) {
    Params params{sec.params, "$.params"};
    const std::vector<double> p_list = resolve_p_list(sec.params, "p_list", profile, "$.params");
    std::vector<double> t_list = params.number_list("t_list");
    std::sort(t_list.begin(), t_list.end());
    const std::size_t reps = params.count("replicates");
    const double horizon = params.number_or("horizon", t_list.back());
    const bool has_trunc = params.has("x_trunc");
    const double x_trunc = params.number_or("x_trunc", 8.0);
    const double p_bar = profile.p_bar();

    const bool any_critical = [&] {
        for (double p : p_list)
            if (std::abs(p - p_bar) <= 1e-9) return true;
        return false;
    }();

    SimControls controls;
    controls.size_floor = params.number_or("size_floor", 1e-12);
    if (has_trunc || any_critical) {
        controls.track_lineage_min = true;
        controls.lineage_speed = profile.wave_speed(p_bar);
    }

    struct Row {
        double W, dW, dW_trunc, n_alive, dropped;
    };
    std::vector<std::vector<Row>> results(reps);  // indexed [rep][p*t]
    parallel_for_indexed(reps, cfg.workers, [&](std::size_t r) {
        std::vector<Row> rows(p_list.size() * t_list.size());
        simulate_with_snapshots(
            cfg.measure, horizon, cfg.master_seed, r, controls, t_list,
            [&](std::size_t k, double time, const FragTrajectory& st) {
                double n = 0;
                st.for_each_alive(time, [&](std::size_t) { n += 1; });
                for (std::size_t ip = 0; ip < p_list.size(); ++ip) {
                    const double p = p_list[ip];
                    Row& row = rows[ip * t_list.size() + k];
                    row.W = additive_W_at(profile, st, time, p);
                    const bool critical = std::abs(p - p_bar) <= 1e-9;
                    row.dW = critical ? derivative_W_at(profile, st, time, p_bar)
                                      : std::nan("");
                    row.dW_trunc = (critical && has_trunc)
                                       ? truncated_derivative_W(profile, st, x_trunc, time)
                                       : std::nan("");
                    row.n_alive = n;
                    row.dropped = st.dropped_mass;
                }
            },
            false);
        results[r] = std::move(rows);
    });

    Table t;
    t.name = sec.name;
    t.columns = {"run_id", "p", "t", "W", "dW", "dW_trunc", "n_alive", "dropped_mass"};
    for (std::size_t r = 0; r < reps; ++r)
        for (std::size_t ip = 0; ip < p_list.size(); ++ip)
            for (std::size_t k = 0; k < t_list.size(); ++k) {
                const Row& row = results[r][ip * t_list.size() + k];
                t.rows.push_back({static_cast<std::int64_t>(r), p_list[ip], t_list[k],
                                  row.W, row.dW, row.dW_trunc,
                                  static_cast<std::int64_t>(row.n_alive), row.dropped});
            }
    report.tables.push_back(std::move(t));

    for (std::size_t ip = 0; ip < p_list.size(); ++ip)
        for (std::size_t k = 0; k < t_list.size(); ++k) {
            std::vector<double> ws(reps);
            for (std::size_t r = 0; r < reps; ++r)
                ws[r] = results[r][ip * t_list.size() + k].W;
            report.summaries.push_back(
                sample_entry("W[p=" + label_num(p_list[ip]) + ",t=" +
                                 label_num(t_list[k]) + "]",
                             ws));
            if (std::abs(p_list[ip] - p_bar) <= 1e-9) {
                std::vector<double> dws(reps);
                for (std::size_t r = 0; r < reps; ++r)
                    dws[r] = results[r][ip * t_list.size() + k].dW;
                report.summaries.push_back(
                    sample_entry("dW[t=" + label_num(t_list[k]) + "]", dws));
                if (has_trunc) {
                    std::vector<double> dts(reps);
                    for (std::size_t r = 0; r < reps; ++r)
                        dts[r] = results[r][ip * t_list.size() + k].dW_trunc;
                    report.summaries.push_back(
                        sample_entry("dW_trunc[t=" + label_num(t_list[k]) + ",x=" +
                                         label_num(x_trunc) + "]",
                                     dts));
                }
            }
        }
}

void run_line(const ExperimentConfig& cfg, const SpectralProfile& profile,
              const ExperimentSection& sec, RunReport& report) {
    Params params{sec.params, "$.params"};
    const double p = resolve_p(sec.params.at("p"), profile, "$.params.p");
    const std::vector<double> z_list = params.number_list("z_list");
    const std::size_t reps = params.count("replicates");
    SweepControls controls;
    controls.max_fragments =
        static_cast<std::uint64_t>(params.integer_or("max_fragments", 4'000'000'000ll));
    controls.store_fragments = !params.has("store_fragments") ||
                               sec.params.at("store_fragments").get<bool>();

    Table t;
    t.name = sec.name;
    t.columns = {"sweep_id", "p", "z", "i", "x", "freeze_time", "d", "y"};
    double cons_err = 0.0;
    std::uint64_t explored = 0;

    for (std::size_t iz = 0; iz < z_list.size(); ++iz) {
        const double z = z_list[iz];
        std::vector<FrozenLineState> states(reps);
        parallel_for_indexed(reps, cfg.workers, [&](std::size_t r) {
            states[r] = sweep_line(profile, p, z, cfg.master_seed,
                                   iz * reps + r, controls);
        });
        std::vector<double> ws(reps), malthus(reps);
        for (std::size_t r = 0; r < reps; ++r) {
            const FrozenLineState& st = states[r];
            ws[r] = st.sum_y;
            cons_err = std::max(cons_err, std::abs(st.sum_mass - 1.0));
            explored += st.explored;
            if (controls.store_fragments) {
                std::int64_t i = 0;
                for (const FrozenFragment& fr : st.fragments)
                    t.rows.push_back({static_cast<std::int64_t>(r), p, z, i++, fr.x,
                                      fr.freeze_time, fr.d, fr.y});
            }
        }
        report.summaries.push_back(
            sample_entry("line_W[z=" + label_num(z) + "]", ws));
    }
    report.tables.push_back(std::move(t));
    report.fragments_explored += explored;
    report.summaries.push_back(scalar_entry("conservation_max_abs_err", cons_err));
}

void run_lln(const ExperimentConfig& cfg, const SpectralProfile& profile,
             const ExperimentSection& sec, RunReport& report) {
    Params params{sec.params, "$.params"};
    const double p = resolve_p(sec.params.at("p"), profile, "$.params.p");
    const double z = params.number("z");
    const std::size_t reps = params.count("replicates");
    const TestFunctional f = functional_from(params.sub("functional"), "$.params.functional");
    SweepControls controls;
    controls.max_fragments =
        static_cast<std::uint64_t>(params.integer_or("max_fragments", 4'000'000'000ll));

    std::vector<LlnRatio> results(reps);
    parallel_for_indexed(reps, cfg.workers, [&](std::size_t r) {
        results[r] = lln_ratio(profile, p, z, f, cfg.master_seed, r, controls);
    });

    Table t;
    t.name = sec.name;
    t.columns = {"sweep_id", "p", "z", "numerator", "line_w", "ratio", "n_frozen"};
    std::vector<double> nums(reps), ratios(reps), lws(reps);
    std::uint64_t frozen = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        t.rows.push_back({static_cast<std::int64_t>(r), p, z, results[r].numerator,
                          results[r].line_w, results[r].ratio,
                          static_cast<std::int64_t>(results[r].n_frozen)});
        nums[r] = results[r].numerator;
        ratios[r] = results[r].ratio;
        lws[r] = results[r].line_w;
        frozen += results[r].n_frozen;
    }
    report.tables.push_back(std::move(t));
    report.fragments_explored += frozen;
    report.summaries.push_back(sample_entry("numerator", nums));
    report.summaries.push_back(sample_entry("line_w", lws));
    report.summaries.push_back(sample_entry("ratio", ratios));
}

void run_wave(const ExperimentConfig& cfg, const SpectralProfile& profile,
              const ExperimentSection& sec, RunReport& report) {
    Params params{sec.params, "$.params"};
    const double p = resolve_p(sec.params.at("p"), profile, "$.params.p");
    const bool critical = std::abs(p - profile.p_bar()) <= 1e-9;

    // delta samples
    Params dly{params.sub("delta"), "$.params.delta"};
    const double horizon = dly.number("horizon");
    const std::size_t reps = dly.count("replicates");
    DeltaControls dcontrols;
    dcontrols.x_trunc = dly.number_or("x_trunc", 8.0);

    std::vector<DeltaSample> samples(reps);
    parallel_for_indexed(reps, cfg.workers, [&](std::size_t r) {
        const auto one = estimate_delta(profile, p, horizon, 1, cfg.master_seed + r,
                                        dcontrols);
        samples[r] = one.front();
    });
    std::vector<double> values(reps), diags(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        values[r] = samples[r].value;
        diags[r] = samples[r].diagnostic;
    }
    const Summary value_stats = summarize(values);
    double diag_mean = 0.0;
    for (double d : diags) diag_mean += d;
    diag_mean /= static_cast<double>(reps);
    const double diag_se_units =
        value_stats.std_dev > 0 ? diag_mean / value_stats.std_dev : 0.0;

    // wave + L transform
    std::vector<double> grid;
    if (params.has("grid")) {
        Params g{params.sub("grid"), "$.params.grid"};
        const double lo = g.number("lo"), hi = g.number("hi"), step = g.number("step");
        if (!(step > 0.0) || !(hi > lo))
            throw ConfigError("$.params.grid", "needs lo < hi and step > 0");
        for (double x = lo; x <= hi + 1e-12; x += step) grid.push_back(x);
    } else {
        grid = default_wave_grid(p);
    }
    const WaveFunction wave = estimate_wave(values, p, grid);
    const LTransform lt =
        l_transform(wave, critical ? WaveRegime::Critical : WaveRegime::SubCritical);

    // residual on the central half of the grid
    double speed = profile.wave_speed(p);
    bool with_residual = params.has("residual");
    double max_ratio = 0.0, max_abs_res = 0.0, max_bound = 0.0;
    std::vector<double> residual_col(grid.size(), std::nan(""));
    if (with_residual) {
        Params rs{params.sub("residual"), "$.params.residual"};
        if (rs.has("speed") && rs.j.at("speed").is_number())
            speed = rs.number("speed");
        const double k_se = rs.number_or("k", 4.0);
        const double span = grid.back() - grid.front();
        const double lo = grid.front() + 0.25 * span, hi = grid.back() - 0.25 * span;
        std::vector<std::size_t> idx;
        for (std::size_t j = 0; j < grid.size(); ++j)
            if (grid[j] >= lo && grid[j] <= hi) idx.push_back(j);
        std::vector<ResidualWithSE> rsd(idx.size());
        parallel_for_indexed(idx.size(), cfg.workers, [&](std::size_t k) {
            rsd[k] = fkpp_residual_se(values, p, profile, grid[idx[k]], speed,
                                      wave.grid_step());
        });
        for (std::size_t k = 0; k < idx.size(); ++k) {
            residual_col[idx[k]] = rsd[k].value;
            max_abs_res = std::max(max_abs_res, std::abs(rsd[k].value));
            max_bound = std::max(max_bound, k_se * rsd[k].std_error);
            if (rsd[k].std_error > 0)
                max_ratio = std::max(max_ratio, std::abs(rsd[k].value) / rsd[k].std_error);
        }
        SummaryEntry res = scalar_entry("residual", max_abs_res);
        res.extra["max_abs"] = max_abs_res;
        res.extra["max_bound"] = max_bound;
        res.extra["max_ratio_to_se"] = max_ratio;
        res.extra["speed"] = speed;
        res.extra["n_points"] = static_cast<double>(idx.size());
        report.summaries.push_back(std::move(res));
    }

    Table t;
    t.name = sec.name;
    t.columns = {"x", "psi", "se", "L", "residual_at_matched_speed"};
    for (std::size_t j = 0; j < grid.size(); ++j)
        t.rows.push_back({grid[j], wave.values[j], wave.se[j], lt.values[j],
                          residual_col[j]});
    report.tables.push_back(std::move(t));

    report.summaries.push_back(sample_entry("delta_value", values));
    report.summaries.push_back(scalar_entry("delta_diagnostic", diag_se_units));
    report.summaries.push_back(scalar_entry("k_estimate", lt.k_estimate));

    // product-martingale constancy
    if (params.has("product_check")) {
        Params pc{params.sub("product_check"), "$.params.product_check"};
        const auto t_list = pc.number_list("t_list");
        const auto x_list = pc.number_list("x_list");
        const std::size_t n_runs = pc.count("replicates");
        SimControls controls;
        const double max_t = *std::max_element(t_list.begin(), t_list.end());
        auto psi = [&wave](double u) { return wave.eval(u); };
        std::vector<std::vector<double>> vals(t_list.size() * x_list.size(),
                                              std::vector<double>(n_runs));
        parallel_for_indexed(n_runs, cfg.workers, [&](std::size_t r) {
            const FragTrajectory traj = simulate_with_snapshots(
                cfg.measure, max_t, cfg.master_seed ^ 0x9E3779B97F4A7C15ull, r, controls,
                {}, nullptr, false);
            for (std::size_t it = 0; it < t_list.size(); ++it) {
                const Snapshot snap = snapshot_at(traj, t_list[it]);
                for (std::size_t ix = 0; ix < x_list.size(); ++ix)
                    vals[it * x_list.size() + ix][r] =
                        product_M(profile, snap, psi, p, x_list[ix]);
            }
        });
        for (std::size_t it = 0; it < t_list.size(); ++it)
            for (std::size_t ix = 0; ix < x_list.size(); ++ix) {
                const Summary s = summarize(vals[it * x_list.size() + ix]);
                const double target = wave.eval(x_list[ix]);
                // pointwise psi error + MC error of the product mean
                std::size_t gj =
                    std::lower_bound(wave.grid.begin(), wave.grid.end(), x_list[ix]) -
                    wave.grid.begin();
                gj = std::min(gj, wave.se.size() - 1);
                const double comb =
                    std::sqrt(s.std_error * s.std_error + wave.se[gj] * wave.se[gj]);
                SummaryEntry e = scalar_entry("product_gap[t=" + label_num(t_list[it]) +
                                                  ",x=" + label_num(x_list[ix]) + "]",
                                              std::abs(s.mean - target));
                e.extra["gap"] = std::abs(s.mean - target);
                e.extra["combined_se"] = comb;
                e.extra["mean_M"] = s.mean;
                e.extra["psi"] = target;
                report.summaries.push_back(std::move(e));
            }
    }
}

void run_speed(const ExperimentConfig& cfg, const SpectralProfile& profile,
               const ExperimentSection& sec, RunReport& report) {
    Params params{sec.params, "$.params"};
    const auto c_list = params.number_list("c_list");
    Table t;
    t.name = sec.name;
    t.columns = {"c", "label", "c_critical", "p_solved"};
    for (double c : c_list) {
        const SpeedClass sc = classify_speed(profile, c);
        const std::string label = sc.label == SpeedLabel::SubCritical ? "sub-critical"
                                  : sc.label == SpeedLabel::Critical  ? "critical"
                                                                      : "super-critical";
        t.rows.push_back(
            {c, label, sc.c_critical, sc.has_p ? sc.p_solved : std::nan("")});
        SummaryEntry e = scalar_entry("speed[c=" + label_num(c) + "]",
                                      sc.has_p ? sc.p_solved : std::nan(""));
        e.extra["label_code"] = sc.label == SpeedLabel::SubCritical ? 0.0
                                : sc.label == SpeedLabel::Critical  ? 1.0
                                                                    : 2.0;
        e.extra["c_critical"] = sc.c_critical;
        report.summaries.push_back(std::move(e));
    }
    report.tables.push_back(std::move(t));
}

void run_many_to_one(const ExperimentConfig& cfg, const SpectralProfile& profile,
                     const ExperimentSection& sec, RunReport& report) {
    Params params{sec.params, "$.params"};
    const std::vector<double> p_list = resolve_p_list(sec.params, "p_list", profile, "$.params");
    const auto t_list = params.number_list("t_list");
    const std::size_t n_tree = params.count("tree_replicates");
    const std::size_t n_spine = params.count("spine_replicates");
    std::vector<std::string> g_list = {"one", "identity"};
    if (params.has("g_list")) {
        g_list.clear();
        for (const json& g : sec.params.at("g_list")) g_list.push_back(g.get<std::string>());
    }

    Table t;
    t.name = sec.name;
    t.columns = {"p", "t", "g", "tree_mean", "tree_se", "spine_mean", "spine_se", "z"};
    std::uint64_t stream_base = 0;
    for (double p : p_list)
        for (double time : t_list)
            for (const std::string& g_name : g_list) {
                std::function<double(double)> g;
                if (g_name == "one")
                    g = [](double) { return 1.0; };
                else if (g_name == "identity")
                    g = [](double x) { return x; };
                else
                    throw ConfigError("$.params.g_list", "unknown g '" + g_name + "'");
                const ManyToOneCheck mc = many_to_one_check(
                    profile, p, time, g, n_tree, n_spine,
                    cfg.master_seed + 0x517CC1B727220A95ull * (++stream_base));
                t.rows.push_back({p, time, g_name, mc.tree_mean, mc.tree_se,
                                  mc.spine_mean, mc.spine_se, mc.z_score});
                SummaryEntry e = scalar_entry("z[p=" + label_num(p) + ",t=" +
                                                  label_num(time) + ",g=" + g_name + "]",
                                              mc.z_score);
                e.extra["tree_mean"] = mc.tree_mean;
                e.extra["spine_mean"] = mc.spine_mean;
                report.summaries.push_back(std::move(e));
            }
    report.tables.push_back(std::move(t));
}

// ---- checks -------------------------------------------------------------

void apply_checks(const ExperimentSection& sec, RunReport& report) {
    for (const json& cj : sec.checks) {
        if (!cj.is_object() || !cj.contains("check")) {
            report.checks.push_back({"malformed check", false, cj.dump()});
            continue;
        }
        const std::string op = cj.at("check").get<std::string>();
        CheckResult res;
        res.label = sec.name + ":" + op;
        auto value_of = [&](const SummaryEntry& s) { return s.is_scalar ? s.value : s.stats.mean; };
        try {
            if (op == "abs_within" || op == "mean_within_se" || op == "median_within_rel" ||
                op == "all_nonnegative" || op == "value_below") {
                const std::string label = cj.at("summary").get<std::string>();
                res.label = sec.name + ":" + op + "(" + label + ")";
                const SummaryEntry* s = report.find_summary(label);
                if (!s) throw std::runtime_error("summary '" + label + "' not found");
                if (op == "abs_within") {
                    const double target = cj.at("target").get<double>();
                    const double tol = cj.at("tol").get<double>();
                    const double err = std::abs(value_of(*s) - target);
                    res.passed = err <= tol;
                    res.detail = "|value - " + render_double(target) + "| = " +
                                 render_double(err) + " vs tol " + render_double(tol);
                } else if (op == "mean_within_se") {
                    const double target = cj.at("target").get<double>();
                    const double k = cj.value("k", 4.0);
                    const double err = std::abs(s->stats.mean - target);
                    const double bound = k * s->stats.std_error;
                    res.passed = err <= bound;
                    res.detail = "|mean - " + render_double(target) + "| = " +
                                 render_double(err) + " vs " + render_double(k) +
                                 "*SE = " + render_double(bound);
                } else if (op == "median_within_rel") {
                    const double target = cj.at("target").get<double>();
                    const double rel = cj.at("rel").get<double>();
                    const double err = std::abs(s->stats.median - target) / std::abs(target);
                    res.passed = err <= rel;
                    res.detail = "median rel err = " + render_double(err) + " vs " +
                                 render_double(rel);
                } else if (op == "all_nonnegative") {
                    res.passed = s->stats.min >= 0.0;
                    res.detail = "min = " + render_double(s->stats.min) + " vs 0";
                } else {  // value_below
                    const double threshold = cj.at("threshold").get<double>();
                    res.passed = value_of(*s) < threshold;
                    res.detail = "value = " + render_double(value_of(*s)) + " vs threshold " +
                                 render_double(threshold);
                }
            } else if (op == "residual_within_se") {
                const double k = cj.value("k", 4.0);
                const SummaryEntry* s = report.find_summary("residual");
                if (!s) throw std::runtime_error("no residual summary");
                const double ratio = s->extra.at("max_ratio_to_se");
                res.passed = ratio <= k;
                res.detail = "max |residual|/SE = " + render_double(ratio) + " vs k = " +
                             render_double(k) + " (max |residual| = " +
                             render_double(s->extra.at("max_abs")) + ")";
            } else if (op == "product_gap_within_se") {
                const double k = cj.value("k", 4.0);
                bool all = true;
                std::string worst;
                double worst_ratio = 0.0;
                for (const SummaryEntry& s : report.summaries) {
                    if (s.label.rfind("product_gap[", 0) != 0) continue;
                    const double ratio = s.extra.at("gap") /
                                         std::max(s.extra.at("combined_se"), 1e-300);
                    if (ratio > worst_ratio) {
                        worst_ratio = ratio;
                        worst = s.label;
                    }
                    if (ratio > k) all = false;
                }
                res.passed = all;
                res.detail = "worst " + worst + " gap/SE = " + render_double(worst_ratio) +
                             " vs k = " + render_double(k);
            } else if (op == "abs_z_below") {
                const double k = cj.value("k", 4.0);
                bool all = true;
                double worst = 0.0;
                std::string worst_label;
                for (const SummaryEntry& s : report.summaries) {
                    if (s.label.rfind("z[", 0) != 0) continue;
                    if (std::abs(s.value) > worst) {
                        worst = std::abs(s.value);
                        worst_label = s.label;
                    }
                    if (std::abs(s.value) > k) all = false;
                }
                res.passed = all;
                res.detail = "worst " + worst_label + " |z| = " + render_double(worst) +
                             " vs k = " + render_double(k);
            } else if (op == "speed_label") {
                const double c = cj.at("c").get<double>();
                const std::string expect = cj.at("expect").get<std::string>();
                const SummaryEntry* s = report.find_summary("speed[c=" + render_double(c) + "]");
                if (!s) throw std::runtime_error("no speed summary for c");
                const double code = s->extra.at("label_code");
                const std::string got = code == 0.0   ? "sub-critical"
                                        : code == 1.0 ? "critical"
                                                      : "super-critical";
                res.passed = got == expect;
                res.detail = "label = " + got + " vs expected " + expect;
                if (res.passed && cj.contains("p_expect")) {
                    const double pe = cj.at("p_expect").get<double>();
                    const double pt = cj.value("p_tol", 1e-9);
                    const double err = std::abs(s->value - pe);
                    res.passed = err <= pt;
                    res.detail += "; |p - " + render_double(pe) + "| = " +
                                  render_double(err) + " vs tol " + render_double(pt);
                }
            } else {
                res.passed = false;
                res.detail = "unknown check op '" + op + "'";
            }
        } catch (const std::exception& e) {
            res.passed = false;
            res.detail = e.what();
        }
        report.checks.push_back(std::move(res));
    }
}

} // namespace

RunReport run(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    SpectralProfile profile(cfg.measure, cfg.quadrature_nodes);
    RunReport report;
    report.config_echo = cfg.raw;

    for (const ExperimentSection& sec : cfg.experiments) {
        try {
            if (sec.kind == "exponents")
                run_exponents(cfg, profile, sec, report);
            else if (sec.kind == "simulate")
                run_simulate(cfg, profile, sec, report);
            else if (sec.kind == "martingale")
                run_martingale(cfg, profile, sec, report);
            else if (sec.kind == "line")
                run_line(cfg, profile, sec, report);
            else if (sec.kind == "lln")
                run_lln(cfg, profile, sec, report);
            else if (sec.kind == "wave" || sec.kind == "residual")
                run_wave(cfg, profile, sec, report);
            else if (sec.kind == "speed")
                run_speed(cfg, profile, sec, report);
            else if (sec.kind == "many_to_one")
                run_many_to_one(cfg, profile, sec, report);
        } catch (const SimCapExceeded& e) {
            // resource-cap aborts are carried into the report, not thrown
            report.checks.push_back({sec.name + ":resource_cap", false, e.what()});
            continue;
        }
        apply_checks(sec, report);
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

} // namespace fragwave
