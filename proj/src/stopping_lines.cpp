#include "fragwave/stopping_lines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fragwave/frag_sim.hpp"  // SimCapExceeded
#include "fragwave/spine.hpp"
#include "fragwave/stats.hpp"

namespace fragwave {

namespace {

// DFS frame; w = mass * e^{c_p t} makes the freeze test one compare
// (w < e^{-z}) and the weight one exp (y = w^{p+1}).
struct Frame {
    double t;
    double m;
    double w;
};

} // namespace

FrozenLineState sweep_line(const SpectralProfile& profile, double p, double z,
                           std::uint64_t seed, std::uint64_t stream,
                           const SweepControls& controls, const TestFunctional* f) {
    if (z < 0.0) throw std::invalid_argument("sweep_line: z must be >= 0");
    const double cp = profile.require_line_tilt(p);
    if (f) {
        if (f->f(0.0) != 0.0)
            throw std::invalid_argument("sweep_line: functional must have f(0) = 0");
        require_admissible(*f, profile, p);
    }

    FrozenLineState state;
    state.p = p;
    state.z = z;
    state.explored = 1;

    if (z == 0.0 && cp <= 0.0) {
        // trivial partition: the whole mass is already on the line
        state.n_frozen = 1;
        state.sum_mass = 1.0;
        state.sum_y = 1.0;
        state.sum_y_capped = 1.0;
        if (f) state.sum_y_f = f->f(0.0);
        if (controls.store_fragments) state.fragments.push_back({0.0, 0.0, 0.0, 1.0});
        return state;
    }

    const double phi_p = profile.phi(p);
    const DislocationMeasure& measure = profile.measure();
    const bool is_ub = measure.kind() == DislocationMeasure::Kind::UniformBinary;
    const double gamma = measure.total_mass();
    const double thresh = std::exp(-z);
    const double pp1 = p + 1.0;

    Rng rng(seed, stream);
    std::vector<Frame> stack;
    stack.reserve(256);
    stack.push_back({0.0, 1.0, 1.0});
    std::vector<double> ratios;

    while (!stack.empty()) {
        const Frame fr = stack.back();
        stack.pop_back();

        if (fr.w < thresh) {
            const double lw = std::log(fr.w);
            const double d = -lw - z;
            const double y = std::exp(pp1 * lw);
            ++state.n_frozen;
            state.sum_mass += fr.m;
            state.sum_y += y;
            if (fr.t <= controls.y_time_cap) state.sum_y_capped += y;
            if (f) state.sum_y_f += y * f->f(d);
            if (fr.t > state.max_freeze_time) state.max_freeze_time = fr.t;
            if (controls.store_fragments)
                state.fragments.push_back({cp * fr.t - lw, fr.t, d, y});
            continue;
        }

        const double dt = rng.exponential(gamma);
        const double death = fr.t + dt;

        if (cp < 0.0) {
            // the line comes down to the fragment: creep crossing at t*
            const double x = -std::log(fr.m);
            const double t_star = (x - z) / cp;
            if (t_star < death) {
                const double at = std::max(t_star, fr.t);
                const double y = std::exp(phi_p * at - pp1 * x);
                ++state.n_frozen;
                state.sum_mass += fr.m;
                state.sum_y += y;
                if (at <= controls.y_time_cap) state.sum_y_capped += y;
                // d = 0 exactly on a creep; f(0) = 0 so no sum_y_f term
                if (at > state.max_freeze_time) state.max_freeze_time = at;
                if (controls.store_fragments) state.fragments.push_back({x, at, 0.0, y});
                continue;
            }
        }

        const double factor = std::exp(cp * dt);
        if (is_ub) {
            state.explored += 2;
            if (state.explored > controls.max_fragments)
                throw SimCapExceeded(state.explored, death);
            const double s = 0.5 + 0.5 * rng.uniform01();
            const double wd = fr.w * factor;
            stack.push_back({death, fr.m * s, wd * s});
            stack.push_back({death, fr.m * (1.0 - s), wd * (1.0 - s)});
        } else {
            measure.sample_ratios(rng, ratios);
            state.explored += ratios.size();
            if (state.explored > controls.max_fragments)
                throw SimCapExceeded(state.explored, death);
            const double wd = fr.w * factor;
            for (double s : ratios) stack.push_back({death, fr.m * s, wd * s});
        }
    }
    return state;
}

std::vector<double> coming_generation(const SpectralProfile& profile, double p,
                                      std::uint64_t seed, std::uint64_t stream,
                                      const SweepControls& controls) {
    if (!(p > 0.0))
        throw std::domain_error("coming_generation: needs p > 0 (trivial line otherwise)");
    SweepControls c = controls;
    c.store_fragments = true;
    const FrozenLineState state = sweep_line(profile, p, 0.0, seed, stream, c);
    std::vector<double> ds;
    ds.reserve(state.fragments.size());
    for (const FrozenFragment& fr : state.fragments) ds.push_back(fr.d);
    return ds;
}

LlnRatio lln_ratio(const SpectralProfile& profile, double p, double z,
                   const TestFunctional& f, std::uint64_t seed, std::uint64_t stream,
                   const SweepControls& controls) {
    SweepControls c = controls;
    c.store_fragments = false;
    const FrozenLineState state = sweep_line(profile, p, z, seed, stream, c, &f);
    LlnRatio out;
    out.numerator = state.sum_y_f;
    out.line_w = state.sum_y;
    out.ratio = state.sum_y_f / state.sum_y;
    out.n_frozen = state.n_frozen;
    return out;
}

LineMeanEstimate line_mean_tail_completed(const SpectralProfile& profile, double p,
                                          double z, double time_cap,
                                          std::size_t n_sweeps, std::size_t n_paths,
                                          std::uint64_t seed) {
    if (!(time_cap > 0.0) || n_sweeps == 0 || n_paths == 0)
        throw std::invalid_argument("line_mean_tail_completed: bad parameters");
    SweepControls controls;
    controls.store_fragments = false;
    controls.y_time_cap = time_cap;

    std::vector<double> capped(n_sweeps), full(n_sweeps);
    for (std::size_t r = 0; r < n_sweeps; ++r) {
        const FrozenLineState st = sweep_line(profile, p, z, seed, r, controls);
        capped[r] = st.sum_y_capped;
        full[r] = st.sum_y;
    }
    const Summary tree = summarize(capped);

    PassageControls cap;
    cap.time_cap = time_cap;
    std::size_t missed = 0;
    for (std::size_t i = 0; i < n_paths; ++i)
        if (!first_passage(profile, p, z, seed ^ 0x5851F42D4C957F2Dull, i, cap).observed)
            ++missed;
    const double tail = static_cast<double>(missed) / static_cast<double>(n_paths);
    const double tail_se =
        std::sqrt(tail * (1.0 - tail) / static_cast<double>(n_paths));

    LineMeanEstimate est;
    est.tree_part = tree.mean;
    est.tree_se = tree.std_error;
    est.tail_part = tail;
    est.tail_se = tail_se;
    est.value = tree.mean + tail;
    est.std_error = std::sqrt(tree.std_error * tree.std_error + tail_se * tail_se);
    est.naive_mean = summarize(full).mean;
    est.n_sweeps = n_sweeps;
    est.n_paths = n_paths;
    return est;
}

std::vector<std::vector<NestedFrozen>> sweep_nested(const SpectralProfile& profile,
                                                    double p,
                                                    const std::vector<double>& z_levels,
                                                    std::uint64_t seed,
                                                    std::uint64_t stream,
                                                    const SweepControls& controls) {
    if (z_levels.empty()) throw std::invalid_argument("sweep_nested: no levels");
    for (std::size_t k = 0; k < z_levels.size(); ++k) {
        if (z_levels[k] < 0.0 || (k > 0 && z_levels[k] <= z_levels[k - 1]))
            throw std::invalid_argument("sweep_nested: levels must be >= 0 and ascending");
    }
    const double cp = profile.require_line_tilt(p);
    if (z_levels.front() == 0.0 && cp <= 0.0)
        throw std::invalid_argument("sweep_nested: z = 0 is trivial for p <= 0");

    const DislocationMeasure& measure = profile.measure();
    const double gamma = measure.total_mass();
    const double phi_p = profile.phi(p);
    const double pp1 = p + 1.0;
    const std::size_t n_levels = z_levels.size();
    std::vector<double> thresh(n_levels);
    for (std::size_t k = 0; k < n_levels; ++k) thresh[k] = std::exp(-z_levels[k]);

    struct NFrame {
        double t, m, w;
        std::uint32_t level;       // next level to cross
        std::int64_t parent_idx;   // index on level-1 list
    };
    std::vector<std::vector<NestedFrozen>> out(n_levels);
    std::vector<NFrame> stack;
    stack.push_back({0.0, 1.0, 1.0, 0, -1});
    Rng rng(seed, stream);
    std::vector<double> ratios;
    std::uint64_t explored = 1;

    while (!stack.empty()) {
        NFrame fr = stack.back();
        stack.pop_back();

        // crossings at birth (a single jump may clear several lines)
        while (fr.level < n_levels && fr.w < thresh[fr.level]) {
            const double lw = std::log(fr.w);
            const double x = cp * fr.t - lw;
            const double d = -lw - z_levels[fr.level];
            const double y = std::exp(pp1 * lw);
            out[fr.level].push_back({x, fr.t, d, y, fr.parent_idx});
            fr.parent_idx = static_cast<std::int64_t>(out[fr.level].size()) - 1;
            ++fr.level;
        }
        if (fr.level == n_levels) continue;

        const double dt = rng.exponential(gamma);
        const double death = fr.t + dt;

        if (cp < 0.0) {
            const double x = -std::log(fr.m);
            bool done = false;
            while (fr.level < n_levels) {
                const double t_star = (x - z_levels[fr.level]) / cp;
                if (t_star >= death) break;
                const double at = std::max(t_star, fr.t);
                const double y = std::exp(phi_p * at - pp1 * x);
                out[fr.level].push_back({x, at, 0.0, y, fr.parent_idx});
                fr.parent_idx = static_cast<std::int64_t>(out[fr.level].size()) - 1;
                ++fr.level;
                if (fr.level == n_levels) done = true;
            }
            if (done) continue;
        }

        const double factor = std::exp(cp * dt);
        measure.sample_ratios(rng, ratios);
        explored += ratios.size();
        if (explored > controls.max_fragments) throw SimCapExceeded(explored, death);
        const double wd = fr.w * factor;
        for (double s : ratios)
            stack.push_back({death, fr.m * s, wd * s, fr.level, fr.parent_idx});
    }
    return out;
}

} // namespace fragwave
