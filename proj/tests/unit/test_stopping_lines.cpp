#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "fragwave/frag_sim.hpp"
#include "fragwave/spine.hpp"
#include "fragwave/stats.hpp"
#include "fragwave/stopping_lines.hpp"

using namespace fragwave;

namespace {

const double kSqrt2 = std::sqrt(2.0);

SpectralProfile ub() { return SpectralProfile(DislocationMeasure::uniform_binary()); }

} // namespace

TEST_SUITE("stopping_lines") {

TEST_CASE("trivial line for p <= 0 at z = 0") {
    const SpectralProfile pu = ub();
    for (double p : {-0.5, 0.0}) {
        const FrozenLineState st = sweep_line(pu, p, 0.0, 21);
        REQUIRE(st.n_frozen == 1);
        CHECK(st.fragments[0].x == 0.0);
        CHECK(st.fragments[0].freeze_time == 0.0);
        CHECK(st.sum_y == 1.0);
        CHECK(st.sum_mass == 1.0);
    }
}

TEST_CASE("positive tilt at z = 0: a genuine coming generation") {
    const SpectralProfile pu = ub();
    const FrozenLineState st = sweep_line(pu, 1.0, 0.0, 33);
    CHECK(st.n_frozen >= 2);
    for (const FrozenFragment& fr : st.fragments) {
        CHECK(fr.freeze_time > 0.0);
        CHECK(fr.d > 0.0);  // no creeping when c_p > 0
        CHECK(fr.y > 0.0);
        CHECK(fr.x > 0.0);
    }
    CHECK(std::abs(st.sum_mass - 1.0) <= 1e-9);
}

TEST_CASE("mass conservation across dissecting lines") {
    const SpectralProfile pu = ub();
    for (double p : {-0.5, 0.5, 1.0, kSqrt2}) {
        for (double z : {0.5, 2.0}) {
            const FrozenLineState st = sweep_line(pu, p, z, 101 + int(p * 10));
            CHECK(std::abs(st.sum_mass - 1.0) <= 1e-9);
            CHECK(st.n_frozen == st.fragments.size());
        }
    }
}

TEST_CASE("determinism and input validation") {
    const SpectralProfile pu = ub();
    const FrozenLineState a = sweep_line(pu, 1.0, 1.0, 5, 3);
    const FrozenLineState b = sweep_line(pu, 1.0, 1.0, 5, 3);
    REQUIRE(a.n_frozen == b.n_frozen);
    for (std::size_t i = 0; i < a.fragments.size(); ++i) {
        CHECK(a.fragments[i].x == b.fragments[i].x);
        CHECK(a.fragments[i].freeze_time == b.fragments[i].freeze_time);
    }
    CHECK_THROWS_AS(sweep_line(pu, 1.0, -0.5, 1), std::invalid_argument);
    CHECK_THROWS_AS(sweep_line(pu, -1.2, 1.0, 1), std::domain_error);
    CHECK_THROWS_AS(sweep_line(pu, 2.0, 1.0, 1), std::domain_error);

    SweepControls tiny;
    tiny.max_fragments = 16;
    CHECK_THROWS_AS(sweep_line(pu, kSqrt2, 6.0, 1, 0, tiny), SimCapExceeded);
}

TEST_CASE("line martingale: exact values and unit mean") {
    const SpectralProfile pu = ub();
    // p = 0 weights are masses, so W is exactly 1 on any sweep
    for (double z : {1.0, 3.0}) {
        const FrozenLineState st = sweep_line(pu, 0.0, z, 7);
        CHECK(std::abs((line_W(st)) - (1.0)) <= (1e-12));
    }
    // sub-critical tilt: the plain sample mean is well behaved
    std::vector<double> ws;
    SweepControls light;
    light.store_fragments = false;
    for (std::size_t r = 0; r < 4000; ++r)
        ws.push_back(line_W(sweep_line(pu, 1.0, 1.0, 911, r, light)));
    const Summary s = summarize(ws);
    CHECK(std::abs(s.mean - 1.0) <= 4.0 * s.std_error);

    // critical tilt: unit mean through the freeze-time decomposition
    const LineMeanEstimate est =
        line_mean_tail_completed(pu, pu.p_bar(), 2.0, 12.0, 4000, 40000, 912);
    CHECK(std::abs(est.value - 1.0) <= 4.0 * est.std_error);
    CHECK(est.naive_mean < est.value);  // the heavy tail hides mass
}

TEST_CASE("truncated many-to-one: sweep against the tilted spine") {
    // E[sum_{ell_i <= T} y_i] = P^(p)(tau_z <= T) for every T; the two
    // sides come from independent simulators
    const SpectralProfile pu = ub();
    const double p = pu.p_bar(), z = 1.0;
    for (double T : {2.0, 6.0}) {
        SweepControls controls;
        controls.store_fragments = false;
        controls.y_time_cap = T;
        std::vector<double> tree(8000);
        for (std::size_t r = 0; r < tree.size(); ++r)
            tree[r] = sweep_line(pu, p, z, 1234, r, controls).sum_y_capped;
        const Summary ts = summarize(tree);
        PassageControls cap;
        cap.time_cap = T;
        std::size_t crossed = 0;
        const std::size_t n = 40000;
        for (std::size_t i = 0; i < n; ++i)
            if (first_passage(pu, p, z, 777, i, cap).observed) ++crossed;
        const double spine = double(crossed) / n;
        const double spine_se = std::sqrt(spine * (1.0 - spine) / n);
        const double err = std::sqrt(ts.std_error * ts.std_error + spine_se * spine_se);
        CHECK(std::abs(ts.mean - spine) <= 4.0 * err);
    }
}

TEST_CASE("coming generation: Malthusian and weighted-distance identities") {
    const SpectralProfile pu = ub();
    const double p = kSqrt2;
    std::vector<double> malthus, weighted;
    for (std::size_t r = 0; r < 20000; ++r) {
        const FrozenLineState st = sweep_line(pu, p, 0.0, 404, r);
        double m = 0.0, wd = 0.0;
        for (const FrozenFragment& fr : st.fragments) {
            m += std::exp(-(p + 1.0) * fr.d);
            wd += fr.y * fr.d;
        }
        // at z = 0 the Malthusian sum equals the line martingale
        CHECK(std::abs((m) - (line_W(st))) <= (1e-9));
        malthus.push_back(m);
        weighted.push_back(wd);
    }
    const Summary sm = summarize(malthus), sw = summarize(weighted);
    CHECK(std::abs(sm.mean - 1.0) <= 4.0 * sm.std_error);
    // tilted mean distance = overshoot mean = 1/(p+2)
    CHECK(std::abs(sw.mean - 1.0 / (p + 2.0)) <= 4.0 * sw.std_error);

    CHECK_THROWS_AS(coming_generation(pu, -0.5, 1), std::domain_error);
    const auto ds = coming_generation(pu, 1.0, 17);
    CHECK(ds.size() >= 2);
    for (double d : ds) CHECK(d > 0.0);
}

TEST_CASE("lln functionals on single sweeps") {
    const SpectralProfile pu = ub();
    const LlnRatio zero = lln_ratio(pu, kSqrt2, 1.0, TestFunctional::zero(), 3);
    CHECK(zero.numerator == 0.0);
    CHECK(zero.ratio == 0.0);

    // identity at a moderate level: the ratio approaches 1/(2+sqrt2)
    std::vector<double> ratios;
    for (std::size_t r = 0; r < 30; ++r)
        ratios.push_back(lln_ratio(pu, kSqrt2, 5.0, TestFunctional::identity(), 88, r).ratio);
    const double med = median_of(ratios);
    CHECK(std::abs(med - 1.0 / (2.0 + kSqrt2)) <= 0.10 / (2.0 + kSqrt2));

    // p = 0 numerator approaches Q^0(identity) W(infty,0) = 0.5
    std::vector<double> nums;
    for (std::size_t r = 0; r < 20; ++r)
        nums.push_back(lln_ratio(pu, 0.0, 8.0, TestFunctional::identity(), 89, r).numerator);
    CHECK(std::abs(median_of(nums) - 0.5) <= 0.08 * 0.5);
}

TEST_CASE("nested lines: descent structure and martingale along z") {
    const SpectralProfile pu = ub();
    const std::vector<double> levels = {1.0, 2.0};
    std::vector<double> diffs;
    for (std::size_t r = 0; r < 2000; ++r) {
        // sub-critical tilt keeps the paired differences light-tailed
        const auto frozen = sweep_nested(pu, 1.0, levels, 272, r);
        REQUIRE(frozen.size() == 2);
        double w1 = 0.0, w2 = 0.0;
        for (const NestedFrozen& fr : frozen[0]) {
            CHECK(fr.parent_index == -1);
            w1 += fr.y;
        }
        for (const NestedFrozen& fr : frozen[1]) {
            REQUIRE(fr.parent_index >= 0);
            REQUIRE(fr.parent_index < std::int64_t(frozen[0].size()));
            const NestedFrozen& parent = frozen[0][fr.parent_index];
            CHECK(fr.freeze_time >= parent.freeze_time);  // increasing lines
            CHECK(fr.x >= parent.x);
            w2 += fr.y;
        }
        diffs.push_back(w2 - w1);
    }
    const Summary s = summarize(diffs);
    CHECK(std::abs(s.mean) <= 4.0 * s.std_error);  // W martingale along lines
}

TEST_CASE("line distances agree with spine overshoots") {
    const SpectralProfile pu = ub();
    const double p = kSqrt2;
    std::vector<std::pair<double, double>> weighted;  // (d, y)
    for (std::size_t r = 0; r < 5000; ++r) {
        const FrozenLineState st = sweep_line(pu, p, 0.0, 515, r);
        for (const FrozenFragment& fr : st.fragments) weighted.emplace_back(fr.d, fr.y);
    }
    const auto overshoots = sample_overshoots(pu, p, 0.0, 20000, 626);
    const double ks = ks_weighted_vs_sample(weighted, overshoots);
    CHECK(ks <= 0.03);
}

} // TEST_SUITE
