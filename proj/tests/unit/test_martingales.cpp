#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "fragwave/martingales.hpp"
#include "fragwave/stats.hpp"

using namespace fragwave;

namespace {

SpectralProfile ub() { return SpectralProfile(DislocationMeasure::uniform_binary()); }

} // namespace

TEST_SUITE("martingales") {

TEST_CASE("additive martingale basics") {
    const SpectralProfile pu = ub();
    const FragTrajectory root = simulate(pu.measure(), 0.0, 1);
    const Snapshot at0 = snapshot_at(root, 0.0);
    for (double p : {-0.5, 0.0, 1.0, pu.p_bar()})
        CHECK(std::abs((additive_W(pu, at0, p)) - (1.0)) <= (1e-12));

    // a binary-half tree conditioned on one split at time tau has
    // W = e^{phi(p) tau} 2^{-p}
    const SpectralProfile pb{DislocationMeasure::binary_half()};
    Snapshot one_split;
    one_split.time = 0.7;
    one_split.entries = {{std::log(2.0), 0.7, 1}, {std::log(2.0), 0.7, 2}};
    for (double p : {0.5, 1.0})
        CHECK(std::abs((additive_W(pb, one_split, p)) - (std::exp(pb.phi(p) * 0.7) * std::pow(2.0, -p))) <= (1e-12));
}

TEST_CASE("W(t, 0) is exactly the conserved mass") {
    const SpectralProfile pu = ub();
    SimControls exact;
    exact.size_floor = 0.0;
    for (std::size_t r = 0; r < 100; ++r) {
        const FragTrajectory traj = simulate_stream(pu.measure(), 3.0, 345, r, exact);
        CHECK(std::abs(additive_W_at(pu, traj, 3.0, 0.0) - 1.0) <= 1e-9);
    }
}

TEST_CASE("unit mean and the nested-time martingale property") {
    const SpectralProfile pu = ub();
    const double p = 0.5;
    std::vector<double> w1, w2, diff;
    for (std::size_t r = 0; r < 5000; ++r) {
        double a = 0, b = 0;
        simulate_with_snapshots(
            pu.measure(), 2.0, 2718, r, {}, {1.0, 2.0},
            [&](std::size_t k, double t, const FragTrajectory& st) {
                (k == 0 ? a : b) = additive_W_at(pu, st, t, p);
            },
            false);
        w1.push_back(a);
        w2.push_back(b);
        diff.push_back(b - a);
    }
    const Summary s1 = summarize(w1), s2 = summarize(w2), sd = summarize(diff);
    CHECK(std::abs(s1.mean - 1.0) <= 4.0 * s1.std_error);
    CHECK(std::abs(s2.mean - 1.0) <= 4.0 * s2.std_error);
    CHECK(std::abs(sd.mean) <= 4.0 * sd.std_error);  // paired increments
}

TEST_CASE("derivative martingale: definition checks") {
    const SpectralProfile pu = ub();
    const double pb = pu.p_bar();
    const FragTrajectory root = simulate(pu.measure(), 0.0, 1);
    const Snapshot at0 = snapshot_at(root, 0.0);
    CHECK(derivative_W(pu, at0, pb) == 0.0);
    CHECK_THROWS_AS(derivative_W(pu, at0, 1.0), std::domain_error);

    // -d/dp of the additive martingale by central differences
    const FragTrajectory traj = simulate(pu.measure(), 2.0, 31);
    const Snapshot snap = snapshot_at(traj, 2.0);
    const double h = 1e-4;
    const double fd = -(additive_W(pu, snap, pb + h) - additive_W(pu, snap, pb - h)) /
                      (2.0 * h);
    CHECK(std::abs((derivative_W(pu, snap, pb)) - (fd)) <= (1e-6));

    std::vector<double> dws;
    for (std::size_t r = 0; r < 5000; ++r) {
        const FragTrajectory t = simulate_stream(pu.measure(), 1.0, 99, r);
        dws.push_back(derivative_W_at(pu, t, 1.0, pb));
    }
    const Summary s = summarize(dws);
    CHECK(std::abs(s.mean) <= 4.0 * s.std_error);  // zero-mean martingale
}

TEST_CASE("truncated derivative martingale") {
    const SpectralProfile pu = ub();
    const double pbar = pu.p_bar();
    SimControls tracked;
    tracked.track_lineage_min = true;
    tracked.lineage_speed = pu.wave_speed(pbar);

    const FragTrajectory root =
        simulate_with_snapshots(pu.measure(), 0.0, 5, 0, tracked, {}, nullptr, true);
    CHECK(std::abs((truncated_derivative_W(pu, root, 3.0, 0.0)) - (3.0)) <= (1e-12));

    const double x = 2.0;
    std::vector<double> vals;
    for (std::size_t r = 0; r < 5000; ++r) {
        const FragTrajectory t =
            simulate_with_snapshots(pu.measure(), 1.5, 77, r, tracked, {}, nullptr, false);
        const double v = truncated_derivative_W(pu, t, x, 1.5);
        CHECK(v >= 0.0);
        vals.push_back(v);
    }
    const Summary s = summarize(vals);
    CHECK(std::abs(s.mean - x) <= 4.0 * s.std_error);  // mean-x martingale

    // lineage data must have been tracked with the right speed
    const FragTrajectory plain = simulate(pu.measure(), 1.0, 5);
    CHECK_THROWS_AS(truncated_derivative_W(pu, plain, 2.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(truncated_derivative_W(pu, root, -1.0, 0.0), std::invalid_argument);
}

TEST_CASE("product martingale evaluation") {
    const SpectralProfile pu = ub();
    const FragTrajectory traj = simulate(pu.measure(), 1.5, 8);
    const Snapshot snap = snapshot_at(traj, 1.5);
    auto one = [](double) { return 1.0; };
    CHECK(product_M(pu, snap, one, 1.0, 0.3) == 1.0);

    const Snapshot at0 = snapshot_at(traj, 0.0);
    auto gumbel = [](double u) { return std::exp(-std::exp(-2.0 * u)); };
    CHECK(std::abs((product_M(pu, at0, gumbel, 1.0, 0.3)) - (gumbel(0.3))) <= (1e-12));

    auto bad = [](double) { return 1.5; };
    CHECK_THROWS_AS(product_M(pu, snap, bad, 1.0, 0.0), std::domain_error);
    const double m = product_M(pu, snap, gumbel, 1.0, 1.0);
    CHECK(m > 0.0);
    CHECK(m <= 1.0);
}

TEST_CASE("delta estimation") {
    const SpectralProfile pu = ub();
    // conservative measure at p = 0: every sample is exactly the unit mass
    const auto at0 = estimate_delta(pu, 0.0, 4.0, 50, 12);
    for (const DeltaSample& s : at0) {
        CHECK(std::abs(s.value - 1.0) <= 1e-9);
        CHECK(s.diagnostic <= 1e-9);
    }
    // critical tilt: nonnegative with positive median
    const auto crit = estimate_delta(pu, pu.p_bar(), 4.0, 1000, 13);
    std::vector<double> vals;
    for (const DeltaSample& s : crit) {
        CHECK(s.value >= 0.0);
        CHECK(s.p == pu.p_bar());
        vals.push_back(s.value);
    }
    CHECK(median_of(vals) > 0.0);

    CHECK_THROWS_AS(estimate_delta(pu, -1.5, 4.0, 10, 1), std::domain_error);
    CHECK_THROWS_AS(estimate_delta(pu, 2.0, 4.0, 10, 1), std::domain_error);
}

} // TEST_SUITE
