#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "fragwave/dislocation.hpp"
#include "fragwave/rng.hpp"
#include "test_util.hpp"

using namespace fragwave;

namespace {

// closed forms for the two fixtures, derived by direct integration
double phi_ub_closed(double q) { return q / (q + 2.0); }
double phi_bh_closed(double q) { return 1.0 - std::pow(2.0, -q); }

const double kSqrt2 = std::sqrt(2.0);

SpectralProfile ub() { return SpectralProfile(DislocationMeasure::uniform_binary()); }
SpectralProfile bh() { return SpectralProfile(DislocationMeasure::binary_half()); }

DislocationMeasure mixed_measure() {
    // the two-atom example: thirds at rate 1, halves at rate 1
    return DislocationMeasure::discrete_atoms(
        {{1.0, {1.0 / 3, 1.0 / 3, 1.0 / 3}}, {1.0, {0.5, 0.5}}});
}

} // namespace

TEST_SUITE("dislocation") {

TEST_CASE("phi matches the closed forms on the standard grid") {
    const SpectralProfile pu = ub();
    const SpectralProfile pb = bh();
    const double grid[] = {-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 5.0};
    for (double q : grid) {
        CHECK(std::abs((pu.phi(q)) - (phi_ub_closed(q))) <= (1e-10));
        CHECK(std::abs((pb.phi(q)) - (phi_bh_closed(q))) <= (1e-10));
    }
}

TEST_CASE("phi spot values and the quadrature oracle") {
    const SpectralProfile pu = ub();
    // uniform-binary, q = 2: closed form 0.5, cross-checked by Simpson
    CHECK(std::abs((pu.phi(2.0)) - (0.5)) <= (1e-10));
    const double oracle = testutil::simpson(
        [](double s) {
            return 2.0 * (1.0 - std::pow(s, 3.0) - std::pow(1.0 - s, 3.0));
        },
        0.5, 1.0, 20000);
    CHECK(std::abs((oracle) - (0.5)) <= (1e-10));
    CHECK(std::abs((pu.phi(2.0)) - (oracle)) <= (1e-9));

    CHECK(pu.phi(0.0) == 0.0);
    CHECK(bh().phi(0.0) == 0.0);
    CHECK(std::abs((bh().phi(1.0)) - (0.5)) <= (1e-12));
}

TEST_CASE("phi_prime closed values and finite differences") {
    const SpectralProfile pu = ub();
    const SpectralProfile pb = bh();
    CHECK(std::abs((pu.phi_prime(0.0)) - (0.5)) <= (1e-10));
    CHECK(std::abs((pu.phi_prime(kSqrt2)) - (3.0 - 2.0 * kSqrt2)) <= (1e-10));
    CHECK(std::abs((pb.phi_prime(0.0)) - (std::log(2.0))) <= (1e-12));

    for (double q : {-0.5, 0.0, 0.7, 1.0, 2.0, 3.5}) {
        const double h = 1e-5;
        const double fd_u = (pu.phi(q + h) - pu.phi(q - h)) / (2 * h);
        const double fd_b = (pb.phi(q + h) - pb.phi(q - h)) / (2 * h);
        CHECK(std::abs((pu.phi_prime(q)) - (fd_u)) <= (1e-6));
        CHECK(std::abs((pb.phi_prime(q)) - (fd_b)) <= (1e-6));
    }
}

TEST_CASE("p_bar: closed value, bisection oracle, defining residual") {
    const SpectralProfile pu = ub();
    CHECK(std::abs((pu.p_bar()) - (kSqrt2)) <= (1e-9));

    // independent oracle: bisection on the closed-form equation
    const double oracle_ub = testutil::bisect(
        [](double p) {
            return (p + 1.0) * 2.0 / ((p + 2.0) * (p + 2.0)) - p / (p + 2.0);
        },
        1.0, 2.0);
    CHECK(std::abs((oracle_ub) - (kSqrt2)) <= (1e-10));

    const SpectralProfile pb = bh();
    const double oracle_bh = testutil::bisect(
        [](double p) {
            const double pw = std::pow(2.0, -p);
            return (p + 1.0) * pw * std::log(2.0) - (1.0 - pw);
        },
        1.0, 2.0);
    CHECK(std::abs((pb.p_bar()) - (oracle_bh)) <= (1e-9));
    CHECK(std::abs((oracle_bh) - (1.4213)) <= (2e-4));

    for (const SpectralProfile& pr : {pu, pb}) {
        const double p = pr.p_bar();
        CHECK(std::abs((p + 1.0) * pr.phi_prime(p) - pr.phi(p)) <= 1e-9);
    }
}

TEST_CASE("wave speeds") {
    const SpectralProfile pu = ub();
    CHECK(pu.wave_speed(0.0) == 0.0);
    CHECK(bh().wave_speed(0.0) == 0.0);
    CHECK(std::abs((pu.wave_speed(kSqrt2)) - (3.0 - 2.0 * kSqrt2)) <= (1e-9));
    CHECK(std::abs((pu.wave_speed(1.0)) - (1.0 / 6.0)) <= (1e-12));
    CHECK_THROWS_AS(pu.wave_speed(-1.0), std::domain_error);
    CHECK_THROWS_AS(pu.wave_speed(-2.5), std::domain_error);
}

TEST_CASE("domain errors below p_lower name the boundary") {
    const SpectralProfile pu = ub();
    CHECK(pu.p_lower() == -2.0);
    CHECK(std::isinf(bh().p_lower()));
    try {
        pu.phi(-2.0);
        FAIL("expected domain_error");
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()).find("-2") != std::string::npos);
    }
}

TEST_CASE("jump laws") {
    const SpectralProfile pu = ub();
    const SpectralProfile pb = bh();

    const JumpLaw bh0 = pb.jump_law(0.0);
    REQUIRE(bh0.atoms.size() == 1);
    CHECK(std::abs((bh0.atoms[0].first) - (std::log(2.0))) <= (1e-15));
    CHECK(std::abs((bh0.atoms[0].second) - (1.0)) <= (1e-12));
    CHECK(std::abs((bh0.total_rate) - (1.0)) <= (1e-12));

    const JumpLaw ub0 = pu.jump_law(0.0);
    CHECK(ub0.is_density);
    CHECK(ub0.density_decay == doctest::Approx(2.0));
    CHECK(std::abs((ub0.total_rate) - (1.0)) <= (1e-12));
    CHECK(std::abs((pu.jump_law(1.0).total_rate) - (2.0 / 3.0)) <= (1e-12));

    // tilted-consistency: int (1 - e^{-qx}) m^(p)(dx) = phi(p+q) - phi(p)
    for (double p : {0.0, 1.0}) {
        for (double q : {0.5, 1.0, 2.0}) {
            const JumpLaw lu = pu.jump_law(p);
            const double lhs_u = testutil::simpson(
                [&](double x) {
                    return (1.0 - std::exp(-q * x)) * 2.0 *
                           std::exp(-lu.density_decay * x);
                },
                0.0, 50.0, 40000);
            CHECK(std::abs((lhs_u) - (pu.phi(p + q) - pu.phi(p))) <= (1e-8));

            const JumpLaw lb = pb.jump_law(p);
            double lhs_b = 0.0;
            for (const auto& [x, r] : lb.atoms) lhs_b += (1.0 - std::exp(-q * x)) * r;
            CHECK(std::abs((lhs_b) - (pb.phi(p + q) - pb.phi(p))) <= (1e-10));
        }
    }
}

TEST_CASE("jump law sampling matches the law") {
    const SpectralProfile pu = ub();
    const JumpLaw law = pu.jump_law(1.0);
    Rng rng(42, 0);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) sum += law.sample(rng);
    // Exp(3) mean with 4-SE slack
    CHECK(std::abs((sum / n) - (1.0 / 3.0)) <= (4.0 / 3.0 / std::sqrt(double(n))));
    CHECK(std::abs((law.mean_jump()) - (1.0 / 3.0)) <= (1e-12));
}

TEST_CASE("eta roots") {
    const SpectralProfile pu = ub();
    CHECK(std::abs((pu.eta_root(1.0)) - (1.0)) <= (1e-9));
    CHECK(std::abs((pu.eta_root(pu.p_bar())) - (0.0)) <= (1e-9));
    for (double p : {0.3, 0.8, 1.2}) {
        const double eta = pu.eta_root(p);
        const double cp = pu.wave_speed(p);
        CHECK(std::abs(cp * eta - pu.phi(eta + p) + pu.phi(p)) <= 1e-9);
        CHECK(eta >= 0.0);
    }
    const SpectralProfile pm = SpectralProfile(mixed_measure());
    for (double p : {0.5, pm.p_bar()}) {
        const double eta = pm.eta_root(p);
        const double cp = pm.wave_speed(p);
        CHECK(std::abs(cp * eta - pm.phi(eta + p) + pm.phi(p)) <= 1e-9);
    }
    CHECK_THROWS_AS(pu.eta_root(-0.5), std::domain_error);
    CHECK_THROWS_AS(pu.eta_root(2.5), std::domain_error);
}

TEST_CASE("measure validation") {
    CHECK_THROWS_AS(DislocationMeasure::discrete_atoms({{1.0, {0.4, 0.6}}}),
                    std::invalid_argument);  // not descending
    CHECK_THROWS_AS(DislocationMeasure::discrete_atoms({{1.0, {0.6, 0.3}}}),
                    std::invalid_argument);  // not conservative
    CHECK_THROWS_AS(DislocationMeasure::discrete_atoms({{0.0, {0.5, 0.5}}}),
                    std::invalid_argument);  // zero weight
    CHECK_THROWS_AS(DislocationMeasure::discrete_atoms({{1.0, {1.0}}}),
                    std::invalid_argument);  // no-op split
    CHECK_THROWS_AS(DislocationMeasure::discrete_atoms({}), std::invalid_argument);

    // sub-tolerance drift is scrubbed
    const auto m = DislocationMeasure::discrete_atoms({{2.0, {0.5 + 4e-13, 0.5}}});
    double sum = 0.0;
    for (double s : m.atoms()[0].ratios) sum += s;
    CHECK(std::abs((sum) - (1.0)) <= (1e-15));
}

TEST_CASE("shape invariants hold for random conservative measures") {
    Rng rng(7, 0);
    for (int trial = 0; trial < 20; ++trial) {
        // random atoms: 1-3 vectors, 2-4 parts each, normalized descending
        std::vector<DiscreteAtom> atoms;
        const int n_atoms = 1 + int(rng.uniform01() * 3);
        for (int a = 0; a < n_atoms; ++a) {
            const int parts = 2 + int(rng.uniform01() * 3);
            std::vector<double> r(parts);
            double sum = 0.0;
            for (double& v : r) {
                v = 0.05 + rng.uniform01();
                sum += v;
            }
            for (double& v : r) v /= sum;
            std::sort(r.begin(), r.end(), std::greater<>());
            atoms.push_back({0.2 + 2.0 * rng.uniform01(), std::move(r)});
        }
        const SpectralProfile pr{DislocationMeasure::discrete_atoms(atoms)};
        CHECK(pr.phi(0.0) == 0.0);
        const double pb = pr.p_bar();
        CHECK(pb > 0.0);
        CHECK(std::abs((pb + 1.0) * pr.phi_prime(pb) - pr.phi(pb)) <= 1e-9);
        // c_p below the critical speed, sampled on the wave range
        const double c_crit = pr.wave_speed(pb);
        for (double frac : {0.25, 0.5, 0.75}) {
            const double p = -0.9 + frac * (pb + 0.9);
            CHECK(pr.wave_speed(p) < c_crit + 1e-12);
        }
        // jump-law consistency at p = 0, q = 1
        const JumpLaw law = pr.jump_law(0.0);
        double lhs = 0.0;
        for (const auto& [x, r] : law.atoms) lhs += (1.0 - std::exp(-x)) * r;
        CHECK(std::abs((lhs) - (pr.phi(1.0))) <= (1e-10));
        // conservative draws
        std::vector<double> ratios;
        const DislocationMeasure& m = pr.measure();
        for (int k = 0; k < 10; ++k) {
            m.sample_ratios(rng, ratios);
            double s = 0.0;
            for (double v : ratios) s += v;
            CHECK(std::abs((s) - (1.0)) <= (1e-12));
        }
    }
}

} // TEST_SUITE
