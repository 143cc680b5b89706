// The tagged fragment xi_t = -log |Pi_1(t)| under the tilted laws: compound
// Poisson subordinator paths, first passage over moving lines, and the
// renewal / CMJ limit functionals Q^(p)(f).

#ifndef FRAGWAVE_SPINE_HPP
#define FRAGWAVE_SPINE_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fragwave/dislocation.hpp"
#include "fragwave/functionals.hpp"

namespace fragwave {

struct SpinePath {
    double tilt_p = 0.0;
    double drift = 0.0;  // c_p, subtracted to form Y_t = xi_t - c_p t
    double horizon = 0.0;
    std::vector<double> jump_times;  // strictly increasing
    std::vector<double> jump_sizes;  // all > 0

    double xi(double t) const;               // sum of jumps at times <= t
    double y(double t) const { return xi(t) - drift * t; }
    double xi_end() const;
};

struct FirstPassage {
    double level = 0.0;
    bool observed = false;  // false when the time cap was hit first
    double tau = 0.0;       // meaningful only when observed
    double overshoot = 0.0; // Y_tau - z; zero exactly on a drift crossing
    bool crept = false;
};

struct PassageControls {
    double time_cap = 1e4;
};

SpinePath simulate_tagged(const SpectralProfile& profile, double p, double horizon,
                          std::uint64_t seed, std::uint64_t stream = 0);

FirstPassage first_passage(const SpectralProfile& profile, double p, double z,
                           std::uint64_t seed, std::uint64_t stream = 0,
                           const PassageControls& controls = {});

// Q^(p)(f) for p in (p_lower, 0]: deterministic quadrature of
// (1/(phi'(p)-c_p)) int F(y) e^{-py} m(dy), F(y) = int_0^y f.
struct QSmallResult {
    double value = 0.0;
    double truncation_bound = 0.0;  // tail of the truncated quadrature
    bool lattice_flagged = false;   // renewal hypotheses need non-lattice m
};
QSmallResult q_small(const SpectralProfile& profile, double p, const TestFunctional& f);

// Q^(p)(f) for p in (0, p_bar]: Monte Carlo over overshoots O = Y_{tau_0},
// ratio E[F(O)] / E[O] with a delta-method standard error.
struct QLargeResult {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
};
QLargeResult q_large(const SpectralProfile& profile, double p, const TestFunctional& f,
                     std::size_t n_samples, std::uint64_t seed);

// Exponential-moment identity for the ladder height measure: lhs integrates
// e^{eps x} against the two-term density, rhs is the closed form
// [phi(p+eta) - phi(p-eps)] / (eta + eps).
struct LadderHeightCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double eta = 0.0;
};
LadderHeightCheck ladder_height_check(const SpectralProfile& profile, double p, double eps);

// Fixed-time many-to-one comparison: tree side is the weighted population
// statistic, spine side the tilted tagged fragment.
struct ManyToOneCheck {
    double tree_mean = 0.0, tree_se = 0.0;
    double spine_mean = 0.0, spine_se = 0.0;
    double z_score = 0.0;
};
ManyToOneCheck many_to_one_check(const SpectralProfile& profile, double p, double t,
                                 const std::function<double(double)>& g,
                                 std::size_t n_tree_runs, std::size_t n_spine_paths,
                                 std::uint64_t seed);

// overshoot sampler shared by q_large and the line-agreement tests
std::vector<double> sample_overshoots(const SpectralProfile& profile, double p, double z,
                                      std::size_t n, std::uint64_t seed,
                                      const PassageControls& controls = {});

// all jump atoms on a common arithmetic grid (within 1e-9)
bool jump_law_is_lattice(const JumpLaw& law);

} // namespace fragwave

#endif
