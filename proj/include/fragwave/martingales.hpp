// Additive, derivative, truncated-derivative and product martingales on
// population snapshots, and the Monte Carlo estimation of the limits
// Delta_p feeding the travelling-wave construction.

#ifndef FRAGWAVE_MARTINGALES_HPP
#define FRAGWAVE_MARTINGALES_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "fragwave/dislocation.hpp"
#include "fragwave/frag_sim.hpp"

namespace fragwave {

// e^{phi(p) t} sum_i e^{-(p+1) x_i} over the alive population
double additive_W(const SpectralProfile& profile, const Snapshot& snapshot, double p);
double additive_W_at(const SpectralProfile& profile, const FragTrajectory& traj,
                     double t, double p);

// the signed derivative martingale, defined at the critical tilt only
double derivative_W(const SpectralProfile& profile, const Snapshot& snapshot, double p);
double derivative_W_at(const SpectralProfile& profile, const FragTrajectory& traj,
                       double t, double p);

// positive truncated derivative martingale with mean x; needs lineage
// minima tracked at simulation time with speed c_{p_bar}
double truncated_derivative_W(const SpectralProfile& profile, const FragTrajectory& traj,
                              double x, double t);

// product martingale Prod_i psi(x + x_i - c_p t); psi must map into (0,1]
double product_M(const SpectralProfile& profile, const Snapshot& snapshot,
                 const std::function<double(double)>& psi, double p, double x);

struct DeltaSample {
    double p = 0.0;
    double horizon = 0.0;
    double value = 0.0;       // W(T,p), or the truncated derivative at p_bar
    double diagnostic = 0.0;  // |value(T) - value(T/2)|
};

struct DeltaControls {
    double x_trunc = 8.0;  // truncation threshold for the critical case
    SimControls sim;
};

// One sample of Delta_p per replicate. Sub-critical tilts use W(T,p);
// the critical tilt uses the positive truncated derivative martingale.
std::vector<DeltaSample> estimate_delta(const SpectralProfile& profile, double p,
                                        double horizon, std::size_t n_reps,
                                        std::uint64_t seed,
                                        const DeltaControls& controls = {});

} // namespace fragwave

#endif
