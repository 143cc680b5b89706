#include "fragwave/martingales.hpp"

#include <cmath>
#include <stdexcept>

namespace fragwave {

namespace {

void require_critical(const SpectralProfile& profile, double p) {
    if (std::abs(p - profile.p_bar()) > 1e-9)
        throw std::domain_error("derivative martingale is defined at p_bar = " +
                                std::to_string(profile.p_bar()) + " only, got p = " +
                                std::to_string(p));
}

} // namespace

double additive_W(const SpectralProfile& profile, const Snapshot& snapshot, double p) {
    double sum = 0.0;
    for (const SnapshotEntry& e : snapshot.entries) sum += std::exp(-(p + 1.0) * e.x);
    return std::exp(profile.phi(p) * snapshot.time) * sum;
}

double additive_W_at(const SpectralProfile& profile, const FragTrajectory& traj,
                     double t, double p) {
    double sum = 0.0;
    traj.for_each_alive(t, [&](std::size_t i) { sum += std::exp(-(p + 1.0) * traj.x[i]); });
    return std::exp(profile.phi(p) * t) * sum;
}

double derivative_W(const SpectralProfile& profile, const Snapshot& snapshot, double p) {
    require_critical(profile, p);
    const double pb = profile.p_bar();
    const double slope = profile.phi_prime(pb);
    double sum = 0.0;
    for (const SnapshotEntry& e : snapshot.entries)
        sum += (e.x - snapshot.time * slope) * std::exp(-(pb + 1.0) * e.x);
    return std::exp(profile.phi(pb) * snapshot.time) * sum;
}

double derivative_W_at(const SpectralProfile& profile, const FragTrajectory& traj,
                       double t, double p) {
    require_critical(profile, p);
    const double pb = profile.p_bar();
    const double slope = profile.phi_prime(pb);
    double sum = 0.0;
    traj.for_each_alive(t, [&](std::size_t i) {
        sum += (traj.x[i] - t * slope) * std::exp(-(pb + 1.0) * traj.x[i]);
    });
    return std::exp(profile.phi(pb) * t) * sum;
}

double truncated_derivative_W(const SpectralProfile& profile, const FragTrajectory& traj,
                              double x, double t) {
    if (!(x > 0.0)) throw std::invalid_argument("truncated_derivative_W: x must be > 0");
    const double pb = profile.p_bar();
    const double cp = profile.wave_speed(pb);
    if (!traj.controls.track_lineage_min || traj.lineage_min_birth.empty() ||
        std::abs(traj.controls.lineage_speed - cp) > 1e-9)
        throw std::invalid_argument(
            "truncated_derivative_W: lineage minima missing (simulate with "
            "track_lineage_min and lineage_speed = c_{p_bar})");
    const double weight_scale = std::exp(profile.phi(pb) * t);
    double sum = 0.0;
    traj.for_each_alive(t, [&](std::size_t i) {
        // keep only fragments whose whole lineage stayed above the barrier
        if (x + traj.lineage_min(i, t) > 0.0)
            sum += (x + traj.x[i] - cp * t) * std::exp(-(pb + 1.0) * traj.x[i]);
    });
    return weight_scale * sum;
}

double product_M(const SpectralProfile& profile, const Snapshot& snapshot,
                 const std::function<double(double)>& psi, double p, double x) {
    const double cp = profile.wave_speed(p);
    double log_sum = 0.0;
    for (const SnapshotEntry& e : snapshot.entries) {
        const double v = psi(x + e.x - cp * snapshot.time);
        if (!(v > 0.0) || v > 1.0 + 1e-12)
            throw std::domain_error("product_M: psi value " + std::to_string(v) +
                                    " outside (0, 1]");
        log_sum += std::log(std::min(v, 1.0));
    }
    return std::exp(log_sum);
}

std::vector<DeltaSample> estimate_delta(const SpectralProfile& profile, double p,
                                        double horizon, std::size_t n_reps,
                                        std::uint64_t seed,
                                        const DeltaControls& controls) {
    const double lo = std::max(profile.p_lower(), -1.0);
    if (!(p > lo) || p > profile.p_bar() + 1e-12)
        throw std::domain_error("estimate_delta: p outside (" + std::to_string(lo) +
                                ", p_bar]");
    if (n_reps == 0) throw std::invalid_argument("estimate_delta: n_reps must be positive");
    if (!(horizon > 0.0)) throw std::invalid_argument("estimate_delta: horizon must be > 0");

    const bool critical = std::abs(p - profile.p_bar()) <= 1e-9;
    SimControls sim = controls.sim;
    if (critical) {
        sim.track_lineage_min = true;
        sim.lineage_speed = profile.wave_speed(profile.p_bar());
    }
    const std::vector<double> times = {0.5 * horizon, horizon};

    std::vector<DeltaSample> out;
    out.reserve(n_reps);
    for (std::size_t r = 0; r < n_reps; ++r) {
        double half = 0.0, full = 0.0;
        simulate_with_snapshots(
            profile.measure(), horizon, seed, r, sim, times,
            [&](std::size_t k, double t, const FragTrajectory& traj) {
                const double v = critical
                                     ? truncated_derivative_W(profile, traj,
                                                              controls.x_trunc, t)
                                     : additive_W_at(profile, traj, t, p);
                (k == 0 ? half : full) = v;
            },
            false);
        DeltaSample s;
        s.p = p;
        s.horizon = horizon;
        s.value = full;
        s.diagnostic = std::abs(full - half);
        out.push_back(s);
    }
    return out;
}

} // namespace fragwave
