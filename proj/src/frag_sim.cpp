#include "fragwave/frag_sim.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "fragwave/stats.hpp"

namespace fragwave {

namespace {

// min-heap on (ring time, id); id tiebreak keeps pop order deterministic
using RingQueue = std::priority_queue<std::pair<double, std::uint32_t>,
                                      std::vector<std::pair<double, std::uint32_t>>,
                                      std::greater<>>;

} // namespace

FragTrajectory simulate_with_snapshots(const DislocationMeasure& measure, double horizon,
                                       std::uint64_t master_seed, std::uint64_t stream,
                                       const SimControls& controls,
                                       const std::vector<double>& snapshot_times,
                                       const SnapshotVisitor& visit, bool record_events) {
    if (!(horizon >= 0.0))
        throw std::invalid_argument("simulate: horizon must be >= 0");
    if (controls.max_fragments == 0)
        throw std::invalid_argument("simulate: max_fragments must be positive");
    if (controls.size_floor < 0.0)
        throw std::invalid_argument("simulate: size_floor must be >= 0");
    for (std::size_t k = 0; k < snapshot_times.size(); ++k) {
        if (snapshot_times[k] < 0.0 || snapshot_times[k] > horizon)
            throw std::invalid_argument("simulate: snapshot time outside [0, horizon]");
        if (k > 0 && snapshot_times[k] < snapshot_times[k - 1])
            throw std::invalid_argument("simulate: snapshot times must ascend");
    }

    FragTrajectory traj;
    traj.measure = measure;
    traj.seed = master_seed;
    traj.stream = stream;
    traj.horizon = horizon;
    traj.controls = controls;

    Rng rng(master_seed, stream);
    const double gamma = measure.total_mass();
    const double inf = std::numeric_limits<double>::infinity();
    const double cs = controls.lineage_speed;

    traj.x.push_back(0.0);
    traj.birth.push_back(0.0);
    traj.ring.push_back(rng.exponential(gamma));
    traj.parent.push_back(-1);
    traj.dropped.push_back(0);
    if (controls.track_lineage_min) traj.lineage_min_birth.push_back(inf);

    RingQueue queue;
    if (traj.ring[0] <= horizon) queue.emplace(traj.ring[0], 0u);

    std::size_t snap_idx = 0;
    auto emit_snapshots_before = [&](double t) {
        while (snap_idx < snapshot_times.size() && snapshot_times[snap_idx] < t) {
            if (visit) visit(snap_idx, snapshot_times[snap_idx], traj);
            ++snap_idx;
        }
    };

    std::vector<double> ratios;
    while (!queue.empty()) {
        const auto [t, id] = queue.top();
        queue.pop();
        emit_snapshots_before(t);

        measure.sample_ratios(rng, ratios);
        const double px = traj.x[id];
        const std::uint32_t first_child = static_cast<std::uint32_t>(traj.x.size());
        const double parent_lmb =
            controls.track_lineage_min
                ? std::min(traj.lineage_min_birth[id], px - cs * t)
                : 0.0;

        for (double s : ratios) {
            if (traj.x.size() >= controls.max_fragments)
                throw SimCapExceeded(traj.x.size(), t);
            const double cx = px - std::log(s);
            const double mass = std::exp(-cx);
            const std::uint32_t cid = static_cast<std::uint32_t>(traj.x.size());
            traj.x.push_back(cx);
            traj.birth.push_back(t);
            traj.parent.push_back(static_cast<std::int32_t>(id));
            if (controls.track_lineage_min) traj.lineage_min_birth.push_back(parent_lmb);
            if (controls.size_floor > 0.0 && mass < controls.size_floor) {
                traj.ring.push_back(t);  // retired at birth, never alive
                traj.dropped.push_back(1);
                traj.dropped_mass += mass;
                traj.dropped_min_mass = std::min(traj.dropped_min_mass, mass);
                traj.dropped_max_mass = std::max(traj.dropped_max_mass, mass);
                ++traj.dropped_count;
            } else {
                const double ring = t + rng.exponential(gamma);
                traj.ring.push_back(ring);
                traj.dropped.push_back(0);
                if (ring <= horizon) queue.emplace(ring, cid);
            }
        }
        if (record_events)
            traj.events.push_back(
                {t, id, first_child, static_cast<std::uint32_t>(ratios.size())});
    }
    emit_snapshots_before(inf);
    return traj;
}

FragTrajectory simulate(const DislocationMeasure& measure, double horizon,
                        std::uint64_t seed, const SimControls& controls) {
    return simulate_with_snapshots(measure, horizon, seed, 0, controls, {}, nullptr, true);
}

FragTrajectory simulate_stream(const DislocationMeasure& measure, double horizon,
                               std::uint64_t master_seed, std::uint64_t stream,
                               const SimControls& controls) {
    return simulate_with_snapshots(measure, horizon, master_seed, stream, controls, {},
                                   nullptr, true);
}

Snapshot snapshot_at(const FragTrajectory& traj, double t) {
    if (t < 0.0 || t > traj.horizon)
        throw std::invalid_argument("snapshot_at: t outside [0, horizon]");
    Snapshot snap;
    snap.time = t;
    traj.for_each_alive(t, [&](std::size_t i) {
        snap.entries.push_back(
            {traj.x[i], traj.birth[i], static_cast<std::uint32_t>(i)});
    });
    std::sort(snap.entries.begin(), snap.entries.end(),
              [](const SnapshotEntry& a, const SnapshotEntry& b) { return a.x < b.x; });
    return snap;
}

namespace {

std::vector<double> window_grid(double t0, double t1) {
    if (!(t1 > t0) || t0 < 0.0)
        throw std::invalid_argument("largest_fragment_speed: need 0 <= t0 < t1");
    std::vector<double> grid;
    const double step = 0.25;
    for (double t = t0; t <= t1 + 1e-12; t += step) grid.push_back(std::min(t, t1));
    return grid;
}

} // namespace

double largest_fragment_speed(const std::vector<FragTrajectory>& runs, double t0,
                              double t1) {
    const std::vector<double> grid = window_grid(t0, t1);
    if (runs.empty())
        throw std::invalid_argument("largest_fragment_speed: no trajectories");
    for (const auto& traj : runs)
        if (traj.horizon < t1)
            throw std::invalid_argument(
                "largest_fragment_speed: window exceeds a trajectory horizon");
    std::vector<double> mean_min(grid.size(), 0.0);
    for (const auto& traj : runs) {
        for (std::size_t k = 0; k < grid.size(); ++k) {
            double mn = std::numeric_limits<double>::infinity();
            traj.for_each_alive(grid[k], [&](std::size_t i) { mn = std::min(mn, traj.x[i]); });
            mean_min[k] += mn;
        }
    }
    for (double& v : mean_min) v /= static_cast<double>(runs.size());
    return ls_slope(grid, mean_min);
}

double largest_fragment_speed_mc(const DislocationMeasure& measure, double t0, double t1,
                                 std::size_t n_runs, double horizon, std::uint64_t seed,
                                 const SimControls& controls) {
    const std::vector<double> grid = window_grid(t0, t1);
    if (horizon < t1)
        throw std::invalid_argument("largest_fragment_speed_mc: horizon < t1");
    if (n_runs == 0)
        throw std::invalid_argument("largest_fragment_speed_mc: n_runs must be positive");
    std::vector<double> mean_min(grid.size(), 0.0);
    for (std::size_t r = 0; r < n_runs; ++r) {
        simulate_with_snapshots(
            measure, horizon, seed, r, controls, grid,
            [&](std::size_t k, double t, const FragTrajectory& traj) {
                double mn = std::numeric_limits<double>::infinity();
                traj.for_each_alive(t, [&](std::size_t i) { mn = std::min(mn, traj.x[i]); });
                mean_min[k] += mn;
            },
            false);
    }
    for (double& v : mean_min) v /= static_cast<double>(n_runs);
    return ls_slope(grid, mean_min);
}

} // namespace fragwave
