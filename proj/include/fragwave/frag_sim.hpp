// Event-driven exact simulation of the finite-activity conservative mass
// fragmentation. Every alive fragment carries an independent exponential
// clock with the total dislocation rate; at a ring the fragment is replaced
// by children with ratios drawn from the normalized measure.

#ifndef FRAGWAVE_FRAG_SIM_HPP
#define FRAGWAVE_FRAG_SIM_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fragwave/dislocation.hpp"

namespace fragwave {

struct SimControls {
    std::uint64_t max_fragments = 20'000'000;
    double size_floor = 1e-12;    // fragments below this mass are retired
    bool track_lineage_min = false;
    double lineage_speed = 0.0;   // drift c in the tracked lineage minimum
};

struct SplitEvent {
    double time;
    std::uint32_t parent;
    std::uint32_t first_child;  // children occupy [first_child, first_child + n_children)
    std::uint32_t n_children;
};

struct SimCapExceeded : std::runtime_error {
    SimCapExceeded(std::uint64_t created, double time)
        : std::runtime_error("fragment cap exceeded after " + std::to_string(created) +
                             " fragments at t = " + std::to_string(time)),
          fragments_created(created),
          time_reached(time) {}
    std::uint64_t fragments_created;
    double time_reached;
};

// One run. Fragment id = index into the columns; fragments are appended in
// birth-time order. A fragment is alive at time t iff birth <= t < ring and
// it was not retired by the size floor.
struct FragTrajectory {
    DislocationMeasure measure = DislocationMeasure::uniform_binary();
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    double horizon = 0.0;
    SimControls controls;

    std::vector<double> x;       // -log mass, dimensionless
    std::vector<double> birth;
    std::vector<double> ring;    // scheduled split time; equals birth for dropped
    std::vector<std::int32_t> parent;  // -1 for the root
    std::vector<std::uint8_t> dropped;
    std::vector<double> lineage_min_birth;  // min over completed ancestor segments
                                            // of (x_anc - c * segment_end)

    std::vector<SplitEvent> events;

    double dropped_mass = 0.0;
    double dropped_min_mass = std::numeric_limits<double>::infinity();
    double dropped_max_mass = 0.0;
    std::uint64_t dropped_count = 0;

    std::size_t size() const { return x.size(); }

    bool alive_at(std::size_t i, double t) const {
        return !dropped[i] && birth[i] <= t && ring[i] > t;
    }

    // visits alive fragment ids at time t; relies on birth-time ordering
    template <class F>
    void for_each_alive(double t, F&& fn) const {
        for (std::size_t i = 0; i < x.size() && birth[i] <= t; ++i)
            if (!dropped[i] && ring[i] > t) fn(i);
    }

    // full lineage minimum of (x(s) - c s) over s <= t for an alive fragment
    double lineage_min(std::size_t i, double t) const {
        return std::min(lineage_min_birth[i], x[i] - controls.lineage_speed * t);
    }
};

struct SnapshotEntry {
    double x;
    double birth_time;
    std::uint32_t id;
};

struct Snapshot {
    double time = 0.0;
    std::vector<SnapshotEntry> entries;  // sorted by x ascending
};

using SnapshotVisitor =
    std::function<void(std::size_t time_index, double time, const FragTrajectory&)>;

// Core run. snapshot_times must be ascending and within [0, horizon]; the
// visitor sees the population in cadlag convention (post-split at event
// times). Set record_events = false on hot paths that only need snapshots.
FragTrajectory simulate_with_snapshots(const DislocationMeasure& measure, double horizon,
                                       std::uint64_t master_seed, std::uint64_t stream,
                                       const SimControls& controls,
                                       const std::vector<double>& snapshot_times,
                                       const SnapshotVisitor& visit, bool record_events);

FragTrajectory simulate(const DislocationMeasure& measure, double horizon,
                        std::uint64_t seed, const SimControls& controls = {});

// replicate k of a master seed
FragTrajectory simulate_stream(const DislocationMeasure& measure, double horizon,
                               std::uint64_t master_seed, std::uint64_t stream,
                               const SimControls& controls = {});

// alive population at t, reconstructed from the stored columns
Snapshot snapshot_at(const FragTrajectory& traj, double t);

// least-squares slope of the min-over-population x(t) against t on a fixed
// grid inside [t0, t1], curve averaged over the runs
double largest_fragment_speed(const std::vector<FragTrajectory>& runs, double t0, double t1);

// streaming variant that never stores whole trajectories
double largest_fragment_speed_mc(const DislocationMeasure& measure, double t0, double t1,
                                 std::size_t n_runs, double horizon, std::uint64_t seed,
                                 const SimControls& controls = {});

} // namespace fragwave

#endif
