// Config-driven experiment dispatch with reproducible replicate-level
// parallelism: replicate i always uses stream (master_seed, i), and all
// reductions run in index order, so the worker count never changes results.

#ifndef FRAGWAVE_RUNNER_HPP
#define FRAGWAVE_RUNNER_HPP

#include <functional>

#include "fragwave/config.hpp"
#include "fragwave/report.hpp"

namespace fragwave {

int effective_workers(int requested);  // 0 resolves to hardware concurrency

// runs fn(0..n-1), each index exactly once, across the given worker count
void parallel_for_indexed(std::size_t n, int workers,
                          const std::function<void(std::size_t)>& fn);

RunReport run(const ExperimentConfig& cfg);

} // namespace fragwave

#endif
