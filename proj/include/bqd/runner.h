#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>

#include <json.hpp>

#include "bqd/config.h"
#include "bqd/observables.h"

namespace bqd {

/// Outcome of one backend simulation: the sampled series, the snapshot grid and scalar diagnostics.
struct Simulation {
  ObservableSeries series;
  Eigen::VectorXd nodes;
  nlohmann::json results;
};

/// Ground state of the configured backend, then (if `evolve`) propagation to time.t_end.
Simulation simulate(const RunConfig& config, bool evolve);

/// Workers for `tasks` independent jobs: `requested` (0 = one per task) capped by BQD_MAX_THREADS.
int worker_count(int requested, std::size_t tasks);

/// Runs body(i) for i in [0, count) on up to `workers` threads; the first exception is rethrown.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

/// Executes config.mode and writes its artifacts under config.output_dir. Returns the top-level manifest.
nlohmann::json run(const RunConfig& config, std::ostream* log = nullptr);

/// Process exit status for a failure: 1 configuration or input error, 2 solver non-convergence, 3 I/O failure.
int exit_status(const std::exception& error);

/// Fits the damped-oscillator model to the X_I column of a series.
FitResult fit_series(const ObservableSeries& series, const RunConfig& config);

} // namespace bqd
