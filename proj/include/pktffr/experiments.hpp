#pragma once

#include "pktffr/coordinator.hpp"
#include "pktffr/scenario.hpp"
#include "pktffr/simulation.hpp"
#include "pktffr/spectral.hpp"

#include <string>
#include <vector>

namespace pktffr::exp {

struct RunMetrics {
    double nadir = 0.0;              // Hz, max |Δf| at the measurement bus
    double r_max = 0.0;              // Hz/s
    double realized_delta_p = 0.0;   // MW, largest fleet reduction during the event
    double realized_damping = 0.0;   // MW/Hz
    double estimated_damping = 0.0;  // MW/Hz, from the histogram captured at detection
    double tracking_rmse = 0.0;      // MW, after warm-up
    double interruption_rmse = 0.0;  // MW, vs ideal sensing; NaN when not computed
    double quasi_steady_hz = 0.0;    // absolute Hz, mean over the last 10 s
    double delta_p_at_nadir = 0.0;   // MW
    long participants = 0;
};

struct RunOutput {
    RunMetrics metrics;
    sim::EventRecord event;
    std::vector<int> bus_ids;
    std::vector<sim::TraceSample> trace;
    std::vector<sim::TrackingSample> tracking;
    coord::TimerHistogram final_histogram;
};

struct RunOptions {
    bool record_trace = true;
    int trace_every = 10;
};

sim::ClosedLoop make_loop(const scenario::Scenario& s, bool record_trace = false, int trace_every = 10);

/// Closed-loop run: warm-up, then the scenario's events over `duration`.
RunOutput run(const scenario::Scenario& s, const RunOptions& opt = {});

/// Same as run() but continuing from an already warmed-up loop.
RunOutput run_from(sim::ClosedLoop loop, const scenario::Scenario& s);

RunMetrics metrics_of(const sim::ClosedLoop& loop, const scenario::Scenario& s);

/// Writes frequency, DER, histogram, tracking and metrics CSVs plus a manifest.
void write_run(const RunOutput& out, const scenario::Scenario& s, const std::string& dir);

/// RMSE of the DER deviation between two traces from time `t_from` on.
double interruption_rmse(const std::vector<sim::TraceSample>& a, const std::vector<sim::TraceSample>& b,
                         double t_from);

/// Mean absolute frequency at bus index `bus_idx` over the last `window` seconds.
double quasi_steady_hz(const std::vector<sim::TraceSample>& trace, std::size_t bus_idx, double window = 10.0);

struct SweepRow {
    std::string parameter;
    double value = 0.0;
    std::uint64_t seed = 0;
    RunMetrics metrics;
    double d_min = std::numeric_limits<double>::quiet_NaN();
};

/// One closed-loop run per grid point of every configured sweep. Runs use the
/// scenario seed unless independent seeds are requested. `threads` workers.
std::vector<SweepRow> sweep(const scenario::Scenario& s, int threads = 1);
void write_sweep(const std::vector<SweepRow>& rows, const std::string& dir);

struct EstimatorPair {
    int index = 0;
    double time = 0.0;
    double size_mw = 0.0;
    double nadir = 0.0;
    double r_max = 0.0;
    double delta_p_estimated = 0.0;
    double delta_p_realized = 0.0;
    double estimated = 0.0;  // MW/Hz
    double realized = 0.0;   // MW/Hz
    double rel_error = 0.0;
};

/// Random contingencies (size and time drawn from the scenario's estimator
/// block) against a shared warmed-up fleet.
std::vector<EstimatorPair> validate_estimator(const scenario::Scenario& s, int n_events = -1);
void write_estimator(const std::vector<EstimatorPair>& rows, const std::string& dir);

struct BoundsRow {
    double amplitude_mw = 0.0;
    double rho = 0.0;
    spectral::Knowledge knowledge = spectral::Knowledge::None;
    double F = 0.0;
    double mean_kw = 0.0;
    double std_kw = 0.0;
    double p_min_kw = 0.0;
    double d_min = 0.0;
    double beta_thr = 0.0;
};

std::vector<BoundsRow> bounds_table(const scenario::Scenario& s);
void write_bounds(const std::vector<BoundsRow>& rows, const std::string& dir);

/// What-if damping estimates over a (nadir, RoCoF) grid for the warmed-up
/// histogram of the scenario.
std::vector<coord::DampingEstimate> what_if(const scenario::Scenario& s, const std::vector<coord::SweepPoint>& pts);
void write_damping_sweep(const std::vector<coord::DampingEstimate>& rows, const std::string& dir);

/// Decomposes the AGC CSV at `path` for each N and writes harmonics and an
/// RMSE-vs-N table.
void write_decomposition(const std::string& csv_path, const std::vector<int>& n_values, spectral::SelectMode mode,
                         const std::string& dir);

} // namespace pktffr::exp
