#pragma once

#include "pktffr/control.hpp"
#include "pktffr/coordinator.hpp"
#include "pktffr/fleet.hpp"
#include "pktffr/grid.hpp"

#include <functional>
#include <vector>

namespace pktffr::sim {

struct Event {
    double time = 0.0;     // s after warm-up
    int bus = 0;
    double delta_p = 0.0;  // MW of lost generation (load-equivalent increase)
};

/// P_ref(t) = p_nom + amplitude·signal(t), signal normalized to peak 1.
struct Reference {
    double p_nom_mw = 0.0;
    double amplitude_mw = 0.0;
    std::function<double(double)> signal;  // empty means zero

    double at(double t) const { return p_nom_mw + (signal && amplitude_mw != 0.0 ? amplitude_mw * signal(t) : 0.0); }
};

/// Nominal consumption of a fleet: thermal duty at the setpoint for TCLs and
/// the household drain for ESS, in MW.
double nominal_power_mw(const fleet::FleetConfig& cfg);

struct TraceSample {
    double t = 0.0;
    std::vector<double> freq_hz;  // per bus
    double der_mw = 0.0;          // fleet power deviation from the pre-event baseline
    double fleet_mw = 0.0;
    long participants = 0;
};

struct TrackingSample {
    long step = 0;
    double reference_mw = 0.0;
    double aggregate_mw = 0.0;
    double accepted_kw = 0.0;
    double error_mw = 0.0;
};

struct EventRecord {
    bool detected = false;
    long detect_step = -1;
    double detect_time = 0.0;
    coord::TimerHistogram histogram;  // snapshot when the event was detected
    double fleet_mw_at_detect = 0.0;
    double nadir = 0.0;      // max |Δf| at the measurement bus
    double nadir_time = 0.0;
    double r_max = 0.0;      // max |D(f_eff)| from a delay-free estimator at the measurement bus
    double max_shed_mw = 0.0;
    long participants = 0;
    double participant_power_mw = 0.0;  // Σ p_cap of devices that changed state
    double fleet_delta_at_nadir_mw = 0.0;
};

struct Options {
    double warmup = 1800.0;
    double event_hold = 30.0;
    int measure_bus = -1;       // -1: fleet bus
    bool record_trace = false;
    int trace_every = 10;       // grid steps
    bool record_tracking = false;
};

/// Closed-loop co-simulation of grid, fleet, local controllers and coordinator.
class ClosedLoop {
public:
    ClosedLoop(grid::GridModel grid, const fleet::FleetConfig& fleet_cfg, const control::ControlParams& ctrl,
               Reference ref, Options opt);

    /// Coordination-only advance (grid held at equilibrium). Requires no
    /// pending disturbance. Used for warm-up and tracking studies. The callback,
    /// if set, runs after every coordination step.
    void track(double seconds, const std::function<void(const ClosedLoop&, const coord::AcceptResult&)>& cb = {});
    /// Runs the configured warm-up with the AGC component suppressed.
    void warm_up();

    /// Full closed-loop advance until `t_end` (s after warm-up).
    void run_until(double t_end, const std::vector<Event>& events);

    double time() const;          // s after warm-up start of the AGC clock
    long grid_step() const { return grid_step_; }
    const grid::GridModel& grid() const { return grid_; }
    const fleet::Fleet& fleet() const { return fleet_; }
    fleet::Fleet& fleet_mut() { return fleet_; }
    const coord::TimerHistogram& histogram() const { return hist_; }
    const control::ControlParams& control() const { return ctrl_; }
    const Reference& reference() const { return ref_; }
    void set_reference(Reference r) { ref_ = std::move(r); }
    bool event_mode() const { return event_mode_; }
    const EventRecord& event() const { return event_; }
    const std::vector<TraceSample>& trace() const { return trace_; }
    const std::vector<TrackingSample>& tracking() const { return tracking_; }
    long opt_outs() const { return opt_outs_; }
    long coordination_steps() const { return coord_step_; }
    double fleet_power_mw() const;
    /// ΔP_DER currently injected into the grid, MW (all buses).
    double der_deviation_mw() const;
    int measure_bus() const { return measure_bus_; }
    /// Device-level shed if every channel saw an under-frequency threshold
    /// `eta` right now (MW). Brute-force audit of the histogram estimate.
    double census_shed_mw(double eta) const;

private:
    struct Channel {
        std::size_t bus_idx = 0;
        int delay = 0;
        std::vector<int> devices;
        control::RocofEstimator rocof;
        double min_eta[2] = {1.0, 1.0};  // [under, over]
        int threshold[2] = {0, 0};
        bool active = false;
    };
    struct Ack {
        long deliver_step = 0;
        long coord_at = 0;
        int age = 0;
        coord::TimerClass from;
        int to = -1;  // -1 none, else TimerClass index
        double p = 0.0;
    };

    coord::AcceptResult coordination_step();
    void sense_and_participate();
    void participate(Channel& ch, int dir);
    void post_ack(int device, coord::TimerClass from, int to);
    void deliver_acks(bool all);
    void apply_ack(const Ack& a);
    void set_state(int device, int new_state);
    void record_trace();

    grid::GridModel grid_;
    fleet::Fleet fleet_;
    control::ControlParams ctrl_;
    Reference ref_;
    Options opt_;
    coord::TimerHistogram hist_;

    int steps_per_bin_ = 100;
    long grid_step_ = 0;
    long coord_step_ = 0;
    double t0_ = 0.0;  // time origin: end of warm-up
    bool warming_ = false;

    std::vector<std::size_t> dev_bus_idx_;
    std::vector<double> bus_power_kw_, bus_baseline_kw_;
    std::vector<std::vector<double>> freq_hist_;  // per bus ring buffer of absolute Hz
    std::size_t hist_len_ = 1;
    std::vector<Channel> channels_;
    std::vector<Ack> acks_;  // min-heap on deliver_step
    std::vector<double> disturbance_;

    bool event_mode_ = false;
    double last_active_ = 0.0;
    EventRecord event_;
    control::RocofEstimator metric_rocof_;
    int measure_bus_ = 0;
    std::size_t measure_idx_ = 0;

    std::vector<TraceSample> trace_;
    std::vector<TrackingSample> tracking_;
    long opt_outs_ = 0;
    long participants_ = 0;
};

} // namespace pktffr::sim
