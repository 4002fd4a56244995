#pragma once

#include "pktffr/control.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace pktffr::fleet {

enum class Kind : std::uint8_t { TCL = 0, ESS = 1 };
enum class Direction : std::int8_t { Charge = 1, Discharge = -1 };

struct ThermalParams {
    double t_min = 48.8;     // °C
    double t_set = 52.0;
    double t_max = 55.2;
    double tau = 7200.0;     // s
    double ambient = 44.0;   // °C, effective heat-loss sink
    double kappa = 40.0 / 4.5;  // °C per kW of heating at steady state
};

struct StorageParams {
    double soc_min = 0.2;
    double soc_set = 0.5;
    double soc_max = 0.8;
    double capacity_kwh = 13.5;
    double drain_fraction = 0.2;  // household draw as a fraction of p_cap
};

struct FleetConfig {
    int n_tcl = 0;
    int n_ess = 0;
    double delta = 180.0;   // packet epoch δ [s]
    double mttr = 180.0;    // mean time to request [s]
    double dt_bin = 1.0;    // Δt_B [s]
    std::uint64_t seed = 1;
    double p_cap_kw = 4.5;
    ThermalParams thermal;
    StorageParams storage;
    double delay_min = 0.0;   // s, per-device actuation delay drawn uniformly
    double delay_max = 0.0;
    double resolution = 0.0;  // Hz, 0 = ideal sensing
    double initial_on_fraction = 0.2;
    int bus = 1;
    // Optional split across buses; empty places everything on `bus`.
    std::vector<std::pair<int, double>> bus_weights;

    int n_p() const;
    int size() const { return n_tcl + n_ess; }
    void validate() const;
};

/// Single-device view. `timer` is signed: positive while charging,
/// negative while discharging.
struct Device {
    int id = 0;
    Kind kind = Kind::TCL;
    double p_cap = 4.5;  // kW
    int state = 0;       // C_n ∈ {+1, 0, -1}
    double timer = 0.0;  // s
    double energy = 0.0; // °C (TCL) or SoC fraction (ESS)
    double band_min = 0.0, setpoint = 0.0, band_max = 0.0;
    bool participated = false;
    double actuation_delay = 0.0;  // s
    double meas_resolution = 0.0;  // Hz
};

struct StepContext {
    double nominal_hz = 60.0;
    double delta = 180.0;
    double dt = 1.0;  // timer increment applied when advance_timer is set
    bool advance_timer = true;
};

/// Timer fraction used by both the device rule and the coordinator's
/// availability count, so that the two agree bit for bit.
inline double timer_fraction(int age, double dt_bin, double delta)
{
    return static_cast<double>(age) * dt_bin / delta;
}

/// Smallest age whose timer fraction reaches `eta` (n_p when none does).
int threshold_age(double eta, int n_p, double dt_bin, double delta);

/// Rounds `f` to the nearest multiple of `resolution`; 0 leaves it untouched.
double quantize(double f, double resolution);

/// One device transition: optional acceptance, participation test against
/// the locally computed threshold, then timer advance and epoch expiry.
Device step_device(Device dev, std::optional<Direction> accepted, double grid_freq, double rocof_val,
                   const control::ControlParams& p, const StepContext& ctx);

/// Frequency seen by the device at `step`: the bus history delayed by the
/// device's actuation delay and rounded to its resolution. `history[k]` is
/// the bus frequency in Hz at grid step k.
double sense_frequency(const Device& dev, std::span<const double> history, long step, double dt);

struct Request {
    int id = 0;  // device index
    Direction dir = Direction::Charge;
    double p_rate = 0.0;  // kW
    bool forced = false;  // QoS request, always granted
    double arrival = 0.0; // s offset inside the coordination step
};

/// Request rate [1/s] of an idle device in direction `dir`; infinity marks a
/// forced request.
double request_rate(Kind kind, Direction dir, double energy, const FleetConfig& cfg);

/// Structure-of-arrays fleet state.
class Fleet {
public:
    Fleet() = default;
    explicit Fleet(const FleetConfig& cfg, double grid_dt = 0.01);

    const FleetConfig& config() const { return cfg_; }
    std::size_t size() const { return kind.size(); }
    int n_p() const { return n_p_; }

    Device device(std::size_t i) const;

    /// Σ charging p_cap − Σ discharging p_cap, kW.
    double power_kw() const;

    /// Advances energy states by one coordination interval using current power.
    void update_energy(double dt);

    std::vector<Kind> kind;
    std::vector<float> p_cap;           // kW
    std::vector<std::int8_t> state;
    std::vector<std::int32_t> age;      // coordination steps since acceptance
    std::vector<double> energy;
    std::vector<std::uint8_t> participated;
    std::vector<std::int32_t> delay_steps;
    std::vector<int> bus;

private:
    FleetConfig cfg_;
    int n_p_ = 1;
    double grid_dt_ = 0.01;
    double thermal_a_ = 1.0;
};

/// Requests emitted by idle devices during coordination step `coord_step`.
std::vector<Request> generate_requests(const Fleet& fleet, std::uint64_t coord_step);

/// Sum of charging minus discharging device power, MW.
double fleet_power(const Fleet& fleet);

} // namespace pktffr::fleet
