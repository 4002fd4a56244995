#pragma once

#include <span>
#include <string>
#include <vector>

namespace pktffr::grid {

// Units: power in MW, frequency deviation in Hz, angles in rad, time in s.
// Inertia M is MW·s/Hz so that M·dΔω/dt is an accelerating power in MW.
struct Bus {
    int id = 0;
    double inertia = 0.0;        // M_j  [MW·s/Hz]
    double damping = 0.0;        // D_j  [MW/Hz]
    double angle_dev = 0.0;      // Δθ_j [rad]
    double freq_dev = 0.0;       // Δω_j [Hz]
    double load_dev = 0.0;       // ΔP_L_j [MW], last applied disturbance
    double der_power_dev = 0.0;  // ΔP_DER_j [MW], last applied DER deviation
};

struct Line {
    int from = 0;
    int to = 0;
    double susceptance = 0.0;  // b_ij [MW/rad]
};

struct Generator {
    int bus = 0;
    double rating = 0.0;             // MW
    double droop = 0.0;              // R_j [Hz/MW]
    double turbine_tau = 0.0;        // τ_j [s]
    double power_dev = 0.0;          // ΔP_G_j [MW]
    double governor_deadband = 0.036;  // Hz
    bool governor_enabled = true;
};

struct GridModel {
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Generator> generators;
    double dt = 0.01;
    double nominal_hz = 60.0;
    long step = 0;

    /// Position of bus `id` in `buses`; throws ConfigError if absent.
    std::size_t index_of(int id) const;
};

/// Checks field invariants and connectivity. Throws ConfigError.
void validate(const GridModel& model);

/// Advances the model by one RK4 step of model.dt.
/// `disturbances` is the uncontrolled load deviation ΔP_L per bus (a generator
/// trip of X MW is +X), `der_power` the DER consumption deviation per bus.
GridModel step_grid(const GridModel& model, std::span<const double> disturbances,
                    std::span<const double> der_power);

/// In-place variant used by the simulation loop.
void step_grid_inplace(GridModel& model, std::span<const double> disturbances,
                       std::span<const double> der_power);

/// Nominal frequency plus the bus frequency deviation, in Hz.
double measure_frequency(const GridModel& model, int bus_id);

/// Governor input after the no-step deadband.
double governor_input(double freq_dev, double deadband);

/// M [MW·s/Hz] from an inertia constant H [s] on a base of `s_base_mva`.
double inertia_from_h(double h_seconds, double s_base_mva, double nominal_hz = 60.0);

/// R [Hz/MW] from a percent droop on the machine rating.
double droop_from_percent(double percent, double rating_mw, double nominal_hz = 60.0);

/// Damping [MW/Hz] from a per-unit value on `s_base_mva`.
double damping_from_pu(double d_pu, double s_base_mva, double nominal_hz = 60.0);

} // namespace pktffr::grid
