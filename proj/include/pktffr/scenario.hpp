#pragma once

#include "pktffr/control.hpp"
#include "pktffr/fleet.hpp"
#include "pktffr/grid.hpp"
#include "pktffr/simulation.hpp"
#include "pktffr/spectral.hpp"

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace pktffr::scenario {

/// AGC source: a CSV of (time_s, power_MW) samples or explicit harmonics.
struct AgcSpec {
    std::string csv;                   // path, empty when harmonics are given inline
    std::vector<spectral::Harmonic> harmonics;
    double period = 7200.0;            // s, for inline harmonics
    int n_harmonics = 100;             // kept when decomposing the CSV
    spectral::SelectMode mode = spectral::SelectMode::TopN;
    double amplitude_mw = 0.0;         // A
    double amplitude_frac = -1.0;      // A as a fraction of P_nom; used when >= 0
};

struct Sweeps {
    std::vector<double> k_d;
    std::vector<double> delay_ms;       // every device gets this fixed delay
    std::vector<double> resolution_mhz;
    std::vector<double> amplitude_frac;
    std::vector<double> rho;
    bool independent_seeds = false;
};

struct EstimatorSpec {
    int n_events = 10;
    int bus = 0;                 // 0: first event's bus, else explicit
    double size_min_mw = 150.0;
    double size_max_mw = 350.0;
    double time_min = 0.0;       // s after warm-up
    double time_max = 60.0;
    double window = 30.0;        // s observed after each event
};

struct BoundsSpec {
    spectral::FleetKind fleet_kind = spectral::FleetKind::TCL;
    std::vector<double> rho = {0.01, 0.05, 0.1};
    std::vector<double> amplitude_frac = {0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.10};
    double nadir = 0.1;   // Hz deviation
    double r_max = 0.0;   // Hz/s
};

struct Scenario {
    std::string name;
    std::string base_dir;          // directory relative paths resolve against
    grid::GridModel network;
    std::string network_source;
    fleet::FleetConfig fleet;
    control::ControlParams control;
    std::vector<sim::Event> events;
    std::optional<AgcSpec> agc;
    std::optional<double> p_nom_mw;  // defaults to the fleet's nominal consumption
    std::vector<int> disable_governors;
    Sweeps sweeps;
    EstimatorSpec estimator;
    BoundsSpec bounds;
    double duration = 60.0;         // s after warm-up
    double warmup = 1800.0;
    double event_hold = 30.0;
    int measure_bus = -1;
    std::uint64_t seed = 1;
    std::string outputs = "out";
    int trace_every = 10;

    void validate() const;
};

/// Directory holding the bundled networks, scenarios and AGC sample. The
/// PKTFFR_DATA environment variable overrides the built-in location.
std::string data_dir();

/// Resolves a network reference: a bundled preset name (`ieee39`,
/// `two_area`, `one_bus`) or a path relative to `base_dir`.
grid::GridModel resolve_network(const std::string& ref, const std::string& base_dir);

Scenario from_json(const nlohmann::json& j, const std::string& base_dir = ".");
Scenario load(const std::string& path);

/// P_nom in MW: the explicit value or the fleet's nominal consumption.
double p_nom_mw(const Scenario& s);

/// Harmonic model of the scenario's AGC signal with A applied, or nullopt.
std::optional<spectral::HarmonicModel> agc_model(const Scenario& s);

/// Reference built from the AGC model (constant P_nom when absent).
sim::Reference make_reference(const Scenario& s);

/// Grid with the scenario's governor overrides applied.
grid::GridModel prepared_network(const Scenario& s);

} // namespace pktffr::scenario
