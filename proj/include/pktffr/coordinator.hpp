#pragma once

#include "pktffr/control.hpp"
#include "pktffr/fleet.hpp"

#include <vector>

namespace pktffr::coord {

enum class TimerClass { TclCharge, EssCharge, EssDischarge };

/// Accepted packet power by elapsed timer, one vector per timer class. Bin i
/// holds packets whose timer reads i·dt_bin. Units are kW.
struct TimerHistogram {
    int n_p = 0;
    double dt_bin = 1.0;
    double delta = 180.0;
    std::vector<double> tcl_charge, ess_charge, ess_discharge;

    TimerHistogram() = default;
    TimerHistogram(int n_p, double dt_bin, double delta);

    std::vector<double>& bins(TimerClass c);
    const std::vector<double>& bins(TimerClass c) const;
};

/// Histogram matching the per-device timer census of `fleet`.
TimerHistogram census(const fleet::Fleet& fleet);

/// Shift by one bin, insert q into bin 0, drop the last bin.
TimerHistogram step_histograms(TimerHistogram h, double q_ch_tcl, double q_ch_ess, double q_dis_ess);
void step_histograms_inplace(TimerHistogram& h, double q_ch_tcl, double q_ch_ess, double q_dis_ess);

/// Charging minus discharging power, in the bins' unit (kW).
double aggregate_power(const TimerHistogram& h);

/// Aggregate after the next shift without new acceptances (kW).
double projected_power(const TimerHistogram& h);

/// TCL charging power plus twice ESS charging power in bins whose timer
/// fraction reaches `eta` (kW). Under-frequency availability.
double available_power(const TimerHistogram& h, double eta);

/// Over-frequency analogue: twice the ESS discharging power in qualifying bins (kW).
double available_power_over(const TimerHistogram& h, double eta);

enum class Policy { Minimize };

struct AcceptResult {
    std::vector<std::size_t> accepted;  // indices into the request list
    double q_ch_tcl = 0.0;              // kW
    double q_ch_ess = 0.0;
    double q_dis_ess = 0.0;
    double shortfall = 0.0;             // kW of deficit left uncovered
    int direction = 0;                  // +1 charge, -1 discharge, 0 none
};

/// Minimum-packet acceptance against `reference_kw`. `kinds` gives the device
/// kind of each request's id (indexed by Request::id).
AcceptResult accept_requests(const std::vector<fleet::Request>& requests, double reference_kw,
                             const TimerHistogram& h, const std::vector<fleet::Kind>& kinds,
                             Policy policy = Policy::Minimize);

struct DampingEstimate {
    double delta_p_der = 0.0;    // MW
    double d_syn = 0.0;          // MW/Hz
    double nadir_assumed = 0.0;  // Hz deviation
    double rocof_assumed = 0.0;  // Hz/s
    double eta_used = 1.0;
    long computed_at = 0;
};

/// Synthetic damping available for an under-frequency event reaching `nadir`
/// (deviation magnitude, Hz) with peak derivative `r_max`. Throws DomainError
/// when nadir <= f_db.
DampingEstimate estimate_damping(const TimerHistogram& h, double nadir, double r_max,
                                 const control::ControlParams& p, long step = 0);

struct SweepPoint {
    double nadir = 0.0;
    double rocof = 0.0;
};

/// What-if evaluation over a grid of (nadir, RoCoF) pairs against one snapshot.
std::vector<DampingEstimate> damping_sweep(const TimerHistogram& h, const std::vector<SweepPoint>& points,
                                           const control::ControlParams& p, long step = 0);

} // namespace pktffr::coord
