#pragma once

#include "pktffr/control.hpp"

#include <string>
#include <vector>

namespace pktffr::spectral {

enum class FleetKind { TCL, ESS };
enum class SelectMode { FirstN, TopN };
enum class Knowledge { None, Unimodal, Gaussian };

struct Harmonic {
    int h = 1;
    double c = 0.0;    // normalized coefficient in [-1, 1]
    double phi = 0.0;  // rad
};

/// AGC[t] ≈ offset + A·Σ c_h cos(2π h f0 t − φ_h). Powers in MW, times in s.
struct HarmonicModel {
    std::vector<Harmonic> entries;
    double f0 = 1.0 / 7200.0;  // Hz
    double A = 1.0;            // MW
    double offset = 0.0;       // MW, mean of the decomposed samples
    double p_nom = 0.0;        // MW
    double dt = 1.0;           // s, coordination step used by the bound formulas
    int n_p = 180;
    double rmse = 0.0;         // reconstruction RMSE on the source samples (MW)
    double rmse_rel = 0.0;     // rmse / RMS of the demeaned samples

    double period() const { return 1.0 / f0; }
    /// Reconstructed signal at time t (s), excluding the offset.
    double eval(double t) const;
    /// Harmonic `idx` (position in entries) at coordination step k, MW.
    double harmonic_at(std::size_t idx, long k) const;
};

/// DFT of `samples` spaced `sample_dt` apart, keeping `n` harmonics. Throws
/// DataError on NaN samples or fewer than 2 samples; `times`, when given,
/// must be uniformly spaced.
HarmonicModel decompose_agc(const std::vector<double>& samples, double sample_dt, int n,
                            SelectMode mode = SelectMode::TopN);
HarmonicModel decompose_agc(const std::vector<double>& times, const std::vector<double>& samples, int n,
                            SelectMode mode = SelectMode::TopN);

/// Reconstruction RMSE (MW) of `model` against the samples.
double reconstruction_rmse(const HarmonicModel& model, const std::vector<double>& samples, double sample_dt);

/// Increasing/decreasing split of harmonic `idx` over steps [k0, k0 + count).
/// Y[k] = H[k] where H rises, Z[k] = −H[k] where it falls; Y − Z = H.
struct YZ {
    std::vector<double> y, z;
};
YZ build_yz(const HarmonicModel& model, std::size_t idx, long k0, long count);

/// Accepted-power contribution of harmonic `idx` at step k (MW). For TCL
/// fleets the decreasing part is zero and Y = H.
double q_plus(const HarmonicModel& model, std::size_t idx, long k, FleetKind kind);
/// n_u + Σ_h q_plus.
double q_plus_total(const HarmonicModel& model, long k, FleetKind kind);

struct Stats {
    double mean = 0.0;  // MW
    double std = 0.0;   // MW
};

Stats theorem1_stats(const HarmonicModel& model, FleetKind kind);

/// F for a violation probability rho ∈ (0, 0.5). Throws DomainError otherwise.
double safety_factor(double rho, Knowledge knowledge);

/// Inverse error function on (-1, 1).
double erfinv(double x);

struct BoundResult {
    double mean_q = 0.0;  // MW
    double std_q = 0.0;   // MW
    double p_min = 0.0;   // MW, clamped at 0
    double p_min_raw = 0.0;
    double F = 0.0;
    double rho = 0.0;
    double d_min = 0.0;   // MW/Hz
    FleetKind fleet_kind = FleetKind::TCL;
    bool clamped = false;
};

/// Probabilistic lower bound on damping for an under-frequency event with
/// nadir deviation `nadir` (Hz) and peak RoCoF `r_max`.
BoundResult damping_lower_bound(const Stats& stats, double F, double nadir, double r_max,
                                const control::ControlParams& p, FleetKind kind, int n_p, double rho = 0.0);

struct BoundInputs {
    HarmonicModel shape;  // c_h, h, f0, dt, n_p and p_nom are used; A is the free variable
    double F = 1.0;
    double nadir = 0.1;
    double r_max = 0.0;
    control::ControlParams control;
};

/// sqrt(Σ h² c_h² (1 − e^{−T²/6h²})/2)
double variance_shape(const HarmonicModel& m);

/// Closed-form P_min(A) for a TCL fleet (MW), not clamped.
double p_min_closed_form(double A, const BoundInputs& in);

struct Revenue {
    double O = 0.0;      // MW/Hz
    double dO_dA = 0.0;  // β − β_thr
    int slope_sign = 0;
};

Revenue revenue(double A, double beta, const BoundInputs& in);

double beta_threshold(const BoundInputs& in);

struct Contingency {
    double nadir = 0.1;
    double r_max = 0.0;
    double weight = 1.0;
};

struct BetaThresholds {
    std::vector<double> per_contingency;
    double weighted = 0.0;
};

/// Throws DomainError unless weights are non-negative and sum to 1.
BetaThresholds beta_thresholds(const BoundInputs& base, const std::vector<Contingency>& contingencies);

std::string to_string(Knowledge k);
std::string to_string(FleetKind k);
Knowledge knowledge_from_string(const std::string& s);
FleetKind fleet_kind_from_string(const std::string& s);
SelectMode select_mode_from_string(const std::string& s);

} // namespace pktffr::spectral
