#include "pktffr/spectral.hpp"

#include "pktffr/errors.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <complex>
#include <fftw3.h>
#include <numbers>
#include <numeric>
#include <spdlog/spdlog.h>

namespace pktffr::spectral {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double pos(double x) { return x > 0.0 ? x : 0.0; }

std::vector<std::complex<double>> real_dft(const std::vector<double>& x)
{
    const int n = static_cast<int>(x.size());
    std::vector<double> in(x);
    std::vector<std::complex<double>> out(static_cast<std::size_t>(n / 2 + 1));
    fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    if (!plan) throw DataError("FFT plan creation failed");
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    return out;
}

} // namespace

double HarmonicModel::eval(double t) const
{
    double s = 0.0;
    for (const auto& e : entries) s += e.c * std::cos(kTwoPi * e.h * f0 * t - e.phi);
    return A * s;
}

double HarmonicModel::harmonic_at(std::size_t idx, long k) const
{
    const auto& e = entries.at(idx);
    return A * e.c * std::cos(kTwoPi * e.h * f0 * static_cast<double>(k) * dt - e.phi);
}

HarmonicModel decompose_agc(const std::vector<double>& x, double sample_dt, int n, SelectMode mode)
{
    if (x.size() < 2) throw DataError("AGC decomposition needs at least two samples");
    if (!(sample_dt > 0.0)) throw DataError("AGC sample spacing must be positive");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i])) throw DataError("AGC sample " + std::to_string(i) + " is not finite");
    if (n < 1) throw DomainError("number of harmonics must be >= 1");

    const std::size_t K = x.size();
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(K);
    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v - mean));

    HarmonicModel m;
    m.offset = mean;
    m.f0 = 1.0 / (static_cast<double>(K) * sample_dt);
    m.A = peak > 0.0 ? peak : 1.0;

    const auto X = real_dft(x);
    const std::size_t hmax = K / 2;
    std::vector<Harmonic> all;
    all.reserve(hmax);
    for (std::size_t h = 1; h <= hmax; ++h) {
        const double scale = (K % 2 == 0 && h == hmax) ? 1.0 : 2.0;
        const double amp = scale * std::abs(X[h]) / static_cast<double>(K);
        all.push_back({static_cast<int>(h), peak > 0.0 ? amp / m.A : 0.0, -std::arg(X[h])});
    }
    const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(n), all.size());
    if (mode == SelectMode::TopN) {
        std::stable_sort(all.begin(), all.end(),
                         [](const Harmonic& a, const Harmonic& b) { return std::abs(a.c) > std::abs(b.c); });
        all.resize(keep);
        std::sort(all.begin(), all.end(), [](const Harmonic& a, const Harmonic& b) { return a.h < b.h; });
    } else {
        all.resize(keep);
    }
    m.entries = std::move(all);

    m.rmse = reconstruction_rmse(m, x, sample_dt);
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    const double rms = std::sqrt(var / static_cast<double>(K));
    m.rmse_rel = rms > 0.0 ? m.rmse / rms : 0.0;
    return m;
}

HarmonicModel decompose_agc(const std::vector<double>& times, const std::vector<double>& x, int n, SelectMode mode)
{
    if (times.size() != x.size()) throw DataError("time and power columns differ in length");
    if (times.size() < 2) throw DataError("AGC decomposition needs at least two samples");
    const double dt = times[1] - times[0];
    if (!(dt > 0.0)) throw DataError("AGC timestamps must increase");
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double d = times[i] - times[i - 1];
        if (std::abs(d - dt) > 1e-6 * dt)
            throw DataError("non-uniform AGC sampling at row " + std::to_string(i));
    }
    return decompose_agc(x, dt, n, mode);
}

double reconstruction_rmse(const HarmonicModel& m, const std::vector<double>& x, double sample_dt)
{
    double se = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double r = m.offset + m.eval(static_cast<double>(k) * sample_dt);
        se += (x[k] - r) * (x[k] - r);
    }
    return std::sqrt(se / static_cast<double>(x.size()));
}

YZ build_yz(const HarmonicModel& m, std::size_t idx, long k0, long count)
{
    YZ out;
    out.y.resize(static_cast<std::size_t>(count));
    out.z.resize(static_cast<std::size_t>(count));
    double prev = m.harmonic_at(idx, k0 - 1);
    for (long i = 0; i < count; ++i) {
        const double cur = m.harmonic_at(idx, k0 + i);
        const double d = cur - prev;
        out.y[static_cast<std::size_t>(i)] = d > 0.0 ? cur : 0.0;
        out.z[static_cast<std::size_t>(i)] = d < 0.0 ? -cur : 0.0;
        prev = cur;
    }
    return out;
}

double q_plus(const HarmonicModel& m, std::size_t idx, long k, FleetKind kind)
{
    const long np = m.n_p;
    if (kind == FleetKind::TCL) {
        const double d0 = m.harmonic_at(idx, k) - m.harmonic_at(idx, k - 1);
        const double d1 = m.harmonic_at(idx, k - np) - m.harmonic_at(idx, k - 1 - np);
        return pos(d0) + pos(d1);
    }
    const YZ now = build_yz(m, idx, k - 1, 2);
    const YZ old = build_yz(m, idx, k - 1 - np, 2);
    return pos(now.y[1] - now.y[0]) - pos(old.z[1] - old.z[0]) + pos(old.y[1] - old.y[0]);
}

double q_plus_total(const HarmonicModel& m, long k, FleetKind kind)
{
    double s = m.p_nom / m.n_p;
    for (std::size_t i = 0; i < m.entries.size(); ++i) s += q_plus(m, i, k, kind);
    return s;
}

Stats theorem1_stats(const HarmonicModel& m, FleetKind kind)
{
    if (m.n_p < 1) throw DomainError("n_p must be >= 1");
    const double T = m.period();
    const double nd = kind == FleetKind::ESS ? 2.0 : 0.0;
    const double n_u = m.p_nom / m.n_p;
    double sum_hc = 0.0;
    double var = 0.0;
    for (const auto& e : m.entries) {
        const double h = e.h;
        sum_hc += h * e.c;
        const double fh = h * m.f0;
        const double w = (1.0 - std::exp(-T * T / (6.0 * h * h))) / 2.0;
        const double a = kTwoPi * m.dt * fh * m.A * e.c;
        var += w * a * a + 2.0 * nd * m.A * m.A * h * e.c * e.c * m.dt / T;
    }
    return {n_u + nd * m.A * sum_hc * m.dt / T, std::sqrt(var)};
}

double erfinv(double x)
{
    if (!(x > -1.0 && x < 1.0)) throw DomainError("erfinv argument must lie in (-1, 1)");
    return boost::math::erf_inv(x);
}

double safety_factor(double rho, Knowledge k)
{
    if (!(rho > 0.0 && rho < 0.5)) throw DomainError("rho must lie in (0, 0.5)");
    switch (k) {
    case Knowledge::None: return std::sqrt((1.0 - rho) / rho);
    case Knowledge::Unimodal: return std::pow((1.0 - rho) / (std::numbers::e * rho), 1.0 / 1.95);
    case Knowledge::Gaussian: return std::numbers::sqrt2 * erfinv(1.0 - 2.0 * rho);
    }
    throw DomainError("unknown knowledge level");
}

BoundResult damping_lower_bound(const Stats& s, double F, double nadir, double r_max, const control::ControlParams& p,
                                FleetKind kind, int n_p, double rho)
{
    BoundResult r;
    r.mean_q = s.mean;
    r.std_q = s.std;
    r.F = F;
    r.rho = rho;
    r.fleet_kind = kind;
    r.p_min_raw = s.mean - F * s.std;
    r.p_min = r.p_min_raw;
    if (r.p_min < 0.0) {
        spdlog::warn("P_min = {:.4f} MW is negative at F = {:.3f}; clamping to 0", r.p_min_raw, F);
        r.p_min = 0.0;
        r.clamped = true;
    }
    const double dev = std::abs(nadir);
    if (dev <= p.f_db) return r;
    const double p_eff = (kind == FleetKind::ESS ? 2.0 : 1.0) * r.p_min;
    const double shed = 1.0 - control::eta(-dev, r_max, p);
    r.d_min = n_p * p_eff * shed / (dev - p.f_db);
    return r;
}

double variance_shape(const HarmonicModel& m)
{
    const double T = m.period();
    double s = 0.0;
    for (const auto& e : m.entries) {
        const double h = e.h;
        s += h * h * e.c * e.c * (1.0 - std::exp(-T * T / (6.0 * h * h))) / 2.0;
    }
    return std::sqrt(s);
}

namespace {
double gain(const BoundInputs& in)
{
    const double dev = std::abs(in.nadir);
    if (!(dev > in.control.f_db)) throw DomainError("nadir must exceed the deadband");
    return in.control.kp() + in.control.K_D * in.r_max / (dev - in.control.f_db);
}
} // namespace

double p_min_closed_form(double A, const BoundInputs& in)
{
    const auto& m = in.shape;
    const double n_u = m.p_nom / m.n_p;
    return n_u - 2.0 * in.F * std::numbers::pi * m.dt * m.f0 * A * variance_shape(m);
}

double beta_threshold(const BoundInputs& in)
{
    const auto& m = in.shape;
    return m.n_p * 2.0 * in.F * std::numbers::pi * m.dt * m.f0 * variance_shape(m) * gain(in);
}

Revenue revenue(double A, double beta, const BoundInputs& in)
{
    if (!(A >= 0.0)) throw DomainError("regulation amplitude must be >= 0");
    Revenue r;
    r.O = A * beta + in.shape.n_p * p_min_closed_form(A, in) * gain(in);
    r.dO_dA = beta - beta_threshold(in);
    r.slope_sign = (r.dO_dA > 0.0) - (r.dO_dA < 0.0);
    return r;
}

BetaThresholds beta_thresholds(const BoundInputs& base, const std::vector<Contingency>& cs)
{
    if (cs.empty()) throw DomainError("at least one contingency is required");
    double wsum = 0.0;
    for (const auto& c : cs) {
        if (!(c.weight >= 0.0)) throw DomainError("contingency weights must be >= 0");
        wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-9) throw DomainError("contingency weights must sum to 1");
    BetaThresholds out;
    for (const auto& c : cs) {
        BoundInputs in = base;
        in.nadir = c.nadir;
        in.r_max = c.r_max;
        const double b = beta_threshold(in);
        out.per_contingency.push_back(b);
        out.weighted += c.weight * b;
    }
    return out;
}

std::string to_string(Knowledge k)
{
    switch (k) {
    case Knowledge::None: return "none";
    case Knowledge::Unimodal: return "unimodal";
    case Knowledge::Gaussian: return "gaussian";
    }
    return "?";
}

std::string to_string(FleetKind k) { return k == FleetKind::TCL ? "tcl" : "ess"; }

Knowledge knowledge_from_string(const std::string& s)
{
    if (s == "none") return Knowledge::None;
    if (s == "unimodal") return Knowledge::Unimodal;
    if (s == "gaussian") return Knowledge::Gaussian;
    throw ConfigError("unknown knowledge level '" + s + "' (none, unimodal, gaussian)");
}

FleetKind fleet_kind_from_string(const std::string& s)
{
    if (s == "tcl" || s == "TCL") return FleetKind::TCL;
    if (s == "ess" || s == "ESS") return FleetKind::ESS;
    throw ConfigError("unknown fleet kind '" + s + "' (tcl, ess)");
}

SelectMode select_mode_from_string(const std::string& s)
{
    if (s == "first_n") return SelectMode::FirstN;
    if (s == "top_n") return SelectMode::TopN;
    throw ConfigError("unknown harmonic selection '" + s + "' (first_n, top_n)");
}

} // namespace pktffr::spectral
