#include "pktffr/coordinator.hpp"

#include "pktffr/errors.hpp"

#include <algorithm>
#include <cmath>

namespace pktffr::coord {

TimerHistogram::TimerHistogram(int n, double dt, double d)
    : n_p(n), dt_bin(dt), delta(d), tcl_charge(n, 0.0), ess_charge(n, 0.0), ess_discharge(n, 0.0)
{
    if (n < 1) throw DomainError("histogram needs at least one bin");
}

std::vector<double>& TimerHistogram::bins(TimerClass c)
{
    switch (c) {
    case TimerClass::TclCharge: return tcl_charge;
    case TimerClass::EssCharge: return ess_charge;
    default: return ess_discharge;
    }
}

const std::vector<double>& TimerHistogram::bins(TimerClass c) const
{
    return const_cast<TimerHistogram*>(this)->bins(c);
}

TimerHistogram census(const fleet::Fleet& f)
{
    const auto& cfg = f.config();
    TimerHistogram h(f.n_p(), cfg.dt_bin, cfg.delta);
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f.state[i] == 0) continue;
        const auto a = static_cast<std::size_t>(f.age[i]);
        const double p = f.p_cap[i];
        if (f.state[i] > 0)
            (f.kind[i] == fleet::Kind::TCL ? h.tcl_charge : h.ess_charge)[a] += p;
        else
            h.ess_discharge[a] += p;
    }
    return h;
}

void step_histograms_inplace(TimerHistogram& h, double q_ch_tcl, double q_ch_ess, double q_dis_ess)
{
    if (q_ch_tcl < 0.0 || q_ch_ess < 0.0 || q_dis_ess < 0.0)
        throw DomainError("histogram inputs must be non-negative");
    auto shift = [](std::vector<double>& x, double q) {
        for (std::size_t i = x.size() - 1; i > 0; --i) x[i] = x[i - 1];
        x[0] = q;
    };
    shift(h.tcl_charge, q_ch_tcl);
    shift(h.ess_charge, q_ch_ess);
    shift(h.ess_discharge, q_dis_ess);
}

TimerHistogram step_histograms(TimerHistogram h, double q_ch_tcl, double q_ch_ess, double q_dis_ess)
{
    step_histograms_inplace(h, q_ch_tcl, q_ch_ess, q_dis_ess);
    return h;
}

namespace {
double total(const std::vector<double>& x, std::size_t from, std::size_t to)
{
    double s = 0.0;
    for (std::size_t i = from; i < to; ++i) s += x[i];
    return s;
}
} // namespace

double aggregate_power(const TimerHistogram& h)
{
    const std::size_t n = h.tcl_charge.size();
    return total(h.tcl_charge, 0, n) + total(h.ess_charge, 0, n) - total(h.ess_discharge, 0, n);
}

double projected_power(const TimerHistogram& h)
{
    const std::size_t n = h.tcl_charge.size();
    if (n == 0) return 0.0;
    return total(h.tcl_charge, 0, n - 1) + total(h.ess_charge, 0, n - 1) - total(h.ess_discharge, 0, n - 1);
}

double available_power(const TimerHistogram& h, double eta)
{
    const int a0 = fleet::threshold_age(eta, h.n_p, h.dt_bin, h.delta);
    double s = 0.0;
    for (int i = a0; i < h.n_p; ++i) s += h.tcl_charge[i] + 2.0 * h.ess_charge[i];
    return s;
}

double available_power_over(const TimerHistogram& h, double eta)
{
    const int a0 = fleet::threshold_age(eta, h.n_p, h.dt_bin, h.delta);
    double s = 0.0;
    for (int i = a0; i < h.n_p; ++i) s += 2.0 * h.ess_discharge[i];
    return s;
}

AcceptResult accept_requests(const std::vector<fleet::Request>& reqs, double reference_kw, const TimerHistogram& h,
                             const std::vector<fleet::Kind>& kinds, Policy)
{
    using fleet::Direction;
    AcceptResult res;
    const double deficit = reference_kw - projected_power(h);
    const bool any_discharge =
        std::any_of(reqs.begin(), reqs.end(), [](const auto& r) { return r.dir == Direction::Discharge; });
    const Direction dir = (deficit >= 0.0 || !any_discharge) ? Direction::Charge : Direction::Discharge;
    double need = dir == Direction::Charge ? deficit : -deficit;

    auto take = [&](std::size_t idx) {
        const auto& r = reqs[idx];
        res.accepted.push_back(idx);
        if (r.dir == Direction::Discharge)
            res.q_dis_ess += r.p_rate;
        else if (kinds.at(static_cast<std::size_t>(r.id)) == fleet::Kind::TCL)
            res.q_ch_tcl += r.p_rate;
        else
            res.q_ch_ess += r.p_rate;
        need -= r.p_rate;
    };

    std::vector<std::size_t> normal;
    for (std::size_t i = 0; i < reqs.size(); ++i) {
        if (reqs[i].dir != dir) continue;
        if (reqs[i].forced)
            take(i);
        else
            normal.push_back(i);
    }
    std::stable_sort(normal.begin(), normal.end(), [&](std::size_t a, std::size_t b) {
        if (reqs[a].p_rate != reqs[b].p_rate) return reqs[a].p_rate > reqs[b].p_rate;
        return reqs[a].arrival < reqs[b].arrival;
    });
    for (std::size_t idx : normal) {
        if (need <= 0.0) break;
        take(idx);
    }
    res.shortfall = std::max(need, 0.0);
    if (!res.accepted.empty()) res.direction = static_cast<int>(dir);
    return res;
}

DampingEstimate estimate_damping(const TimerHistogram& h, double nadir, double r_max, const control::ControlParams& p,
                                 long step)
{
    const double dev = std::abs(nadir);
    if (!(dev > p.f_db)) throw DomainError("damping is undefined for a nadir inside the deadband");
    DampingEstimate e;
    e.nadir_assumed = dev;
    e.rocof_assumed = r_max;
    e.eta_used = control::eta(-dev, r_max, p);
    e.delta_p_der = available_power(h, e.eta_used) / 1000.0;
    e.d_syn = e.delta_p_der / (dev - p.f_db);
    e.computed_at = step;
    return e;
}

std::vector<DampingEstimate> damping_sweep(const TimerHistogram& h, const std::vector<SweepPoint>& points,
                                           const control::ControlParams& p, long step)
{
    std::vector<DampingEstimate> out;
    out.reserve(points.size());
    for (const auto& pt : points) out.push_back(estimate_damping(h, pt.nadir, pt.rocof, p, step));
    return out;
}

} // namespace pktffr::coord
