#include "pktffr/fleet.hpp"

#include "pktffr/errors.hpp"
#include "pktffr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pktffr::fleet {

int FleetConfig::n_p() const
{
    return static_cast<int>(std::floor(delta / dt_bin + 1e-9));
}

void FleetConfig::validate() const
{
    if (n_tcl < 0 || n_ess < 0) throw ConfigError("fleet: device counts must be >= 0");
    if (!(delta >= 60.0 && delta <= 600.0)) throw ConfigError("fleet: delta must lie in [60, 600] s");
    if (!(dt_bin > 0.0)) throw ConfigError("fleet: dt_bin must be positive");
    if (n_p() < 1) throw ConfigError("fleet: delta/dt_bin must be >= 1");
    if (!(mttr > 0.0)) throw ConfigError("fleet: mttr must be positive");
    if (!(p_cap_kw > 0.0)) throw ConfigError("fleet: p_cap_kw must be positive");
    if (!(delay_min >= 0.0 && delay_max >= delay_min)) throw ConfigError("fleet: need 0 <= delay_min <= delay_max");
    if (!(resolution >= 0.0)) throw ConfigError("fleet: resolution must be >= 0");
    if (!(initial_on_fraction >= 0.0 && initial_on_fraction <= 1.0))
        throw ConfigError("fleet: initial_on_fraction must lie in [0, 1]");
    const auto& th = thermal;
    if (!(th.t_min < th.t_set && th.t_set < th.t_max)) throw ConfigError("fleet: need t_min < t_set < t_max");
    if (!(th.tau > 0.0)) throw ConfigError("fleet: thermal tau must be positive");
    const auto& st = storage;
    if (!(0.0 <= st.soc_min && st.soc_min < st.soc_set && st.soc_set < st.soc_max && st.soc_max <= 1.0))
        throw ConfigError("fleet: need 0 <= soc_min < soc_set < soc_max <= 1");
    if (!(st.capacity_kwh > 0.0)) throw ConfigError("fleet: storage capacity must be positive");
    double wsum = 0.0;
    for (const auto& [b, w] : bus_weights) {
        if (!(w >= 0.0)) throw ConfigError("fleet: bus weights must be >= 0");
        wsum += w;
    }
    if (!bus_weights.empty() && !(wsum > 0.0)) throw ConfigError("fleet: bus weights sum to zero");
}

int threshold_age(double eta, int n_p, double dt_bin, double delta)
{
    for (int a = 0; a < n_p; ++a)
        if (timer_fraction(a, dt_bin, delta) >= eta) return a;
    return n_p;
}

double quantize(double f, double resolution)
{
    if (resolution <= 0.0) return f;
    return std::round(f / resolution) * resolution;
}

Device step_device(Device dev, std::optional<Direction> accepted, double grid_freq, double rocof_val,
                   const control::ControlParams& p, const StepContext& ctx)
{
    if (accepted && dev.state == 0) {
        dev.state = static_cast<int>(*accepted);
        dev.timer = 0.0;
    }

    const double df = grid_freq - ctx.nominal_hz;
    if (std::abs(df) >= p.f_db && !dev.participated) {
        const double h = control::eta(df, rocof_val, p);
        if (df < 0.0 && dev.state == 1 && dev.timer / ctx.delta >= h) {
            dev.participated = true;
            if (dev.kind == Kind::TCL) {
                dev.state = 0;
                dev.timer = 0.0;
            } else {
                dev.state = -1;
                dev.timer = -dev.timer;
            }
        } else if (df > 0.0 && dev.kind == Kind::ESS && dev.state == -1 && -dev.timer / ctx.delta >= h) {
            dev.participated = true;
            dev.state = 1;
            dev.timer = -dev.timer;
        }
    }

    if (ctx.advance_timer) {
        if (dev.state == 0) {
            dev.timer = 0.0;
        } else {
            dev.timer += dev.state * ctx.dt;
            if (std::abs(dev.timer) >= ctx.delta - 1e-9) {
                dev.state = 0;
                dev.timer = 0.0;
            }
        }
    }
    return dev;
}

double sense_frequency(const Device& dev, std::span<const double> history, long step, double dt)
{
    if (history.empty()) throw DomainError("sense_frequency: empty history");
    const long lag = std::lround(dev.actuation_delay / dt);
    long k = std::clamp(step - lag, 0L, static_cast<long>(history.size()) - 1);
    return quantize(history[static_cast<std::size_t>(k)], dev.meas_resolution);
}

double request_rate(Kind kind, Direction dir, double e, const FleetConfig& cfg)
{
    const double inf = std::numeric_limits<double>::infinity();
    const double base = 1.0 / cfg.mttr;
    if (kind == Kind::TCL) {
        if (dir == Direction::Discharge) return 0.0;
        const auto& th = cfg.thermal;
        if (e < th.t_min) return inf;
        return base * std::clamp((th.t_max - e) / (th.t_max - th.t_set), 0.0, 2.0);
    }
    const auto& st = cfg.storage;
    if (dir == Direction::Charge) {
        if (e < st.soc_min) return inf;
        return base * std::clamp((st.soc_max - e) / (st.soc_max - st.soc_set), 0.0, 2.0);
    }
    if (e > st.soc_max) return inf;
    return base * std::clamp((e - st.soc_min) / (st.soc_set - st.soc_min), 0.0, 2.0);
}

Fleet::Fleet(const FleetConfig& cfg, double grid_dt) : cfg_(cfg), grid_dt_(grid_dt)
{
    cfg.validate();
    n_p_ = cfg.n_p();
    const std::size_t n = static_cast<std::size_t>(cfg.size());
    kind.resize(n);
    p_cap.assign(n, static_cast<float>(cfg.p_cap_kw));
    state.assign(n, 0);
    age.assign(n, 0);
    energy.resize(n);
    participated.assign(n, 0);
    delay_steps.assign(n, 0);
    bus.assign(n, cfg.bus);

    const std::uint64_t seed = cfg.seed;
    for (std::size_t i = 0; i < n; ++i) {
        const bool tcl = i < static_cast<std::size_t>(cfg.n_tcl);
        kind[i] = tcl ? Kind::TCL : Kind::ESS;
        const double u = rng::uniform(seed, rng::kInitialState, i, 0);
        if (tcl)
            energy[i] = cfg.thermal.t_min + u * (cfg.thermal.t_max - cfg.thermal.t_min);
        else
            energy[i] = cfg.storage.soc_min + u * (cfg.storage.soc_max - cfg.storage.soc_min);
        const double d = cfg.delay_min + rng::uniform(seed, rng::kDelay, i, 0) * (cfg.delay_max - cfg.delay_min);
        delay_steps[i] = static_cast<std::int32_t>(std::lround(d / grid_dt));
    }

    // Exactly round(fraction·n) devices start ON, spread evenly over the timer bins.
    const auto n_on = static_cast<std::size_t>(std::llround(cfg.initial_on_fraction * static_cast<double>(n)));
    if (n_on > 0) {
        std::vector<std::pair<double, std::size_t>> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = {rng::uniform(seed, rng::kInitialState, i, 1), i};
        std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_on - 1), order.end());
        std::vector<std::size_t> on;
        on.reserve(n_on);
        for (std::size_t j = 0; j < n_on; ++j) on.push_back(order[j].second);
        std::sort(on.begin(), on.end());
        for (std::size_t j = 0; j < on.size(); ++j) {
            state[on[j]] = 1;
            age[on[j]] = static_cast<std::int32_t>(j % static_cast<std::size_t>(n_p_));
        }
    }

    if (!cfg.bus_weights.empty()) {
        double total = 0.0;
        for (const auto& bw : cfg.bus_weights) total += bw.second;
        double cum = 0.0;
        std::size_t start = 0;
        for (std::size_t b = 0; b < cfg.bus_weights.size(); ++b) {
            cum += cfg.bus_weights[b].second;
            const auto end = b + 1 == cfg.bus_weights.size()
                                 ? n
                                 : static_cast<std::size_t>(std::llround(cum / total * static_cast<double>(n)));
            for (std::size_t i = start; i < end && i < n; ++i) bus[i] = cfg.bus_weights[b].first;
            start = end;
        }
    }
    thermal_a_ = std::exp(-cfg.dt_bin / cfg.thermal.tau);
}

Device Fleet::device(std::size_t i) const
{
    Device d;
    d.id = static_cast<int>(i);
    d.kind = kind[i];
    d.p_cap = p_cap[i];
    d.state = state[i];
    d.timer = state[i] * timer_fraction(age[i], cfg_.dt_bin, 1.0);
    d.energy = energy[i];
    if (kind[i] == Kind::TCL) {
        d.band_min = cfg_.thermal.t_min;
        d.setpoint = cfg_.thermal.t_set;
        d.band_max = cfg_.thermal.t_max;
    } else {
        d.band_min = cfg_.storage.soc_min;
        d.setpoint = cfg_.storage.soc_set;
        d.band_max = cfg_.storage.soc_max;
    }
    d.participated = participated[i] != 0;
    d.actuation_delay = delay_steps[i] * grid_dt_;
    d.meas_resolution = cfg_.resolution;
    return d;
}

double Fleet::power_kw() const
{
    double s = 0.0;
    for (std::size_t i = 0; i < state.size(); ++i) s += state[i] * static_cast<double>(p_cap[i]);
    return s;
}

void Fleet::update_energy(double dt)
{
    const auto& th = cfg_.thermal;
    const auto& st = cfg_.storage;
    const double a = dt == cfg_.dt_bin ? thermal_a_ : std::exp(-dt / th.tau);
    const double soc_gain = dt / 3600.0 / st.capacity_kwh;
    // Devices [0, n_tcl) are TCLs, the rest ESS.
    const std::size_t n_tcl = static_cast<std::size_t>(cfg_.n_tcl);
    const double sink = (1.0 - a) * th.ambient;
    const double heat = (1.0 - a) * th.kappa;
    for (std::size_t i = 0; i < n_tcl; ++i)
        energy[i] = a * energy[i] + sink + heat * (state[i] * static_cast<double>(p_cap[i]));
    for (std::size_t i = n_tcl; i < state.size(); ++i) {
        const double p = state[i] * static_cast<double>(p_cap[i]);
        energy[i] += (p - st.drain_fraction * p_cap[i]) * soc_gain;
    }
}

std::vector<Request> generate_requests(const Fleet& fleet, std::uint64_t coord_step)
{
    const auto& cfg = fleet.config();
    std::vector<Request> out;
    const double dt = cfg.dt_bin;
    const auto req_pre = rng::prefix(cfg.seed, rng::kRequest);
    const auto arr_pre = rng::prefix(cfg.seed, rng::kArrival);
    auto emit = [&](std::size_t i, Direction dir, bool forced) {
        out.push_back({static_cast<int>(i), dir, fleet.p_cap[i], forced,
                       rng::uniform_at(arr_pre, i, coord_step) * dt});
    };
    const auto& th = cfg.thermal;
    const double tcl_scale = dt / cfg.mttr;
    const double inv_band = 1.0 / (th.t_max - th.t_set);
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        if (fleet.state[i] != 0) continue;
        const Kind k = fleet.kind[i];
        const double e = fleet.energy[i];
        if (k == Kind::TCL) {
            if (e < th.t_min) {
                emit(i, Direction::Charge, true);
                continue;
            }
            const double pc = std::min(tcl_scale * std::clamp((th.t_max - e) * inv_band, 0.0, 2.0), 1.0);
            if (pc > 0.0 && rng::uniform_at(req_pre, i, coord_step) < pc) emit(i, Direction::Charge, false);
            continue;
        }
        const double lc = request_rate(k, Direction::Charge, e, cfg);
        const double ld = request_rate(k, Direction::Discharge, e, cfg);
        if (std::isinf(lc)) {
            emit(i, Direction::Charge, true);
            continue;
        }
        if (std::isinf(ld)) {
            emit(i, Direction::Discharge, true);
            continue;
        }
        const double pc = std::min(lc * dt, 1.0);
        const double pd = std::min(ld * dt, 1.0 - pc);
        if (pc <= 0.0 && pd <= 0.0) continue;
        const double u = rng::uniform_at(req_pre, i, coord_step);
        if (u < pc)
            emit(i, Direction::Charge, false);
        else if (u < pc + pd)
            emit(i, Direction::Discharge, false);
    }
    return out;
}

double fleet_power(const Fleet& fleet)
{
    return fleet.power_kw() / 1000.0;
}

} // namespace pktffr::fleet
