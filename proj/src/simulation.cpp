#include "pktffr/simulation.hpp"

#include "pktffr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace pktffr::sim {

double nominal_power_mw(const fleet::FleetConfig& cfg)
{
    const auto& th = cfg.thermal;
    const double duty = std::clamp((th.t_set - th.ambient) / (th.kappa * cfg.p_cap_kw), 0.0, 1.0);
    return (cfg.n_tcl * cfg.p_cap_kw * duty + cfg.n_ess * cfg.p_cap_kw * cfg.storage.drain_fraction) / 1000.0;
}

namespace {

fleet::FleetConfig with_initial_on(fleet::FleetConfig cfg, double p_nom_mw)
{
    const double cap = cfg.size() * cfg.p_cap_kw;
    cfg.initial_on_fraction = cap > 0.0 ? std::clamp(p_nom_mw * 1000.0 / cap, 0.0, 1.0) : 0.0;
    return cfg;
}

bool ack_later(const auto& a, const auto& b) { return a.deliver_step > b.deliver_step; }

} // namespace

ClosedLoop::ClosedLoop(grid::GridModel grid, const fleet::FleetConfig& fleet_cfg, const control::ControlParams& ctrl,
                       Reference ref, Options opt)
    : grid_(std::move(grid)),
      ctrl_(ctrl),
      ref_(std::move(ref)),
      opt_(opt),
      metric_rocof_(ctrl, grid_.dt)
{
    grid::validate(grid_);
    ctrl_.validate();
    fleet_ = fleet::Fleet(with_initial_on(fleet_cfg, ref_.p_nom_mw), grid_.dt);
    const auto& cfg = fleet_.config();

    const double spb = cfg.dt_bin / grid_.dt;
    steps_per_bin_ = static_cast<int>(std::lround(spb));
    if (steps_per_bin_ < 1 || std::abs(spb - steps_per_bin_) > 1e-6)
        throw ConfigError("dt_bin must be an integer multiple of the grid step");

    hist_ = coord::census(fleet_);
    const std::size_t nb = grid_.buses.size();
    bus_power_kw_.assign(nb, 0.0);
    dev_bus_idx_.resize(fleet_.size());
    int max_delay = 0;
    for (std::size_t i = 0; i < fleet_.size(); ++i) {
        dev_bus_idx_[i] = grid_.index_of(fleet_.bus[i]);
        bus_power_kw_[dev_bus_idx_[i]] += fleet_.state[i] * static_cast<double>(fleet_.p_cap[i]);
        max_delay = std::max(max_delay, fleet_.delay_steps[i]);
    }
    bus_baseline_kw_ = bus_power_kw_;
    hist_len_ = static_cast<std::size_t>(max_delay) + 1;
    freq_hist_.assign(nb, std::vector<double>(hist_len_, grid_.nominal_hz));
    disturbance_.assign(nb, 0.0);

    std::map<std::pair<std::size_t, int>, std::size_t> index;
    for (std::size_t i = 0; i < fleet_.size(); ++i) {
        const auto key = std::make_pair(dev_bus_idx_[i], static_cast<int>(fleet_.delay_steps[i]));
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, channels_.size()).first;
            channels_.push_back(Channel{.bus_idx = key.first,
                                        .delay = key.second,
                                        .devices = {},
                                        .rocof = control::RocofEstimator(ctrl_, grid_.dt),
                                        .min_eta = {1.0, 1.0},
                                        .threshold = {fleet_.n_p(), fleet_.n_p()},
                                        .active = false});
        }
        channels_[it->second].devices.push_back(static_cast<int>(i));
    }
    for (auto& ch : channels_) ch.rocof.prime(0.0, 0.0);
    metric_rocof_.prime(0.0, 0.0);

    measure_bus_ = opt_.measure_bus >= 0 ? opt_.measure_bus : cfg.bus;
    measure_idx_ = grid_.index_of(measure_bus_);
}

double ClosedLoop::time() const { return static_cast<double>(grid_step_) * grid_.dt - t0_; }

double ClosedLoop::fleet_power_mw() const
{
    double s = 0.0;
    for (double p : bus_power_kw_) s += p;
    return s / 1000.0;
}

double ClosedLoop::der_deviation_mw() const
{
    double s = 0.0;
    for (std::size_t b = 0; b < bus_power_kw_.size(); ++b) s += bus_power_kw_[b] - bus_baseline_kw_[b];
    return s / 1000.0;
}

double ClosedLoop::census_shed_mw(double eta) const
{
    const auto& cfg = fleet_.config();
    const int a0 = fleet::threshold_age(eta, fleet_.n_p(), cfg.dt_bin, cfg.delta);
    double s = 0.0;
    for (std::size_t i = 0; i < fleet_.size(); ++i) {
        if (fleet_.state[i] != 1 || fleet_.age[i] < a0) continue;
        s += (fleet_.kind[i] == fleet::Kind::TCL ? 1.0 : 2.0) * fleet_.p_cap[i];
    }
    return s / 1000.0;
}

void ClosedLoop::set_state(int i, int s)
{
    const auto u = static_cast<std::size_t>(i);
    bus_power_kw_[dev_bus_idx_[u]] += (s - fleet_.state[u]) * static_cast<double>(fleet_.p_cap[u]);
    fleet_.state[u] = static_cast<std::int8_t>(s);
}

void ClosedLoop::apply_ack(const Ack& a)
{
    const long bin = a.age + (coord_step_ - a.coord_at);
    if (bin < 0 || bin >= hist_.n_p) return;  // packet already expired from the histogram
    const auto b = static_cast<std::size_t>(bin);
    hist_.bins(a.from)[b] -= a.p;
    if (a.to >= 0) hist_.bins(static_cast<coord::TimerClass>(a.to))[b] += a.p;
}

void ClosedLoop::post_ack(int i, coord::TimerClass from, int to)
{
    const auto u = static_cast<std::size_t>(i);
    Ack a{grid_step_ + fleet_.delay_steps[u], coord_step_, fleet_.age[u], from, to, fleet_.p_cap[u]};
    if (fleet_.delay_steps[u] == 0) {
        apply_ack(a);
        return;
    }
    acks_.push_back(a);
    std::push_heap(acks_.begin(), acks_.end(), ack_later<Ack, Ack>);
}

void ClosedLoop::deliver_acks(bool all)
{
    while (!acks_.empty() && (all || acks_.front().deliver_step <= grid_step_)) {
        std::pop_heap(acks_.begin(), acks_.end(), ack_later<Ack, Ack>);
        apply_ack(acks_.back());
        acks_.pop_back();
    }
}

coord::AcceptResult ClosedLoop::coordination_step()
{
    const auto& cfg = fleet_.config();
    fleet_.update_energy(cfg.dt_bin);
    if (event_mode_) return {};

    const auto& th = cfg.thermal;
    const auto& st = cfg.storage;
    const int np = fleet_.n_p();
    for (std::size_t i = 0; i < fleet_.size(); ++i) {
        const int s = fleet_.state[i];
        if (s == 0) continue;
        const bool tcl = fleet_.kind[i] == fleet::Kind::TCL;
        const double e = fleet_.energy[i];
        const bool out = tcl ? e > th.t_max : (s > 0 && e > st.soc_max) || (s < 0 && e < st.soc_min);
        if (out) {
            const auto cls = s < 0 ? coord::TimerClass::EssDischarge
                                   : (tcl ? coord::TimerClass::TclCharge : coord::TimerClass::EssCharge);
            post_ack(static_cast<int>(i), cls, -1);
            set_state(static_cast<int>(i), 0);
            fleet_.age[i] = 0;
            ++opt_outs_;
        } else if (++fleet_.age[i] >= np) {
            set_state(static_cast<int>(i), 0);
            fleet_.age[i] = 0;
        }
    }

    const auto requests = fleet::generate_requests(fleet_, static_cast<std::uint64_t>(coord_step_));
    const double t_rel = static_cast<double>(grid_step_) * grid_.dt - t0_;
    const double ref_mw = warming_ ? ref_.p_nom_mw : ref_.at(t_rel);
    auto res = coord::accept_requests(requests, ref_mw * 1000.0, hist_, fleet_.kind);
    coord::step_histograms_inplace(hist_, res.q_ch_tcl, res.q_ch_ess, res.q_dis_ess);
    for (std::size_t idx : res.accepted) {
        const auto& r = requests[idx];
        set_state(r.id, static_cast<int>(r.dir));
        fleet_.age[static_cast<std::size_t>(r.id)] = 0;
    }
    ++coord_step_;
    bus_baseline_kw_ = bus_power_kw_;

    if (opt_.record_tracking) {
        const double agg = fleet_power_mw();
        tracking_.push_back({coord_step_, ref_mw, agg, res.q_ch_tcl + res.q_ch_ess + res.q_dis_ess, agg - ref_mw});
    }
    return res;
}

void ClosedLoop::track(double seconds, const std::function<void(const ClosedLoop&, const coord::AcceptResult&)>& cb)
{
    if (event_mode_) throw DomainError("tracking-only advance is not allowed during a frequency event");
    const auto n = std::lround(seconds / fleet_.config().dt_bin);
    for (long s = 0; s < n; ++s) {
        deliver_acks(true);
        const auto res = coordination_step();
        grid_step_ += steps_per_bin_;
        if (cb) cb(*this, res);
    }
}

void ClosedLoop::warm_up()
{
    warming_ = true;
    track(opt_.warmup);
    warming_ = false;
    t0_ = static_cast<double>(grid_step_) * grid_.dt;
}

void ClosedLoop::participate(Channel& ch, int dir)
{
    const int a0 = ch.threshold[dir];
    for (int i : ch.devices) {
        const auto u = static_cast<std::size_t>(i);
        if (fleet_.participated[u] || fleet_.age[u] < a0) continue;
        const int s = fleet_.state[u];
        const bool tcl = fleet_.kind[u] == fleet::Kind::TCL;
        if (dir == 0 && s == 1) {
            if (tcl) {
                post_ack(i, coord::TimerClass::TclCharge, -1);
                set_state(i, 0);
                fleet_.age[u] = 0;
            } else {
                post_ack(i, coord::TimerClass::EssCharge, static_cast<int>(coord::TimerClass::EssDischarge));
                set_state(i, -1);
            }
        } else if (dir == 1 && s == -1 && !tcl) {
            post_ack(i, coord::TimerClass::EssDischarge, static_cast<int>(coord::TimerClass::EssCharge));
            set_state(i, 1);
        } else {
            continue;
        }
        fleet_.participated[u] = 1;
        ++participants_;
        ++event_.participants;
        event_.participant_power_mw += fleet_.p_cap[u] * (tcl ? 1.0 : 2.0) / 1000.0;
    }
}

void ClosedLoop::sense_and_participate()
{
    const auto& cfg = fleet_.config();
    const double t = static_cast<double>(grid_step_) * grid_.dt;
    const std::size_t slot = static_cast<std::size_t>(grid_step_) % hist_len_;
    for (std::size_t b = 0; b < grid_.buses.size(); ++b)
        freq_hist_[b][slot] = grid_.nominal_hz + grid_.buses[b].freq_dev;

    struct Reading {
        double df, d;
    };
    std::vector<Reading> readings(channels_.size());
    bool any = false;
    for (std::size_t c = 0; c < channels_.size(); ++c) {
        auto& ch = channels_[c];
        const long ks = grid_step_ - ch.delay;
        const double f = ks < 0 ? grid_.nominal_hz
                                : freq_hist_[ch.bus_idx][static_cast<std::size_t>(ks) % hist_len_];
        const double df = fleet::quantize(f, cfg.resolution) - grid_.nominal_hz;
        const double d = ch.rocof.update(t, control::g1(df, ctrl_));
        readings[c] = {df, d};
        ch.active = std::abs(df) >= ctrl_.f_db;
        any = any || ch.active;
    }

    if (any && !event_mode_) {
        event_mode_ = true;
        for (auto& ch : channels_) {
            ch.min_eta[0] = ch.min_eta[1] = 1.0;
            ch.threshold[0] = ch.threshold[1] = fleet_.n_p();
        }
        if (!event_.detected) {
            event_.detected = true;
            event_.detect_step = grid_step_;
            event_.detect_time = t - t0_;
            event_.histogram = hist_;
            event_.fleet_mw_at_detect = fleet_power_mw();
        }
    }
    if (any) last_active_ = t;

    for (std::size_t c = 0; c < channels_.size(); ++c) {
        auto& ch = channels_[c];
        if (!ch.active) continue;
        const int dir = readings[c].df < 0.0 ? 0 : 1;
        const double e = control::eta(readings[c].df, readings[c].d, ctrl_);
        if (e >= ch.min_eta[dir]) continue;
        ch.min_eta[dir] = e;
        const int a0 = fleet::threshold_age(e, fleet_.n_p(), cfg.dt_bin, cfg.delta);
        if (a0 < ch.threshold[dir]) {
            ch.threshold[dir] = a0;
            participate(ch, dir);
        }
    }

    if (event_mode_ && !any && t - last_active_ >= opt_.event_hold - 1e-9) {
        event_mode_ = false;
        std::fill(fleet_.participated.begin(), fleet_.participated.end(), 0);
    }
}

void ClosedLoop::record_trace()
{
    TraceSample s;
    s.t = static_cast<double>(grid_step_) * grid_.dt - t0_;
    s.freq_hz.reserve(grid_.buses.size());
    for (const auto& b : grid_.buses) s.freq_hz.push_back(grid_.nominal_hz + b.freq_dev);
    s.der_mw = der_deviation_mw();
    s.fleet_mw = fleet_power_mw();
    s.participants = participants_;
    trace_.push_back(std::move(s));
}

void ClosedLoop::run_until(double t_end, const std::vector<Event>& events)
{
    std::vector<std::size_t> ev_idx;
    for (const auto& e : events) ev_idx.push_back(grid_.index_of(e.bus));
    const long end_step = std::lround((t_end + t0_) / grid_.dt);
    if (opt_.record_trace && trace_.empty()) record_trace();

    std::vector<double> der(grid_.buses.size());
    while (grid_step_ < end_step) {
        if (grid_step_ % steps_per_bin_ == 0) coordination_step();

        const double t_rel = static_cast<double>(grid_step_) * grid_.dt - t0_;
        std::fill(disturbance_.begin(), disturbance_.end(), 0.0);
        for (std::size_t e = 0; e < events.size(); ++e)
            if (t_rel >= events[e].time - 1e-9) disturbance_[ev_idx[e]] += events[e].delta_p;
        for (std::size_t b = 0; b < der.size(); ++b) der[b] = (bus_power_kw_[b] - bus_baseline_kw_[b]) / 1000.0;

        grid::step_grid_inplace(grid_, disturbance_, der);
        ++grid_step_;
        deliver_acks(false);
        sense_and_participate();

        const double dfm = grid_.buses[measure_idx_].freq_dev;
        const double d = metric_rocof_.update(static_cast<double>(grid_step_) * grid_.dt, control::g1(dfm, ctrl_));
        const bool disturbed = std::any_of(disturbance_.begin(), disturbance_.end(), [](double p) { return p != 0.0; });
        if (event_.detected || disturbed) {
            const double t_now = static_cast<double>(grid_step_) * grid_.dt - t0_;
            const double shed = event_.detected ? event_.fleet_mw_at_detect - fleet_power_mw() : 0.0;
            if (std::abs(dfm) > event_.nadir) {
                event_.nadir = std::abs(dfm);
                event_.nadir_time = t_now;
                event_.fleet_delta_at_nadir_mw = shed;
            }
            event_.r_max = std::max(event_.r_max, std::abs(d));
            event_.max_shed_mw = std::max(event_.max_shed_mw, shed);
        }
        if (opt_.record_trace && grid_step_ % opt_.trace_every == 0) record_trace();
    }
}

} // namespace pktffr::sim
