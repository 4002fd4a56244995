#include "pktffr/experiments.hpp"

#include "pktffr/agc_io.hpp"
#include "pktffr/csv.hpp"
#include "pktffr/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

namespace pktffr::exp {

namespace fs = std::filesystem;
using scenario::Scenario;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string join(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

sim::Options loop_options(const Scenario& s, bool record_trace, int trace_every)
{
    sim::Options o;
    o.warmup = s.warmup;
    o.event_hold = s.event_hold;
    o.measure_bus = s.measure_bus;
    o.record_trace = record_trace;
    o.trace_every = trace_every;
    o.record_tracking = true;
    return o;
}

double first_event_time(const Scenario& s)
{
    double t = s.duration;
    for (const auto& e : s.events) t = std::min(t, e.time);
    return s.events.empty() ? 0.0 : t;
}

template <class F>
void parallel_for(std::size_t n, int threads, F&& body)
{
    const auto workers = static_cast<std::size_t>(std::clamp<long>(threads, 1, static_cast<long>(std::max<std::size_t>(n, 1))));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

} // namespace

sim::ClosedLoop make_loop(const Scenario& s, bool record_trace, int trace_every)
{
    return sim::ClosedLoop(scenario::prepared_network(s), s.fleet, s.control, scenario::make_reference(s),
                           loop_options(s, record_trace, trace_every));
}

RunMetrics metrics_of(const sim::ClosedLoop& loop, const Scenario& s)
{
    RunMetrics m;
    const auto& ev = loop.event();
    m.nadir = ev.nadir;
    m.r_max = ev.r_max;
    m.realized_delta_p = ev.max_shed_mw;
    m.delta_p_at_nadir = ev.fleet_delta_at_nadir_mw;
    m.participants = ev.participants;
    if (ev.detected && ev.nadir > s.control.f_db) {
        m.realized_damping = m.realized_delta_p / (ev.nadir - s.control.f_db);
        m.estimated_damping = coord::estimate_damping(ev.histogram, ev.nadir, ev.r_max, s.control).d_syn;
    }
    const auto warm = static_cast<long>(std::lround(s.warmup / s.fleet.dt_bin));
    double se = 0.0;
    long n = 0;
    for (const auto& t : loop.tracking()) {
        if (t.step <= warm) continue;
        se += t.error_mw * t.error_mw;
        ++n;
    }
    m.tracking_rmse = n > 0 ? std::sqrt(se / static_cast<double>(n)) : 0.0;
    m.interruption_rmse = kNaN;
    const std::size_t idx = loop.grid().index_of(loop.measure_bus());
    m.quasi_steady_hz = loop.trace().empty() ? loop.grid().nominal_hz + loop.grid().buses[idx].freq_dev
                                             : quasi_steady_hz(loop.trace(), idx);
    return m;
}

RunOutput run_from(sim::ClosedLoop loop, const Scenario& s)
{
    loop.run_until(s.duration, s.events);
    RunOutput out;
    out.metrics = metrics_of(loop, s);
    out.event = loop.event();
    for (const auto& b : loop.grid().buses) out.bus_ids.push_back(b.id);
    out.trace = loop.trace();
    out.tracking = loop.tracking();
    out.final_histogram = loop.histogram();
    return out;
}

RunOutput run(const Scenario& s, const RunOptions& opt)
{
    auto loop = make_loop(s, opt.record_trace, opt.trace_every);
    loop.warm_up();
    return run_from(std::move(loop), s);
}

double interruption_rmse(const std::vector<sim::TraceSample>& a, const std::vector<sim::TraceSample>& b,
                         double t_from)
{
    const std::size_t n = std::min(a.size(), b.size());
    double se = 0.0;
    long cnt = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(a[i].t - b[i].t) > 1e-9) throw DomainError("traces are not aligned in time");
        if (a[i].t < t_from - 1e-9) continue;
        const double d = a[i].der_mw - b[i].der_mw;
        se += d * d;
        ++cnt;
    }
    return cnt > 0 ? std::sqrt(se / static_cast<double>(cnt)) : 0.0;
}

double quasi_steady_hz(const std::vector<sim::TraceSample>& trace, std::size_t bus_idx, double window)
{
    if (trace.empty()) throw DomainError("empty trace");
    const double t_end = trace.back().t;
    double s = 0.0;
    long n = 0;
    for (const auto& x : trace) {
        if (x.t < t_end - window - 1e-9) continue;
        s += x.freq_hz.at(bus_idx);
        ++n;
    }
    return s / static_cast<double>(n);
}

void write_run(const RunOutput& out, const Scenario& s, const std::string& dir)
{
    fs::create_directories(dir);
    std::map<std::string, std::map<std::string, std::string>> manifest;

    {
        std::vector<std::string> hdr{"t_s"};
        auto& cols = manifest["frequency.csv"];
        cols["t_s"] = "time after warm-up, s";
        for (int id : out.bus_ids) {
            hdr.push_back("f_bus" + std::to_string(id) + "_Hz");
            cols[hdr.back()] = "absolute frequency at bus " + std::to_string(id) + ", Hz";
        }
        csv::Writer w(join(dir, "frequency.csv"), hdr);
        for (const auto& x : out.trace) {
            std::vector<double> row{x.t};
            row.insert(row.end(), x.freq_hz.begin(), x.freq_hz.end());
            w.row(row);
        }
    }
    {
        csv::Writer w(join(dir, "der.csv"), {"t_s", "delta_p_der_MW", "fleet_MW", "participants"});
        for (const auto& x : out.trace)
            w.row({x.t, x.der_mw, x.fleet_mw, static_cast<double>(x.participants)});
        manifest["der.csv"] = {{"t_s", "time after warm-up, s"},
                               {"delta_p_der_MW", "fleet power deviation injected into the grid, MW"},
                               {"fleet_MW", "aggregate fleet consumption, MW"},
                               {"participants", "devices that changed state during events"}};
    }
    auto write_hist = [&](const std::string& name, const coord::TimerHistogram& h) {
        csv::Writer w(join(dir, name), {"bin", "timer_s", "tcl_charge_kW", "ess_charge_kW", "ess_discharge_kW"});
        for (int i = 0; i < h.n_p; ++i) {
            const auto u = static_cast<std::size_t>(i);
            w.row({static_cast<double>(i), i * h.dt_bin, h.tcl_charge[u], h.ess_charge[u], h.ess_discharge[u]});
        }
        manifest[name] = {{"bin", "timer bin index"},
                          {"timer_s", "elapsed packet time, s"},
                          {"tcl_charge_kW", "TCL charging packets, kW"},
                          {"ess_charge_kW", "ESS charging packets, kW"},
                          {"ess_discharge_kW", "ESS discharging packets, kW"}};
    };
    if (out.event.detected) write_hist("histogram_at_detection.csv", out.event.histogram);
    write_hist("histogram_final.csv", out.final_histogram);
    {
        csv::Writer w(join(dir, "tracking.csv"), {"step", "reference_MW", "aggregate_MW", "accepted_kW", "error_MW"});
        for (const auto& t : out.tracking)
            w.row({static_cast<double>(t.step), t.reference_mw, t.aggregate_mw, t.accepted_kw, t.error_mw});
        manifest["tracking.csv"] = {{"step", "coordination step since start (warm-up included)"},
                                    {"reference_MW", "tracked reference"},
                                    {"aggregate_MW", "fleet consumption after the step"},
                                    {"accepted_kW", "power accepted in the step"},
                                    {"error_MW", "aggregate minus reference"}};
    }
    {
        const auto& m = out.metrics;
        csv::Writer w(join(dir, "metrics.csv"),
                      {"nadir_Hz", "r_max_Hzps", "realized_delta_p_MW", "realized_damping_MWpHz",
                       "estimated_damping_MWpHz", "tracking_rmse_MW", "interruption_rmse_MW", "quasi_steady_Hz",
                       "delta_p_at_nadir_MW", "participants"});
        w.row({m.nadir, m.r_max, m.realized_delta_p, m.realized_damping, m.estimated_damping, m.tracking_rmse,
               m.interruption_rmse, m.quasi_steady_hz, m.delta_p_at_nadir, static_cast<double>(m.participants)});
        manifest["metrics.csv"] = {{"nadir_Hz", "largest |frequency deviation| at the measurement bus"},
                                   {"r_max_Hzps", "largest shaped-deviation derivative"},
                                   {"realized_delta_p_MW", "largest fleet reduction during the event"},
                                   {"realized_damping_MWpHz", "realized_delta_p / (nadir - f_db)"},
                                   {"estimated_damping_MWpHz", "histogram estimate at the realized nadir and R_max"},
                                   {"tracking_rmse_MW", "reference tracking RMSE after warm-up"},
                                   {"interruption_rmse_MW", "DER deviation RMSE vs ideal sensing"},
                                   {"quasi_steady_Hz", "mean frequency over the final 10 s"},
                                   {"delta_p_at_nadir_MW", "fleet reduction at the nadir instant"},
                                   {"participants", "devices that changed state"}};
    }
    (void)s;
    csv::write_manifest(join(dir, "manifest.json"), manifest);
}

std::vector<SweepRow> sweep(const Scenario& base, int threads)
{
    struct Point {
        std::string parameter;
        double value;
        Scenario sc;
    };
    std::vector<Point> pts;
    std::uint64_t k = 0;
    auto add = [&](const std::string& name, double v, auto&& mutate) {
        Scenario sc = base;
        mutate(sc, v);
        if (base.sweeps.independent_seeds) sc.seed = base.seed + ++k;
        sc.fleet.seed = sc.seed;
        sc.validate();
        pts.push_back({name, v, std::move(sc)});
    };
    for (double v : base.sweeps.k_d) add("K_D", v, [](Scenario& sc, double x) { sc.control.K_D = x; });
    for (double v : base.sweeps.delay_ms)
        add("delay_ms", v, [](Scenario& sc, double x) { sc.fleet.delay_min = sc.fleet.delay_max = x / 1000.0; });
    for (double v : base.sweeps.resolution_mhz)
        add("resolution_mhz", v, [](Scenario& sc, double x) { sc.fleet.resolution = x / 1000.0; });
    for (double v : base.sweeps.amplitude_frac) {
        if (!base.agc) throw ConfigError("sweep over amplitude_frac needs an agc block");
        add("amplitude_frac", v, [](Scenario& sc, double x) { sc.agc->amplitude_frac = x; });
    }
    if (pts.empty() && base.sweeps.rho.empty()) throw ConfigError("sweep: no parameter grid configured");

    const bool need_ideal = !base.sweeps.resolution_mhz.empty();
    std::vector<SweepRow> rows(pts.size());
    std::vector<std::vector<sim::TraceSample>> traces(pts.size());
    parallel_for(pts.size(), threads, [&](std::size_t i) {
        const auto out = run(pts[i].sc, {true, need_ideal ? 1 : pts[i].sc.trace_every});
        rows[i] = {pts[i].parameter, pts[i].value, pts[i].sc.seed, out.metrics, kNaN};
        if (pts[i].parameter == "resolution_mhz") traces[i] = out.trace;
        spdlog::info("sweep {}={} nadir={:.4f} Hz", pts[i].parameter, pts[i].value, out.metrics.nadir);
    });

    if (need_ideal) {
        std::map<std::uint64_t, std::vector<sim::TraceSample>> ideal;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (pts[i].parameter != "resolution_mhz") continue;
            const auto seed = pts[i].sc.seed;
            if (!ideal.count(seed)) {
                Scenario sc = pts[i].sc;
                sc.fleet.resolution = 0.0;
                ideal[seed] = run(sc, {true, 1}).trace;
            }
            rows[i].metrics.interruption_rmse = interruption_rmse(traces[i], ideal[seed], first_event_time(base));
        }
    }

    if (!base.sweeps.rho.empty()) {
        auto model = scenario::agc_model(base);
        if (!model) throw ConfigError("sweep over rho needs an agc block");
        const auto m0 = run(base, {true, base.trace_every}).metrics;
        const auto kind = base.fleet.n_ess > 0 ? spectral::FleetKind::ESS : spectral::FleetKind::TCL;
        const auto stats = spectral::theorem1_stats(*model, kind);
        for (double rho : base.sweeps.rho) {
            const double F = spectral::safety_factor(rho, spectral::Knowledge::None);
            SweepRow r{"rho", rho, base.seed, m0, kNaN};
            if (m0.nadir > base.control.f_db)
                r.d_min = spectral::damping_lower_bound(stats, F, m0.nadir, m0.r_max, base.control, kind, model->n_p, rho)
                              .d_min;
            rows.push_back(r);
        }
    }
    return rows;
}

void write_sweep(const std::vector<SweepRow>& rows, const std::string& dir)
{
    fs::create_directories(dir);
    csv::Writer w(join(dir, "sweep.csv"),
                  {"parameter", "value", "seed", "nadir_Hz", "r_max_Hzps", "realized_delta_p_MW",
                   "realized_damping_MWpHz", "estimated_damping_MWpHz", "tracking_rmse_MW", "interruption_rmse_MW",
                   "quasi_steady_Hz", "participants", "d_min_MWpHz"});
    for (const auto& r : rows) {
        const auto& m = r.metrics;
        w.row_mixed({r.parameter, csv::fmt(r.value), std::to_string(r.seed), csv::fmt(m.nadir), csv::fmt(m.r_max),
                     csv::fmt(m.realized_delta_p), csv::fmt(m.realized_damping), csv::fmt(m.estimated_damping),
                     csv::fmt(m.tracking_rmse), csv::fmt(m.interruption_rmse), csv::fmt(m.quasi_steady_hz),
                     std::to_string(m.participants), csv::fmt(r.d_min)});
    }
    csv::write_manifest(join(dir, "manifest.json"),
                        {{"sweep.csv",
                          {{"parameter", "swept parameter name"},
                           {"value", "grid value (ms for delays, mHz for resolution)"},
                           {"seed", "fleet seed of the run"},
                           {"nadir_Hz", "largest |frequency deviation|"},
                           {"r_max_Hzps", "largest shaped-deviation derivative"},
                           {"realized_delta_p_MW", "largest fleet reduction"},
                           {"realized_damping_MWpHz", "realized synthetic damping"},
                           {"estimated_damping_MWpHz", "histogram estimate"},
                           {"tracking_rmse_MW", "tracking RMSE after warm-up"},
                           {"interruption_rmse_MW", "DER deviation RMSE vs ideal sensing"},
                           {"quasi_steady_Hz", "mean frequency over the final 10 s"},
                           {"participants", "devices that changed state"},
                           {"d_min_MWpHz", "damping lower bound at the realized nadir (rho rows)"}}}});
}

std::vector<EstimatorPair> validate_estimator(const Scenario& s, int n_events)
{
    const int n = n_events > 0 ? n_events : s.estimator.n_events;
    if (n < 1) throw DomainError("validate_estimator needs at least one event");
    int bus = s.estimator.bus;
    if (bus == 0) {
        if (s.events.empty()) throw ConfigError("estimator: no bus given and the scenario has no events");
        bus = s.events.front().bus;
    }
    (void)s.network.index_of(bus);

    auto warmed = make_loop(s);
    warmed.warm_up();
    std::mt19937_64 gen(s.seed);
    std::uniform_real_distribution<double> size(s.estimator.size_min_mw, s.estimator.size_max_mw);
    std::uniform_real_distribution<double> when(s.estimator.time_min, s.estimator.time_max);

    std::vector<EstimatorPair> out;
    for (int i = 0; i < n; ++i) {
        EstimatorPair p;
        p.index = i;
        p.size_mw = size(gen);
        p.time = when(gen);
        auto loop = warmed;
        loop.run_until(p.time + s.estimator.window, {{p.time, bus, p.size_mw}});
        const auto& ev = loop.event();
        p.nadir = ev.nadir;
        p.r_max = ev.r_max;
        p.delta_p_realized = ev.max_shed_mw;
        if (ev.detected && ev.nadir > s.control.f_db) {
            const auto est = coord::estimate_damping(ev.histogram, ev.nadir, ev.r_max, s.control);
            p.delta_p_estimated = est.delta_p_der;
            p.estimated = est.d_syn;
            p.realized = p.delta_p_realized / (ev.nadir - s.control.f_db);
            p.rel_error = p.realized != 0.0 ? std::abs(p.estimated - p.realized) / std::abs(p.realized)
                                            : (p.estimated == 0.0 ? 0.0 : 1.0);
        }
        spdlog::info("event {}: {:.1f} MW at t={:.1f} s, nadir {:.4f} Hz, est {:.2f} real {:.2f} MW/Hz", i,
                     p.size_mw, p.time, p.nadir, p.estimated, p.realized);
        out.push_back(p);
    }
    return out;
}

void write_estimator(const std::vector<EstimatorPair>& rows, const std::string& dir)
{
    fs::create_directories(dir);
    csv::Writer w(join(dir, "estimator.csv"),
                  {"event", "time_s", "size_MW", "nadir_Hz", "r_max_Hzps", "delta_p_est_MW", "delta_p_real_MW",
                   "d_est_MWpHz", "d_real_MWpHz", "rel_error"});
    for (const auto& p : rows)
        w.row({static_cast<double>(p.index), p.time, p.size_mw, p.nadir, p.r_max, p.delta_p_estimated,
               p.delta_p_realized, p.estimated, p.realized, p.rel_error});
    csv::write_manifest(join(dir, "manifest.json"),
                        {{"estimator.csv",
                          {{"event", "event index"},
                           {"time_s", "event time after warm-up"},
                           {"size_MW", "generation lost"},
                           {"nadir_Hz", "largest |frequency deviation|"},
                           {"r_max_Hzps", "largest shaped-deviation derivative"},
                           {"delta_p_est_MW", "shed predicted from the histogram at detection"},
                           {"delta_p_real_MW", "largest fleet reduction"},
                           {"d_est_MWpHz", "estimated synthetic damping"},
                           {"d_real_MWpHz", "realized synthetic damping"},
                           {"rel_error", "|est - real| / real"}}}});
}

std::vector<BoundsRow> bounds_table(const Scenario& s)
{
    auto model = scenario::agc_model(s);
    if (!model) throw ConfigError("bounds: the scenario has no agc block");
    const auto kind = s.bounds.fleet_kind;
    std::vector<BoundsRow> out;
    for (double frac : s.bounds.amplitude_frac) {
        auto m = *model;
        m.A = frac * m.p_nom;
        const auto stats = spectral::theorem1_stats(m, kind);
        for (double rho : s.bounds.rho) {
            for (auto k : {spectral::Knowledge::None, spectral::Knowledge::Unimodal, spectral::Knowledge::Gaussian}) {
                BoundsRow r;
                r.amplitude_mw = m.A;
                r.rho = rho;
                r.knowledge = k;
                r.F = spectral::safety_factor(rho, k);
                const auto b = spectral::damping_lower_bound(stats, r.F, s.bounds.nadir, s.bounds.r_max, s.control,
                                                             kind, m.n_p, rho);
                r.mean_kw = stats.mean * 1000.0;
                r.std_kw = stats.std * 1000.0;
                r.p_min_kw = b.p_min * 1000.0;
                r.d_min = b.d_min;
                spectral::BoundInputs in{m, r.F, s.bounds.nadir, s.bounds.r_max, s.control};
                r.beta_thr = std::abs(s.bounds.nadir) > s.control.f_db ? spectral::beta_threshold(in) : kNaN;
                out.push_back(r);
            }
        }
    }
    return out;
}

void write_bounds(const std::vector<BoundsRow>& rows, const std::string& dir)
{
    fs::create_directories(dir);
    csv::Writer w(join(dir, "bounds.csv"),
                  {"A_MW", "rho", "knowledge", "F", "mean_q_kW", "std_q_kW", "P_min_kW", "D_min_MWpHz", "beta_thr"});
    for (const auto& r : rows)
        w.row_mixed({csv::fmt(r.amplitude_mw), csv::fmt(r.rho), spectral::to_string(r.knowledge), csv::fmt(r.F),
                     csv::fmt(r.mean_kw), csv::fmt(r.std_kw), csv::fmt(r.p_min_kw), csv::fmt(r.d_min),
                     csv::fmt(r.beta_thr)});
    csv::write_manifest(join(dir, "manifest.json"),
                        {{"bounds.csv",
                          {{"A_MW", "regulation amplitude"},
                           {"rho", "violation probability"},
                           {"knowledge", "distribution knowledge behind F"},
                           {"F", "safety factor"},
                           {"mean_q_kW", "mean accepted power per step"},
                           {"std_q_kW", "standard deviation of accepted power per step"},
                           {"P_min_kW", "lower bound on accepted power per step (clamped at 0)"},
                           {"D_min_MWpHz", "damping lower bound at the configured nadir"},
                           {"beta_thr", "price-ratio threshold for increasing A"}}}});
}

std::vector<coord::DampingEstimate> what_if(const Scenario& s, const std::vector<coord::SweepPoint>& pts)
{
    auto loop = make_loop(s);
    loop.warm_up();
    return coord::damping_sweep(loop.histogram(), pts, s.control, loop.coordination_steps());
}

void write_damping_sweep(const std::vector<coord::DampingEstimate>& rows, const std::string& dir)
{
    fs::create_directories(dir);
    csv::Writer w(join(dir, "damping_sweep.csv"), {"nadir_Hz", "rocof_Hzps", "eta", "delta_p_MW", "d_syn_MWpHz"});
    for (const auto& r : rows) w.row({r.nadir_assumed, r.rocof_assumed, r.eta_used, r.delta_p_der, r.d_syn});
    csv::write_manifest(join(dir, "manifest.json"),
                        {{"damping_sweep.csv",
                          {{"nadir_Hz", "assumed |frequency deviation| at the nadir"},
                           {"rocof_Hzps", "assumed peak shaped-deviation derivative"},
                           {"eta", "participation threshold"},
                           {"delta_p_MW", "available shed"},
                           {"d_syn_MWpHz", "synthetic damping"}}}});
}

void write_decomposition(const std::string& csv_path, const std::vector<int>& n_values, spectral::SelectMode mode,
                         const std::string& dir)
{
    if (n_values.empty()) throw ConfigError("decompose: no harmonic counts given");
    fs::create_directories(dir);
    const auto series = agc::read_csv(csv_path);
    csv::Writer r(join(dir, "rmse_vs_n.csv"), {"n", "rmse_MW", "rmse_rel"});
    spectral::HarmonicModel largest;
    for (int n : n_values) {
        const auto m = spectral::decompose_agc(series.time_s, series.power_mw, n, mode);
        r.row({static_cast<double>(n), m.rmse, m.rmse_rel});
        if (n == *std::max_element(n_values.begin(), n_values.end())) largest = m;
    }
    csv::Writer h(join(dir, "harmonics.csv"), {"h", "c", "phi_rad", "freq_Hz"});
    for (const auto& e : largest.entries) h.row({static_cast<double>(e.h), e.c, e.phi, e.h * largest.f0});
    csv::write_manifest(join(dir, "manifest.json"),
                        {{"rmse_vs_n.csv",
                          {{"n", "harmonics kept"},
                           {"rmse_MW", "reconstruction RMSE"},
                           {"rmse_rel", "RMSE relative to the demeaned signal RMS"}}},
                         {"harmonics.csv",
                          {{"h", "harmonic index"},
                           {"c", "coefficient normalized by the peak deviation"},
                           {"phi_rad", "phase"},
                           {"freq_Hz", "harmonic frequency"}}}});
}

} // namespace pktffr::exp
