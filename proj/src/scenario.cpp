#include "pktffr/scenario.hpp"

#include "pktffr/agc_io.hpp"
#include "pktffr/errors.hpp"
#include "pktffr/json_fields.hpp"
#include "pktffr/network_io.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#ifndef PKTFFR_DATA_DIR
#define PKTFFR_DATA_DIR "data"
#endif

namespace pktffr::scenario {

namespace fs = std::filesystem;

std::string data_dir()
{
    if (const char* env = std::getenv("PKTFFR_DATA"); env && *env) return env;
    return PKTFFR_DATA_DIR;
}

namespace {

std::string resolve_path(const std::string& p, const std::string& base)
{
    if (p.empty()) return p;
    fs::path path(p);
    if (path.is_absolute()) return p;
    if (fs::exists(fs::path(base) / path)) return (fs::path(base) / path).string();
    if (fs::exists(fs::path(data_dir()) / path)) return (fs::path(data_dir()) / path).string();
    return (fs::path(base) / path).string();
}

template <class T>
std::vector<T> list_of(Fields& f, const std::string& key)
{
    auto v = f.opt<std::vector<T>>(key, {});
    if (f.has(key) && v.empty()) throw ConfigError(f.context() + ": '" + key + "' must not be empty");
    return v;
}

fleet::FleetConfig parse_fleet(const nlohmann::json& j)
{
    Fields f(j, "fleet");
    fleet::FleetConfig c;
    c.n_tcl = f.opt<int>("n_tcl", c.n_tcl);
    c.n_ess = f.opt<int>("n_ess", c.n_ess);
    c.delta = f.opt<double>("delta", c.delta);
    c.mttr = f.opt<double>("mttr", c.mttr);
    c.dt_bin = f.opt<double>("dt_bin", c.dt_bin);
    c.p_cap_kw = f.opt<double>("p_cap_kw", c.p_cap_kw);
    c.delay_min = f.opt<double>("delay_min", c.delay_min);
    c.delay_max = f.opt<double>("delay_max", c.delay_max);
    c.resolution = f.opt<double>("resolution", c.resolution);
    c.initial_on_fraction = f.opt<double>("initial_on_fraction", c.initial_on_fraction);
    c.bus = f.opt<int>("bus", c.bus);
    if (f.has("bus_weights")) {
        for (const auto& e : f.sub("bus_weights")) {
            Fields w(e, "fleet.bus_weights[]");
            c.bus_weights.emplace_back(w.req<int>("bus"), w.req<double>("weight"));
            w.finish();
        }
    }
    if (f.has("thermal")) {
        Fields t(f.sub("thermal"), "fleet.thermal");
        auto& th = c.thermal;
        th.t_min = t.opt<double>("t_min", th.t_min);
        th.t_set = t.opt<double>("t_set", th.t_set);
        th.t_max = t.opt<double>("t_max", th.t_max);
        th.tau = t.opt<double>("tau", th.tau);
        th.ambient = t.opt<double>("ambient", th.ambient);
        th.kappa = t.opt<double>("kappa", th.kappa);
        t.finish();
    }
    if (f.has("storage")) {
        Fields t(f.sub("storage"), "fleet.storage");
        auto& st = c.storage;
        st.soc_min = t.opt<double>("soc_min", st.soc_min);
        st.soc_set = t.opt<double>("soc_set", st.soc_set);
        st.soc_max = t.opt<double>("soc_max", st.soc_max);
        st.capacity_kwh = t.opt<double>("capacity_kwh", st.capacity_kwh);
        st.drain_fraction = t.opt<double>("drain_fraction", st.drain_fraction);
        t.finish();
    }
    f.finish();
    return c;
}

control::ControlParams parse_control(const nlohmann::json& j)
{
    Fields f(j, "control");
    control::ControlParams p;
    p.f_db = f.opt<double>("f_db", p.f_db);
    p.f_max = f.opt<double>("f_max", p.f_max);
    p.eta_min = f.opt<double>("eta_min", p.eta_min);
    p.K_D = f.opt<double>("K_D", p.K_D);
    p.alpha_w = f.opt<double>("alpha_w", p.alpha_w);
    p.T_D = f.opt<double>("T_D", p.T_D);
    f.finish();
    return p;
}

AgcSpec parse_agc(const nlohmann::json& j, const std::string& base)
{
    Fields f(j, "agc");
    AgcSpec a;
    a.csv = resolve_path(f.opt<std::string>("csv", ""), base);
    if (f.has("harmonics")) {
        for (const auto& e : f.sub("harmonics")) {
            Fields h(e, "agc.harmonics[]");
            a.harmonics.push_back({h.req<int>("h"), h.req<double>("c"), h.opt<double>("phi", 0.0)});
            h.finish();
        }
    }
    a.period = f.opt<double>("period", a.period);
    a.n_harmonics = f.opt<int>("n_harmonics", a.n_harmonics);
    a.mode = spectral::select_mode_from_string(f.opt<std::string>("mode", "top_n"));
    a.amplitude_mw = f.opt<double>("amplitude_mw", a.amplitude_mw);
    a.amplitude_frac = f.opt<double>("amplitude_frac", a.amplitude_frac);
    f.finish();
    if (a.csv.empty() == a.harmonics.empty())
        throw ConfigError("agc: give exactly one of 'csv' or 'harmonics'");
    if (!(a.period > 0.0)) throw ConfigError("agc: period must be positive");
    if (a.n_harmonics < 1) throw ConfigError("agc: n_harmonics must be >= 1");
    return a;
}

} // namespace

grid::GridModel resolve_network(const std::string& ref, const std::string& base_dir)
{
    const fs::path preset = fs::path(data_dir()) / "networks" / (ref + ".json");
    if (ref.find('/') == std::string::npos && ref.find(".json") == std::string::npos && fs::exists(preset))
        return grid::load_network(preset.string());
    return grid::load_network(resolve_path(ref, base_dir));
}

void Scenario::validate() const
{
    grid::validate(network);
    fleet.validate();
    control.validate();
    if (!(duration > 0.0)) throw ConfigError("scenario: duration must be positive");
    if (!(warmup >= 0.0)) throw ConfigError("scenario: warmup must be >= 0");
    for (const auto& e : events) {
        if (!(e.time >= 0.0 && e.time <= duration))
            throw ConfigError("scenario: event at t=" + std::to_string(e.time) + " lies outside [0, duration]");
        (void)network.index_of(e.bus);
    }
    (void)network.index_of(fleet.bus);
    for (const auto& [b, w] : fleet.bus_weights) (void)network.index_of(b);
    if (measure_bus >= 0) (void)network.index_of(measure_bus);
    for (int b : disable_governors) (void)network.index_of(b);
    if (estimator.n_events < 1) throw ConfigError("estimator: n_events must be >= 1");
    if (!(estimator.size_min_mw <= estimator.size_max_mw)) throw ConfigError("estimator: size_min > size_max");
    if (!(estimator.time_min <= estimator.time_max)) throw ConfigError("estimator: time_min > time_max");
    if (trace_every < 1) throw ConfigError("scenario: trace_every must be >= 1");
    for (double r : bounds.rho)
        if (!(r > 0.0 && r < 0.5)) throw ConfigError("bounds: rho must lie in (0, 0.5)");
}

Scenario from_json(const nlohmann::json& j, const std::string& base_dir)
{
    Fields f(j, "scenario");
    Scenario s;
    s.base_dir = base_dir;
    s.name = f.opt<std::string>("name", "scenario");
    (void)f.opt<std::string>("description", "");
    const auto& net = f.sub("network");
    if (net.is_string()) {
        s.network_source = net.get<std::string>();
        s.network = resolve_network(s.network_source, base_dir);
    } else {
        s.network_source = "inline";
        s.network = grid::network_from_json(net);
    }
    if (f.has("fleet")) s.fleet = parse_fleet(f.sub("fleet"));
    if (f.has("control")) s.control = parse_control(f.sub("control"));
    if (f.has("events")) {
        for (const auto& e : f.sub("events")) {
            Fields ev(e, "events[]");
            s.events.push_back({ev.req<double>("time"), ev.req<int>("bus"), ev.req<double>("delta_p")});
            ev.finish();
        }
    }
    if (f.has("agc")) s.agc = parse_agc(f.sub("agc"), base_dir);
    if (f.has("p_nom_mw")) s.p_nom_mw = f.req<double>("p_nom_mw");
    s.disable_governors = f.opt<std::vector<int>>("disable_governors", {});
    if (f.has("sweeps")) {
        Fields w(f.sub("sweeps"), "sweeps");
        s.sweeps.k_d = list_of<double>(w, "K_D");
        s.sweeps.delay_ms = list_of<double>(w, "delay_ms");
        s.sweeps.resolution_mhz = list_of<double>(w, "resolution_mhz");
        s.sweeps.amplitude_frac = list_of<double>(w, "amplitude_frac");
        s.sweeps.rho = list_of<double>(w, "rho");
        s.sweeps.independent_seeds = w.opt<bool>("independent_seeds", false);
        w.finish();
    }
    if (f.has("estimator")) {
        Fields e(f.sub("estimator"), "estimator");
        auto& es = s.estimator;
        es.n_events = e.opt<int>("n_events", es.n_events);
        es.bus = e.opt<int>("bus", es.bus);
        es.size_min_mw = e.opt<double>("size_min_mw", es.size_min_mw);
        es.size_max_mw = e.opt<double>("size_max_mw", es.size_max_mw);
        es.time_min = e.opt<double>("time_min", es.time_min);
        es.time_max = e.opt<double>("time_max", es.time_max);
        es.window = e.opt<double>("window", es.window);
        e.finish();
    }
    if (f.has("bounds")) {
        Fields b(f.sub("bounds"), "bounds");
        auto& bs = s.bounds;
        bs.fleet_kind = spectral::fleet_kind_from_string(b.opt<std::string>("fleet_kind", "tcl"));
        if (b.has("rho")) bs.rho = list_of<double>(b, "rho");
        if (b.has("amplitude_frac")) bs.amplitude_frac = list_of<double>(b, "amplitude_frac");
        bs.nadir = b.opt<double>("nadir", bs.nadir);
        bs.r_max = b.opt<double>("r_max", bs.r_max);
        b.finish();
    }
    s.duration = f.opt<double>("duration", s.duration);
    s.warmup = f.opt<double>("warmup", s.warmup);
    s.event_hold = f.opt<double>("event_hold", s.event_hold);
    s.measure_bus = f.opt<int>("measure_bus", s.measure_bus);
    s.seed = f.opt<std::uint64_t>("seed", s.seed);
    s.outputs = f.opt<std::string>("outputs", s.outputs);
    s.trace_every = f.opt<int>("trace_every", s.trace_every);
    f.finish();
    s.fleet.seed = s.seed;
    s.validate();
    return s;
}

Scenario load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return from_json(j, fs::path(path).parent_path().string());
}

double p_nom_mw(const Scenario& s)
{
    return s.p_nom_mw ? *s.p_nom_mw : sim::nominal_power_mw(s.fleet);
}

std::optional<spectral::HarmonicModel> agc_model(const Scenario& s)
{
    if (!s.agc) return std::nullopt;
    const auto& a = *s.agc;
    spectral::HarmonicModel m;
    if (!a.csv.empty()) {
        const auto series = agc::read_csv(a.csv);
        m = spectral::decompose_agc(series.time_s, series.power_mw, a.n_harmonics, a.mode);
    } else {
        m.entries = a.harmonics;
        m.f0 = 1.0 / a.period;
    }
    m.p_nom = p_nom_mw(s);
    m.dt = s.fleet.dt_bin;
    m.n_p = s.fleet.n_p();
    m.A = a.amplitude_frac >= 0.0 ? a.amplitude_frac * m.p_nom : a.amplitude_mw;
    return m;
}

sim::Reference make_reference(const Scenario& s)
{
    sim::Reference r;
    r.p_nom_mw = p_nom_mw(s);
    if (auto m = agc_model(s)) {
        r.amplitude_mw = m->A;
        if (m->A != 0.0) {
            auto shape = *m;
            shape.A = 1.0;
            r.signal = [shape](double t) { return shape.eval(t); };
        }
    }
    return r;
}

grid::GridModel prepared_network(const Scenario& s)
{
    auto g = s.network;
    for (int b : s.disable_governors)
        for (auto& gen : g.generators)
            if (gen.bus == b) gen.governor_enabled = false;
    return g;
}

} // namespace pktffr::scenario
