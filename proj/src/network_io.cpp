#include "pktffr/network_io.hpp"

#include "pktffr/errors.hpp"
#include "pktffr/json_fields.hpp"

#include <fstream>

namespace pktffr::grid {

GridModel network_from_json(const nlohmann::json& j)
{
    Fields top(j, "network");
    GridModel m;
    (void)top.opt<std::string>("description", "");
    m.dt = top.opt<double>("dt", 0.01);
    m.nominal_hz = top.opt<double>("nominal_hz", 60.0);

    const auto& buses = top.sub("buses");
    if (!buses.is_array()) throw ConfigError("network: 'buses' must be a list");
    for (std::size_t i = 0; i < buses.size(); ++i) {
        Fields f(buses[i], "network.buses[" + std::to_string(i) + "]");
        Bus b;
        b.id = f.req<int>("id");
        b.inertia = f.req<double>("inertia");
        b.damping = f.opt<double>("damping", 0.0);
        b.angle_dev = f.opt<double>("angle_dev", 0.0);
        b.freq_dev = f.opt<double>("freq_dev", 0.0);
        b.load_dev = f.opt<double>("load_dev", 0.0);
        b.der_power_dev = f.opt<double>("der_power_dev", 0.0);
        f.finish();
        m.buses.push_back(b);
    }

    if (top.has("lines")) {
        const auto& lines = top.sub("lines");
        if (!lines.is_array()) throw ConfigError("network: 'lines' must be a list");
        for (std::size_t i = 0; i < lines.size(); ++i) {
            Fields f(lines[i], "network.lines[" + std::to_string(i) + "]");
            Line l;
            l.from = f.req<int>("from");
            l.to = f.req<int>("to");
            l.susceptance = f.req<double>("susceptance");
            f.finish();
            m.lines.push_back(l);
        }
    }

    if (top.has("generators")) {
        const auto& gens = top.sub("generators");
        if (!gens.is_array()) throw ConfigError("network: 'generators' must be a list");
        for (std::size_t i = 0; i < gens.size(); ++i) {
            Fields f(gens[i], "network.generators[" + std::to_string(i) + "]");
            Generator g;
            g.bus = f.req<int>("bus");
            g.rating = f.req<double>("rating");
            g.droop = f.req<double>("droop");
            g.turbine_tau = f.req<double>("turbine_tau");
            g.power_dev = f.opt<double>("power_dev", 0.0);
            g.governor_deadband = f.opt<double>("governor_deadband", 0.036);
            g.governor_enabled = f.opt<bool>("governor_enabled", true);
            f.finish();
            m.generators.push_back(g);
        }
    }
    top.finish();
    validate(m);
    return m;
}

GridModel load_network(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open network file " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return network_from_json(j);
}

nlohmann::json network_to_json(const GridModel& m)
{
    nlohmann::json j;
    j["dt"] = m.dt;
    j["nominal_hz"] = m.nominal_hz;
    j["buses"] = nlohmann::json::array();
    for (const auto& b : m.buses)
        j["buses"].push_back({{"id", b.id}, {"inertia", b.inertia}, {"damping", b.damping}});
    j["lines"] = nlohmann::json::array();
    for (const auto& l : m.lines)
        j["lines"].push_back({{"from", l.from}, {"to", l.to}, {"susceptance", l.susceptance}});
    j["generators"] = nlohmann::json::array();
    for (const auto& g : m.generators)
        j["generators"].push_back({{"bus", g.bus},
                                   {"rating", g.rating},
                                   {"droop", g.droop},
                                   {"turbine_tau", g.turbine_tau},
                                   {"governor_deadband", g.governor_deadband},
                                   {"governor_enabled", g.governor_enabled}});
    return j;
}

} // namespace pktffr::grid
