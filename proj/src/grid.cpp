#include "pktffr/grid.hpp"

#include "pktffr/errors.hpp"

#include <cmath>
#include <numbers>
#include <queue>
#include <sstream>

namespace pktffr::grid {

namespace {

struct Topology {
    std::vector<std::size_t> line_from, line_to, gen_bus;
};

Topology topology(const GridModel& m)
{
    Topology t;
    t.line_from.reserve(m.lines.size());
    t.line_to.reserve(m.lines.size());
    for (const auto& l : m.lines) {
        t.line_from.push_back(m.index_of(l.from));
        t.line_to.push_back(m.index_of(l.to));
    }
    t.gen_bus.reserve(m.generators.size());
    for (const auto& g : m.generators) t.gen_bus.push_back(m.index_of(g.bus));
    return t;
}

// State layout: [θ_0..θ_nb-1, ω_0..ω_nb-1, PG_0..PG_ng-1]
void derivative(const GridModel& m, const Topology& topo, std::span<const double> pl,
                std::span<const double> pder, const std::vector<double>& x,
                std::vector<double>& dx)
{
    const std::size_t nb = m.buses.size();
    const std::size_t ng = m.generators.size();
    const double* theta = x.data();
    const double* omega = x.data() + nb;
    const double* pg = x.data() + 2 * nb;

    for (std::size_t i = 0; i < nb; ++i) {
        dx[i] = 2.0 * std::numbers::pi * omega[i];
        dx[nb + i] = -pl[i] - pder[i] - m.buses[i].damping * omega[i];
    }
    for (std::size_t l = 0; l < m.lines.size(); ++l) {
        const std::size_t a = topo.line_from[l];
        const std::size_t b = topo.line_to[l];
        const double flow = m.lines[l].susceptance * (theta[a] - theta[b]);
        dx[nb + a] -= flow;
        dx[nb + b] += flow;
    }
    for (std::size_t g = 0; g < ng; ++g) {
        const auto& gen = m.generators[g];
        const std::size_t b = topo.gen_bus[g];
        dx[nb + b] += pg[g];
        double drive = -pg[g];
        if (gen.governor_enabled)
            drive -= governor_input(omega[b], gen.governor_deadband) / gen.droop;
        dx[2 * nb + g] = drive / gen.turbine_tau;
    }
    for (std::size_t i = 0; i < nb; ++i) dx[nb + i] /= m.buses[i].inertia;
}

} // namespace

std::size_t GridModel::index_of(int id) const
{
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return i;
    throw ConfigError("unknown bus id " + std::to_string(id));
}

void validate(const GridModel& m)
{
    if (!(m.dt > 0.0) || !std::isfinite(m.dt)) throw ConfigError("grid dt must be positive");
    if (!(m.nominal_hz > 0.0)) throw ConfigError("nominal frequency must be positive");
    if (m.buses.empty()) throw ConfigError("network has no buses");
    for (std::size_t i = 0; i < m.buses.size(); ++i) {
        const auto& b = m.buses[i];
        if (!(b.inertia > 0.0)) throw ConfigError("bus " + std::to_string(b.id) + ": inertia must be > 0");
        if (!(b.damping >= 0.0)) throw ConfigError("bus " + std::to_string(b.id) + ": damping must be >= 0");
        for (std::size_t j = 0; j < i; ++j)
            if (m.buses[j].id == b.id) throw ConfigError("duplicate bus id " + std::to_string(b.id));
    }
    for (const auto& l : m.lines) {
        if (!(l.susceptance > 0.0))
            throw ConfigError("line " + std::to_string(l.from) + "-" + std::to_string(l.to) +
                              ": susceptance must be > 0");
        if (l.from == l.to) throw ConfigError("line connects bus " + std::to_string(l.from) + " to itself");
        (void)m.index_of(l.from);
        (void)m.index_of(l.to);
    }
    for (const auto& g : m.generators) {
        (void)m.index_of(g.bus);
        if (!(g.turbine_tau > 0.0)) throw ConfigError("generator at bus " + std::to_string(g.bus) + ": turbine_tau must be > 0");
        if (!(g.droop > 0.0)) throw ConfigError("generator at bus " + std::to_string(g.bus) + ": droop must be > 0");
        if (!(g.governor_deadband >= 0.0)) throw ConfigError("generator governor_deadband must be >= 0");
    }

    // connectivity by BFS
    const std::size_t nb = m.buses.size();
    std::vector<std::vector<std::size_t>> adj(nb);
    for (const auto& l : m.lines) {
        auto a = m.index_of(l.from), b = m.index_of(l.to);
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<bool> seen(nb, false);
    std::queue<std::size_t> q;
    q.push(0);
    seen[0] = true;
    std::size_t count = 1;
    while (!q.empty()) {
        auto u = q.front();
        q.pop();
        for (auto v : adj[u])
            if (!seen[v]) {
                seen[v] = true;
                ++count;
                q.push(v);
            }
    }
    if (count != nb) {
        for (std::size_t i = 0; i < nb; ++i)
            if (!seen[i])
                throw ConfigError("network is not connected: bus " + std::to_string(m.buses[i].id) +
                                  " is unreachable");
    }
}

double governor_input(double freq_dev, double deadband)
{
    const double mag = std::abs(freq_dev) - deadband;
    if (mag <= 0.0) return 0.0;
    return freq_dev > 0.0 ? mag : -mag;
}

void step_grid_inplace(GridModel& m, std::span<const double> pl, std::span<const double> pder)
{
    const std::size_t nb = m.buses.size();
    const std::size_t ng = m.generators.size();
    if (pl.size() != nb || pder.size() != nb)
        throw DomainError("disturbance and DER vectors must have one entry per bus");

    const Topology topo = topology(m);
    const std::size_t n = 2 * nb + ng;
    std::vector<double> x(n), k1(n), k2(n), k3(n), k4(n), tmp(n);
    for (std::size_t i = 0; i < nb; ++i) {
        x[i] = m.buses[i].angle_dev;
        x[nb + i] = m.buses[i].freq_dev;
    }
    for (std::size_t g = 0; g < ng; ++g) x[2 * nb + g] = m.generators[g].power_dev;

    const double h = m.dt;
    derivative(m, topo, pl, pder, x, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    derivative(m, topo, pl, pder, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    derivative(m, topo, pl, pder, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
    derivative(m, topo, pl, pder, tmp, k4);
    for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

    const long next_step = m.step + 1;
    for (std::size_t i = 0; i < nb; ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(x[nb + i])) {
            std::ostringstream os;
            os << "integration diverged at bus " << m.buses[i].id << ", step " << next_step;
            throw IntegrationError(os.str(), m.buses[i].id, next_step);
        }
    }
    for (std::size_t g = 0; g < ng; ++g) {
        if (!std::isfinite(x[2 * nb + g])) {
            std::ostringstream os;
            os << "integration diverged at generator bus " << m.generators[g].bus << ", step " << next_step;
            throw IntegrationError(os.str(), m.generators[g].bus, next_step);
        }
    }

    for (std::size_t i = 0; i < nb; ++i) {
        m.buses[i].angle_dev = x[i];
        m.buses[i].freq_dev = x[nb + i];
        m.buses[i].load_dev = pl[i];
        m.buses[i].der_power_dev = pder[i];
    }
    for (std::size_t g = 0; g < ng; ++g) m.generators[g].power_dev = x[2 * nb + g];
    m.step = next_step;
}

GridModel step_grid(const GridModel& model, std::span<const double> pl, std::span<const double> pder)
{
    GridModel next = model;
    step_grid_inplace(next, pl, pder);
    return next;
}

double measure_frequency(const GridModel& model, int bus_id)
{
    return model.nominal_hz + model.buses[model.index_of(bus_id)].freq_dev;
}

double inertia_from_h(double h_seconds, double s_base_mva, double nominal_hz)
{
    return 2.0 * h_seconds * s_base_mva / nominal_hz;
}

double droop_from_percent(double percent, double rating_mw, double nominal_hz)
{
    return percent / 100.0 * nominal_hz / rating_mw;
}

double damping_from_pu(double d_pu, double s_base_mva, double nominal_hz)
{
    return d_pu * s_base_mva / nominal_hz;
}

} // namespace pktffr::grid
