#include "pktffr/agc_io.hpp"
#include "pktffr/errors.hpp"
#include "pktffr/experiments.hpp"
#include "pktffr/scenario.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <iostream>
#include <optional>

using namespace pktffr;

namespace {

struct Common {
    std::string scenario;
    std::string out;
    std::optional<std::uint64_t> seed;
    int threads = 1;
};

void add_common(CLI::App* app, Common& c)
{
    app->add_option("-s,--scenario", c.scenario, "scenario file")->required()->check(CLI::ExistingFile);
    app->add_option("-o,--out", c.out, "output directory (default: scenario outputs)");
    app->add_option("--seed", c.seed, "seed override");
    app->add_option("-j,--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

scenario::Scenario load(const Common& c)
{
    auto s = scenario::load(c.scenario);
    if (c.seed) {
        s.seed = *c.seed;
        s.fleet.seed = *c.seed;
    }
    if (!c.out.empty()) s.outputs = c.out;
    return s;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Packetized fast frequency response simulator"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "only log warnings");

    Common run_c, sweep_c, est_c, bounds_c;
    auto* run = app.add_subcommand("run", "closed-loop run of one scenario");
    add_common(run, run_c);

    auto* sweep = app.add_subcommand("sweep", "one run per configured parameter grid point");
    add_common(sweep, sweep_c);
    bool independent = false;
    sweep->add_flag("--independent-seeds", independent, "draw a fresh seed per sweep point");

    auto* est = app.add_subcommand("validate-estimator", "compare estimated and realized damping on random events");
    add_common(est, est_c);
    int n_events = -1;
    est->add_option("-n,--events", n_events, "number of random events");

    auto* bounds = app.add_subcommand("bounds", "damping lower bounds and what-if damping sweep");
    add_common(bounds, bounds_c);
    bool what_if = false;
    bounds->add_flag("--what-if", what_if, "also warm up the fleet and write a (nadir, RoCoF) damping sweep");

    auto* dec = app.add_subcommand("decompose", "harmonic decomposition of an AGC CSV");
    std::string agc_csv, dec_out = "out/decompose", mode = "top_n";
    std::vector<int> n_values{1, 2, 5, 10, 20, 50, 100, 200};
    dec->add_option("--agc", agc_csv, "CSV with columns time_s, power_MW")->required()->check(CLI::ExistingFile);
    dec->add_option("-o,--out", dec_out, "output directory");
    dec->add_option("-n,--harmonics", n_values, "harmonic counts");
    dec->add_option("--mode", mode, "top_n or first_n");

    auto* synth = app.add_subcommand("synth-agc", "write the synthetic regulation sample");
    std::string synth_out = "regd_synthetic_2h.csv";
    std::uint64_t synth_seed = 20240611;
    synth->add_option("-o,--out", synth_out, "output CSV");
    synth->add_option("--seed", synth_seed, "generator seed");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);

    try {
        if (run->parsed()) {
            const auto s = load(run_c);
            const auto out = exp::run(s, {true, s.trace_every});
            exp::write_run(out, s, s.outputs);
            const auto& m = out.metrics;
            std::cout << "nadir_Hz=" << m.nadir << " r_max_Hzps=" << m.r_max << " realized_damping_MWpHz="
                      << m.realized_damping << " estimated_damping_MWpHz=" << m.estimated_damping << '\n';
        } else if (sweep->parsed()) {
            auto s = load(sweep_c);
            if (independent) s.sweeps.independent_seeds = true;
            const auto rows = exp::sweep(s, sweep_c.threads);
            exp::write_sweep(rows, s.outputs);
            std::cout << rows.size() << " sweep rows written to " << s.outputs << '\n';
        } else if (est->parsed()) {
            const auto s = load(est_c);
            const auto rows = exp::validate_estimator(s, n_events);
            exp::write_estimator(rows, s.outputs);
            double worst = 0.0;
            for (const auto& r : rows) worst = std::max(worst, r.rel_error);
            std::cout << "max relative error " << worst << '\n';
        } else if (bounds->parsed()) {
            const auto s = load(bounds_c);
            exp::write_bounds(exp::bounds_table(s), s.outputs);
            if (what_if) {
                std::vector<coord::SweepPoint> pts;
                for (int i = 1; i <= 10; ++i)
                    for (int j = 0; j < 10; ++j)
                        pts.push_back({s.control.f_db + i * (s.control.f_max - s.control.f_db) / 10.0, j * 0.01});
                exp::write_damping_sweep(exp::what_if(s, pts), s.outputs);
            }
            std::cout << "bounds written to " << s.outputs << '\n';
        } else if (dec->parsed()) {
            exp::write_decomposition(agc_csv, n_values, spectral::select_mode_from_string(mode), dec_out);
            std::cout << "decomposition written to " << dec_out << '\n';
        } else if (synth->parsed()) {
            agc::write_csv(synth_out, agc::synthesize_regd(synth_seed));
        }
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
    return 0;
}
