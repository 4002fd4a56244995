#include "pktffr/errors.hpp"
#include "pktffr/experiments.hpp"
#include "pktffr/scenario.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pktffr;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small()
{
    return json{{"name", "small"},
                {"network", "two_area"},
                {"fleet", {{"n_tcl", 3000}, {"n_ess", 500}, {"bus", 2}}},
                {"control", {{"K_D", 2}}},
                {"events", json::array({{{"time", 2}, {"bus", 1}, {"delta_p", 60}}})},
                {"duration", 12},
                {"warmup", 200},
                {"seed", 5}};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path temp_dir(const std::string& name)
{
    auto d = fs::temp_directory_path() / ("pktffr_test_" + name);
    fs::remove_all(d);
    return d;
}

} // namespace

TEST(Scenario, BundledScenariosLoad)
{
    const fs::path dir = fs::path(PKTFFR_DATA_DIR) / "scenarios";
    int n = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() != ".json") continue;
        EXPECT_NO_THROW(scenario::load(e.path().string())) << e.path();
        ++n;
    }
    EXPECT_GE(n, 8);
}

TEST(Scenario, PresetsResolve)
{
    for (const char* name : {"ieee39", "two_area", "one_bus"}) {
        const auto m = scenario::resolve_network(name, ".");
        EXPECT_NO_THROW(grid::validate(m)) << name;
    }
    EXPECT_EQ(scenario::resolve_network("ieee39", ".").buses.size(), 39u);
    EXPECT_THROW(scenario::resolve_network("no_such_network", "."), Error);
}

TEST(Scenario, UnknownKeysRejected)
{
    auto j = small();
    j["fleet"]["n_tlc"] = 5;
    EXPECT_THROW(scenario::from_json(j), ConfigError);
    j = small();
    j["warm_up"] = 10;
    EXPECT_THROW(scenario::from_json(j), ConfigError);
    j = small();
    j["control"]["kd"] = 1;
    EXPECT_THROW(scenario::from_json(j), ConfigError);
}

TEST(Scenario, EventOutsideDurationRejected)
{
    auto j = small();
    j["events"][0]["time"] = 30;
    EXPECT_THROW(scenario::from_json(j), ConfigError);
    j = small();
    j["events"][0]["bus"] = 9;
    EXPECT_THROW(scenario::from_json(j), ConfigError);
}

TEST(Scenario, InvalidParametersRejected)
{
    auto j = small();
    j["control"]["f_db"] = 0.3;
    EXPECT_THROW(scenario::from_json(j), ConfigError);
    j = small();
    j["fleet"]["delta"] = 20;
    EXPECT_THROW(scenario::from_json(j), ConfigError);
    j = small();
    j["duration"] = 0;
    EXPECT_THROW(scenario::from_json(j), ConfigError);
}

TEST(Scenario, EmptySweepGridRejected)
{
    auto j = small();
    j["sweeps"] = {{"K_D", json::array()}};
    EXPECT_THROW(scenario::from_json(j), ConfigError);
    const auto s = scenario::from_json(small());
    EXPECT_THROW(exp::sweep(s), ConfigError);
}

TEST(Scenario, NominalPowerDefaultsToFleetDuty)
{
    auto s = scenario::from_json(small());
    EXPECT_DOUBLE_EQ(scenario::p_nom_mw(s), sim::nominal_power_mw(s.fleet));
    auto j = small();
    j["p_nom_mw"] = 2.5;
    EXPECT_DOUBLE_EQ(scenario::p_nom_mw(scenario::from_json(j)), 2.5);
}

TEST(Scenario, AgcAmplitudeFromFraction)
{
    auto j = small();
    j["p_nom_mw"] = 4.0;
    j["agc"] = {{"csv", "agc/regd_synthetic_2h.csv"}, {"n_harmonics", 20}, {"amplitude_frac", 0.1}};
    const auto s = scenario::from_json(j);
    const auto m = scenario::agc_model(s);
    ASSERT_TRUE(m.has_value());
    EXPECT_DOUBLE_EQ(m->A, 0.4);
    EXPECT_EQ(m->entries.size(), 20u);
    const auto ref = scenario::make_reference(s);
    EXPECT_DOUBLE_EQ(ref.p_nom_mw, 4.0);
}

TEST(Scenario, InlineHarmonics)
{
    auto j = small();
    j["agc"] = {{"harmonics", json::array({{{"h", 1}, {"c", 1.0}, {"phi", 0.0}}})}, {"amplitude_mw", 0.2}};
    const auto s = scenario::from_json(j);
    const auto m = scenario::agc_model(s);
    ASSERT_TRUE(m.has_value());
    EXPECT_NEAR(m->eval(0.0), 0.2, 1e-12);
}

TEST(Scenario, DisabledGovernors)
{
    auto j = small();
    j["disable_governors"] = {1};
    const auto s = scenario::from_json(j);
    const auto g = scenario::prepared_network(s);
    for (const auto& gen : g.generators) EXPECT_EQ(gen.governor_enabled, gen.bus != 1);
}

TEST(Scenario, ReproducibleMetricFiles)
{
    const auto s = scenario::from_json(small());
    const auto a = temp_dir("repro_a"), b = temp_dir("repro_b");
    exp::write_run(exp::run(s, {true, 10}), s, a.string());
    exp::write_run(exp::run(s, {true, 10}), s, b.string());
    for (const char* f : {"metrics.csv", "frequency.csv", "der.csv", "histogram_at_detection.csv"}) {
        ASSERT_TRUE(fs::exists(a / f)) << f;
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Scenario, EmptyFleetReproducesGridOnlyTrajectory)
{
    auto j = small();
    j["fleet"]["n_tcl"] = 0;
    j["fleet"]["n_ess"] = 0;
    const auto s = scenario::from_json(j);
    const auto out = exp::run(s, {true, 1});

    auto g = scenario::prepared_network(s);
    const std::size_t ev = g.index_of(1);
    std::vector<double> pl(g.buses.size(), 0.0), pd(g.buses.size(), 0.0);
    ASSERT_EQ(out.trace.size(), 1201u);
    for (std::size_t k = 0; k < out.trace.size(); ++k) {
        for (std::size_t b = 0; b < g.buses.size(); ++b)
            ASSERT_EQ(out.trace[k].freq_hz[b], g.nominal_hz + g.buses[b].freq_dev) << k;
        pl[ev] = static_cast<double>(k) * g.dt >= 2.0 - 1e-9 ? 60.0 : 0.0;
        grid::step_grid_inplace(g, pl, pd);
    }
    EXPECT_EQ(out.metrics.participants, 0);
    EXPECT_GT(out.metrics.nadir, 0.0);
}

TEST(Scenario, RunWritesAllOutputs)
{
    auto s = scenario::from_json(small());
    const auto d = temp_dir("outputs");
    exp::write_run(exp::run(s, {true, 10}), s, d.string());
    for (const char* f : {"frequency.csv", "der.csv", "histogram_at_detection.csv", "histogram_final.csv",
                          "tracking.csv", "metrics.csv", "manifest.json"})
        EXPECT_TRUE(fs::exists(d / f)) << f;
    std::ifstream in(d / "frequency.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header.rfind("t_s,", 0), 0u);
    fs::remove_all(d);
}
