#include "pktffr/errors.hpp"
#include "pktffr/fleet.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace pktffr;
using fleet::Device;
using fleet::Direction;
using fleet::Kind;

namespace {

Device charging_tcl(double timer)
{
    Device d;
    d.kind = Kind::TCL;
    d.state = 1;
    d.timer = timer;
    d.energy = 52.0;
    return d;
}

fleet::FleetConfig idle_config(int n_tcl, int n_ess)
{
    fleet::FleetConfig c;
    c.n_tcl = n_tcl;
    c.n_ess = n_ess;
    c.initial_on_fraction = 0.0;
    c.seed = 99;
    return c;
}

} // namespace

TEST(Fleet, Quantize)
{
    EXPECT_NEAR(fleet::quantize(59.9637, 0.001), 59.964, 1e-12);
    EXPECT_NEAR(fleet::quantize(59.96, 0.1), 60.0, 1e-12);
    EXPECT_EQ(fleet::quantize(59.96371, 0.0), 59.96371);
}

TEST(Fleet, SenseFrequencyAppliesDelayAndResolution)
{
    std::vector<double> hist(200);
    for (std::size_t k = 0; k < hist.size(); ++k) hist[k] = 60.0 - 0.0001 * static_cast<double>(k);
    Device d;
    d.actuation_delay = 0.6;
    EXPECT_DOUBLE_EQ(fleet::sense_frequency(d, hist, 150, 0.01), hist[90]);
    EXPECT_DOUBLE_EQ(fleet::sense_frequency(d, hist, 30, 0.01), hist[0]);
    d.meas_resolution = 0.001;
    EXPECT_NEAR(fleet::sense_frequency(d, hist, 150, 0.01), 59.991, 1e-12);
    EXPECT_THROW(fleet::sense_frequency(d, std::vector<double>{}, 0, 0.01), DomainError);
}

TEST(Fleet, AcceptedChargeHoldsForNpSteps)
{
    control::ControlParams p;
    fleet::StepContext ctx;
    Device d;
    d.kind = Kind::TCL;
    ctx.advance_timer = false;
    d = fleet::step_device(d, Direction::Charge, 60.0, 0.0, p, ctx);
    ctx.advance_timer = true;
    int on = 0;
    for (int k = 0; k < 180; ++k) {
        EXPECT_EQ(d.state, 1) << k;
        on += d.state;
        d = fleet::step_device(d, std::nullopt, 60.0, 0.0, p, ctx);
    }
    EXPECT_EQ(on, 180);
    EXPECT_EQ(d.state, 0);
}

TEST(Fleet, DeadbandPreventsParticipation)
{
    control::ControlParams p;
    fleet::StepContext ctx;
    ctx.advance_timer = false;
    const auto d = fleet::step_device(charging_tcl(179.0), std::nullopt, 60.0 - 0.020, 5.0, p, ctx);
    EXPECT_EQ(d.state, 1);
    EXPECT_FALSE(d.participated);
}

TEST(Fleet, ThresholdRuleExamples)
{
    control::ControlParams p;
    p.K_D = 0.0;
    fleet::StepContext ctx;
    ctx.advance_timer = false;
    const double f = 60.0 - 0.118;  // η = 0.5
    const auto late = fleet::step_device(charging_tcl(0.9 * 180.0), std::nullopt, f, 0.0, p, ctx);
    EXPECT_EQ(late.state, 0);
    EXPECT_TRUE(late.participated);
    const auto early = fleet::step_device(charging_tcl(0.3 * 180.0), std::nullopt, f, 0.0, p, ctx);
    EXPECT_EQ(early.state, 1);
    EXPECT_FALSE(early.participated);
}

TEST(Fleet, ChargingStorageSwitchesToDischarge)
{
    control::ControlParams p;
    p.K_D = 0.0;
    fleet::StepContext ctx;
    ctx.advance_timer = false;
    Device d = charging_tcl(150.0);
    d.kind = Kind::ESS;
    d.energy = 0.5;
    const auto out = fleet::step_device(d, std::nullopt, 60.0 - 0.118, 0.0, p, ctx);
    EXPECT_EQ(out.state, -1);
    EXPECT_EQ(out.timer, -150.0);
}

TEST(Fleet, OverFrequencyDischargingStorageSwitchesToCharge)
{
    control::ControlParams p;
    p.K_D = 0.0;
    fleet::StepContext ctx;
    ctx.advance_timer = false;
    Device d;
    d.kind = Kind::ESS;
    d.state = -1;
    d.timer = -150.0;
    const auto out = fleet::step_device(d, std::nullopt, 60.0 + 0.118, 0.0, p, ctx);
    EXPECT_EQ(out.state, 1);
    EXPECT_EQ(out.timer, 150.0);
    // TCLs never respond to over-frequency
    const auto tcl = fleet::step_device(charging_tcl(170.0), std::nullopt, 60.0 + 0.19, 0.0, p, ctx);
    EXPECT_EQ(tcl.state, 1);
}

TEST(Fleet, DeviceRuleMatchesBruteForceOracle)
{
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    control::ControlParams p;
    p.eta_min = 0.1;
    fleet::StepContext ctx;
    ctx.advance_timer = false;
    for (int i = 0; i < 50000; ++i) {
        const double timer = std::floor(u(gen) * 180.0);
        const double df = -0.25 * u(gen);
        const double r = 0.2 * u(gen);
        const auto out = fleet::step_device(charging_tcl(timer), std::nullopt, 60.0 + df, r, p, ctx);
        double threshold = 1.0;
        if (std::abs(df) > p.f_max)
            threshold = p.eta_min;
        else if (std::abs(df) >= p.f_db)
            threshold = std::clamp(1.0 - ((std::abs(df) - p.f_db) / (p.f_max - p.f_db) + p.K_D * r), p.eta_min, 1.0);
        const bool expect_shed = std::abs(df) >= p.f_db && timer / 180.0 >= threshold;
        ASSERT_EQ(out.state == 0, expect_shed) << "timer " << timer << " df " << df << " r " << r;
    }
}

TEST(Fleet, TimerStaysInsideEpoch)
{
    control::ControlParams p;
    fleet::StepContext ctx;
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Device d;
    d.kind = Kind::ESS;
    for (int k = 0; k < 20000; ++k) {
        std::optional<Direction> acc;
        if (u(gen) < 0.05) acc = u(gen) < 0.5 ? Direction::Charge : Direction::Discharge;
        if (u(gen) < 0.01) d.participated = false;
        d = fleet::step_device(d, acc, 60.0 + 0.3 * (u(gen) - 0.5), 0.0, p, ctx);
        ASSERT_LE(std::abs(d.timer), ctx.delta);
        if (d.state == 0) ASSERT_EQ(d.timer, 0.0);
        if (d.state == 1) ASSERT_GE(d.timer, 0.0);
        if (d.state == -1) ASSERT_LE(d.timer, 0.0);
    }
}

TEST(Fleet, TimerFractionAndThresholdAgree)
{
    for (double eta : {0.0, 0.1, 0.5, 0.5000001, 0.99, 1.0}) {
        const int a = fleet::threshold_age(eta, 180, 1.0, 180.0);
        for (int age = 0; age < 180; ++age)
            ASSERT_EQ(age >= a, fleet::timer_fraction(age, 1.0, 180.0) >= eta) << eta << " " << age;
    }
    EXPECT_EQ(fleet::threshold_age(1.0, 180, 1.0, 180.0), 180);
    EXPECT_EQ(fleet::threshold_age(0.5, 180, 1.0, 180.0), 90);
}

TEST(Fleet, RequestRateAtSetpointMonteCarlo)
{
    auto cfg = idle_config(10000, 0);
    fleet::Fleet f(cfg);
    std::fill(f.energy.begin(), f.energy.end(), cfg.thermal.t_set);
    std::size_t count = 0;
    for (std::uint64_t step = 0; step < 100; ++step) count += fleet::generate_requests(f, step).size();
    const double rate = static_cast<double>(count) / 1e6;
    EXPECT_NEAR(rate, 1.0 / 180.0, 0.03 / 180.0);
}

TEST(Fleet, NoRequestsAtUpperBand)
{
    auto cfg = idle_config(2000, 0);
    fleet::Fleet f(cfg);
    std::fill(f.energy.begin(), f.energy.end(), cfg.thermal.t_max);
    for (std::uint64_t step = 0; step < 50; ++step) EXPECT_TRUE(fleet::generate_requests(f, step).empty());
    EXPECT_EQ(fleet::request_rate(Kind::TCL, Direction::Charge, cfg.thermal.t_max, cfg), 0.0);
    EXPECT_EQ(fleet::request_rate(Kind::TCL, Direction::Discharge, cfg.thermal.t_set, cfg), 0.0);
}

TEST(Fleet, ForcedRequestBelowLowerBand)
{
    auto cfg = idle_config(500, 0);
    fleet::Fleet f(cfg);
    std::fill(f.energy.begin(), f.energy.end(), cfg.thermal.t_min - 0.01);
    const auto req = fleet::generate_requests(f, 7);
    ASSERT_EQ(req.size(), 500u);
    for (const auto& r : req) {
        EXPECT_TRUE(r.forced);
        EXPECT_EQ(r.dir, Direction::Charge);
    }
    EXPECT_TRUE(std::isinf(fleet::request_rate(Kind::TCL, Direction::Charge, cfg.thermal.t_min - 0.01, cfg)));
}

TEST(Fleet, StorageRequestRates)
{
    auto cfg = idle_config(0, 1);
    const auto& st = cfg.storage;
    EXPECT_NEAR(fleet::request_rate(Kind::ESS, Direction::Charge, st.soc_set, cfg), 1.0 / 180.0, 1e-15);
    EXPECT_NEAR(fleet::request_rate(Kind::ESS, Direction::Discharge, st.soc_set, cfg), 1.0 / 180.0, 1e-15);
    EXPECT_EQ(fleet::request_rate(Kind::ESS, Direction::Charge, st.soc_max, cfg), 0.0);
    EXPECT_EQ(fleet::request_rate(Kind::ESS, Direction::Discharge, st.soc_min, cfg), 0.0);
    EXPECT_TRUE(std::isinf(fleet::request_rate(Kind::ESS, Direction::Discharge, st.soc_max + 0.01, cfg)));
}

TEST(Fleet, BusyDevicesDoNotRequest)
{
    auto cfg = idle_config(1000, 0);
    fleet::Fleet f(cfg);
    std::fill(f.energy.begin(), f.energy.end(), cfg.thermal.t_min - 1.0);
    std::fill(f.state.begin(), f.state.end(), 1);
    EXPECT_TRUE(fleet::generate_requests(f, 0).empty());
}

TEST(Fleet, PowerSums)
{
    auto cfg = idle_config(0, 14);
    fleet::Fleet f(cfg);
    EXPECT_EQ(fleet::fleet_power(f), 0.0);
    for (int i = 0; i < 10; ++i) f.state[static_cast<std::size_t>(i)] = 1;
    for (int i = 10; i < 14; ++i) f.state[static_cast<std::size_t>(i)] = -1;
    EXPECT_NEAR(f.power_kw(), 27.0, 1e-9);
    EXPECT_NEAR(fleet::fleet_power(f), 0.027, 1e-12);
}

TEST(Fleet, InitialOnCountIsExact)
{
    for (double frac : {0.0, 0.13, 0.2, 0.5, 1.0}) {
        auto cfg = idle_config(3000, 1001);
        cfg.initial_on_fraction = frac;
        fleet::Fleet f(cfg);
        const long on = std::count(f.state.begin(), f.state.end(), 1);
        EXPECT_EQ(on, std::lround(frac * 4001.0)) << frac;
        for (std::size_t i = 0; i < f.size(); ++i) {
            ASSERT_GE(f.age[i], 0);
            ASSERT_LT(f.age[i], f.n_p());
        }
    }
}

TEST(Fleet, DeterministicForSeed)
{
    auto cfg = idle_config(5000, 2000);
    cfg.initial_on_fraction = 0.3;
    cfg.delay_max = 0.6;
    fleet::Fleet a(cfg), b(cfg);
    EXPECT_EQ(a.energy, b.energy);
    EXPECT_EQ(a.state, b.state);
    EXPECT_EQ(a.delay_steps, b.delay_steps);
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto ra = fleet::generate_requests(a, s);
        const auto rb = fleet::generate_requests(b, s);
        ASSERT_EQ(ra.size(), rb.size());
        for (std::size_t i = 0; i < ra.size(); ++i) {
            ASSERT_EQ(ra[i].id, rb[i].id);
            ASSERT_EQ(ra[i].arrival, rb[i].arrival);
        }
        a.update_energy(1.0);
        b.update_energy(1.0);
    }
    EXPECT_EQ(a.energy, b.energy);
    cfg.seed = 100;
    fleet::Fleet c(cfg);
    EXPECT_NE(a.energy, c.energy);
}

TEST(Fleet, ThermalDriftFollowsExponential)
{
    auto cfg = idle_config(2, 0);
    fleet::Fleet f(cfg);
    f.energy[0] = 52.0;
    f.energy[1] = 52.0;
    f.state[1] = 1;
    for (int k = 0; k < 600; ++k) f.update_energy(1.0);
    const auto& th = cfg.thermal;
    const double a = std::exp(-600.0 / th.tau);
    EXPECT_NEAR(f.energy[0], th.ambient + (52.0 - th.ambient) * a, 1e-9);
    const double hot = th.ambient + th.kappa * cfg.p_cap_kw;
    EXPECT_NEAR(f.energy[1], hot + (52.0 - hot) * a, 1e-9);
}

TEST(Fleet, ConfigValidation)
{
    auto cfg = idle_config(10, 0);
    EXPECT_NO_THROW(cfg.validate());
    auto bad = cfg;
    bad.delta = 30.0;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = cfg;
    bad.n_tcl = -1;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = cfg;
    bad.thermal.t_min = 56.0;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = cfg;
    bad.delay_min = 0.5;
    bad.delay_max = 0.1;
    EXPECT_THROW(bad.validate(), ConfigError);
    EXPECT_EQ(cfg.n_p(), 180);
}
