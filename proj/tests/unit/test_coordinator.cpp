#include "pktffr/coordinator.hpp"
#include "pktffr/errors.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace pktffr;
using coord::TimerHistogram;
using fleet::Direction;
using fleet::Kind;

namespace {

fleet::Request req(int id, Direction dir, double p = 4.5, bool forced = false)
{
    return {id, dir, p, forced, 0.0};
}

} // namespace

TEST(Coordinator, StepHistogramInsertsAndShifts)
{
    TimerHistogram h(3, 1.0, 3.0);
    auto a = coord::step_histograms(h, 5.0, 0.0, 0.0);
    EXPECT_EQ(a.tcl_charge, (std::vector<double>{5, 0, 0}));
    h.tcl_charge = {2, 3, 4};
    auto b = coord::step_histograms(h, 1.0, 0.0, 0.0);
    EXPECT_EQ(b.tcl_charge, (std::vector<double>{1, 2, 3}));
    EXPECT_EQ(h.tcl_charge, (std::vector<double>{2, 3, 4}));
    EXPECT_THROW(coord::step_histograms(h, -1.0, 0.0, 0.0), DomainError);
}

TEST(Coordinator, AggregatePower)
{
    TimerHistogram h(2, 1.0, 2.0);
    EXPECT_EQ(coord::aggregate_power(h), 0.0);
    h.tcl_charge = {10, 20};
    h.ess_charge = {5, 5};
    h.ess_discharge = {3, 0};
    EXPECT_DOUBLE_EQ(coord::aggregate_power(h), 37.0);
}

TEST(Coordinator, ProjectedPowerDropsExpiringBin)
{
    TimerHistogram h(3, 1.0, 3.0);
    h.tcl_charge = {1, 2, 4};
    h.ess_discharge = {0, 0, 3};
    EXPECT_DOUBLE_EQ(coord::projected_power(h), 3.0);
}

TEST(Coordinator, AvailablePowerLimits)
{
    TimerHistogram h(180, 1.0, 180.0);
    std::fill(h.tcl_charge.begin(), h.tcl_charge.end(), 2.0);
    std::fill(h.ess_charge.begin(), h.ess_charge.end(), 1.0);
    EXPECT_EQ(coord::available_power(h, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(coord::available_power(h, 0.0), 360.0 + 2.0 * 180.0);
    EXPECT_DOUBLE_EQ(coord::available_power(h, 0.5), 0.5 * 360.0 + 2.0 * 0.5 * 180.0);
}

TEST(Coordinator, AvailablePowerMatchesDeviceOracle)
{
    std::mt19937_64 gen(17);
    std::uniform_int_distribution<int> age(0, 179), kind(0, 2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    TimerHistogram h(180, 1.0, 180.0);
    struct Dev {
        int age;
        int cls;
    };
    std::vector<Dev> devs;
    for (int i = 0; i < 5000; ++i) {
        const Dev d{age(gen), kind(gen)};
        devs.push_back(d);
        (d.cls == 0 ? h.tcl_charge : d.cls == 1 ? h.ess_charge : h.ess_discharge)[d.age] += 4.5;
    }
    for (int trial = 0; trial < 200; ++trial) {
        const double eta = u(gen);
        double shed = 0.0;
        for (const auto& d : devs) {
            if (d.age / 180.0 < eta) continue;
            if (d.cls == 0) shed += 4.5;
            if (d.cls == 1) shed += 9.0;
        }
        ASSERT_NEAR(coord::available_power(h, eta), shed, 1e-6) << eta;
    }
}

TEST(Coordinator, AvailablePowerMonotoneInEta)
{
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    TimerHistogram h(180, 1.0, 180.0);
    for (auto& x : h.tcl_charge) x = u(gen);
    for (auto& x : h.ess_charge) x = u(gen);
    double prev = coord::available_power(h, 0.0);
    for (double e = 0.01; e <= 1.0; e += 0.01) {
        const double a = coord::available_power(h, e);
        ASSERT_LE(a, prev + 1e-12);
        prev = a;
    }
}

TEST(Coordinator, AvailablePowerOverUsesDischarge)
{
    TimerHistogram h(4, 1.0, 4.0);
    h.ess_discharge = {1, 2, 3, 4};
    h.tcl_charge = {9, 9, 9, 9};
    EXPECT_DOUBLE_EQ(coord::available_power_over(h, 0.5), 2.0 * (3 + 4));
}

TEST(Coordinator, AcceptsMinimumToCoverDeficit)
{
    TimerHistogram h(3, 1.0, 3.0);
    std::vector<Kind> kinds(10, Kind::TCL);
    std::vector<fleet::Request> reqs;
    for (int i = 0; i < 6; ++i) reqs.push_back(req(i, Direction::Charge));
    const auto r = coord::accept_requests(reqs, 9.0, h, kinds);
    EXPECT_EQ(r.accepted.size(), 2u);
    EXPECT_DOUBLE_EQ(r.q_ch_tcl, 9.0);
    EXPECT_EQ(r.direction, 1);
}

TEST(Coordinator, ZeroDeficitAcceptsNothing)
{
    TimerHistogram h(3, 1.0, 3.0);
    h.tcl_charge = {4.5, 9.0, 0.0};
    std::vector<Kind> kinds(10, Kind::TCL);
    std::vector<fleet::Request> reqs{req(0, Direction::Charge), req(1, Direction::Charge)};
    const auto r = coord::accept_requests(reqs, coord::projected_power(h), h, kinds);
    EXPECT_TRUE(r.accepted.empty());
}

TEST(Coordinator, NeverMixesDirections)
{
    TimerHistogram h(3, 1.0, 3.0);
    std::vector<Kind> kinds(10, Kind::ESS);
    std::vector<fleet::Request> reqs;
    for (int i = 0; i < 5; ++i) reqs.push_back(req(i, i % 2 ? Direction::Discharge : Direction::Charge));
    const auto up = coord::accept_requests(reqs, 20.0, h, kinds);
    for (auto i : up.accepted) EXPECT_EQ(reqs[i].dir, Direction::Charge);
    EXPECT_EQ(up.q_dis_ess, 0.0);
    EXPECT_GT(up.q_ch_ess, 0.0);

    h.ess_charge = {0, 0, 0};
    h.tcl_charge = {20, 20, 0};
    const auto down = coord::accept_requests(reqs, 30.0, h, kinds);
    for (auto i : down.accepted) EXPECT_EQ(reqs[i].dir, Direction::Discharge);
    EXPECT_EQ(down.q_ch_ess, 0.0);
    EXPECT_EQ(down.direction, -1);
}

TEST(Coordinator, ForcedRequestsAlwaysAccepted)
{
    TimerHistogram h(3, 1.0, 3.0);
    std::vector<Kind> kinds(10, Kind::TCL);
    std::vector<fleet::Request> reqs{req(0, Direction::Charge, 4.5, true), req(1, Direction::Charge, 4.5, true),
                                     req(2, Direction::Charge)};
    const auto r = coord::accept_requests(reqs, 0.0, h, kinds);
    std::set<std::size_t> got(r.accepted.begin(), r.accepted.end());
    EXPECT_TRUE(got.count(0) && got.count(1));
    EXPECT_FALSE(got.count(2));
}

TEST(Coordinator, ShortfallReportedWhenRequestsRunOut)
{
    TimerHistogram h(3, 1.0, 3.0);
    std::vector<Kind> kinds(10, Kind::TCL);
    std::vector<fleet::Request> reqs{req(0, Direction::Charge)};
    const auto r = coord::accept_requests(reqs, 20.0, h, kinds);
    EXPECT_EQ(r.accepted.size(), 1u);
    EXPECT_NEAR(r.shortfall, 15.5, 1e-12);
}

TEST(Coordinator, AcceptanceIsMinimalOverRandomCases)
{
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Kind> kinds(40, Kind::TCL);
    for (int trial = 0; trial < 2000; ++trial) {
        TimerHistogram h(3, 1.0, 3.0);
        std::vector<fleet::Request> reqs;
        const int n = 1 + static_cast<int>(u(gen) * 30);
        for (int i = 0; i < n; ++i) reqs.push_back(req(i, Direction::Charge, 1.0 + 4.0 * u(gen)));
        const double ref = 40.0 * u(gen);
        const auto r = coord::accept_requests(reqs, ref, h, kinds);
        double sum = 0.0;
        double total = 0.0;
        for (const auto& q : reqs) total += q.p_rate;
        for (auto i : r.accepted) sum += reqs[i].p_rate;
        if (total >= ref) {
            ASSERT_GE(sum, ref - 1e-9);
            // no accepted packet is superfluous
            for (auto i : r.accepted) ASSERT_LT(sum - reqs[i].p_rate, ref + 1e-9);
        } else {
            ASSERT_EQ(r.accepted.size(), reqs.size());
        }
    }
}

TEST(Coordinator, EstimateDampingRatio)
{
    control::ControlParams p;
    p.K_D = 0.0;
    TimerHistogram h(180, 1.0, 180.0);
    h.tcl_charge[179] = 100000.0;
    const auto e = coord::estimate_damping(h, 0.136, 0.0, p);
    EXPECT_NEAR(e.delta_p_der, 100.0, 1e-9);
    EXPECT_NEAR(e.d_syn, 1000.0, 1e-6);
    EXPECT_NEAR(e.eta_used, 1.0 - 0.1 / 0.164, 1e-12);
}

TEST(Coordinator, EstimateDampingRejectsDeadbandNadir)
{
    control::ControlParams p;
    TimerHistogram h(180, 1.0, 180.0);
    EXPECT_THROW(coord::estimate_damping(h, 0.036, 0.1, p), DomainError);
    EXPECT_THROW(coord::estimate_damping(h, 0.01, 0.1, p), DomainError);
}

TEST(Coordinator, DampingSweepEvaluatesEveryPoint)
{
    control::ControlParams p;
    TimerHistogram h(180, 1.0, 180.0);
    std::fill(h.tcl_charge.begin(), h.tcl_charge.end(), 10.0);
    std::vector<coord::SweepPoint> pts{{0.05, 0.0}, {0.1, 0.0}, {0.1, 0.1}, {0.19, 0.2}};
    const auto out = coord::damping_sweep(h, pts, p, 42);
    ASSERT_EQ(out.size(), pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto single = coord::estimate_damping(h, pts[i].nadir, pts[i].rocof, p, 42);
        EXPECT_EQ(out[i].d_syn, single.d_syn);
        EXPECT_EQ(out[i].computed_at, 42);
    }
    EXPECT_GE(out[2].delta_p_der, out[1].delta_p_der);
}
