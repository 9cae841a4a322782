#include <doctest.h>

#include <algorithm>

#include "fixture.hpp"
#include "samod/model.hpp"
#include "tiny_cases.hpp"

using namespace samod;

namespace {

int count_kind(const MilpModel& m, VarKind kind)
{
    return static_cast<int>(std::count_if(m.variables().begin(), m.variables().end(),
                                          [&](const VarRef& v) { return v.kind == kind; }));
}

// Variable count from the masks alone.
int expected_variables(const DagInstance& inst, int K)
{
    const int n = inst.node_count();
    int x = 0, s = 0;
    for (auto [i, j] : inst.arcs()) {
        ++x;
        for (int c = 0; c < inst.station_count(); ++c)
            s += station_usable(inst, i, j, c) ? 1 : 0;
    }
    return K * (x + 2 * s + n + x) + (n - 2);
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("variable count by hand: two requests, one station, two vehicles")
{
    const auto t = testing::two_requests_one_station(2);
    const MilpModel m = build_model(t.inst, t.scenario);
    // Six forward arcs, all with a usable station stop, four nodes.
    CHECK(count_kind(m, VarKind::X) == 12);
    CHECK(count_kind(m, VarKind::S) == 12);
    CHECK(count_kind(m, VarKind::C) == 12);
    CHECK(count_kind(m, VarKind::E) == 8);
    CHECK(count_kind(m, VarKind::W) == 12);
    CHECK(count_kind(m, VarKind::BR) == 2);
    CHECK(m.variables().size() == 58);
    CHECK(m.binary_count() == 26);
    CHECK(expected_variables(t.inst, 2) == 58);
}

TEST_CASE("variable count matches the masks on random instances")
{
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const auto rc = testing::random_case(seed);
        const MilpModel m = build_model(rc.inst, rc.scenario);
        CAPTURE(seed);
        CHECK(static_cast<int>(m.variables().size()) == expected_variables(rc.inst, rc.scenario.fleet.vehicles));
    }
}

TEST_CASE("without stations there is no grid exchange and the objective is the fares")
{
    const auto t = testing::five_schedules();
    const MilpModel m = build_model(t.inst, t.scenario);
    CHECK(count_kind(m, VarKind::S) == 0);
    CHECK(count_kind(m, VarKind::C) == 0);
    for (std::size_t v = 0; v < m.variables().size(); ++v) {
        const VarRef& r = m.variables()[v];
        const double expected = r.kind == VarKind::BR ? -fare(t.inst, r.j, t.scenario.fares) : 0.0;
        CHECK(m.objective()[v] == expected);
    }
}

TEST_CASE("big-M: E_max plus the largest charge bound plus the largest harvest")
{
    auto t = testing::station_day();
    t.scenario.solar = SolarProfile({{0, 6.0}});
    CHECK(t.inst.c_hat(0, 1, 0) == doctest::Approx(8.8));
    CHECK(big_m(t.inst, t.scenario) == doctest::Approx(74.8));
    t.scenario.fleet.solar_enabled = false;
    CHECK(big_m(t.inst, t.scenario) == doctest::Approx(68.8));
}

TEST_CASE("big-M without stations or solar is the battery size")
{
    auto t = testing::five_schedules();
    t.scenario.fleet.solar_enabled = false;
    CHECK(big_m(t.inst, t.scenario) == t.scenario.fleet.battery_max_kwh);
}

TEST_CASE("big-M on the fixture matches a full scan")
{
    const auto w = testing::load_fixture();
    Scenario sc = w.base;
    sc.requests.resize(12);
    const DagInstance inst = build_dag(w.net, sc.requests, w.depot, sc.fleet.charging_power_kw);
    double c_max = 0.0, sol_max = 0.0;
    for (int i = 0; i < inst.node_count(); ++i)
        for (int j = 0; j < inst.node_count(); ++j) {
            if (!inst.x_mask(i, j))
                continue;
            sol_max = std::max(sol_max, solar_energy(sc.solar, sc.fleet, inst, i, j));
            for (int c = 0; c < inst.station_count(); ++c)
                c_max = std::max(c_max, inst.c_hat(i, j, c));
        }
    CHECK(big_m(inst, sc) == doctest::Approx(sc.fleet.battery_max_kwh + c_max + sol_max));
}

TEST_CASE("transition energy: approach, service and detour distance")
{
    const auto t = testing::two_requests_one_station(1);
    const FleetSpec& f = t.scenario.fleet;
    // 1 -> 2: already at d, then serve d->q (18 km).
    CHECK(transition_energy_kwh(t.inst, f, 1, 2) == doctest::Approx(18.0 * 0.12));
    // 2 -> end: q->d (6 km); the station adds q->s->d minus q->d.
    CHECK(transition_energy_kwh(t.inst, f, 2, 3) == doctest::Approx(6.0 * 0.12));
    CHECK(transition_energy_kwh(t.inst, f, 2, 3, 0) == doctest::Approx((6.0 + 14.0) * 0.12));
    CHECK(transition_energy_kwh(t.inst, f, 0, 3) == 0.0);
}

TEST_CASE("model and scenario must describe the same day")
{
    auto t = testing::two_requests_one_station(1);
    Scenario sc = t.scenario;
    sc.requests.pop_back();
    CHECK_THROWS_AS(build_model(t.inst, sc), BuildError);
    sc = t.scenario;
    sc.requests[0].time += 1;
    CHECK_THROWS_AS(build_model(t.inst, sc), BuildError);
    sc = t.scenario;
    sc.fleet.charging_power_kw = 8.0;
    CHECK_THROWS_AS(build_model(t.inst, sc), BuildError);
}

TEST_CASE("export names")
{
    CHECK(VarRef{VarKind::X, 0, 3, -1, 1}.name() == "X_0_3_1");
    CHECK(VarRef{VarKind::S, 1, 2, 0, 0}.name() == "S_1_2_0_0");
    CHECK(VarRef{VarKind::C, 1, 2, 0, 0}.name() == "C_1_2_0_0");
    CHECK(VarRef{VarKind::E, -1, 2, -1, 1}.name() == "E_2_1");
    CHECK(VarRef{VarKind::W, 2, 3, -1, 0}.name() == "W_2_3_0");
    CHECK(VarRef{VarKind::BR, -1, 4}.name() == "BR_4");
    const auto t = testing::two_requests_one_station(2);
    const MilpModel m = build_model(t.inst, t.scenario);
    CHECK(m.find("X_1_2_1") >= 0);
    CHECK(m.find("C_2_3_0_1") >= 0);
    CHECK(m.find("X_2_1_0") == -1);
}

TEST_CASE("duplicate variables and dangling rows are rejected")
{
    MilpModel m;
    m.add_variable({VarKind::BR, -1, 1, -1, -1, 0.0, 1.0});
    CHECK_THROWS_AS(m.add_variable({VarKind::BR, -1, 1, -1, -1, 0.0, 1.0}), BuildError);
    CHECK_THROWS_AS(m.add_constraint({"bad", {{5, 1.0}}, Relation::less_equal, 1.0}), BuildError);
}

TEST_CASE("evaluation and violation")
{
    MilpModel m;
    const int a = m.add_variable({VarKind::E, -1, 1, -1, 0, 0.0, 10.0}, 2.0);
    const int b = m.add_variable({VarKind::E, -1, 2, -1, 0, 0.0, 10.0}, -1.0);
    m.add_constraint({"sum", {{a, 1.0}, {b, 1.0}}, Relation::less_equal, 5.0});
    CHECK(m.evaluate({1.0, 3.0}) == 2.0 - 3.0);
    CHECK(m.max_violation({1.0, 3.0}) == 0.0);
    std::string worst;
    CHECK(m.max_violation({4.0, 3.0}, &worst) == doctest::Approx(2.0));
    CHECK(worst.find("sum") != std::string::npos);
    CHECK(m.max_violation({-1.0, 0.0}) == doctest::Approx(1.0));
}

}  // TEST_SUITE
