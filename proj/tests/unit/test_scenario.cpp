#include <doctest.h>

#include <set>
#include <sstream>

#include "fixture.hpp"
#include "samod/scenario.hpp"

using namespace samod;

namespace {

constexpr Seconds h = 3600;

DagInstance one_trip_instance(Seconds serve_s, double meters)
{
    const std::vector<ArcSpec> arcs{{"a", "b", static_cast<double>(serve_s), meters},
                                    {"b", "a", static_cast<double>(serve_s), meters}};
    const RoadNetwork net({"a", "b"}, arcs, std::vector<std::string>{});
    const std::vector<TravelRequest> req{{1, 0, 1, 10 * h}};
    return build_dag(net, req, DepotSpec{0, 0, kSecondsPerDay}, 22.0);
}

// Left Riemann sum at 1 s resolution; exact for step functions on integral breakpoints.
double fine_grid_mean(const PriceSeries& p, Seconds a, Seconds b)
{
    double sum = 0.0;
    for (Seconds t = a; t < b; ++t)
        sum += p.at(t);
    return sum / static_cast<double>(b - a);
}

std::string describe(const std::vector<Scenario>& samples, const RoadNetwork& net)
{
    std::ostringstream s;
    for (const Scenario& sc : samples) {
        s << "sample " << sc.id << " vehicles " << sc.fleet.vehicles << '\n';
        for (const TravelRequest& r : sc.requests)
            s << "  " << r.id << ' ' << net.id(r.origin) << ' ' << net.id(r.destination) << ' ' << r.time << '\n';
    }
    return s.str();
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("constant price averages to itself")
{
    const auto p = PriceSeries::constant(0.10);
    CHECK(p.average(0, 86399) == doctest::Approx(0.10));
    CHECK(p.average(500, 500) == 0.10);
}

TEST_CASE("two-level price averaged across the switch")
{
    const PriceSeries p({{0, 0.10}, {12 * h, 0.30}});
    CHECK(p.average(11 * h, 13 * h) == doctest::Approx(0.20).epsilon(1e-12));
    CHECK(p.at(12 * h) == 0.30);
    CHECK(p.at(12 * h - 1) == 0.10);
}

TEST_CASE("window averages match fine-grid integration")
{
    const PriceSeries p({{0, 0.05}, {4 * h, 0.21}, {7 * h, -0.03}, {9 * h + 1234, 0.44}, {17 * h, 0.12}});
    CHECK(std::abs(p.average(5 * h + 17, 10 * h + 5) - fine_grid_mean(p, 5 * h + 17, 10 * h + 5)) < 1e-9);
    testing::Rng rng(5);
    for (int k = 0; k < 200; ++k) {
        const PriceSeries q = testing::random_prices(rng, rng.uniform_int(1, 8));
        Seconds a = rng.uniform_int(0, 86000);
        Seconds b = rng.uniform_int(static_cast<int>(a) + 1, 86400);
        CHECK(std::abs(q.average(a, b) - fine_grid_mean(q, a, b)) < 1e-9);
        CHECK(q.steps().min_over(a, b) <= q.average(a, b) + 1e-12);
        CHECK(q.steps().max_over(a, b) >= q.average(a, b) - 1e-12);
    }
}

TEST_CASE("step functions are validated")
{
    CHECK_THROWS_AS(StepFunction({{10, 1.0}}), ConfigError);
    CHECK_THROWS_AS(StepFunction({{0, 1.0}, {0, 2.0}}), ConfigError);
    CHECK_THROWS_AS(StepFunction({{0, 1.0}, {86400, 2.0}}), ConfigError);
    CHECK_THROWS_AS(SolarProfile({{0, -1.0}}), ConfigError);
}

TEST_CASE("solar harvest")
{
    const SolarProfile flat({{0, 0.5}});
    CHECK(flat.energy(3 * h, 5 * h) == doctest::Approx(1.0));
    const auto trap = SolarProfile::trapezoid(6 * h, 18 * h, 6.0);
    CHECK(trap.daily_total() == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(trap.energy(0, 6 * h) == 0.0);
    CHECK(trap.energy(19 * h, 23 * h) == 0.0);
    CHECK(trap.power_kw(12 * h) > trap.power_kw(7 * h));
    CHECK(SolarProfile::none().daily_total() == 0.0);
}

TEST_CASE("solar energy over a transition window")
{
    const DagInstance inst = one_trip_instance(1200, 10000.0);
    FleetSpec fleet;
    const SolarProfile flat({{0, 0.5}});
    // Window of 0 -> 1 is [day_start, t_1] = [0, 10 h].
    CHECK(solar_energy(flat, fleet, inst, 0, 1) == doctest::Approx(5.0));
    fleet.solar_enabled = false;
    CHECK(solar_energy(flat, fleet, inst, 0, 1) == 0.0);
    fleet.solar_enabled = true;
    const auto trap = SolarProfile::trapezoid(6 * h, 18 * h, 6.0);
    CHECK(solar_energy(trap, fleet, inst, 0, 1) == doctest::Approx(trap.energy(0, 10 * h)));
}

TEST_CASE("window price uses the idle part of the transition")
{
    const DagInstance inst = one_trip_instance(1200, 10000.0);
    const PriceSeries p({{0, 0.10}, {12 * h, 0.30}});
    // 1 -> end: from 10 h + 1200 s to midnight.
    const double expected = (0.10 * (2 * h - 1200) + 0.30 * 12 * h) / (14 * h - 1200);
    CHECK(average_price(p, inst, 1, 2) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("fares")
{
    const DagInstance inst = one_trip_instance(1200, 10000.0);
    CHECK(fare(inst, 1, FareModel{}) == doctest::Approx(25.0).epsilon(1e-12));
    CHECK(fare(inst, 0, FareModel{}) == 0.0);
    CHECK(fare(inst, 2, FareModel{}) == 0.0);
    CHECK(fare(inst, 1, FareModel{0.0, 0.0, 0.0}) == 0.0);
    CHECK_THROWS_AS(FareModel({-1.0, 0.0, 0.0}).validate(), ConfigError);
}

TEST_CASE("consumption versus pack size")
{
    CHECK(consumption_for_battery(0.12, 60.0, 60.0) == 0.12);
    // 0.12 * (1 + 5e-5 * 5 * (20 - 60))
    CHECK(consumption_for_battery(0.12, 60.0, 20.0) == doctest::Approx(0.1188).epsilon(1e-12));
    CHECK(consumption_for_battery(0.12, 60.0, 40.0) < 0.12);
    BatteryMassModel flat;
    flat.mass_sensitivity_per_kg = 0.0;
    CHECK(consumption_for_battery(0.12, 60.0, 20.0, flat) == 0.12);
    CHECK(consumption_for_battery(0.12, 60.0, 100.0, flat) == 0.12);
    CHECK_THROWS_AS(consumption_for_battery(0.12, 60.0, 0.0), ConfigError);
}

TEST_CASE("fleet validation")
{
    FleetSpec f;
    CHECK_NOTHROW(f.validate());
    f.battery_initial_kwh = 70.0;
    CHECK_THROWS_AS(f.validate(), ConfigError);
    f = FleetSpec{};
    f.vehicles = 0;
    CHECK_THROWS_AS(f.validate(), ConfigError);
    f = FleetSpec{};
    f.charging_power_kw = 0.0;
    CHECK_THROWS_AS(f.validate(), ConfigError);
}

TEST_CASE("fleet variants per pack size")
{
    const auto w = testing::load_fixture();
    const FleetSpec small = w.config.fleet_for_battery(20.0);
    CHECK(small.battery_max_kwh == 20.0);
    CHECK(small.charging_power_kw == 8.0);
    CHECK(small.consumption_kwh_per_km == doctest::Approx(0.1188));
    CHECK(small.battery_initial_kwh == doctest::Approx(10.0));
    CHECK(w.config.fleet_for_battery(60.0).charging_power_kw == 22.0);
    CHECK_THROWS_AS(w.config.fleet_for_battery(35.0), ConfigError);
}

TEST_CASE("configuration documents")
{
    auto load = [](const std::string& text) {
        std::istringstream in(text);
        return load_run_config(in);
    };
    const RunConfig c = load(R"({"K": 3, "E_b_max": 40, "E_b_0": 20, "depot": "x"})");
    CHECK(c.fleet.vehicles == 3);
    CHECK(c.fleet.battery_max_kwh == 40.0);
    CHECK(c.depot_node == "x");
    CHECK_THROWS_AS(load(R"({"K": 1.5})"), ParseError);
    CHECK_THROWS_AS(load("[]"), ParseError);
    CHECK_THROWS_AS(load(R"({"day_start_s": 500, "day_end_s": 100})"), ConfigError);
}

TEST_CASE("price tables")
{
    std::istringstream in("time_s,price_aud_per_kwh\n0,0.1\n3600,-0.02\n");
    const PriceSeries p = load_price_series(in);
    CHECK(p.at(4000) == -0.02);
    std::istringstream bad("time_s,price_aud_per_kwh\n100,0.1\n");
    CHECK_THROWS(load_price_series(bad));
    const PriceSeries fixture = load_price_series(testing::fixture_dir() / "prices.csv");
    CHECK(fixture.steps().breakpoints().size() == PriceSeries::duck_curve().steps().breakpoints().size());
    for (Seconds t = 0; t < kSecondsPerDay; t += 900)
        CHECK(fixture.at(t) == PriceSeries::duck_curve().at(t));
}

TEST_CASE("sampling is deterministic")
{
    const auto w = testing::load_fixture();
    const auto a = sample_scenarios(w.base, 3, 2, 5, 42);
    const auto b = sample_scenarios(w.base, 3, 2, 5, 42);
    CHECK(describe(a, w.net) == describe(b, w.net));
    CHECK(describe(a, w.net) != describe(sample_scenarios(w.base, 3, 2, 5, 43), w.net));
}

TEST_CASE("sampling everything returns the request set")
{
    const auto w = testing::load_fixture();
    const auto all = sample_scenarios(w.base, static_cast<int>(w.base.requests.size()), 1, 1, 9);
    REQUIRE(all.size() == 1);
    REQUIRE(all[0].requests.size() == w.base.requests.size());
    for (std::size_t k = 0; k < all[0].requests.size(); ++k) {
        CHECK(all[0].requests[k].origin == w.base.requests[k].origin);
        CHECK(all[0].requests[k].time == w.base.requests[k].time);
    }
}

TEST_CASE("sampling: disjoint blocks, time order, renumbering")
{
    const auto w = testing::load_fixture();
    const auto samples = sample_scenarios(w.base, 3, 1, 4, 7);
    std::set<Seconds> seen;
    for (const Scenario& sc : samples) {
        CHECK(sc.requests.size() == 3);
        for (std::size_t k = 0; k < sc.requests.size(); ++k) {
            CHECK(sc.requests[k].id == static_cast<int>(k) + 1);
            if (k > 0)
                CHECK(sc.requests[k - 1].time <= sc.requests[k].time);
            CHECK(seen.insert(sc.requests[k].time).second);  // fixture times are distinct
        }
    }
    CHECK_THROWS_AS(sample_scenarios(w.base, 13, 1, 1, 1), ConfigError);
    CHECK_THROWS_AS(sample_scenarios(w.base, 2, 0, 1, 1), ConfigError);
}

TEST_CASE("sampling golden: seed 1, ten requests, three per sample")
{
    auto w = testing::load_fixture();
    w.base.requests.resize(10);
    const auto samples = sample_scenarios(w.base, 3, 1, 3, 1);
    CHECK(testing::matches_golden("samples_seed1.txt", describe(samples, w.net)));
}

}  // TEST_SUITE
