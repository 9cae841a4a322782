#include <doctest.h>

#include <json.hpp>
#include <numeric>
#include <sstream>

#include "fixture.hpp"
#include "samod/analyze.hpp"
#include "samod/model.hpp"
#include "samod/solve.hpp"
#include "tiny_cases.hpp"

using namespace samod;

namespace {

constexpr Seconds h = 3600;

double total_kwh(const std::vector<double>& kw, Seconds width)
{
    return std::accumulate(kw.begin(), kw.end(), 0.0) * static_cast<double>(width) / 3600.0;
}

// One 8.8 kWh purchase at 22 kW; the vehicle reaches the station at 13:00.
Solution one_purchase(const testing::TinyCase& t)
{
    Solution s;
    s.status = SolveStatus::optimal;
    s.x = {{0, 1, 0}};
    s.s = {{0, 1, 0, 0}};
    s.charge = {{{0, 1, 0, 0}, 8.8}};
    s.energy = {{{0, 0}, 30.0}, {{1, 0}, 30.0 + 8.8 - transition_energy_kwh(t.inst, t.scenario.fleet, 0, 1, 0)}};
    return s;
}

struct Solved {
    testing::TinyCase t;
    Solution s;
};

Solved solved_two_requests(int vehicles)
{
    Solved out{testing::two_requests_one_station(vehicles), {}};
    out.s = solve(out.t.inst, out.t.scenario);
    REQUIRE(out.s.status == SolveStatus::optimal);
    return out;
}

}  // namespace

TEST_SUITE("analyze") {

TEST_CASE("solver output passes the independent replay")
{
    for (int k = 1; k <= 2; ++k) {
        const auto r = solved_two_requests(k);
        const auto rep = validate(r.s, r.t.inst, r.t.scenario);
        CHECK(rep.ok());
    }
}

TEST_CASE("replay catches a request served twice")
{
    auto r = solved_two_requests(2);
    REQUIRE_FALSE(r.s.served.empty());
    const int j = *r.s.served.begin();
    int serving = -1;
    for (const Transition& t : r.s.x)
        if (t.j == j)
            serving = t.k;
    REQUIRE(serving >= 0);
    const int other = 1 - serving;
    // The other vehicle makes the same visit on top of its own day.
    std::erase_if(r.s.x, [&](const Transition& t) { return t.k == other; });
    r.s.x.insert({0, j, other});
    r.s.x.insert({j, r.t.inst.end_node(), other});
    CHECK(validate(r.s, r.t.inst, r.t.scenario).has(family::serve_once));
}

TEST_CASE("replay catches a drifted energy level")
{
    auto r = solved_two_requests(1);
    for (auto& [nv, e] : r.s.energy)
        if (nv.j != 0 && nv.j != r.t.inst.end_node() && r.s.served.count(nv.j)) {
            e += 0.01;
            break;
        }
    CHECK(validate(r.s, r.t.inst, r.t.scenario).has(family::energy_balance));
}

TEST_CASE("replay catches bound, flag and objective tampering")
{
    const auto base = solved_two_requests(1);
    {
        auto r = base;
        r.s.served.insert(99);
        CHECK(validate(r.s, r.t.inst, r.t.scenario).has(family::served_flag));
    }
    {
        auto r = base;
        r.s.objective -= 1.0;
        CHECK(validate(r.s, r.t.inst, r.t.scenario).has(family::objective));
    }
    {
        auto r = base;
        r.s.energy[{0, 0}] += 1.0;
        CHECK(validate(r.s, r.t.inst, r.t.scenario).has(family::energy_boundary));
    }
    {
        auto r = base;
        r.s.x.insert({2, 1, 0});
        CHECK(validate(r.s, r.t.inst, r.t.scenario).has(family::time_window));
    }
}

TEST_CASE("charging block lands in the bins after arrival")
{
    const auto t = testing::station_day(13 * h - 1000);
    const Solution s = one_purchase(t);
    const PowerProfile p = power_profile(s, t.inst, t.scenario);
    const std::size_t first = 13 * 12;  // 13:00 in 5 min bins
    for (std::size_t b = 0; b < p.size(); ++b) {
        CAPTURE(b);
        if (b >= first && b < first + 4)
            CHECK(p.grid_charge_kw[b] == doctest::Approx(22.0));
        else if (b == first + 4)
            CHECK(p.grid_charge_kw[b] == doctest::Approx(22.0 * 240.0 / 300.0));
        else
            CHECK(p.grid_charge_kw[b] == 0.0);
        CHECK(p.v2g_kw[b] == 0.0);
    }
    CHECK(total_kwh(p.grid_charge_kw, p.bin_width) == doctest::Approx(8.8));
}

TEST_CASE("empty solution: zero profile")
{
    const auto t = testing::station_day();
    const PowerProfile p = power_profile(Solution{}, t.inst, t.scenario);
    const PowerProfile z = PowerProfile::zeros();
    CHECK(p.size() == 288);
    CHECK(p.grid_charge_kw == z.grid_charge_kw);
    CHECK(p.solar_kw == z.solar_kw);
    CHECK(p.cum_consumption_kwh == z.cum_consumption_kwh);
}

TEST_CASE("profiles conserve energy")
{
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        testing::CaseShape shape;
        shape.max_requests = 4;
        const auto rc = testing::random_case(seed, shape);
        const Solution s = solve(rc.inst, rc.scenario);
        if (!s.has_solution())
            continue;
        CAPTURE(seed);
        const PowerProfile p = power_profile(s, rc.inst, rc.scenario);
        double bought = 0.0, sold = 0.0, used = 0.0, harvested = 0.0;
        for (const auto& [v, c] : s.charge)
            (c > 0 ? bought : sold) += std::abs(c);
        for (const Transition& t : s.x) {
            int c = -1;
            for (const StationVisit& v : s.s)
                if (v.i == t.i && v.j == t.j && v.k == t.k)
                    c = v.c;
            used += transition_energy_kwh(rc.inst, rc.scenario.fleet, t.i, t.j, c);
            harvested += solar_energy(rc.scenario.solar, rc.scenario.fleet, rc.inst, t.i, t.j);
        }
        for (const auto& [t, w] : s.spill)
            harvested -= w;
        CHECK(total_kwh(p.grid_charge_kw, p.bin_width) == doctest::Approx(bought).epsilon(1e-9));
        CHECK(total_kwh(p.v2g_kw, p.bin_width) == doctest::Approx(sold).epsilon(1e-9));
        CHECK(total_kwh(p.solar_kw, p.bin_width) == doctest::Approx(harvested).epsilon(1e-9));
        CHECK(p.cum_consumption_kwh.back() == doctest::Approx(used).epsilon(1e-9));
    }
}

TEST_CASE("cost signs: a sale is revenue")
{
    const auto t = testing::arbitrage_chain();
    Solution s;
    s.x = {{0, 1, 0}, {1, 2, 0}};
    s.s = {{1, 2, 0, 0}};
    s.charge = {{{1, 2, 0, 0}, -5.0}};
    s.served = {1};
    const CostBreakdown b = cost_breakdown(s, t.inst, t.scenario);
    CHECK(b.v2g_revenue == doctest::Approx(2.5));
    CHECK(b.charging_cost == 0.0);
    CHECK(b.trading_profit() == doctest::Approx(2.5));
    CHECK(b.objective() == doctest::Approx(-2.5 - fare(t.inst, 1, t.scenario.fares)));
    const TradePrices tp = trade_prices(s, t.inst, t.scenario);
    CHECK(tp.sold_kwh == doctest::Approx(5.0));
    CHECK(tp.mean_sell == doctest::Approx(0.5));
    CHECK(tp.bought_kwh == 0.0);
}

TEST_CASE("aggregation scales sample sums to the fleet")
{
    const auto t = testing::station_day(13 * h - 1000);
    const Solution s = one_purchase(t);
    const SampleSummary one{power_profile(s, t.inst, t.scenario), cost_breakdown(s, t.inst, t.scenario), 1};

    const SampleSummary single[] = {one};
    const FleetSummary same = aggregate_samples(single, 1);
    CHECK(same.scale == 1.0);
    CHECK(same.profile.grid_charge_kw == one.profile.grid_charge_kw);
    CHECK(same.breakdown.charging_cost == doctest::Approx(one.breakdown.charging_cost));

    const FleetSummary twice = aggregate_samples(single, 2);
    for (std::size_t b = 0; b < one.profile.size(); ++b)
        CHECK(twice.profile.grid_charge_kw[b] == doctest::Approx(2.0 * one.profile.grid_charge_kw[b]));
    CHECK(twice.breakdown.charging_cost == doctest::Approx(2.0 * one.breakdown.charging_cost));

    testing::Rng rng(3);
    std::vector<SampleSummary> four;
    std::vector<double> sums(one.profile.size(), 0.0);
    int vehicles = 0;
    for (int k = 0; k < 4; ++k) {
        SampleSummary x = one;
        x.vehicles = rng.uniform_int(1, 3);
        const double f = rng.uniform(0.5, 2.0);
        for (double& v : x.profile.grid_charge_kw)
            v *= f;
        for (std::size_t b = 0; b < sums.size(); ++b)
            sums[b] += x.profile.grid_charge_kw[b];
        vehicles += x.vehicles;
        four.push_back(x);
    }
    const FleetSummary fleet = aggregate_samples(four, 20);
    CHECK(fleet.scale == doctest::Approx(20.0 / vehicles));
    for (std::size_t b = 0; b < sums.size(); ++b)
        CHECK(fleet.profile.grid_charge_kw[b] == doctest::Approx(sums[b] * 20.0 / vehicles));

    CHECK_THROWS_AS(aggregate_samples(std::span<const SampleSummary>{}, 5), Error);
    SampleSummary odd = one;
    odd.profile = PowerProfile::zeros(600);
    const SampleSummary mixed[] = {one, odd};
    CHECK_THROWS_AS(aggregate_samples(mixed, 5), Error);
}

TEST_CASE("reports: stored profile, parseable summary")
{
    const auto t = testing::station_day(13 * h - 1000);
    const Solution s = one_purchase(t);
    const PowerProfile p = power_profile(s, t.inst, t.scenario);
    std::ostringstream csv;
    write_profile_csv(csv, p);
    CHECK(testing::matches_golden("profile_one_purchase.csv", csv.str()));

    std::ostringstream header_only;
    PowerProfile none;
    write_profile_csv(header_only, none);
    CHECK(header_only.str() == "bin_start_s,grid_charge_kw,v2g_kw,solar_kw,cum_consumption_kwh\n");

    const CostBreakdown b = cost_breakdown(s, t.inst, t.scenario);
    std::ostringstream json;
    write_summary_json(json, b, {report_tag(3, 7), SolveStatus::optimal, b.objective(), b.objective(), 1});
    const auto doc = nlohmann::json::parse(json.str());
    CHECK(doc["tag"] == "s3_seed7");
    CHECK(doc["status"] == "optimal");
    CHECK(doc["charging_cost"].get<double>() == doctest::Approx(8.8 * 0.10));
    CHECK(doc["J"].get<double>() == doctest::Approx(b.objective()));

    const auto dir = testing::scratch_dir("reports");
    emit_report(p, b, {"x", SolveStatus::optimal, 0.0, 0.0, 0}, dir / "nested");
    CHECK(std::filesystem::exists(dir / "nested" / "profile_x.csv"));
    CHECK(testing::read_text(dir / "nested" / "profile_x.csv") == csv.str());
}

}  // TEST_SUITE
