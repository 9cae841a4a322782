#include <doctest.h>

#include <sstream>

#include "random_instances.hpp"
#include "samod/instance.hpp"

using namespace samod;

namespace {

// d = depot, q = customer node, s = station. d->q direct takes 1800 s and
// the way through s takes 360 s longer.
RoadNetwork line_network()
{
    const std::vector<ArcSpec> arcs{
        {"d", "q", 1800, 18000}, {"q", "d", 600, 6000},  {"d", "s", 1000, 9000},
        {"s", "q", 1160, 10000}, {"s", "d", 1160, 10000}, {"q", "s", 1160, 10000},
    };
    return RoadNetwork({"d", "q", "s"}, arcs, std::vector<std::string>{"s"});
}

std::vector<TravelRequest> requests_on(const RoadNetwork& net, std::initializer_list<std::tuple<const char*, const char*, Seconds>> rows)
{
    std::vector<TravelRequest> out;
    for (const auto& [o, d, t] : rows)
        out.push_back({static_cast<int>(out.size()) + 1, net.index_of(o), net.index_of(d), t});
    return out;
}

// Recomputes every pair and triple of the instance from single fastest-path
// queries and compares exactly.
void check_against_path_queries(const RoadNetwork& net, const DagInstance& inst)
{
    const int n = inst.node_count();
    auto origin = [&](int i) { return inst.is_request(i) ? inst.request(i).origin : inst.depot.node; };
    auto dest = [&](int i) { return inst.is_request(i) ? inst.request(i).destination : inst.depot.node; };
    auto start = [&](int i) {
        return i == 0 ? inst.depot.day_start : i == n - 1 ? inst.depot.day_end : inst.request(i).time;
    };
    for (int i = 0; i < n; ++i) {
        const PathResult serve = fastest_path(net, origin(i), dest(i));
        CHECK(inst.t_fp(i, i) == serve.time);
        CHECK(inst.d_fp(i, i) == serve.distance);
        for (int j = 0; j < n; ++j) {
            if (i == j)
                continue;
            CAPTURE(i);
            CAPTURE(j);
            const PathResult p = fastest_path(net, dest(i), origin(j));
            const Seconds ava = start(j) - start(i) - serve.time;
            const bool allowed = j != 0 && i != n - 1;
            const bool x = allowed && p.reachable && p.time <= ava;
            CHECK(inst.t_fp(i, j) == p.time);
            CHECK(inst.d_fp(i, j) == p.distance);
            CHECK(inst.t_ava(i, j) == ava);
            CHECK(inst.x_mask(i, j) == x);
            for (int c = 0; c < inst.station_count(); ++c) {
                const Detour d = detour_via_station(net, dest(i), origin(j), inst.stations[static_cast<std::size_t>(c)]);
                const bool s = x && d.feasible && p.time + d.time <= ava;
                CHECK(inst.s_mask(i, j, c) == s);
                const double bound = s ? static_cast<double>(ava - p.time - d.time) * inst.charging_power_kw / 3600.0 : 0.0;
                CHECK(inst.c_hat(i, j, c) == bound);
                if (d.feasible && x) {
                    CHECK(inst.detour(i, j, c).time == d.time);
                    CHECK(inst.detour(i, j, c).distance == doctest::Approx(d.distance));
                }
            }
        }
    }
}

}  // namespace

TEST_SUITE("instance") {

TEST_CASE("request table: sorted by time, stable on ties")
{
    const auto net = line_network();
    std::istringstream in("origin_node,destination_node,request_time_s\n"
                          "q,d,500\n"
                          "d,q,100\n"
                          "s,q,500\n");
    const auto r = load_requests(in, net);
    REQUIRE(r.size() == 3);
    CHECK(r[0].time == 100);
    CHECK(r[1].origin == net.index_of("q"));
    CHECK(r[2].origin == net.index_of("s"));
    for (int k = 0; k < 3; ++k)
        CHECK(r[static_cast<std::size_t>(k)].id == k + 1);
}

TEST_CASE("request table: invalid rows")
{
    const auto net = line_network();
    auto load = [&](const std::string& text) {
        std::istringstream in(text);
        return load_requests(in, net);
    };
    CHECK_THROWS_AS(load("origin_node,destination_node,request_time_s\nq,q,5\n"), ValidationError);
    CHECK_THROWS_AS(load("origin_node,destination_node,request_time_s\nq,zz,5\n"), ValidationError);
    CHECK_THROWS_AS(load("origin_node,destination_node,request_time_s\nq,d,86400\n"), ValidationError);
    CHECK_THROWS_AS(load("origin_node,destination_node,request_time_s\nq,d,abc\n"), ParseError);
    CHECK_THROWS_AS(load("origin_node,request_time_s\nq,5\n"), ParseError);
}

TEST_CASE("charge bound arithmetic")
{
    CHECK(charge_bound_kwh(3600, 1800, 360, 22.0) == 8.8);
    CHECK(charge_bound_kwh(3600, 3700, 0, 22.0) == 0.0);
    CHECK(charge_bound_kwh(3600, 1800, 1800, 22.0) == 0.0);
}

TEST_CASE("charge bound on a built instance")
{
    const auto net = line_network();
    const auto req = requests_on(net, {{"q", "d", 3600}});
    const DepotSpec depot{net.index_of("d"), 0, kSecondsPerDay};
    const DagInstance inst = build_dag(net, req, depot, 22.0);
    CHECK(inst.t_ava(0, 1) == 3600);
    CHECK(inst.t_fp(0, 1) == 1800);
    CHECK(inst.detour(0, 1, 0).time == 360);
    CHECK(inst.c_hat(0, 1, 0) == 8.8);
}

TEST_CASE("time-infeasible transitions carry no charge bound")
{
    const auto net = line_network();
    // d->q needs 1800 s but request 1 starts 1500 s after the day does.
    const auto req = requests_on(net, {{"q", "d", 1500}});
    const DagInstance inst = build_dag(net, req, DepotSpec{net.index_of("d"), 0, kSecondsPerDay}, 22.0);
    CHECK_FALSE(inst.x_mask(0, 1));
    CHECK_FALSE(inst.s_mask(0, 1, 0));
    CHECK(inst.c_hat(0, 1, 0) == 0.0);
}

TEST_CASE("available time")
{
    const auto net = line_network();
    const auto req = requests_on(net, {{"q", "d", 8 * 3600}, {"d", "q", 8 * 3600 + 1200}});
    const DepotSpec depot{net.index_of("d"), 3600, 80000};
    const DagInstance inst = build_dag(net, req, depot, 22.0);
    CHECK(inst.serve_time(1) == 600);
    CHECK(available_time(inst, 1, 2) == 600);
    CHECK(inst.t_ava(1, 2) == 600);
    CHECK(inst.t_ava(0, inst.end_node()) == 80000 - 3600);
    CHECK(inst.t_ava(2, 1) < 0);
    CHECK_FALSE(inst.x_mask(2, 1));
    CHECK(inst.x_mask(0, inst.end_node()));
    CHECK_FALSE(inst.x_mask(inst.end_node(), 0));
    CHECK_FALSE(inst.x_mask(1, 1));
}

TEST_CASE("two requests, one station: every entry from path queries")
{
    const auto net = line_network();
    const auto req = requests_on(net, {{"q", "d", 7200}, {"d", "q", 12000}});
    const DagInstance inst = build_dag(net, req, DepotSpec{net.index_of("d"), 0, 30000}, 22.0);
    check_against_path_queries(net, inst);
    // Hand values: 0->1 has 7200 - 1800 - 360 s of idle time at the station.
    CHECK(inst.c_hat(0, 1, 0) == doctest::Approx(5040.0 * 22.0 / 3600.0));
    CHECK(inst.x_mask(1, 2));
    CHECK(inst.arcs().size() == 6);  // all forward pairs; 2 -> 1 runs backwards in time
}

TEST_CASE("random instances match path queries")
{
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        testing::CaseShape shape;
        shape.max_requests = 4;
        const auto rc = testing::random_case(seed, shape);
        CAPTURE(seed);
        check_against_path_queries(rc.net, rc.inst);
    }
}

TEST_CASE("unreachable request endpoints are build errors")
{
    const std::vector<ArcSpec> arcs{{"d", "q", 10, 10}, {"q", "d", 10, 10}, {"x", "d", 10, 10}};
    const RoadNetwork net({"d", "q", "x"}, arcs, std::vector<std::string>{});
    const auto req = requests_on(net, {{"x", "q", 100}});
    CHECK_THROWS_WITH_AS(build_dag(net, req, DepotSpec{net.index_of("d"), 0, kSecondsPerDay}, 22.0),
                         doctest::Contains("request 1"), BuildError);
    CHECK_THROWS_AS(build_dag(net, {}, DepotSpec{net.index_of("d"), 0, kSecondsPerDay}, 0.0), BuildError);
    CHECK_THROWS_AS(build_dag(net, {}, DepotSpec{net.index_of("d"), 500, 100}, 22.0), BuildError);
}

TEST_CASE("no requests: only the idle-day transition")
{
    const auto net = line_network();
    const DagInstance inst = build_dag(net, {}, DepotSpec{net.index_of("d"), 0, kSecondsPerDay}, 22.0);
    CHECK(inst.node_count() == 2);
    CHECK(inst.arcs() == std::vector<std::pair<int, int>>{{0, 1}});
}

TEST_CASE("instance documents round-trip")
{
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto rc = testing::random_case(seed);
        std::ostringstream out;
        write_instance(out, rc.inst);
        std::istringstream in(out.str());
        const DagInstance back = read_instance(in);
        CHECK(back == rc.inst);
        std::ostringstream again;
        write_instance(again, back);
        CHECK(again.str() == out.str());
    }
    std::istringstream bad(R"({"format": "something else"})");
    CHECK_THROWS_AS(read_instance(bad), ParseError);
}

TEST_CASE("dag construction: serial and parallel kernels agree")
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        testing::CaseShape shape;
        shape.grid = 5;
        shape.max_requests = 12;
        const auto rc = testing::random_case(seed, shape);
        const auto a = build_dag(rc.net, rc.scenario.requests, rc.depot, 22.0, Execution::serial);
        const auto b = build_dag(rc.net, rc.scenario.requests, rc.depot, 22.0, Execution::parallel);
        CHECK(a == b);
    }
}

}  // TEST_SUITE
