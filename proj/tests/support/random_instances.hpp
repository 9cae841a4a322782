#pragma once

// Hand-rolled generators for property tests, the acceptance suite and the
// benchmarks. Everything is a pure function of the seed.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "samod/instance.hpp"
#include "samod/network.hpp"
#include "samod/scenario.hpp"

namespace samod::testing {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
    bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

/// Bidirectional g x g grid with random arc times (s) and speeds, plus
/// `stations` distinct station nodes.
inline RoadNetwork grid_network(Rng& rng, int g, int stations, int min_s = 120, int max_s = 600)
{
    std::vector<std::string> ids;
    for (int r = 0; r < g; ++r)
        for (int c = 0; c < g; ++c)
            ids.push_back(fmt::format("n{}_{}", r, c));
    std::vector<ArcSpec> arcs;
    auto link = [&](int a, int b) {
        const double t = rng.uniform_int(min_s, max_s);
        const double speed = rng.uniform(7.0, 14.0);
        const double d = std::round(t * speed);
        arcs.push_back({ids[static_cast<std::size_t>(a)], ids[static_cast<std::size_t>(b)], t, d});
        arcs.push_back({ids[static_cast<std::size_t>(b)], ids[static_cast<std::size_t>(a)], t, d});
    };
    for (int r = 0; r < g; ++r)
        for (int c = 0; c < g; ++c) {
            if (c + 1 < g)
                link(r * g + c, r * g + c + 1);
            if (r + 1 < g)
                link(r * g + c, (r + 1) * g + c);
        }
    std::vector<std::string> st;
    std::vector<int> order(static_cast<std::size_t>(g * g));
    for (int k = 0; k < g * g; ++k)
        order[static_cast<std::size_t>(k)] = k;
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (int k = 0; k < stations && k < g * g; ++k)
        st.push_back(ids[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])]);
    return RoadNetwork(ids, arcs, st);
}

/// Requests with start times drawn from [t0, t1), sorted by time.
inline std::vector<TravelRequest> random_requests(Rng& rng, const RoadNetwork& net, int n, Seconds t0, Seconds t1)
{
    std::vector<TravelRequest> out;
    const int nodes = static_cast<int>(net.node_count());
    for (int r = 0; r < n; ++r) {
        TravelRequest q;
        q.origin = static_cast<NodeIndex>(rng.uniform_int(0, nodes - 1));
        do
            q.destination = static_cast<NodeIndex>(rng.uniform_int(0, nodes - 1));
        while (q.destination == q.origin);
        q.time = rng.uniform_int(static_cast<int>(t0), static_cast<int>(t1) - 1);
        out.push_back(q);
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
    for (std::size_t r = 0; r < out.size(); ++r)
        out[r].id = static_cast<int>(r) + 1;
    return out;
}

/// Random step prices on [0, 86400) with `pieces` breakpoints, some negative.
inline PriceSeries random_prices(Rng& rng, int pieces)
{
    std::vector<Seconds> times{0};
    while (static_cast<int>(times.size()) < pieces) {
        const Seconds t = 300 * rng.uniform_int(1, 287);
        if (std::find(times.begin(), times.end(), t) == times.end())
            times.push_back(t);
    }
    std::sort(times.begin(), times.end());
    std::vector<StepFunction::Breakpoint> pts;
    for (Seconds t : times)
        pts.push_back({t, std::round(rng.uniform(-0.05, 0.6) * 1000.0) / 1000.0});
    return PriceSeries(std::move(pts));
}

struct RandomCase {
    RoadNetwork net;
    DepotSpec depot;
    Scenario scenario;
    DagInstance inst;
};

struct CaseShape {
    int grid = 3;
    int max_requests = 5;
    int max_vehicles = 2;
    int max_stations = 2;
    Seconds window_start = 6 * 3600;
    Seconds window_end = 12 * 3600;
};

/// Small random instance with tight energy so stations matter: short
/// batteries, high consumption, random prices, solar and V2G switches.
inline RandomCase random_case(std::uint64_t seed, const CaseShape& shape = {})
{
    Rng rng(seed);
    RandomCase rc;
    rc.net = grid_network(rng, shape.grid, rng.uniform_int(0, shape.max_stations));
    rc.depot.node = static_cast<NodeIndex>(rng.uniform_int(0, static_cast<int>(rc.net.node_count()) - 1));
    rc.depot.day_start = shape.window_start - 3600;
    rc.depot.day_end = shape.window_end + 3 * 3600;
    Scenario& sc = rc.scenario;
    sc.id = static_cast<int>(seed % 100000);
    const int n = rng.uniform_int(0, shape.max_requests);
    sc.requests = random_requests(rng, rc.net, n, shape.window_start, shape.window_end);
    FleetSpec& f = sc.fleet;
    f.vehicles = rng.uniform_int(1, shape.max_vehicles);
    f.battery_max_kwh = rng.uniform_int(2, 12);
    f.battery_initial_kwh = std::round(rng.uniform(0.2, 0.9) * f.battery_max_kwh * 10.0) / 10.0;
    f.consumption_kwh_per_km = rng.uniform(0.15, 0.4);
    f.charging_power_kw = rng.coin() ? 22.0 : 8.0;
    f.solar_enabled = rng.coin();
    f.allow_v2g = rng.coin(0.7);
    sc.prices = random_prices(rng, rng.uniform_int(1, 8));
    sc.solar = SolarProfile::trapezoid(6 * 3600, 18 * 3600, rng.uniform(0.0, 6.0));
    rc.inst = build_dag(rc.net, sc.requests, rc.depot, f.charging_power_kw, Execution::serial);
    return rc;
}

}  // namespace samod::testing
