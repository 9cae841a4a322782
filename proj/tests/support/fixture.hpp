#pragma once

// Fixture loading, the duck-curve batch and golden-file comparison, shared
// by the unit tests, the acceptance binary and the benchmarks.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "random_instances.hpp"
#include "samod/instance.hpp"
#include "samod/network.hpp"
#include "samod/scenario.hpp"

#ifndef SAMOD_SOURCE_DIR
#error "SAMOD_SOURCE_DIR must point at the source tree"
#endif

namespace samod::testing {

inline std::filesystem::path source_dir() { return SAMOD_SOURCE_DIR; }
inline std::filesystem::path fixture_dir() { return source_dir() / "data" / "fixture"; }
inline std::filesystem::path golden_dir() { return source_dir() / "tests" / "golden"; }

struct FixtureWorld {
    RoadNetwork net;
    RunConfig config;
    DepotSpec depot;
    Scenario base;  // all fixture requests, fixture fleet
};

inline FixtureWorld load_fixture()
{
    const auto dir = fixture_dir();
    FixtureWorld w;
    w.net = load_network(dir / "network.json");
    const std::vector<std::filesystem::path> docs{dir / "fleet.json", dir / "fare.json"};
    w.config = load_run_config(docs);
    w.depot.node = w.net.index_of(w.config.depot_node);
    w.depot.day_start = w.config.day_start;
    w.depot.day_end = w.config.day_end;
    w.base.fleet = w.config.fleet;
    w.base.fares = w.config.fares;
    w.base.prices = load_price_series(dir / "prices.csv");
    w.base.solar = load_solar_profile(dir / "solar.json");
    w.base.requests = load_requests(dir / "requests.csv", w.net);
    return w;
}

/// One vehicle on the fixture network under duck-curve prices, with one
/// request in each three-hour slot of the day so that transition windows
/// are short enough to sit inside single price bands.
inline Scenario duck_scenario(const FixtureWorld& w, std::uint64_t seed, const FleetSpec& fleet)
{
    Rng rng(seed);
    Scenario sc = w.base;
    sc.id = static_cast<int>(seed);
    sc.fleet = fleet;
    sc.fleet.vehicles = 1;
    sc.prices = PriceSeries::duck_curve();
    sc.requests.clear();
    const int nodes = static_cast<int>(w.net.node_count());
    for (int slot = 0; slot < 8; ++slot) {
        TravelRequest r;
        r.origin = static_cast<NodeIndex>(rng.uniform_int(0, nodes - 1));
        do
            r.destination = static_cast<NodeIndex>(rng.uniform_int(0, nodes - 1));
        while (r.destination == r.origin);
        r.time = slot * 10800 + rng.uniform_int(1800, 9000);
        sc.requests.push_back(r);
    }
    for (std::size_t k = 0; k < sc.requests.size(); ++k)
        sc.requests[k].id = static_cast<int>(k + 1);
    return sc;
}

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Compares `text` with tests/golden/<name>. With SAMOD_UPDATE_GOLDEN set
/// the file is (re)written instead and the comparison passes.
inline bool matches_golden(const std::string& name, const std::string& text)
{
    const auto path = golden_dir() / name;
    if (std::getenv("SAMOD_UPDATE_GOLDEN")) {
        std::filesystem::create_directories(path.parent_path());
        std::ofstream(path, std::ios::binary) << text;
        return true;
    }
    return std::filesystem::exists(path) && read_text(path) == text;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("samod_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace samod::testing
