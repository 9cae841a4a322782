#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "samod/network.hpp"
#include "samod/types.hpp"

namespace samod {

struct TravelRequest {
    int id = 0;  // 1..I after loading
    NodeIndex origin = 0;
    NodeIndex destination = 0;
    Seconds time = 0;  // seconds since midnight
};

struct DepotSpec {
    NodeIndex node = 0;
    Seconds day_start = 0;
    Seconds day_end = kSecondsPerDay;
};

/// Reads the request table (origin_node, destination_node, request_time_s).
/// Rows are stably sorted by time and renumbered 1..I.
std::vector<TravelRequest> load_requests(std::istream& in, const RoadNetwork& net);
std::vector<TravelRequest> load_requests(const std::filesystem::path& path, const RoadNetwork& net);

/// Energy that fits in the idle part of a transition window at charging
/// power `p_ch_kw`; zero when the window cannot absorb the detour.
double charge_bound_kwh(Seconds available, Seconds travel, Seconds detour, double p_ch_kw);

/// The request DAG over I+ = {0, 1..I, I+1}, where 0 and I+1 are the depot
/// start and end pseudo-requests, with every quantity the optimization
/// model consumes precomputed. Node 0 departs at day_start, node I+1 is
/// reached by day_end; both have zero serve time.
///
/// Pair quantities (t_fp, d_fp, t_ava, x_mask) are stored for all (i, j) in
/// I+ x I+; the diagonal of t_fp/d_fp holds the serve path of request i.
/// Transitions into node 0, out of node I+1 and self loops are never
/// feasible.
struct DagInstance {
    std::vector<std::string> node_ids;  // network ids, indexed by NodeIndex
    std::vector<TravelRequest> requests;  // requests[i - 1] is request i
    DepotSpec depot;
    std::vector<NodeIndex> stations;
    double charging_power_kw = 0.0;

    std::vector<Seconds> fp_time;
    std::vector<double> fp_distance;
    std::vector<char> fp_reachable;
    std::vector<Seconds> avail;
    std::vector<char> arc_mask;

    // (i, c): d_i -> station c;  (c, j): station c -> o_j
    std::vector<PathResult> leg_to_station;
    std::vector<PathResult> leg_from_station;

    // (i, j, c)
    std::vector<Detour> detours;
    std::vector<char> station_mask;
    std::vector<double> charge_bound;

    int request_count() const noexcept { return static_cast<int>(requests.size()); }
    int node_count() const noexcept { return request_count() + 2; }
    int end_node() const noexcept { return request_count() + 1; }
    int station_count() const noexcept { return static_cast<int>(stations.size()); }
    bool is_request(int i) const noexcept { return i >= 1 && i <= request_count(); }

    const TravelRequest& request(int i) const { return requests.at(static_cast<std::size_t>(i - 1)); }
    NodeIndex origin(int i) const;
    NodeIndex destination(int i) const;
    /// t_i; the depot nodes use day_start and day_end.
    Seconds start_time(int i) const;
    Seconds serve_time(int i) const { return t_fp(i, i); }
    /// Moment the vehicle is free after node i: t_i + t_fp(i, i).
    Seconds release_time(int i) const { return start_time(i) + serve_time(i); }

    Seconds t_fp(int i, int j) const { return fp_time[pair(i, j)]; }
    double d_fp(int i, int j) const { return fp_distance[pair(i, j)]; }
    bool reachable(int i, int j) const { return fp_reachable[pair(i, j)] != 0; }
    Seconds t_ava(int i, int j) const { return avail[pair(i, j)]; }
    bool x_mask(int i, int j) const { return arc_mask[pair(i, j)] != 0; }

    const Detour& detour(int i, int j, int c) const { return detours[triple(i, j, c)]; }
    bool s_mask(int i, int j, int c) const { return station_mask[triple(i, j, c)] != 0; }
    double c_hat(int i, int j, int c) const { return charge_bound[triple(i, j, c)]; }

    const PathResult& to_station(int i, int c) const { return leg_to_station[static_cast<std::size_t>(i * station_count() + c)]; }
    const PathResult& from_station(int c, int j) const { return leg_from_station[static_cast<std::size_t>(c * node_count() + j)]; }

    /// Feasible transitions (x_mask true) in (i, j) order.
    std::vector<std::pair<int, int>> arcs() const;

    std::size_t pair(int i, int j) const
    {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(node_count()) + static_cast<std::size_t>(j);
    }
    std::size_t triple(int i, int j, int c) const
    {
        return pair(i, j) * static_cast<std::size_t>(station_count()) + static_cast<std::size_t>(c);
    }
};

/// t_j - t_i - t_fp(i, i), the slack between finishing i and starting j.
Seconds available_time(const DagInstance& inst, int i, int j);

/// Builds the DAG. Throws BuildError naming the request when a request
/// endpoint is unreachable from or to the depot.
DagInstance build_dag(const RoadNetwork& net, std::span<const TravelRequest> requests,
                      const DepotSpec& depot, double p_ch_kw, Execution exec = Execution::parallel);

/// Self-describing JSON dump; `read_instance` restores an identical instance.
void write_instance(std::ostream& out, const DagInstance& inst);
DagInstance read_instance(std::istream& in);

bool operator==(const DagInstance& a, const DagInstance& b);

}  // namespace samod
