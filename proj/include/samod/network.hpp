#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "samod/types.hpp"

namespace samod {

/// Dense node handle. Handles are assigned in lexicographic order of the
/// node identifiers, so comparing handles compares identifiers.
using NodeIndex = std::uint32_t;

struct Arc {
    NodeIndex tail = 0;
    NodeIndex head = 0;
    Seconds travel_time = 0;
    double distance = 0.0;  // meters
};

/// Arc as it appears in an input document, before node resolution.
struct ArcSpec {
    std::string tail;
    std::string head;
    double travel_time_s = 0.0;
    double distance_m = 0.0;
};

/// Directed road graph with designated charging stations. Immutable once
/// constructed; the constructor enforces every structural invariant.
class RoadNetwork {
public:
    RoadNetwork() = default;

    /// Throws ValidationError on duplicate ids, dangling arc endpoints,
    /// non-positive arc costs or stations that are not nodes. Parallel arcs
    /// collapse to the one with minimum travel time (then minimum distance).
    RoadNetwork(std::vector<std::string> node_ids, std::span<const ArcSpec> arcs,
                std::span<const std::string> stations);

    std::size_t node_count() const noexcept { return ids_.size(); }
    const std::vector<std::string>& node_ids() const noexcept { return ids_; }
    const std::string& id(NodeIndex n) const { return ids_.at(n); }

    std::optional<NodeIndex> find(std::string_view id) const;
    /// Throws ValidationError naming the id when absent.
    NodeIndex index_of(std::string_view id) const;

    const std::vector<Arc>& arcs() const noexcept { return arcs_; }
    /// Outgoing arcs of `n`, sorted by head.
    std::span<const Arc> out_arcs(NodeIndex n) const;

    const std::vector<NodeIndex>& stations() const noexcept { return stations_; }
    bool is_station(NodeIndex n) const;

private:
    std::vector<std::string> ids_;
    std::vector<Arc> arcs_;  // sorted by (tail, head)
    std::vector<std::size_t> offsets_;
    std::vector<NodeIndex> stations_;
};

struct PathResult {
    Seconds time = 0;
    double distance = 0.0;
    bool reachable = false;
};

/// Single-source result: one entry per node plus the predecessor tree of
/// the canonical (time, distance, lexicographic) fastest paths.
struct ShortestPathTree {
    NodeIndex source = 0;
    std::vector<PathResult> to;
    std::vector<std::int64_t> parent;  // -1 for source and unreachable nodes

    std::vector<NodeIndex> path_to(NodeIndex target) const;
};

/// Dijkstra on (time, distance) with exact lexicographic tie-breaking on
/// the node sequence.
ShortestPathTree fastest_paths_from(const RoadNetwork& net, NodeIndex source);

PathResult fastest_path(const RoadNetwork& net, NodeIndex from, NodeIndex to);

/// Fastest paths from a set of sources, one Dijkstra run per source.
class PathTable {
public:
    PathTable() = default;
    PathTable(const RoadNetwork& net, std::span<const NodeIndex> sources,
              Execution exec = Execution::parallel);

    /// Throws std::out_of_range when `from` was not a requested source.
    const PathResult& operator()(NodeIndex from, NodeIndex to) const;
    std::span<const NodeIndex> sources() const noexcept { return sources_; }

    bool operator==(const PathTable&) const;

private:
    std::vector<NodeIndex> sources_;  // sorted, unique
    std::size_t width_ = 0;
    std::vector<PathResult> rows_;
};

/// Increment of the path d_i -> c -> o_j over the direct fastest path.
struct Detour {
    Seconds time = 0;
    double distance = 0.0;
    bool feasible = false;
};

Detour detour_via_station(const RoadNetwork& net, NodeIndex from, NodeIndex to,
                          NodeIndex station);
Detour detour_via_station(const PathTable& paths, NodeIndex from, NodeIndex to,
                          NodeIndex station);

/// JSON network document; see docs/data-formats.md.
RoadNetwork load_network(std::istream& in);
RoadNetwork load_network(const std::filesystem::path& path);

}  // namespace samod
