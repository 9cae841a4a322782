#include "samod/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <queue>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "json_util.hpp"

namespace samod {

using nlohmann::json;

RoadNetwork::RoadNetwork(std::vector<std::string> node_ids, std::span<const ArcSpec> arcs,
                         std::span<const std::string> stations)
    : ids_(std::move(node_ids))
{
    std::sort(ids_.begin(), ids_.end());
    if (auto dup = std::adjacent_find(ids_.begin(), ids_.end()); dup != ids_.end())
        throw ValidationError("duplicate node id \"" + *dup + "\"");

    arcs_.reserve(arcs.size());
    for (std::size_t a = 0; a < arcs.size(); ++a) {
        const ArcSpec& spec = arcs[a];
        auto tail = find(spec.tail);
        auto head = find(spec.head);
        if (!tail || !head) {
            throw ValidationError("arc " + std::to_string(a) + " references unknown node \"" +
                                  (tail ? spec.head : spec.tail) + "\"");
        }
        if (!(spec.travel_time_s > 0.0) || !std::isfinite(spec.travel_time_s))
            throw ValidationError("arc " + std::to_string(a) + " has non-positive travel_time_s");
        if (!(spec.distance_m > 0.0) || !std::isfinite(spec.distance_m))
            throw ValidationError("arc " + std::to_string(a) + " has non-positive distance_m");
        const Seconds t = std::llround(spec.travel_time_s);
        if (t < 1)
            throw ValidationError("arc " + std::to_string(a) + " travel time rounds to 0 s");
        arcs_.push_back(Arc{*tail, *head, t, spec.distance_m});
    }

    // Parallel arcs: the minimum (time, distance) representative survives.
    std::sort(arcs_.begin(), arcs_.end(), [](const Arc& x, const Arc& y) {
        return std::tie(x.tail, x.head, x.travel_time, x.distance) <
               std::tie(y.tail, y.head, y.travel_time, y.distance);
    });
    arcs_.erase(std::unique(arcs_.begin(), arcs_.end(),
                            [](const Arc& x, const Arc& y) {
                                return x.tail == y.tail && x.head == y.head;
                            }),
                arcs_.end());

    offsets_.assign(ids_.size() + 1, 0);
    for (const Arc& arc : arcs_)
        ++offsets_[arc.tail + 1];
    for (std::size_t n = 0; n < ids_.size(); ++n)
        offsets_[n + 1] += offsets_[n];

    for (const std::string& s : stations)
        stations_.push_back(index_of(s));
    std::sort(stations_.begin(), stations_.end());
    stations_.erase(std::unique(stations_.begin(), stations_.end()), stations_.end());
}

std::optional<NodeIndex> RoadNetwork::find(std::string_view id) const
{
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id)
        return std::nullopt;
    return static_cast<NodeIndex>(it - ids_.begin());
}

NodeIndex RoadNetwork::index_of(std::string_view id) const
{
    if (auto n = find(id))
        return *n;
    throw ValidationError("unknown node \"" + std::string(id) + "\"");
}

std::span<const Arc> RoadNetwork::out_arcs(NodeIndex n) const
{
    return {arcs_.data() + offsets_.at(n), arcs_.data() + offsets_.at(n + 1)};
}

bool RoadNetwork::is_station(NodeIndex n) const
{
    return std::binary_search(stations_.begin(), stations_.end(), n);
}

std::vector<NodeIndex> ShortestPathTree::path_to(NodeIndex target) const
{
    std::vector<NodeIndex> seq;
    if (!to.at(target).reachable)
        return seq;
    for (std::int64_t n = target; n >= 0; n = parent[static_cast<std::size_t>(n)])
        seq.push_back(static_cast<NodeIndex>(n));
    std::reverse(seq.begin(), seq.end());
    return seq;
}

ShortestPathTree fastest_paths_from(const RoadNetwork& net, NodeIndex source)
{
    const std::size_t n = net.node_count();
    ShortestPathTree tree;
    tree.source = source;
    tree.to.assign(n, PathResult{});
    tree.parent.assign(n, -1);
    std::vector<char> settled(n, 0);

    using Entry = std::tuple<Seconds, double, NodeIndex>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    tree.to[source] = PathResult{0, 0.0, true};
    queue.emplace(0, 0.0, source);

    // Only consulted when two labels tie exactly on (time, distance). The
    // head is appended to both: one parent may be an ancestor of the other.
    auto lex_less = [&](NodeIndex a, NodeIndex b, NodeIndex head) {
        auto pa = tree.path_to(a);
        auto pb = tree.path_to(b);
        pa.push_back(head);
        pb.push_back(head);
        return pa < pb;
    };

    while (!queue.empty()) {
        auto [t, d, u] = queue.top();
        queue.pop();
        if (settled[u])
            continue;
        settled[u] = 1;
        for (const Arc& arc : net.out_arcs(u)) {
            const NodeIndex v = arc.head;
            if (settled[v])
                continue;
            const Seconds ct = t + arc.travel_time;
            const double cd = d + arc.distance;
            PathResult& label = tree.to[v];
            bool better = !label.reachable || ct < label.time ||
                          (ct == label.time && cd < label.distance);
            if (!better && label.reachable && ct == label.time && cd == label.distance)
                better = lex_less(u, static_cast<NodeIndex>(tree.parent[v]), v);
            if (better) {
                const bool key_changed = !label.reachable || ct != label.time || cd != label.distance;
                label = PathResult{ct, cd, true};
                tree.parent[v] = u;
                if (key_changed)
                    queue.emplace(ct, cd, v);
            }
        }
    }
    return tree;
}

PathResult fastest_path(const RoadNetwork& net, NodeIndex from, NodeIndex to)
{
    if (from >= net.node_count() || to >= net.node_count())
        throw std::out_of_range("fastest_path: node index out of range");
    return fastest_paths_from(net, from).to[to];
}

PathTable::PathTable(const RoadNetwork& net, std::span<const NodeIndex> sources, Execution exec)
    : sources_(sources.begin(), sources.end()), width_(net.node_count())
{
    std::sort(sources_.begin(), sources_.end());
    sources_.erase(std::unique(sources_.begin(), sources_.end()), sources_.end());
    rows_.resize(sources_.size() * width_);

    const auto count = static_cast<std::int64_t>(sources_.size());
    auto run = [&](std::int64_t s) {
        auto tree = fastest_paths_from(net, sources_[static_cast<std::size_t>(s)]);
        std::copy(tree.to.begin(), tree.to.end(), rows_.begin() + s * static_cast<std::int64_t>(width_));
    };
    if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t s = 0; s < count; ++s)
            run(s);
    } else {
        for (std::int64_t s = 0; s < count; ++s)
            run(s);
    }
}

const PathResult& PathTable::operator()(NodeIndex from, NodeIndex to) const
{
    auto it = std::lower_bound(sources_.begin(), sources_.end(), from);
    if (it == sources_.end() || *it != from || to >= width_)
        throw std::out_of_range("PathTable: node " + std::to_string(from) + " is not a source");
    return rows_[static_cast<std::size_t>(it - sources_.begin()) * width_ + to];
}

bool PathTable::operator==(const PathTable& other) const
{
    if (sources_ != other.sources_ || width_ != other.width_)
        return false;
    for (std::size_t k = 0; k < rows_.size(); ++k) {
        const PathResult& a = rows_[k];
        const PathResult& b = other.rows_[k];
        if (a.reachable != b.reachable || a.time != b.time || a.distance != b.distance)
            return false;
    }
    return true;
}

namespace {

Detour combine(const PathResult& direct, const PathResult& to_station,
               const PathResult& from_station)
{
    if (!direct.reachable || !to_station.reachable || !from_station.reachable)
        return Detour{};
    return Detour{to_station.time + from_station.time - direct.time,
                  to_station.distance + from_station.distance - direct.distance, true};
}

}  // namespace

Detour detour_via_station(const RoadNetwork& net, NodeIndex from, NodeIndex to, NodeIndex station)
{
    if (!net.is_station(station))
        throw ValidationError("node " + net.id(station) + " is not a charging station");
    auto from_tree = fastest_paths_from(net, from);
    auto station_tree = fastest_paths_from(net, station);
    return combine(from_tree.to.at(to), from_tree.to.at(station), station_tree.to.at(to));
}

Detour detour_via_station(const PathTable& paths, NodeIndex from, NodeIndex to, NodeIndex station)
{
    return combine(paths(from, to), paths(from, station), paths(station, to));
}

namespace {

std::string node_id_from(const json& v, const std::string& field)
{
    if (v.is_string())
        return v.get<std::string>();
    if (v.is_number_integer())
        return std::to_string(v.get<std::int64_t>());
    if (v.is_object() && v.contains("id"))
        return node_id_from(v.at("id"), field + ".id");
    throw ParseError("expected a node id at " + field, 0, field);
}

}  // namespace

RoadNetwork load_network(std::istream& in)
{
    const json doc = detail::parse_json(in);
    if (!doc.is_object())
        throw ParseError("network document must be a JSON object", 1);

    const json& nodes = detail::require(doc, "nodes", "");
    const json& arcs = detail::require(doc, "arcs", "");
    if (!nodes.is_array())
        throw ParseError("\"nodes\" must be an array", 0, "nodes");
    if (!arcs.is_array())
        throw ParseError("\"arcs\" must be an array", 0, "arcs");

    std::vector<std::string> ids;
    ids.reserve(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k)
        ids.push_back(node_id_from(nodes[k], "nodes[" + std::to_string(k) + "]"));

    std::vector<ArcSpec> specs;
    specs.reserve(arcs.size());
    for (std::size_t k = 0; k < arcs.size(); ++k) {
        const std::string where = "arcs[" + std::to_string(k) + "]";
        const json& arc = arcs[k];
        if (!arc.is_object())
            throw ParseError(where + " must be an object", 0, where);
        specs.push_back(ArcSpec{
            node_id_from(detail::require(arc, "tail", where), where + ".tail"),
            node_id_from(detail::require(arc, "head", where), where + ".head"),
            detail::number(arc, "travel_time_s", where),
            detail::number(arc, "distance_m", where),
        });
    }

    std::vector<std::string> stations;
    if (doc.contains("stations")) {
        const json& list = doc.at("stations");
        if (!list.is_array())
            throw ParseError("\"stations\" must be an array", 0, "stations");
        for (std::size_t k = 0; k < list.size(); ++k)
            stations.push_back(node_id_from(list[k], "stations[" + std::to_string(k) + "]"));
    }
    return RoadNetwork(std::move(ids), specs, stations);
}

RoadNetwork load_network(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open network file " + path.string());
    return load_network(in);
}

}  // namespace samod
