#include "samod/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "csv.hpp"
#include "json_util.hpp"

namespace samod {

using nlohmann::json;

std::vector<TravelRequest> load_requests(std::istream& in, const RoadNetwork& net)
{
    const auto table = detail::read_csv(in);
    const std::size_t col_o = table.column("origin_node");
    const std::size_t col_d = table.column("destination_node");
    const std::size_t col_t = table.column("request_time_s");

    std::vector<TravelRequest> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        const std::string& o = row.cells[col_o];
        const std::string& d = row.cells[col_d];
        const std::int64_t t = detail::parse_int(row.cells[col_t], row.line, "request_time_s");
        if (o == d)
            throw ValidationError("line " + std::to_string(row.line) + ": origin equals destination (" + o + ")");
        if (t < 0 || t >= kSecondsPerDay)
            throw ValidationError("line " + std::to_string(row.line) + ": request_time_s " + std::to_string(t) +
                                  " outside [0, 86400)");
        auto on = net.find(o);
        auto dn = net.find(d);
        if (!on || !dn)
            throw ValidationError("line " + std::to_string(row.line) + ": unknown node \"" + (on ? d : o) + "\"");
        out.push_back(TravelRequest{0, *on, *dn, t});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const TravelRequest& a, const TravelRequest& b) { return a.time < b.time; });
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k].id = static_cast<int>(k + 1);
    return out;
}

std::vector<TravelRequest> load_requests(const std::filesystem::path& path, const RoadNetwork& net)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open requests file " + path.string());
    return load_requests(in, net);
}

double charge_bound_kwh(Seconds available, Seconds travel, Seconds detour, double p_ch_kw)
{
    const Seconds idle = available - travel - detour;
    if (idle <= 0)
        return 0.0;
    return static_cast<double>(idle) * p_ch_kw / 3600.0;
}

NodeIndex DagInstance::origin(int i) const
{
    return is_request(i) ? request(i).origin : depot.node;
}

NodeIndex DagInstance::destination(int i) const
{
    return is_request(i) ? request(i).destination : depot.node;
}

Seconds DagInstance::start_time(int i) const
{
    if (i == 0)
        return depot.day_start;
    if (i == end_node())
        return depot.day_end;
    return request(i).time;
}

std::vector<std::pair<int, int>> DagInstance::arcs() const
{
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < node_count(); ++i)
        for (int j = 0; j < node_count(); ++j)
            if (x_mask(i, j))
                out.emplace_back(i, j);
    return out;
}

Seconds available_time(const DagInstance& inst, int i, int j)
{
    return inst.start_time(j) - inst.start_time(i) - inst.serve_time(i);
}

namespace {

bool transition_allowed(const DagInstance& inst, int i, int j)
{
    return i != j && j != 0 && i != inst.end_node();
}

}  // namespace

DagInstance build_dag(const RoadNetwork& net, std::span<const TravelRequest> requests,
                      const DepotSpec& depot, double p_ch_kw, Execution exec)
{
    if (!(p_ch_kw > 0.0))
        throw BuildError("charging power must be positive");
    if (depot.day_start >= depot.day_end)
        throw BuildError("depot day_start must precede day_end");
    if (depot.node >= net.node_count())
        throw BuildError("depot node out of range");

    DagInstance inst;
    inst.node_ids = net.node_ids();
    inst.requests.assign(requests.begin(), requests.end());
    inst.depot = depot;
    inst.stations = net.stations();
    inst.charging_power_kw = p_ch_kw;

    const int n = inst.node_count();
    const int ns = inst.station_count();

    std::vector<NodeIndex> sources{depot.node};
    for (const TravelRequest& r : inst.requests) {
        sources.push_back(r.origin);
        sources.push_back(r.destination);
    }
    sources.insert(sources.end(), inst.stations.begin(), inst.stations.end());
    const PathTable paths(net, sources, exec);

    for (const TravelRequest& r : inst.requests) {
        auto name = [&](NodeIndex x) { return "\"" + net.id(x) + "\""; };
        const std::string who = "request " + std::to_string(r.id);
        if (r.origin == r.destination)
            throw BuildError(who + ": origin equals destination");
        if (!paths(depot.node, r.origin).reachable)
            throw BuildError(who + ": origin " + name(r.origin) + " unreachable from depot");
        if (!paths(r.origin, r.destination).reachable)
            throw BuildError(who + ": destination " + name(r.destination) + " unreachable from origin");
        if (!paths(r.destination, depot.node).reachable)
            throw BuildError(who + ": depot unreachable from destination " + name(r.destination));
    }

    const auto nn = static_cast<std::size_t>(n);
    inst.fp_time.assign(nn * nn, 0);
    inst.fp_distance.assign(nn * nn, 0.0);
    inst.fp_reachable.assign(nn * nn, 0);
    inst.avail.assign(nn * nn, 0);
    inst.arc_mask.assign(nn * nn, 0);
    inst.leg_to_station.assign(nn * static_cast<std::size_t>(ns), PathResult{});
    inst.leg_from_station.assign(nn * static_cast<std::size_t>(ns), PathResult{});
    inst.detours.assign(nn * nn * static_cast<std::size_t>(ns), Detour{});
    inst.station_mask.assign(inst.detours.size(), 0);
    inst.charge_bound.assign(inst.detours.size(), 0.0);

    // Diagonal first: serve times feed every t_ava.
    for (int i = 0; i < n; ++i) {
        const PathResult& p = paths(inst.origin(i), inst.destination(i));
        inst.fp_time[inst.pair(i, i)] = p.time;
        inst.fp_distance[inst.pair(i, i)] = p.distance;
        inst.fp_reachable[inst.pair(i, i)] = p.reachable ? 1 : 0;
        inst.avail[inst.pair(i, i)] = -p.time;
        for (int c = 0; c < ns; ++c) {
            inst.leg_to_station[static_cast<std::size_t>(i * ns + c)] = paths(inst.destination(i), inst.stations[static_cast<std::size_t>(c)]);
            inst.leg_from_station[static_cast<std::size_t>(c * n + i)] = paths(inst.stations[static_cast<std::size_t>(c)], inst.origin(i));
        }
    }

    auto fill_row = [&](int i) {
        for (int j = 0; j < n; ++j) {
            if (i == j)
                continue;
            const std::size_t ij = inst.pair(i, j);
            const PathResult& p = paths(inst.destination(i), inst.origin(j));
            inst.fp_time[ij] = p.time;
            inst.fp_distance[ij] = p.distance;
            inst.fp_reachable[ij] = p.reachable ? 1 : 0;
            inst.avail[ij] = available_time(inst, i, j);
            const bool feasible = transition_allowed(inst, i, j) && p.reachable && p.time <= inst.avail[ij];
            inst.arc_mask[ij] = feasible ? 1 : 0;
            for (int c = 0; c < ns; ++c) {
                const std::size_t ijc = inst.triple(i, j, c);
                const PathResult& to = inst.to_station(i, c);
                const PathResult& from = inst.from_station(c, j);
                if (!p.reachable || !to.reachable || !from.reachable)
                    continue;
                const Detour d{to.time + from.time - p.time, to.distance + from.distance - p.distance, true};
                inst.detours[ijc] = d;
                if (feasible && p.time + d.time <= inst.avail[ij]) {
                    inst.station_mask[ijc] = 1;
                    inst.charge_bound[ijc] = charge_bound_kwh(inst.avail[ij], p.time, d.time, p_ch_kw);
                }
            }
        }
    };

    if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < n; ++i)
            fill_row(i);
    } else {
        for (int i = 0; i < n; ++i)
            fill_row(i);
    }
    return inst;
}

namespace {

json path_json(const PathResult& p)
{
    return json::array({p.time, p.distance, p.reachable});
}

PathResult path_from(const json& v)
{
    return PathResult{v.at(0).get<Seconds>(), v.at(1).get<double>(), v.at(2).get<bool>()};
}

template <typename T>
std::vector<T> vec_from(const json& doc, const char* key)
{
    return detail::require(doc, key, "").get<std::vector<T>>();
}

}  // namespace

void write_instance(std::ostream& out, const DagInstance& inst)
{
    json doc;
    doc["format"] = "samod-instance";
    doc["version"] = 1;
    doc["node_ids"] = inst.node_ids;
    json reqs = json::array();
    for (const TravelRequest& r : inst.requests)
        reqs.push_back({{"id", r.id},
                        {"origin", inst.node_ids.at(r.origin)},
                        {"destination", inst.node_ids.at(r.destination)},
                        {"time_s", r.time}});
    doc["requests"] = std::move(reqs);
    doc["depot"] = {{"node", inst.node_ids.at(inst.depot.node)},
                    {"day_start_s", inst.depot.day_start},
                    {"day_end_s", inst.depot.day_end}};
    json st = json::array();
    for (NodeIndex s : inst.stations)
        st.push_back(inst.node_ids.at(s));
    doc["stations"] = std::move(st);
    doc["charging_power_kw"] = inst.charging_power_kw;

    doc["t_fp"] = inst.fp_time;
    doc["d_fp"] = inst.fp_distance;
    std::vector<int> reach(inst.fp_reachable.begin(), inst.fp_reachable.end());
    doc["reachable"] = reach;
    doc["t_ava"] = inst.avail;
    std::vector<int> xm(inst.arc_mask.begin(), inst.arc_mask.end());
    doc["x_mask"] = xm;
    json to = json::array(), from = json::array();
    for (const PathResult& p : inst.leg_to_station)
        to.push_back(path_json(p));
    for (const PathResult& p : inst.leg_from_station)
        from.push_back(path_json(p));
    doc["leg_to_station"] = std::move(to);
    doc["leg_from_station"] = std::move(from);
    json det = json::array();
    for (const Detour& d : inst.detours)
        det.push_back(json::array({d.time, d.distance, d.feasible}));
    doc["detour"] = std::move(det);
    std::vector<int> sm(inst.station_mask.begin(), inst.station_mask.end());
    doc["s_mask"] = sm;
    doc["c_hat"] = inst.charge_bound;
    out << doc.dump(1) << '\n';
}

DagInstance read_instance(std::istream& in)
{
    const json doc = detail::parse_json(in);
    if (!doc.is_object() || doc.value("format", "") != "samod-instance")
        throw ParseError("not a samod instance document", 1, "format");
    try {
        DagInstance inst;
        inst.node_ids = vec_from<std::string>(doc, "node_ids");
        const RoadNetwork names(inst.node_ids, {}, {});
        for (const json& r : detail::require(doc, "requests", ""))
            inst.requests.push_back(TravelRequest{r.at("id").get<int>(),
                                                  names.index_of(r.at("origin").get<std::string>()),
                                                  names.index_of(r.at("destination").get<std::string>()),
                                                  r.at("time_s").get<Seconds>()});
        const json& dep = detail::require(doc, "depot", "");
        inst.depot = DepotSpec{names.index_of(dep.at("node").get<std::string>()),
                               dep.at("day_start_s").get<Seconds>(), dep.at("day_end_s").get<Seconds>()};
        for (const auto& s : vec_from<std::string>(doc, "stations"))
            inst.stations.push_back(names.index_of(s));
        inst.charging_power_kw = detail::number(doc, "charging_power_kw", "");
        inst.fp_time = vec_from<Seconds>(doc, "t_fp");
        inst.fp_distance = vec_from<double>(doc, "d_fp");
        for (int v : vec_from<int>(doc, "reachable"))
            inst.fp_reachable.push_back(static_cast<char>(v));
        inst.avail = vec_from<Seconds>(doc, "t_ava");
        for (int v : vec_from<int>(doc, "x_mask"))
            inst.arc_mask.push_back(static_cast<char>(v));
        for (const json& p : detail::require(doc, "leg_to_station", ""))
            inst.leg_to_station.push_back(path_from(p));
        for (const json& p : detail::require(doc, "leg_from_station", ""))
            inst.leg_from_station.push_back(path_from(p));
        for (const json& d : detail::require(doc, "detour", ""))
            inst.detours.push_back(Detour{d.at(0).get<Seconds>(), d.at(1).get<double>(), d.at(2).get<bool>()});
        for (int v : vec_from<int>(doc, "s_mask"))
            inst.station_mask.push_back(static_cast<char>(v));
        inst.charge_bound = vec_from<double>(doc, "c_hat");

        const auto nn = static_cast<std::size_t>(inst.node_count());
        const auto ns = static_cast<std::size_t>(inst.station_count());
        if (inst.fp_time.size() != nn * nn || inst.fp_distance.size() != nn * nn ||
            inst.fp_reachable.size() != nn * nn || inst.avail.size() != nn * nn ||
            inst.arc_mask.size() != nn * nn || inst.leg_to_station.size() != nn * ns ||
            inst.leg_from_station.size() != nn * ns || inst.detours.size() != nn * nn * ns ||
            inst.station_mask.size() != nn * nn * ns || inst.charge_bound.size() != nn * nn * ns)
            throw ParseError("instance tables do not match request and station counts");
        return inst;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed instance document: ") + e.what());
    } catch (const ValidationError& e) {
        throw ParseError(std::string("malformed instance document: ") + e.what());
    }
}

namespace {

bool same(const PathResult& a, const PathResult& b)
{
    return a.time == b.time && a.distance == b.distance && a.reachable == b.reachable;
}

bool same(const Detour& a, const Detour& b)
{
    return a.time == b.time && a.distance == b.distance && a.feasible == b.feasible;
}

template <typename T>
bool same_all(const std::vector<T>& a, const std::vector<T>& b)
{
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](const T& x, const T& y) { return same(x, y); });
}

}  // namespace

bool operator==(const DagInstance& a, const DagInstance& b)
{
    auto same_req = [](const TravelRequest& x, const TravelRequest& y) {
        return x.id == y.id && x.origin == y.origin && x.destination == y.destination && x.time == y.time;
    };
    return a.node_ids == b.node_ids && a.requests.size() == b.requests.size() &&
           std::equal(a.requests.begin(), a.requests.end(), b.requests.begin(), same_req) &&
           a.depot.node == b.depot.node && a.depot.day_start == b.depot.day_start &&
           a.depot.day_end == b.depot.day_end && a.stations == b.stations &&
           a.charging_power_kw == b.charging_power_kw && a.fp_time == b.fp_time &&
           a.fp_distance == b.fp_distance && a.fp_reachable == b.fp_reachable && a.avail == b.avail &&
           a.arc_mask == b.arc_mask && same_all(a.leg_to_station, b.leg_to_station) &&
           same_all(a.leg_from_station, b.leg_from_station) && same_all(a.detours, b.detours) &&
           a.station_mask == b.station_mask && a.charge_bound == b.charge_bound;
}

}  // namespace samod
