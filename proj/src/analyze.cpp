#include "samod/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

namespace samod {

bool ValidationReport::has(std::string_view fam) const
{
    return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.family == fam; });
}

std::vector<std::string> ValidationReport::families() const
{
    std::vector<std::string> out;
    for (const Violation& v : violations)
        if (std::find(out.begin(), out.end(), v.family) == out.end())
            out.push_back(v.family);
    return out;
}

namespace {

// Battery drain of leg i -> j (via station c when c >= 0), including the
// serve path of j.
double leg_drain(const DagInstance& inst, const FleetSpec& fleet, int i, int j, int c)
{
    double m = inst.d_fp(i, j) + inst.d_fp(j, j);
    if (c >= 0)
        m += inst.to_station(i, c).distance + inst.from_station(c, j).distance - inst.d_fp(i, j);
    return m / 1000.0 * fleet.consumption_kwh_per_km;
}

}  // namespace

ValidationReport validate(const Solution& sol, const DagInstance& inst, const Scenario& sc, double tol)
{
    ValidationReport rep;
    auto fail = [&](std::string_view fam, std::string detail) { rep.violations.push_back({std::string(fam), std::move(detail)}); };
    const FleetSpec& fleet = sc.fleet;
    const int K = fleet.vehicles;
    const int last = inst.end_node();
    const int ns = inst.station_count();
    auto node_ok = [&](int n) { return n >= 0 && n <= last; };

    std::set<Transition> used;
    for (const Transition& t : sol.x) {
        if (!node_ok(t.i) || !node_ok(t.j) || t.k < 0 || t.k >= K) {
            fail(family::time_window, fmt::format("transition ({}, {}) of vehicle {} does not exist", t.i, t.j, t.k));
            continue;
        }
        if (!inst.x_mask(t.i, t.j))
            fail(family::time_window, fmt::format("vehicle {} cannot make {} -> {} in time", t.k, t.i, t.j));
        used.insert(t);
    }

    std::map<Transition, int> station_of;
    for (const StationVisit& v : sol.s) {
        if (!node_ok(v.i) || !node_ok(v.j) || v.k < 0 || v.k >= K || v.c < 0 || v.c >= ns) {
            fail(family::station_window, fmt::format("station visit ({}, {}, {}, {}) does not exist", v.i, v.j, v.c, v.k));
            continue;
        }
        const Transition t{v.i, v.j, v.k};
        if (!used.count(t))
            fail(family::station_visit, fmt::format("vehicle {} visits station {} on unused {} -> {}", v.k, v.c, v.i, v.j));
        if (!inst.s_mask(v.i, v.j, v.c))
            fail(family::station_window, fmt::format("no time to visit station {} on {} -> {}", v.c, v.i, v.j));
        if (!station_of.emplace(t, v.c).second)
            fail(family::station_visit, fmt::format("vehicle {} visits two stations on {} -> {}", v.k, v.i, v.j));
    }

    for (const auto& [v, amount] : sol.charge) {
        if (!node_ok(v.i) || !node_ok(v.j) || v.c < 0 || v.c >= ns || v.k < 0 || v.k >= K) {
            fail(family::charge_bound, fmt::format("exchange at nonexistent visit ({}, {}, {}, {})", v.i, v.j, v.c, v.k));
            continue;
        }
        const bool visited = sol.s.count(v) > 0;
        if (!visited && std::abs(amount) > tol) {
            fail(family::charge_bound, fmt::format("{:.6g} kWh exchanged at station {} without a visit on {} -> {}",
                                                   amount, v.c, v.i, v.j));
            continue;
        }
        const double cap = inst.c_hat(v.i, v.j, v.c);
        if (amount > cap + tol || amount < -cap - tol)
            fail(family::charge_bound, fmt::format("|C| = {:.6g} exceeds {:.6g} kWh on {} -> {} at station {}",
                                                   std::abs(amount), cap, v.i, v.j, v.c));
        if (!fleet.allow_v2g && amount < -tol)
            fail(family::charge_bound, fmt::format("discharge of {:.6g} kWh with V2G disabled", -amount));
    }

    // Degrees.
    std::map<int, int> in_deg, out_deg;
    std::map<std::pair<int, int>, int> in_k, out_k;
    for (const Transition& t : used) {
        ++in_deg[t.j];
        ++out_deg[t.i];
        ++in_k[{t.j, t.k}];
        ++out_k[{t.i, t.k}];
    }
    for (int j = 1; j < last; ++j) {
        if (in_deg[j] > 1)
            fail(family::serve_once, fmt::format("request {} entered {} times", j, in_deg[j]));
        if (out_deg[j] > 1)
            fail(family::serve_once, fmt::format("request {} left {} times", j, out_deg[j]));
    }
    std::vector<char> chain_ok(static_cast<std::size_t>(K), 1);
    for (int k = 0; k < K; ++k) {
        const int dep = out_k[{0, k}];
        const int ret = in_k[{last, k}];
        if (dep != 1 || ret != 1) {
            fail(family::depot_degree, fmt::format("vehicle {} leaves the depot {} times and returns {} times", k, dep, ret));
            chain_ok[static_cast<std::size_t>(k)] = 0;
        }
        for (int j = 1; j < last; ++j)
            if (in_k[{j, k}] != out_k[{j, k}]) {
                fail(family::continuity, fmt::format("vehicle {} enters request {} {} times but leaves {} times", k, j,
                                                     in_k[{j, k}], out_k[{j, k}]));
                chain_ok[static_cast<std::size_t>(k)] = 0;
            }
    }

    std::set<int> entered;
    for (const Transition& t : used)
        if (t.j >= 1 && t.j < last)
            entered.insert(t.j);
    if (entered != sol.served)
        fail(family::served_flag, "served set differs from the requests entered by some vehicle");

    // Energy replay.
    std::set<Transition> walked;
    for (int k = 0; k < K; ++k) {
        if (!chain_ok[static_cast<std::size_t>(k)])
            continue;
        std::map<int, int> next;
        bool branching = false;
        for (const Transition& t : used)
            if (t.k == k && !next.emplace(t.i, t.j).second)
                branching = true;
        if (branching)
            continue;  // already reported as serve_once

        auto reported = [&](int j) -> const double* {
            auto it = sol.energy.find({j, k});
            return it == sol.energy.end() ? nullptr : &it->second;
        };
        double e = fleet.battery_initial_kwh;
        if (const double* r = reported(0); !r || std::abs(*r - e) > tol)
            fail(family::energy_boundary, fmt::format("vehicle {} does not start at {:.6g} kWh", k, e));

        int at = 0;
        int steps = 0;
        while (at != last) {
            auto it = next.find(at);
            if (it == next.end() || ++steps > last + 1) {
                fail(family::continuity, fmt::format("route of vehicle {} breaks at node {}", k, at));
                break;
            }
            const int j = it->second;
            const Transition t{at, j, k};
            walked.insert(t);
            auto st = station_of.find(t);
            const int c = st == station_of.end() ? -1 : st->second;
            double exchanged = 0.0;
            if (c >= 0)
                if (auto ch = sol.charge.find({at, j, c, k}); ch != sol.charge.end())
                    exchanged = ch->second;
            const double harvest = solar_energy(sc.solar, fleet, inst, at, j);
            double curtailed = 0.0;
            if (auto w = sol.spill.find(t); w != sol.spill.end())
                curtailed = w->second;
            if (curtailed < -tol || curtailed > harvest + tol)
                fail(family::spill_bound, fmt::format("curtailment {:.6g} outside [0, {:.6g}] on {} -> {} of vehicle {}",
                                                      curtailed, harvest, at, j, k));
            e += -leg_drain(inst, fleet, at, j, c) + exchanged + harvest - curtailed;
            if (j != last) {
                if (e < -tol || e > fleet.battery_max_kwh + tol)
                    fail(family::energy_bounds, fmt::format("vehicle {} holds {:.6g} kWh after request {}", k, e, j));
                const double* r = reported(j);
                if (!r || std::abs(*r - e) > tol)
                    fail(family::energy_balance,
                         fmt::format("vehicle {} after request {}: reported {} kWh, replay gives {:.9g}", k, j,
                                     r ? fmt::format("{:.9g}", *r) : std::string("no"), e));
            } else {
                if (std::abs(e - fleet.battery_initial_kwh) > tol)
                    fail(family::energy_boundary, fmt::format("vehicle {} ends the day at {:.9g} kWh instead of {:.6g}", k,
                                                              e, fleet.battery_initial_kwh));
                if (const double* r = reported(last); r && std::abs(*r - fleet.battery_initial_kwh) > tol)
                    fail(family::energy_boundary, fmt::format("vehicle {} reports {:.9g} kWh at the end depot", k, *r));
            }
            at = j;
        }
    }
    for (const auto& [t, w] : sol.spill)
        if (!used.count(t) && std::abs(w) > tol)
            fail(family::spill_bound, fmt::format("curtailment on unused {} -> {} of vehicle {}", t.i, t.j, t.k));

    const CostBreakdown b = cost_breakdown(sol, inst, sc);
    if (std::abs(b.charging_cost - sol.breakdown.charging_cost) > tol ||
        std::abs(b.v2g_revenue - sol.breakdown.v2g_revenue) > tol ||
        std::abs(b.request_revenue - sol.breakdown.request_revenue) > tol || std::abs(b.objective() - sol.objective) > tol)
        fail(family::objective, fmt::format("objective {:.9g} but the replay gives {:.9g}", sol.objective, b.objective()));
    return rep;
}

CostBreakdown cost_breakdown(const Solution& sol, const DagInstance& inst, const Scenario& sc)
{
    CostBreakdown b;
    for (const auto& [v, amount] : sol.charge) {
        const double p = average_price(sc.prices, inst, v.i, v.j);
        if (amount > 0.0)
            b.charging_cost += p * amount;
        else
            b.v2g_revenue -= p * amount;
    }
    for (int j : sol.served)
        if (inst.is_request(j))
            b.request_revenue += fare(inst, j, sc.fares);
    return b;
}

TradePrices trade_prices(const Solution& sol, const DagInstance& inst, const Scenario& sc)
{
    TradePrices t;
    double buy = 0.0, sell = 0.0;
    for (const auto& [v, amount] : sol.charge) {
        const double p = average_price(sc.prices, inst, v.i, v.j);
        if (amount > 0.0) {
            t.bought_kwh += amount;
            buy += p * amount;
        } else if (amount < 0.0) {
            t.sold_kwh -= amount;
            sell -= p * amount;
        }
    }
    t.mean_buy = t.bought_kwh > 0.0 ? buy / t.bought_kwh : 0.0;
    t.mean_sell = t.sold_kwh > 0.0 ? sell / t.sold_kwh : 0.0;
    return t;
}

PowerProfile PowerProfile::zeros(Seconds bin_width)
{
    if (bin_width <= 0)
        throw Error("bin width must be positive");
    PowerProfile p;
    p.bin_width = bin_width;
    const auto n = static_cast<std::size_t>((kSecondsPerDay + bin_width - 1) / bin_width);
    p.grid_charge_kw.assign(n, 0.0);
    p.v2g_kw.assign(n, 0.0);
    p.solar_kw.assign(n, 0.0);
    p.cum_consumption_kwh.assign(n, 0.0);
    return p;
}

namespace {

// Adds `kw` held over [a, b) to the bin averages.
void add_power(std::vector<double>& bins, Seconds width, double a, double b, double kw)
{
    a = std::max(a, 0.0);
    b = std::min(b, static_cast<double>(kSecondsPerDay));
    if (b <= a || kw == 0.0)
        return;
    const double w = static_cast<double>(width);
    auto first = static_cast<std::size_t>(std::floor(a / w));
    for (std::size_t k = first; k < bins.size(); ++k) {
        const double lo = static_cast<double>(k) * w;
        const double hi = lo + w;
        if (lo >= b)
            break;
        const double overlap = std::min(b, hi) - std::max(a, lo);
        if (overlap > 0.0)
            bins[k] += kw * overlap / w;
    }
}

// Adds `kwh` spread uniformly over [a, a + dur) to per-bin energy.
void add_energy(std::vector<double>& bins, Seconds width, double a, double dur, double kwh)
{
    if (kwh == 0.0)
        return;
    if (dur <= 0.0) {
        const auto k = std::min(bins.size() - 1, static_cast<std::size_t>(std::max(a, 0.0) / static_cast<double>(width)));
        bins[k] += kwh;
        return;
    }
    // Energy in a bin is the average power times the bin width.
    std::vector<double> tmp(bins.size(), 0.0);
    add_power(tmp, width, a, a + dur, kwh / dur);
    for (std::size_t k = 0; k < bins.size(); ++k)
        bins[k] += tmp[k] * static_cast<double>(width);
}

}  // namespace

PowerProfile power_profile(const Solution& sol, const DagInstance& inst, const Scenario& sc, Seconds bin_width)
{
    PowerProfile prof = PowerProfile::zeros(bin_width);
    const FleetSpec& fleet = sc.fleet;
    const double per_m = fleet.consumption_kwh_per_km / 1000.0;
    const int last = inst.end_node();
    std::map<Transition, int> station_of;
    for (const StationVisit& v : sol.s)
        station_of[{v.i, v.j, v.k}] = v.c;
    std::vector<double> consumed(prof.size(), 0.0);

    for (const Transition& t : sol.x) {
        const double rel = static_cast<double>(inst.release_time(t.i));
        const double start_j = static_cast<double>(inst.start_time(t.j));
        auto st = station_of.find(t);
        if (st == station_of.end()) {
            add_energy(consumed, bin_width, rel, static_cast<double>(inst.t_fp(t.i, t.j)), inst.d_fp(t.i, t.j) * per_m);
        } else {
            const int c = st->second;
            const PathResult& to = inst.to_station(t.i, c);
            const PathResult& from = inst.from_station(c, t.j);
            const double arrive = rel + static_cast<double>(to.time);
            double amount = 0.0;
            if (auto ch = sol.charge.find({t.i, t.j, c, t.k}); ch != sol.charge.end())
                amount = ch->second;
            const double dur = std::abs(amount) / inst.charging_power_kw * 3600.0;
            add_energy(consumed, bin_width, rel, static_cast<double>(to.time), to.distance * per_m);
            add_power(amount > 0.0 ? prof.grid_charge_kw : prof.v2g_kw, bin_width, arrive, arrive + dur,
                      inst.charging_power_kw);
            add_energy(consumed, bin_width, arrive + dur, static_cast<double>(from.time), from.distance * per_m);
        }
        if (t.j != last)
            add_energy(consumed, bin_width, start_j, static_cast<double>(inst.serve_time(t.j)), inst.d_fp(t.j, t.j) * per_m);

        const double harvest = solar_energy(sc.solar, fleet, inst, t.i, t.j);
        if (harvest > 0.0) {
            double curtailed = 0.0;
            if (auto w = sol.spill.find(t); w != sol.spill.end())
                curtailed = w->second;
            const double kept = std::clamp(1.0 - curtailed / harvest, 0.0, 1.0);
            const Seconds a = inst.release_time(t.i);
            const Seconds b = inst.start_time(t.j);
            for (std::size_t k = 0; k < prof.size(); ++k) {
                const Seconds lo = std::max(a, prof.bin_start(k));
                const Seconds hi = std::min({b, prof.bin_start(k) + bin_width, kSecondsPerDay});
                if (hi > lo)
                    prof.solar_kw[k] += kept * sc.solar.energy(lo, hi) * 3600.0 / static_cast<double>(bin_width);
            }
        }
    }
    double cum = 0.0;
    for (std::size_t k = 0; k < prof.size(); ++k) {
        cum += consumed[k];
        prof.cum_consumption_kwh[k] = cum;
    }
    return prof;
}

FleetSummary aggregate_samples(std::span<const SampleSummary> samples, int fleet_size)
{
    FleetSummary out;
    int vehicles = 0;
    for (const SampleSummary& s : samples)
        vehicles += s.vehicles;
    if (samples.empty() || vehicles <= 0)
        throw Error("aggregate_samples needs at least one sample with vehicles");
    const Seconds width = samples.front().profile.bin_width;
    const std::size_t n = samples.front().profile.size();
    out.scale = static_cast<double>(fleet_size) / static_cast<double>(vehicles);
    out.profile.bin_width = width;
    out.profile.grid_charge_kw.assign(n, 0.0);
    out.profile.v2g_kw.assign(n, 0.0);
    out.profile.solar_kw.assign(n, 0.0);
    out.profile.cum_consumption_kwh.assign(n, 0.0);
    for (const SampleSummary& s : samples) {
        if (s.profile.bin_width != width || s.profile.size() != n)
            throw Error(fmt::format("sample bin width {} s differs from {} s", s.profile.bin_width, width));
        for (std::size_t k = 0; k < n; ++k) {
            out.profile.grid_charge_kw[k] += s.profile.grid_charge_kw[k];
            out.profile.v2g_kw[k] += s.profile.v2g_kw[k];
            out.profile.solar_kw[k] += s.profile.solar_kw[k];
            out.profile.cum_consumption_kwh[k] += s.profile.cum_consumption_kwh[k];
        }
        out.breakdown.charging_cost += s.breakdown.charging_cost;
        out.breakdown.v2g_revenue += s.breakdown.v2g_revenue;
        out.breakdown.request_revenue += s.breakdown.request_revenue;
    }
    for (std::size_t k = 0; k < n; ++k) {
        out.profile.grid_charge_kw[k] *= out.scale;
        out.profile.v2g_kw[k] *= out.scale;
        out.profile.solar_kw[k] *= out.scale;
        out.profile.cum_consumption_kwh[k] *= out.scale;
    }
    out.breakdown.charging_cost *= out.scale;
    out.breakdown.v2g_revenue *= out.scale;
    out.breakdown.request_revenue *= out.scale;
    return out;
}

std::string report_tag(int scenario_id, std::uint64_t seed)
{
    return fmt::format("s{}_seed{}", scenario_id, seed);
}

namespace {

std::string num(double v)
{
    if (v == 0.0)
        return "0";  // also folds -0
    return fmt::format("{}", v);
}

nlohmann::ordered_json finite_or_null(double v)
{
    return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

void write_profile_csv(std::ostream& out, const PowerProfile& p)
{
    out << "bin_start_s,grid_charge_kw,v2g_kw,solar_kw,cum_consumption_kwh\n";
    for (std::size_t k = 0; k < p.size(); ++k)
        out << p.bin_start(k) << ',' << num(p.grid_charge_kw[k]) << ',' << num(p.v2g_kw[k]) << ','
            << num(p.solar_kw[k]) << ',' << num(p.cum_consumption_kwh[k]) << '\n';
}

void write_summary_json(std::ostream& out, const CostBreakdown& b, const ReportMeta& meta)
{
    nlohmann::ordered_json doc;
    doc["tag"] = meta.tag;
    doc["status"] = to_string(meta.status);
    doc["objective"] = finite_or_null(meta.objective);
    doc["bound"] = finite_or_null(meta.bound);
    doc["gap"] = finite_or_null(meta.objective - meta.bound);
    doc["nodes"] = meta.nodes;
    doc["charging_cost"] = b.charging_cost;
    doc["v2g_revenue"] = b.v2g_revenue;
    doc["trading_profit"] = b.trading_profit();
    doc["request_revenue"] = b.request_revenue;
    doc["J"] = b.objective();
    out << doc.dump(2) << '\n';
}

void emit_report(const PowerProfile& profile, const CostBreakdown& breakdown, const ReportMeta& meta,
                 const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw Error("cannot create report directory " + dir.string() + ": " + ec.message());
    const auto csv = dir / ("profile_" + meta.tag + ".csv");
    const auto json = dir / ("summary_" + meta.tag + ".json");
    std::ofstream a(csv, std::ios::binary);
    std::ofstream b(json, std::ios::binary);
    if (!a || !b)
        throw Error("cannot write reports into " + dir.string());
    write_profile_csv(a, profile);
    write_summary_json(b, breakdown, meta);
    if (!a || !b)
        throw Error("write failed in " + dir.string());
}

}  // namespace samod
