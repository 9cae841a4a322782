// Exact charging along fixed routes and the exhaustive oracle built on it.
//
// Along one route the only coupling between legs is the battery level, so
// the optimal cost of reaching level y after leg t is a convex piecewise
// linear function V_t(y). Leg t contributes g_t(delta) = min p C over
// C - W = delta, which is convex with a flat part (curtailing W) and a part
// of slope p (trading C); V_t is the infimal convolution of V_{t-1} and
// g_t, shifted by harvest minus consumption and clipped to [0, E_max].

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include <fmt/format.h>

#include "samod/solve.hpp"

namespace samod {

namespace {

constexpr double kEps = 1e-9;

enum class Tag : unsigned char { prior, spill, trade };

struct Piece {
    double len;
    double slope;
    Tag tag;
};

struct Pwl {
    double x0 = 0.0;
    double f0 = 0.0;
    std::vector<Piece> pieces;

    double length() const
    {
        double s = 0.0;
        for (const Piece& p : pieces)
            s += p.len;
        return s;
    }

    double eval(double x) const
    {
        double rest = x - x0;
        double f = f0;
        for (const Piece& p : pieces) {
            if (rest <= 0.0)
                break;
            const double take = std::min(rest, p.len);
            f += take * p.slope;
            rest -= take;
        }
        return f;
    }

    // Restricts the domain to [lo, hi]; false when they do not intersect.
    bool clip(double lo, double hi)
    {
        const double len = length();
        if (x0 > hi + kEps || x0 + len < lo - kEps)
            return false;
        double cut = lo - x0;
        if (cut > 0.0) {
            x0 = lo;
            std::size_t k = 0;
            while (k < pieces.size() && cut > 0.0) {
                const double take = std::min(cut, pieces[k].len);
                f0 += take * pieces[k].slope;
                pieces[k].len -= take;
                cut -= take;
                if (pieces[k].len <= 0.0)
                    ++k;
            }
            pieces.erase(pieces.begin(), pieces.begin() + static_cast<std::ptrdiff_t>(k));
        }
        double over = x0 + length() - hi;
        while (over > 0.0 && !pieces.empty()) {
            const double take = std::min(over, pieces.back().len);
            pieces.back().len -= take;
            over -= take;
            if (pieces.back().len <= 0.0)
                pieces.pop_back();
        }
        if (x0 > hi)
            x0 = hi;
        return true;
    }
};

struct Leg {
    double lo;     // least signed exchange
    double hi;     // greatest signed exchange
    double solar;  // harvest available to curtail
    double price;
    double use;    // consumption
};

// Pieces of V_prev and g in slope order; equal slopes keep V_prev first.
std::vector<Piece> merged(const Pwl& prev, const Leg& leg)
{
    std::vector<Piece> out;
    for (const Piece& p : prev.pieces)
        out.push_back({p.len, p.slope, Tag::prior});
    if (leg.solar > 0.0)
        out.push_back({leg.solar, 0.0, Tag::spill});
    if (leg.hi - leg.lo > 0.0)
        out.push_back({leg.hi - leg.lo, leg.price, Tag::trade});
    std::stable_sort(out.begin(), out.end(), [](const Piece& a, const Piece& b) { return a.slope < b.slope; });
    return out;
}

struct Split {
    double prior = 0.0;
    double spill = 0.0;
    double trade = 0.0;
};

// Distributes `tau` along the merged pieces. Lower slopes fill first; in
// the block that is only partly filled, the leg's own pieces are filled up
// to their neutral point (no curtailment, no exchange) before the prior.
Split split(const std::vector<Piece>& pieces, double tau, const Leg& leg)
{
    Split s;
    std::size_t k = 0;
    while (k < pieces.size() && tau > 0.0) {
        std::size_t end = k;
        double total = 0.0;
        while (end < pieces.size() && std::abs(pieces[end].slope - pieces[k].slope) <= 1e-12) {
            total += pieces[end].len;
            ++end;
        }
        double prior_len = 0.0, spill_len = 0.0, trade_len = 0.0;
        for (std::size_t b = k; b < end; ++b) {
            switch (pieces[b].tag) {
            case Tag::prior: prior_len += pieces[b].len; break;
            case Tag::spill: spill_len += pieces[b].len; break;
            case Tag::trade: trade_len += pieces[b].len; break;
            }
        }
        if (tau >= total) {
            s.prior += prior_len;
            s.spill += spill_len;
            s.trade += trade_len;
            tau -= total;
        } else {
            auto take = [&](double cap, double& into) {
                const double t = std::min(std::max(cap, 0.0), tau);
                into += t;
                tau -= t;
                return t;
            };
            take(spill_len, s.spill);
            const double neutral = std::clamp(-leg.lo, 0.0, trade_len);
            const double first = take(neutral, s.trade);
            take(prior_len, s.prior);
            take(trade_len - first, s.trade);
            tau = 0.0;
        }
        k = end;
    }
    return s;
}

double leg_price(const Scenario& sc, const DagInstance& inst, int i, int j)
{
    return average_price(sc.prices, inst, i, j);
}

}  // namespace

std::vector<VehicleRoute> routes_of(const Solution& solution, const DagInstance& inst, int vehicles)
{
    const int last = inst.end_node();
    std::map<std::pair<int, int>, int> next;  // (i, k) -> j
    for (const Transition& t : solution.x)
        if (!next.emplace(std::pair{t.i, t.k}, t.j).second)
            throw Error(fmt::format("vehicle {} leaves node {} twice", t.k, t.i));
    std::map<Transition, int> station;
    for (const StationVisit& v : solution.s)
        station[{v.i, v.j, v.k}] = v.c;

    std::vector<VehicleRoute> routes(static_cast<std::size_t>(vehicles));
    for (int k = 0; k < vehicles; ++k) {
        VehicleRoute& r = routes[static_cast<std::size_t>(k)];
        int at = 0;
        r.nodes.push_back(0);
        while (at != last) {
            auto it = next.find({at, k});
            if (it == next.end())
                throw Error(fmt::format("route of vehicle {} stops at node {}", k, at));
            const int j = it->second;
            auto st = station.find({at, j, k});
            r.stations.push_back(st == station.end() ? -1 : st->second);
            r.nodes.push_back(j);
            at = j;
            if (r.nodes.size() > static_cast<std::size_t>(inst.node_count()))
                throw Error(fmt::format("route of vehicle {} has a cycle", k));
        }
    }
    return routes;
}

ChargingPlan solve_chain_charging(const DagInstance& inst, const Scenario& sc, const VehicleRoute& route)
{
    const FleetSpec& fleet = sc.fleet;
    if (route.nodes.size() < 2 || route.nodes.front() != 0 || route.nodes.back() != inst.end_node() ||
        route.stations.size() + 1 != route.nodes.size())
        throw Error("route must run from node 0 to the end node with one station entry per leg");

    const std::size_t L = route.stations.size();
    std::vector<Leg> legs(L);
    for (std::size_t t = 0; t < L; ++t) {
        const int i = route.nodes[t];
        const int j = route.nodes[t + 1];
        const int c = route.stations[t];
        if (!inst.x_mask(i, j))
            throw Error(fmt::format("route uses infeasible transition {} -> {}", i, j));
        if (c >= 0 && !station_usable(inst, i, j, c))
            throw Error(fmt::format("station {} is not usable on {} -> {}", c, i, j));
        Leg& leg = legs[t];
        const double cap = c >= 0 ? inst.c_hat(i, j, c) : 0.0;
        leg.lo = fleet.allow_v2g ? -cap : 0.0;
        leg.hi = cap;
        leg.solar = solar_energy(sc.solar, fleet, inst, i, j);
        leg.price = leg_price(sc, inst, i, j);
        leg.use = transition_energy_kwh(inst, fleet, i, j, c);
    }

    std::vector<Pwl> before(L);
    Pwl v;
    v.x0 = fleet.battery_initial_kwh;
    ChargingPlan plan;
    for (std::size_t t = 0; t < L; ++t) {
        before[t] = v;
        const Leg& leg = legs[t];
        Pwl next;
        next.x0 = v.x0 + leg.lo - leg.solar + (leg.solar - leg.use);
        next.f0 = v.f0 + leg.price * leg.lo;
        for (const Piece& p : merged(v, leg))
            next.pieces.push_back({p.len, p.slope, Tag::prior});
        if (!next.clip(0.0, fleet.battery_max_kwh))
            return plan;
        v = std::move(next);
    }
    const double target = fleet.battery_initial_kwh;
    if (target < v.x0 - kEps || target > v.x0 + v.length() + kEps)
        return plan;

    plan.energy.assign(L + 1, 0.0);
    plan.charge.assign(L, 0.0);
    plan.spill.assign(L, 0.0);
    plan.energy[L] = target;
    double y = target;
    for (std::size_t t = L; t-- > 0;) {
        const Leg& leg = legs[t];
        const Pwl& prev = before[t];
        const auto pieces = merged(prev, leg);
        double total = 0.0;
        for (const Piece& p : pieces)
            total += p.len;
        const double u = y - (leg.solar - leg.use);
        const double tau = std::clamp(u - (prev.x0 + leg.lo - leg.solar), 0.0, total);
        const Split s = split(pieces, tau, leg);
        plan.charge[t] = leg.lo + s.trade;
        plan.spill[t] = leg.solar - s.spill;
        if (std::abs(plan.spill[t]) < kEps)
            plan.spill[t] = 0.0;
        if (std::abs(plan.charge[t]) < kEps)
            plan.charge[t] = 0.0;
        y = prev.x0 + s.prior;
        plan.energy[t] = y;
    }
    plan.energy[0] = fleet.battery_initial_kwh;
    plan.cost = 0.0;
    for (std::size_t t = 0; t < L; ++t)
        plan.cost += legs[t].price * plan.charge[t];
    plan.feasible = true;
    return plan;
}

Solution brute_force_oracle(const DagInstance& inst, const Scenario& sc)
{
    const int I = inst.request_count();
    const int K = sc.fleet.vehicles;
    const int ns = inst.station_count();
    if (I > 6 || K > 2 || ns > 2)
        throw Error(fmt::format("oracle limited to 6 requests, 2 vehicles and 2 stations (got {}, {}, {})", I, K, ns));
    const int last = inst.end_node();

    struct Best {
        bool feasible = false;
        double cost = 0.0;
        VehicleRoute route;
        ChargingPlan plan;
    };
    std::vector<std::optional<Best>> memo(std::size_t{1} << I);

    auto chain = [&](unsigned mask) -> const Best& {
        auto& slot = memo[mask];
        if (slot)
            return *slot;
        Best best;
        std::vector<int> nodes{0};
        for (int r = 1; r <= I; ++r)
            if (mask & (1u << (r - 1)))
                nodes.push_back(r);
        nodes.push_back(last);
        bool ok = true;
        for (std::size_t t = 0; t + 1 < nodes.size(); ++t)
            ok = ok && inst.x_mask(nodes[t], nodes[t + 1]);
        if (ok) {
            std::vector<std::vector<int>> options;
            for (std::size_t t = 0; t + 1 < nodes.size(); ++t) {
                std::vector<int> opt{-1};
                for (int c = 0; c < ns; ++c)
                    if (station_usable(inst, nodes[t], nodes[t + 1], c))
                        opt.push_back(c);
                options.push_back(std::move(opt));
            }
            std::vector<std::size_t> pick(options.size(), 0);
            while (true) {
                VehicleRoute route{nodes, {}};
                for (std::size_t t = 0; t < options.size(); ++t)
                    route.stations.push_back(options[t][pick[t]]);
                ChargingPlan plan = solve_chain_charging(inst, sc, route);
                if (plan.feasible && (!best.feasible || plan.cost < best.cost)) {
                    best.feasible = true;
                    best.cost = plan.cost;
                    best.route = std::move(route);
                    best.plan = std::move(plan);
                }
                std::size_t t = 0;
                while (t < pick.size() && ++pick[t] == options[t].size())
                    pick[t++] = 0;
                if (t == pick.size())
                    break;
            }
        }
        slot = std::move(best);
        return *slot;
    };

    // Each request goes to vehicle 1..K or stays unserved (0).
    std::vector<int> assign(static_cast<std::size_t>(I), 0);
    double best_total = std::numeric_limits<double>::infinity();
    std::vector<unsigned> best_masks;
    while (true) {
        std::vector<unsigned> masks(static_cast<std::size_t>(K), 0u);
        double fares = 0.0;
        for (int r = 0; r < I; ++r) {
            const int a = assign[static_cast<std::size_t>(r)];
            if (a > 0) {
                masks[static_cast<std::size_t>(a - 1)] |= 1u << r;
                fares += fare(inst, r + 1, sc.fares);
            }
        }
        double total = -fares;
        bool ok = true;
        for (unsigned m : masks) {
            const Best& b = chain(m);
            if (!b.feasible) {
                ok = false;
                break;
            }
            total += b.cost;
        }
        if (ok && total < best_total) {
            best_total = total;
            best_masks = masks;
        }
        int r = 0;
        while (r < I && ++assign[static_cast<std::size_t>(r)] > K)
            assign[static_cast<std::size_t>(r++)] = 0;
        if (r == I)
            break;
    }

    Solution sol;
    if (best_masks.empty())
        return sol;
    for (int k = 0; k < K; ++k) {
        const Best& b = chain(best_masks[static_cast<std::size_t>(k)]);
        const VehicleRoute& route = b.route;
        for (std::size_t t = 0; t + 1 < route.nodes.size(); ++t) {
            const int i = route.nodes[t];
            const int j = route.nodes[t + 1];
            const int c = route.stations[t];
            sol.x.insert({i, j, k});
            if (j != last)
                sol.served.insert(j);
            if (c >= 0) {
                sol.s.insert({i, j, c, k});
                const double ch = b.plan.charge[t];
                if (ch != 0.0)
                    sol.charge[{i, j, c, k}] = ch;
                const double p = leg_price(sc, inst, i, j);
                if (ch > 0.0)
                    sol.breakdown.charging_cost += p * ch;
                else
                    sol.breakdown.v2g_revenue -= p * ch;
            }
            if (b.plan.spill[t] > 0.0)
                sol.spill[{i, j, k}] = b.plan.spill[t];
        }
        for (std::size_t t = 0; t < route.nodes.size(); ++t)
            sol.energy[{route.nodes[t], k}] = b.plan.energy[t];
    }
    for (int j : sol.served)
        sol.breakdown.request_revenue += fare(inst, j, sc.fares);
    sol.status = SolveStatus::optimal;
    sol.objective = sol.breakdown.objective();
    sol.bound = sol.objective;
    return sol;
}

}  // namespace samod
