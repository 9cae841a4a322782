#include "samod/model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace samod {

std::string VarRef::name() const
{
    switch (kind) {
    case VarKind::X: return fmt::format("X_{}_{}_{}", i, j, k);
    case VarKind::S: return fmt::format("S_{}_{}_{}_{}", i, j, c, k);
    case VarKind::C: return fmt::format("C_{}_{}_{}_{}", i, j, c, k);
    case VarKind::E: return fmt::format("E_{}_{}", j, k);
    case VarKind::W: return fmt::format("W_{}_{}_{}", i, j, k);
    case VarKind::BR: return fmt::format("BR_{}", j);
    }
    return {};
}

int MilpModel::add_variable(const VarRef& v, double cost)
{
    std::string n = v.name();
    const int id = static_cast<int>(vars_.size());
    if (!index_.emplace(n, id).second)
        throw BuildError("duplicate variable " + n);
    vars_.push_back(v);
    names_.push_back(std::move(n));
    cost_.push_back(cost);
    return id;
}

void MilpModel::add_constraint(LinearConstraint row)
{
    for (const LinearTerm& t : row.terms)
        if (t.var < 0 || t.var >= static_cast<int>(vars_.size()))
            throw BuildError("constraint " + row.name + " references an undeclared variable");
    rows_.push_back(std::move(row));
}

int MilpModel::find(std::string_view name) const
{
    auto it = index_.find(std::string(name));
    return it == index_.end() ? -1 : it->second;
}

int MilpModel::binary_count() const
{
    return static_cast<int>(std::count_if(vars_.begin(), vars_.end(), [](const VarRef& v) { return v.binary(); }));
}

double MilpModel::evaluate(const std::vector<double>& values) const
{
    double z = 0.0;
    for (std::size_t v = 0; v < cost_.size(); ++v)
        z += cost_[v] * values.at(v);
    return z;
}

double MilpModel::max_violation(const std::vector<double>& values, std::string* worst) const
{
    double max_v = 0.0;
    auto note = [&](double v, const std::string& what) {
        if (v > max_v) {
            max_v = v;
            if (worst)
                *worst = what;
        }
    };
    for (std::size_t v = 0; v < vars_.size(); ++v) {
        note(vars_[v].lower - values.at(v), "lower bound of " + names_[v]);
        note(values.at(v) - vars_[v].upper, "upper bound of " + names_[v]);
    }
    for (const LinearConstraint& row : rows_) {
        double lhs = 0.0;
        for (const LinearTerm& t : row.terms)
            lhs += t.coef * values.at(static_cast<std::size_t>(t.var));
        const double excess = lhs - row.rhs;
        switch (row.relation) {
        case Relation::less_equal: note(excess, row.name); break;
        case Relation::greater_equal: note(-excess, row.name); break;
        case Relation::equal: note(std::abs(excess), row.name); break;
        }
    }
    return max_v;
}

double transition_energy_kwh(const DagInstance& inst, const FleetSpec& fleet, int i, int j, int station)
{
    double meters = inst.d_fp(i, j) + inst.d_fp(j, j);
    if (station >= 0)
        meters += inst.detour(i, j, station).distance;
    return meters / 1000.0 * fleet.consumption_kwh_per_km;
}

double big_m(const DagInstance& inst, const Scenario& scenario)
{
    double max_charge = 0.0;
    for (double c : inst.charge_bound)
        max_charge = std::max(max_charge, c);
    double max_solar = 0.0;
    for (auto [i, j] : inst.arcs())
        max_solar = std::max(max_solar, solar_energy(scenario.solar, scenario.fleet, inst, i, j));
    return scenario.fleet.battery_max_kwh + max_charge + max_solar;
}

namespace {

void check_consistency(const DagInstance& inst, const Scenario& sc)
{
    sc.fleet.validate();
    if (sc.requests.size() != inst.requests.size())
        throw BuildError(fmt::format("scenario has {} requests but the instance has {}", sc.requests.size(),
                                     inst.requests.size()));
    for (std::size_t r = 0; r < sc.requests.size(); ++r) {
        const TravelRequest& a = sc.requests[r];
        const TravelRequest& b = inst.requests[r];
        if (a.origin != b.origin || a.destination != b.destination || a.time != b.time)
            throw BuildError(fmt::format("request {} differs between scenario and instance", r + 1));
    }
    if (sc.fleet.charging_power_kw != inst.charging_power_kw)
        throw BuildError(fmt::format("instance built for {} kW but the fleet charges at {} kW",
                                     inst.charging_power_kw, sc.fleet.charging_power_kw));
}

}  // namespace

MilpModel build_model(const DagInstance& inst, const Scenario& scenario)
{
    check_consistency(inst, scenario);
    const FleetSpec& fleet = scenario.fleet;
    const int K = fleet.vehicles;
    const int n = inst.node_count();
    const int last = inst.end_node();
    const int ns = inst.station_count();
    const auto arcs = inst.arcs();
    const double M = big_m(inst, scenario);

    MilpModel model;
    model.name = fmt::format("samod_{}", scenario.id);

    // Variable ids per (arc, k), (arc, c, k), (node, k); -1 where absent.
    const auto na = arcs.size();
    const auto nk = static_cast<std::size_t>(K);
    const auto nsz = static_cast<std::size_t>(ns);
    std::vector<int> x(na * nk, -1), w(na * nk, -1), s(na * nsz * nk, -1), ch(na * nsz * nk, -1);
    std::vector<int> e(static_cast<std::size_t>(n) * nk, -1), br(static_cast<std::size_t>(n), -1);
    auto ak = [&](std::size_t a, int k) { return a * nk + static_cast<std::size_t>(k); };
    auto ack = [&](std::size_t a, int c, int k) {
        return (a * nsz + static_cast<std::size_t>(c)) * nk + static_cast<std::size_t>(k);
    };

    std::vector<double> price(na), solar(na);
    for (std::size_t a = 0; a < na; ++a) {
        price[a] = average_price(scenario.prices, inst, arcs[a].first, arcs[a].second);
        solar[a] = solar_energy(scenario.solar, fleet, inst, arcs[a].first, arcs[a].second);
    }

    for (int k = 0; k < K; ++k)
        for (std::size_t a = 0; a < na; ++a)
            x[ak(a, k)] = model.add_variable({VarKind::X, arcs[a].first, arcs[a].second, -1, k, 0.0, 1.0});
    for (int k = 0; k < K; ++k)
        for (std::size_t a = 0; a < na; ++a)
            for (int c = 0; c < ns; ++c)
                if (station_usable(inst, arcs[a].first, arcs[a].second, c))
                    s[ack(a, c, k)] = model.add_variable({VarKind::S, arcs[a].first, arcs[a].second, c, k, 0.0, 1.0});
    for (int k = 0; k < K; ++k)
        for (std::size_t a = 0; a < na; ++a)
            for (int c = 0; c < ns; ++c)
                if (s[ack(a, c, k)] >= 0) {
                    const double cap = inst.c_hat(arcs[a].first, arcs[a].second, c);
                    ch[ack(a, c, k)] = model.add_variable(
                        {VarKind::C, arcs[a].first, arcs[a].second, c, k, fleet.allow_v2g ? -cap : 0.0, cap}, price[a]);
                }
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < n; ++j) {
            const bool boundary = j == 0 || j == last;
            const double lo = boundary ? fleet.battery_initial_kwh : 0.0;
            const double hi = boundary ? fleet.battery_initial_kwh : fleet.battery_max_kwh;
            e[static_cast<std::size_t>(j) * nk + static_cast<std::size_t>(k)] =
                model.add_variable({VarKind::E, -1, j, -1, k, lo, hi});
        }
    for (int k = 0; k < K; ++k)
        for (std::size_t a = 0; a < na; ++a)
            w[ak(a, k)] = model.add_variable({VarKind::W, arcs[a].first, arcs[a].second, -1, k, 0.0, solar[a]});
    for (int j = 1; j < last; ++j)
        br[static_cast<std::size_t>(j)] = model.add_variable({VarKind::BR, -1, j, -1, -1, 0.0, 1.0},
                                                             -fare(inst, j, scenario.fares));

    auto E = [&](int j, int k) { return e[static_cast<std::size_t>(j) * nk + static_cast<std::size_t>(k)]; };

    // Each request entered and left at most once over the whole fleet.
    for (int j = 1; j < last; ++j) {
        LinearConstraint in{fmt::format("in_{}", j), {}, Relation::less_equal, 1.0};
        LinearConstraint out{fmt::format("out_{}", j), {}, Relation::less_equal, 1.0};
        for (std::size_t a = 0; a < na; ++a)
            for (int k = 0; k < K; ++k) {
                if (arcs[a].second == j)
                    in.terms.push_back({x[ak(a, k)], 1.0});
                if (arcs[a].first == j)
                    out.terms.push_back({x[ak(a, k)], 1.0});
            }
        model.add_constraint(std::move(in));
        model.add_constraint(std::move(out));
    }

    // Every vehicle leaves the depot once and returns once.
    for (int k = 0; k < K; ++k) {
        LinearConstraint dep{fmt::format("dep_{}", k), {}, Relation::equal, 1.0};
        LinearConstraint ret{fmt::format("ret_{}", k), {}, Relation::equal, 1.0};
        for (std::size_t a = 0; a < na; ++a) {
            if (arcs[a].first == 0)
                dep.terms.push_back({x[ak(a, k)], 1.0});
            if (arcs[a].second == last)
                ret.terms.push_back({x[ak(a, k)], 1.0});
        }
        model.add_constraint(std::move(dep));
        model.add_constraint(std::move(ret));
    }

    // Flow conservation on request nodes, per vehicle.
    for (int k = 0; k < K; ++k)
        for (int j = 1; j < last; ++j) {
            LinearConstraint flow{fmt::format("flow_{}_{}", j, k), {}, Relation::equal, 0.0};
            for (std::size_t a = 0; a < na; ++a) {
                if (arcs[a].second == j)
                    flow.terms.push_back({x[ak(a, k)], 1.0});
                if (arcs[a].first == j)
                    flow.terms.push_back({x[ak(a, k)], -1.0});
            }
            model.add_constraint(std::move(flow));
        }

    for (int k = 0; k < K; ++k)
        for (std::size_t a = 0; a < na; ++a) {
            const auto [i, j] = arcs[a];
            LinearConstraint visit{fmt::format("visit_{}_{}_{}", i, j, k), {}, Relation::less_equal, 0.0};
            for (int c = 0; c < ns; ++c)
                if (s[ack(a, c, k)] >= 0)
                    visit.terms.push_back({s[ack(a, c, k)], 1.0});
            if (visit.terms.empty())
                continue;
            visit.terms.push_back({x[ak(a, k)], -1.0});
            model.add_constraint(std::move(visit));
        }

    for (int k = 0; k < K; ++k)
        for (std::size_t a = 0; a < na; ++a)
            for (int c = 0; c < ns; ++c) {
                const int sv = s[ack(a, c, k)];
                if (sv < 0)
                    continue;
                const auto [i, j] = arcs[a];
                const double cap = inst.c_hat(i, j, c);
                const int cv = ch[ack(a, c, k)];
                model.add_constraint({fmt::format("cup_{}_{}_{}_{}", i, j, c, k), {{cv, 1.0}, {sv, -cap}},
                                      Relation::less_equal, 0.0});
                model.add_constraint({fmt::format("clo_{}_{}_{}_{}", i, j, c, k), {{cv, 1.0}, {sv, cap}},
                                      Relation::greater_equal, 0.0});
            }

    for (int k = 0; k < K; ++k)
        for (std::size_t a = 0; a < na; ++a) {
            const int wv = w[ak(a, k)];
            if (solar[a] <= 0.0)
                continue;
            const auto [i, j] = arcs[a];
            model.add_constraint({fmt::format("spill_{}_{}_{}", i, j, k), {{wv, 1.0}, {x[ak(a, k)], -solar[a]}},
                                  Relation::less_equal, 0.0});
        }

    // Energy balance on used transitions, relaxed by M on unused ones:
    //   E_j - E_i + E_trans - sum_c C + W - C_sol X  in  [-M (1 - X), M (1 - X)]
    for (int k = 0; k < K; ++k)
        for (std::size_t a = 0; a < na; ++a) {
            const auto [i, j] = arcs[a];
            const double base = transition_energy_kwh(inst, fleet, i, j) - solar[a];
            std::vector<LinearTerm> terms{{E(j, k), 1.0}, {E(i, k), -1.0}};
            for (int c = 0; c < ns; ++c) {
                if (s[ack(a, c, k)] < 0)
                    continue;
                const double extra = inst.detour(i, j, c).distance / 1000.0 * fleet.consumption_kwh_per_km;
                if (extra != 0.0)
                    terms.push_back({s[ack(a, c, k)], extra});
                terms.push_back({ch[ack(a, c, k)], -1.0});
            }
            terms.push_back({w[ak(a, k)], 1.0});
            auto upper = terms;
            upper.push_back({x[ak(a, k)], base + M});
            auto lower = std::move(terms);
            lower.push_back({x[ak(a, k)], base - M});
            model.add_constraint({fmt::format("ebu_{}_{}_{}", i, j, k), std::move(upper), Relation::less_equal, M});
            model.add_constraint({fmt::format("ebl_{}_{}_{}", i, j, k), std::move(lower), Relation::greater_equal, -M});
        }

    for (int j = 1; j < last; ++j) {
        LinearConstraint def{fmt::format("br_{}", j), {{br[static_cast<std::size_t>(j)], 1.0}}, Relation::equal, 0.0};
        for (std::size_t a = 0; a < na; ++a)
            if (arcs[a].second == j)
                for (int k = 0; k < K; ++k)
                    def.terms.push_back({x[ak(a, k)], -1.0});
        model.add_constraint(std::move(def));
    }
    return model;
}

}  // namespace samod
