#include "samod/solve.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>

#include <fmt/format.h>

#include "samod/lp.hpp"

namespace samod {

const char* to_string(SolveStatus s) noexcept
{
    switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::feasible_with_gap: return "feasible_with_gap";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    }
    return "unknown";
}

namespace {

constexpr double kIntTol = 1e-6;

struct BranchRecord {
    int var = -1;
    bool up = false;
    double frac = 0.0;
    double parent_z = 0.0;
};

struct OpenNode {
    lp::DualSimplex lp;
    int var;
    double value;
    double parent_bound;
    BranchRecord record;
};

class PseudoCosts {
public:
    explicit PseudoCosts(std::size_t n) : down_(n, 0.0), up_(n, 0.0), down_n_(n, 0), up_n_(n, 0) {}

    void update(const BranchRecord& r, double z)
    {
        if (r.var < 0)
            return;
        const auto u = static_cast<std::size_t>(r.var);
        const double dist = r.up ? 1.0 - r.frac : r.frac;
        if (dist <= 0.0)
            return;
        const double gain = std::max(0.0, z - r.parent_z) / dist;
        (r.up ? up_ : down_)[u] += gain;
        ++(r.up ? up_n_ : down_n_)[u];
    }

    double score(int var, double f) const
    {
        const auto u = static_cast<std::size_t>(var);
        const double d = down_n_[u] ? down_[u] / down_n_[u] : mean(down_, down_n_);
        const double p = up_n_[u] ? up_[u] / up_n_[u] : mean(up_, up_n_);
        return std::max(d * f, 1e-6) * std::max(p * (1.0 - f), 1e-6);
    }

private:
    static double mean(const std::vector<double>& sum, const std::vector<int>& n)
    {
        double s = 0.0;
        long c = 0;
        for (std::size_t i = 0; i < sum.size(); ++i)
            if (n[i]) {
                s += sum[i] / n[i];
                ++c;
            }
        return c ? s / static_cast<double>(c) : 1.0;
    }

    std::vector<double> down_, up_;
    std::vector<int> down_n_, up_n_;
};

int class_rank(VarKind k)
{
    switch (k) {
    case VarKind::X: return 0;
    case VarKind::S: return 1;
    case VarKind::BR: return 2;
    default: return 3;
    }
}

// Fractional binary of the highest-priority class; -1 when integral.
int pick_branch(const MilpModel& model, const std::vector<int>& candidates, const lp::DualSimplex& lp,
                const SolverConfig& cfg, const PseudoCosts& pc)
{
    const auto& vars = model.variables();
    int best = -1;
    int best_rank = 4;
    double best_score = -1.0;
    for (int v : candidates) {
        const int rank = class_rank(vars[static_cast<std::size_t>(v)].kind);
        if (rank > best_rank)
            break;
        const double x = lp.value(v);
        const double f = x - std::floor(x);
        if (f < kIntTol || f > 1.0 - kIntTol)
            continue;
        const double score = cfg.branch == BranchRule::pseudo_cost ? pc.score(v, f) : std::min(f, 1.0 - f);
        if (best < 0 || score > best_score) {
            best = v;
            best_rank = rank;
            best_score = score;
        }
    }
    return best;
}

// Vehicle-free identity of a variable.
std::string vehicle_free_key(const VarRef& v, double cost)
{
    return fmt::format("{}:{}:{}:{}:{}:{}:{}", static_cast<int>(v.kind), v.i, v.j, v.c, v.lower, v.upper, cost);
}

// True when relabelling vehicles maps the model onto itself: every vehicle
// owns the same variables, rows touching one vehicle repeat for each, and
// rows touching several treat all of them alike.
bool vehicles_interchangeable(const MilpModel& model, int K)
{
    const auto& vars = model.variables();
    const auto& cost = model.objective();
    std::vector<std::string> key(vars.size());
    std::vector<std::vector<std::string>> owned(static_cast<std::size_t>(K));
    for (std::size_t v = 0; v < vars.size(); ++v) {
        key[v] = vehicle_free_key(vars[v], cost[v]);
        if (vars[v].k >= K)
            return false;
        if (vars[v].k >= 0)
            owned[static_cast<std::size_t>(vars[v].k)].push_back(key[v]);
    }
    for (auto& o : owned)
        std::sort(o.begin(), o.end());
    if (std::adjacent_find(owned.begin(), owned.end(), std::not_equal_to<>{}) != owned.end())
        return false;

    std::vector<std::vector<std::string>> single(static_cast<std::size_t>(K));
    for (const LinearConstraint& row : model.constraints()) {
        std::vector<int> ks;
        for (const LinearTerm& t : row.terms)
            if (const int k = vars[static_cast<std::size_t>(t.var)].k; k >= 0)
                ks.push_back(k);
        std::sort(ks.begin(), ks.end());
        ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
        std::vector<std::string> terms;
        for (const LinearTerm& t : row.terms)
            terms.push_back(fmt::format("{}*{}", t.coef, key[static_cast<std::size_t>(t.var)]));
        std::sort(terms.begin(), terms.end());
        std::string sig = fmt::format("{}:{}", static_cast<int>(row.relation), row.rhs);
        for (const std::string& t : terms)
            sig += "|" + t;
        if (ks.size() == 1) {
            single[static_cast<std::size_t>(ks[0])].push_back(std::move(sig));
        } else if (!ks.empty()) {
            if (static_cast<int>(ks.size()) != K)
                return false;
            // Every vehicle term repeats once per vehicle with the same coefficient.
            std::map<std::string, int> seen;
            for (const LinearTerm& t : row.terms)
                if (vars[static_cast<std::size_t>(t.var)].k >= 0)
                    ++seen[fmt::format("{}*{}", t.coef, key[static_cast<std::size_t>(t.var)])];
            for (const auto& [term, count] : seen)
                if (count % K != 0)
                    return false;
        }
    }
    for (auto& rows : single)
        std::sort(rows.begin(), rows.end());
    return std::adjacent_find(single.begin(), single.end(), std::not_equal_to<>{}) == single.end();
}

// For interchangeable vehicles any solution can be relabelled so that the
// index of each vehicle's first node is non-decreasing in k. Imposing that
// order on the LP removes the mirrored subtrees without changing the optimum.
void order_vehicles(lp::Problem& problem, const MilpModel& model)
{
    const auto& vars = model.variables();
    int K = 0;
    for (const VarRef& v : vars)
        K = std::max(K, v.k + 1);
    if (K < 2 || !vehicles_interchangeable(model, K))
        return;
    for (int k = 0; k + 1 < K; ++k) {
        const int row = problem.num_rows++;
        for (std::size_t v = 0; v < vars.size(); ++v) {
            const VarRef& x = vars[v];
            if (x.kind != VarKind::X || x.i != 0 || (x.k != k && x.k != k + 1) || x.j == 0)
                continue;
            problem.columns[v].emplace_back(row, x.k == k ? x.j : -x.j);
        }
        problem.relation.push_back(Relation::less_equal);
        problem.rhs.push_back(0.0);
    }
}

std::vector<double> snap(const MilpModel& model, std::vector<double> values)
{
    const auto& vars = model.variables();
    for (std::size_t v = 0; v < vars.size(); ++v) {
        if (vars[v].binary())
            values[v] = std::round(values[v]);
        values[v] = std::clamp(values[v], vars[v].lower, vars[v].upper);
    }
    return values;
}

}  // namespace

Solution solution_from_values(const MilpModel& model, std::vector<double> values)
{
    Solution sol;
    const auto& vars = model.variables();
    const auto& cost = model.objective();
    for (std::size_t u = 0; u < vars.size(); ++u) {
        const VarRef& v = vars[u];
        const double x = values.at(u);
        switch (v.kind) {
        case VarKind::X:
            if (x > 0.5)
                sol.x.insert({v.i, v.j, v.k});
            break;
        case VarKind::S:
            if (x > 0.5)
                sol.s.insert({v.i, v.j, v.c, v.k});
            break;
        case VarKind::C:
            if (x != 0.0)
                sol.charge[{v.i, v.j, v.c, v.k}] = x;
            if (x > 0.0)
                sol.breakdown.charging_cost += cost[u] * x;
            else
                sol.breakdown.v2g_revenue -= cost[u] * x;
            break;
        case VarKind::E:
            sol.energy[{v.j, v.k}] = x;
            break;
        case VarKind::W:
            if (x > 1e-9)
                sol.spill[{v.i, v.j, v.k}] = x;
            break;
        case VarKind::BR:
            if (x > 0.5) {
                sol.served.insert(v.j);
                sol.breakdown.request_revenue -= cost[u];
            }
            break;
        }
    }
    sol.objective = model.evaluate(values);
    sol.values = std::move(values);
    return sol;
}

Solution solve(const MilpModel& model, const SolverConfig& cfg)
{
    auto ordered = lp::from_model(model);
    order_vehicles(ordered, model);
    const auto problem = std::make_shared<const lp::Problem>(std::move(ordered));
    const auto& vars = model.variables();
    std::vector<int> candidates;
    for (int rank = 0; rank < 3; ++rank)
        for (std::size_t v = 0; v < vars.size(); ++v)
            if (vars[v].binary() && class_rank(vars[v].kind) == rank)
                candidates.push_back(static_cast<int>(v));

    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

    PseudoCosts pc(vars.size());
    std::vector<OpenNode> stack;
    std::optional<lp::DualSimplex> current(std::in_place, problem);
    // Retired node LPs; copy-assigning into one reuses its storage.
    std::vector<lp::DualSimplex> pool;
    auto retire = [&] {
        pool.push_back(std::move(*current));
        current.reset();
    };
    double current_bound = -lp::kInf;
    BranchRecord record;
    double incumbent = lp::kInf;
    std::vector<double> best;
    long nodes = 0;
    bool limit_hit = false;
    double open_bound = lp::kInf;

    while (true) {
        if (!current) {
            if (stack.empty())
                break;
            OpenNode node = std::move(stack.back());
            stack.pop_back();
            if (node.parent_bound >= incumbent - cfg.abs_gap) {
                pool.push_back(std::move(node.lp));
                continue;
            }
            current.emplace(std::move(node.lp));
            current->set_bounds(node.var, node.value, node.value);
            current_bound = node.parent_bound;
            record = node.record;
        }
        if (nodes >= cfg.node_limit || elapsed() > cfg.time_limit_s) {
            limit_hit = true;
            open_bound = current_bound;
            for (const OpenNode& o : stack)
                open_bound = std::min(open_bound, o.parent_bound);
            break;
        }
        ++nodes;
        const lp::Status st = current->solve(incumbent < lp::kInf ? incumbent - cfg.abs_gap : lp::kInf);
        if (st == lp::Status::iteration_limit)
            throw Error("LP iteration limit reached at branch-and-bound node " + std::to_string(nodes));
        if (st != lp::Status::optimal) {
            retire();
            continue;
        }
        const double z = current->objective();
        pc.update(record, z);
        if (z >= incumbent - cfg.abs_gap) {
            retire();
            continue;
        }
        if (incumbent < lp::kInf) {
            // A nonbasic binary whose reduced cost exceeds the remaining gap
            // cannot leave its bound in any improving descendant.
            const double room = incumbent - cfg.abs_gap - z;
            for (int v : candidates) {
                const double lo = current->lower(v);
                const double hi = current->upper(v);
                if (lo == hi)
                    continue;
                const double d = current->reduced_cost(v);
                if (current->at_lower(v) && d > room)
                    current->set_bounds(v, lo, lo);
                else if (current->at_upper(v) && -d > room)
                    current->set_bounds(v, hi, hi);
            }
        }
        const int var = pick_branch(model, candidates, *current, cfg, pc);
        if (var < 0) {
            incumbent = z;
            best = current->primal();
            retire();
            continue;
        }
        const double x = current->value(var);
        const double f = x - std::floor(x);
        const bool up_first = f >= 0.5;
        const double first = up_first ? std::ceil(x) : std::floor(x);
        const double second = up_first ? std::floor(x) : std::ceil(x);
        if (pool.empty()) {
            stack.push_back({*current, var, second, z, {var, !up_first, f, z}});
        } else {
            pool.back() = *current;
            stack.push_back({std::move(pool.back()), var, second, z, {var, !up_first, f, z}});
            pool.pop_back();
        }
        current->set_bounds(var, first, first);
        current_bound = z;
        record = {var, up_first, f, z};
    }

    Solution sol;
    if (!best.empty()) {
        sol = solution_from_values(model, snap(model, std::move(best)));
    }
    sol.nodes = nodes;
    if (limit_hit) {
        sol.status = SolveStatus::feasible_with_gap;
        sol.bound = std::min(open_bound, sol.objective);
    } else if (sol.has_solution()) {
        sol.status = SolveStatus::optimal;
        sol.bound = sol.objective;
    } else {
        sol.status = SolveStatus::infeasible;
    }
    return sol;
}

Solution solve(const DagInstance& inst, const Scenario& scenario, const SolverConfig& config)
{
    return solve(build_model(inst, scenario), config);
}

Relaxation lp_relaxation(const MilpModel& model)
{
    lp::DualSimplex simplex(std::make_shared<const lp::Problem>(lp::from_model(model)));
    Relaxation r;
    switch (simplex.solve()) {
    case lp::Status::optimal:
        r.status = SolveStatus::optimal;
        r.objective = simplex.objective();
        r.values = simplex.primal();
        break;
    case lp::Status::infeasible: r.status = SolveStatus::infeasible; break;
    default: throw Error("LP relaxation did not converge");
    }
    return r;
}

std::vector<BatchResult> solve_batch(const RoadNetwork& net, const DepotSpec& depot,
                                     std::span<const Scenario> scenarios, const SolverConfig& config,
                                     Execution exec)
{
    const auto n = static_cast<long>(scenarios.size());
    std::vector<BatchResult> out(scenarios.size());
    auto one = [&](long s) {
        const auto u = static_cast<std::size_t>(s);
        try {
            const Scenario& sc = scenarios[u];
            out[u].instance = build_dag(net, sc.requests, depot, sc.fleet.charging_power_kw, Execution::serial);
            out[u].solution = solve(out[u].instance, sc, config);
        } catch (const std::exception& e) {
            out[u].solution = Solution{};
            out[u].error = e.what();
        }
    };
    if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (long s = 0; s < n; ++s)
            one(s);
    } else {
        for (long s = 0; s < n; ++s)
            one(s);
    }
    return out;
}

}  // namespace samod
