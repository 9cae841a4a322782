#pragma once

#include <compare>
#include <limits>
#include <map>
#include <set>
#include <vector>

namespace samod {

struct Transition {
    int i = 0;
    int j = 0;
    int k = 0;
    auto operator<=>(const Transition&) const = default;
};

struct StationVisit {
    int i = 0;
    int j = 0;
    int c = 0;
    int k = 0;
    auto operator<=>(const StationVisit&) const = default;
};

struct NodeVehicle {
    int j = 0;
    int k = 0;
    auto operator<=>(const NodeVehicle&) const = default;
};

struct CostBreakdown {
    double charging_cost = 0.0;    // sum of p * C over C > 0
    double v2g_revenue = 0.0;      // sum of p * |C| over C < 0
    double request_revenue = 0.0;  // fares of served requests

    double trading_profit() const noexcept { return v2g_revenue - charging_cost; }
    /// The minimized quantity: charging cost minus all revenue.
    double objective() const noexcept { return charging_cost - v2g_revenue - request_revenue; }
};

enum class SolveStatus { optimal, feasible_with_gap, infeasible, unbounded };

const char* to_string(SolveStatus s) noexcept;

struct Solution {
    SolveStatus status = SolveStatus::infeasible;
    double objective = std::numeric_limits<double>::infinity();
    /// Proven lower bound; equals `objective` when optimal.
    double bound = -std::numeric_limits<double>::infinity();
    long nodes = 0;

    std::set<Transition> x;
    std::set<StationVisit> s;
    std::map<StationVisit, double> charge;   // C, signed
    std::map<NodeVehicle, double> energy;    // E
    std::map<Transition, double> spill;      // W, only nonzero entries
    std::set<int> served;
    CostBreakdown breakdown;

    /// Raw values in model variable order; empty when built without a model.
    std::vector<double> values;

    bool has_solution() const noexcept { return objective < std::numeric_limits<double>::infinity(); }
    double gap() const noexcept { return objective - bound; }
};

}  // namespace samod
