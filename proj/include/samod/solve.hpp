#pragma once

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "samod/instance.hpp"
#include "samod/model.hpp"
#include "samod/network.hpp"
#include "samod/scenario.hpp"
#include "samod/solution.hpp"

namespace samod {

enum class BranchRule { most_fractional, pseudo_cost };

struct SolverConfig {
    double abs_gap = 1e-6;
    double time_limit_s = std::numeric_limits<double>::infinity();
    long node_limit = std::numeric_limits<long>::max();
    BranchRule branch = BranchRule::most_fractional;
};

/// Exact LP-based branch and bound (depth first, X before S before BR).
/// Deterministic for a fixed model and configuration. Hitting the time or
/// node limit yields SolveStatus::feasible_with_gap with the best incumbent
/// (if any) and the bound over the open nodes.
Solution solve(const MilpModel& model, const SolverConfig& config = {});
Solution solve(const DagInstance& inst, const Scenario& scenario, const SolverConfig& config = {});

struct Relaxation {
    SolveStatus status = SolveStatus::infeasible;
    double objective = std::numeric_limits<double>::infinity();
    std::vector<double> values;
};

/// Continuous relaxation (binaries in [0, 1]).
Relaxation lp_relaxation(const MilpModel& model);

/// Maps raw variable values onto the structured solution. Binaries are
/// read as set above 0.5; the breakdown uses the model's cost vector.
Solution solution_from_values(const MilpModel& model, std::vector<double> values);

/// One vehicle's day: nodes 0, ..., I+1 in time order and the station
/// chosen on each leg (-1 for none).
struct VehicleRoute {
    std::vector<int> nodes;
    std::vector<int> stations;
};

struct ChargingPlan {
    bool feasible = false;
    double cost = std::numeric_limits<double>::infinity();  // sum of p * C
    std::vector<double> energy;  // per route node
    std::vector<double> charge;  // per leg, signed
    std::vector<double> spill;   // per leg
};

/// Routes of vehicle 0..K-1 in a solution.
std::vector<VehicleRoute> routes_of(const Solution& solution, const DagInstance& inst, int vehicles);

/// Optimal charging along a fixed route by an exact piecewise-linear
/// dynamic program, independent of the simplex. Among equal-cost plans it
/// prefers no grid exchange and no curtailment. Throws Error when a leg is
/// not a feasible transition or a station is not usable on it.
ChargingPlan solve_chain_charging(const DagInstance& inst, const Scenario& scenario, const VehicleRoute& route);

/// Exhaustive search over assignments, chain orders and station choices,
/// each chain priced by the dynamic program. Limited to I <= 6, K <= 2 and
/// at most two stations; throws Error beyond that.
Solution brute_force_oracle(const DagInstance& inst, const Scenario& scenario);

/// Free-format MPS with integer markers and explicit bounds on every
/// column. Byte-identical for identical models.
void write_mps(std::ostream& out, const MilpModel& model);
/// CPLEX-style LP text.
void write_lp(std::ostream& out, const MilpModel& model);
/// Chooses the format from the extension (.mps or .lp).
void export_model(const MilpModel& model, const std::filesystem::path& path);

/// Name/value text: one "name value" pair per line, '#' comments. A
/// "# status optimal" header marks the values as proven optimal.
void write_solution(std::ostream& out, const MilpModel& model, const Solution& solution);

/// Reads the name/value form produced by external solvers. Unlisted
/// variables are zero. Throws ParseError on unknown names or malformed
/// lines and ValidationError when a bound, integrality or row is violated
/// by more than 1e-5.
Solution import_solution(std::istream& in, const MilpModel& model);
Solution import_solution(const std::filesystem::path& path, const MilpModel& model);

struct BatchResult {
    DagInstance instance;
    Solution solution;
    std::string error;  // non-empty when building or solving this scenario threw
};

/// Builds and solves every scenario, one per OpenMP thread in parallel
/// mode. Results are in input order and independent of the mode. A failing
/// scenario is recorded in its result and does not stop the others.
std::vector<BatchResult> solve_batch(const RoadNetwork& net, const DepotSpec& depot,
                                     std::span<const Scenario> scenarios, const SolverConfig& config = {},
                                     Execution exec = Execution::parallel);

}  // namespace samod
