#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "samod/instance.hpp"
#include "samod/scenario.hpp"

namespace samod {

/// X: transition i->j by vehicle k. S: station c visited on that
/// transition. C: signed energy exchanged there (positive draws from the
/// grid). E: energy of vehicle k after node j. W: curtailed rooftop energy
/// on a transition. BR: request j served.
enum class VarKind { X, S, C, E, W, BR };

struct VarRef {
    VarKind kind = VarKind::X;
    int i = -1;
    int j = -1;
    int c = -1;
    int k = -1;
    double lower = 0.0;
    double upper = 0.0;

    bool binary() const noexcept { return kind == VarKind::X || kind == VarKind::S || kind == VarKind::BR; }
    /// Stable export name: X_i_j_k, S_i_j_c_k, C_i_j_c_k, E_j_k, W_i_j_k, BR_j.
    std::string name() const;
};

enum class Relation { less_equal, equal, greater_equal };

struct LinearTerm {
    int var = 0;
    double coef = 0.0;
};

struct LinearConstraint {
    std::string name;
    std::vector<LinearTerm> terms;
    Relation relation = Relation::less_equal;
    double rhs = 0.0;
};

/// Solver-agnostic minimization MILP.
class MilpModel {
public:
    std::string name = "samod";

    int add_variable(const VarRef& v, double cost = 0.0);
    void add_constraint(LinearConstraint row);

    const std::vector<VarRef>& variables() const noexcept { return vars_; }
    const std::vector<LinearConstraint>& constraints() const noexcept { return rows_; }
    const std::vector<double>& objective() const noexcept { return cost_; }
    const std::string& var_name(int v) const { return names_.at(static_cast<std::size_t>(v)); }

    /// Index of the named variable, or -1.
    int find(std::string_view name) const;
    int binary_count() const;

    double evaluate(const std::vector<double>& values) const;
    /// Largest bound or row violation of `values` (0 when feasible).
    double max_violation(const std::vector<double>& values, std::string* worst = nullptr) const;

private:
    std::vector<VarRef> vars_;
    std::vector<std::string> names_;
    std::vector<double> cost_;
    std::vector<LinearConstraint> rows_;
    std::unordered_map<std::string, int> index_;
};

/// Energy drawn from the battery on transition i->j: driving d_i->o_j plus
/// serving j, and the detour when `station` >= 0.
double transition_energy_kwh(const DagInstance& inst, const FleetSpec& fleet, int i, int j, int station = -1);

/// A transition offers a station stop only when its charge bound is positive.
inline bool station_usable(const DagInstance& inst, int i, int j, int c)
{
    return inst.s_mask(i, j, c) && inst.c_hat(i, j, c) > 0.0;
}

/// E_b_max + max c_hat + max solar harvest on a feasible transition. Large
/// enough that the energy balance is vacuous on unused transitions (where
/// the balance reduces to |E_j - E_i| <= E_b_max) and exact on used ones.
double big_m(const DagInstance& inst, const Scenario& scenario);

/// Throws BuildError when scenario and instance disagree on the request set
/// or the charging power.
MilpModel build_model(const DagInstance& inst, const Scenario& scenario);

}  // namespace samod
