#pragma once

#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "samod/model.hpp"

namespace samod::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// min c'x  s.t.  row_r(A) x (<=, =, >=) b_r,  lower <= x <= upper.
/// Columns are stored sparse. Every bound on the side the cost pushes
/// towards must be finite (always true for the fleet models).
struct Problem {
    int num_rows = 0;
    std::vector<double> cost;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<std::vector<std::pair<int, double>>> columns;
    std::vector<Relation> relation;
    std::vector<double> rhs;

    int num_cols() const noexcept { return static_cast<int>(cost.size()); }
};

Problem from_model(const MilpModel& model);

enum class Status { optimal, infeasible, cutoff, iteration_limit };

/// Bounded dual simplex on an explicit basis inverse. Starts from the slack
/// basis with every structural at the bound its cost prefers, which is
/// dual feasible, so no phase one is needed. Copies are independent and
/// warm-start from the copied basis, which is how branch and bound
/// snapshots a node.
class DualSimplex {
public:
    explicit DualSimplex(std::shared_ptr<const Problem> problem);

    /// Stops with Status::cutoff once the objective provably exceeds
    /// `cutoff`.
    Status solve(double cutoff = kInf);

    /// Changes the bounds of a structural column; the current basis stays
    /// dual feasible.
    void set_bounds(int col, double lower, double upper);
    double lower(int col) const { return lo_[static_cast<std::size_t>(col)]; }
    double upper(int col) const { return hi_[static_cast<std::size_t>(col)]; }

    double objective() const;
    double value(int col) const { return x_[static_cast<std::size_t>(col)]; }
    std::vector<double> primal() const;
    /// Reduced cost of a nonbasic column at the last optimum (0 when basic).
    double reduced_cost(int col) const { return d_[static_cast<std::size_t>(col)]; }
    bool at_lower(int col) const { return at_[static_cast<std::size_t>(col)] == At::lower; }
    bool at_upper(int col) const { return at_[static_cast<std::size_t>(col)] == At::upper; }
    long iterations() const noexcept { return iterations_; }

private:
    enum class At : unsigned char { basic, lower, upper };

    double entry(int col, const std::vector<double>& row_vec) const;
    void column(int col, std::vector<double>& out) const;
    void refactor();
    double residual() const;  // max scaled |Ax + s - b| at the current iterate
    void recompute_primal();
    void recompute_duals();
    void pivot(int r, int q, const std::vector<double>& alpha_row, const std::vector<double>& alpha_col, double target);

    std::shared_ptr<const Problem> p_;
    int m_ = 0;
    int n_ = 0;  // structural columns; slack r is column n_ + r
    std::vector<double> lo_, hi_, x_, d_;
    std::vector<At> at_;
    std::vector<int> basis_;
    std::vector<double> binv_;  // m x m, row-major
    std::vector<std::size_t> nz_;  // scratch
    long iterations_ = 0;
    int since_refactor_ = 0;
};

}  // namespace samod::lp
