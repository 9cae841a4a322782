#include "samod/lp.hpp"

#include <algorithm>
#include <cmath>

namespace samod::lp {

namespace {

constexpr double kPrimalTol = 1e-9;
constexpr double kDualTol = 1e-9;
constexpr double kPivotTol = 1e-7;
constexpr double kResidualTol = 1e-10;
constexpr int kStallLimit = 50;

}  // namespace

Problem from_model(const MilpModel& model)
{
    Problem p;
    const auto& vars = model.variables();
    const auto& rows = model.constraints();
    p.num_rows = static_cast<int>(rows.size());
    p.cost = model.objective();
    p.lower.reserve(vars.size());
    p.upper.reserve(vars.size());
    for (const VarRef& v : vars) {
        p.lower.push_back(v.lower);
        p.upper.push_back(v.upper);
    }
    p.columns.resize(vars.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (const LinearTerm& t : rows[r].terms)
            if (t.coef != 0.0)
                p.columns[static_cast<std::size_t>(t.var)].emplace_back(static_cast<int>(r), t.coef);
        p.relation.push_back(rows[r].relation);
        p.rhs.push_back(rows[r].rhs);
    }
    // Merge duplicate (row, column) entries so the basis never sees them twice.
    for (auto& col : p.columns) {
        std::stable_sort(col.begin(), col.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<std::pair<int, double>> merged;
        for (const auto& e : col) {
            if (!merged.empty() && merged.back().first == e.first)
                merged.back().second += e.second;
            else
                merged.push_back(e);
        }
        std::erase_if(merged, [](const auto& e) { return e.second == 0.0; });
        col = std::move(merged);
    }
    return p;
}

DualSimplex::DualSimplex(std::shared_ptr<const Problem> problem) : p_(std::move(problem))
{
    m_ = p_->num_rows;
    n_ = p_->num_cols();
    const auto total = static_cast<std::size_t>(n_ + m_);
    lo_.resize(total);
    hi_.resize(total);
    x_.assign(total, 0.0);
    d_.assign(total, 0.0);
    at_.resize(total);
    for (int j = 0; j < n_; ++j) {
        const auto u = static_cast<std::size_t>(j);
        lo_[u] = p_->lower[u];
        hi_[u] = p_->upper[u];
        d_[u] = p_->cost[u];
        const bool to_lower = d_[u] > 0.0 || (d_[u] == 0.0 && std::isfinite(lo_[u]));
        const double b = to_lower ? lo_[u] : hi_[u];
        if (!std::isfinite(b))
            throw Error("LP column " + std::to_string(j) + " is unbounded in its cost direction");
        at_[u] = to_lower ? At::lower : At::upper;
        x_[u] = b;
    }
    basis_.resize(static_cast<std::size_t>(m_));
    for (int r = 0; r < m_; ++r) {
        const auto s = static_cast<std::size_t>(n_ + r);
        switch (p_->relation[static_cast<std::size_t>(r)]) {
        case Relation::less_equal: lo_[s] = 0.0; hi_[s] = kInf; break;
        case Relation::greater_equal: lo_[s] = -kInf; hi_[s] = 0.0; break;
        case Relation::equal: lo_[s] = 0.0; hi_[s] = 0.0; break;
        }
        at_[s] = At::basic;
        basis_[static_cast<std::size_t>(r)] = n_ + r;
    }
    binv_.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(m_), 0.0);
    for (int r = 0; r < m_; ++r)
        binv_[static_cast<std::size_t>(r) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(r)] = 1.0;
    recompute_primal();
}

double DualSimplex::entry(int col, const std::vector<double>& row_vec) const
{
    if (col >= n_)
        return row_vec[static_cast<std::size_t>(col - n_)];
    double s = 0.0;
    for (const auto& [r, a] : p_->columns[static_cast<std::size_t>(col)])
        s += row_vec[static_cast<std::size_t>(r)] * a;
    return s;
}

void DualSimplex::column(int col, std::vector<double>& out) const
{
    const auto m = static_cast<std::size_t>(m_);
    out.assign(m, 0.0);
    auto add = [&](std::size_t r, double a) {
        for (std::size_t i = 0; i < m; ++i)
            out[i] += binv_[i * m + r] * a;
    };
    if (col >= n_)
        add(static_cast<std::size_t>(col - n_), 1.0);
    else
        for (const auto& [r, a] : p_->columns[static_cast<std::size_t>(col)])
            add(static_cast<std::size_t>(r), a);
}

void DualSimplex::refactor()
{
    const auto m = static_cast<std::size_t>(m_);
    std::vector<double> b(m * m, 0.0);
    for (std::size_t c = 0; c < m; ++c) {
        const int col = basis_[c];
        if (col >= n_)
            b[static_cast<std::size_t>(col - n_) * m + c] = 1.0;
        else
            for (const auto& [r, a] : p_->columns[static_cast<std::size_t>(col)])
                b[static_cast<std::size_t>(r) * m + c] = a;
    }
    std::vector<double> inv(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        inv[i * m + i] = 1.0;
    // Gauss-Jordan with partial pivoting on [B | I]; the basis is mostly
    // slack columns, so only the nonzeros of each pivot row are swept.
    std::vector<std::size_t> nz_b, nz_inv;
    for (std::size_t c = 0; c < m; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < m; ++r)
            if (std::abs(b[r * m + c]) > std::abs(b[piv * m + c]))
                piv = r;
        if (std::abs(b[piv * m + c]) < 1e-12)
            throw Error("singular simplex basis");
        if (piv != c) {
            std::swap_ranges(b.begin() + static_cast<std::ptrdiff_t>(c * m), b.begin() + static_cast<std::ptrdiff_t>(c * m + m),
                             b.begin() + static_cast<std::ptrdiff_t>(piv * m));
            std::swap_ranges(inv.begin() + static_cast<std::ptrdiff_t>(c * m), inv.begin() + static_cast<std::ptrdiff_t>(c * m + m),
                             inv.begin() + static_cast<std::ptrdiff_t>(piv * m));
        }
        const double d = b[c * m + c];
        nz_b.clear();
        nz_inv.clear();
        for (std::size_t k = 0; k < m; ++k) {
            if (b[c * m + k] != 0.0) {
                b[c * m + k] /= d;
                nz_b.push_back(k);
            }
            if (inv[c * m + k] != 0.0) {
                inv[c * m + k] /= d;
                nz_inv.push_back(k);
            }
        }
        for (std::size_t r = 0; r < m; ++r) {
            if (r == c)
                continue;
            const double f = b[r * m + c];
            if (f == 0.0)
                continue;
            for (std::size_t k : nz_b)
                b[r * m + k] -= f * b[c * m + k];
            for (std::size_t k : nz_inv)
                inv[r * m + k] -= f * inv[c * m + k];
        }
    }
    binv_ = std::move(inv);
    since_refactor_ = 0;
}

void DualSimplex::recompute_primal()
{
    const auto m = static_cast<std::size_t>(m_);
    std::vector<double> rhs(p_->rhs);
    for (int j = 0; j < n_ + m_; ++j) {
        const auto u = static_cast<std::size_t>(j);
        if (at_[u] == At::basic || x_[u] == 0.0)
            continue;
        if (j >= n_)
            rhs[static_cast<std::size_t>(j - n_)] -= x_[u];
        else
            for (const auto& [r, a] : p_->columns[u])
                rhs[static_cast<std::size_t>(r)] -= a * x_[u];
    }
    std::vector<std::size_t> nz;
    for (std::size_t k = 0; k < m; ++k)
        if (rhs[k] != 0.0)
            nz.push_back(k);
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t k : nz)
            s += binv_[i * m + k] * rhs[k];
        x_[static_cast<std::size_t>(basis_[i])] = s;
    }
}

double DualSimplex::residual() const
{
    std::vector<double> ax(static_cast<std::size_t>(m_), 0.0);
    for (int j = 0; j < n_; ++j) {
        const double xj = x_[static_cast<std::size_t>(j)];
        if (xj != 0.0)
            for (const auto& [r, a] : p_->columns[static_cast<std::size_t>(j)])
                ax[static_cast<std::size_t>(r)] += a * xj;
    }
    double worst = 0.0;
    for (int r = 0; r < m_; ++r) {
        const auto u = static_cast<std::size_t>(r);
        const double rhs = p_->rhs[u];
        worst = std::max(worst, std::abs(ax[u] + x_[static_cast<std::size_t>(n_ + r)] - rhs) / (1.0 + std::abs(rhs)));
    }
    return worst;
}

void DualSimplex::recompute_duals()
{
    const auto m = static_cast<std::size_t>(m_);
    std::vector<double> y(m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        const int col = basis_[r];
        const double cb = col < n_ ? p_->cost[static_cast<std::size_t>(col)] : 0.0;
        if (cb == 0.0)
            continue;
        for (std::size_t k = 0; k < m; ++k)
            y[k] += cb * binv_[r * m + k];
    }
    bool flipped = false;
    for (int j = 0; j < n_ + m_; ++j) {
        const auto u = static_cast<std::size_t>(j);
        if (at_[u] == At::basic) {
            d_[u] = 0.0;
            continue;
        }
        const double c = j < n_ ? p_->cost[u] : 0.0;
        d_[u] = c - entry(j, y);
        // Restore dual feasibility drifted past tolerance by moving a boxed
        // column to its other bound.
        if (at_[u] == At::lower && d_[u] < -kDualTol && std::isfinite(hi_[u]) && lo_[u] != hi_[u]) {
            at_[u] = At::upper;
            x_[u] = hi_[u];
            flipped = true;
        } else if (at_[u] == At::upper && d_[u] > kDualTol && std::isfinite(lo_[u]) && lo_[u] != hi_[u]) {
            at_[u] = At::lower;
            x_[u] = lo_[u];
            flipped = true;
        }
    }
    if (flipped)
        recompute_primal();
}

void DualSimplex::set_bounds(int col, double lower, double upper)
{
    const auto u = static_cast<std::size_t>(col);
    lo_[u] = lower;
    hi_[u] = upper;
    if (at_[u] == At::basic)
        return;
    const double target = at_[u] == At::lower ? lower : upper;
    const double delta = target - x_[u];
    if (delta == 0.0)
        return;
    std::vector<double> a;
    column(col, a);
    for (std::size_t i = 0; i < a.size(); ++i)
        x_[static_cast<std::size_t>(basis_[i])] -= a[i] * delta;
    x_[u] = target;
}

double DualSimplex::objective() const
{
    double z = 0.0;
    for (int j = 0; j < n_; ++j)
        z += p_->cost[static_cast<std::size_t>(j)] * x_[static_cast<std::size_t>(j)];
    return z;
}

std::vector<double> DualSimplex::primal() const
{
    return {x_.begin(), x_.begin() + n_};
}

void DualSimplex::pivot(int r, int q, const std::vector<double>& alpha_row, const std::vector<double>& alpha_col,
                        double target)
{
    const auto m = static_cast<std::size_t>(m_);
    const auto ur = static_cast<std::size_t>(r);
    const auto uq = static_cast<std::size_t>(q);
    const int leaving = basis_[ur];
    const auto ul = static_cast<std::size_t>(leaving);
    const double piv = alpha_col[ur];

    const double step = (x_[ul] - target) / piv;
    for (std::size_t i = 0; i < m; ++i)
        x_[static_cast<std::size_t>(basis_[i])] -= alpha_col[i] * step;
    x_[uq] += step;
    x_[ul] = target;
    at_[ul] = target == lo_[ul] ? At::lower : At::upper;

    const double theta = d_[uq] / alpha_row[uq];
    for (int j = 0; j < n_ + m_; ++j) {
        const auto u = static_cast<std::size_t>(j);
        if (at_[u] != At::basic && alpha_row[u] != 0.0)
            d_[u] -= theta * alpha_row[u];
    }
    d_[ul] = -theta;
    d_[uq] = 0.0;
    at_[uq] = At::basic;
    basis_[ur] = q;

    double* prow = binv_.data() + ur * m;
    nz_.clear();
    for (std::size_t k = 0; k < m; ++k)
        if (prow[k] != 0.0) {
            prow[k] /= piv;
            nz_.push_back(k);
        }
    for (std::size_t i = 0; i < m; ++i) {
        if (i == ur || alpha_col[i] == 0.0)
            continue;
        const double f = alpha_col[i];
        double* row = binv_.data() + i * m;
        for (std::size_t k : nz_)
            row[k] -= f * prow[k];
    }
    ++since_refactor_;
}

Status DualSimplex::solve(double cutoff)
{
    const auto m = static_cast<std::size_t>(m_);
    const auto total = static_cast<std::size_t>(n_ + m_);
    const int refactor_every = std::max(50, m_ / 2);
    const long max_iter = 100L * static_cast<long>(total) + 10000;
    long local = 0;
    bool verified = false;
    bool bland = false;
    int stall = 0;
    double last_obj = objective();
    std::vector<double> rho(m), alpha_row(total), alpha_col(m);

    while (true) {
        if (since_refactor_ >= refactor_every) {
            refactor();
            recompute_primal();
            recompute_duals();
        }
        if (++local > max_iter)
            return Status::iteration_limit;

        // Leaving row: largest bound violation, or lowest column under Bland.
        int r = -1;
        double best = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const auto j = static_cast<std::size_t>(basis_[i]);
            double viol = 0.0;
            if (x_[j] < lo_[j] - kPrimalTol * (1.0 + std::abs(lo_[j])))
                viol = lo_[j] - x_[j];
            else if (x_[j] > hi_[j] + kPrimalTol * (1.0 + std::abs(hi_[j])))
                viol = x_[j] - hi_[j];
            if (viol <= 0.0)
                continue;
            if (bland ? (r < 0 || basis_[i] < basis_[static_cast<std::size_t>(r)]) : viol > best) {
                r = static_cast<int>(i);
                best = viol;
            }
        }
        if (r < 0) {
            if (!verified && since_refactor_ > 0) {
                if (residual() > kResidualTol) {
                    refactor();
                    recompute_primal();
                } else {
                    recompute_primal();
                }
                recompute_duals();
                verified = true;
                continue;
            }
            return Status::optimal;
        }
        verified = false;

        const double obj = objective();
        if (obj > cutoff)
            return Status::cutoff;
        if (obj > last_obj + 1e-12 * (1.0 + std::abs(last_obj))) {
            stall = 0;
            bland = false;
        } else if (++stall > kStallLimit) {
            bland = true;
        }
        last_obj = obj;

        const auto ur = static_cast<std::size_t>(r);
        const auto leave = static_cast<std::size_t>(basis_[ur]);
        const bool to_lower = x_[leave] < lo_[leave];
        const double target = to_lower ? lo_[leave] : hi_[leave];
        std::copy(binv_.begin() + static_cast<std::ptrdiff_t>(ur * m), binv_.begin() + static_cast<std::ptrdiff_t>(ur * m + m),
                  rho.begin());

        // Ratio test over nonbasic columns that move x_leave towards target.
        double tmax = kInf;
        for (int j = 0; j < n_ + m_; ++j) {
            const auto u = static_cast<std::size_t>(j);
            alpha_row[u] = 0.0;
            if (at_[u] == At::basic || lo_[u] == hi_[u])
                continue;
            const double a = entry(j, rho);
            alpha_row[u] = a;
            const bool eligible = to_lower ? (at_[u] == At::lower ? a < -kPivotTol : a > kPivotTol)
                                           : (at_[u] == At::lower ? a > kPivotTol : a < -kPivotTol);
            if (!eligible)
                continue;
            const double bound = bland ? std::abs(d_[u]) / std::abs(a) : (std::abs(d_[u]) + kDualTol) / std::abs(a);
            tmax = std::min(tmax, bound);
        }
        int q = -1;
        double q_alpha = 0.0;
        for (int j = 0; j < n_ + m_; ++j) {
            const auto u = static_cast<std::size_t>(j);
            const double a = alpha_row[u];
            if (a == 0.0)
                continue;
            const bool eligible = to_lower ? (at_[u] == At::lower ? a < -kPivotTol : a > kPivotTol)
                                           : (at_[u] == At::lower ? a > kPivotTol : a < -kPivotTol);
            if (!eligible)
                continue;
            const double ratio = std::abs(d_[u]) / std::abs(a);
            if (bland) {
                if (ratio <= tmax + 1e-12 && q < 0) {
                    q = j;
                    q_alpha = a;
                }
            } else if (ratio <= tmax && std::abs(a) > std::abs(q_alpha)) {
                q = j;
                q_alpha = a;
            }
        }
        if (q < 0)
            return Status::infeasible;

        column(q, alpha_col);
        if (std::abs(alpha_col[ur] - q_alpha) > 1e-7 * (1.0 + std::abs(q_alpha))) {
            if (since_refactor_ == 0)
                throw Error("simplex lost numerical accuracy");
            refactor();
            recompute_primal();
            recompute_duals();
            continue;
        }
        const auto uq = static_cast<std::size_t>(q);
        alpha_row[uq] = alpha_col[ur];
        if ((at_[uq] == At::lower && d_[uq] < 0.0) || (at_[uq] == At::upper && d_[uq] > 0.0))
            d_[uq] = 0.0;
        pivot(r, q, alpha_row, alpha_col, target);
        ++iterations_;
    }
}

}  // namespace samod::lp
