#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "pvflex/errors.hpp"

namespace pvflex {

// min c'x  s.t.  A x = b,  lower <= x <= upper.
// All bounds finite; A stored dense row-major (rows x cols).
struct LinearProgram {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> c;
    std::vector<double> lower;
    std::vector<double> upper;

    double& at(int row, int col) { return a[static_cast<std::size_t>(row) * cols + col]; }
    double at(int row, int col) const { return a[static_cast<std::size_t>(row) * cols + col]; }
};

enum class LpStatus { optimal, infeasible, iteration_limit };

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    double objective = 0.0;
    std::vector<double> x;
};

struct SimplexOptions {
    double tol_opt = 1e-9;    // reduced-cost optimality threshold
    double tol_feas = 1e-9;   // bound/ratio feasibility threshold
    double tol_pivot = 1e-10; // smallest acceptable pivot magnitude
    int max_iterations = 50000;
    int bland_after_stall = 400; // consecutive degenerate pivots before Bland's rule
};

// Primal simplex for box-bounded variables with a dense working tableau.
// Deterministic: entering by most-negative reduced cost (ties -> lowest
// index), leaving by two-pass ratio test (ties -> largest pivot, then lowest
// row). Degeneracy falls back to Bland's rule after a stall.
class BoundedSimplex {
public:
    // Generic entry point: all-artificial start, two phases.
    LpSolution solve(const LinearProgram& lp, const SimplexOptions& opt = {}) {
        return solve_hinted(lp, {}, opt);
    }

    // `basis_hint` names one variable per row. If the hinted basis is
    // triangular (singleton-sweep order exists) and primal feasible, phase 1
    // is skipped entirely; otherwise we silently fall back to artificials.
    LpSolution solve_hinted(const LinearProgram& lp, const std::vector<int>& basis_hint,
                            const SimplexOptions& opt = {}) {
        opt_ = opt;
        init_dimensions(lp);
        if (basis_hint.empty() || !try_crash_basis(lp, basis_hint)) {
            load_artificial_basis(lp);
            if (!run_phase1(lp)) {
                return LpSolution{LpStatus::infeasible, 0.0, {}};
            }
        }
        if (!iterate(lp.c, /*phase1=*/false)) {
            return LpSolution{LpStatus::iteration_limit, 0.0, {}};
        }
        return extract(lp);
    }

private:
    enum class VarState : unsigned char { at_lower, at_upper, basic };

    SimplexOptions opt_;
    int m_ = 0;       // rows
    int n_ = 0;       // structural columns
    int ncols_ = 0;   // structural + artificial columns
    std::vector<double> tableau_; // m x ncols, = B^-1 A
    std::vector<double> beta_;    // basic variable values
    std::vector<double> dcost_;   // reduced costs
    std::vector<double> lower_, upper_;
    std::vector<double> alpha_;   // scratch: entering column
    std::vector<int> basis_;
    std::vector<VarState> state_;

    double& tab(int i, int j) { return tableau_[static_cast<std::size_t>(i) * ncols_ + j]; }

    double nonbasic_value(int j) const {
        return state_[j] == VarState::at_upper ? upper_[j] : lower_[j];
    }

    void init_dimensions(const LinearProgram& lp) {
        m_ = lp.rows;
        n_ = lp.cols;
        ncols_ = n_ + m_; // artificial slots always allocated; bounds pin them when unused
        tableau_.assign(static_cast<std::size_t>(m_) * ncols_, 0.0);
        beta_.assign(m_, 0.0);
        dcost_.assign(ncols_, 0.0);
        alpha_.assign(m_, 0.0);
        basis_.assign(m_, -1);
        state_.assign(ncols_, VarState::at_lower);
        lower_.assign(ncols_, 0.0);
        upper_.assign(ncols_, 0.0);
        std::copy(lp.lower.begin(), lp.lower.end(), lower_.begin());
        std::copy(lp.upper.begin(), lp.upper.end(), upper_.begin());
    }

    // Residual b - N x_N with every structural variable at its current bound.
    std::vector<double> bound_residual(const LinearProgram& lp) const {
        std::vector<double> r = lp.b;
        for (int i = 0; i < m_; ++i) {
            const double* row = lp.a.data() + static_cast<std::size_t>(i) * n_;
            double acc = 0.0;
            for (int j = 0; j < n_; ++j) acc += row[j] * nonbasic_value(j);
            r[i] -= acc;
        }
        return r;
    }

    void choose_nonbasic_bounds(const LinearProgram& lp) {
        for (int j = 0; j < n_; ++j) {
            state_[j] = lp.c[j] < 0.0 ? VarState::at_upper : VarState::at_lower;
        }
    }

    void load_artificial_basis(const LinearProgram& lp) {
        choose_nonbasic_bounds(lp);
        // Tableau = A on the structural block, identity on artificials.
        std::fill(tableau_.begin(), tableau_.end(), 0.0);
        for (int i = 0; i < m_; ++i) {
            const double* row = lp.a.data() + static_cast<std::size_t>(i) * n_;
            double* trow = tableau_.data() + static_cast<std::size_t>(i) * ncols_;
            std::copy(row, row + n_, trow);
            trow[n_ + i] = 1.0;
        }
        const std::vector<double> r = bound_residual(lp);
        for (int i = 0; i < m_; ++i) {
            const int art = n_ + i;
            basis_[i] = art;
            state_[art] = VarState::basic;
            beta_[i] = r[i];
            lower_[art] = std::min(0.0, r[i]);
            upper_[art] = std::max(0.0, r[i]);
        }
    }

    bool run_phase1(const LinearProgram& lp) {
        std::vector<double> c1(ncols_, 0.0);
        for (int i = 0; i < m_; ++i) {
            c1[n_ + i] = beta_[i] >= 0.0 ? 1.0 : -1.0;
        }
        if (!iterate(c1, /*phase1=*/true)) {
            throw SolverError("simplex phase 1 exceeded the iteration limit");
        }
        double infeasibility = 0.0;
        for (int i = 0; i < m_; ++i) {
            const int k = basis_[i];
            if (k >= n_) infeasibility += std::fabs(beta_[i]);
        }
        for (int j = n_; j < ncols_; ++j) {
            if (state_[j] != VarState::basic) infeasibility += std::fabs(nonbasic_value(j));
        }
        if (infeasibility > 1e-7) return false;
        // Pin artificials at zero for phase 2.
        for (int j = n_; j < ncols_; ++j) {
            lower_[j] = 0.0;
            upper_[j] = 0.0;
            if (state_[j] != VarState::basic) state_[j] = VarState::at_lower;
        }
        (void)lp;
        return true;
    }

    // --- warm start from a caller-provided basis -----------------------------

    bool try_crash_basis(const LinearProgram& lp, const std::vector<int>& hint) {
        if (static_cast<int>(hint.size()) != m_) return false;
        std::vector<char> in_basis(n_, 0);
        for (int v : hint) {
            if (v < 0 || v >= n_ || in_basis[v]) return false;
            in_basis[v] = 1;
        }
        // Sparse columns of B, indexed by basis position.
        std::vector<std::vector<std::pair<int, double>>> bcol(m_);
        std::vector<int> rowcount(m_, 0);
        for (int k = 0; k < m_; ++k) {
            const int v = hint[k];
            for (int i = 0; i < m_; ++i) {
                const double a = lp.at(i, v);
                if (a != 0.0) bcol[k].push_back({i, a});
            }
            if (bcol[k].empty()) return false;
        }
        // Singleton sweep: find an elimination order making B triangular.
        std::vector<int> remaining_rows(m_, 1);
        std::vector<int> live_nnz(m_);
        for (int k = 0; k < m_; ++k) live_nnz[k] = static_cast<int>(bcol[k].size());
        std::vector<int> order_col;   // basis positions in elimination order
        std::vector<int> order_row;   // matching pivot rows
        order_col.reserve(m_);
        order_row.reserve(m_);
        std::vector<char> col_done(m_, 0);
        // rows_of[i]: basis positions whose column touches row i
        std::vector<std::vector<int>> rows_of(m_);
        for (int k = 0; k < m_; ++k)
            for (const auto& [i, a] : bcol[k]) rows_of[i].push_back(k);
        std::vector<int> queue;
        for (int k = 0; k < m_; ++k)
            if (live_nnz[k] == 1) queue.push_back(k);
        std::size_t qhead = 0;
        while (qhead < queue.size()) {
            const int k = queue[qhead++];
            if (col_done[k] || live_nnz[k] != 1) continue;
            int pivot_row = -1;
            double pivot_val = 0.0;
            for (const auto& [i, a] : bcol[k]) {
                if (remaining_rows[i]) {
                    pivot_row = i;
                    pivot_val = a;
                }
            }
            if (pivot_row < 0 || std::fabs(pivot_val) < opt_.tol_pivot) return false;
            col_done[k] = 1;
            remaining_rows[pivot_row] = 0;
            order_col.push_back(k);
            order_row.push_back(pivot_row);
            for (int other : rows_of[pivot_row]) {
                if (!col_done[other] && --live_nnz[other] == 1) queue.push_back(other);
            }
        }
        if (static_cast<int>(order_col.size()) != m_) return false;

        // The sweep order makes the permuted basis upper triangular: column
        // order_col[s] only touches rows order_row[0..s], so every non-pivot
        // entry of row order_row[s] belongs to a later-eliminated column.
        // Primal solves therefore run backward; the dual solve runs forward.
        for (int j = 0; j < n_; ++j) state_[j] = VarState::at_lower;
        for (int k = 0; k < m_; ++k) state_[hint[k]] = VarState::basic;
        std::vector<double> resid = lp.b;
        for (int i = 0; i < m_; ++i) {
            const double* row = lp.a.data() + static_cast<std::size_t>(i) * n_;
            double acc = 0.0;
            for (int j = 0; j < n_; ++j) {
                if (state_[j] != VarState::basic) acc += row[j] * nonbasic_value(j);
            }
            resid[i] -= acc;
        }
        // xb[step]: value of basic position order_col[step]
        std::vector<double> xb(m_, 0.0);
        std::vector<std::vector<std::pair<int, double>>> brow(m_); // (basis pos, coeff) per row
        for (int k = 0; k < m_; ++k)
            for (const auto& [i, a] : bcol[k]) brow[i].push_back({k, a});
        std::vector<int> pos_step(m_, -1);
        for (int s = 0; s < m_; ++s) pos_step[order_col[s]] = s;
        for (int s = m_ - 1; s >= 0; --s) {
            const int k = order_col[s];
            const int r = order_row[s];
            double acc = resid[r];
            double piv = 0.0;
            for (const auto& [kk, a] : brow[r]) {
                if (kk == k) piv = a;
                else acc -= a * xb[pos_step[kk]];
            }
            xb[s] = acc / piv;
        }
        for (int s = 0; s < m_; ++s) {
            const int k = order_col[s];
            const double v = xb[s];
            if (v < lp.lower[hint[k]] - opt_.tol_feas || v > lp.upper[hint[k]] + opt_.tol_feas) {
                for (int kk = 0; kk < m_; ++kk) state_[hint[kk]] = VarState::at_lower;
                return false; // hinted basis not primal feasible
            }
        }

        // Tableau rows: B^-1 A. Solve B y = a_col per structural column.
        std::fill(tableau_.begin(), tableau_.end(), 0.0);
        std::vector<double> col(m_);
        std::vector<double> xcol(m_);
        for (int j = 0; j < n_; ++j) {
            for (int i = 0; i < m_; ++i) col[i] = lp.at(i, j);
            for (int s = m_ - 1; s >= 0; --s) {
                const int k = order_col[s];
                const int r = order_row[s];
                double acc = col[r];
                double piv = 0.0;
                for (const auto& [kk, a] : brow[r]) {
                    if (kk == k) piv = a;
                    else acc -= a * xcol[pos_step[kk]];
                }
                xcol[s] = acc / piv;
            }
            for (int s = 0; s < m_; ++s) tab(s, j) = xcol[s];
        }
        for (int s = 0; s < m_; ++s) {
            basis_[s] = hint[order_col[s]];
            beta_[s] = xb[s];
        }
        // Duals: forward transpose solve  y' B = c_B', then d = c - y'A.
        std::vector<double> ydual(m_, 0.0);
        for (int s = 0; s < m_; ++s) {
            const int k = order_col[s];
            double acc = lp.c[hint[k]];
            double piv = 0.0;
            for (const auto& [i, a] : bcol[k]) {
                if (i == order_row[s]) piv = a;
                else acc -= a * ydual[i];
            }
            ydual[order_row[s]] = acc / piv;
        }
        for (int j = 0; j < n_; ++j) {
            double acc = lp.c[j];
            for (int i = 0; i < m_; ++i) acc -= ydual[i] * lp.at(i, j);
            dcost_[j] = acc;
        }
        for (int j = n_; j < ncols_; ++j) {
            lower_[j] = upper_[j] = 0.0;
            dcost_[j] = 0.0;
            state_[j] = VarState::at_lower;
        }
        return true;
    }

    // --- core iterations ------------------------------------------------------

    void refresh_reduced_costs(const std::vector<double>& cost) {
        // d_j = c_j - c_B' (B^-1 a_j); tableau already holds B^-1 a_j.
        for (int j = 0; j < ncols_; ++j) {
            dcost_[j] = j < static_cast<int>(cost.size()) ? cost[j] : 0.0;
        }
        for (int i = 0; i < m_; ++i) {
            const int k = basis_[i];
            const double ck = k < static_cast<int>(cost.size()) ? cost[k] : 0.0;
            if (ck == 0.0) continue;
            const double* trow = tableau_.data() + static_cast<std::size_t>(i) * ncols_;
            for (int j = 0; j < ncols_; ++j) dcost_[j] -= ck * trow[j];
        }
        for (int i = 0; i < m_; ++i) dcost_[basis_[i]] = 0.0;
    }

    bool iterate(const std::vector<double>& cost, bool phase1) {
        refresh_reduced_costs(cost);
        int stall = 0;
        bool bland = false;
        for (int iter = 0; iter < opt_.max_iterations; ++iter) {
            // Pricing.
            int enter = -1;
            double best = opt_.tol_opt;
            for (int j = 0; j < ncols_; ++j) {
                if (state_[j] == VarState::basic) continue;
                if (upper_[j] - lower_[j] < 1e-15) continue; // fixed
                const double improvement =
                    state_[j] == VarState::at_lower ? -dcost_[j] : dcost_[j];
                if (improvement > best) {
                    best = improvement;
                    enter = j;
                    if (bland) break;
                }
            }
            if (enter < 0) return true; // optimal for this phase
            if (phase1 && phase1_clean()) return true;

            const double sigma = state_[enter] == VarState::at_lower ? 1.0 : -1.0;
            for (int i = 0; i < m_; ++i) alpha_[i] = tab(i, enter);

            // Two-pass ratio test.
            double tmin = upper_[enter] - lower_[enter]; // bound-flip distance
            for (int i = 0; i < m_; ++i) {
                const double rate = -sigma * alpha_[i];
                const int k = basis_[i];
                double ti;
                if (rate > opt_.tol_pivot) {
                    ti = (upper_[k] - beta_[i]) / rate;
                } else if (rate < -opt_.tol_pivot) {
                    ti = (lower_[k] - beta_[i]) / rate;
                } else {
                    continue;
                }
                if (ti < 0.0) ti = 0.0;
                if (ti < tmin) tmin = ti;
            }
            int leave = -1;
            double leave_abs_alpha = 0.0;
            bool leave_to_upper = false;
            for (int i = 0; i < m_; ++i) {
                const double rate = -sigma * alpha_[i];
                const int k = basis_[i];
                double ti;
                bool to_upper;
                if (rate > opt_.tol_pivot) {
                    ti = (upper_[k] - beta_[i]) / rate;
                    to_upper = true;
                } else if (rate < -opt_.tol_pivot) {
                    ti = (lower_[k] - beta_[i]) / rate;
                    to_upper = false;
                } else {
                    continue;
                }
                if (ti < 0.0) ti = 0.0;
                if (ti <= tmin + opt_.tol_feas) {
                    const double aa = std::fabs(alpha_[i]);
                    if (aa > leave_abs_alpha) {
                        leave_abs_alpha = aa;
                        leave = i;
                        leave_to_upper = to_upper;
                    }
                }
            }

            const double flip_dist = upper_[enter] - lower_[enter];
            if (leave < 0 || flip_dist <= tmin + opt_.tol_feas) {
                // Bound flip: the entering variable crosses its whole range.
                const double step = flip_dist;
                for (int i = 0; i < m_; ++i) beta_[i] += -sigma * alpha_[i] * step;
                state_[enter] =
                    state_[enter] == VarState::at_lower ? VarState::at_upper : VarState::at_lower;
                stall = 0;
                bland = false;
                continue;
            }

            const double step = tmin;
            if (step <= opt_.tol_feas) {
                if (++stall > opt_.bland_after_stall) bland = true;
            } else {
                stall = 0;
                bland = false;
            }

            // Update basic values, swap basis, pivot the tableau.
            for (int i = 0; i < m_; ++i) beta_[i] += -sigma * alpha_[i] * step;
            const int out = basis_[leave];
            state_[out] = leave_to_upper ? VarState::at_upper : VarState::at_lower;
            beta_[leave] = nonbasic_value(enter) + sigma * step;
            basis_[leave] = enter;
            state_[enter] = VarState::basic;

            const double piv = alpha_[leave];
            double* prow = tableau_.data() + static_cast<std::size_t>(leave) * ncols_;
            const double inv = 1.0 / piv;
            for (int j = 0; j < ncols_; ++j) prow[j] *= inv;
            for (int i = 0; i < m_; ++i) {
                if (i == leave) continue;
                const double f = alpha_[i];
                if (f == 0.0) continue;
                double* row = tableau_.data() + static_cast<std::size_t>(i) * ncols_;
                for (int j = 0; j < ncols_; ++j) row[j] -= f * prow[j];
            }
            const double de = dcost_[enter];
            if (de != 0.0) {
                for (int j = 0; j < ncols_; ++j) dcost_[j] -= de * prow[j];
            }
            dcost_[enter] = 0.0;
        }
        return false;
    }

    bool phase1_clean() const {
        for (int i = 0; i < m_; ++i) {
            if (basis_[i] >= n_ && std::fabs(beta_[i]) > 1e-12) return false;
        }
        for (int j = n_; j < ncols_; ++j) {
            if (state_[j] != VarState::basic && std::fabs(nonbasic_value(j)) > 1e-12) return false;
        }
        return true;
    }

    LpSolution extract(const LinearProgram& lp) {
        LpSolution sol;
        sol.status = LpStatus::optimal;
        sol.x.assign(n_, 0.0);
        for (int j = 0; j < n_; ++j) {
            if (state_[j] != VarState::basic) sol.x[j] = nonbasic_value(j);
        }
        for (int i = 0; i < m_; ++i) {
            if (basis_[i] < n_) sol.x[basis_[i]] = beta_[i];
        }
        double obj = 0.0;
        for (int j = 0; j < n_; ++j) obj += lp.c[j] * sol.x[j];
        sol.objective = obj;
        return sol;
    }
};

} // namespace pvflex
