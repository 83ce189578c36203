#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <cstdint>
#include <sstream>
#include <unordered_set>
#include <vector>

#include <Eigen/LU>

#include "config.hpp"

namespace qext {

struct VarBound {
    std::optional<double> lo;
    std::optional<double> hi;
};

// maximize objective . x  subject to  A x <= b  and optional per-variable bounds (free by default)
struct LinearProgram {
    VectorXd objective;
    MatrixXd A;
    VectorXd b;
    std::vector<VarBound> bounds;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
    }
    return "?";
}

struct LpOutcome {
    LpStatus status = LpStatus::Infeasible;
    std::optional<Point> optimizer;
    std::optional<double> value;
    int iterations = 0;
    double max_violation = 0.0;
};

namespace detail {

struct StandardResult {
    LpStatus status;
    VectorXd y;
    int iterations;
};

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// maximize c.y  s.t.  M y <= h, y >= 0. Dense two-phase tableau with equilibrated rows. The
// tableau is rebuilt from the original data every `refresh_every_` pivots. An optimality or
// unboundedness verdict reached more than kStale pivots after the last rebuild is first checked
// against the original rows, and the tableau is rebuilt only if the check fails; this keeps long
// degenerate runs from drifting. A rebuild costs about as much as m pivots, the check about one.
class Tableau {
public:
    static constexpr int kStale = 20;

    Tableau(const MatrixXd& M, const VectorXd& h, const VectorXd& c, const Config& cfg)
        : m_(M.rows()), n_(M.cols()), cfg_(cfg), c_(c) {
        std::vector<int> neg;
        for (int i = 0; i < m_; ++i)
            if (h(i) < 0) neg.push_back(i);
        k_ = static_cast<int>(neg.size());
        cols_ = n_ + m_ + k_;
        T_ = RowMajor::Zero(m_, cols_ + 1);
        basis_.assign(m_, -1);
        int a = 0;
        for (int i = 0; i < m_; ++i) {
            const double rmax = std::max(M.cols() > 0 ? M.row(i).cwiseAbs().maxCoeff() : 0.0, std::abs(h(i)));
            const double w = rmax > 0 ? 1.0 / rmax : 1.0;
            const double sgn = h(i) < 0 ? -w : w;
            T_.row(i).head(n_) = sgn * M.row(i);
            T_(i, n_ + i) = h(i) < 0 ? -1.0 : 1.0;  // slack of the scaled row
            T_(i, cols_) = sgn * h(i);
            if (h(i) < 0) {
                T_(i, n_ + m_ + a) = 1.0;
                basis_[i] = n_ + m_ + a;
                ++a;
            } else {
                basis_[i] = n_ + i;
            }
            scale_ = std::max(scale_, std::abs(T_(i, cols_)));
        }
        T0_ = T_;
        cap_ = cfg.iteration_factor * (m_ + cols_ + 1);
        refresh_every_ = std::max(40, 2 * m_);
    }

    StandardResult run() {
        if (k_ > 0) {
            g_ = Eigen::RowVectorXd::Zero(cols_ + 1);
            for (int j = n_ + m_; j < cols_; ++j) g_(j) = -1.0;
            price();
            iterate(/*phase_one=*/true);
            if (d_(cols_) > cfg_.feasibility_tol * std::max(1.0, scale_)) return {LpStatus::Infeasible, {}, iters_};
            drive_out_artificials();
        }
        g_ = Eigen::RowVectorXd::Zero(cols_ + 1);
        g_.head(n_) = c_.transpose();
        price();
        if (iterate(false) == LpStatus::Unbounded) return {LpStatus::Unbounded, {}, iters_};
        VectorXd y = VectorXd::Zero(n_);
        for (int i = 0; i < m_; ++i)
            if (basis_[i] < n_) y(basis_[i]) = std::max(0.0, T_(i, cols_));
        return {LpStatus::Optimal, y, iters_};
    }

private:
    // reduced gains d = g - g_B T; d(cols_) is minus the objective value
    void price() {
        d_ = g_;
        for (int i = 0; i < m_; ++i) {
            const double gb = g_(basis_[i]);
            if (gb != 0.0) d_ -= gb * T_.row(i);
        }
        for (int i = 0; i < m_; ++i) d_(basis_[i]) = 0.0;
    }

    // Backward check of the tableau against the original rows: the basic solution satisfies them, and
    // the prices read off the slack columns reproduce the reduced gains of every live column.
    bool consistent() const {
        VectorXd x = VectorXd::Zero(cols_);
        for (int i = 0; i < m_; ++i) x(basis_[i]) = T_(i, cols_);
        const double xs = std::max(1.0, x.cwiseAbs().maxCoeff());
        const VectorXd res = T0_.leftCols(cols_) * x - T0_.col(cols_);
        if (!res.allFinite() || res.cwiseAbs().maxCoeff() > 1e-9 * xs) return false;
        VectorXd y(m_);
        for (int i = 0; i < m_; ++i) y(i) = -d_(n_ + i) * T0_(i, n_ + i);
        const double ds = std::max(1.0, std::max(g_.cwiseAbs().maxCoeff(), y.cwiseAbs().maxCoeff()));
        const Eigen::RowVectorXd d = g_.head(cols_) - y.transpose() * T0_.leftCols(cols_);
        for (int j = 0; j < n_; ++j)
            if (std::abs(d(j) - d_(j)) > 1e-9 * ds) return false;
        for (int i = 0; i < m_; ++i)
            if (std::abs(d(basis_[i])) > 1e-9 * ds) return false;
        return d.allFinite();
    }

    // T = B^{-1} T0 for the current basis; skipped if the basis has become numerically singular
    bool refresh() {
        MatrixXd B(m_, m_);
        for (int i = 0; i < m_; ++i) B.col(i) = T0_.col(basis_[i]);
        const Eigen::PartialPivLU<MatrixXd> lu(B);
        const double rc = lu.rcond();
        if (!(rc > 1e-13)) return false;
        RowMajor fresh = lu.solve(MatrixXd(T0_));
        if (!fresh.allFinite()) return false;
        T_ = std::move(fresh);
        for (int i = 0; i < m_; ++i) {
            T_.col(basis_[i]).setZero();
            T_(i, basis_[i]) = 1.0;
        }
        price();
        since_refresh_ = 0;
        return true;
    }

    LpStatus iterate(bool phase_one) {
        bool bland = false;
        int streak = 0;
        std::unordered_set<std::uint64_t> seen;
        const int limit = n_ + m_;
        bool fresh = false;
        for (;;) {
            if (since_refresh_ >= refresh_every_) fresh = refresh();
            int e = -1;
            double best = cfg_.optimality_tol;
            for (int j = 0; j < limit; ++j) {
                if (d_(j) > best) {
                    e = j;
                    if (bland) break;
                    best = d_(j);
                }
            }
            if (e < 0) {
                if (!fresh && since_refresh_ > kStale && !consistent() && refresh()) {
                    fresh = true;
                    continue;
                }
                return LpStatus::Optimal;
            }
            // ratio test: minimum ratio, ties by largest pivot (or lowest basis index under Bland)
            // entries far below the column's scale are round-off, never pivots
            const double tiny = std::max(cfg_.pivot_tol, 1e-9 * (T_.rows() > 0 ? T_.col(e).cwiseAbs().maxCoeff() : 0.0));
            int r = -1;
            double ratio = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m_; ++i) {
                const double a = T_(i, e);
                if (a > tiny) ratio = std::min(ratio, std::max(0.0, T_(i, cols_)) / a);
            }
            if (std::isfinite(ratio)) {
                const double slack = 1e-12 * std::max(1.0, ratio);
                for (int i = 0; i < m_; ++i) {
                    const double a = T_(i, e);
                    if (!(a > tiny) || std::max(0.0, T_(i, cols_)) / a > ratio + slack) continue;
                    if (r < 0 || (bland ? basis_[i] < basis_[r] : a > T_(r, e))) r = i;
                }
            }
            if (r < 0) {
                if (!fresh && since_refresh_ > kStale && !consistent() && refresh()) {
                    fresh = true;
                    continue;
                }
                if (phase_one) return LpStatus::Optimal;
                return LpStatus::Unbounded;
            }
            // Past a long degenerate streak, bases are remembered; a repeat is a cycle and switches to
            // Bland's rule until the next step of positive length.
            if (ratio <= 1e-12) {
                if (++streak >= cfg_.degenerate_streak && !bland && !seen.insert(basis_key()).second) bland = true;
            } else {
                streak = 0;
                bland = false;
                seen.clear();
            }
            pivot(r, e);
            fresh = false;
            if (++iters_ > cap_) {
                std::ostringstream os;
                os << "simplex iteration cap " << cap_ << " exceeded (rows=" << m_ << ", cols=" << cols_
                   << ", phase=" << (phase_one ? 1 : 2) << ", bland=" << bland << ")";
                throw SolverFailure(os.str());
            }
        }
    }

    // order-independent fingerprint of the basic column set
    std::uint64_t basis_key() const {
        std::uint64_t k = 0;
        for (int b : basis_) {
            std::uint64_t z = static_cast<std::uint64_t>(b) + 0x9e3779b97f4a7c15ULL;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            k += z ^ (z >> 31);
        }
        return k;
    }

    // Artificial columns never re-enter, so only structural, slack and right-hand-side columns are kept current.
    void pivot(int r, int e) {
        const int w = n_ + m_;
        const double p = T_(r, e);
        T_.row(r).head(w) /= p;
        T_(r, cols_) /= p;
        T_(r, e) = 1.0;
        VectorXd f = T_.col(e);
        f(r) = 0.0;
        const double rr = T_(r, cols_);
        for (int i = 0; i < m_; ++i) {
            if (f(i) == 0.0) continue;
            T_.row(i).head(w) -= f(i) * T_.row(r).head(w);
            T_(i, cols_) -= f(i) * rr;
        }
        T_.col(e).setZero();
        T_(r, e) = 1.0;
        const double fd = d_(e);
        if (fd != 0.0) {
            d_.head(w) -= fd * T_.row(r).head(w);
            d_(cols_) -= fd * T_(r, cols_);
        }
        d_(e) = 0.0;
        basis_[r] = e;
        ++since_refresh_;
    }

    void drive_out_artificials() {
        for (int i = 0; i < m_; ++i) {
            if (basis_[i] < n_ + m_) continue;
            int best = -1;
            double mag = 1e-9;
            for (int j = 0; j < n_ + m_; ++j) {
                if (std::abs(T_(i, j)) > mag) {
                    mag = std::abs(T_(i, j));
                    best = j;
                }
            }
            if (best >= 0) pivot(i, best);
        }
    }

    int m_, n_, k_ = 0, cols_ = 0;
    const Config& cfg_;
    VectorXd c_;
    RowMajor T_, T0_;
    Eigen::RowVectorXd g_, d_;
    std::vector<int> basis_;
    int iters_ = 0;
    int cap_ = 0;
    int since_refresh_ = 0;
    int refresh_every_ = 40;
    double scale_ = 1.0;
};

}  // namespace detail

inline LpOutcome lp_solve(const LinearProgram& lp, double tol, const Config& cfg = default_config()) {
    const long nv = lp.objective.size();
    if (lp.A.rows() != lp.b.size()) throw DimensionMismatch("lp_solve: constraint rows != rhs length");
    if (lp.A.cols() != nv) throw DimensionMismatch("lp_solve: constraint cols != objective length");
    if (!lp.bounds.empty() && static_cast<long>(lp.bounds.size()) != nv)
        throw DimensionMismatch("lp_solve: bounds length != objective length");
    if (!(tol > 0)) throw QextError("lp_solve: tolerance must be positive");

    Config local = cfg;
    local.feasibility_tol = tol;

    // map each original variable to x_j = off_j + sum(coef * y_col)
    struct Map {
        double off = 0.0;
        int col_pos = -1;
        int col_neg = -1;
        double sign = 1.0;
    };
    std::vector<Map> map(nv);
    int ncols = 0;
    std::vector<std::pair<int, double>> upper_rows;  // (col, width)
    for (long j = 0; j < nv; ++j) {
        const VarBound vb = lp.bounds.empty() ? VarBound{} : lp.bounds[j];
        if (!vb.lo && !vb.hi) {
            map[j].col_pos = ncols++;
            map[j].col_neg = ncols++;
        } else if (vb.lo) {
            map[j].off = *vb.lo;
            map[j].col_pos = ncols++;
            if (vb.hi) {
                if (*vb.hi < *vb.lo) return LpOutcome{LpStatus::Infeasible, {}, {}, 0, 0.0};
                upper_rows.emplace_back(map[j].col_pos, *vb.hi - *vb.lo);
            }
        } else {
            map[j].off = *vb.hi;
            map[j].col_pos = ncols++;
            map[j].sign = -1.0;
        }
    }
    const long m = lp.A.rows() + static_cast<long>(upper_rows.size());
    MatrixXd M = MatrixXd::Zero(m, ncols);
    VectorXd h(m);
    VectorXd c = VectorXd::Zero(ncols);
    double c0 = 0.0;
    VectorXd shift = VectorXd::Zero(lp.A.rows());
    for (long j = 0; j < nv; ++j) {
        const Map& mp = map[j];
        M.block(0, mp.col_pos, lp.A.rows(), 1) = mp.sign * lp.A.col(j);
        c(mp.col_pos) = mp.sign * lp.objective(j);
        if (mp.col_neg >= 0) {
            M.block(0, mp.col_neg, lp.A.rows(), 1) = -lp.A.col(j);
            c(mp.col_neg) = -lp.objective(j);
        }
        if (mp.off != 0.0) {
            shift += mp.off * lp.A.col(j);
            c0 += mp.off * lp.objective(j);
        }
    }
    h.head(lp.A.rows()) = lp.b - shift;
    for (size_t k = 0; k < upper_rows.size(); ++k) {
        M(lp.A.rows() + k, upper_rows[k].first) = 1.0;
        h(lp.A.rows() + k) = upper_rows[k].second;
    }

    detail::Tableau tab(M, h, c, local);
    const detail::StandardResult res = tab.run();
    LpOutcome out;
    out.status = res.status;
    out.iterations = res.iterations;
    if (res.status != LpStatus::Optimal) return out;
    Point x(nv);
    for (long j = 0; j < nv; ++j) {
        const Map& mp = map[j];
        double v = mp.off + mp.sign * res.y(mp.col_pos);
        if (mp.col_neg >= 0) v -= res.y(mp.col_neg);
        x(j) = v;
    }
    double viol = 0.0;
    if (lp.A.rows() > 0) viol = std::max(0.0, (lp.A * x - lp.b).maxCoeff());
    for (long j = 0; j < nv && !lp.bounds.empty(); ++j) {
        if (lp.bounds[j].lo) viol = std::max(viol, *lp.bounds[j].lo - x(j));
        if (lp.bounds[j].hi) viol = std::max(viol, x(j) - *lp.bounds[j].hi);
    }
    out.max_violation = viol;
    out.value = lp.objective.dot(x);
    (void)c0;
    out.optimizer = std::move(x);
    return out;
}

struct MarginResult {
    double margin = 0.0;
    Point witness;
    bool capped = false;
};

// Largest s with A x <= b - s (rows scaled to unit Euclidean norm), together with a maximizer.
inline MarginResult max_margin(const MatrixXd& A, const VectorXd& b, const Config& cfg = default_config()) {
    if (A.rows() != b.size()) throw DimensionMismatch("max_margin: rows != rhs length");
    if (A.rows() == 0) throw QextError("max_margin: empty constraint system");
    const long n = A.cols();
    MatrixXd An(A.rows(), n + 1);
    VectorXd bn(A.rows());
    for (long i = 0; i < A.rows(); ++i) {
        const double nr = A.row(i).norm();
        if (nr > 0) {
            An.row(i).head(n) = A.row(i) / nr;
            bn(i) = b(i) / nr;
        } else {
            An.row(i).head(n).setZero();
            bn(i) = b(i) >= 0 ? cfg.margin_ceiling : b(i);
        }
        An(i, n) = 1.0;
    }
    LinearProgram lp;
    lp.objective = VectorXd::Zero(n + 1);
    lp.objective(n) = 1.0;
    lp.A = An;
    lp.b = bn;
    lp.bounds.assign(n + 1, VarBound{});
    lp.bounds[n].hi = cfg.margin_ceiling;
    const LpOutcome out = lp_solve(lp, cfg.feasibility_tol, cfg);
    if (out.status != LpStatus::Optimal) throw SolverFailure("max_margin: slack maximization did not reach an optimum");
    MarginResult r;
    r.margin = *out.value;
    r.witness = out.optimizer->head(n);
    r.capped = r.margin >= cfg.margin_ceiling * (1 - 1e-12);
    return r;
}

// Signed distance-like slack of x: min over rows of (b_i - a_i.x) / |a_i|.
inline double margin_at(const MatrixXd& A, const VectorXd& b, const Point& x) {
    double s = std::numeric_limits<double>::infinity();
    for (long i = 0; i < A.rows(); ++i) {
        const double nr = A.row(i).norm();
        const double slack = b(i) - A.row(i).dot(x);
        s = std::min(s, nr > 0 ? slack / nr : (slack > 0 ? std::numeric_limits<double>::infinity() : slack));
    }
    return s;
}

}  // namespace qext
