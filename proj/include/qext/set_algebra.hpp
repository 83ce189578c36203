#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "convex_set.hpp"
#include "linprog.hpp"

namespace qext {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Replace every Sublevel node by the expression its resolver produces.
inline ConvexSetExpr resolve(const ConvexSetExpr& e) {
    const SetNode& s = e.node();
    switch (s.kind) {
        case NodeKind::Empty:
        case NodeKind::Full:
        case NodeKind::OpenPolyhedron: return e;
        case NodeKind::Sublevel: {
            if (!s.resolver) throw UnsupportedLeaf("sublevel leaf '" + s.label + "' has no polyhedral resolver");
            ConvexSetExpr r = s.resolver();
            require_dim(r.dim(), s.n, "sublevel resolver");
            return resolve(r);
        }
        case NodeKind::Scale: {
            ConvexSetExpr c = resolve(s.children[0]);
            return c.id() == s.children[0].id() ? e : scale(s.lambda, c);
        }
        case NodeKind::Translate: {
            ConvexSetExpr c = resolve(s.children[0]);
            return c.id() == s.children[0].id() ? e : translate(s.v, c);
        }
        case NodeKind::Intersect: {
            bool changed = false;
            std::vector<ConvexSetExpr> kids;
            for (const auto& c : s.children) {
                kids.push_back(resolve(c));
                changed |= kids.back().id() != c.id();
            }
            return changed ? intersect(kids) : e;
        }
        case NodeKind::ConvUnion: {
            ConvexSetExpr l = resolve(s.children[0]);
            ConvexSetExpr r = resolve(s.children[1]);
            return (l.id() == s.children[0].id() && r.id() == s.children[1].id()) ? e : conv_union(l, r);
        }
    }
    return e;
}

// ---------------------------------------------------------------------------
// Flat form: {x : A x < b, E x = e} with unit-norm rows. Exists for ConvUnion-free trees.

struct FlatPolyhedron {
    int n = 0;
    bool empty = false;
    MatrixXd A;
    VectorXd b;
    MatrixXd E;
    VectorXd e;
};

namespace detail {

inline void append_rows(MatrixXd& M, VectorXd& v, const MatrixXd& Mn, const VectorXd& vn) {
    MatrixXd M2(M.rows() + Mn.rows(), Mn.cols());
    VectorXd v2(v.size() + vn.size());
    if (M.rows()) M2.topRows(M.rows()) = M;
    if (Mn.rows()) M2.bottomRows(Mn.rows()) = Mn;
    v2 << v, vn;
    M = std::move(M2);
    v = std::move(v2);
}

inline bool flatten_raw(const ConvexSetExpr& ex, FlatPolyhedron& out) {
    const SetNode& s = ex.node();
    const int n = s.n;
    switch (s.kind) {
        case NodeKind::Empty:
            out = FlatPolyhedron{n, true, MatrixXd(0, n), VectorXd(0), MatrixXd(0, n), VectorXd(0)};
            return true;
        case NodeKind::Full:
            out = FlatPolyhedron{n, false, MatrixXd(0, n), VectorXd(0), MatrixXd(0, n), VectorXd(0)};
            return true;
        case NodeKind::OpenPolyhedron: {
            out = FlatPolyhedron{n, false, s.A, s.b, MatrixXd(0, n), VectorXd(0)};
            if (s.carrier) {
                out.E = s.carrier->complement_basis().transpose();
                out.e = VectorXd::Zero(out.E.rows());
            }
            return true;
        }
        case NodeKind::Scale: {
            if (!flatten_raw(s.children[0], out)) return false;
            out.b *= s.lambda;
            out.e *= s.lambda;
            return true;
        }
        case NodeKind::Translate: {
            if (!flatten_raw(s.children[0], out)) return false;
            if (out.A.rows()) out.b += out.A * s.v;
            if (out.E.rows()) out.e += out.E * s.v;
            return true;
        }
        case NodeKind::Intersect: {
            FlatPolyhedron acc{n, false, MatrixXd(0, n), VectorXd(0), MatrixXd(0, n), VectorXd(0)};
            for (const auto& c : s.children) {
                FlatPolyhedron part;
                if (!flatten_raw(c, part)) return false;
                acc.empty |= part.empty;
                append_rows(acc.A, acc.b, part.A, part.b);
                append_rows(acc.E, acc.e, part.E, part.e);
            }
            out = std::move(acc);
            return true;
        }
        case NodeKind::ConvUnion: return false;
        case NodeKind::Sublevel: return flatten_raw(resolve(ex), out);
    }
    return false;
}

inline void normalize_flat(FlatPolyhedron& F) {
    std::vector<long> keep;
    for (long i = 0; i < F.A.rows(); ++i) {
        const double nr = F.A.row(i).norm();
        if (nr <= 1e-14) {
            if (F.b(i) <= 0) F.empty = true;
            continue;
        }
        F.A.row(i) /= nr;
        F.b(i) /= nr;
        keep.push_back(i);
    }
    MatrixXd A(keep.size(), F.n);
    VectorXd b(keep.size());
    for (size_t k = 0; k < keep.size(); ++k) {
        A.row(k) = F.A.row(keep[k]);
        b(k) = F.b(keep[k]);
    }
    F.A = std::move(A);
    F.b = std::move(b);
    keep.clear();
    for (long i = 0; i < F.E.rows(); ++i) {
        const double nr = F.E.row(i).norm();
        if (nr <= 1e-14) {
            if (std::abs(F.e(i)) > 1e-12) F.empty = true;
            continue;
        }
        F.E.row(i) /= nr;
        F.e(i) /= nr;
        keep.push_back(i);
    }
    MatrixXd E(keep.size(), F.n);
    VectorXd e(keep.size());
    for (size_t k = 0; k < keep.size(); ++k) {
        E.row(k) = F.E.row(keep[k]);
        e(k) = F.e(keep[k]);
    }
    F.E = std::move(E);
    F.e = std::move(e);
}

}  // namespace detail

inline std::optional<FlatPolyhedron> flatten(const ConvexSetExpr& ex) {
    FlatPolyhedron F;
    if (!detail::flatten_raw(ex, F)) return std::nullopt;
    detail::normalize_flat(F);
    return F;
}

inline bool is_flat(const ConvexSetExpr& ex) {
    const SetNode& s = ex.node();
    switch (s.kind) {
        case NodeKind::ConvUnion: return false;
        case NodeKind::Sublevel: return is_flat(resolve(ex));
        default:
            for (const auto& c : s.children)
                if (!is_flat(c)) return false;
            return true;
    }
}

// Signed slack of x in the flat set; carrier violations come back negative.
inline double flat_margin(const FlatPolyhedron& F, const Point& x, const Config& cfg = default_config()) {
    require_dim(x.size(), F.n, "flat_margin");
    if (F.empty) return -kInf;
    if (F.E.rows()) {
        const double v = (F.E * x - F.e).cwiseAbs().maxCoeff();
        if (v > cfg.equality_slack) return -v;
    }
    if (F.A.rows() == 0) return cfg.margin_ceiling;
    return std::min(cfg.margin_ceiling, (F.b - F.A * x).minCoeff());
}

// ---------------------------------------------------------------------------
// Lifted template. Each row reads  R [x; aux] + c  (<0 | =0 | <=0) according to its kind.

enum class RowKind { Strict, Equality, Positivity };

struct LiftedTemplate {
    int n = 0;
    int naux = 0;
    MatrixXd R;
    VectorXd c;
    std::vector<RowKind> kind;
    int perspective_vars() const { return naux; }
    long rows() const { return R.rows(); }
};

namespace detail {

inline int count_aux(const ConvexSetExpr& e) {
    const SetNode& s = e.node();
    int k = s.kind == NodeKind::ConvUnion ? s.n + 1 : 0;
    for (const auto& c : s.children) k += count_aux(c);
    return k;
}

class TemplateBuilder {
public:
    TemplateBuilder(int n, int naux) : n_(n), nv_(n + naux), next_(n) {}

    // X: n x (nv+1), T: 1 x (nv+1); last column holds constants.
    void emit(const ConvexSetExpr& e, const MatrixXd& X, const Eigen::RowVectorXd& T) {
        const SetNode& s = e.node();
        switch (s.kind) {
            case NodeKind::Empty: push(T, RowKind::Strict); break;
            case NodeKind::Full: break;
            case NodeKind::OpenPolyhedron:
                for (long i = 0; i < s.A.rows(); ++i) push(s.A.row(i) * X - s.b(i) * T, RowKind::Strict);
                if (s.carrier) {
                    const MatrixXd& Qc = s.carrier->complement_basis();
                    for (long j = 0; j < Qc.cols(); ++j) push(Qc.col(j).transpose() * X, RowKind::Equality);
                }
                break;
            case NodeKind::Scale: emit(s.children[0], X / s.lambda, T); break;
            case NodeKind::Translate: emit(s.children[0], X - s.v * T, T); break;
            case NodeKind::Intersect:
                for (const auto& c : s.children) emit(c, X, T);
                break;
            case NodeKind::ConvUnion: {
                const int base = next_;
                next_ += n_ + 1;
                MatrixXd X1 = MatrixXd::Zero(n_, nv_ + 1);
                for (int i = 0; i < n_; ++i) X1(i, base + i) = 1.0;
                Eigen::RowVectorXd T1 = Eigen::RowVectorXd::Zero(nv_ + 1);
                T1(base + n_) = 1.0;
                emit(s.children[0], X1, T1);
                emit(s.children[1], X - X1, T - T1);
                push(-T1, RowKind::Positivity);
                push(-(T - T1), RowKind::Positivity);
                break;
            }
            case NodeKind::Sublevel: emit(resolve(e), X, T); break;
        }
    }

    LiftedTemplate finish() const {
        LiftedTemplate t;
        t.n = n_;
        t.naux = nv_ - n_;
        t.R.resize(rows_.size(), nv_);
        t.c.resize(rows_.size());
        for (size_t i = 0; i < rows_.size(); ++i) {
            t.R.row(i) = rows_[i].head(nv_);
            t.c(i) = rows_[i](nv_);
        }
        t.kind = kinds_;
        return t;
    }

private:
    void push(const Eigen::RowVectorXd& r, RowKind k) {
        rows_.push_back(r);
        kinds_.push_back(k);
    }
    int n_, nv_, next_;
    std::vector<Eigen::RowVectorXd> rows_;
    std::vector<RowKind> kinds_;
};

}  // namespace detail

inline LiftedTemplate compile(const ConvexSetExpr& expr) {
    const ConvexSetExpr e = resolve(expr);
    const int n = e.dim();
    const int naux = detail::count_aux(e);
    detail::TemplateBuilder b(n, naux);
    MatrixXd X = MatrixXd::Zero(n, n + naux + 1);
    X.leftCols(n) = MatrixXd::Identity(n, n);
    Eigen::RowVectorXd T = Eigen::RowVectorXd::Zero(n + naux + 1);
    T(n + naux) = 1.0;
    b.emit(e, X, T);
    return b.finish();
}

// How slack variable s enters the rows of a template LP.
enum class SlackMode { None, Open, Closed };

struct TemplateLpOptions {
    const Point* fixed_x = nullptr;  // x substituted as data; otherwise x is a decision variable
    SlackMode slack = SlackMode::None;
    double equality_slack = 0.0;
};

// Variables: [x (unless fixed); aux; s (unless SlackMode::None)].
inline LinearProgram template_lp(const LiftedTemplate& T, const TemplateLpOptions& o) {
    const int n = T.n;
    const bool fixed = o.fixed_x != nullptr;
    const int nx = fixed ? 0 : n;
    const int nvar = nx + T.naux + (o.slack == SlackMode::None ? 0 : 1);
    const int sidx = nvar - 1;
    long nrows = 0;
    for (auto k : T.kind) nrows += k == RowKind::Equality ? 2 : 1;
    LinearProgram lp;
    lp.A = MatrixXd::Zero(nrows, nvar);
    lp.b = VectorXd::Zero(nrows);
    lp.objective = VectorXd::Zero(nvar);
    long r = 0;
    for (long i = 0; i < T.rows(); ++i) {
        Eigen::RowVectorXd coef(nx + T.naux);
        double cst = T.c(i);
        if (fixed) {
            cst += T.R.row(i).head(n).dot(*o.fixed_x);
            coef = T.R.row(i).tail(T.naux);
        } else {
            coef = T.R.row(i);
        }
        const RowKind k = T.kind[i];
        double w = 0.0;
        if (k == RowKind::Strict && o.slack != SlackMode::None) {
            const double nr = T.R.row(i).norm();
            w = nr > 1e-14 ? nr : 1.0;
        } else if (k == RowKind::Positivity && o.slack == SlackMode::Open) {
            w = 1.0;
        } else if (k == RowKind::Equality && o.slack == SlackMode::Closed) {
            w = 1.0;
        }
        const double slack = k == RowKind::Equality ? o.equality_slack : 0.0;
        lp.A.row(r).head(coef.size()) = coef;
        if (w != 0.0) lp.A(r, sidx) = w;
        lp.b(r) = -cst + slack;
        ++r;
        if (k == RowKind::Equality) {
            lp.A.row(r).head(coef.size()) = -coef;
            if (w != 0.0) lp.A(r, sidx) = w;
            lp.b(r) = cst + slack;
            ++r;
        }
    }
    if (o.slack != SlackMode::None) lp.objective(sidx) = 1.0;
    return lp;
}

namespace detail {

inline void add_box_rows(LinearProgram& lp, int n, const Point& center, double radius) {
    const long r0 = lp.A.rows();
    MatrixXd A = MatrixXd::Zero(r0 + 2 * n, lp.A.cols());
    VectorXd b(r0 + 2 * n);
    A.topRows(r0) = lp.A;
    b.head(r0) = lp.b;
    for (int i = 0; i < n; ++i) {
        A(r0 + 2 * i, i) = 1.0;
        b(r0 + 2 * i) = center(i) + radius;
        A(r0 + 2 * i + 1, i) = -1.0;
        b(r0 + 2 * i + 1) = -(center(i) - radius);
    }
    lp.A = std::move(A);
    lp.b = std::move(b);
}

inline void add_subspace_rows(LinearProgram& lp, const Subspace& Y) {
    const MatrixXd& Qc = Y.complement_basis();
    if (Qc.cols() == 0) return;
    const int n = Y.ambient_dim();
    const long r0 = lp.A.rows();
    MatrixXd A = MatrixXd::Zero(r0 + 2 * Qc.cols(), lp.A.cols());
    VectorXd b = VectorXd::Zero(r0 + 2 * Qc.cols());
    A.topRows(r0) = lp.A;
    b.head(r0) = lp.b;
    for (long j = 0; j < Qc.cols(); ++j) {
        A.row(r0 + 2 * j).head(n) = Qc.col(j).transpose();
        A.row(r0 + 2 * j + 1).head(n) = -Qc.col(j).transpose();
    }
    lp.A = std::move(A);
    lp.b = std::move(b);
}

inline double solve_slack(LinearProgram& lp, const Config& cfg, double cap) {
    lp.bounds.assign(lp.objective.size(), VarBound{});
    lp.bounds.back().hi = cap;
    const LpOutcome out = lp_solve(lp, cfg.feasibility_tol, cfg);
    if (out.status == LpStatus::Infeasible) return -kInf;
    if (out.status != LpStatus::Optimal) throw SolverFailure("slack LP unbounded despite cap");
    return *out.value;
}

}  // namespace detail

// Open-mode slack of x in the lifted template: all perspective weights stay >= s.
inline double lifted_open_margin(const LiftedTemplate& T, const Point& x, const Config& cfg = default_config()) {
    LinearProgram lp = template_lp(T, {&x, SlackMode::Open, cfg.equality_slack});
    return detail::solve_slack(lp, cfg, 1.0);
}

// Closed-mode slack: >= 0 iff x lies in the closure.
inline double lifted_closed_margin(const LiftedTemplate& T, const Point& x, const Config& cfg = default_config()) {
    LinearProgram lp = template_lp(T, {&x, SlackMode::Closed, 0.0});
    return detail::solve_slack(lp, cfg, 1.0);
}

// ---------------------------------------------------------------------------
// Membership

enum class MemberMode { Open, Closed };

// Signed open-mode margin: positive iff x belongs to the (relatively) open set.
// Scale nodes pass the margin of x / lambda through unchanged, so member(lambda S, x) and
// member(S, x / lambda) always agree.
inline double margin(const ConvexSetExpr& e, const Point& x, const Config& cfg = default_config()) {
    require_dim(x.size(), e.dim(), "margin");
    const SetNode& s = e.node();
    switch (s.kind) {
        case NodeKind::Empty: return -kInf;
        case NodeKind::Full: return cfg.margin_ceiling;
        case NodeKind::OpenPolyhedron: return flat_margin(*flatten(e), x, cfg);
        case NodeKind::Scale: return margin(s.children[0], x / s.lambda, cfg);
        case NodeKind::Translate: return margin(s.children[0], x - s.v, cfg);
        case NodeKind::Intersect: {
            double m = kInf;
            // flat parts first: they are cheap and usually decide
            for (int pass = 0; pass < 2; ++pass) {
                for (const auto& c : s.children) {
                    if (is_flat(c) != (pass == 0)) continue;
                    m = std::min(m, margin(c, x, cfg));
                    if (m <= cfg.member_tol) return m;
                }
            }
            return m;
        }
        case NodeKind::ConvUnion: {
            const bool lflat = is_flat(s.children[0]);
            const ConvexSetExpr& first = lflat ? s.children[0] : s.children[1];
            const ConvexSetExpr& second = lflat ? s.children[1] : s.children[0];
            const double m1 = margin(first, x, cfg);
            if (m1 > cfg.member_tol) return m1;
            const double m2 = margin(second, x, cfg);
            if (m2 > cfg.member_tol) return m2;
            const double m3 = lifted_open_margin(compile(e), x, cfg);
            return std::max({m1, m2, m3});
        }
        case NodeKind::Sublevel: return margin(resolve(e), x, cfg);
    }
    return -kInf;
}

inline bool member(const ConvexSetExpr& e, const Point& x, MemberMode mode, double tol,
                   const Config& cfg = default_config());

namespace detail {

// Max-margin of the open template with x free; -inf when the set is empty.
inline double open_max_margin(const ConvexSetExpr& e, const Config& cfg) {
    if (auto F = flatten(e)) {
        if (F->empty) return -kInf;
        if (F->A.rows() == 0) {
            if (F->E.rows() == 0) return cfg.margin_ceiling;
            LinearProgram lp;
            lp.objective = VectorXd::Zero(F->n);
            lp.A.resize(2 * F->E.rows(), F->n);
            lp.A << F->E, -F->E;
            lp.b.resize(2 * F->e.size());
            lp.b << F->e, -F->e;
            return lp_solve(lp, cfg.feasibility_tol, cfg).status == LpStatus::Optimal ? cfg.margin_ceiling : -kInf;
        }
    }
    LinearProgram lp = template_lp(compile(e), {nullptr, SlackMode::Open, 0.0});
    return solve_slack(lp, cfg, cfg.margin_ceiling);
}

// Drop ConvUnion branches that denote the empty set so perspective rows do not
// contribute spurious recession directions to closures.
inline ConvexSetExpr prune_empty(const ConvexSetExpr& ex, const Config& cfg) {
    const ConvexSetExpr e = resolve(ex);
    const SetNode& s = e.node();
    switch (s.kind) {
        case NodeKind::Scale: return scale(s.lambda, prune_empty(s.children[0], cfg));
        case NodeKind::Translate: return translate(s.v, prune_empty(s.children[0], cfg));
        case NodeKind::Intersect: {
            std::vector<ConvexSetExpr> kids;
            for (const auto& c : s.children) kids.push_back(prune_empty(c, cfg));
            return intersect(kids);
        }
        case NodeKind::ConvUnion: {
            ConvexSetExpr l = prune_empty(s.children[0], cfg);
            ConvexSetExpr r = prune_empty(s.children[1], cfg);
            if (!l.is_empty_literal() && open_max_margin(l, cfg) <= cfg.member_tol) l = ConvexSetExpr::empty(s.n);
            if (!r.is_empty_literal() && open_max_margin(r, cfg) <= cfg.member_tol) r = ConvexSetExpr::empty(s.n);
            return conv_union(l, r);
        }
        default: return e;
    }
}

}  // namespace detail

inline bool member(const ConvexSetExpr& e, const Point& x, MemberMode mode, double tol, const Config& cfg) {
    require_dim(x.size(), e.dim(), "member");
    if (!(tol > 0)) throw QextError("member: tolerance must be positive");
    if (mode == MemberMode::Open) return margin(e, x, cfg) > tol;
    if (auto F = flatten(e)) {
        if (F->empty) return false;
        if (F->E.rows() && (F->E * x - F->e).cwiseAbs().maxCoeff() > tol) return false;
        return F->A.rows() == 0 || (F->b - F->A * x).minCoeff() >= -tol;
    }
    return lifted_closed_margin(compile(detail::prune_empty(e, cfg)), x, cfg) >= -tol;
}

inline bool member(const ConvexSetExpr& e, const Point& x, MemberMode mode = MemberMode::Open) {
    const Config& cfg = default_config();
    return member(e, x, mode, mode == MemberMode::Open ? cfg.member_tol : cfg.closed_tol, cfg);
}

// ---------------------------------------------------------------------------
// Support function over the closure

enum class SupStatus { Empty, Bounded, Unbounded };

struct SupResult {
    SupStatus status = SupStatus::Empty;
    double value = -kInf;
    Point argmax;
};

struct ClosureProgram {
    LiftedTemplate tpl;
    bool trivially_empty = false;
};

inline ClosureProgram closure_program(const ConvexSetExpr& e, const Config& cfg = default_config()) {
    ClosureProgram cp;
    ConvexSetExpr p = detail::prune_empty(e, cfg);
    cp.trivially_empty = p.is_empty_literal();
    cp.tpl = compile(p);
    return cp;
}

// sup <dir, x> over cl(expr), optionally truncated to a sup-norm box.
inline SupResult sup_over_closure(const ClosureProgram& cp, const VectorXd& dir, const Config& cfg = default_config(),
                                  const std::optional<std::pair<Point, double>>& box = std::nullopt) {
    const int n = cp.tpl.n;
    require_dim(dir.size(), n, "sup_over_closure");
    SupResult res;
    if (cp.trivially_empty) return res;
    LinearProgram lp = template_lp(cp.tpl, {nullptr, SlackMode::None, 0.0});
    lp.objective.head(n) = dir;
    if (box) detail::add_box_rows(lp, n, box->first, box->second);
    const LpOutcome out = lp_solve(lp, cfg.feasibility_tol, cfg);
    if (out.status == LpStatus::Infeasible) return res;
    if (out.status == LpStatus::Unbounded) {
        res.status = SupStatus::Unbounded;
        res.value = kInf;
        return res;
    }
    res.status = SupStatus::Bounded;
    res.value = *out.value;
    res.argmax = out.optimizer->head(n);
    return res;
}

inline SupResult sup_over_closure(const ConvexSetExpr& e, const VectorXd& dir, const Config& cfg = default_config()) {
    return sup_over_closure(closure_program(e, cfg), dir, cfg);
}

// ---------------------------------------------------------------------------
// Closure containment

struct ContainmentResult {
    bool holds = false;
    std::string method;  // "exact" or "probe"
    std::string reason;  // empty on success; "recession violation", "row gap", "probe point outside", ...
    std::optional<Point> witness;
    double worst_gap = kInf;  // smallest observed (bound - sup) over checked rows, exact mode only
};

namespace detail {

inline bool same_row(const VectorXd& a1, double b1, const VectorXd& a2, double b2) {
    return (a1 - a2).cwiseAbs().maxCoeff() <= 1e-9 && std::abs(b1 - b2) <= 1e-9 * std::max(1.0, std::abs(b1));
}

inline void collect_normals(const ConvexSetExpr& e, std::vector<VectorXd>& out) {
    const SetNode& s = e.node();
    if (s.kind == NodeKind::OpenPolyhedron) {
        for (long i = 0; i < s.A.rows(); ++i) {
            const double nr = s.A.row(i).norm();
            if (nr > 1e-14) out.push_back(s.A.row(i).transpose() / nr);
        }
        return;
    }
    if (s.kind == NodeKind::Sublevel) {
        collect_normals(resolve(e), out);
        return;
    }
    for (const auto& c : s.children) collect_normals(c, out);
}

inline ContainmentResult contains_flat_outer(const ClosureProgram& inner, const FlatPolyhedron& outer, double tol,
                                             const std::optional<FlatPolyhedron>& rel, const Config& cfg) {
    ContainmentResult r;
    r.method = "exact";
    if (outer.empty) {
        const SupResult feas = sup_over_closure(inner, VectorXd::Zero(outer.n), cfg);
        r.holds = feas.status == SupStatus::Empty;
        if (!r.holds) {
            r.reason = "outer set is empty";
            r.witness = feas.argmax;
        }
        return r;
    }
    for (long i = 0; i < outer.A.rows(); ++i) {
        const VectorXd a = outer.A.row(i).transpose();
        bool skip = false;
        if (rel)
            for (long j = 0; j < rel->A.rows() && !skip; ++j)
                skip = same_row(a, outer.b(i), rel->A.row(j).transpose(), rel->b(j));
        if (skip) continue;
        const SupResult sr = sup_over_closure(inner, a, cfg);
        if (sr.status == SupStatus::Empty) {
            r.holds = true;
            r.worst_gap = kInf;
            return r;
        }
        if (sr.status == SupStatus::Unbounded) {
            r.holds = false;
            r.reason = "recession violation";
            return r;
        }
        const double gap = outer.b(i) - sr.value;
        r.worst_gap = std::min(r.worst_gap, gap);
        if (gap < tol) {
            r.holds = false;
            r.reason = "row gap " + std::to_string(gap) + " below tolerance";
            r.witness = sr.argmax;
            return r;
        }
    }
    for (long i = 0; i < outer.E.rows(); ++i) {
        const VectorXd q = outer.E.row(i).transpose();
        bool skip = false;
        if (rel)
            for (long j = 0; j < rel->E.rows() && !skip; ++j)
                skip = same_row(q, outer.e(i), rel->E.row(j).transpose(), rel->e(j)) ||
                       same_row(-q, -outer.e(i), rel->E.row(j).transpose(), rel->e(j));
        if (skip) continue;
        const SupResult hi = sup_over_closure(inner, q, cfg);
        const SupResult lo = sup_over_closure(inner, -q, cfg);
        if (hi.status == SupStatus::Empty) {
            r.holds = true;
            return r;
        }
        if (hi.status == SupStatus::Unbounded || lo.status == SupStatus::Unbounded) {
            r.holds = false;
            r.reason = "recession violation (leaves carrier)";
            return r;
        }
        if (hi.value > outer.e(i) + 1e-9 || -lo.value < outer.e(i) - 1e-9) {
            r.holds = false;
            r.reason = "inner set leaves the outer carrier";
            r.witness = hi.value > outer.e(i) + 1e-9 ? hi.argmax : lo.argmax;
            return r;
        }
    }
    r.holds = true;
    return r;
}

inline ContainmentResult contains_probe(const ConvexSetExpr& inner, const ClosureProgram& cp, const ConvexSetExpr& outer,
                                        double tol, const std::optional<ConvexSetExpr>& rel, const Config& cfg) {
    ContainmentResult r;
    r.method = "probe";
    const int n = inner.dim();
    std::vector<VectorXd> dirs;
    for (int i = 0; i < n; ++i) {
        dirs.push_back(VectorXd::Unit(n, i));
        dirs.push_back(-VectorXd::Unit(n, i));
    }
    collect_normals(inner, dirs);
    collect_normals(outer, dirs);
    std::mt19937_64 rng(0x51ee7u);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int k = 0; k < cfg.probe_directions; ++k) {
        VectorXd d(n);
        for (int i = 0; i < n; ++i) d(i) = g(rng);
        if (d.norm() > 1e-12) dirs.push_back(d / d.norm());
    }
    const std::pair<Point, double> box{Point::Zero(n), cfg.probe_box};
    const double need = std::max(tol, cfg.member_tol);
    for (const auto& d : dirs) {
        const SupResult sr = sup_over_closure(cp, d, cfg, box);
        if (sr.status == SupStatus::Empty) {
            r.holds = true;
            return r;
        }
        const Point& p = sr.argmax;
        if (rel && margin(*rel, p, cfg) <= cfg.member_tol) continue;
        if (margin(outer, p, cfg) <= need) {
            r.holds = false;
            r.reason = "support point of the inner closure lies outside";
            r.witness = p;
            return r;
        }
    }
    r.holds = true;
    return r;
}

inline ContainmentResult contains_rec(const ConvexSetExpr& inner, const ClosureProgram& cp, const ConvexSetExpr& outer,
                                      double tol, const std::optional<ConvexSetExpr>& rel,
                                      const std::optional<FlatPolyhedron>& relflat, const Config& cfg) {
    if (auto F = flatten(outer)) return contains_flat_outer(cp, *F, tol, relflat, cfg);
    const SetNode& s = outer.node();
    if (s.kind == NodeKind::Intersect) {
        ContainmentResult agg;
        agg.holds = true;
        agg.method = "exact";
        for (const auto& c : s.children) {
            ContainmentResult part = contains_rec(inner, cp, c, tol, rel, relflat, cfg);
            if (part.method == "probe") agg.method = "probe";
            agg.worst_gap = std::min(agg.worst_gap, part.worst_gap);
            if (!part.holds) {
                part.method = agg.method;
                return part;
            }
        }
        return agg;
    }
    if (s.kind == NodeKind::Scale || s.kind == NodeKind::Translate) {
        // move the inner set instead of the outer one
        const ConvexSetExpr moved = s.kind == NodeKind::Scale ? scale(1.0 / s.lambda, inner) : translate(-s.v, inner);
        std::optional<ConvexSetExpr> rel2;
        if (rel) rel2 = s.kind == NodeKind::Scale ? scale(1.0 / s.lambda, *rel) : translate(-s.v, *rel);
        std::optional<FlatPolyhedron> relflat2;
        if (rel2) relflat2 = flatten(*rel2);
        return contains_rec(moved, closure_program(moved, cfg), s.children[0],
                            s.kind == NodeKind::Scale ? tol / s.lambda : tol, rel2, relflat2, cfg);
    }
    if (s.kind == NodeKind::ConvUnion) {
        for (const auto& c : s.children) {
            if (!is_flat(c)) continue;
            ContainmentResult part = contains_rec(inner, cp, c, tol, rel, relflat, cfg);
            if (part.holds) return part;
        }
    }
    return contains_probe(inner, cp, outer, tol, rel, cfg);
}

}  // namespace detail

// cl(inner) within outer with a gap of at least tol on each outer row. When `relative_to` is
// given, the closure is taken inside that set and outer rows it shares are not tested.
inline ContainmentResult contains_closure_report(const ConvexSetExpr& inner, const ConvexSetExpr& outer, double tol,
                                                 const std::optional<ConvexSetExpr>& relative_to = std::nullopt,
                                                 const Config& cfg = default_config()) {
    require_dim(inner.dim(), outer.dim(), "contains_closure");
    const ConvexSetExpr in = resolve(inner);
    const ConvexSetExpr out = resolve(outer);
    ContainmentResult r;
    r.method = "exact";
    if (in.is_empty_literal()) {
        r.holds = true;
        return r;
    }
    std::optional<ConvexSetExpr> rel;
    std::optional<FlatPolyhedron> relflat;
    if (relative_to) {
        rel = resolve(*relative_to);
        relflat = flatten(*rel);
    }
    const ClosureProgram cp = closure_program(in, cfg);
    if (cp.trivially_empty) {
        r.holds = true;
        return r;
    }
    return detail::contains_rec(in, cp, out, tol, rel, relflat, cfg);
}

inline bool contains_closure(const ConvexSetExpr& inner, const ConvexSetExpr& outer, double tol,
                             const Config& cfg = default_config()) {
    return contains_closure_report(inner, outer, tol, std::nullopt, cfg).holds;
}

// ---------------------------------------------------------------------------
// Interior points and scale factors

struct InteriorPoint {
    Point point;
    double margin = 0.0;
};

inline InteriorPoint find_interior_point_ex(const ConvexSetExpr& expr, const Subspace& carrier,
                                            const std::optional<std::pair<Point, double>>& box = std::nullopt,
                                            const Config& cfg = default_config()) {
    require_dim(carrier.ambient_dim(), expr.dim(), "find_interior_point");
    const ConvexSetExpr e = resolve(expr);
    const int n = e.dim();
    if (e.is_empty_literal()) throw EmptySetError("find_interior_point: set is empty");
    LinearProgram lp = template_lp(compile(e), {nullptr, SlackMode::Open, 0.0});
    detail::add_subspace_rows(lp, carrier);
    if (box) detail::add_box_rows(lp, n, box->first, box->second);
    lp.bounds.assign(lp.objective.size(), VarBound{});
    lp.bounds.back().hi = cfg.margin_ceiling;
    const LpOutcome out = lp_solve(lp, cfg.feasibility_tol, cfg);
    if (out.status == LpStatus::Infeasible || (out.status == LpStatus::Optimal && *out.value <= cfg.member_tol))
        throw EmptySetError("find_interior_point: set has no relative interior point in the carrier");
    if (out.status != LpStatus::Optimal) throw SolverFailure("find_interior_point: margin LP unbounded");
    return InteriorPoint{out.optimizer->head(n), *out.value};
}

inline Point find_interior_point(const ConvexSetExpr& expr, const Subspace& carrier,
                                 const Config& cfg = default_config()) {
    return find_interior_point_ex(expr, carrier, std::nullopt, cfg).point;
}

struct ScaleSearch {
    double lambda = 0.5;
    double lambda_min = 0.0;
};

// Policy: halfway between the smallest admissible scale and 1.
inline ScaleSearch find_scale_factor_ex(const ConvexSetExpr& inner, const ConvexSetExpr& outer,
                                        const std::optional<ConvexSetExpr>& relative_to = std::nullopt,
                                        const Config& cfg = default_config()) {
    require_dim(inner.dim(), outer.dim(), "find_scale_factor");
    const ConvexSetExpr in = resolve(inner);
    if (in.is_empty_literal() || closure_program(in, cfg).trivially_empty) return ScaleSearch{0.5, 0.0};
    auto fits = [&](double lam) {
        return contains_closure_report(in, scale(lam, outer), cfg.contain_tol, relative_to, cfg).holds;
    };
    if (!fits(1.0)) throw ScaleFailure("find_scale_factor: closure of inner set is not inside the outer set");
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < cfg.scale_bisect_iters; ++it) {
        const double mid = 0.5 * (lo + hi);
        (fits(mid) ? hi : lo) = mid;
    }
    if (hi > 1.0 - cfg.scale_gap_min)
        throw ScaleFailure("find_scale_factor: no scale below 1 leaves room (minimal scale " + std::to_string(hi) + ")");
    return ScaleSearch{0.5 * (hi + 1.0), hi};
}

inline double find_scale_factor(const ConvexSetExpr& inner, const ConvexSetExpr& outer,
                                const Config& cfg = default_config()) {
    return find_scale_factor_ex(inner, outer, std::nullopt, cfg).lambda;
}

// Per-coordinate bounds of cl(expr); infinite entries mark unbounded directions.
inline std::pair<VectorXd, VectorXd> bounding_box(const ConvexSetExpr& e, const Config& cfg = default_config()) {
    const int n = e.dim();
    const ClosureProgram cp = closure_program(e, cfg);
    VectorXd lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
        const SupResult up = sup_over_closure(cp, VectorXd::Unit(n, i), cfg);
        if (up.status == SupStatus::Empty) throw EmptySetError("bounding_box: set is empty");
        const SupResult dn = sup_over_closure(cp, -VectorXd::Unit(n, i), cfg);
        hi(i) = up.value;
        lo(i) = -dn.value;
    }
    return {lo, hi};
}

}  // namespace qext
