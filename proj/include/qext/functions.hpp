#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "families.hpp"

namespace qext {

struct AffinePiece {
    VectorXd a;
    double b = 0.0;
};

enum class SpecKind { MaxAffine, Transformed, FamilyDefined, Restriction, PointwiseMax };

inline const char* to_string(SpecKind k) {
    switch (k) {
        case SpecKind::MaxAffine: return "max_affine";
        case SpecKind::Transformed: return "transformed";
        case SpecKind::FamilyDefined: return "family";
        case SpecKind::Restriction: return "restriction";
        case SpecKind::PointwiseMax: return "pointwise_max";
    }
    return "?";
}

class QuasiconvexSpec;

struct SpecNode {
    SpecKind kind = SpecKind::MaxAffine;
    int n = 0;
    ConvexSetExpr domain;
    std::vector<AffinePiece> pieces;           // MaxAffine
    std::vector<QuasiconvexSpec> children;     // Transformed (1), Restriction (1), PointwiseMax (>= 1)
    MonotoneMap map;                           // Transformed
    std::shared_ptr<const OmegaFamily> family; // FamilyDefined
    std::optional<Subspace> subspace;          // Restriction
    std::string label;
};

// Symbolic continuous quasiconvex function with computable strict sublevel sets.
class QuasiconvexSpec {
public:
    QuasiconvexSpec() = default;

    static QuasiconvexSpec max_affine(std::vector<AffinePiece> pieces, ConvexSetExpr domain, std::string label = "") {
        if (pieces.empty()) throw SpecError("max_affine needs at least one piece");
        SpecNode s;
        s.kind = SpecKind::MaxAffine;
        s.n = domain.dim();
        for (const auto& p : pieces) require_dim(p.a.size(), s.n, "affine piece");
        s.pieces = std::move(pieces);
        s.domain = std::move(domain);
        s.label = std::move(label);
        return make(std::move(s));
    }

    static QuasiconvexSpec constant(double c, ConvexSetExpr domain) {
        const int n = domain.dim();
        return max_affine({AffinePiece{VectorXd::Zero(n), c}}, std::move(domain), "constant");
    }

    static QuasiconvexSpec transformed(QuasiconvexSpec inner, MonotoneMap map, std::string label = "") {
        SpecNode s;
        s.kind = SpecKind::Transformed;
        s.n = inner.dim();
        s.domain = inner.domain();
        s.map = std::move(map);
        s.children = {std::move(inner)};
        s.label = std::move(label);
        return make(std::move(s));
    }

    static QuasiconvexSpec family_defined(OmegaFamily fam, std::string label = "") {
        SpecNode s;
        s.kind = SpecKind::FamilyDefined;
        s.n = fam.dim();
        s.domain = fam.ambient();
        s.family = std::make_shared<const OmegaFamily>(std::move(fam));
        s.label = std::move(label);
        return make(std::move(s));
    }

    static QuasiconvexSpec restriction(QuasiconvexSpec parent, const Subspace& Y) {
        require_dim(Y.ambient_dim(), parent.dim(), "restriction subspace");
        SpecNode s;
        s.kind = SpecKind::Restriction;
        s.n = parent.dim();
        s.domain = intersect(parent.domain(), ConvexSetExpr::subspace(Y));
        s.subspace = Y;
        s.children = {std::move(parent)};
        return make(std::move(s));
    }

    static QuasiconvexSpec pointwise_max(std::vector<QuasiconvexSpec> parts, std::string label = "") {
        if (parts.empty()) throw SpecError("pointwise_max needs at least one part");
        SpecNode s;
        s.kind = SpecKind::PointwiseMax;
        s.n = parts.front().dim();
        std::vector<ConvexSetExpr> doms;
        for (const auto& p : parts) {
            require_dim(p.dim(), s.n, "pointwise_max part");
            doms.push_back(p.domain());
        }
        s.domain = intersect(doms);
        s.children = std::move(parts);
        s.label = std::move(label);
        return make(std::move(s));
    }

    bool valid() const { return static_cast<bool>(p_); }
    SpecKind kind() const { return p_->kind; }
    int dim() const { return p_->n; }
    const ConvexSetExpr& domain() const { return p_->domain; }
    const SpecNode& node() const { return *p_; }
    const OmegaFamily& family() const {
        if (!p_->family) throw SpecError("spec is not family-defined");
        return *p_->family;
    }

    // Same function on a smaller open convex domain.
    QuasiconvexSpec with_domain(const ConvexSetExpr& dom) const {
        SpecNode s = *p_;
        s.domain = dom;
        return make(std::move(s));
    }

    std::string describe() const {
        const SpecNode& s = *p_;
        std::string out = to_string(s.kind);
        if (!s.label.empty()) out += "[" + s.label + "]";
        if (s.kind == SpecKind::MaxAffine) out += "(" + std::to_string(s.pieces.size()) + " pieces)";
        if (s.kind == SpecKind::Transformed) out += "(" + s.map.describe() + " of " + s.children[0].describe() + ")";
        if (s.kind == SpecKind::Restriction) out += "(" + s.children[0].describe() + ")";
        if (s.kind == SpecKind::PointwiseMax) {
            out += "(";
            for (size_t i = 0; i < s.children.size(); ++i) out += (i ? ", " : "") + s.children[i].describe();
            out += ")";
        }
        return out;
    }

private:
    static QuasiconvexSpec make(SpecNode s) {
        QuasiconvexSpec q;
        q.p_ = std::make_shared<const SpecNode>(std::move(s));
        return q;
    }
    std::shared_ptr<const SpecNode> p_;
};

// ---------------------------------------------------------------------------
// Evaluation

inline double evaluate_unchecked(const QuasiconvexSpec& f, const Point& x, const Config& cfg);

// sup{alpha : x not in D_alpha} by bisection on open membership.
inline double evaluate_family(const OmegaFamily& fam, const Point& x, const Config& cfg = default_config()) {
    double lo = fam.lo() - 1.0, hi = fam.hi() + 1.0;
    if (!(margin(fam.at(hi), x, cfg) > cfg.member_tol))
        throw CoverageError("family evaluation: point lies in no level up to " + std::to_string(hi));
    if (margin(fam.at(lo), x, cfg) > cfg.member_tol)
        throw CoverageError("family evaluation: point lies in every level down to " + std::to_string(lo));
    for (int it = 0; it < cfg.bisect_max_iter && hi - lo > 0.25 * cfg.tol_bisect; ++it) {
        const double mid = 0.5 * (lo + hi);
        (margin(fam.at(mid), x, cfg) > cfg.member_tol ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

inline double evaluate_unchecked(const QuasiconvexSpec& f, const Point& x, const Config& cfg) {
    const SpecNode& s = f.node();
    switch (s.kind) {
        case SpecKind::MaxAffine: {
            double v = -kInf;
            for (const auto& p : s.pieces) v = std::max(v, p.a.dot(x) + p.b);
            return v;
        }
        case SpecKind::Transformed: return s.map.forward(evaluate_unchecked(s.children[0], x, cfg));
        case SpecKind::FamilyDefined: return evaluate_family(*s.family, x, cfg);
        case SpecKind::Restriction:
            if (!s.subspace->contains(x, 1e-9)) throw DomainError("restricted function evaluated off its subspace");
            return evaluate_unchecked(s.children[0], x, cfg);
        case SpecKind::PointwiseMax: {
            double v = -kInf;
            for (const auto& c : s.children) v = std::max(v, evaluate_unchecked(c, x, cfg));
            return v;
        }
    }
    return 0.0;
}

inline double evaluate(const QuasiconvexSpec& f, const Point& x, const Config& cfg = default_config()) {
    require_dim(x.size(), f.dim(), "evaluate");
    if (!(margin(f.domain(), x, cfg) > cfg.member_tol)) throw DomainError("evaluate: point outside the domain");
    return evaluate_unchecked(f, x, cfg);
}

// ---------------------------------------------------------------------------
// Sublevel sets

inline ConvexSetExpr sublevel(const QuasiconvexSpec& f, double alpha, bool strict = true,
                              const Config& cfg = default_config());

namespace detail {

inline ConvexSetExpr sublevel_core(const QuasiconvexSpec& f, double alpha, const Config& cfg) {
    const SpecNode& s = f.node();
    const int n = s.n;
    switch (s.kind) {
        case SpecKind::MaxAffine: {
            std::vector<long> rows;
            for (size_t i = 0; i < s.pieces.size(); ++i) {
                if (s.pieces[i].a.norm() <= 1e-14) {
                    if (alpha - s.pieces[i].b <= 0) return ConvexSetExpr::empty(n);
                    continue;
                }
                rows.push_back(static_cast<long>(i));
            }
            if (rows.empty()) return ConvexSetExpr::full(n);
            MatrixXd A(rows.size(), n);
            VectorXd b(rows.size());
            for (size_t k = 0; k < rows.size(); ++k) {
                A.row(k) = s.pieces[rows[k]].a.transpose();
                b(k) = alpha - s.pieces[rows[k]].b;
            }
            return ConvexSetExpr::polyhedron(A, b);
        }
        case SpecKind::Transformed: {
            const Threshold t = s.map.preimage(alpha);
            if (t.kind == Threshold::None) return ConvexSetExpr::empty(n);
            if (t.kind == Threshold::All) return ConvexSetExpr::full(n);
            return sublevel_core(s.children[0], t.value, cfg);
        }
        case SpecKind::FamilyDefined: return s.family->at(alpha);
        case SpecKind::Restriction:
            return intersect(sublevel_core(s.children[0], alpha, cfg), ConvexSetExpr::subspace(*s.subspace));
        case SpecKind::PointwiseMax: {
            std::vector<ConvexSetExpr> parts;
            for (const auto& c : s.children) parts.push_back(sublevel_core(c, alpha, cfg));
            return intersect(parts);
        }
    }
    return ConvexSetExpr::empty(n);
}

}  // namespace detail

// [f < alpha] within the domain of f. Closed sublevel sets are not open and have no
// representation in the set algebra.
inline ConvexSetExpr sublevel(const QuasiconvexSpec& f, double alpha, bool strict, const Config& cfg) {
    if (!strict) throw ScopeError("sublevel: only strict sublevel sets are representable");
    return intersect(detail::sublevel_core(f, alpha, cfg), f.domain());
}

// Deferred form, resolved on first use by the set algebra.
inline ConvexSetExpr lazy_sublevel(const QuasiconvexSpec& f, double alpha, const Config& cfg = default_config()) {
    return ConvexSetExpr::sublevel(
        f.dim(), [f, alpha, cfg] { return sublevel(f, alpha, true, cfg); }, alpha, true, f.describe());
}

// ---------------------------------------------------------------------------
// Function <-> family

struct LevelGrid {
    double lo = 0.0;
    double hi = 1.0;
    double step = 0.1;
};

inline OmegaFamily family_from_function(const QuasiconvexSpec& g, const LevelGrid& grid,
                                        const Config& cfg = default_config(),
                                        const std::vector<Point>& probes = {}) {
    if (!(grid.hi > grid.lo) || !(grid.step > 0)) throw SpecError("family_from_function: malformed level grid");
    for (const auto& p : probes) {
        const double v = evaluate(g, p, cfg);
        if (!std::isfinite(v)) throw SpecError("family_from_function: non-finite value at a probe point");
    }
    OmegaFamily fam(g.dim(), g.domain(), grid.step);
    const int nblocks = std::max(1, static_cast<int>(std::ceil((grid.hi - grid.lo) / grid.step - 1e-9)));
    for (int i = 0; i < nblocks; ++i) {
        const double a = grid.lo + i * grid.step;
        const double b = i + 1 == nblocks ? grid.hi : grid.lo + (i + 1) * grid.step;
        fam.add_block(a, b, LevelGenerator::explicit_fn([g, cfg](double al) { return sublevel(g, al, true, cfg); },
                                                        "sublevel"));
    }
    fam.above(AbovePolicy::Extrapolate).named("sublevels of " + g.describe());
    return fam;
}

// d(x) = max_j |<q_j, x>| over an orthonormal basis of the complement of Y.
inline QuasiconvexSpec complement_gauge(const Subspace& Y) {
    if (Y.is_full()) throw GaugeUndefined("complement_gauge: subspace is the whole space");
    const MatrixXd& Qc = Y.complement_basis();
    std::vector<AffinePiece> pieces;
    for (long j = 0; j < Qc.cols(); ++j) {
        pieces.push_back({Qc.col(j), 0.0});
        pieces.push_back({-Qc.col(j), 0.0});
    }
    return QuasiconvexSpec::max_affine(std::move(pieces), ConvexSetExpr::full(Y.ambient_dim()), "complement_gauge");
}

// ---------------------------------------------------------------------------
// Range of a spec over an open set

struct RangeInfo {
    double inf = -kInf;
    double sup = kInf;
    bool inf_attained = false;
    bool sup_attained = false;
    std::optional<Point> argmin;
};

namespace detail {

// Is there an open-mode member of S satisfying extra closed rows G x <= h? Returns a point if so.
inline std::optional<Point> open_point_with_rows(const ConvexSetExpr& S, const MatrixXd& G, const VectorXd& h,
                                                 const Config& cfg) {
    const ConvexSetExpr e = resolve(S);
    const int n = e.dim();
    LinearProgram lp = template_lp(compile(e), {nullptr, SlackMode::Open, 0.0});
    const long r0 = lp.A.rows();
    MatrixXd A = MatrixXd::Zero(r0 + G.rows(), lp.A.cols());
    VectorXd b(r0 + G.rows());
    A.topRows(r0) = lp.A;
    b.head(r0) = lp.b;
    A.block(r0, 0, G.rows(), n) = G;
    b.tail(G.rows()) = h;
    lp.A = A;
    lp.b = b;
    lp.bounds.assign(lp.objective.size(), VarBound{});
    lp.bounds.back().hi = 1.0;
    const LpOutcome out = lp_solve(lp, cfg.feasibility_tol, cfg);
    if (out.status != LpStatus::Optimal || *out.value <= cfg.member_tol) return std::nullopt;
    return out.optimizer->head(n);
}

inline RangeInfo max_affine_range(const std::vector<AffinePiece>& pieces, const ConvexSetExpr& S, const Config& cfg) {
    RangeInfo r;
    const int n = S.dim();
    const int k = static_cast<int>(pieces.size());
    // inf: minimize t subject to a_i x + b_i <= t over cl S
    const ClosureProgram cp = closure_program(S, cfg);
    if (cp.trivially_empty) throw EmptySetError("range: empty set");
    LinearProgram lp = template_lp(cp.tpl, {nullptr, SlackMode::None, 0.0});
    const long nv = lp.objective.size();
    const long r0 = lp.A.rows();
    MatrixXd A = MatrixXd::Zero(r0 + k, nv + 1);
    VectorXd b(r0 + k);
    A.topLeftCorner(r0, nv) = lp.A;
    b.head(r0) = lp.b;
    for (int i = 0; i < k; ++i) {
        A.block(r0 + i, 0, 1, n) = pieces[i].a.transpose();
        A(r0 + i, nv) = -1.0;
        b(r0 + i) = -pieces[i].b;
    }
    LinearProgram mn;
    mn.A = A;
    mn.b = b;
    mn.objective = VectorXd::Zero(nv + 1);
    mn.objective(nv) = -1.0;
    const LpOutcome o = lp_solve(mn, cfg.feasibility_tol, cfg);
    if (o.status == LpStatus::Infeasible) throw EmptySetError("range: empty set");
    if (o.status == LpStatus::Optimal) {
        r.inf = -*o.value;
        MatrixXd G(k, n);
        VectorXd h(k);
        for (int i = 0; i < k; ++i) {
            G.row(i) = pieces[i].a.transpose();
            h(i) = r.inf - pieces[i].b + 1e-11 * std::max(1.0, std::abs(r.inf));
        }
        r.argmin = open_point_with_rows(S, G, h, cfg);
        r.inf_attained = r.argmin.has_value();
    }
    // sup: the largest piece supremum
    r.sup = -kInf;
    for (int i = 0; i < k; ++i) {
        const SupResult sr = sup_over_closure(cp, pieces[i].a, cfg);
        if (sr.status == SupStatus::Unbounded) {
            r.sup = kInf;
            r.sup_attained = false;
            break;
        }
        r.sup = std::max(r.sup, sr.value + pieces[i].b);
    }
    if (std::isfinite(r.sup)) {
        for (int i = 0; i < k && !r.sup_attained; ++i) {
            MatrixXd G = -pieces[i].a.transpose();
            VectorXd h = VectorXd::Constant(1, -(r.sup - pieces[i].b) + 1e-11 * std::max(1.0, std::abs(r.sup)));
            r.sup_attained = open_point_with_rows(S, G, h, cfg).has_value();
        }
    }
    return r;
}

}  // namespace detail

// inf / sup of f over the open set S (intersected with the domain of f), with attainment flags.
inline RangeInfo range_over(const QuasiconvexSpec& f, const ConvexSetExpr& S, const Config& cfg = default_config()) {
    const SpecNode& s = f.node();
    const ConvexSetExpr dom = intersect(S, f.domain());
    switch (s.kind) {
        case SpecKind::MaxAffine: return detail::max_affine_range(s.pieces, dom, cfg);
        case SpecKind::Restriction: return range_over(s.children[0], intersect(dom, ConvexSetExpr::subspace(*s.subspace)), cfg);
        case SpecKind::Transformed: {
            RangeInfo in = range_over(s.children[0], dom, cfg);
            RangeInfo r = in;
            r.inf = s.map.forward(in.inf);
            r.sup = s.map.forward(in.sup);
            if (!s.map.strictly_increasing() && std::isfinite(r.sup)) {
                // a cap saturates strictly below the inner supremum, so its value is taken
                const double below = std::isfinite(in.sup) ? in.sup - 1e-9 * std::max(1.0, std::abs(in.sup)) : 1e300;
                if (s.map.forward(below) == r.sup) r.sup_attained = true;
            }
            return r;
        }
        default: throw ScopeError("range_over: supported for max-affine, transformed and restricted specs only");
    }
}

// x -> f(M x + v) on `domain`. Restrictions are kept (the caller guarantees M maps the
// subspace into itself) unless `drop_restriction` is set, in which case the parent is used.
inline QuasiconvexSpec precompose(const QuasiconvexSpec& f, const MatrixXd& M, const VectorXd& v,
                                  const ConvexSetExpr& domain, bool drop_restriction = false) {
    const SpecNode& s = f.node();
    switch (s.kind) {
        case SpecKind::MaxAffine: {
            std::vector<AffinePiece> pieces;
            for (const auto& p : s.pieces) pieces.push_back({M.transpose() * p.a, p.b + p.a.dot(v)});
            return QuasiconvexSpec::max_affine(std::move(pieces), domain, s.label);
        }
        case SpecKind::Transformed:
            return QuasiconvexSpec::transformed(precompose(s.children[0], M, v, domain, drop_restriction), s.map,
                                                s.label)
                .with_domain(domain);
        case SpecKind::PointwiseMax: {
            std::vector<QuasiconvexSpec> parts;
            for (const auto& c : s.children) parts.push_back(precompose(c, M, v, domain, drop_restriction));
            return QuasiconvexSpec::pointwise_max(std::move(parts), s.label).with_domain(domain);
        }
        case SpecKind::Restriction: {
            QuasiconvexSpec parent = precompose(s.children[0], M, v, domain, drop_restriction);
            return drop_restriction ? parent : QuasiconvexSpec::restriction(parent, *s.subspace);
        }
        case SpecKind::FamilyDefined: throw ScopeError("precompose: family-defined specs cannot be re-parametrized");
    }
    return f;
}

}  // namespace qext
