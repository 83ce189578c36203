#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "subspace.hpp"

namespace qext {

enum class NodeKind { Empty, Full, OpenPolyhedron, Scale, Translate, Intersect, ConvUnion, Sublevel };

inline const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Empty: return "empty";
        case NodeKind::Full: return "full";
        case NodeKind::OpenPolyhedron: return "polyhedron";
        case NodeKind::Scale: return "scale";
        case NodeKind::Translate: return "translate";
        case NodeKind::Intersect: return "intersect";
        case NodeKind::ConvUnion: return "conv_union";
        case NodeKind::Sublevel: return "sublevel";
    }
    return "?";
}

struct SetNode;

// Immutable expression denoting an open (or relatively open) convex subset of R^n.
class ConvexSetExpr {
public:
    ConvexSetExpr() = default;

    static ConvexSetExpr empty(int n);
    static ConvexSetExpr full(int n);
    // {x : A x < b}, full-dimensional carrier
    static ConvexSetExpr polyhedron(const MatrixXd& A, const VectorXd& b);
    // {x in carrier : A x < b}
    static ConvexSetExpr polyhedron(const MatrixXd& A, const VectorXd& b, const Subspace& carrier);
    // the whole carrier subspace, relatively open in itself
    static ConvexSetExpr subspace(const Subspace& carrier);
    static ConvexSetExpr box(const VectorXd& lo, const VectorXd& hi);
    static ConvexSetExpr sup_ball(int n, double radius);
    // {x in carrier : lo < <u, x> < hi} style helper for one-dimensional carriers is left to callers

    // Deferred sublevel set; `resolver` must return a polyhedral or family-level expression.
    static ConvexSetExpr sublevel(int n, std::function<ConvexSetExpr()> resolver, double alpha, bool strict,
                                  std::string label);

    NodeKind kind() const;
    int dim() const;
    const SetNode& node() const { return *p_; }
    bool valid() const { return static_cast<bool>(p_); }
    bool is_empty_literal() const { return p_ && kind() == NodeKind::Empty; }
    bool is_full_literal() const { return p_ && kind() == NodeKind::Full; }
    const void* id() const { return p_.get(); }

private:
    explicit ConvexSetExpr(std::shared_ptr<const SetNode> p) : p_(std::move(p)) {}
    std::shared_ptr<const SetNode> p_;

    friend ConvexSetExpr make_node(SetNode node);
};

struct SetNode {
    NodeKind kind = NodeKind::Empty;
    int n = 0;
    MatrixXd A;                       // OpenPolyhedron
    VectorXd b;
    std::optional<Subspace> carrier;  // nullopt means R^n
    double lambda = 1.0;              // Scale
    VectorXd v;                       // Translate
    std::vector<ConvexSetExpr> children;
    std::function<ConvexSetExpr()> resolver;  // Sublevel
    double alpha = 0.0;
    bool strict = true;
    std::string label;
};

inline ConvexSetExpr make_node(SetNode node) { return ConvexSetExpr(std::make_shared<const SetNode>(std::move(node))); }

inline NodeKind ConvexSetExpr::kind() const { return p_->kind; }
inline int ConvexSetExpr::dim() const { return p_->n; }

inline ConvexSetExpr ConvexSetExpr::empty(int n) {
    SetNode s;
    s.kind = NodeKind::Empty;
    s.n = n;
    return make_node(std::move(s));
}

inline ConvexSetExpr ConvexSetExpr::full(int n) {
    SetNode s;
    s.kind = NodeKind::Full;
    s.n = n;
    return make_node(std::move(s));
}

inline ConvexSetExpr ConvexSetExpr::polyhedron(const MatrixXd& A, const VectorXd& b) {
    if (A.rows() != b.size()) throw DimensionMismatch("polyhedron: rows != rhs length");
    SetNode s;
    s.kind = NodeKind::OpenPolyhedron;
    s.n = static_cast<int>(A.cols());
    s.A = A;
    s.b = b;
    return make_node(std::move(s));
}

inline ConvexSetExpr ConvexSetExpr::polyhedron(const MatrixXd& A, const VectorXd& b, const Subspace& carrier) {
    if (A.rows() != b.size()) throw DimensionMismatch("polyhedron: rows != rhs length");
    require_dim(A.cols(), carrier.ambient_dim(), "polyhedron carrier");
    SetNode s;
    s.kind = NodeKind::OpenPolyhedron;
    s.n = carrier.ambient_dim();
    s.A = A;
    s.b = b;
    if (!carrier.is_full()) s.carrier = carrier;
    return make_node(std::move(s));
}

inline ConvexSetExpr ConvexSetExpr::subspace(const Subspace& carrier) {
    return polyhedron(MatrixXd::Zero(0, carrier.ambient_dim()), VectorXd::Zero(0), carrier);
}

inline ConvexSetExpr ConvexSetExpr::box(const VectorXd& lo, const VectorXd& hi) {
    require_dim(hi.size(), lo.size(), "box");
    const long n = lo.size();
    MatrixXd A(2 * n, n);
    VectorXd b(2 * n);
    A.topRows(n) = MatrixXd::Identity(n, n);
    A.bottomRows(n) = -MatrixXd::Identity(n, n);
    b.head(n) = hi;
    b.tail(n) = -lo;
    return polyhedron(A, b);
}

inline ConvexSetExpr ConvexSetExpr::sup_ball(int n, double radius) {
    return box(VectorXd::Constant(n, -radius), VectorXd::Constant(n, radius));
}

inline ConvexSetExpr ConvexSetExpr::sublevel(int n, std::function<ConvexSetExpr()> resolver, double alpha, bool strict,
                                              std::string label) {
    SetNode s;
    s.kind = NodeKind::Sublevel;
    s.n = n;
    s.resolver = std::move(resolver);
    s.alpha = alpha;
    s.strict = strict;
    s.label = std::move(label);
    return make_node(std::move(s));
}

// lambda * S
inline ConvexSetExpr scale(double lambda, const ConvexSetExpr& S) {
    if (!(lambda > 0)) throw QextError("scale: factor must be positive");
    if (lambda == 1.0 || S.is_empty_literal() || S.is_full_literal()) return S;
    if (S.kind() == NodeKind::Scale) return scale(lambda * S.node().lambda, S.node().children[0]);
    SetNode s;
    s.kind = NodeKind::Scale;
    s.n = S.dim();
    s.lambda = lambda;
    s.children = {S};
    return make_node(std::move(s));
}

// v + S
inline ConvexSetExpr translate(const VectorXd& v, const ConvexSetExpr& S) {
    require_dim(v.size(), S.dim(), "translate");
    if (v.isZero(0.0) || S.is_empty_literal() || S.is_full_literal()) return S;
    if (S.kind() == NodeKind::Translate) return translate(v + S.node().v, S.node().children[0]);
    SetNode s;
    s.kind = NodeKind::Translate;
    s.n = S.dim();
    s.v = v;
    s.children = {S};
    return make_node(std::move(s));
}

inline ConvexSetExpr intersect(const std::vector<ConvexSetExpr>& parts) {
    if (parts.empty()) throw QextError("intersect: needs at least one operand");
    const int n = parts.front().dim();
    std::vector<ConvexSetExpr> kept;
    for (const auto& p : parts) {
        require_dim(p.dim(), n, "intersect");
        if (p.is_empty_literal()) return ConvexSetExpr::empty(n);
        if (p.is_full_literal()) continue;
        if (p.kind() == NodeKind::Intersect) {
            for (const auto& c : p.node().children) kept.push_back(c);
        } else {
            kept.push_back(p);
        }
    }
    if (kept.empty()) return ConvexSetExpr::full(n);
    if (kept.size() == 1) return kept.front();
    SetNode s;
    s.kind = NodeKind::Intersect;
    s.n = n;
    s.children = std::move(kept);
    return make_node(std::move(s));
}

inline ConvexSetExpr intersect(const ConvexSetExpr& a, const ConvexSetExpr& b) { return intersect({a, b}); }

// conv(L u R)
inline ConvexSetExpr conv_union(const ConvexSetExpr& L, const ConvexSetExpr& R) {
    require_dim(L.dim(), R.dim(), "conv_union");
    if (L.is_empty_literal()) return R;
    if (R.is_empty_literal()) return L;
    if (L.is_full_literal() || R.is_full_literal()) return ConvexSetExpr::full(L.dim());
    SetNode s;
    s.kind = NodeKind::ConvUnion;
    s.n = L.dim();
    s.children = {L, R};
    return make_node(std::move(s));
}

// W + s W, rewritten as (1 + s) W for convex W and s >= 0
inline ConvexSetExpr self_sum(const ConvexSetExpr& W, double s) {
    if (s < 0) throw QextError("self_sum: coefficient must be nonnegative");
    return scale(1.0 + s, W);
}

inline std::string describe(const ConvexSetExpr& e, int depth = 0) {
    if (!e.valid()) return "<null>";
    const SetNode& s = e.node();
    std::string pad(depth * 2, ' ');
    std::string out = pad + to_string(s.kind);
    switch (s.kind) {
        case NodeKind::OpenPolyhedron:
            out += " rows=" + std::to_string(s.A.rows()) + (s.carrier ? " carrier_dim=" + std::to_string(s.carrier->dim()) : "");
            break;
        case NodeKind::Scale: out += " " + std::to_string(s.lambda); break;
        case NodeKind::Sublevel: out += " " + s.label + " < " + std::to_string(s.alpha); break;
        default: break;
    }
    out += "\n";
    for (const auto& c : s.children) out += describe(c, depth + 1);
    return out;
}

}  // namespace qext
