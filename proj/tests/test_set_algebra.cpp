#include <gtest/gtest.h>

#include <random>

#include "qext/set_algebra.hpp"

using namespace qext;

namespace {

ConvexSetExpr interval(double lo, double hi) { return ConvexSetExpr::box(VectorXd::Constant(1, lo), VectorXd::Constant(1, hi)); }

ConvexSetExpr box2(double x0, double x1, double y0, double y1) {
    return ConvexSetExpr::box(Eigen::Vector2d(x0, y0), Eigen::Vector2d(x1, y1));
}

Subspace x_axis() { return Subspace::span(Eigen::Vector2d(1, 0)); }

// {(t, 0) : lo < t < hi}, relatively open in the x-axis
ConvexSetExpr segment_on_axis(double lo, double hi) {
    MatrixXd A(2, 2);
    A << 1, 0, -1, 0;
    return ConvexSetExpr::polyhedron(A, Eigen::Vector2d(hi, -lo), x_axis());
}

// Brute force: is x = t u + (1-t) c with u in the open square (-1,1)^2, c in (0,3) x {0}, t in (0,1]?
bool hull_oracle(const Point& x) {
    const int T = 400, Cn = 300;
    for (int i = 1; i <= T; ++i) {
        const double t = double(i) / T;
        for (int j = 1; j < Cn; ++j) {
            const double c = 3.0 * j / Cn;
            const double u0 = (x(0) - (1 - t) * c) / t;
            const double u1 = x(1) / t;
            if (std::abs(u0) < 1 && std::abs(u1) < 1) return true;
        }
    }
    return false;
}

// distance-like margin of the closed pentagon hull of the square and (3, 0)
double pentagon_margin(const Point& x) {
    MatrixXd A(4, 2);
    A << -1, 0, 1, 2, 1, -2, 0, 0;
    VectorXd b(4);
    b << 1, 3, 3, 0;
    double m = kInf;
    for (int i = 0; i < 3; ++i) m = std::min(m, (b(i) - A.row(i).dot(x)) / A.row(i).norm());
    m = std::min(m, 1 - std::abs(x(1)));
    return m;
}

ConvexSetExpr random_expr(std::mt19937_64& rng, int depth) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 0 : 4);
    switch (pick(rng)) {
        case 1: return scale(0.3 + 1.5 * (u(rng) + 1) / 2, random_expr(rng, depth - 1));
        case 2: return translate(Eigen::Vector2d(0.5 * u(rng), 0.5 * u(rng)), random_expr(rng, depth - 1));
        case 3: return intersect(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
        case 4: return conv_union(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
        default: {
            const double cx = 0.5 * u(rng), cy = 0.5 * u(rng);
            return box2(cx - 0.3 - std::abs(u(rng)), cx + 0.3 + std::abs(u(rng)), cy - 0.3 - std::abs(u(rng)),
                        cy + 0.3 + std::abs(u(rng)));
        }
    }
}

}  // namespace

TEST(ExpressionAlgebra, EagerRewrites) {
    const ConvexSetExpr B = box2(-1, 1, -1, 1);
    EXPECT_EQ(scale(1.0, B).id(), B.id());
    EXPECT_TRUE(scale(3.0, ConvexSetExpr::empty(2)).is_empty_literal());
    EXPECT_TRUE(conv_union(ConvexSetExpr::empty(2), B).id() == B.id());
    EXPECT_TRUE(intersect(B, ConvexSetExpr::empty(2)).is_empty_literal());
    const ConvexSetExpr W = self_sum(B, 0.5);
    ASSERT_EQ(W.kind(), NodeKind::Scale);
    EXPECT_DOUBLE_EQ(W.node().lambda, 1.5);
    EXPECT_EQ(scale(2.0, scale(3.0, B)).node().lambda, 6.0);
    EXPECT_THROW(scale(0.0, B), QextError);
    EXPECT_THROW(intersect(B, interval(0, 1)), DimensionMismatch);
}

TEST(Compile, LeafPassthrough) {
    const LiftedTemplate t = compile(interval(-1, 1));
    EXPECT_EQ(t.rows(), 2);
    EXPECT_EQ(t.naux, 0);
}

TEST(Compile, ConvUnionAddsPerspectiveVariables) {
    const LiftedTemplate t = compile(conv_union(interval(-1, 0), interval(2, 3)));
    EXPECT_EQ(t.naux, 2);  // split point x1 and weight t1
    int positivity = 0;
    for (auto k : t.kind) positivity += k == RowKind::Positivity;
    EXPECT_EQ(positivity, 2);
}

TEST(Compile, AffineChain) {
    const ConvexSetExpr S = scale(2.0, translate(Eigen::Vector2d(1, 0), box2(-1, 1, -1, 1)));
    EXPECT_TRUE(member(S, Eigen::Vector2d(3, 0), MemberMode::Closed));
    EXPECT_TRUE(member(S, Eigen::Vector2d(3, 0), MemberMode::Open));
    EXPECT_FALSE(member(S, Eigen::Vector2d(4.5, 0), MemberMode::Open));
    // through the lifted template as well
    const LiftedTemplate t = compile(S);
    EXPECT_GE(lifted_closed_margin(t, Eigen::Vector2d(3, 0)), 0.0);
}

TEST(Compile, UnsupportedSublevelLeaf) {
    const ConvexSetExpr bad = ConvexSetExpr::sublevel(2, nullptr, 1.0, true, "opaque");
    EXPECT_THROW(compile(bad), UnsupportedLeaf);
}

TEST(Membership, HullOfSquareAndSegment) {
    const ConvexSetExpr D = conv_union(box2(-1, 1, -1, 1), segment_on_axis(0, 3));
    EXPECT_TRUE(hull_oracle(Eigen::Vector2d(2, 0.2)));
    EXPECT_TRUE(member(D, Eigen::Vector2d(2, 0.2), MemberMode::Open));
    EXPECT_FALSE(member(D, Eigen::Vector2d(3.1, 0), MemberMode::Open));
    EXPECT_TRUE(member(D, Eigen::Vector2d(0, 0), MemberMode::Open));
    // the segment endpoint is in the closure only
    EXPECT_FALSE(member(D, Eigen::Vector2d(3, 0), MemberMode::Open));
    EXPECT_TRUE(member(D, Eigen::Vector2d(3, 0), MemberMode::Closed));
}

TEST(Membership, HullAgreesWithBruteForceOracle) {
    const ConvexSetExpr D = conv_union(box2(-1, 1, -1, 1), segment_on_axis(0, 3));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ux(-1.5, 3.5), uy(-1.5, 1.5);
    int compared = 0;
    for (int k = 0; k < 400; ++k) {
        const Point x = Eigen::Vector2d(ux(rng), uy(rng));
        if (std::abs(pentagon_margin(x)) < 0.03) continue;  // grid resolution band
        EXPECT_EQ(member(D, x, MemberMode::Open), hull_oracle(x)) << x.transpose();
        ++compared;
    }
    EXPECT_GT(compared, 300);
}

TEST(Membership, RelativelyOpenCarrier) {
    const ConvexSetExpr C = segment_on_axis(0, 3);
    EXPECT_TRUE(member(C, Eigen::Vector2d(1, 0), MemberMode::Open));
    EXPECT_FALSE(member(C, Eigen::Vector2d(1, 1e-3), MemberMode::Open));
    EXPECT_FALSE(member(C, Eigen::Vector2d(0, 0), MemberMode::Open));
    EXPECT_TRUE(member(C, Eigen::Vector2d(0, 0), MemberMode::Closed));
}

TEST(Membership, OpenImpliesClosedOnRandomExpressions) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-2.5, 2.5);
    int open_hits = 0;
    for (int e = 0; e < 25; ++e) {
        const ConvexSetExpr S = random_expr(rng, 4);
        for (int k = 0; k < 40; ++k) {
            const Point x = Eigen::Vector2d(u(rng), u(rng));
            if (member(S, x, MemberMode::Open)) {
                ++open_hits;
                EXPECT_TRUE(member(S, x, MemberMode::Closed));
            }
        }
    }
    EXPECT_GT(open_hits, 50);
}

TEST(Membership, ScalingCoherence) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0), ul(1e-3, 2.0);
    const ConvexSetExpr S = conv_union(box2(-1, 0.5, -0.5, 1), segment_on_axis(-2, 2.5));
    for (int k = 0; k < 1000; ++k) {
        const double lam = ul(rng);
        const Point x = Eigen::Vector2d(u(rng), k % 3 == 0 ? 0.0 : u(rng));
        EXPECT_EQ(member(scale(lam, S), x, MemberMode::Open), member(S, x / lam, MemberMode::Open));
    }
}

TEST(ContainsClosure, Intervals) {
    EXPECT_TRUE(contains_closure(interval(-1, 1), interval(-2, 2), 1e-9));
    EXPECT_FALSE(contains_closure(interval(-1, 1), interval(-1, 2), 1e-9));
    EXPECT_TRUE(contains_closure(ConvexSetExpr::empty(1), interval(0, 0.1), 1e-9));
}

TEST(ContainsClosure, HullInsideBox) {
    const ConvexSetExpr inner = conv_union(box2(-1, 1, -1, 1), segment_on_axis(0, 3));
    const ContainmentResult r = contains_closure_report(inner, box2(-2, 4, -2, 2), 1e-9);
    EXPECT_TRUE(r.holds);
    EXPECT_EQ(r.method, "exact");
    EXPECT_NEAR(r.worst_gap, 1.0, 1e-9);
    EXPECT_FALSE(contains_closure(inner, box2(-2, 3, -2, 2), 1e-9));
}

TEST(ContainsClosure, RecessionViolation) {
    MatrixXd A(1, 1);
    A << 1;
    const ConvexSetExpr ray = ConvexSetExpr::polyhedron(A, VectorXd::Ones(1));
    const ContainmentResult r = contains_closure_report(ray, interval(-5, 5), 1e-9);
    EXPECT_FALSE(r.holds);
    EXPECT_EQ(r.reason, "recession violation");
}

TEST(ContainsClosure, RelativeToAmbientSkipsSharedRows) {
    const ConvexSetExpr A = box2(-1, 1, -1, 1);
    const ConvexSetExpr inner = intersect(A, box2(-2, 0, -2, 2));
    const ConvexSetExpr outer = intersect(A, box2(-2, 0.5, -2, 2));
    EXPECT_FALSE(contains_closure(inner, outer, 1e-9));
    EXPECT_TRUE(contains_closure_report(inner, outer, 1e-9, A).holds);
}

TEST(ContainsClosure, HullOuterUsesProbing) {
    const ConvexSetExpr outer = conv_union(box2(-1, 1, -1, 1), segment_on_axis(0, 3));
    const ContainmentResult ok = contains_closure_report(box2(-0.5, 2.0, -0.2, 0.2), outer, 1e-9);
    EXPECT_TRUE(ok.holds);
    EXPECT_EQ(ok.method, "probe");
    const ContainmentResult bad = contains_closure_report(box2(-0.5, 2.0, -0.6, 0.6), outer, 1e-9);
    EXPECT_FALSE(bad.holds);
    ASSERT_TRUE(bad.witness.has_value());
    EXPECT_LE(pentagon_margin(*bad.witness), 1e-9);
}

TEST(ContainsClosure, TransitiveOnRandomBoxes) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int chains = 0;
    for (int k = 0; k < 300; ++k) {
        auto rb = [&] {
            const double cx = u(rng) - 0.5, cy = u(rng) - 0.5;
            return box2(cx - 0.2 - 2 * u(rng), cx + 0.2 + 2 * u(rng), cy - 0.2 - 2 * u(rng), cy + 0.2 + 2 * u(rng));
        };
        const ConvexSetExpr a = scale(0.5, rb()), b = rb(), c = scale(1.5, rb());
        if (contains_closure(a, b, 1e-9) && contains_closure(b, c, 1e-9)) {
            ++chains;
            EXPECT_TRUE(contains_closure(a, c, 1e-9));
        }
    }
    EXPECT_GT(chains, 5);
}

TEST(InteriorPoint, Examples) {
    const Point p = find_interior_point(box2(-1, 1, -1, 1), Subspace::full(2));
    EXPECT_NEAR(p.norm(), 0.0, 1e-9);
    MatrixXd A(2, 2);
    A << 1, 0, -1, 0;
    const ConvexSetExpr slab = ConvexSetExpr::polyhedron(A, Eigen::Vector2d(3, 0));
    const Point q = find_interior_point(slab, x_axis());
    EXPECT_NEAR(q(0), 1.5, 1e-9);
    EXPECT_NEAR(q(1), 0.0, 1e-12);
    EXPECT_THROW(find_interior_point(ConvexSetExpr::empty(2), Subspace::full(2)), EmptySetError);
    EXPECT_THROW(find_interior_point(intersect(interval(0, 1), interval(2, 3)), Subspace::full(1)), EmptySetError);
}

TEST(InteriorPoint, HullInsideCarrier) {
    const ConvexSetExpr D = conv_union(box2(-1, 1, -1, 1), segment_on_axis(0, 3));
    const InteriorPoint ip = find_interior_point_ex(D, x_axis());
    EXPECT_TRUE(member(D, ip.point, MemberMode::Open));
    EXPECT_NEAR(ip.point(1), 0.0, 1e-9);
}

TEST(ScaleFactor, Examples) {
    const ScaleSearch s = find_scale_factor_ex(interval(-1, 1), interval(-4, 4));
    EXPECT_NEAR(s.lambda_min, 0.25, 1e-9);
    EXPECT_NEAR(s.lambda, 0.625, 1e-9);
    EXPECT_THROW(find_scale_factor(interval(-1, 1), interval(-1.0000001, 1.0000001)), ScaleFailure);
    EXPECT_DOUBLE_EQ(find_scale_factor(ConvexSetExpr::empty(1), interval(-1, 1)), 0.5);
    EXPECT_THROW(find_scale_factor(interval(-1, 1), interval(-0.5, 0.5)), ScaleFailure);
}

TEST(BoundingBox, Hull) {
    const auto [lo, hi] = bounding_box(conv_union(box2(-1, 1, -1, 1), segment_on_axis(0, 3)));
    EXPECT_NEAR(lo(0), -1, 1e-9);
    EXPECT_NEAR(hi(0), 3, 1e-9);
    EXPECT_NEAR(hi(1), 1, 1e-9);
}

TEST(Margin, DeepNestedHullStaysAccurate) {
    // nested hull of shrinking boxes: many artificial rows and long degenerate runs
    const int levels = 12;
    std::vector<ConvexSetExpr> parts;
    ConvexSetExpr acc = ConvexSetExpr::box(Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1));
    for (int k = 1; k <= levels; ++k) {
        const ConvexSetExpr piece =
            ConvexSetExpr::box(Eigen::Vector2d(k - 0.5, -1.0 / k), Eigen::Vector2d(k + 0.5, 1.0 / k));
        acc = intersect(conv_union(acc, piece), ConvexSetExpr::box(Eigen::Vector2d(-2, -2), Eigen::Vector2d(20, 2)));
    }
    // (x, 0) is inside for x up to levels + 0.5
    EXPECT_GT(margin(acc, Eigen::Vector2d(levels, 0)), 0.0);
    EXPECT_LT(margin(acc, Eigen::Vector2d(levels + 1.0, 0)), 0.0);
    EXPECT_LT(margin(acc, Eigen::Vector2d(1.0, 1.5)), 0.0);
}
