#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "qext/functions.hpp"

using namespace qext;

namespace {

ConvexSetExpr full2() { return ConvexSetExpr::full(2); }
ConvexSetExpr interval(double lo, double hi) { return ConvexSetExpr::box(VectorXd::Constant(1, lo), VectorXd::Constant(1, hi)); }

QuasiconvexSpec abs_x1() {
    return QuasiconvexSpec::max_affine({{Eigen::Vector2d(1, 0), 0.0}, {Eigen::Vector2d(-1, 0), 0.0}}, full2(), "|x1|");
}

OmegaFamily abs_family() {
    OmegaFamily fam(1, ConvexSetExpr::full(1), 0.1);
    fam.add_block(0.0, 10.0, LevelGenerator::explicit_fn([](double a) { return interval(-a, a); }, "(-a, a)"));
    fam.above(AbovePolicy::Extrapolate).named("abs");
    return fam;
}

// D = empty below 0, (-inf, 0) on [0, 1), everything from 1 on
OmegaFamily jump_family() {
    MatrixXd A(1, 1);
    A << 1;
    OmegaFamily fam(1, ConvexSetExpr::full(1), 0.1);
    fam.add_block(0.0, 1.0, LevelGenerator::constant(ConvexSetExpr::polyhedron(A, VectorXd::Zero(1)), "(-inf, 0)"));
    fam.named("jump");
    return fam;
}

OmegaValidationOptions line_box_options() {
    OmegaValidationOptions o;
    o.box_lo = VectorXd::Constant(1, -5);
    o.box_hi = VectorXd::Constant(1, 5);
    return o;
}

std::vector<QuasiconvexSpec> round_trip_specs() {
    const auto F = full2();
    std::vector<QuasiconvexSpec> s;
    s.push_back(abs_x1());
    s.push_back(QuasiconvexSpec::max_affine({{Eigen::Vector2d(1, 0), 0.0}, {Eigen::Vector2d(0, 2), -1.0}}, F));
    s.push_back(QuasiconvexSpec::max_affine(
        {{Eigen::Vector2d(1, 1), 0.0}, {Eigen::Vector2d(-1, 1), 0.0}, {Eigen::Vector2d(0, -1), 0.5}}, F));
    s.push_back(QuasiconvexSpec::max_affine({{Eigen::Vector2d(0.5, -0.3), 0.2}}, F));
    s.push_back(QuasiconvexSpec::max_affine({{Eigen::Vector2d(1, 0), 0}, {Eigen::Vector2d(-1, 0), 0},
                                             {Eigen::Vector2d(0, 1), 0}, {Eigen::Vector2d(0, -1), 0}},
                                            F));
    s.push_back(QuasiconvexSpec::transformed(s[1], MonotoneMap::arctan_scaled(1.0, 0.0)));
    s.push_back(QuasiconvexSpec::transformed(s[4], MonotoneMap::affine(2.0, 1.0).then(MonotoneMap::arctan_scaled(0.5, 1.0))));
    return s;
}

}  // namespace

TEST(MonotoneMapTest, ForwardInverseRoundTrip) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-3, 3);
    const std::vector<MonotoneMap> maps = {MonotoneMap::identity(), MonotoneMap::arctan_scaled(0.7, 2.0),
                                           MonotoneMap::neg_log_gap(4.0), MonotoneMap::affine(3.0, -1.0),
                                           MonotoneMap::affine(0.5, 0).then(MonotoneMap::arctan_scaled(1, 0))};
    for (const auto& m : maps)
        for (int k = 0; k < 200; ++k) {
            const double t = u(rng);
            EXPECT_NEAR(m.inverse(m.forward(t)), t, 1e-10) << m.describe();
        }
    for (int k = 0; k < 200; ++k) {
        const double t = std::exp(u(rng));
        EXPECT_NEAR(MonotoneMap::log().inverse(MonotoneMap::log().forward(t)), t, 1e-10 * t);
    }
}

TEST(MonotoneMapTest, Preimages) {
    const MonotoneMap at = MonotoneMap::arctan_scaled(1.0, 0.0);
    EXPECT_EQ(at.preimage(-2.0).kind, Threshold::None);
    EXPECT_EQ(at.preimage(2.0).kind, Threshold::All);
    EXPECT_NEAR(at.preimage(std::numbers::pi / 4).value, 1.0, 1e-12);
    const MonotoneMap cap = MonotoneMap::cap(3.0);
    EXPECT_EQ(cap.preimage(3.5).kind, Threshold::All);
    EXPECT_DOUBLE_EQ(cap.preimage(2.0).value, 2.0);
    EXPECT_DOUBLE_EQ(cap.forward(5.0), 3.0);
    EXPECT_NEAR(MonotoneMap::neg_log_gap(1.0).preimage(0.0).value, 0.0, 1e-15);
    EXPECT_THROW(MonotoneMap::neg_log_gap(1.0).forward(2.0), DomainError);
}

TEST(ScalingScheduleTest, EndpointIdentities) {
    ScalingSchedule s;
    s.set(1, 0.5);
    s.set(2, 0.8125);
    s.set(-3, 0.3);
    for (const auto& [n, lam] : s.values()) {
        EXPECT_EQ(s.phi(n, static_cast<double>(n)), lam);
        EXPECT_EQ(s.phi(n, static_cast<double>(n + 1)), 1.0);
    }
    EXPECT_DOUBLE_EQ(s.phi(1, 1.5), 0.75);
    EXPECT_LT(s.phi(1, 1.2) / s.phi(1, 1.7), 1.0);
    EXPECT_THROW(s.set(4, 1.0), QextError);
}

TEST(Evaluate, ClosedForms) {
    EXPECT_DOUBLE_EQ(evaluate(abs_x1(), Eigen::Vector2d(0.7, 5)), 0.7);
    const auto dom = ConvexSetExpr::box(Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1));
    EXPECT_THROW(evaluate(abs_x1().with_domain(dom), Eigen::Vector2d(2, 0)), DomainError);
}

TEST(Evaluate, FamilyBisectionMatchesAbsoluteValue) {
    const QuasiconvexSpec f = QuasiconvexSpec::family_defined(abs_family());
    EXPECT_NEAR(evaluate(f, VectorXd::Constant(1, 0.7)), 0.7, 1e-6);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-8, 8);
    for (int k = 0; k < 100; ++k) {
        const double x = u(rng);
        EXPECT_NEAR(evaluate(f, VectorXd::Constant(1, x)), std::abs(x), 1e-6);
    }
    EXPECT_THROW(evaluate(f, VectorXd::Constant(1, 50.0)), CoverageError);
}

TEST(Evaluate, JumpFamily) {
    const QuasiconvexSpec f = QuasiconvexSpec::family_defined(jump_family());
    EXPECT_NEAR(evaluate(f, VectorXd::Constant(1, 0.5)), 1.0, 1e-6);
    EXPECT_NEAR(evaluate(f, VectorXd::Constant(1, -0.5)), 0.0, 1e-6);
    EXPECT_NEAR(evaluate(f, VectorXd::Constant(1, 1.5)), 1.0, 1e-6);
    EXPECT_NEAR(evaluate(f, VectorXd::Constant(1, 0.999999)), 1.0, 1e-6);
    EXPECT_NEAR(evaluate(f, VectorXd::Constant(1, -1e-6)), 0.0, 1e-6);
}

TEST(Sublevel, Examples) {
    const ConvexSetExpr s = sublevel(abs_x1(), 2.0);
    EXPECT_TRUE(member(s, Eigen::Vector2d(1.9, 100)));
    EXPECT_FALSE(member(s, Eigen::Vector2d(2.0, 0)));
    const QuasiconvexSpec at = QuasiconvexSpec::transformed(abs_x1(), MonotoneMap::arctan_scaled(1, 0));
    const ConvexSetExpr s2 = sublevel(at, std::numbers::pi / 4);
    EXPECT_TRUE(member(s2, Eigen::Vector2d(0.999, 3)));
    EXPECT_FALSE(member(s2, Eigen::Vector2d(1.001, 3)));
    EXPECT_THROW(find_interior_point(sublevel(at, -1.0), Subspace::full(2)), EmptySetError);
    EXPECT_TRUE(sublevel(at, -2.0).is_empty_literal());
    EXPECT_TRUE(sublevel(at, 2.0).is_full_literal());
    const QuasiconvexSpec fam = QuasiconvexSpec::family_defined(abs_family());
    EXPECT_TRUE(sublevel(fam, 0.0).is_empty_literal() ||
                !member(sublevel(fam, 0.0), VectorXd::Zero(1)));
    EXPECT_THROW(sublevel(abs_x1(), 1.0, false), ScopeError);
}

TEST(Sublevel, RestrictionCarriesSubspace) {
    const Subspace Y = Subspace::span(Eigen::Vector2d(1, 0));
    const QuasiconvexSpec f = QuasiconvexSpec::restriction(abs_x1(), Y);
    const ConvexSetExpr s = sublevel(f, 1.0);
    EXPECT_TRUE(member(s, Eigen::Vector2d(0.5, 0)));
    EXPECT_FALSE(member(s, Eigen::Vector2d(0.5, 0.1)));
    EXPECT_THROW(evaluate(f, Eigen::Vector2d(0.5, 0.1)), DomainError);
}

TEST(Sublevel, CoherenceWithEvaluation) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-3, 3);
    const double tol = 1e-9;
    for (const auto& f : round_trip_specs()) {
        for (int k = 0; k < 300; ++k) {
            const Point x = Eigen::Vector2d(u(rng), u(rng));
            const double alpha = u(rng);
            const double v = evaluate(f, x);
            if (std::abs(v - alpha) <= 10 * tol) continue;
            EXPECT_EQ(member(sublevel(f, alpha), x, MemberMode::Open, tol), v < alpha - tol) << f.describe();
        }
    }
}

TEST(FamilyFromFunction, Examples) {
    const OmegaFamily fam = family_from_function(abs_x1(), {0, 3, 1});
    EXPECT_TRUE(member(fam.at(2.0), Eigen::Vector2d(1.99, -7)));
    EXPECT_FALSE(member(fam.at(2.0), Eigen::Vector2d(2.01, 0)));
    const ConvexSetExpr B = ConvexSetExpr::box(Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1));
    const OmegaFamily cf = family_from_function(QuasiconvexSpec::constant(5.0, B), {4, 7, 0.5});
    EXPECT_FALSE(member(cf.at(5.0), Eigen::Vector2d(0, 0)));
    EXPECT_TRUE(member(cf.at(5.01), Eigen::Vector2d(0, 0)));
    EXPECT_FALSE(member(cf.at(5.01), Eigen::Vector2d(1.5, 0)));
}

TEST(FamilyFromFunction, RoundTripOnThousandSamples) {
    const QuasiconvexSpec g = round_trip_specs()[1];  // max(x1, 2 x2 - 1)
    const QuasiconvexSpec F = QuasiconvexSpec::family_defined(family_from_function(g, {-8, 8, 0.5}));
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int k = 0; k < 1000; ++k) {
        const Point x = Eigen::Vector2d(u(rng), u(rng));
        ASSERT_NEAR(evaluate(F, x), evaluate(g, x), 1e-6) << x.transpose();
    }
}

TEST(FamilyFromFunction, RoundTripTransformed) {
    for (const auto& g : {round_trip_specs()[5], round_trip_specs()[6]}) {
        const QuasiconvexSpec F = QuasiconvexSpec::family_defined(family_from_function(g, {-3, 4, 0.25}));
        std::mt19937_64 rng(13);
        std::uniform_real_distribution<double> u(-2, 2);
        for (int k = 0; k < 200; ++k) {
            const Point x = Eigen::Vector2d(u(rng), u(rng));
            ASSERT_NEAR(evaluate(F, x), evaluate(g, x), 1e-6);
        }
    }
}

TEST(FamilyFromFunction, NonFiniteProbeIsRejected) {
    const auto g = QuasiconvexSpec::transformed(abs_x1(), MonotoneMap::log());
    EXPECT_THROW(family_from_function(g, {-3, 3, 1}, default_config(), {Point(Eigen::Vector2d(0, 1))}), SpecError);
}

TEST(ValidateOmega, AbsoluteValueFamilyPasses) {
    const ValidationReport r = validate_omega(abs_family(), line_box_options());
    EXPECT_TRUE(r.passed()) << r.to_json().dump(2);
    EXPECT_EQ(r.checks.size(), 4u);
}

TEST(ValidateOmega, JumpFamilyFailsClosureOnly) {
    const ValidationReport r = validate_omega(jump_family(), line_box_options());
    EXPECT_EQ(r.failed_names(), std::vector<std::string>{"closure_containment"});
    const CheckEntry* c = r.find("closure_containment");
    ASSERT_NE(c, nullptr);
    EXPECT_DOUBLE_EQ(c->witness["alpha"].get<double>(), 0.2);
    EXPECT_DOUBLE_EQ(c->witness["beta"].get<double>(), 0.5);
}

TEST(ValidateOmega, FullEverywhereFailsEmptyIntersection) {
    OmegaFamily fam(1, ConvexSetExpr::full(1), 0.1);
    fam.add_block(0, 1, LevelGenerator::constant(ConvexSetExpr::full(1))).below(BelowPolicy::ExtendFirst);
    const ValidationReport r = validate_omega(fam, line_box_options());
    EXPECT_EQ(r.find("empty_intersection")->status, CheckStatus::Fail);
}

TEST(ValidateOmega, Deterministic) {
    const auto a = validate_omega(jump_family(), line_box_options()).to_json().dump();
    const auto b = validate_omega(jump_family(), line_box_options()).to_json().dump();
    EXPECT_EQ(a, b);
}

TEST(ComplementGauge, Examples) {
    const QuasiconvexSpec d = complement_gauge(Subspace::span(Eigen::Vector2d(1, 0)));
    EXPECT_NEAR(evaluate(d, Eigen::Vector2d(3, -2)), 2.0, 1e-12);
    const QuasiconvexSpec d2 = complement_gauge(Subspace::span(Eigen::Vector2d(1, 1) / std::sqrt(2.0)));
    EXPECT_NEAR(evaluate(d2, Eigen::Vector2d(1, -1)), std::sqrt(2.0), 1e-12);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-10, 10);
    for (int k = 0; k < 1000; ++k) {
        const double t = u(rng);
        EXPECT_NEAR(evaluate(d2, Eigen::Vector2d(t, t)), 0.0, 1e-12);
        EXPECT_NEAR(evaluate(d, Eigen::Vector2d(t, 0)), 0.0, 1e-12);
    }
    EXPECT_THROW(complement_gauge(Subspace::full(2)), GaugeUndefined);
}

TEST(Quasiconvexity, ConstructedSpecsOnSegments) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-3, 3), ut(0, 1);
    for (const auto& f : round_trip_specs()) {
        for (int k = 0; k < 10000; ++k) {
            const Point x = Eigen::Vector2d(u(rng), u(rng)), y = Eigen::Vector2d(u(rng), u(rng));
            const double t = ut(rng);
            ASSERT_LE(evaluate(f, (1 - t) * x + t * y), std::max(evaluate(f, x), evaluate(f, y)) + 1e-6);
        }
    }
}

TEST(Range, MaxAffineOnSubspace) {
    const Subspace Y = Subspace::span(Eigen::Vector2d(1, 0));
    const QuasiconvexSpec f = QuasiconvexSpec::restriction(abs_x1(), Y);
    const RangeInfo r = range_over(f, full2());
    EXPECT_NEAR(r.inf, 0.0, 1e-9);
    EXPECT_TRUE(r.inf_attained);
    EXPECT_TRUE(std::isinf(r.sup));
    const ConvexSetExpr box = ConvexSetExpr::box(Eigen::Vector2d(1, -1), Eigen::Vector2d(3, 1));
    const RangeInfo rb = range_over(f, box);
    EXPECT_NEAR(rb.inf, 1.0, 1e-9);
    EXPECT_FALSE(rb.inf_attained);
    EXPECT_NEAR(rb.sup, 3.0, 1e-9);
    EXPECT_FALSE(rb.sup_attained);
    const RangeInfo ra = range_over(QuasiconvexSpec::transformed(f, MonotoneMap::arctan_scaled(1, 0)), full2());
    EXPECT_NEAR(ra.sup, std::numbers::pi / 2, 1e-12);
    EXPECT_FALSE(ra.sup_attained);
    const RangeInfo rc = range_over(QuasiconvexSpec::transformed(f, MonotoneMap::cap(2.0)), full2());
    EXPECT_NEAR(rc.sup, 2.0, 1e-12);
    EXPECT_TRUE(rc.sup_attained);
}
