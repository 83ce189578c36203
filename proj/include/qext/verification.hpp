#pragma once

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "extension.hpp"

namespace qext {

using Box = std::pair<VectorXd, VectorXd>;

namespace detail {

inline Box resolve_box(const ConvexSetExpr& domain, const std::optional<Box>& box, const Config& cfg) {
    if (box) return *box;
    auto bb = bounding_box(domain, cfg);
    for (long i = 0; i < bb.first.size(); ++i)
        if (!std::isfinite(bb.first(i)) || !std::isfinite(bb.second(i)))
            throw SamplingError("domain is unbounded; supply a sampling box");
    return bb;
}

inline ValidationReport new_report(std::string subject, std::uint64_t seed, const Config& cfg) {
    ValidationReport r;
    r.subject = std::move(subject);
    r.seed = seed;
    r.tolerances = tolerance_json(cfg);
    return r;
}

inline void finish(CheckEntry& c) { c.status = c.failed ? CheckStatus::Fail : CheckStatus::Pass; }

}  // namespace detail

// ---------------------------------------------------------------------------
// f((1-t)x + t y) <= max(f(x), f(y)) + tol on random segments. Endpoints come from a
// pre-evaluated pool of domain samples so each segment costs one evaluation.

struct SegmentOptions {
    int segments = 10000;
    double tol = 1e-6;
    std::uint64_t seed = 1;
    int pool = 400;
    std::optional<Box> box;
};

inline ValidationReport check_quasiconvex(const std::function<double(const Point&)>& F, const ConvexSetExpr& domain,
                                          const SegmentOptions& opt, const std::string& label,
                                          const Config& cfg = default_config()) {
    ValidationReport rep = detail::new_report("quasiconvex:" + label, opt.seed, cfg);
    rep.budgets["segments"] = opt.segments;
    rep.budgets["pool"] = opt.pool;
    rep.tolerances["segment"] = opt.tol;
    const Box box = detail::resolve_box(domain, opt.box, cfg);
    Sampler smp(opt.seed);
    const std::vector<Point> pool = sample_in_set(domain, box.first, box.second, opt.pool, smp, cfg);
    std::vector<double> val;
    for (const auto& x : pool) val.push_back(F(x));
    CheckEntry c{"segment_inequality"};
    double worst = -kInf;
    for (int k = 0; k < opt.segments; ++k) {
        const int i = smp.index(opt.pool);
        int j = smp.index(opt.pool - 1);
        if (j >= i) ++j;
        const double t = smp.uniform(0.0, 1.0);
        const Point z = (1.0 - t) * pool[i] + t * pool[j];
        const double fz = F(z);
        const double excess = fz - std::max(val[i], val[j]);
        ++c.tested;
        if (excess > opt.tol) {
            ++c.failed;
            // keep the most violated segment as the witness
            if (excess > worst)
                c.witness = Json{{"x", point_json(pool[i])}, {"y", point_json(pool[j])}, {"t", t},
                                 {"f_x", val[i]},          {"f_y", val[j]},          {"f_mid", fz}};
        }
        worst = std::max(worst, excess);
    }
    c.worst = worst;
    detail::finish(c);
    rep.add(std::move(c));
    return rep;
}

inline ValidationReport check_quasiconvex(const QuasiconvexSpec& F, const ConvexSetExpr& domain,
                                          const SegmentOptions& opt = {}, const Config& cfg = default_config()) {
    return check_quasiconvex([&](const Point& x) { return evaluate_unchecked(F, x, cfg); }, domain, opt, F.describe(),
                             cfg);
}

// ---------------------------------------------------------------------------
// |F(y) - f(y)| <= tol at samples of dom f, skipping f-values outside (lo, hi) or within
// a band of 10 tol around those ends.

struct AgreementOptions {
    int samples = 1000;
    double tol = 1e-6;
    std::uint64_t seed = 1;
    double radius = 3.0;
    Point center;  // empty: origin
    double valid_lo = -kInf;
    double valid_hi = kInf;
};

inline ValidationReport check_extension(const QuasiconvexSpec& F, const QuasiconvexSpec& f, const Subspace& Y,
                                        const AgreementOptions& opt = {}, const Config& cfg = default_config()) {
    ValidationReport rep = detail::new_report("extension:" + f.describe(), opt.seed, cfg);
    rep.budgets["samples"] = opt.samples;
    rep.tolerances["agreement"] = opt.tol;
    Sampler smp(opt.seed);
    const Point c = opt.center.size() ? Y.project(opt.center) : Point(Point::Zero(f.dim()));
    CheckEntry e{"agreement_on_subspace"};
    double worst = 0.0;
    long skipped = 0, tries = 0;
    const double band = 10.0 * opt.tol;
    while (e.tested < opt.samples) {
        const Point y = c + smp.on_subspace(Y, opt.radius);
        if (++tries > 200L * opt.samples) throw SamplingError("check_extension: too few usable samples on the subspace");
        if (!(margin(f.domain(), y, cfg) > cfg.member_tol)) continue;
        const double fy = evaluate_unchecked(f, y, cfg);
        if (!(fy > opt.valid_lo + band && fy < opt.valid_hi - band)) {
            ++skipped;
            continue;
        }
        const double Fy = evaluate(F, y, cfg);
        const double dev = std::abs(Fy - fy);
        worst = std::max(worst, dev);
        ++e.tested;
        if (dev > opt.tol) {
            ++e.failed;
            if (e.witness.is_null()) e.witness = Json{{"point", point_json(y)}, {"F", Fy}, {"f", fy}};
        }
    }
    e.worst = worst;
    e.note = std::to_string(skipped) + " samples outside the level window";
    detail::finish(e);
    rep.add(std::move(e));
    return rep;
}

// ---------------------------------------------------------------------------
// Range and minimizer preservation.

struct PreservationOptions {
    int samples = 1000;
    double tol = 1e-6;
    std::uint64_t seed = 1;
    ConvexSetExpr A;          // domain of F; Full when unset
    Point center;             // sampling centre; origin when empty
    double radius = 3.0;
    double sup = kInf;        // sup f over A ∩ Y
    bool range_applies = true;
    std::vector<Point> minimizers;  // known minimizers of f on A ∩ Y
};

inline ValidationReport check_preservation(const QuasiconvexSpec& F, const QuasiconvexSpec& f, double a,
                                           const Subspace& Y, const PreservationOptions& opt = {},
                                           const Config& cfg = default_config()) {
    ValidationReport rep = detail::new_report("preservation:" + f.describe(), opt.seed, cfg);
    rep.budgets["samples"] = opt.samples;
    const int n = F.dim();
    const ConvexSetExpr A = opt.A.valid() ? opt.A : ConvexSetExpr::full(n);
    const Point c = opt.center.size() ? opt.center : Point(Point::Zero(n));
    Sampler smp(opt.seed);
    const VectorXd lo = c.array() - opt.radius, hi = c.array() + opt.radius;
    const std::vector<Point> xs = sample_in_set(A, lo, hi, opt.samples, smp, cfg);

    CheckEntry range{"range_containment"};
    if (!opt.range_applies) {
        range.status = CheckStatus::Skipped;
        range.note = "not the same range";
    } else {
        double lo_seen = kInf, hi_seen = -kInf;
        for (const auto& x : xs) {
            const double v = evaluate(F, x, cfg);
            lo_seen = std::min(lo_seen, v);
            hi_seen = std::max(hi_seen, v);
            ++range.tested;
            if (v < a - opt.tol || v > opt.sup + opt.tol) {
                ++range.failed;
                if (range.witness.is_null())
                    range.witness = Json{{"point", point_json(x)}, {"F", v}, {"inf_f", a}, {"sup_f", opt.sup}};
            }
        }
        range.worst = std::max(a - lo_seen, hi_seen - opt.sup);
        range.note = "sampled F range [" + std::to_string(lo_seen) + ", " + std::to_string(hi_seen) +
                     "]; f(A ∩ Y) is the interval between inf and sup of f";
        detail::finish(range);
    }

    // off Y: random points plus fibres above the known minimizers
    CheckEntry off{"minimizers_off_subspace"};
    std::vector<Point> offs;
    for (const auto& x : xs)
        if (Y.distance(x) > 10.0 * opt.tol) offs.push_back(x);
    const MatrixXd& Qc = Y.complement_basis();
    for (const auto& m : opt.minimizers) {
        for (int k = 0; k < std::max(1, opt.samples / 10); ++k) {
            VectorXd q = VectorXd::Zero(n);
            for (long j = 0; j < Qc.cols(); ++j) q += smp.normal() * Qc.col(j);
            if (q.norm() < 1e-12) continue;
            const Point x = m + q / q.norm() * smp.uniform(0.01, opt.radius);
            if (margin(A, x, cfg) > cfg.member_tol) offs.push_back(x);
        }
    }
    double gap = kInf;
    for (const auto& x : offs) {
        const double v = evaluate(F, x, cfg);
        gap = std::min(gap, v - a);
        ++off.tested;
        if (!(v > a + opt.tol)) {
            ++off.failed;
            if (off.witness.is_null()) off.witness = Json{{"point", point_json(x)}, {"F", v}, {"inf_f", a}};
        }
    }
    if (off.tested) off.worst = gap;
    detail::finish(off);

    CheckEntry on{"minimizers_on_subspace"};
    for (const auto& m : opt.minimizers) {
        const double v = evaluate(F, m, cfg);
        ++on.tested;
        if (std::abs(v - a) > opt.tol) {
            ++on.failed;
            if (on.witness.is_null()) on.witness = Json{{"point", point_json(m)}, {"F", v}, {"inf_f", a}};
        }
    }
    if (opt.minimizers.empty()) {
        on.status = CheckStatus::Skipped;
        on.note = "infimum not attained";
    } else {
        detail::finish(on);
    }
    rep.add(std::move(range));
    rep.add(std::move(off));
    rep.add(std::move(on));
    return rep;
}

// ---------------------------------------------------------------------------
// conv(A' ∪ C) ∩ Y = conv((A' ∩ Y) ∪ C) on subspace samples, and openness of conv(A' ∪ C).

struct ConvIdentityOptions {
    int samples = 1000;
    int openness_samples = 100;
    std::uint64_t seed = 1;
    Point center;
    double radius = 3.0;
};

inline ValidationReport check_conv_identity(const ConvexSetExpr& Ap, const ConvexSetExpr& C, const Subspace& Y,
                                            const ConvIdentityOptions& opt = {}, const Config& cfg = default_config()) {
    ValidationReport rep = detail::new_report("conv_identity", opt.seed, cfg);
    rep.budgets["samples"] = opt.samples;
    rep.budgets["openness_samples"] = opt.openness_samples;
    const int n = Ap.dim();
    const ConvexSetExpr lhs = conv_union(Ap, C);
    const ConvexSetExpr rhs = conv_union(intersect(Ap, ConvexSetExpr::subspace(Y)), C);
    const Point c = opt.center.size() ? opt.center : Point(Point::Zero(n));
    Sampler smp(opt.seed);
    CheckEntry eq{"trace_identity"};
    for (int k = 0; k < opt.samples; ++k) {
        const Point y = Y.project(c) + smp.on_subspace(Y, opt.radius);
        const bool l = member(lhs, y, MemberMode::Open, cfg.member_tol, cfg);
        const bool r = member(rhs, y, MemberMode::Open, cfg.member_tol, cfg);
        ++eq.tested;
        if (l != r) {
            ++eq.failed;
            if (eq.witness.is_null()) eq.witness = Json{{"point", point_json(y)}, {"hull_of_union", l}, {"hull_of_trace", r}};
        }
    }
    detail::finish(eq);

    CheckEntry op{"openness"};
    if (opt.openness_samples > 0) {
        const VectorXd lo = c.array() - opt.radius, hi = c.array() + opt.radius;
        const std::vector<Point> pts = sample_in_set(lhs, lo, hi, opt.openness_samples, smp, cfg);
        const double r = 10.0 * cfg.member_tol;
        for (const auto& x : pts) {
            ++op.tested;
            bool ok = true;
            for (int i = 0; i < n && ok; ++i)
                for (double sg : {-1.0, 1.0})
                    if (!member(lhs, Point(x + sg * r * VectorXd::Unit(n, i)), MemberMode::Closed, cfg.closed_tol, cfg))
                        ok = false;
            if (!ok) {
                ++op.failed;
                if (op.witness.is_null()) op.witness = Json{{"point", point_json(x)}, {"radius", r}};
            }
        }
        detail::finish(op);
    } else {
        op.status = CheckStatus::Skipped;
    }
    rep.add(std::move(eq));
    rep.add(std::move(op));
    return rep;
}

// ---------------------------------------------------------------------------
// Closure criterion for D1 = conv(U ∪ C): hypotheses first, conclusion only if they hold.

struct ClosureScenario {
    ConvexSetExpr U, C, D2;
    double W = 0.0;
    QuasiconvexSpec d;
    ConvexSetExpr A;
    Subspace Y;
};

inline ClosureScenario scenario_from_trace(const BuilderTrace& tr, const TracePair& tp, const ExtensionProblem& p) {
    return ClosureScenario{tr.records[tp.lower].U, tr.records[tp.lower].C, tr.records[tp.upper].D, tp.W, p.d, p.A, p.Y};
}

inline ValidationReport check_closure_criterion(const ClosureScenario& s, double tol = 1e-7, std::uint64_t seed = 1,
                                      const Config& cfg = default_config()) {
    ValidationReport rep = detail::new_report("closure_criterion", seed, cfg);
    rep.tolerances["closure_gap"] = tol;
    const int n = s.U.dim();
    const std::optional<ConvexSetExpr> rel =
        s.A.is_full_literal() ? std::nullopt : std::optional<ConvexSetExpr>(s.A);

    CheckEntry a1{"a_trace_inside_level"};
    {
        const ContainmentResult r =
            contains_closure_report(intersect(s.U, ConvexSetExpr::subspace(s.Y)), s.C, -cfg.contain_tol, std::nullopt, cfg);
        a1.tested = 1;
        a1.note = r.method;
        if (!r.holds) {
            a1.failed = 1;
            a1.witness = Json{{"reason", r.reason}};
            if (r.witness) a1.witness["point"] = point_json(*r.witness);
        }
        detail::finish(a1);
    }

    CheckEntry a2{"a_level_closure_inside_upper"};
    {
        const ContainmentResult r = contains_closure_report(s.C, s.D2, tol, rel, cfg);
        a2.tested = 1;
        a2.note = r.method;
        if (!r.holds) {
            a2.failed = 1;
            a2.witness = Json{{"reason", r.reason}};
            if (r.witness) a2.witness["point"] = point_json(*r.witness);
        }
        detail::finish(a2);
    }

    CheckEntry b{"b_neighbourhood"};
    {
        Sampler smp(seed);
        std::vector<VectorXd> dirs, offs;
        for (int i = 0; i < n; ++i) {
            dirs.push_back(VectorXd::Unit(n, i));
            dirs.push_back(-VectorXd::Unit(n, i));
        }
        offs = dirs;
        for (int k = 0; k < 16; ++k) {
            VectorXd v(n);
            for (int i = 0; i < n; ++i) v(i) = smp.normal();
            if (v.norm() < 1e-12) continue;
            dirs.push_back(v / v.norm());
            if (k < 8) offs.push_back(v / v.norm());
        }
        if (!(s.W > 0)) {
            b.tested = 1;
            b.failed = 1;
            b.witness = Json{{"reason", "no neighbourhood radius"}, {"W", s.W}};
        } else {
            const ClosureProgram cp = closure_program(s.U, cfg);
            const std::pair<Point, double> box{Point::Zero(n), cfg.probe_box};
            for (const auto& d : dirs) {
                const SupResult sr = sup_over_closure(cp, d, cfg, box);
                if (sr.status != SupStatus::Bounded) continue;
                for (const auto& u : offs) {
                    const Point q = sr.argmax + s.W * u;
                    ++b.tested;
                    if (!(margin(s.D2, q, cfg) > cfg.member_tol)) {
                        ++b.failed;
                        if (b.witness.is_null())
                            b.witness = Json{{"support_point", point_json(sr.argmax)}, {"offset_point", point_json(q)},
                                             {"W", s.W}};
                    }
                }
            }
        }
        detail::finish(b);
    }

    CheckEntry c{"c_gauge_bounded"};
    {
        const SpecNode& dn = s.d.node();
        if (dn.kind != SpecKind::MaxAffine) {
            c.status = CheckStatus::Skipped;
            c.note = "gauge is not max-affine";
        } else {
            const ClosureProgram cp = closure_program(s.U, cfg);
            double worst = -kInf;
            for (const auto& pc : dn.pieces) {
                const SupResult sr = sup_over_closure(cp, pc.a, cfg);
                ++c.tested;
                if (sr.status == SupStatus::Unbounded) {
                    ++c.failed;
                    if (c.witness.is_null()) c.witness = Json{{"piece", point_json(pc.a)}, {"reason", "unbounded"}};
                } else if (sr.status == SupStatus::Bounded) {
                    worst = std::max(worst, sr.value + pc.b);
                }
            }
            c.worst = worst;
            detail::finish(c);
        }
    }

    CheckEntry concl{"conclusion"};
    const bool hyp = a1.status != CheckStatus::Fail && a2.status != CheckStatus::Fail &&
                     b.status != CheckStatus::Fail && c.status != CheckStatus::Fail;
    if (!hyp) {
        concl.status = CheckStatus::Skipped;
        concl.note = "hypotheses fail";
    } else {
        // the hypotheses only guarantee room of order W around U, so never demand more than W/2
        const double gap = s.W > 0 ? std::min(tol, 0.5 * s.W) : tol;
        const ContainmentResult r = contains_closure_report(conv_union(s.U, s.C), s.D2, gap, rel, cfg);
        concl.tested = 1;
        concl.note = r.method;
        if (gap < tol) {
            char buf[48];
            std::snprintf(buf, sizeof buf, ", gap %.3g", gap);
            concl.note += buf;
        }
        if (!r.holds) {
            concl.failed = 1;
            concl.witness = Json{{"reason", r.reason}};
            if (r.witness) concl.witness["point"] = point_json(*r.witness);
        }
        detail::finish(concl);
    }
    rep.add(std::move(a1));
    rep.add(std::move(a2));
    rep.add(std::move(b));
    rep.add(std::move(c));
    rep.add(std::move(concl));
    return rep;
}

// Replays every consecutive recorded level pair of an engine trace.
inline ValidationReport check_trace(const ExtensionResult& r, const ExtensionProblem& p, double tol = 1e-7,
                                    std::uint64_t seed = 1, const Config& cfg = default_config()) {
    ValidationReport rep = detail::new_report("trace:" + p.name, seed, cfg);
    CheckEntry e{"trace_pairs"};
    for (const auto& tp : r.trace.pairs) {
        const ValidationReport one = check_closure_criterion(scenario_from_trace(r.trace, tp, p), tol, seed, cfg);
        ++e.tested;
        const CheckEntry* concl = one.find("conclusion");
        if (!one.passed() || concl->status != CheckStatus::Pass) {
            ++e.failed;
            if (e.witness.is_null()) {
                e.witness = Json{{"alpha", r.trace.records[tp.lower].alpha},
                                 {"beta", r.trace.records[tp.upper].alpha},
                                 {"report", one.to_json()}};
            }
        }
    }
    detail::finish(e);
    rep.add(std::move(e));
    return rep;
}

// ---------------------------------------------------------------------------
// A nondecreasing family on the line that violates the closure axiom:
// empty below 0, (-inf, 0) on [0, 1), everything from 1 on.

inline OmegaFamily jump_family() {
    OmegaFamily fam(1, ConvexSetExpr::full(1), 0.1);
    MatrixXd A(1, 1);
    A << 1.0;
    fam.add_block(0.0, 1.0, LevelGenerator::constant(ConvexSetExpr::polyhedron(A, VectorXd::Zero(1)), "negative half-line"));
    fam.below(BelowPolicy::Empty).above(AbovePolicy::ClampToAmbient).named("jump family");
    return fam;
}

inline ValidationReport lsc_counterexample_demo(const Config& cfg = default_config()) {
    ValidationReport rep = detail::new_report("lsc_counterexample", 1, cfg);
    const OmegaFamily fam = jump_family();
    OmegaValidationOptions vo;
    vo.box_lo = VectorXd::Constant(1, -3.0);
    vo.box_hi = VectorXd::Constant(1, 3.0);
    const ValidationReport omega = validate_omega(fam, vo, cfg);

    CheckEntry flagged{"closure_axiom_flagged"};
    flagged.tested = 1;
    const CheckEntry* clos = omega.find("closure_containment");
    const std::vector<std::string> failing = omega.failed_names();
    flagged.witness = clos->witness;
    if (!(failing.size() == 1 && failing[0] == "closure_containment")) {
        flagged.failed = 1;
        flagged.note = "expected the closure axiom alone to fail";
    }
    detail::finish(flagged);

    const QuasiconvexSpec f = QuasiconvexSpec::family_defined(fam, "jump");
    auto at = [&](double x) { return evaluate(f, Point::Constant(1, x), cfg); };
    CheckEntry values{"reconstructed_values"};
    const std::vector<std::pair<double, double>> expect{{-0.5, 0.0}, {0.5, 1.0}, {1.5, 1.0}, {-2.0, 0.0}};
    Json seen = Json::array();
    for (const auto& [x, v] : expect) {
        const double got = at(x);
        seen.push_back(Json{{"x", x}, {"f", got}});
        ++values.tested;
        if (std::abs(got - v) > cfg.tol_bisect) ++values.failed;
    }
    values.witness = seen;
    detail::finish(values);

    // locate the jump by scanning, then measure it at one millionth
    CheckEntry jump{"lower_semicontinuity_fails"};
    double where = std::nan("");
    for (double x = -2.0; x <= 2.0; x += 0.25)
        if (at(x) - at(x - 0.25) > 0.5) {
            double lo = x - 0.25, hi = x;
            for (int it = 0; it < 50; ++it) {
                const double mid = 0.5 * (lo + hi);
                (at(mid) > 0.5 ? hi : lo) = mid;
            }
            where = hi;
            break;
        }
    const double size = std::isnan(where) ? 0.0 : at(where) - at(where - 1e-6);
    jump.tested = 1;
    jump.witness = Json{{"jump_at", where}, {"jump", size}, {"f_at_1", at(1.0)}, {"f_below_1", at(1.0 - 1e-6)}};
    if (!(size >= 1.0 - 2.0 * cfg.tol_bisect)) jump.failed = 1;
    jump.note = "the function is the indicator of [jump_at, inf)";
    detail::finish(jump);

    rep.merge(omega, "omega.");
    rep.add(std::move(flagged));
    rep.add(std::move(values));
    rep.add(std::move(jump));
    return rep;
}

// ---------------------------------------------------------------------------
// Fault injection

// Level inflation: dilate one block of a family by `factor` about `centre`.
inline OmegaFamily inflate_block(const OmegaFamily& fam, size_t block, double factor, const Point& centre) {
    OmegaFamily out(fam.dim(), fam.ambient(), fam.grid_step());
    const auto& bl = fam.blocks();
    for (size_t i = 0; i < bl.size(); ++i) {
        if (i != block) {
            out.add_block(bl[i].lo, bl[i].hi, bl[i].gen);
            continue;
        }
        const FamilyBlock b = bl[i];
        out.add_block(b.lo, b.hi, LevelGenerator::explicit_fn(
                                      [b, factor, centre](double a) {
                                          return detail::about(centre, factor, OmegaFamily::generate(b, a));
                                      },
                                      "inflated " + b.gen.label));
    }
    out.below(fam.below_policy()).above(fam.above_policy()).named(fam.name() + " (inflated)");
    return out;
}

// Gap removal: the upper set collapses onto U, leaving no neighbourhood room.
inline ClosureScenario remove_gap(ClosureScenario s) {
    s.D2 = s.U;
    return s;
}

}  // namespace qext
