#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "functions.hpp"

namespace qext {

// ---------------------------------------------------------------------------
// Problem

struct ExtensionProblem {
    int n = 0;
    Subspace Y;
    ConvexSetExpr A;    // Full or an open polyhedron
    QuasiconvexSpec g;  // ambient-coordinate formula, domain A
    QuasiconvexSpec f;  // g restricted to A ∩ Y: the function being extended
    QuasiconvexSpec d;  // convex gauge on A with zero set A ∩ Y
    LevelGrid grid{-4.0, 6.0, 0.5};
    double radius = 3.0;  // half-width of sampling and search boxes
    std::string name = "problem";

    static ExtensionProblem make(const Subspace& Y, const ConvexSetExpr& A, const QuasiconvexSpec& g, LevelGrid grid,
                                 std::optional<QuasiconvexSpec> d = std::nullopt, double radius = 3.0,
                                 std::string name = "problem") {
        require_dim(Y.ambient_dim(), A.dim(), "problem subspace");
        require_dim(g.dim(), A.dim(), "problem function");
        if (!(grid.step > 0) || !(grid.hi > grid.lo)) throw SpecError("problem: malformed level grid");
        ExtensionProblem p;
        p.n = A.dim();
        p.Y = Y;
        p.A = A;
        p.g = g.with_domain(A);
        p.f = QuasiconvexSpec::restriction(p.g, Y);
        p.d = d ? d->with_domain(A) : complement_gauge(Y).with_domain(A);
        p.grid = grid;
        p.radius = radius;
        p.name = std::move(name);
        return p;
    }

    ConvexSetExpr level(double alpha, const Config& cfg = default_config()) const {
        return sublevel(f, alpha, true, cfg);
    }
    ConvexSetExpr trace_set() const { return intersect(A, ConvexSetExpr::subspace(Y)); }
};

// Same problem in coordinates moved by -v (v must lie in Y).
inline ExtensionProblem translated(const ExtensionProblem& p, const Point& v) {
    if (!p.Y.contains(v, 1e-9)) throw QextError("translated: shift must lie in the subspace");
    const MatrixXd I = MatrixXd::Identity(p.n, p.n);
    const ConvexSetExpr A2 = translate(-v, p.A);
    return ExtensionProblem::make(p.Y, A2, precompose(p.g, I, v, A2), p.grid, precompose(p.d, I, v, A2), p.radius,
                                  p.name + "-shifted");
}

namespace detail {

inline std::vector<Point> sample_box_members(const ConvexSetExpr& S, const Point& c, double r, int count, Sampler& smp,
                                             const Config& cfg) {
    const VectorXd lo = c.array() - r, hi = c.array() + r;
    return sample_in_set(S, lo, hi, count, smp, cfg);
}

inline std::vector<Point> sample_trace(const ExtensionProblem& p, const Point& c, int count, Sampler& smp,
                                       const Config& cfg) {
    std::vector<Point> out;
    long tries = 0;
    const ConvexSetExpr T = p.trace_set();
    while (static_cast<int>(out.size()) < count) {
        Point y = p.Y.project(c) + smp.on_subspace(p.Y, p.radius);
        ++tries;
        if (margin(T, y, cfg) > cfg.member_tol) out.push_back(y);
        if (tries >= 2000 && static_cast<double>(out.size()) < 1e-3 * static_cast<double>(tries))
            throw SamplingError("sampling starvation on A ∩ Y; use a smaller radius");
    }
    return out;
}

inline std::optional<InteriorPoint> try_interior(const ConvexSetExpr& S, const Subspace& carrier,
                                                 const std::optional<std::pair<Point, double>>& box, const Config& cfg) {
    try {
        return find_interior_point_ex(S, carrier, box, cfg);
    } catch (const EmptySetError&) {
        return std::nullopt;
    }
}

// Interior point, preferring the search box and falling back to an unrestricted search.
inline Point interior_near(const ConvexSetExpr& S, const Subspace& carrier, const Point& c, double r,
                           const Config& cfg, const char* what) {
    if (auto ip = try_interior(S, carrier, std::make_pair(c, r), cfg)) return ip->point;
    if (auto ip = try_interior(S, carrier, std::nullopt, cfg)) return ip->point;
    throw PremiseError(std::string(what) + ": set has no relative interior point");
}

// x -> c + lam (x - c)
inline ConvexSetExpr about(const Point& c, double lam, const ConvexSetExpr& S) {
    return translate(c, scale(lam, translate(-c, S)));
}

}  // namespace detail

// Certifies the standing hypotheses and returns a point of A ∩ Y used to centre search boxes.
inline Point validate_problem(const ExtensionProblem& p, std::uint64_t seed = 1, const Config& cfg = default_config()) {
    if (!p.A.is_full_literal() && !is_flat(p.A)) throw PremiseError("problem: A must be Full or an open polyhedron");
    const ConvexSetExpr T = p.trace_set();
    std::optional<InteriorPoint> ip = detail::try_interior(T, p.Y, std::make_pair(Point(Point::Zero(p.n)), cfg.probe_box), cfg);
    if (!ip) ip = detail::try_interior(T, p.Y, std::nullopt, cfg);
    if (!ip) throw PremiseError("problem: A does not meet Y");
    const Point c = ip->point;
    Sampler smp(seed ^ 0xd15ea5eULL);
    for (const auto& y : detail::sample_trace(p, c, 100, smp, cfg)) {
        const double v = evaluate(p.d, y, cfg);
        if (std::abs(v) > 1e-9) throw PremiseError("problem: gauge does not vanish on A ∩ Y");
    }
    for (const auto& x : detail::sample_box_members(p.A, c, p.radius, 100, smp, cfg)) {
        const double v = evaluate(p.d, x, cfg);
        if (v < -1e-12) throw PremiseError("problem: gauge takes a negative value");
        if (p.Y.distance(x) > 1e-6 && !(v > 0)) throw PremiseError("problem: gauge vanishes off Y");
    }
    return c;
}

// ---------------------------------------------------------------------------
// Cylinder sets: H = P^{-1}(C) ∩ A, so that H ∩ Y = C.

inline ConvexSetExpr cylinder_set(const ConvexSetExpr& C, const ExtensionProblem& p) {
    require_dim(C.dim(), p.n, "cylinder_set");
    const auto F = flatten(C);
    if (!F) throw UnsupportedLeaf("cylinder_set: the set must be polyhedral");
    if (F->empty) return ConvexSetExpr::empty(p.n);
    if (F->A.rows() == 0) return p.A;
    const MatrixXd rows = F->A * p.Y.P();
    return intersect(ConvexSetExpr::polyhedron(rows, F->b), p.A);
}

// ---------------------------------------------------------------------------
// Family of an existing extension: D_alpha = [F < alpha].

inline OmegaFamily family_from_extension(const QuasiconvexSpec& F, const LevelGrid& grid,
                                         const std::optional<OmegaValidationOptions>& check = std::nullopt,
                                         const Config& cfg = default_config()) {
    OmegaFamily fam = family_from_function(F, grid, cfg);
    fam.named("sublevels of extension " + F.describe());
    if (check) {
        ValidationReport rep = validate_omega(fam, *check, cfg);
        if (!rep.passed())
            throw ConstructionError("family_from_extension: family fails " + rep.failed_names().front() + "\n" +
                                    rep.to_json().dump(2));
    }
    return fam;
}

// ---------------------------------------------------------------------------
// Scaled-exhaustion family over integer blocks: B_alpha = phi_n(alpha) * (n/(n+1)) C_n.

struct SequenceFamily {
    OmegaFamily family;
    ScalingSchedule schedule;
    std::vector<ConvexSetExpr> shrunk;  // (n/(n+1)) C_n, index n-1
};

inline SequenceFamily qe_family_from_sequence(const std::vector<ConvexSetExpr>& C, const ConvexSetExpr& ambient,
                                              const Config& cfg = default_config()) {
    if (C.empty()) throw InsufficientLevels("qe_family_from_sequence: empty sequence");
    const int n = ambient.dim();
    if (!(margin(C.front(), Point::Zero(n), cfg) > cfg.member_tol))
        throw PremiseError("qe_family_from_sequence: the origin must lie in the first set");
    SequenceFamily out;
    for (size_t i = 0; i < C.size(); ++i) {
        const double k = static_cast<double>(i + 1);
        out.shrunk.push_back(scale(k / (k + 1.0), C[i]));
    }
    out.schedule.set(1, 0.5);
    for (size_t i = 1; i < C.size(); ++i) {
        try {
            out.schedule.set(static_cast<long>(i + 1), find_scale_factor(out.shrunk[i - 1], out.shrunk[i], cfg));
        } catch (const ScaleFailure& e) {
            throw PremiseError("qe_family_from_sequence: set " + std::to_string(i) + " does not fit strictly inside set " +
                               std::to_string(i + 1) + " (" + e.what() + ")");
        }
    }
    out.family = OmegaFamily(n, ambient, 1.0);
    for (size_t i = 0; i < C.size(); ++i) {
        const long k = static_cast<long>(i + 1);
        out.family.add_block(static_cast<double>(k), static_cast<double>(k + 1),
                             LevelGenerator::scaled(out.shrunk[i], out.schedule.lambda(k), "B" + std::to_string(k)));
    }
    out.family.below(BelowPolicy::Empty).above(AbovePolicy::ClampToAmbient).named("scaled exhaustion");
    return out;
}

// ---------------------------------------------------------------------------
// Gauge-like function from a decreasing sequence U_k with intersection A ∩ Y:
// V_k = ((k+1)/k) U_k, W_n = V_|n| (n < 0) or (n+2) V_1 (n >= 0), W interpolated by the
// schedule, D_alpha = W_{h(alpha)} ∩ A, delta = sup{alpha : x not in D_alpha}.
// Blocks run over n in [-U.size(), top_block]; below the lowest block the family is empty,
// so delta >= h^{-1}(-U.size()) everywhere.

struct DeltaConstruction {
    QuasiconvexSpec delta;
    OmegaFamily family;
    ScalingSchedule schedule;
    std::vector<ConvexSetExpr> W;  // W_n for n = -K .. top_block, index n + K
    long lowest = 0;
    long highest = 0;
};

inline DeltaConstruction build_delta_from_nested(const std::vector<ConvexSetExpr>& U, const ConvexSetExpr& A,
                                                 const MonotoneMap& h = MonotoneMap::log(), long top_block = 3,
                                                 double grid_step = 0.05, const Config& cfg = default_config()) {
    if (U.empty()) throw InsufficientLevels("build_delta_from_nested: empty sequence");
    const int n = A.dim();
    if (!(margin(A, Point::Zero(n), cfg) > cfg.member_tol))
        throw PremiseError("build_delta_from_nested: the origin must lie in A");
    const long K = static_cast<long>(U.size());
    std::vector<ConvexSetExpr> V;
    for (long k = 1; k <= K; ++k) {
        require_dim(U[k - 1].dim(), n, "nested set");
        if (!(margin(U[k - 1], Point::Zero(n), cfg) > cfg.member_tol))
            throw PremiseError("build_delta_from_nested: the origin is not inside U_" + std::to_string(k));
        V.push_back(scale(static_cast<double>(k + 1) / k, U[k - 1]));
    }
    DeltaConstruction out;
    out.lowest = -K;
    out.highest = top_block;
    for (long m = -K; m <= top_block; ++m) out.W.push_back(m < 0 ? V[static_cast<size_t>(-m - 1)] : scale(m + 2.0, V[0]));
    out.schedule.set(-K, 0.5);
    for (long m = -K + 1; m <= top_block; ++m) {
        try {
            out.schedule.set(m, find_scale_factor(out.W[m - 1 + K], out.W[m + K], cfg));
        } catch (const ScaleFailure& e) {
            const long k = m < 0 ? -m : 1;
            throw PremiseError("build_delta_from_nested: premise fails near U_" + std::to_string(k) + " (" + e.what() + ")");
        }
    }
    out.family = OmegaFamily(n, A, grid_step);
    for (long m = -K; m <= top_block; ++m) {
        const double lo = h.inverse(static_cast<double>(m)), hi = h.inverse(static_cast<double>(m + 1));
        const ConvexSetExpr Wm = out.W[m + K];
        const double lam = out.schedule.lambda(m);
        out.family.add_block(lo, hi, LevelGenerator::explicit_fn(
                                         [Wm, lam, m, h, A](double alpha) {
                                             const double t = h.forward(alpha);
                                             const double phi = std::max(1e-300, t - m + (m + 1 - t) * lam);
                                             return intersect(scale(phi, Wm), A);
                                         },
                                         "W" + std::to_string(m)));
    }
    out.family.below(BelowPolicy::Empty).above(AbovePolicy::ClampToAmbient).named("nested-set gauge");
    out.delta = QuasiconvexSpec::family_defined(out.family, "delta");
    return out;
}

// ---------------------------------------------------------------------------
// Compatible exhaustion: nested bounded sets K_b with cl(K_b ∩ Y) inside the level they serve.

struct Exhaustion {
    Point base;
    std::vector<ConvexSetExpr> K;        // ambient coordinates
    std::vector<ConvexSetExpr> K_local;  // relative to the base point
    std::vector<int> start;              // first level index served by K[b]
    std::vector<int> reindex;            // smallest level index containing cl(K[b] ∩ Y)
    std::vector<std::string> label;
    std::vector<double> lambda;          // lambda[0] = 1/2; K[b-1] ⊂ lambda[b] K[b]
};

namespace detail {

// Candidate n >= 1 (about the base):  n/(n+1) * ((1 - 1/m)(A' ∩ ball_m) ∩ [d' < n]), m = n + 1.
inline ConvexSetExpr exhaustion_candidate(const ExtensionProblem& p, const Point& base, int k, const Config& cfg) {
    const double m = k + 1.0;
    const ConvexSetExpr Aloc = translate(-base, p.A);
    const ConvexSetExpr Am = scale(1.0 - 1.0 / m, intersect(Aloc, ConvexSetExpr::sup_ball(p.n, m)));
    const ConvexSetExpr Dn = translate(-base, sublevel(p.d, static_cast<double>(k), true, cfg));
    return scale(k / (k + 1.0), intersect(Am, Dn));
}

}  // namespace detail

inline Exhaustion build_compatible_exhaustion(const ExtensionProblem& p, const std::vector<ConvexSetExpr>& C,
                                              const Point& base, const Config& cfg = default_config()) {
    const int L = static_cast<int>(C.size());
    if (L < 2) throw InsufficientLevels("build_compatible_exhaustion: need at least two levels to reindex into");
    const ConvexSetExpr Ysub = ConvexSetExpr::subspace(p.Y);
    auto fits = [&](const ConvexSetExpr& local, int i) {
        return contains_closure(intersect(translate(base, local), Ysub), C[static_cast<size_t>(i)], cfg.contain_tol, cfg);
    };
    // smallest level index whose set contains cl(cand ∩ Y), or L if none
    auto reindex = [&](const ConvexSetExpr& local, int from) {
        if (!fits(local, L - 1)) return L;
        int lo = from - 1, hi = L - 1;
        while (hi - lo > 1) {
            const int mid = (lo + hi) / 2;
            (fits(local, mid) ? hi : lo) = mid;
        }
        return hi;
    };

    struct Cand {
        ConvexSetExpr local;
        int j;
        std::string label;
    };
    std::vector<Cand> ladder;
    const ConvexSetExpr G1 = detail::exhaustion_candidate(p, base, 1, cfg);
    int k0 = -1;
    for (int k = 1; k <= cfg.max_shrink_halvings; ++k) {
        if (fits(scale(std::ldexp(1.0, -k), G1), 0)) {
            k0 = k;
            break;
        }
    }
    if (k0 < 0)
        throw InsufficientLevels("build_compatible_exhaustion: no shrunken candidate fits the lowest level; "
                                 "the base point is not interior to it or the level list is too coarse");
    int jprev = 0;
    for (int k = k0; k >= 1; --k) {
        const ConvexSetExpr c = scale(std::ldexp(1.0, -k), G1);
        const int j = k == k0 ? 0 : reindex(c, jprev);
        if (j >= L) break;
        ladder.push_back({c, j, "G1/2^" + std::to_string(k)});
        jprev = j;
    }
    for (int k = 1; k <= cfg.max_candidates; ++k) {
        const ConvexSetExpr c = k == 1 ? G1 : detail::exhaustion_candidate(p, base, k, cfg);
        const int j = reindex(c, jprev);
        if (j >= L) break;
        ladder.push_back({c, j, "G" + std::to_string(k)});
        jprev = j;
    }

    Exhaustion ex;
    ex.base = base;
    size_t ci = 0;
    for (int i = 0; i < L; ++i) {
        while (ci + 1 < ladder.size() && ladder[ci + 1].j <= i) ++ci;
        if (ex.start.empty() || ex.label.back() != ladder[ci].label) {
            ex.K_local.push_back(ladder[ci].local);
            ex.K.push_back(translate(base, ladder[ci].local));
            ex.start.push_back(i);
            ex.reindex.push_back(ladder[ci].j);
            ex.label.push_back(ladder[ci].label);
        }
    }
    ex.lambda.push_back(0.5);
    for (size_t b = 1; b < ex.K_local.size(); ++b) {
        try {
            ex.lambda.push_back(find_scale_factor(ex.K_local[b - 1], ex.K_local[b], cfg));
        } catch (const ScaleFailure& e) {
            throw PremiseError("build_compatible_exhaustion: " + ex.label[b - 1] + " does not fit strictly in " +
                               ex.label[b] + " (" + e.what() + ")");
        }
    }
    return ex;
}

// ---------------------------------------------------------------------------
// Builder trace and result

struct LevelRecord {
    double alpha = 0.0;
    ConvexSetExpr U, C, D;
};

struct BlockRecord {
    std::string kind;  // "exhaustion" or "descent"
    long index = 0;
    double lo = 0.0, hi = 0.0;
    ConvexSetExpr set;        // K_b (exhaustion) or E_n (descent)
    std::optional<Point> y;   // descent centre y_n
    double lambda = 0.5;      // exhaustion scale at the block start
    int reindex = 0;          // exhaustion: level index serving the block
    double rho = 0.0;         // descent: certified cross-polytope radius of E_n at y_n
    std::string label;
};

// Consecutive recorded levels (lower, upper) with the neighbourhood radius W of the lower U.
struct TracePair {
    size_t lower = 0, upper = 0;
    double W = 0.0;
};

struct BuilderTrace {
    std::string branch;
    Point base;
    std::vector<double> levels;
    std::vector<LevelRecord> records;
    std::vector<BlockRecord> blocks;
    std::vector<TracePair> pairs;

    Json summary() const {
        Json j;
        j["branch"] = branch;
        j["base_point"] = base.size() ? point_json(base) : Json::array();
        j["level_count"] = levels.size();
        Json bl = Json::array();
        for (const auto& b : blocks) {
            Json e{{"kind", b.kind}, {"index", b.index}, {"lo", b.lo}, {"hi", b.hi}};
            if (b.kind == "exhaustion") {
                e["lambda"] = b.lambda;
                e["reindex"] = b.reindex;
                e["candidate"] = b.label;
            } else {
                e["y"] = point_json(*b.y);
                e["rho"] = b.rho;
            }
            bl.push_back(e);
        }
        j["blocks"] = bl;
        j["trace_pairs"] = pairs.size();
        return j;
    }
};

struct ExtensionResult {
    QuasiconvexSpec F;
    std::optional<OmegaFamily> family;
    BuilderTrace trace;
    ValidationReport report;
    std::string method;  // engine, projection, preserve
    std::string branch;
    double valid_lo = -kInf;  // F agrees with f on Y where valid_lo < f < valid_hi
    double valid_hi = kInf;
    std::vector<std::string> notes;
};

struct EngineOptions {
    std::optional<Point> base_point;     // overrides the automatic choice
    std::optional<Point> search_center;  // centre of interior-point search boxes
    bool validate = true;
    int pairs = 20;
    int samples = 200;
    int sandwich_samples = 60;
    std::uint64_t seed = 1;
};

// ∪_{γ<α} C_γ ⊆ D_α ∩ Y ⊆ C_α on trace samples, away from a band around α.
inline CheckEntry sandwich_check(const OmegaFamily& fam, const ExtensionProblem& p, const std::vector<double>& levels,
                                 const std::vector<Point>& ys, double band, const Config& cfg = default_config()) {
    CheckEntry c{"sandwich"};
    for (const auto& y : ys) {
        const double fy = evaluate(p.f, y, cfg);
        for (double a : levels) {
            if (std::abs(fy - a) <= band) continue;
            ++c.tested;
            const bool in = margin(fam.at(a), y, cfg) > cfg.member_tol;
            if (in != (fy < a)) {
                ++c.failed;
                if (c.witness.is_null())
                    c.witness = Json{{"alpha", a}, {"point", point_json(y)}, {"f", fy}, {"in_level", in}};
            }
        }
    }
    c.status = c.failed ? CheckStatus::Fail : CheckStatus::Pass;
    return c;
}

namespace detail {

struct BranchInfo {
    bool half_line = false;
    double inf = -kInf;
    std::optional<Point> argmin;
    std::string how;
};

inline BranchInfo classify_levels(const ExtensionProblem& p, const Point& c, const Config& cfg) {
    BranchInfo bi;
    try {
        const RangeInfo r = range_over(p.f, ConvexSetExpr::full(p.n), cfg);
        bi.inf = r.inf;
        bi.half_line = std::isfinite(r.inf) && r.inf_attained;
        if (r.argmin) bi.argmin = *r.argmin;
        bi.how = "range";
        return bi;
    } catch (const ScopeError&) {
    }
    // grid scan: nonempty at the bottom of the grid means the levels continue below it
    auto nonempty = [&](double a) {
        return try_interior(p.level(a, cfg), p.Y, std::nullopt, cfg).has_value();
    };
    bi.how = "grid scan";
    if (nonempty(p.grid.lo)) return bi;
    double lo = p.grid.lo, hi = p.grid.hi;
    if (!nonempty(hi)) throw InsufficientLevels("extend: every level of the grid is empty");
    for (int it = 0; it < 60 && hi - lo > 1e-10; ++it) {
        const double mid = 0.5 * (lo + hi);
        (nonempty(mid) ? hi : lo) = mid;
    }
    bi.inf = lo;
    bi.half_line = true;
    return bi;
}

// Recorded level pairs for exhaustion blocks: W from the exact gap between consecutive U's.
inline double exact_half_gap(const ConvexSetExpr& U1, const ConvexSetExpr& U2, const Config& cfg) {
    const ContainmentResult r = contains_closure_report(U1, U2, 0.0, std::nullopt, cfg);
    if (!r.holds || !std::isfinite(r.worst_gap)) return 0.0;
    return 0.5 * r.worst_gap;
}

}  // namespace detail

// The extension F = sup{alpha : x not in D_alpha} with D_alpha = conv(U_alpha ∪ C_alpha).
inline ExtensionResult extend_quasiconvex(const ExtensionProblem& p, const EngineOptions& opt = {},
                                          const Config& cfg = default_config()) {
    const Point center = opt.search_center ? *opt.search_center : validate_problem(p, opt.seed, cfg);
    const double R = p.radius;
    const double s = p.grid.step;
    const detail::BranchInfo bi = detail::classify_levels(p, center, cfg);
    const QuasiconvexSpec f = p.f;
    const Subspace& Y = p.Y;
    const int n = p.n;

    ExtensionResult res;
    res.method = "engine";
    BuilderTrace& tr = res.trace;

    // exhaustion part over levels [first, top)
    auto exhaustion_levels = [&](double first, double top, bool geometric) {
        std::vector<double> lv{first};
        if (geometric) {
            for (double g = 2.0 * cfg.bottom_offset; g < s; g *= 2.0) lv.push_back(bi.inf + g);
            for (int j = 1; bi.inf + j * s < top - 1e-12; ++j) lv.push_back(bi.inf + j * s);
        } else {
            for (int j = 1; first + j * s < top - 1e-12; ++j) lv.push_back(first + j * s);
        }
        return lv;
    };

    double first = 0.0, top = 0.0, bottom = 0.0;
    int down = 0;
    std::vector<double> klevels;
    if (bi.half_line) {
        tr.branch = "half_line";
        first = bi.inf + cfg.bottom_offset;
        top = std::max(p.grid.hi, bi.inf + 2.0 * s);
        klevels = exhaustion_levels(first, top, true);
        bottom = first;
        res.valid_lo = -kInf;
    } else {
        tr.branch = "real_line";
        double lo = p.grid.lo;
        if (std::isfinite(bi.inf)) lo = std::max(lo, bi.inf + 0.5 * s);
        const int steps = static_cast<int>(std::floor((p.grid.hi - lo) / s + 1e-9));
        down = std::min(cfg.max_down_blocks, std::max(1, steps / 2));
        first = lo + down * s;
        top = std::max(p.grid.hi, first + 2.0 * s);
        klevels = exhaustion_levels(first, top, false);
        bottom = first - down * s;
        res.valid_lo = bottom;
    }
    res.valid_hi = top;
    res.branch = tr.branch;

    const Point base = opt.base_point ? *opt.base_point
                                      : detail::interior_near(p.level(first, cfg), Y,
                                                              bi.argmin && bi.half_line ? *bi.argmin : center, R, cfg,
                                                              "lowest exhaustion level");
    if (!Y.contains(base, 1e-9)) throw PremiseError("extend: base point must lie in Y");
    tr.base = base;

    std::vector<ConvexSetExpr> Cs;
    for (double a : klevels) Cs.push_back(p.level(a, cfg));
    if (Cs.size() < 2) throw InsufficientLevels("extend: the level grid leaves fewer than two exhaustion levels");
    const Exhaustion ex = build_compatible_exhaustion(p, Cs, base, cfg);

    struct Block {
        double lo, hi;
        std::function<ConvexSetExpr(double)> U;
        LevelGenerator gen;
    };
    auto hull_gen = [f, cfg](std::function<ConvexSetExpr(double)> U, std::string label) {
        return LevelGenerator::explicit_fn([U, f, cfg](double a) { return conv_union(U(a), sublevel(f, a, true, cfg)); },
                                           std::move(label));
    };
    std::vector<Block> kblocks;
    for (size_t b = 0; b < ex.K.size(); ++b) {
        const double lo = klevels[static_cast<size_t>(ex.start[b])];
        const double hi = b + 1 < ex.K.size() ? klevels[static_cast<size_t>(ex.start[b + 1])] : top;
        const ConvexSetExpr Kl = ex.K_local[b];
        const double lam = ex.lambda[b];
        std::function<ConvexSetExpr(double)> U = [=](double a) {
            return translate(base, scale(std::max(1e-300, ScalingSchedule::interpolate(lo, hi, lam, a)), Kl));
        };
        kblocks.push_back({lo, hi, U, hull_gen(U, ex.label[b])});
        BlockRecord br;
        br.kind = "exhaustion";
        br.index = static_cast<long>(b);
        br.lo = lo;
        br.hi = hi;
        br.set = ex.K[b];
        br.lambda = lam;
        br.reindex = ex.reindex[b];
        br.label = ex.label[b];
        tr.blocks.push_back(br);
    }

    // descent blocks n = 0, -1, ..., covering [first - down*s, first)
    std::vector<Block> dblocks;
    std::vector<BlockRecord> drecs;
    if (!bi.half_line) {
        ConvexSetExpr upper = kblocks[0].gen.fn(first);
        for (int k = 0; k < down; ++k) {
            const long nidx = -k;
            const double lo = first - (k + 1) * s;
            const double r = 1.0 / (k + 2.0);
            const ConvexSetExpr H = cylinder_set(p.level(lo, cfg), p);
            const ConvexSetExpr E = intersect({H, upper, sublevel(p.d, r, true, cfg)});
            const Point y = detail::interior_near(E, Y, center, R, cfg, "descent set");
            double rho = r;
            auto cross_ok = [&](double q) {
                for (int i = 0; i < n; ++i)
                    for (double sg : {-1.0, 1.0})
                        if (!(margin(E, Point(y + sg * q * VectorXd::Unit(n, i)), cfg) > cfg.member_tol)) return false;
                return true;
            };
            int halvings = 0;
            while (!cross_ok(rho)) {
                rho *= 0.5;
                if (++halvings > 60) throw PremiseError("extend: descent set has no interior around its centre");
            }
            std::function<ConvexSetExpr(double)> U = [=](double a) {
                return detail::about(y, std::max(1e-300, 0.5 * (1.0 + (a - lo) / s)), E);
            };
            dblocks.push_back({lo, lo + s, U, hull_gen(U, "E" + std::to_string(nidx))});
            BlockRecord br;
            br.kind = "descent";
            br.index = nidx;
            br.lo = lo;
            br.hi = lo + s;
            br.set = E;
            br.y = y;
            br.rho = rho;
            br.label = "E" + std::to_string(nidx);
            drecs.push_back(br);
            upper = dblocks.back().gen.fn(lo);
        }
    }

    OmegaFamily fam(n, p.A, s);
    for (auto it = dblocks.rbegin(); it != dblocks.rend(); ++it) fam.add_block(it->lo, it->hi, it->gen);
    for (const auto& b : kblocks) fam.add_block(b.lo, b.hi, b.gen);
    fam.below(BelowPolicy::Empty).above(AbovePolicy::ClampToAmbient).named(p.name + " extension levels");
    std::vector<BlockRecord> all(drecs.rbegin(), drecs.rend());
    all.insert(all.end(), tr.blocks.begin(), tr.blocks.end());
    tr.blocks = all;
    tr.levels = klevels;
    std::vector<Block> ordered(dblocks.rbegin(), dblocks.rend());
    ordered.insert(ordered.end(), kblocks.begin(), kblocks.end());

    // records at block starts and midpoints, consecutive pairs with neighbourhood radii
    for (const auto& b : ordered) {
        for (double a : {b.lo, 0.5 * (b.lo + b.hi)}) {
            LevelRecord rec;
            rec.alpha = a;
            rec.U = b.U(a);
            rec.C = p.level(a, cfg);
            rec.D = fam.at(a);
            tr.records.push_back(rec);
        }
    }
    for (size_t i = 0; i + 1 < tr.records.size(); ++i) {
        const BlockRecord& b = tr.blocks[i / 2];
        TracePair tp{i, i + 1, 0.0};
        if (b.kind == "exhaustion") {
            tp.W = detail::exact_half_gap(tr.records[i].U, tr.records[i + 1].U, cfg);
        } else {
            const double c1 = 0.5 * (1.0 + (tr.records[i].alpha - b.lo) / s);
            const double c2 = i % 2 == 0 ? 0.5 * (1.0 + (tr.records[i + 1].alpha - b.lo) / s) : 1.0;
            tp.W = 0.5 * (c2 - c1) * b.rho / std::sqrt(static_cast<double>(n));
        }
        tr.pairs.push_back(tp);
    }

    res.F = QuasiconvexSpec::family_defined(fam, "extension of " + f.describe());
    res.family = fam;
    res.report.subject = "extend:" + p.name;
    res.report.seed = opt.seed;
    res.report.tolerances = tolerance_json(cfg);
    if (opt.validate) {
        OmegaValidationOptions vo;
        vo.pairs = opt.pairs;
        vo.samples = opt.samples;
        vo.seed = opt.seed;
        vo.box_lo = center.array() - R;
        vo.box_hi = center.array() + R;
        res.report.merge(validate_omega(fam, vo, cfg), "omega.");
        res.report.budgets["omega_pairs"] = opt.pairs;
        res.report.budgets["omega_samples"] = opt.samples;
        Sampler smp(opt.seed + 17);
        std::vector<double> probe_levels;
        for (const auto& rec : tr.records) probe_levels.push_back(rec.alpha);
        res.report.add(sandwich_check(fam, p, probe_levels, detail::sample_trace(p, center, opt.sandwich_samples, smp, cfg),
                                      10 * cfg.tol_bisect, cfg));
        res.report.budgets["sandwich_samples"] = opt.sandwich_samples;
    }
    res.notes.push_back("levels classified by " + bi.how);
    if (bottom > -kInf && !bi.half_line) res.notes.push_back("levels below " + std::to_string(bottom) + " are empty");
    res.notes.push_back("levels at or above " + std::to_string(top) + " are all of A");
    return res;
}

// ---------------------------------------------------------------------------
// F = f ∘ P, valid when A is invariant along the complement of Y.

inline QuasiconvexSpec extend_by_projection(const ExtensionProblem& p) {
    if (!p.A.is_full_literal()) {
        const auto F = flatten(p.A);
        if (!F) throw ScopeError("extend_by_projection: A must be Full or polyhedral; use the engine");
        const MatrixXd Q = p.Y.Q();
        if (F->E.rows() || (F->A.rows() && (F->A * Q).cwiseAbs().maxCoeff() > 1e-9))
            throw ScopeError("extend_by_projection: A is not a cylinder over A ∩ Y; use the engine");
    }
    return precompose(p.g, p.Y.P(), VectorXd::Zero(p.n), p.A, true);
}

// ---------------------------------------------------------------------------
// Range- and minimizer-preserving extension:  max(a + eps * atan(delta), F1).

struct PreserveOptions {
    std::optional<double> epsilon;
    EngineOptions engine;
    int premise_samples = 100;
};

inline ExtensionResult extend_preserving(const ExtensionProblem& p, const QuasiconvexSpec& delta,
                                         const PreserveOptions& opt = {}, const Config& cfg = default_config()) {
    require_dim(delta.dim(), p.n, "extend_preserving delta");
    const Point center = opt.engine.search_center ? *opt.engine.search_center : validate_problem(p, opt.engine.seed, cfg);
    {
        Sampler smp(opt.engine.seed ^ 0xde17aULL);
        for (const auto& y : detail::sample_trace(p, center, opt.premise_samples, smp, cfg)) {
            const double v = evaluate(delta, y, cfg);
            if (std::abs(v) > cfg.tol_bisect) throw PremiseError("extend_preserving: delta does not vanish on A ∩ Y");
        }
        for (const auto& x : detail::sample_box_members(p.A, center, p.radius, opt.premise_samples, smp, cfg)) {
            const double v = evaluate(delta, x, cfg);
            if (v < -cfg.tol_bisect) throw PremiseError("extend_preserving: delta is negative somewhere");
            if (p.Y.distance(x) > 1e-3 && !(v > 0)) throw PremiseError("extend_preserving: delta vanishes off Y");
        }
    }
    const RangeInfo r = range_over(p.f, ConvexSetExpr::full(p.n), cfg);
    ExtensionResult res;
    res.method = "preserve";
    if (std::isfinite(r.inf) && r.inf == r.sup) {
        res.branch = "constant";
        res.F = QuasiconvexSpec::transformed(delta, MonotoneMap::affine(1.0, r.inf), "constant plus delta");
        res.notes.push_back("constant function: F = c + delta; the range of F is not that of f");
        res.report.subject = "preserve:" + p.name;
        res.report.seed = opt.engine.seed;
        res.report.tolerances = tolerance_json(cfg);
        return res;
    }
    const double a = r.inf, b = r.sup;
    double eps = 1.0;
    if (opt.epsilon) {
        eps = *opt.epsilon;
        if (!(eps > 0)) throw SpecError("extend_preserving: epsilon must be positive");
        if (std::isfinite(a) && std::isfinite(b) && !(a + eps * std::numbers::pi / 2 < b))
            throw SpecError("extend_preserving: epsilon too large for the range of f");
    } else if (std::isfinite(b) && std::isfinite(a)) {
        eps = 0.5 * (b - a) / (std::numbers::pi / 2);
    }

    QuasiconvexSpec F1;
    if (!std::isfinite(b)) {
        ExtensionResult G = extend_quasiconvex(p, opt.engine, cfg);
        F1 = G.F;
        res = G;
        res.branch = "unbounded_above";
    } else if (!r.sup_attained) {
        // conjugate through t -> -ln(b - t), a homeomorphism of (-inf, b) onto the line
        const MonotoneMap phi = MonotoneMap::neg_log_gap(b);
        const double span = std::isfinite(a) ? b - a : 1.0;
        const double hi = std::min(p.grid.hi, b - 1e-3 * span);
        LevelGrid g2{phi.forward(std::min(p.grid.lo, hi - p.grid.step)), phi.forward(hi), p.grid.step};
        if (!(g2.hi > g2.lo + g2.step)) g2.hi = g2.lo + 2 * g2.step;
        ExtensionProblem q = ExtensionProblem::make(p.Y, p.A, QuasiconvexSpec::transformed(p.g, phi), g2, p.d, p.radius,
                                                    p.name + "-conjugated");
        ExtensionResult G = extend_quasiconvex(q, opt.engine, cfg);
        F1 = QuasiconvexSpec::transformed(G.F, MonotoneMap::exp_gap(b));
        res = G;
        res.valid_lo = std::isfinite(G.valid_lo) ? MonotoneMap::exp_gap(b).forward(G.valid_lo) : -kInf;
        res.valid_hi = MonotoneMap::exp_gap(b).forward(G.valid_hi);
        res.branch = "log_gap";
    } else {
        ExtensionResult G = extend_quasiconvex(p, opt.engine, cfg);
        F1 = QuasiconvexSpec::transformed(G.F, MonotoneMap::cap(b));
        res = G;
        res.branch = "truncated";
        if (r.sup_attained && std::abs(r.sup - b) < 1e-9 && !std::isfinite(r.inf))
            res.notes.push_back("warning: attainment of the supremum decided within tolerance");
    }
    res.method = "preserve";
    res.report.subject = "preserve:" + p.name;
    if (!std::isfinite(a)) {
        res.F = F1;
        res.notes.push_back("f is unbounded below: F = F1");
        return res;
    }
    const QuasiconvexSpec lift = QuasiconvexSpec::transformed(delta, MonotoneMap::arctan_scaled(eps, a), "arctan lift");
    res.F = QuasiconvexSpec::pointwise_max({lift, F1}, "range preserving");
    res.notes.push_back("epsilon = " + std::to_string(eps));
    return res;
}

}  // namespace qext
