#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "monotone_map.hpp"
#include "report.hpp"
#include "sampling.hpp"
#include "set_algebra.hpp"

namespace qext {

// How a block produces its sets.
struct LevelGenerator {
    enum Kind { ScaledBase, Constant, Explicit } kind = Constant;
    ConvexSetExpr set;    // ScaledBase: base set; Constant: the set
    double lambda = 0.5;  // ScaledBase: scale at the block start (reaches 1 at the block end)
    std::function<ConvexSetExpr(double)> fn;  // Explicit
    std::string label;

    static LevelGenerator scaled(ConvexSetExpr base, double lambda, std::string label = "") {
        LevelGenerator g;
        g.kind = ScaledBase;
        g.set = std::move(base);
        g.lambda = lambda;
        g.label = std::move(label);
        return g;
    }
    static LevelGenerator constant(ConvexSetExpr s, std::string label = "") {
        LevelGenerator g;
        g.kind = Constant;
        g.set = std::move(s);
        g.label = std::move(label);
        return g;
    }
    static LevelGenerator explicit_fn(std::function<ConvexSetExpr(double)> fn, std::string label = "") {
        LevelGenerator g;
        g.kind = Explicit;
        g.fn = std::move(fn);
        g.label = std::move(label);
        return g;
    }
};

struct FamilyBlock {
    double lo = 0.0;
    double hi = 1.0;
    LevelGenerator gen;
};

enum class BelowPolicy { Empty, ExtendFirst };
enum class AbovePolicy { ClampToAmbient, Extrapolate };

// Level-indexed family alpha -> set, piecewise over contiguous blocks [lo, hi).
class OmegaFamily {
public:
    OmegaFamily() = default;
    OmegaFamily(int n, ConvexSetExpr ambient, double grid_step)
        : n_(n), ambient_(std::move(ambient)), grid_step_(grid_step) {
        require_dim(ambient_.dim(), n, "family ambient set");
    }

    OmegaFamily& add_block(double lo, double hi, LevelGenerator gen) {
        if (!(hi > lo)) throw QextError("family block must have positive width");
        if (!blocks_.empty() && std::abs(blocks_.back().hi - lo) > 1e-12 * std::max(1.0, std::abs(lo)))
            throw QextError("family blocks must be contiguous");
        if (!blocks_.empty()) lo = blocks_.back().hi;
        blocks_.push_back({lo, hi, std::move(gen)});
        return *this;
    }

    OmegaFamily& below(BelowPolicy p) {
        below_ = p;
        return *this;
    }
    OmegaFamily& above(AbovePolicy p) {
        above_ = p;
        return *this;
    }
    OmegaFamily& named(std::string s) {
        name_ = std::move(s);
        return *this;
    }

    int dim() const { return n_; }
    const ConvexSetExpr& ambient() const { return ambient_; }
    double grid_step() const { return grid_step_; }
    const std::vector<FamilyBlock>& blocks() const { return blocks_; }
    double lo() const { return blocks_.front().lo; }
    double hi() const { return blocks_.back().hi; }
    BelowPolicy below_policy() const { return below_; }
    AbovePolicy above_policy() const { return above_; }
    const std::string& name() const { return name_; }
    bool empty() const { return blocks_.empty(); }

    std::vector<double> breakpoints() const {
        std::vector<double> out;
        for (const auto& b : blocks_) out.push_back(b.lo);
        if (!blocks_.empty()) out.push_back(blocks_.back().hi);
        return out;
    }

    ConvexSetExpr at(double alpha) const {
        if (blocks_.empty()) throw QextError("family has no blocks");
        if (alpha < lo()) {
            if (below_ == BelowPolicy::Empty) return ConvexSetExpr::empty(n_);
            return generate(blocks_.front(), alpha);
        }
        if (alpha >= hi()) {
            if (above_ == AbovePolicy::ClampToAmbient) return ambient_;
            return generate(blocks_.back(), alpha);
        }
        auto it = std::upper_bound(blocks_.begin(), blocks_.end(), alpha,
                                   [](double a, const FamilyBlock& b) { return a < b.lo; });
        return generate(*(it - 1), alpha);
    }

    static ConvexSetExpr generate(const FamilyBlock& b, double alpha) {
        switch (b.gen.kind) {
            case LevelGenerator::ScaledBase:
                return scale(std::max(1e-300, ScalingSchedule::interpolate(b.lo, b.hi, b.gen.lambda, alpha)), b.gen.set);
            case LevelGenerator::Constant: return b.gen.set;
            case LevelGenerator::Explicit: return b.gen.fn(alpha);
        }
        return b.gen.set;
    }

private:
    int n_ = 0;
    ConvexSetExpr ambient_;
    double grid_step_ = 0.1;
    std::vector<FamilyBlock> blocks_;
    BelowPolicy below_ = BelowPolicy::Empty;
    AbovePolicy above_ = AbovePolicy::ClampToAmbient;
    std::string name_ = "family";
};

struct OmegaValidationOptions {
    int pairs = 20;
    int samples = 200;
    std::uint64_t seed = 1;
    double closure_tol = 1e-7;
    VectorXd box_lo;  // sampling box for E; required when E is unbounded
    VectorXd box_hi;
    std::optional<Subspace> carrier;  // when set, E is sampled on this subspace within `radius`
    double radius = 3.0;
};

namespace detail {

inline std::vector<std::pair<double, double>> level_pairs(const OmegaFamily& fam, int count, Sampler& s) {
    std::vector<std::pair<double, double>> out;
    const auto& bl = fam.blocks();
    const int nb = static_cast<int>(bl.size());
    const double step = fam.grid_step();
    // a third inside blocks, a third across neighbouring blocks (both spread evenly), rest random
    const int k1 = std::min(nb, std::max(1, count / 3));
    for (int i = 0; i < k1; ++i) {
        const auto& b = bl[static_cast<size_t>(k1 == 1 ? 0 : i * (nb - 1) / (k1 - 1))];
        const double w = b.hi - b.lo;
        out.emplace_back(b.lo + 0.2 * w, b.lo + 0.5 * w);
    }
    const int k2 = std::min(nb - 1, count / 3);
    for (int i = 0; i < k2; ++i) {
        const size_t j = static_cast<size_t>(k2 == 1 ? 0 : i * (nb - 2) / (k2 - 1));
        out.emplace_back(0.5 * (bl[j].lo + bl[j].hi), 0.5 * (bl[j + 1].lo + bl[j + 1].hi));
    }
    const double lo = fam.lo() - step, hi = fam.hi() + step;
    while (static_cast<int>(out.size()) < count) {
        double a = s.uniform(lo, hi), b = s.uniform(lo, hi);
        if (a > b) std::swap(a, b);
        if (b - a < step) b = a + step;
        out.emplace_back(a, b);
    }
    out.resize(static_cast<size_t>(std::max(count, 0)));
    return out;
}

}  // namespace detail

// Checks the four family axioms by sampling; failures carry replayable witnesses.
inline ValidationReport validate_omega(const OmegaFamily& fam, const OmegaValidationOptions& opt,
                                       const Config& cfg = default_config()) {
    ValidationReport rep;
    rep.subject = "omega:" + fam.name();
    rep.seed = opt.seed;
    rep.tolerances = tolerance_json(cfg);
    rep.tolerances["closure_gap"] = opt.closure_tol;
    rep.budgets["pairs"] = opt.pairs;
    rep.budgets["samples"] = opt.samples;
    Sampler smp(opt.seed);

    VectorXd lo = opt.box_lo, hi = opt.box_hi;
    if (lo.size() == 0 && !opt.carrier) {
        auto bb = bounding_box(fam.ambient(), cfg);
        lo = bb.first;
        hi = bb.second;
        for (long i = 0; i < lo.size(); ++i)
            if (!std::isfinite(lo(i)) || !std::isfinite(hi(i)))
                throw SamplingError("validate_omega: ambient set is unbounded; supply a sampling box");
    }
    const std::vector<Point> pts = opt.carrier
                                       ? sample_on_subspace(fam.ambient(), *opt.carrier, opt.radius, opt.samples, smp, cfg)
                                       : sample_in_set(fam.ambient(), lo, hi, opt.samples, smp, cfg);
    const auto pairs = detail::level_pairs(fam, opt.pairs, smp);
    const std::optional<ConvexSetExpr> rel =
        fam.ambient().is_full_literal() ? std::nullopt : std::optional<ConvexSetExpr>(fam.ambient());

    CheckEntry nest{"nesting"};
    CheckEntry clos{"closure_containment"};
    for (const auto& [a, b] : pairs) {
        const ConvexSetExpr Da = fam.at(a), Db = fam.at(b);
        for (const auto& x : pts) {
            ++nest.tested;
            if (margin(Da, x, cfg) > cfg.member_tol && !(margin(Db, x, cfg) > cfg.member_tol)) {
                ++nest.failed;
                if (nest.witness.is_null()) nest.witness = Json{{"alpha", a}, {"beta", b}, {"point", point_json(x)}};
            }
        }
        // levels closer than one grid step are below the family's resolution; the upper one is moved out
        const double bc = std::max(b, a + fam.grid_step());
        ++clos.tested;
        const ContainmentResult cr = contains_closure_report(Da, bc == b ? Db : fam.at(bc), opt.closure_tol, rel, cfg);
        if (!cr.holds) {
            ++clos.failed;
            if (clos.witness.is_null()) {
                clos.witness = Json{{"alpha", a}, {"beta", bc}, {"reason", cr.reason}, {"method", cr.method}};
                if (cr.witness) clos.witness["point"] = point_json(*cr.witness);
            }
        }
    }
    nest.status = nest.failed ? CheckStatus::Fail : CheckStatus::Pass;
    clos.status = clos.failed ? CheckStatus::Fail : CheckStatus::Pass;

    CheckEntry cover{"union_coverage"};
    const ConvexSetExpr top = fam.at(fam.hi());
    for (const auto& x : pts) {
        ++cover.tested;
        if (!(margin(top, x, cfg) > cfg.member_tol)) {
            ++cover.failed;
            if (cover.witness.is_null()) cover.witness = Json{{"alpha", fam.hi()}, {"point", point_json(x)}};
        }
    }
    cover.status = cover.failed ? CheckStatus::Fail : CheckStatus::Pass;

    CheckEntry bottom{"empty_intersection"};
    const double low = fam.lo() - fam.grid_step();
    const ConvexSetExpr bot = fam.at(low);
    for (const auto& x : pts) {
        ++bottom.tested;
        if (margin(bot, x, cfg) > cfg.member_tol) {
            ++bottom.failed;
            if (bottom.witness.is_null()) bottom.witness = Json{{"alpha", low}, {"point", point_json(x)}};
        }
    }
    bottom.status = bottom.failed ? CheckStatus::Fail : CheckStatus::Pass;

    rep.add(std::move(nest));
    rep.add(std::move(clos));
    rep.add(std::move(cover));
    rep.add(std::move(bottom));
    return rep;
}

}  // namespace qext
