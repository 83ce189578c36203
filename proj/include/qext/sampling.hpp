#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "set_algebra.hpp"

namespace qext {

// Seeded point generator. All harness randomness flows through one of these.
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    int index(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

    Point in_box(const VectorXd& lo, const VectorXd& hi) {
        Point p(lo.size());
        for (long i = 0; i < lo.size(); ++i) p(i) = uniform(lo(i), hi(i));
        return p;
    }

    // Uniform in the coordinates of Y inside [-radius, radius]^k, mapped into the ambient space.
    Point on_subspace(const Subspace& Y, double radius) {
        VectorXd c(Y.dim());
        for (long i = 0; i < c.size(); ++i) c(i) = uniform(-radius, radius);
        return Y.embed(c);
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

// Rejection sampling of open-mode members of `set` from a box around it.
inline std::vector<Point> sample_in_set(const ConvexSetExpr& set, const VectorXd& lo, const VectorXd& hi, int count,
                                        Sampler& s, const Config& cfg = default_config()) {
    std::vector<Point> out;
    long tries = 0;
    const long min_tries = 2000;
    while (static_cast<int>(out.size()) < count) {
        const Point p = s.in_box(lo, hi);
        ++tries;
        if (member(set, p, MemberMode::Open, cfg.member_tol, cfg)) out.push_back(p);
        if (tries >= min_tries && static_cast<double>(out.size()) < 1e-3 * static_cast<double>(tries))
            throw SamplingError("sampling starvation: acceptance below 0.1% after " + std::to_string(tries) +
                                " draws; use a tighter sampling box");
    }
    return out;
}

inline std::vector<Point> sample_on_subspace(const ConvexSetExpr& set, const Subspace& Y, double radius, int count,
                                             Sampler& s, const Config& cfg = default_config()) {
    std::vector<Point> out;
    long tries = 0;
    while (static_cast<int>(out.size()) < count) {
        const Point p = s.on_subspace(Y, radius);
        ++tries;
        if (member(set, p, MemberMode::Open, cfg.member_tol, cfg)) out.push_back(p);
        if (tries >= 2000 && static_cast<double>(out.size()) < 1e-3 * static_cast<double>(tries))
            throw SamplingError("sampling starvation on the subspace: acceptance below 0.1%; use a smaller radius");
    }
    return out;
}

}  // namespace qext
