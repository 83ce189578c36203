#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <cstdio>
#include <string>
#include <vector>

#include "config.hpp"

namespace qext {

enum class MapKind { Identity, ArctanScaled, NegLogGap, ExpGap, Log, Affine, Cap, SquarePos };

struct MapStep {
    MapKind kind = MapKind::Identity;
    double p = 0.0;  // ArctanScaled: eps, NegLogGap/ExpGap: b, Affine: slope, Cap: b
    double q = 0.0;  // ArctanScaled: offset, Affine: intercept
};

// Where a sublevel threshold lands after pulling back through a map.
struct Threshold {
    enum Kind { None, All, Value } kind = Value;
    double value = 0.0;
};

// Nondecreasing map of the real line, written as a composition of closed-form steps
// (applied first to last). All steps except Cap are strictly increasing.
class MonotoneMap {
public:
    static MonotoneMap identity() { return MonotoneMap{}; }
    static MonotoneMap arctan_scaled(double eps, double offset) { return single({MapKind::ArctanScaled, eps, offset}); }
    static MonotoneMap neg_log_gap(double b) { return single({MapKind::NegLogGap, b, 0.0}); }
    // t -> b - exp(-t), the inverse of neg_log_gap(b)
    static MonotoneMap exp_gap(double b) { return single({MapKind::ExpGap, b, 0.0}); }
    // t -> max(t, 0)^2; strictly increasing on [0, inf), used over nonnegative inner values
    static MonotoneMap square_pos() { return single({MapKind::SquarePos, 0.0, 0.0}); }
    static MonotoneMap log() { return single({MapKind::Log, 0.0, 0.0}); }
    static MonotoneMap affine(double m, double c) {
        if (!(m > 0)) throw SpecError("affine map needs a positive slope");
        return single({MapKind::Affine, m, c});
    }
    static MonotoneMap cap(double b) { return single({MapKind::Cap, b, 0.0}); }

    // this first, then `next`
    MonotoneMap then(const MonotoneMap& next) const {
        MonotoneMap m = *this;
        for (const auto& s : next.steps_) m.steps_.push_back(s);
        return m;
    }

    const std::vector<MapStep>& steps() const { return steps_; }
    bool strictly_increasing() const {
        for (const auto& s : steps_)
            if (s.kind == MapKind::Cap) return false;
        return true;
    }

    // Accepts +-inf and returns the corresponding one-sided limit.
    double forward(double t) const {
        for (const auto& s : steps_) t = step_forward(s, t);
        return t;
    }

    // Inverse of a strictly increasing map on its range.
    double inverse(double v) const {
        for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
            if (it->kind == MapKind::Cap) throw SpecError("cap has no inverse");
            v = step_inverse(*it, v);
        }
        return v;
    }

    // {t : map(t) < alpha} expressed as {t < threshold}, or nothing, or everything.
    Threshold preimage(double alpha) const {
        double v = alpha;
        for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
            const MapStep& s = *it;
            const auto [lo, hi] = step_range(s);
            if (s.kind == MapKind::Cap) {
                if (v > s.p) return {Threshold::All, 0.0};
                continue;
            }
            if (v <= lo) return {Threshold::None, 0.0};
            if (v >= hi) return {Threshold::All, 0.0};
            v = step_inverse(s, v);
        }
        return {Threshold::Value, v};
    }

    std::string describe() const {
        if (steps_.empty()) return "identity";
        std::string out;
        for (const auto& s : steps_) {
            if (!out.empty()) out += " -> ";
            switch (s.kind) {
                case MapKind::Identity: out += "identity"; break;
                case MapKind::ArctanScaled: out += "arctan(eps=" + num(s.p) + ", offset=" + num(s.q) + ")"; break;
                case MapKind::NegLogGap: out += "neg_log_gap(b=" + num(s.p) + ")"; break;
                case MapKind::ExpGap: out += "exp_gap(b=" + num(s.p) + ")"; break;
                case MapKind::SquarePos: out += "square_pos"; break;
                case MapKind::Log: out += "log"; break;
                case MapKind::Affine: out += "affine(" + num(s.p) + ", " + num(s.q) + ")"; break;
                case MapKind::Cap: out += "cap(" + num(s.p) + ")"; break;
            }
        }
        return out;
    }

private:
    static MonotoneMap single(MapStep s) {
        if (s.kind == MapKind::ArctanScaled && !(s.p > 0)) throw SpecError("arctan map needs a positive scale");
        MonotoneMap m;
        m.steps_.push_back(s);
        return m;
    }
    static std::string num(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", v);
        return buf;
    }

    static std::pair<double, double> step_range(const MapStep& s) {
        constexpr double inf = std::numeric_limits<double>::infinity();
        switch (s.kind) {
            case MapKind::ArctanScaled: return {s.q - s.p * std::numbers::pi / 2, s.q + s.p * std::numbers::pi / 2};
            case MapKind::Cap: return {-inf, s.p};
            case MapKind::ExpGap: return {-inf, s.p};
            case MapKind::SquarePos: return {0.0, inf};
            default: return {-inf, inf};
        }
    }

    static double step_forward(const MapStep& s, double t) {
        constexpr double inf = std::numeric_limits<double>::infinity();
        switch (s.kind) {
            case MapKind::Identity: return t;
            case MapKind::ArctanScaled: return s.q + s.p * std::atan(t);
            case MapKind::NegLogGap:
                if (t > s.p) throw DomainError("neg_log_gap: argument above its bound");
                return t == s.p ? inf : -std::log(s.p - t);
            case MapKind::Log:
                if (t < 0) throw DomainError("log: negative argument");
                return t == 0 ? -inf : std::log(t);
            case MapKind::ExpGap: return t == inf ? s.p : s.p - std::exp(-t);
            case MapKind::Affine: return s.p * t + s.q;
            case MapKind::Cap: return std::min(t, s.p);
            case MapKind::SquarePos: return t <= 0 ? 0.0 : t * t;
        }
        return t;
    }

    static double step_inverse(const MapStep& s, double v) {
        switch (s.kind) {
            case MapKind::Identity: return v;
            case MapKind::ArctanScaled: return std::tan((v - s.q) / s.p);
            case MapKind::NegLogGap: return s.p - std::exp(-v);
            case MapKind::ExpGap: return -std::log(s.p - v);
            case MapKind::SquarePos: return std::sqrt(v);
            case MapKind::Log: return std::exp(v);
            case MapKind::Affine: return (v - s.q) / s.p;
            case MapKind::Cap: return v;
        }
        return v;
    }

    std::vector<MapStep> steps_;
};

// lambda_n per block and the affine interpolants phi_n(t) = t - n + (n + 1 - t) lambda_n.
class ScalingSchedule {
public:
    void set(long n, double lambda) {
        if (!(lambda > 0 && lambda < 1)) throw QextError("scaling schedule: lambda must lie in (0, 1)");
        lambda_[n] = lambda;
    }
    bool has(long n) const { return lambda_.count(n) != 0; }
    double lambda(long n) const {
        auto it = lambda_.find(n);
        if (it == lambda_.end()) throw QextError("scaling schedule: no lambda for block " + std::to_string(n));
        return it->second;
    }
    const std::map<long, double>& values() const { return lambda_; }

    double phi(long n, double t) const { return t - n + (n + 1 - t) * lambda(n); }

    // Same interpolant for a block [lo, hi) of arbitrary width.
    static double interpolate(double lo, double hi, double lambda, double t) {
        return ((t - lo) + (hi - t) * lambda) / (hi - lo);
    }

private:
    std::map<long, double> lambda_;
};

}  // namespace qext
