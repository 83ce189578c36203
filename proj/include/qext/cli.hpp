#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "problem_io.hpp"

namespace qext {

inline constexpr const char* kVersion = "0.1.0";

namespace cli {

enum Exit : int { kOk = 0, kValidationFailed = 1, kBadInput = 2, kConstructionFailed = 3 };

struct Options {
    std::string path;
    std::string method = "engine";  // engine | projection | preserve
    std::optional<std::uint64_t> seed;
    std::string out;      // report destination; standard output when empty
    std::string witness;  // failure witness destination; <name>.witness.json when empty
    std::string csv;
    std::vector<double> box;  // lo hi steps
    std::vector<std::string> checks;
    std::string points;
    int samples = 200;
    int segments = 1000;
};

// --seed, then QEXT_SEED, then the file, then 1.
inline std::uint64_t resolve_seed(const Options& o, const ProblemFile& pf) {
    if (o.seed) return *o.seed;
    if (const char* env = std::getenv("QEXT_SEED"); env && *env) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (*end != '\0') throw ParseError("QEXT_SEED", "expected a non-negative integer");
        return v;
    }
    return pf.seed.value_or(1);
}

struct Built {
    ExtensionProblem p;
    ExtensionResult r;
    Point center;
};

inline Built construct(const ProblemFile& pf, const std::string& method, std::uint64_t seed, const Config& cfg) {
    Built b;
    b.p = build_problem(pf);
    b.center = validate_problem(b.p, seed, cfg);
    EngineOptions eo;
    eo.seed = seed;
    eo.search_center = b.center;
    if (method == "engine") {
        b.r = extend_quasiconvex(b.p, eo, cfg);
    } else if (method == "projection") {
        b.r.F = extend_by_projection(b.p);
        b.r.method = "projection";
        b.r.branch = "projection";
    } else if (method == "preserve") {
        PreserveOptions po;
        po.epsilon = pf.epsilon;
        po.engine = eo;
        b.r = extend_preserving(b.p, b.p.d, po, cfg);
    } else {
        throw ParseError("--method", "expected engine, projection or preserve");
    }
    return b;
}

inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json result_summary(const Built& b) {
    Json j;
    j["method"] = b.r.method;
    j["branch"] = b.r.branch;
    j["agreement_window"] = Json::array({finite_or_null(b.r.valid_lo), finite_or_null(b.r.valid_hi)});
    j["function"] = b.r.F.describe();
    j["notes"] = b.r.notes;
    if (!b.r.trace.levels.empty()) j["trace"] = b.r.trace.summary();
    return j;
}

inline const std::vector<std::string>& problem_checks() {
    static const std::vector<std::string> v{"construction", "extension", "quasiconvex", "trace", "preservation"};
    return v;
}
inline const std::vector<std::string>& family_checks() {
    static const std::vector<std::string> v{"omega", "quasiconvex"};
    return v;
}

inline std::set<std::string> selected(const Options& o, const std::vector<std::string>& known) {
    if (o.checks.empty()) return {known.begin(), known.end()};
    std::set<std::string> s;
    for (const auto& c : o.checks) {
        if (std::find(known.begin(), known.end(), c) == known.end()) {
            std::string all;
            for (const auto& k : known) all += (all.empty() ? "" : ", ") + k;
            throw ParseError("--checks", "unknown check \"" + c + "\" (available: " + all + ")");
        }
        s.insert(c);
    }
    return s;
}

inline ValidationReport skipped(const std::string& subject, const std::string& name, const std::string& why) {
    ValidationReport r;
    r.subject = subject;
    CheckEntry c{name};
    c.status = CheckStatus::Skipped;
    c.note = why;
    r.add(std::move(c));
    return r;
}

inline std::vector<ValidationReport> validate_problem_run(const ProblemFile& pf, const Built& b,
                                                          const std::set<std::string>& which, const Options& o,
                                                          std::uint64_t seed, const Config& cfg) {
    std::vector<ValidationReport> out;
    const ExtensionProblem& p = b.p;
    if (which.count("construction")) {
        if (b.r.method == "engine" || (b.r.method == "preserve" && !b.r.report.checks.empty())) {
            out.push_back(b.r.report);
        } else {
            OmegaValidationOptions vo;
            vo.seed = seed;
            vo.box_lo = b.center.array() - p.radius;
            vo.box_hi = b.center.array() + p.radius;
            vo.samples = std::min(o.samples, 200);
            out.push_back(validate_omega(family_from_function(b.r.F, p.grid, cfg), vo, cfg));
        }
    }
    if (which.count("extension")) {
        AgreementOptions ao;
        ao.samples = o.samples;
        ao.seed = seed;
        ao.center = b.center;
        ao.radius = p.radius;
        ao.valid_lo = b.r.valid_lo;
        ao.valid_hi = b.r.valid_hi;
        ao.tol = cfg.tol_bisect;
        out.push_back(check_extension(b.r.F, p.f, p.Y, ao, cfg));
    }
    if (which.count("quasiconvex")) {
        SegmentOptions so;
        so.segments = o.segments;
        so.seed = seed;
        so.tol = cfg.tol_bisect;
        so.box = Box{b.center.array() - p.radius, b.center.array() + p.radius};
        out.push_back(check_quasiconvex(b.r.F, p.A, so, cfg));
    }
    if (which.count("trace")) {
        if (b.r.trace.pairs.empty())
            out.push_back(skipped("trace", "trace_pairs", "no builder trace for method " + b.r.method));
        else
            out.push_back(check_trace(b.r, p, 1e-7, seed, cfg));
    }
    if (which.count("preservation")) {
        if (b.r.method != "preserve") {
            out.push_back(skipped("preservation", "preservation", "only for method preserve"));
        } else {
            const RangeInfo ri = range_over(p.f, ConvexSetExpr::full(p.n), cfg);
            if (!std::isfinite(ri.inf)) {
                out.push_back(skipped("preservation", "preservation", "f is unbounded below"));
            } else {
                PreservationOptions po;
                po.samples = o.samples;
                po.seed = seed;
                po.A = p.A;
                po.center = b.center;
                po.radius = p.radius;
                po.sup = ri.sup;
                po.range_applies = b.r.branch != "constant";
                po.minimizers = pf.minimizers;
                po.tol = cfg.tol_bisect;
                out.push_back(check_preservation(b.r.F, p.f, ri.inf, p.Y, po, cfg));
            }
        }
    }
    return out;
}

inline std::vector<ValidationReport> validate_family_run(const ProblemFile& pf, const OmegaFamily& fam,
                                                         const std::set<std::string>& which, const Options& o,
                                                         std::uint64_t seed, const Config& cfg) {
    std::vector<ValidationReport> out;
    const VectorXd lo = VectorXd::Constant(pf.dimension, -pf.radius), hi = VectorXd::Constant(pf.dimension, pf.radius);
    if (which.count("omega")) {
        OmegaValidationOptions vo;
        vo.seed = seed;
        vo.box_lo = lo;
        vo.box_hi = hi;
        vo.samples = std::min(o.samples, 200);
        out.push_back(validate_omega(fam, vo, cfg));
    }
    if (which.count("quasiconvex")) {
        SegmentOptions so;
        so.segments = o.segments;
        so.seed = seed;
        so.tol = cfg.tol_bisect;
        so.box = Box{lo, hi};
        out.push_back(check_quasiconvex(QuasiconvexSpec::family_defined(fam, pf.name), fam.ambient(), so, cfg));
    }
    return out;
}

inline bool all_passed(const std::vector<ValidationReport>& rs) {
    for (const auto& r : rs)
        if (!r.passed()) return false;
    return true;
}

inline Json run_report(const std::string& command, const ProblemFile& pf, std::uint64_t seed, const Json& result,
                       const std::vector<ValidationReport>& rs) {
    Json j;
    j["tool"] = "qext";
    j["version"] = kVersion;
    j["command"] = command;
    j["seed"] = seed;
    j["problem"] = to_json(pf);
    if (!result.is_null()) j["result"] = result;
    Json v = Json::array();
    for (const auto& r : rs) v.push_back(r.to_json());
    j["validations"] = v;
    j["passed"] = all_passed(rs);
    return j;
}

inline Json witness_json(const std::string& command, const ProblemFile& pf, std::uint64_t seed,
                         const std::vector<ValidationReport>& rs) {
    Json f = Json::array();
    for (const auto& r : rs)
        for (const auto& c : r.checks)
            if (c.status == CheckStatus::Fail) {
                ValidationReport one;
                one.checks.push_back(c);
                Json e = one.to_json()["checks"][0];
                e["report"] = r.subject;
                f.push_back(e);
            }
    return Json{{"command", command}, {"problem", pf.name}, {"seed", seed}, {"failed", f}};
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ParseError("", "cannot write " + path);
    out << text;
}

inline std::string fixed9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9f", v);
    return buf;
}

// Grid of F values over [lo, hi]^n with `steps` points per axis.
inline void write_grid_csv(const std::string& path, const Built& b, const std::vector<double>& box, const Config& cfg) {
    if (box.size() != 3) throw ParseError("--box", "expected lo hi steps");
    const double lo = box[0], hi = box[1];
    const int steps = static_cast<int>(box[2]);
    if (!(hi > lo) || steps < 2 || box[2] != steps) throw ParseError("--box", "need lo < hi and an integer steps >= 2");
    const int n = b.p.n;
    std::ofstream out(path);
    if (!out) throw ParseError("--csv", "cannot write " + path);
    for (int i = 0; i < n; ++i) out << "x" << i + 1 << ",";
    out << "F,f\n";
    std::vector<int> idx(n, 0);
    while (true) {
        Point x(n);
        for (int i = 0; i < n; ++i) x(i) = lo + (hi - lo) * idx[i] / (steps - 1);
        for (int i = 0; i < n; ++i) out << fixed9(x(i)) << ",";
        if (member(b.p.A, x, MemberMode::Open)) {
            out << fixed9(evaluate(b.r.F, x, cfg)) << ",";
            if (b.p.Y.contains(x, 1e-12)) out << fixed9(evaluate(b.p.f, x, cfg));
        } else {
            out << "outside-domain,";
        }
        out << "\n";
        int k = n - 1;
        while (k >= 0 && ++idx[k] == steps) idx[k--] = 0;
        if (k < 0) break;
    }
}

inline std::vector<Point> read_points(const std::string& path, int n) {
    std::ifstream in(path);
    if (!in) throw ParseError("--points", "cannot read " + path);
    std::vector<Point> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                size_t used = 0;
                vals.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t", used) != std::string::npos) numeric = false;
            } catch (const std::exception&) {
                numeric = false;
            }
        }
        const std::string where = path + " line " + std::to_string(lineno);
        if (!numeric) {
            if (pts.empty() && lineno == 1) continue;  // header
            throw ParseError(where, "expected " + std::to_string(n) + " comma-separated numbers");
        }
        if (static_cast<int>(vals.size()) != n)
            throw ParseError(where, "expected " + std::to_string(n) + " values, got " + std::to_string(vals.size()));
        pts.push_back(Eigen::Map<const VectorXd>(vals.data(), n));
    }
    return pts;
}

// ---------------------------------------------------------------------------
// Commands. Each returns the process exit code; diagnostics go to `err`.

inline int finish_validation(const std::string& command, const ProblemFile& pf, std::uint64_t seed, const Json& result,
                             const std::vector<ValidationReport>& rs, const Options& o, std::ostream& out,
                             std::ostream& err) {
    const std::string text = run_report(command, pf, seed, result, rs).dump(2) + "\n";
    if (o.out.empty())
        out << text;
    else
        write_text(o.out, text);
    if (all_passed(rs)) return kOk;
    const std::string wpath = o.witness.empty() ? pf.name + ".witness.json" : o.witness;
    write_text(wpath, witness_json(command, pf, seed, rs).dump(2) + "\n");
    err << "qext: validation failed; witness written to " << wpath << "\n";
    return kValidationFailed;
}

template <class Body>
int guarded(const std::string& command, const Options& o, std::ostream& err, Body body) {
    try {
        return body();
    } catch (const ParseError& e) {
        err << "qext " << command << ": " << e.what() << "\n";
        return kBadInput;
    } catch (const SamplingError& e) {
        err << "qext " << command << ": sampling failed (try a smaller radius or a grid inside the sampled range): "
            << e.what() << "\n";
        return kConstructionFailed;
    } catch (const QextError& e) {
        err << "qext " << command << ": construction failed (method " << o.method << "): " << e.what() << "\n";
        return kConstructionFailed;
    }
}

inline int cmd_extend(const Options& o, std::ostream& out, std::ostream& err) {
    return guarded("extend", o, err, [&] {
        const ProblemFile pf = read_problem_file(o.path);
        if (pf.type != "problem") throw ParseError("type", "extend needs an extension problem, not a family");
        if (!o.csv.empty() && o.box.empty()) throw ParseError("--box", "required with --csv");
        const Config cfg = build_config(pf);
        const std::uint64_t seed = resolve_seed(o, pf);
        const Built b = construct(pf, o.method, seed, cfg);
        const auto rs = validate_problem_run(pf, b, selected(o, problem_checks()), o, seed, cfg);
        if (!o.csv.empty()) write_grid_csv(o.csv, b, o.box, cfg);
        return finish_validation("extend", pf, seed, result_summary(b), rs, o, out, err);
    });
}

inline int cmd_verify(const Options& o, std::ostream& out, std::ostream& err) {
    return guarded("verify", o, err, [&] {
        const ProblemFile pf = read_problem_file(o.path);
        const Config cfg = build_config(pf);
        const std::uint64_t seed = resolve_seed(o, pf);
        if (pf.type == "family") {
            const auto which = selected(o, family_checks());
            const OmegaFamily fam = build_family(pf, cfg);
            return finish_validation("verify", pf, seed, Json(), validate_family_run(pf, fam, which, o, seed, cfg), o,
                                     out, err);
        }
        const auto which = selected(o, problem_checks());
        const Built b = construct(pf, o.method, seed, cfg);
        return finish_validation("verify", pf, seed, result_summary(b),
                                 validate_problem_run(pf, b, which, o, seed, cfg), o, out, err);
    });
}

inline int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
    return guarded("eval", o, err, [&] {
        const ProblemFile pf = read_problem_file(o.path);
        const Config cfg = build_config(pf);
        const std::vector<Point> pts = read_points(o.points, pf.dimension);
        const std::uint64_t seed = resolve_seed(o, pf);
        QuasiconvexSpec F;
        if (pf.type == "family")
            F = QuasiconvexSpec::family_defined(build_family(pf, cfg), pf.name);
        else
            F = construct(pf, o.method, seed, cfg).r.F;
        for (const auto& x : pts) {
            if (!member(F.domain(), x, MemberMode::Open)) {
                out << "outside-domain\n";
                continue;
            }
            out << fixed9(evaluate(F, x, cfg)) << "\n";
        }
        return static_cast<int>(kOk);
    });
}

}  // namespace cli
}  // namespace qext
