#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "verification.hpp"

namespace qext {

// Problem files: JSON with a schema version. Every parse failure names the offending field.

inline constexpr int kProblemSchema = 1;

struct ParseError : QextError {
    std::string field;
    ParseError(std::string where, const std::string& what)
        : QextError((where.empty() ? std::string("$") : where) + ": " + what), field(std::move(where)) {}
};

// ---------------------------------------------------------------------------
// File-level data, kept separate from the built objects so it can be written back out.

struct SetFile {
    enum Kind { Full, Empty, Halfspaces, Box } kind = Full;
    MatrixXd rows;  // Halfspaces: {x : rows x < rhs}
    VectorXd rhs;
    VectorXd lo, hi;  // Box
};

struct FunctionFile {
    std::string kind;  // max_affine, constant, transformed, pointwise_max
    std::vector<AffinePiece> pieces;
    double value = 0.0;
    std::vector<MapStep> map;
    std::vector<FunctionFile> children;  // transformed: the inner function; pointwise_max: the parts
};

struct FamilyBlockFile {
    double lo = 0.0, hi = 1.0;
    SetFile set;
    std::optional<double> scale;  // grow the set from this scale at lo to 1 at hi
};

struct FamilyFile {
    SetFile ambient;
    double grid_step = 0.1;
    std::string below = "empty";  // empty | extend_first
    std::string above = "ambient";  // ambient | extrapolate
    std::vector<FamilyBlockFile> blocks;
    std::optional<FunctionFile> from_function;  // alternative to blocks: sublevel family of a function
    LevelGrid grid{-4.0, 6.0, 0.5};
};

struct ProblemFile {
    int schema = kProblemSchema;
    std::string type = "problem";  // problem | family
    std::string name = "problem";
    int dimension = 0;
    MatrixXd basis;  // subspace basis, one row per vector
    SetFile domain;
    FunctionFile function;
    std::optional<FunctionFile> gauge;
    LevelGrid grid{-4.0, 6.0, 0.5};
    double radius = 3.0;
    Json tolerances = Json::object();
    std::optional<std::uint64_t> seed;
    std::optional<double> epsilon;
    std::vector<Point> minimizers;
    FamilyFile family;
};

// ---------------------------------------------------------------------------
// Parsing

namespace io {

inline std::string at(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }
inline std::string at(const std::string& base, size_t i) { return base + "[" + std::to_string(i) + "]"; }

inline const Json& field(const Json& j, const std::string& where, const std::string& key) {
    if (!j.is_object()) throw ParseError(where, "expected an object");
    if (!j.contains(key)) throw ParseError(at(where, key), "missing field");
    return j.at(key);
}

inline double number(const Json& j, const std::string& where) {
    if (!j.is_number()) throw ParseError(where, "expected a number");
    return j.get<double>();
}

inline double number_or(const Json& j, const std::string& where, const std::string& key, double def) {
    return j.contains(key) ? number(j.at(key), at(where, key)) : def;
}

inline std::string text(const Json& j, const std::string& where) {
    if (!j.is_string()) throw ParseError(where, "expected a string");
    return j.get<std::string>();
}

inline VectorXd vec(const Json& j, const std::string& where, int n) {
    if (!j.is_array()) throw ParseError(where, "expected an array of " + std::to_string(n) + " numbers");
    if (static_cast<int>(j.size()) != n)
        throw ParseError(where, "expected " + std::to_string(n) + " entries, got " + std::to_string(j.size()));
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = number(j[i], at(where, i));
    return v;
}

inline void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed) ok |= it.key() == k;
        if (!ok) throw ParseError(at(where, it.key()), "unknown field");
    }
}

inline SetFile parse_set(const Json& j, const std::string& where, int n) {
    SetFile s;
    if (j.is_string()) {
        const std::string k = j.get<std::string>();
        if (k == "full") return s;
        if (k == "empty") {
            s.kind = SetFile::Empty;
            return s;
        }
        throw ParseError(where, "unknown set \"" + k + "\" (expected full, empty or an object)");
    }
    if (!j.is_object()) throw ParseError(where, "expected \"full\", \"empty\" or an object");
    check_keys(j, where, {"halfspaces", "box"});
    if (j.contains("halfspaces") == j.contains("box")) throw ParseError(where, "give exactly one of halfspaces, box");
    if (j.contains("box")) {
        const std::string w = at(where, "box");
        const Json& b = j.at("box");
        s.kind = SetFile::Box;
        s.lo = vec(field(b, w, "lo"), at(w, "lo"), n);
        s.hi = vec(field(b, w, "hi"), at(w, "hi"), n);
        for (int i = 0; i < n; ++i)
            if (!(s.lo(i) < s.hi(i))) throw ParseError(at(w, "hi"), "each upper bound must exceed the lower bound");
        return s;
    }
    const std::string w = at(where, "halfspaces");
    const Json& h = j.at("halfspaces");
    if (!h.is_array() || h.empty()) throw ParseError(w, "expected a non-empty array of {a, b}");
    s.kind = SetFile::Halfspaces;
    s.rows.resize(static_cast<long>(h.size()), n);
    s.rhs.resize(static_cast<long>(h.size()));
    for (size_t i = 0; i < h.size(); ++i) {
        const std::string wi = at(w, i);
        check_keys(h[i], wi, {"a", "b"});
        s.rows.row(static_cast<long>(i)) = vec(field(h[i], wi, "a"), at(wi, "a"), n).transpose();
        s.rhs(static_cast<long>(i)) = number(field(h[i], wi, "b"), at(wi, "b"));
    }
    return s;
}

inline MapStep parse_step(const Json& j, const std::string& where) {
    if (j.is_string()) {
        const std::string k = j.get<std::string>();
        if (k == "identity") return {MapKind::Identity, 0, 0};
        if (k == "square_pos") return {MapKind::SquarePos, 0, 0};
        if (k == "log") return {MapKind::Log, 0, 0};
        if (k == "arctan") return {MapKind::ArctanScaled, 1, 0};
        throw ParseError(where, "unknown map \"" + k + "\"");
    }
    const std::string k = text(field(j, where, "kind"), at(where, "kind"));
    if (k == "arctan") {
        check_keys(j, where, {"kind", "eps", "offset"});
        const double eps = number_or(j, where, "eps", 1.0);
        if (!(eps > 0)) throw ParseError(at(where, "eps"), "must be positive");
        return {MapKind::ArctanScaled, eps, number_or(j, where, "offset", 0.0)};
    }
    if (k == "neg_log_gap" || k == "exp_gap" || k == "cap") {
        check_keys(j, where, {"kind", "b"});
        const MapKind mk = k == "cap" ? MapKind::Cap : k == "exp_gap" ? MapKind::ExpGap : MapKind::NegLogGap;
        return {mk, number(field(j, where, "b"), at(where, "b")), 0.0};
    }
    if (k == "affine") {
        check_keys(j, where, {"kind", "slope", "intercept"});
        const double m = number(field(j, where, "slope"), at(where, "slope"));
        if (!(m > 0)) throw ParseError(at(where, "slope"), "must be positive");
        return {MapKind::Affine, m, number_or(j, where, "intercept", 0.0)};
    }
    if (k == "identity" || k == "square_pos" || k == "log") {
        check_keys(j, where, {"kind"});
        return parse_step(Json(k), where);
    }
    throw ParseError(at(where, "kind"), "unknown map \"" + k + "\"");
}

inline FunctionFile parse_function(const Json& j, const std::string& where, int n) {
    FunctionFile f;
    f.kind = text(field(j, where, "kind"), at(where, "kind"));
    if (f.kind == "max_affine") {
        check_keys(j, where, {"kind", "pieces"});
        const std::string w = at(where, "pieces");
        const Json& p = field(j, where, "pieces");
        if (!p.is_array() || p.empty()) throw ParseError(w, "expected a non-empty array of {a, b}");
        for (size_t i = 0; i < p.size(); ++i) {
            const std::string wi = at(w, i);
            check_keys(p[i], wi, {"a", "b"});
            f.pieces.push_back({vec(field(p[i], wi, "a"), at(wi, "a"), n), number_or(p[i], wi, "b", 0.0)});
        }
    } else if (f.kind == "constant") {
        check_keys(j, where, {"kind", "value"});
        f.value = number(field(j, where, "value"), at(where, "value"));
    } else if (f.kind == "transformed") {
        check_keys(j, where, {"kind", "map", "inner"});
        const std::string w = at(where, "map");
        const Json& m = field(j, where, "map");
        if (m.is_array()) {
            for (size_t i = 0; i < m.size(); ++i) f.map.push_back(parse_step(m[i], at(w, i)));
        } else {
            f.map.push_back(parse_step(m, w));
        }
        f.children.push_back(parse_function(field(j, where, "inner"), at(where, "inner"), n));
    } else if (f.kind == "pointwise_max") {
        check_keys(j, where, {"kind", "parts"});
        const std::string w = at(where, "parts");
        const Json& p = field(j, where, "parts");
        if (!p.is_array() || p.empty()) throw ParseError(w, "expected a non-empty array of functions");
        for (size_t i = 0; i < p.size(); ++i) f.children.push_back(parse_function(p[i], at(w, i), n));
    } else {
        throw ParseError(at(where, "kind"), "unknown function kind \"" + f.kind +
                                                "\" (expected max_affine, constant, transformed, pointwise_max)");
    }
    return f;
}

inline LevelGrid parse_grid(const Json& j, const std::string& where) {
    check_keys(j, where, {"lo", "hi", "step"});
    LevelGrid g{number(field(j, where, "lo"), at(where, "lo")), number(field(j, where, "hi"), at(where, "hi")),
                number(field(j, where, "step"), at(where, "step"))};
    if (!(g.step > 0)) throw ParseError(at(where, "step"), "must be positive");
    if (!(g.hi > g.lo)) throw ParseError(at(where, "hi"), "must exceed lo");
    return g;
}

inline FamilyFile parse_family(const Json& j, const std::string& where, int n) {
    check_keys(j, where, {"ambient", "grid_step", "below", "above", "blocks", "from_function", "grid"});
    FamilyFile f;
    if (j.contains("ambient")) f.ambient = parse_set(j.at("ambient"), at(where, "ambient"), n);
    f.grid_step = number_or(j, where, "grid_step", 0.1);
    if (!(f.grid_step > 0)) throw ParseError(at(where, "grid_step"), "must be positive");
    if (j.contains("below")) {
        f.below = text(j.at("below"), at(where, "below"));
        if (f.below != "empty" && f.below != "extend_first")
            throw ParseError(at(where, "below"), "expected empty or extend_first");
    }
    if (j.contains("above")) {
        f.above = text(j.at("above"), at(where, "above"));
        if (f.above != "ambient" && f.above != "extrapolate")
            throw ParseError(at(where, "above"), "expected ambient or extrapolate");
    }
    if (j.contains("blocks") == j.contains("from_function"))
        throw ParseError(where, "give exactly one of blocks, from_function");
    if (j.contains("from_function")) {
        f.from_function = parse_function(j.at("from_function"), at(where, "from_function"), n);
        f.grid = parse_grid(field(j, where, "grid"), at(where, "grid"));
        return f;
    }
    const std::string w = at(where, "blocks");
    const Json& b = j.at("blocks");
    if (!b.is_array() || b.empty()) throw ParseError(w, "expected a non-empty array of blocks");
    for (size_t i = 0; i < b.size(); ++i) {
        const std::string wi = at(w, i);
        check_keys(b[i], wi, {"lo", "hi", "set", "scale"});
        FamilyBlockFile fb;
        fb.lo = number(field(b[i], wi, "lo"), at(wi, "lo"));
        fb.hi = number(field(b[i], wi, "hi"), at(wi, "hi"));
        if (!(fb.hi > fb.lo)) throw ParseError(at(wi, "hi"), "must exceed lo");
        if (i > 0 && fb.lo != f.blocks.back().hi) throw ParseError(at(wi, "lo"), "blocks must be contiguous");
        fb.set = parse_set(field(b[i], wi, "set"), at(wi, "set"), n);
        if (b[i].contains("scale")) {
            fb.scale = number(b[i].at("scale"), at(wi, "scale"));
            if (!(*fb.scale > 0 && *fb.scale <= 1)) throw ParseError(at(wi, "scale"), "must lie in (0, 1]");
        }
        f.blocks.push_back(std::move(fb));
    }
    return f;
}

}  // namespace io

inline ProblemFile parse_problem(const Json& j) {
    using namespace io;
    if (!j.is_object()) throw ParseError("", "expected a JSON object");
    check_keys(j, "", {"schema", "type", "name", "dimension", "subspace", "domain", "function", "gauge", "grid",
                       "radius", "tolerances", "seed", "epsilon", "minimizers", "family"});
    ProblemFile p;
    const Json& sv = field(j, "", "schema");
    if (!sv.is_number_integer() || sv.get<int>() != kProblemSchema)
        throw ParseError("schema", "unsupported schema version (expected " + std::to_string(kProblemSchema) + ")");
    if (j.contains("type")) {
        p.type = text(j.at("type"), "type");
        if (p.type != "problem" && p.type != "family") throw ParseError("type", "expected problem or family");
    }
    if (j.contains("name")) p.name = text(j.at("name"), "name");
    const Json& d = field(j, "", "dimension");
    if (!d.is_number_integer() || d.get<int>() < 1) throw ParseError("dimension", "expected a positive integer");
    p.dimension = d.get<int>();
    const int n = p.dimension;

    if (j.contains("tolerances")) {
        const Json& t = j.at("tolerances");
        if (!t.is_object()) throw ParseError("tolerances", "expected an object");
        check_keys(t, "tolerances", {"feasibility", "member", "closed", "contain", "bisect"});
        for (auto it = t.begin(); it != t.end(); ++it) {
            const double v = number(it.value(), at("tolerances", it.key()));
            if (!(v > 0)) throw ParseError(at("tolerances", it.key()), "must be positive");
            p.tolerances[it.key()] = v;
        }
    }
    if (j.contains("seed")) {
        const Json& s = j.at("seed");
        if (!s.is_number_unsigned()) throw ParseError("seed", "expected a non-negative integer");
        p.seed = s.get<std::uint64_t>();
    }
    if (j.contains("radius")) {
        p.radius = number(j.at("radius"), "radius");
        if (!(p.radius > 0)) throw ParseError("radius", "must be positive");
    }

    if (p.type == "family") {
        p.family = parse_family(field(j, "", "family"), "family", n);
        return p;
    }

    const Json& b = field(j, "", "subspace");
    if (!b.is_array() || b.empty()) throw ParseError("subspace", "expected a non-empty array of basis rows");
    p.basis.resize(static_cast<long>(b.size()), n);
    for (size_t i = 0; i < b.size(); ++i)
        p.basis.row(static_cast<long>(i)) = vec(b[i], at("subspace", i), n).transpose();
    if (j.contains("domain")) p.domain = parse_set(j.at("domain"), "domain", n);
    if (p.domain.kind == SetFile::Empty) throw ParseError("domain", "the domain must be non-empty");
    p.function = parse_function(field(j, "", "function"), "function", n);
    if (j.contains("gauge")) p.gauge = parse_function(j.at("gauge"), "gauge", n);
    if (j.contains("grid")) p.grid = parse_grid(j.at("grid"), "grid");
    if (j.contains("epsilon")) {
        p.epsilon = number(j.at("epsilon"), "epsilon");
        if (!(*p.epsilon > 0)) throw ParseError("epsilon", "must be positive");
    }
    if (j.contains("minimizers")) {
        const Json& m = j.at("minimizers");
        if (!m.is_array()) throw ParseError("minimizers", "expected an array of points");
        for (size_t i = 0; i < m.size(); ++i) p.minimizers.push_back(vec(m[i], at("minimizers", i), n));
    }
    return p;
}

inline ProblemFile parse_problem_text(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // nlohmann reports "line L, column C" in its message
        throw ParseError("", std::string("invalid JSON: ") + e.what());
    }
    return parse_problem(j);
}

inline ProblemFile read_problem_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("", "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_problem_text(ss.str());
}

// ---------------------------------------------------------------------------
// Serialization

namespace io {

inline Json vec_json(const VectorXd& v) { return point_json(v); }

inline Json set_json(const SetFile& s) {
    switch (s.kind) {
        case SetFile::Full: return "full";
        case SetFile::Empty: return "empty";
        case SetFile::Box: return Json{{"box", Json{{"lo", vec_json(s.lo)}, {"hi", vec_json(s.hi)}}}};
        case SetFile::Halfspaces: {
            Json h = Json::array();
            for (long i = 0; i < s.rows.rows(); ++i)
                h.push_back(Json{{"a", vec_json(s.rows.row(i).transpose())}, {"b", s.rhs(i)}});
            return Json{{"halfspaces", h}};
        }
    }
    return "full";
}

inline Json step_json(const MapStep& s) {
    switch (s.kind) {
        case MapKind::Identity: return Json{{"kind", "identity"}};
        case MapKind::ArctanScaled: return Json{{"kind", "arctan"}, {"eps", s.p}, {"offset", s.q}};
        case MapKind::NegLogGap: return Json{{"kind", "neg_log_gap"}, {"b", s.p}};
        case MapKind::ExpGap: return Json{{"kind", "exp_gap"}, {"b", s.p}};
        case MapKind::Cap: return Json{{"kind", "cap"}, {"b", s.p}};
        case MapKind::SquarePos: return Json{{"kind", "square_pos"}};
        case MapKind::Log: return Json{{"kind", "log"}};
        case MapKind::Affine: return Json{{"kind", "affine"}, {"slope", s.p}, {"intercept", s.q}};
    }
    return Json{{"kind", "identity"}};
}

inline Json function_json(const FunctionFile& f) {
    Json j{{"kind", f.kind}};
    if (f.kind == "max_affine") {
        Json p = Json::array();
        for (const auto& pc : f.pieces) p.push_back(Json{{"a", vec_json(pc.a)}, {"b", pc.b}});
        j["pieces"] = p;
    } else if (f.kind == "constant") {
        j["value"] = f.value;
    } else if (f.kind == "transformed") {
        Json m = Json::array();
        for (const auto& s : f.map) m.push_back(step_json(s));
        j["map"] = m;
        j["inner"] = function_json(f.children.at(0));
    } else if (f.kind == "pointwise_max") {
        Json p = Json::array();
        for (const auto& c : f.children) p.push_back(function_json(c));
        j["parts"] = p;
    }
    return j;
}

inline Json grid_json(const LevelGrid& g) { return Json{{"lo", g.lo}, {"hi", g.hi}, {"step", g.step}}; }

}  // namespace io

inline Json to_json(const ProblemFile& p) {
    using namespace io;
    Json j;
    j["schema"] = p.schema;
    j["type"] = p.type;
    j["name"] = p.name;
    j["dimension"] = p.dimension;
    if (p.type == "family") {
        Json f;
        f["ambient"] = set_json(p.family.ambient);
        f["grid_step"] = p.family.grid_step;
        f["below"] = p.family.below;
        f["above"] = p.family.above;
        if (p.family.from_function) {
            f["from_function"] = function_json(*p.family.from_function);
            f["grid"] = grid_json(p.family.grid);
        } else {
            Json bl = Json::array();
            for (const auto& b : p.family.blocks) {
                Json e{{"lo", b.lo}, {"hi", b.hi}, {"set", set_json(b.set)}};
                if (b.scale) e["scale"] = *b.scale;
                bl.push_back(e);
            }
            f["blocks"] = bl;
        }
        j["family"] = f;
    } else {
        Json b = Json::array();
        for (long i = 0; i < p.basis.rows(); ++i) b.push_back(vec_json(p.basis.row(i).transpose()));
        j["subspace"] = b;
        j["domain"] = set_json(p.domain);
        j["function"] = function_json(p.function);
        if (p.gauge) j["gauge"] = function_json(*p.gauge);
        j["grid"] = grid_json(p.grid);
        if (p.epsilon) j["epsilon"] = *p.epsilon;
        if (!p.minimizers.empty()) {
            Json m = Json::array();
            for (const auto& x : p.minimizers) m.push_back(vec_json(x));
            j["minimizers"] = m;
        }
    }
    j["radius"] = p.radius;
    if (!p.tolerances.empty()) j["tolerances"] = p.tolerances;
    if (p.seed) j["seed"] = *p.seed;
    return j;
}

// ---------------------------------------------------------------------------
// Building library objects

inline Config build_config(const ProblemFile& p) {
    Config c;
    const Json& t = p.tolerances;
    if (t.contains("feasibility")) c.feasibility_tol = t["feasibility"];
    if (t.contains("member")) c.member_tol = t["member"];
    if (t.contains("closed")) c.closed_tol = t["closed"];
    if (t.contains("contain")) c.contain_tol = t["contain"];
    if (t.contains("bisect")) c.tol_bisect = t["bisect"];
    return c;
}

inline ConvexSetExpr build_set(const SetFile& s, int n) {
    switch (s.kind) {
        case SetFile::Full: return ConvexSetExpr::full(n);
        case SetFile::Empty: return ConvexSetExpr::empty(n);
        case SetFile::Box: return ConvexSetExpr::box(s.lo, s.hi);
        case SetFile::Halfspaces: return ConvexSetExpr::polyhedron(s.rows, s.rhs);
    }
    return ConvexSetExpr::full(n);
}

inline MonotoneMap build_map(const std::vector<MapStep>& steps) {
    MonotoneMap m = MonotoneMap::identity();
    for (const auto& s : steps) {
        switch (s.kind) {
            case MapKind::Identity: break;
            case MapKind::ArctanScaled: m = m.then(MonotoneMap::arctan_scaled(s.p, s.q)); break;
            case MapKind::NegLogGap: m = m.then(MonotoneMap::neg_log_gap(s.p)); break;
            case MapKind::ExpGap: m = m.then(MonotoneMap::exp_gap(s.p)); break;
            case MapKind::Cap: m = m.then(MonotoneMap::cap(s.p)); break;
            case MapKind::SquarePos: m = m.then(MonotoneMap::square_pos()); break;
            case MapKind::Log: m = m.then(MonotoneMap::log()); break;
            case MapKind::Affine: m = m.then(MonotoneMap::affine(s.p, s.q)); break;
        }
    }
    return m;
}

inline QuasiconvexSpec build_function(const FunctionFile& f, const ConvexSetExpr& dom) {
    if (f.kind == "max_affine") return QuasiconvexSpec::max_affine(f.pieces, dom);
    if (f.kind == "constant") return QuasiconvexSpec::constant(f.value, dom);
    if (f.kind == "transformed") return QuasiconvexSpec::transformed(build_function(f.children.at(0), dom), build_map(f.map));
    std::vector<QuasiconvexSpec> parts;
    for (const auto& c : f.children) parts.push_back(build_function(c, dom));
    return QuasiconvexSpec::pointwise_max(std::move(parts));
}

inline ExtensionProblem build_problem(const ProblemFile& p) {
    if (p.type != "problem") throw SpecError("build_problem: file describes a family, not an extension problem");
    const int n = p.dimension;
    const ConvexSetExpr A = build_set(p.domain, n);
    std::optional<QuasiconvexSpec> d;
    if (p.gauge) d = build_function(*p.gauge, A);
    return ExtensionProblem::make(Subspace::span(p.basis.transpose()), A, build_function(p.function, A), p.grid, d,
                                  p.radius, p.name);
}

inline OmegaFamily build_family(const ProblemFile& p, const Config& cfg = default_config()) {
    if (p.type != "family") throw SpecError("build_family: file describes an extension problem, not a family");
    const int n = p.dimension;
    const FamilyFile& f = p.family;
    const ConvexSetExpr amb = build_set(f.ambient, n);
    if (f.from_function) {
        OmegaFamily fam = family_from_function(build_function(*f.from_function, amb), f.grid, cfg);
        fam.named(p.name);
        return fam;
    }
    OmegaFamily fam(n, amb, f.grid_step);
    for (const auto& b : f.blocks) {
        const ConvexSetExpr s = build_set(b.set, n);
        fam.add_block(b.lo, b.hi, b.scale ? LevelGenerator::scaled(s, *b.scale) : LevelGenerator::constant(s));
    }
    fam.below(f.below == "empty" ? BelowPolicy::Empty : BelowPolicy::ExtendFirst);
    fam.above(f.above == "ambient" ? AbovePolicy::ClampToAmbient : AbovePolicy::Extrapolate);
    fam.named(p.name);
    return fam;
}

}  // namespace qext
