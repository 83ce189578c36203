#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"

namespace qext {

using Json = nlohmann::ordered_json;

enum class CheckStatus { Pass, Fail, Skipped };

inline const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::Pass: return "pass";
        case CheckStatus::Fail: return "fail";
        case CheckStatus::Skipped: return "skipped";
    }
    return "?";
}

struct CheckEntry {
    std::string name;
    CheckStatus status = CheckStatus::Pass;
    long tested = 0;
    long failed = 0;
    std::string note;
    Json witness;                 // null unless the check failed or carries diagnostics
    std::optional<double> worst;  // worst observed value of the checked quantity
};

inline Json point_json(const Point& p) {
    Json a = Json::array();
    for (long i = 0; i < p.size(); ++i) a.push_back(p(i));
    return a;
}

struct ValidationReport {
    std::string subject;
    std::uint64_t seed = 0;
    Json tolerances = Json::object();
    Json budgets = Json::object();
    std::vector<CheckEntry> checks;

    CheckEntry& add(CheckEntry e) {
        checks.push_back(std::move(e));
        return checks.back();
    }

    bool passed() const {
        for (const auto& c : checks)
            if (c.status == CheckStatus::Fail) return false;
        return true;
    }

    const CheckEntry* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }

    std::vector<std::string> failed_names() const {
        std::vector<std::string> out;
        for (const auto& c : checks)
            if (c.status == CheckStatus::Fail) out.push_back(c.name);
        return out;
    }

    void merge(const ValidationReport& other, const std::string& prefix = "") {
        for (auto c : other.checks) {
            c.name = prefix + c.name;
            checks.push_back(std::move(c));
        }
    }

    Json to_json() const {
        Json j;
        j["subject"] = subject;
        j["seed"] = seed;
        j["passed"] = passed();
        j["tolerances"] = tolerances;
        j["budgets"] = budgets;
        Json arr = Json::array();
        for (const auto& c : checks) {
            Json e;
            e["name"] = c.name;
            e["status"] = to_string(c.status);
            e["tested"] = c.tested;
            e["failed"] = c.failed;
            if (c.worst) e["worst"] = *c.worst;
            if (!c.note.empty()) e["note"] = c.note;
            if (!c.witness.is_null()) e["witness"] = c.witness;
            arr.push_back(std::move(e));
        }
        j["checks"] = std::move(arr);
        return j;
    }
};

inline Json tolerance_json(const Config& cfg) {
    Json t;
    t["feasibility"] = cfg.feasibility_tol;
    t["member"] = cfg.member_tol;
    t["closed"] = cfg.closed_tol;
    t["contain"] = cfg.contain_tol;
    t["bisect"] = cfg.tol_bisect;
    return t;
}

}  // namespace qext
