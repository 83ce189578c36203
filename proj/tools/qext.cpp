#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qext/cli.hpp"

using qext::cli::Options;

namespace {

std::vector<std::string> split_commas(const std::vector<std::string>& in) {
    std::vector<std::string> out;
    for (const auto& s : in) {
        size_t start = 0;
        while (start <= s.size()) {
            const size_t end = s.find(',', start);
            const std::string part = s.substr(start, end == std::string::npos ? std::string::npos : end - start);
            if (!part.empty()) out.push_back(part);
            if (end == std::string::npos) break;
            start = end + 1;
        }
    }
    return out;
}

void common(CLI::App* sub, Options& o) {
    sub->add_option("file", o.path, "problem or family file (JSON)")->required();
    sub->add_option("--method", o.method, "engine, projection or preserve")
        ->check(CLI::IsMember({"engine", "projection", "preserve"}));
    sub->add_option("--seed", o.seed, "sampling seed (overrides QEXT_SEED and the file)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qext: extension of quasiconvex functions from a subspace, with property checks"};
    app.set_version_flag("--version", qext::kVersion);
    app.require_subcommand(1);
    Options o;
    std::vector<std::string> checks;

    CLI::App* ext = app.add_subcommand("extend", "build an extension, validate it and write a report");
    common(ext, o);
    ext->add_option("--csv", o.csv, "write F on a grid to this CSV file");
    ext->add_option("--box", o.box, "grid for --csv: lo hi steps")->expected(3);
    ext->add_option("--out", o.out, "report file (default: standard output)");
    ext->add_option("--witness", o.witness, "witness file written on validation failure");
    ext->add_option("--checks", checks, "comma-separated subset of checks");
    ext->add_option("--samples", o.samples, "agreement and preservation samples")->capture_default_str();
    ext->add_option("--segments", o.segments, "random segment tests")->capture_default_str();

    Options vo;
    vo.samples = 1000;
    vo.segments = 10000;
    std::vector<std::string> vchecks;
    CLI::App* ver = app.add_subcommand("verify", "run the property checks on a problem or family file");
    common(ver, vo);
    ver->add_option("--checks", vchecks, "comma-separated subset of checks");
    ver->add_option("--out", vo.out, "report file (default: standard output)");
    ver->add_option("--witness", vo.witness, "witness file written on validation failure");
    ver->add_option("--samples", vo.samples, "agreement and preservation samples")->capture_default_str();
    ver->add_option("--segments", vo.segments, "random segment tests")->capture_default_str();

    Options eo;
    CLI::App* ev = app.add_subcommand("eval", "print F at each point of a CSV file");
    common(ev, eo);
    ev->add_option("--points", eo.points, "CSV file, one point per line")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return qext::cli::kBadInput;
    }

    if (ext->parsed()) {
        o.checks = split_commas(checks);
        return qext::cli::cmd_extend(o, std::cout, std::cerr);
    }
    if (ver->parsed()) {
        vo.checks = split_commas(vchecks);
        return qext::cli::cmd_verify(vo, std::cout, std::cerr);
    }
    return qext::cli::cmd_eval(eo, std::cout, std::cerr);
}
