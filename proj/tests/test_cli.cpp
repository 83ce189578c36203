#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "qext/cli.hpp"

using namespace qext;
namespace fs = std::filesystem;

namespace {

const std::string kCli = QEXT_CLI_PATH;
const std::string kDemo = QEXT_DEMO_DIR;

std::string demo(const std::string& name) { return kDemo + "/" + name + ".json"; }

fs::path scratch() {
    const fs::path d = fs::temp_directory_path() / "qext_cli_tests";
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

struct CliRun {
    int code = -1;
    std::string out, err;
};

// `env` is prepended to the command line (e.g. "QEXT_SEED=4")
CliRun cli_run(const std::string& args, const std::string& env = "") {
    static int counter = 0;
    const fs::path o = scratch() / ("stdout" + std::to_string(counter) + ".txt");
    const fs::path e = scratch() / ("stderr" + std::to_string(counter++) + ".txt");
    const std::string cmd = env + (env.empty() ? "" : " ") + "\"" + kCli + "\" " + args + " > \"" + o.string() +
                            "\" 2> \"" + e.string() + "\"";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(o);
    r.err = slurp(e);
    return r;
}

Json demo_json(const std::string& name) { return Json::parse(slurp(demo(name))); }

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST(Extend, LineOnPlanePassesWithFamilyValidation) {
    const fs::path out = scratch() / "line.report.json";
    const CliRun r = cli_run("extend " + demo("line_on_plane") + " --out " + q(out));
    ASSERT_EQ(r.code, 0) << r.err;
    const Json rep = Json::parse(slurp(out));
    EXPECT_TRUE(rep["passed"].get<bool>());
    EXPECT_EQ(rep["command"], "extend");
    EXPECT_EQ(rep["result"]["branch"], "real_line");
    bool omega = false;
    for (const auto& v : rep["validations"])
        for (const auto& c : v["checks"])
            if (c["name"] == "omega.closure_containment") omega = c["status"] == "pass";
    EXPECT_TRUE(omega);
}

TEST(Extend, ReportGoesToStandardOutputByDefault) {
    const CliRun r = cli_run("extend " + demo("constant_plane") + " --checks construction");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(Json::parse(r.out)["problem"]["name"], "constant_plane");
}

TEST(Extend, MissingSubspaceIsBadInput) {
    Json j = demo_json("line_on_plane");
    j.erase("subspace");
    const fs::path f = scratch() / "no_subspace.json";
    write(f, j.dump());
    const CliRun r = cli_run("extend " + q(f));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("subspace"), std::string::npos) << r.err;
}

TEST(Extend, UnknownFieldIsBadInput) {
    Json j = demo_json("line_on_plane");
    j["grid"]["stpe"] = 1;
    const fs::path f = scratch() / "typo.json";
    write(f, j.dump());
    const CliRun r = cli_run("extend " + q(f));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("grid.stpe"), std::string::npos) << r.err;
}

TEST(Extend, MalformedJsonReportsLine) {
    const fs::path f = scratch() / "broken.json";
    write(f, "{\n  \"schema\": 1,\n  \"name\": \n}\n");
    const CliRun r = cli_run("extend " + q(f));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("line 4"), std::string::npos) << r.err;
}

TEST(Extend, FamilyFileNeedsVerify) {
    EXPECT_EQ(cli_run("extend " + demo("abs_family")).code, 2);
}

TEST(Extend, ConstructionFailureExitsThree) {
    Json j = demo_json("preserve_abs");
    j["gauge"] = Json{{"kind", "max_affine"}, {"pieces", Json::array({Json{{"a", {0, 0}}, {"b", 0}}})}};
    const fs::path f = scratch() / "flat_gauge.json";
    write(f, j.dump());
    const CliRun r = cli_run("extend " + q(f) + " --method preserve");
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("construction failed"), std::string::npos) << r.err;
}

TEST(Extend, PreserveOnConstantUsesConstantBranch) {
    const fs::path out = scratch() / "constant.report.json";
    const CliRun r = cli_run("extend " + demo("constant_plane") + " --method preserve --out " + q(out));
    ASSERT_EQ(r.code, 0) << r.err;
    const Json rep = Json::parse(slurp(out));
    EXPECT_EQ(rep["result"]["branch"], "constant");
    bool range_skipped = false;
    for (const auto& v : rep["validations"])
        for (const auto& c : v["checks"])
            if (c["name"] == "range_containment") range_skipped = c["status"] == "skipped";
    EXPECT_TRUE(range_skipped);
}

TEST(Extend, CsvGrid) {
    const fs::path csv = scratch() / "grid.csv";
    const CliRun r = cli_run("extend " + demo("projection_square") + " --method projection --checks construction --out " +
                       q(scratch() / "sq.json") + " --csv " + q(csv) + " --box -1 1 3");
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(slurp(csv));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "x1,x2,F,f");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        double a = 0, b = 0, F = 0;
        char c1 = 0, c2 = 0;
        std::istringstream ls(line);
        ls >> a >> c1 >> b >> c2 >> F;
        EXPECT_NEAR(F, a * a, 1e-9) << line;
        if (b == 0.0) EXPECT_NE(line.rfind(','), line.size() - 1) << "f missing on the subspace: " << line;
        else EXPECT_EQ(line.back(), ',') << "f present off the subspace: " << line;
    }
    EXPECT_EQ(rows, 9);
}

TEST(Extend, CsvNeedsBox) {
    EXPECT_EQ(cli_run("extend " + demo("line_on_plane") + " --csv " + q(scratch() / "x.csv")).code, 2);
}

TEST(Verify, JumpFamilyFailsWithAxiomWitness) {
    const fs::path wit = scratch() / "jump.witness.json";
    fs::remove(wit);
    const CliRun r = cli_run("verify " + demo("lsc_family") + " --out " + q(scratch() / "jump.json") + " --witness " + q(wit));
    ASSERT_EQ(r.code, 1) << r.err;
    const Json w = Json::parse(slurp(wit));
    ASSERT_FALSE(w["failed"].empty());
    const Json& c = w["failed"][0];
    EXPECT_EQ(c["name"], "closure_containment");
    EXPECT_DOUBLE_EQ(c["witness"]["alpha"].get<double>(), 0.2);
    EXPECT_DOUBLE_EQ(c["witness"]["beta"].get<double>(), 0.5);
    EXPECT_EQ(w["failed"].size(), 1u);
}

TEST(Verify, AbsoluteValueFamilyPasses) {
    const CliRun r = cli_run("verify " + demo("abs_family") + " --out " + q(scratch() / "absfam.json"));
    EXPECT_EQ(r.code, 0) << r.err;
}

TEST(Verify, ChecksSubsetIsHonoured) {
    const fs::path out = scratch() / "subset.json";
    const CliRun r = cli_run("verify " + demo("abs_on_plane") + " --checks quasiconvex,extension --samples 100 --segments 300 --out " +
                       q(out));
    ASSERT_EQ(r.code, 0) << r.err;
    const Json rep = Json::parse(slurp(out));
    ASSERT_EQ(rep["validations"].size(), 2u);
    EXPECT_EQ(rep["validations"][0]["subject"].get<std::string>().rfind("extension:", 0), 0u);
    EXPECT_EQ(rep["validations"][1]["subject"].get<std::string>().rfind("quasiconvex:", 0), 0u);
    EXPECT_EQ(rep["validations"][1]["budgets"]["segments"], 300);
}

TEST(Verify, UnknownCheckIsBadInput) {
    const CliRun r = cli_run("verify " + demo("abs_on_plane") + " --checks quasiconvex,telepathy");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("telepathy"), std::string::npos) << r.err;
}

TEST(Eval, OnSubspaceAgreement) {
    const fs::path pts = scratch() / "one.csv";
    write(pts, "3,0\n");
    const CliRun r = cli_run("eval " + demo("line_on_plane") + " --points " + q(pts));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(std::regex_match(r.out, std::regex("-?[0-9]+\\.[0-9]{9}\n"))) << r.out;
    EXPECT_NEAR(std::stod(r.out), 3.0, 1e-6);
}

TEST(Eval, OutsideBoundedDomainIsMarked) {
    const fs::path pts = scratch() / "outside.csv";
    write(pts, "x1,x2\n0.5,0\n5,0\n0,0.99\n");
    const CliRun r = cli_run("eval " + demo("arctan_box") + " --points " + q(pts));
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string a, b, c;
    std::getline(in, a);
    std::getline(in, b);
    std::getline(in, c);
    EXPECT_NEAR(std::stod(a), std::atan(0.5), 1e-6);
    EXPECT_EQ(b, "outside-domain");
    EXPECT_NE(c, "outside-domain");
}

TEST(Eval, HundredPointsKeepTheirOrder) {
    const fs::path pts = scratch() / "hundred.csv";
    std::ostringstream os;
    for (int k = 0; k < 100; ++k) os << (-2.0 + 0.04 * k) << "," << (k % 7) - 3 << "\n";
    write(pts, os.str());
    const CliRun r = cli_run("eval " + demo("projection_square") + " --method projection --points " + q(pts));
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string line;
    int k = 0;
    while (std::getline(in, line)) {
        const double x = -2.0 + 0.04 * k;
        EXPECT_NEAR(std::stod(line), x * x, 1e-9) << k;
        ++k;
    }
    EXPECT_EQ(k, 100);
}

TEST(Eval, BadPointIsAddressedByLine) {
    const fs::path pts = scratch() / "badpts.csv";
    write(pts, "1,0\n1,zero\n");
    const CliRun r = cli_run("eval " + demo("line_on_plane") + " --points " + q(pts));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST(Seed, FlagBeatsEnvironmentBeatsFile) {
    const std::string args = "verify " + demo("abs_family") + " --checks omega";
    EXPECT_EQ(Json::parse(cli_run(args).out)["seed"], 7);
    EXPECT_EQ(Json::parse(cli_run(args, "QEXT_SEED=5").out)["seed"], 5);
    EXPECT_EQ(Json::parse(cli_run(args + " --seed 9", "QEXT_SEED=5").out)["seed"], 9);
    EXPECT_EQ(cli_run(args, "QEXT_SEED=five").code, 2);
}

TEST(Seed, SameSeedSameReport) {
    const std::string args = "verify " + demo("abs_family") + " --seed 3";
    const CliRun a = cli_run(args), b = cli_run(args);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
}

TEST(Version, Printed) {
    const CliRun r = cli_run("--version");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find(kVersion), std::string::npos) << r.out;
}

TEST(RoundTrip, DemoFilesReparseIdentically) {
    int n = 0;
    for (const auto& e : fs::directory_iterator(kDemo)) {
        if (e.path().extension() != ".json") continue;
        ++n;
        const ProblemFile a = read_problem_file(e.path().string());
        const Json ja = to_json(a);
        const ProblemFile b = parse_problem(ja);
        EXPECT_EQ(to_json(b).dump(), ja.dump()) << e.path();
        EXPECT_EQ(parse_problem_text(ja.dump(2)).name, a.name);
    }
    EXPECT_GE(n, 6);
}

TEST(RoundTrip, ReparsedProblemEvaluatesTheSame) {
    const ProblemFile a = read_problem_file(demo("plane_in_space"));
    const ExtensionProblem pa = build_problem(a), pb = build_problem(parse_problem(to_json(a)));
    Sampler s(4);
    for (int i = 0; i < 50; ++i) {
        const Point x = s.in_box(VectorXd::Constant(3, -1.9), VectorXd::Constant(3, 1.9));
        EXPECT_EQ(evaluate(pa.g, x), evaluate(pb.g, x));
        EXPECT_EQ(member(pa.A, x), member(pb.A, x));
    }
}
