#include "doctest.h"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "bcmi/commands.hpp"
#include "bcmi/errors.hpp"

using namespace bcmi;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
};

// Runs the installed binary through the shell; stderr is folded into out.
Run run(const std::string& args, const std::string& env = "") {
    const char* exe = std::getenv("BCMI_EXE");
    REQUIRE_MESSAGE(exe, "BCMI_EXE is not set");
    std::string cmd = env + (env.empty() ? "" : " ") + "'" + exe + "' " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe);
    std::string out;
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0)
        out.append(buf.data(), n);
    int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

bool has(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

fs::path scratch(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("bcmi_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir / name;
}

} // namespace

TEST_CASE("guarded maps errors to exit codes") {
    std::ostringstream err;
    CHECK(guarded([] { return 0; }, err) == kExitOk);
    CHECK(guarded([]() -> int { throw DomainError("d"); }, err) == kExitDomain);
    CHECK(guarded([]() -> int { throw PrecisionError("p"); }, err) == kExitPrecision);
    CHECK(guarded([]() -> int { throw AmbiguityError("a", 100); }, err) == kExitPrecision);
    CHECK(guarded([]() -> int { throw CorruptOutputError("c"); }, err) == kExitDomain);
    CHECK(guarded([]() -> int { throw NumericError("n"); }, err) == kExitOther);
    CHECK(has(err.str(), "domain error: d"));
}

TEST_CASE("analyze base 7") {
    Run r = run("analyze --base 7");
    CHECK(r.code == 0);
    CHECK(has(r.out, "PERS"));
    CHECK(has(r.out, "2,454,630"));
    CHECK(has(r.out, "0.682545"));
}

TEST_CASE("analyze base 2 on a custom grid") {
    Run r = run("analyze --base 2 --n-grid 1000,5000,10000");
    CHECK(r.code == 0);
    CHECK(has(r.out, "0.369142"));
    CHECK(has(r.out, "0.018635"));
    CHECK(has(r.out, "0.005599"));
}

TEST_CASE("analyze JSON follows the record schema") {
    Run r = run("analyze --base 3 --json");
    REQUIRE(r.code == 0);
    nlohmann::json j = nlohmann::json::parse(r.out);
    SurveyRecord rec = record_from_json(j);
    CHECK(rec.base == 3);
    CHECK(rec.grid == kBaselineGrid);
    CHECK(j["alpha"].get<std::string>().rfind("0.4771212547196624372950", 0) == 0);
    j.erase("alpha");
    CHECK(to_json(rec) == j);
}

TEST_CASE("analyze rejects rational logarithms and bad input") {
    Run r = run("analyze --base 10");
    CHECK(r.code == kExitDomain);
    CHECK(has(r.out, "rational"));
    CHECK(run("analyze --base 7 --n-grid 500,x").code == kExitDomain);
    CHECK(run("analyze").code == kExitDomain);
    CHECK(run("frobnicate").code == kExitDomain);
}

TEST_CASE("precision from the environment") {
    Run r = run("analyze --base 7 --json", "BENFORD_PRECISION=80");
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["digits"] == 80);
    CHECK(run("analyze --base 7", "BENFORD_PRECISION=abc").code == kExitDomain);
    CHECK(run("analyze --base 7 --precision 20").code == kExitPrecision);
}

TEST_CASE("verify passes and detects tampering") {
    Run r = run("verify");
    CHECK(r.code == 0);
    CHECK(has(r.out, "all checks passed"));
    CHECK_FALSE(has(r.out, "FAIL"));

    VerifyArgs args;
    args.tamper = [](const std::string& seq, std::uint64_t n, TripleCounts& c) {
        if (seq == "3^n" && n == 5000) {
            c.counts[0] += 1;
            c.counts[1] -= 1;
        }
    };
    std::ostringstream out;
    CHECK(cmd_verify(args, out) == kExitVerifyFailed);
    VerifyReport rep = run_verify(args);
    int failed = 0;
    for (const VerifyCell& c : rep.cells)
        if (!c.pass) {
            ++failed;
            CHECK(c.sequence == "3^n");
            CHECK(c.n == 5000);
        }
    CHECK(failed == 1);
    CHECK(has(out.str(), "FAIL  cmi 3^n"));
}

TEST_CASE("fit from CSV") {
    fs::path csv = scratch("decay.csv");
    {
        std::ofstream f(csv);
        f << "N,I\n";
        for (double n : {500.0, 1000.0, 2000.0, 5000.0, 10000.0})
            f << n << ',' << 1.0 * std::pow(n, -1.0) << '\n';
    }
    Run r = run("fit --input '" + csv.string() + "' --offset 0 --target 0.1 --json");
    REQUIRE(r.code == 0);
    nlohmann::json j = nlohmann::json::parse(r.out);
    CHECK(j["beta"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(j["c"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(j["n_threshold"] == 10);

    Run text = run("fit --input '" + csv.string() + "' --offset 0 --target 0.1");
    CHECK(text.code == 0);
    CHECK(has(text.out, "N(I < 0.1) 10"));
    CHECK(run("fit --input /nonexistent/x.csv").code == kExitDomain);
    fs::remove_all(csv.parent_path());
}

TEST_CASE("discrepancy report") {
    DiscrepancyArgs a;
    a.base = 7;
    a.n = 10000;
    DiscrepancyReport rep = discrepancy_report(a);
    CHECK(rep.dstar > 0.0);
    CHECK(rep.dstar <= rep.bound);
    // Quotients a_1..a_7 of log10 7 over q_k <= 10^4: 1 + 5 + 2 + 5 + 6 + 1 + 4813.
    CHECK(rep.bound == doctest::Approx(3.0 * 4833 / 10000));
    Run r = run("discrepancy --base 2 --n 1000");
    CHECK(r.code == 0);
    CHECK(has(r.out, "D*_N"));
}

TEST_CASE("hessian report") {
    Run r = run("hessian --json");
    REQUIRE(r.code == 0);
    nlohmann::json j = nlohmann::json::parse(r.out);
    CHECK(j["tangent"].contains("op_norm"));
    CHECK(j["tangent"]["n_pos"].get<int>() + j["tangent"]["n_neg"].get<int>() + j["tangent"]["n_null"].get<int>() ==
          899);
    CHECK(j["markov"].contains("l2_nearest_distance"));
}

TEST_CASE("survey command writes, refuses to clobber and resumes") {
    fs::path out = scratch("s.jsonl");
    fs::remove(out);
    std::string base = "survey --range 2:12 --jobs 1 --out '" + out.string() + "'";
    Run first = run(base);
    CHECK(first.code == 0);
    CHECK(load_records(out).size() == 10);
    CHECK(run(base).code == kExitDomain);
    Run again = run(base + " --resume");
    CHECK(again.code == 0);
    CHECK(has(again.out, "resumed: 10"));
    {
        std::ofstream app(out, std::ios::app);
        app << "{broken";
    }
    CHECK(run(base + " --resume").code == kExitDomain);
    CHECK(run(base + " --resume --force").code == 0);
    fs::remove_all(out.parent_path());
}
