#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "vtax/calculators.hpp"
#include "vtax/cli.hpp"
#include "vtax/core_types.hpp"
#include "vtax/lecam.hpp"
#include "vtax/parallel.hpp"
#include "vtax/synth.hpp"

using namespace vtax;

namespace {

struct Run {
    int code = 0;
    std::string out, err;
};

Run run(std::vector<std::string> args, const std::string& input = "") {
    std::ostringstream out, err;
    std::istringstream in(input);
    Run r;
    r.code = cli::run(args, out, err, in);
    r.out = out.str();
    r.err = err.str();
    set_max_threads(0);
    return r;
}

nlohmann::json as_json(const Run& r) { return nlohmann::json::parse(r.out); }

std::string jsonl_sample(std::size_t m, std::uint64_t seed) {
    std::ostringstream s;
    write_jsonl(s, sample_world(sinusoid_world(0.05, 3, 0.15, seed), m).data);
    return s.str();
}

}  // namespace

TEST_CASE("documented examples") {
    const auto f = run({"floor", "--L", "1", "--eps", "0.15", "--n", "14042"});
    CHECK(f.code == 0);
    CHECK(f.out == "0.0220\n");
    const auto r = run({"recal-trap", "--gamma", "0.5", "--eps", "0.05", "--ece0", "0.10", "--M", "14000"});
    CHECK(r.code == 0);
    CHECK(r.out == "4\n");
}

TEST_CASE("exit codes") {
    const auto none = run({});
    CHECK(none.code == 1);
    CHECK(none.err.find("Usage") != std::string::npos);
    CHECK(run({"--help"}).code == 0);
    const auto bogus = run({"floor", "--L", "1", "--eps", "0.15", "--n", "10", "--bogus", "1"});
    CHECK(bogus.code == 1);
    CHECK(bogus.err.find("--bogus") != std::string::npos);
    const auto conv = run({"floor", "--L", "x", "--eps", "0.15", "--n", "10"});
    CHECK(conv.code == 1);
    CHECK(conv.err.find("--L") != std::string::npos);
    CHECK(run({"floor", "--L", "-1", "--eps", "0.15", "--n", "10"}).code == 1);
    CHECK(run({"audit", "/nonexistent/preds.jsonl"}).code == 2);
    CHECK(run({"audit", "-"}, "{\"item_id\":\"a\",\"confidence\":2}\n").code == 2);
    CHECK(run({"no-such-command"}).code == 1);
}

TEST_CASE("subcommands delegate to the library") {
    SUBCASE("floor") {
        const auto j = as_json(run({"--format", "json", "floor", "--L", "2.84", "--eps", "0.234", "--n", "817"}));
        const double lib = verification_floor(2.84, 0.234, 817);
        const double cli = j["ece_floor"].get<double>();
        CHECK(std::memcmp(&lib, &cli, sizeof lib) == 0);
        CHECK(j["acc_floor"].get<double>() == accuracy_floor(0.234, 817));
    }
    SUBCASE("compare") {
        const auto j = as_json(run({"--format", "json", "compare", "--a", "0.8", "--b", "0.78", "--n", "1000"}));
        CHECK(j["floor"].get<double>() == accuracy_floor(0.21, 1000));
        CHECK(j["verdict"] == "NO");
    }
    SUBCASE("lecam-constants") {
        const auto r = run({"--format", "csv", "lecam-constants", "--eps-grid", "0.1", "--bound", "exact-lrt"});
        CHECK(r.code == 0);
        std::ostringstream expect;
        expect << std::fixed;
        expect.precision(4);
        expect << lecam_constant(0.1, LeCamBound::ExactLRT).c1;
        CHECK(r.out.find("0.1,exact-lrt," + expect.str()) != std::string::npos);
    }
    SUBCASE("leaderboard fixture") {
        const auto j = as_json(run({"--format", "json", "leaderboard"}));
        CHECK(j["rows"].size() == 20);
    }
}

TEST_CASE("audit from stdin and from a file agree") {
    const auto data = jsonl_sample(800, 1);
    const auto a = run({"--seed", "3", "--format", "json", "audit", "-", "--replicates", "100", "--permutations",
                        "200"},
                       data);
    REQUIRE(a.code == 0);
    const auto j = nlohmann::json::parse(a.out);
    CHECK(j.contains("ece"));
    const std::string path = "cli_test_preds.jsonl";
    {
        std::ofstream f(path);
        f << data;
    }
    const auto b =
        run({"--seed", "3", "--format", "json", "audit", path, "--replicates", "100", "--permutations", "200"});
    std::remove(path.c_str());
    CHECK(a.out == b.out);
}

TEST_CASE("identical invocations give byte-identical output, at any thread count") {
    const std::vector<std::string> args{"--seed", "7",  "simulate", "phase", "--replicates",
                                        "200",    "--m-eps-grid", "0.1", "1", "10"};
    const auto a = run(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == run(args).out);
    auto one = args;
    one.insert(one.begin(), {"--threads", "1"});
    CHECK(run(one).out == a.out);
    auto other = args;
    other[1] = "8";
    CHECK(run(other).out != a.out);
}

TEST_CASE("sequential consumes a JSONL stream") {
    const auto r = run({"sequential", "--delta", "0.05"}, jsonl_sample(300, 2));
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "t,ece,radius,stopped");
    int rows = 0;
    while (std::getline(lines, line))
        if (!line.empty() && line[0] != '#') ++rows;
    CHECK(rows == 300);
}

TEST_CASE("output file") {
    const std::string path = "cli_test_out.txt";
    const auto r = run({"--output", path, "floor", "--L", "1", "--eps", "0.15", "--n", "14042"});
    CHECK(r.code == 0);
    CHECK(r.out.empty());
    std::ifstream f(path);
    std::string s;
    std::getline(f, s);
    CHECK(s == "0.0220");
    std::remove(path.c_str());
}
