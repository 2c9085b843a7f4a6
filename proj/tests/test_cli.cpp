#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "generators.hpp"
#include "tangle/dsl.hpp"
#include "tangle/rewrite.hpp"

using namespace tangle;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
};

RunResult run_shell(const std::string& cmd) {
    RunResult r;
    FILE* p = popen((cmd + " 2>&1").c_str(), "r");
    if (!p) throw std::runtime_error("popen failed");
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    int st = pclose(p);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string cli() { return std::string("'") + TANGLE_CLI_PATH + "'"; }

RunResult run_cli(const std::string& args) { return run_shell(cli() + " " + args); }

std::string q(const std::string& path) { return "'" + path + "'"; }

std::string fxp(const std::string& name) { return gen::fixture_path(name); }

fs::path write_temp(const std::string& name, const std::string& text) {
    fs::path p = fs::temp_directory_path() / name;
    std::ofstream(p) << text;
    return p;
}

} // namespace

TEST_CASE("validate exit codes") {
    CHECK(run_cli("validate " + q(fxp("sec45.tmd"))).code == 0);
    CHECK(run_cli("validate " + q(fxp("sec45.tmd")) + " --json").code == 0);

    auto missing = run_cli("validate /no/such/file.tmd --json");
    CHECK(missing.code == 1);
    CHECK(json::parse(missing.out)["error"]["kind"] == "IoError");

    fs::path bad = write_temp("tangle_cli_bad.tmd", "rack dihedral 3\nbogus line\n");
    auto r = run_cli("validate " + q(bad.string()));
    CHECK(r.code == 3);
    auto rj = run_cli("validate " + q(bad.string()) + " --json");
    CHECK(rj.code == 3);
    json e = json::parse(rj.out);
    CHECK(e["error"]["kind"] == "SyntaxError");
    CHECK(e["error"]["message"].get<std::string>().find("2:") != std::string::npos);

    fs::path broken = write_temp("tangle_cli_broken.tmd",
                                 "rack dihedral 3\nprocess open P: a b\n"
                                 "colour a 0\ncolour b 1\n");
    auto v = run_cli("validate " + q(broken.string()) + " --json");
    CHECK(v.code == 1);
    json vr = json::parse(v.out);
    CHECK(vr["ok"] == false);
    CHECK_FALSE(vr["errors"].empty());

    // warnings alone do not fail validation
    fs::path warn = write_temp("tangle_cli_warn.tmd",
                               "rack dihedral 3\nprocess open P: a b\ncolour a 0\n");
    auto w = run_cli("validate " + q(warn.string()) + " --json");
    CHECK(w.code == 0);
    json wr = json::parse(w.out);
    CHECK(wr["ok"] == true);
    CHECK_FALSE(wr["warnings"].empty());
}

TEST_CASE("usage errors exit 2") {
    CHECK(run_cli("frobnicate x.tmd").code == 2);
    CHECK(run_cli("move " + q(fxp("minimal.tmd"))).code == 2); // --kind is required
    CHECK(run_cli("validate").code == 2);
    CHECK(run_cli("").code == 2);
}

TEST_CASE("invariants output is exact and stable") {
    auto r = run_cli("invariants " + q(fxp("sec45.tmd")) + " --json");
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    CHECK(j["rack"] == "dihedral 3");
    CHECK(j["reduced_graph"] == json::array({0, 2}));
    CHECK(j["linking_matrix_framed"] == json::parse("[[3,1],[0,3]]"));
    CHECK(j["linking_matrix_unframed"] == json::parse("[[0,1],[0,0]]"));
    CHECK(j["nonunit_syntactic"].is_number());

    auto again = run_cli("invariants " + q(fxp("sec45.tmd")) + " --json");
    CHECK(again.out == r.out); // byte-stable

    auto text = run_cli("invariants " + q(fxp("sec45.tmd")));
    CHECK(text.code == 0);
    CHECK(text.out.find("linking_matrix_framed") != std::string::npos);
}

TEST_CASE("canonicalize") {
    std::string fixture = gen::fixture_text("square2.tmd");
    auto r = run_cli("canonicalize " + q(fxp("square2.tmd")));
    CHECK(r.code == 0);
    CHECK(r.out == fixture);

    auto piped = run_shell("cat " + q(fxp("square2.tmd")) + " | " + cli() +
                           " canonicalize -");
    CHECK(piped.code == 0);
    CHECK(piped.out == fixture);

    // scrambled but equivalent input canonicalizes to the fixture bytes
    std::string scrambled = "# comment\nrack dihedral 3\n"
                            "process closed S: x_l y_a y_b x_r xy y_c yx\n"
                            "colour yx 2\ncolour x_l 0\n"
                            "interaction agent yx { x_l -> y_a - }\n"
                            "interaction agent y_b { x_r -> xy + }\n"
                            "interaction agent x_l { y_c -> yx - }\n"
                            "interaction agent xy { y_b -> x_r + }\n"
                            "interaction agent y_a { yx -> x_l - }\n"
                            "interaction agent x_r { xy -> y_c + }\n"
                            "colour y_a 1\ncolour y_b 1\ncolour x_r 0\n"
                            "colour xy 2\ncolour y_c 1\n";
    fs::path p = write_temp("tangle_cli_scrambled.tmd", scrambled);
    auto c = run_cli("canonicalize " + q(p.string()));
    CHECK(c.code == 0);
    CHECK(c.out == fixture);
}

TEST_CASE("move listing and application") {
    auto list = run_cli("move " + q(fxp("square2.tmd")) + " --kind Stabilize --list");
    REQUIRE(list.code == 0);
    std::istringstream in(list.out);
    std::string line;
    int count = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Move mv = move_from_string(line);
        CHECK(mv.kind == MoveKind::Stabilize);
        ++count;
    }
    CHECK(count >= 1);

    Machine disp = parse(gen::fixture_text("r3_display.tmd"));
    Machine expect = apply_move(disp, Move{MoveKind::R3Forward, 1, 0, -1, 0, 0});
    auto r = run_cli("move " + q(fxp("r3_display.tmd")) +
                     " --kind R3Forward --site 1,0");
    REQUIRE(r.code == 0);
    CHECK(r.out == serialize(expect));

    auto stale = run_cli("move " + q(fxp("minimal.tmd")) +
                         " --kind R2Remove --site 5,6 --json");
    CHECK(stale.code == 1);
    CHECK(json::parse(stale.out)["error"]["kind"] == "StaleSite");
}

TEST_CASE("walks are reproducible from the trace") {
    fs::path trace = fs::temp_directory_path() / "tangle_cli_trace.txt";
    std::string base = "walk " + q(fxp("sec45.tmd")) + " --steps 25 --seed 5 " +
                       "--kinds R2Insert,R2Remove,R3Forward,R3Backward " +
                       "--trace-out " + q(trace.string());
    auto a = run_cli(base);
    REQUIRE(a.code == 0);
    auto b = run_cli(base);
    CHECK(a.out == b.out);

    Machine cur = parse(gen::fixture_text("sec45.tmd"));
    std::ifstream tf(trace);
    REQUIRE(tf.good());
    std::string line;
    int steps = 0;
    while (std::getline(tf, line)) {
        if (line.empty()) continue;
        cur = apply_move(cur, move_from_string(line));
        ++steps;
    }
    CHECK(steps == 25);
    CHECK(serialize(cur) == a.out);
}

TEST_CASE("probe names the separating invariant") {
    auto d = run_cli("probe " + q(fxp("fig_div_left.tmd")) + " " +
                     q(fxp("fig_div_right.tmd")));
    REQUIRE(d.code == 0);
    CHECK(d.out.find("distinguished") != std::string::npos);
    CHECK(d.out.find("linking_reduced_framed") != std::string::npos);

    auto dj = run_cli("probe " + q(fxp("fig_div_left.tmd")) + " " +
                      q(fxp("fig_div_right.tmd")) + " --json");
    json j = json::parse(dj.out);
    CHECK(j["distinguished"] == true);
    CHECK(j["witness"] == "linking_reduced_framed");

    auto same = run_cli("probe " + q(fxp("square2.tmd")) + " " +
                        q(fxp("square2.tmd")) + " --json");
    json s = json::parse(same.out);
    CHECK(s["distinguished"] == false);
    CHECK(same.code == 0);
}

TEST_CASE("factorize reports blocks and bounds") {
    auto r = run_cli("factorize " + q(fxp("square2.tmd")) + " --depth 0 --json");
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    CHECK(j["is_unit"] == false);
    CHECK(j["bounds"]["lower"] == 2);
    CHECK(j["bounds"]["upper"] == 6);
    CHECK(j["prime_blocks"] == json::parse("[[0,1,5],[2,3,4]]"));
    CHECK(j["splits"].size() == 1);

    auto m = run_cli("factorize " + q(fxp("m3131.tmd")) + " --depth 0 --json");
    json mj = json::parse(m.out);
    CHECK(mj["splits"].size() == 2);
    CHECK(mj["prime_blocks"] == json::parse("[[0,1],[2,3]]"));
    CHECK(mj["unit_blocks"] == json::parse("[false,false]"));

    auto text = run_cli("factorize " + q(fxp("m3131.tmd")) + " --depth 0");
    CHECK(text.code == 0);
    CHECK(text.out.find("prime") != std::string::npos);
}

TEST_CASE("capacity respects kmax and the budget variable") {
    auto r = run_cli("capacity " + q(fxp("sec47.tmd")) + " --kmax 2 --json");
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    CHECK(j["cap"] == json::array({1, 1}));
    CHECK(j["rate_lower"] == "1.000000");
    CHECK(j["truncated"] == false);

    auto t = run_shell("TANGLE_BUDGET=20 " + cli() + " capacity " +
                       q(fxp("sec47.tmd")) + " --kmax 5 --json");
    REQUIRE(t.code == 0);
    json tj = json::parse(t.out);
    CHECK(tj["truncated"] == true);
    CHECK(tj["cap"] == json::array({1, 1}));
}
