#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "generators.hpp"
#include "oracles.hpp"
#include "tangle/dsl.hpp"
#include "tangle/errors.hpp"
#include "tangle/invariants.hpp"
#include "tangle/rewrite.hpp"

using namespace tangle;

namespace {

Machine fx(const std::string& name) { return parse(gen::fixture_text(name)); }

Machine rename_registers(const Machine& m,
                         const std::map<std::string, std::string>& ren) {
    Draft d = m.to_draft();
    auto fix = [&](std::string& s) {
        auto it = ren.find(s);
        if (it != ren.end()) s = it->second;
    };
    for (auto& p : d.processes)
        for (auto& r : p.regs) fix(r);
    for (auto& ix : d.interactions) {
        fix(ix.agent);
        for (auto& [from, to, sign] : ix.patients) {
            fix(from);
            fix(to);
            (void)sign;
        }
    }
    std::map<std::string, int> cols;
    for (auto& [name, c] : d.colours) {
        std::string n = name;
        fix(n);
        cols[n] = c;
    }
    d.colours = std::move(cols);
    return d.build();
}

} // namespace

TEST_CASE("move strings round-trip for every kind") {
    std::vector<Move> moves = {
        {MoveKind::R1Insert, 0, 2, 1, -1, 0},   {MoveKind::R1Remove, 3, -1, -1, 0, 0},
        {MoveKind::R2Insert, 0, 1, 5, 1, 0},    {MoveKind::R2Remove, 2, 4, -1, 0, 0},
        {MoveKind::R3Forward, 1, 2, -1, 0, 0},  {MoveKind::R3Backward, 2, 1, -1, 0, 0},
        {MoveKind::Stabilize, 4, 1, -1, 0, 0},  {MoveKind::Destabilize, 0, 3, 1, 0, 0},
        {MoveKind::FalseJoin, 0, 1, -1, 0, 0},  {MoveKind::FalseResolve, 2, -1, -1, 0, 5},
        {MoveKind::RackAutomorphism, 1, 0, -1, 0, 0}};
    for (const Move& mv : moves) {
        CAPTURE(to_string(mv));
        CHECK(move_from_string(to_string(mv)) == mv);
        CHECK(move_kind_from_string(to_string(mv.kind)) == mv.kind);
    }
    CHECK_THROWS_AS(move_kind_from_string("NotAMove"), BadParameter);
    CHECK(is_equivalence(MoveKind::R3Forward));
    CHECK_FALSE(is_equivalence(MoveKind::FalseJoin));
    CHECK_FALSE(is_equivalence(MoveKind::FalseResolve));
}

TEST_CASE("second move insert and remove are mutually inverse") {
    int tested = 0;
    for (std::uint64_t seed = 1; seed <= 50 && tested < 30; ++seed) {
        Machine m = gen::random_machine(seed);
        auto sites = enumerate_sites(m, {MoveKind::R2Insert});
        if (sites.empty()) continue;
        ++tested;
        CAPTURE(seed);
        for (std::size_t i = 0; i < sites.size() && i < 4; ++i) {
            Machine after = apply_move(m, sites[i]);
            CHECK(after.validate().ok());
            auto removes = enumerate_sites(after, {MoveKind::R2Remove});
            bool restored = false;
            for (const Move& rm : removes)
                if (canonical_tmd(apply_move(after, rm)) == canonical_tmd(m)) {
                    restored = true;
                    break;
                }
            CHECK(restored);
        }
    }
    CHECK(tested >= 10);
}

TEST_CASE("unit second-move insertions preserve the fingerprint") {
    Machine m = fx("sec45.tmd");
    auto base = fingerprint(m).canonical_bytes();
    auto sites = enumerate_sites(m, {MoveKind::R2Insert});
    REQUIRE_FALSE(sites.empty());
    for (const Move& mv : sites) {
        Machine after = apply_move(m, mv);
        CHECK(fingerprint(after).canonical_bytes() == base);
    }
}

TEST_CASE("second move guards") {
    // agent choice -1 means act with the source register itself
    Machine m = fx("minimal.tmd");
    auto sites = enumerate_sites(m, {MoveKind::R2Insert});
    REQUIRE_FALSE(sites.empty());
    bool has_self = std::any_of(sites.begin(), sites.end(),
                                [](const Move& s) { return s.c == -1; });
    CHECK(has_self);

    // nonunit agents only appear when the matched filter is off
    EnumOptions loose;
    loose.unit_r2_only = false;
    auto all = enumerate_sites(m, {MoveKind::R2Insert}, loose);
    CHECK(all.size() >= sites.size());

    // removing a pair whose agent colour disagrees with the strand is not listed
    // by default but still applies when forced, so staleness must be caught
    Move bogus{MoveKind::R2Remove, 97, 98, -1, 0, 0};
    CHECK_THROWS_AS(apply_move(m, bogus), StaleSite);
}

TEST_CASE("third move on the display machine") {
    Machine m = fx("r3_display.tmd");
    EnumOptions loose;
    loose.matched_r3_only = false;
    auto fwd = enumerate_sites(m, {MoveKind::R3Forward}, loose);
    REQUIRE(fwd.size() == 1);

    // the matched filter rejects it: the pusher colour differs from the agent's
    CHECK(enumerate_sites(m, {MoveKind::R3Forward}).empty());

    Machine after = apply_move(m, fwd[0]);
    CHECK(after.validate().ok());
    CHECK(after.colour(after.register_id("m1")) == 1); // 0 . 3 = 1 in dihedral 5
    CHECK(after.colour(after.register_id("m2")) == 4); // 2 . 3 = 4
    CHECK(after.colour(after.register_id("t1")) == m.colour(m.register_id("t1")));
    CHECK(after.colour(after.register_id("t2")) == m.colour(m.register_id("t2")));

    auto back = enumerate_sites(after, {MoveKind::R3Backward}, loose);
    bool restored = false;
    for (const Move& mv : back)
        if (canonical_tmd(apply_move(after, mv)) == canonical_tmd(m)) restored = true;
    CHECK(restored);
}

TEST_CASE("first move inserts and removes kinks") {
    Machine m = fx("minimal.tmd");
    auto sites = enumerate_sites(m, {MoveKind::R1Insert});
    REQUIRE_FALSE(sites.empty());
    for (std::size_t i = 0; i < sites.size() && i < 4; ++i) {
        Machine after = apply_move(m, sites[i]);
        CHECK(after.validate().ok());
        CHECK(after.interactions().size() == m.interactions().size() + 1);
        auto kinks = enumerate_sites(after, {MoveKind::R1Remove});
        bool restored = false;
        for (const Move& rm : kinks)
            if (canonical_tmd(apply_move(after, rm)) == canonical_tmd(m)) restored = true;
        CHECK(restored);
    }

    Draft d;
    d.rack = std::make_shared<Rack>(Rack::constant_action({1, 2, 0}));
    d.processes.push_back({"P", false, {"a", "b"}});
    d.colours = {{"a", 0}, {"b", 0}};
    Machine rackonly = d.build();
    auto s2 = enumerate_sites(rackonly, {MoveKind::R1Insert});
    CHECK(s2.empty()); // kinks need the idempotent law
    Move forced{MoveKind::R1Insert, 0, 0, 0, 1, 0};
    CHECK_THROWS_AS(apply_move(rackonly, forced), QuandleRequired);
}

TEST_CASE("stabilize and destabilize round-trip") {
    Machine m = fx("square2.tmd");
    auto bytes = canonical_tmd(m);
    for (int keep : {0, 1}) {
        auto sites = enumerate_sites(m, {MoveKind::Stabilize});
        REQUIRE_FALSE(sites.empty());
        for (std::size_t i = 0; i < sites.size() && i < 3; ++i) {
            Move mv = sites[i];
            mv.b = keep;
            Machine after = apply_move(m, mv);
            CHECK(after.validate().ok());
            CHECK(after.register_count() == m.register_count() + 1);
            auto shrink = enumerate_sites(after, {MoveKind::Destabilize});
            bool restored = false;
            for (const Move& rm : shrink)
                if (canonical_tmd(apply_move(after, rm)) == bytes) restored = true;
            CHECK(restored);
        }
    }

    // destabilize refuses to drop a register that acts somewhere
    Machine disp = fx("r3_display.tmd");
    auto shrink = enumerate_sites(disp, {MoveKind::Destabilize});
    for (const Move& mv : shrink) {
        EdgeRef e{mv.a, mv.b};
        int victim = mv.c == 0 ? disp.edge_from(e) : disp.edge_to(e);
        CHECK(disp.agencies(victim).empty());
        CHECK(disp.is_plain(e));
    }
}

TEST_CASE("false join and false resolve convert between the square machines") {
    Machine sq2 = fx("square2.tmd");
    Machine sq1 = fx("square1.tmd");

    // join the two y agents of square2 into the single y_top of square1
    Move join{MoveKind::FalseJoin, 0, 1, -1, 0, 0}; // plain edge y_a -> y_b
    Machine joined = apply_move(sq2, join);
    CHECK(joined.false_moves() == 1);
    Machine renamed = rename_registers(joined, {{"y_a", "y_top"}, {"y_c", "y_bot"}});
    CHECK(canonical_tmd(colour_suppress(renamed)) ==
          canonical_tmd(colour_suppress(sq1)));
    CHECK(canonical_tmd(renamed) == canonical_tmd(sq1));

    // resolve y_top of square1 back apart; mask bit keeps agency 1 on the original
    int y_top = sq1.register_id("y_top");
    REQUIRE(sq1.agencies(y_top).size() == 2);
    Move split{MoveKind::FalseResolve, y_top, -1, -1, 0, 0b10};
    Machine resolved = apply_move(sq1, split);
    CHECK(resolved.false_moves() == 1);
    Machine back = rename_registers(
        resolved, {{"y_top", "y_a"}, {"y_top_s1", "y_b"}, {"y_bot", "y_c"}});
    CHECK(canonical_tmd(back) == canonical_tmd(sq2));

    CHECK_THROWS_AS(apply_move(sq2, Move{MoveKind::FalseResolve, 99, -1, -1, 0, 1}),
                    StaleSite);
}

TEST_CASE("rack automorphism moves") {
    Machine m = fx("sec45.tmd");
    auto sites = enumerate_sites(m, {MoveKind::RackAutomorphism});
    REQUIRE_FALSE(sites.empty());
    auto base = fingerprint(m);
    for (const Move& mv : sites) {
        Machine after = apply_move(m, mv);
        CHECK(after.validate().ok());
        auto v = distinguish(m, after);
        CHECK_FALSE(v.distinguished);
    }

    // componentwise action is only offered on interaction-closed components
    Draft d;
    d.rack = std::make_shared<Rack>(Rack::dihedral(3));
    d.processes.push_back({"C1", true, {"x"}});
    d.processes.push_back({"C2", true, {"y"}});
    Draft::I i1, i2;
    i1.agent = "x";
    i1.patients.emplace_back("x", "x", +1);
    i2.agent = "y";
    i2.patients.emplace_back("y", "y", +1);
    d.interactions = {i1, i2};
    d.colours = {{"x", 0}, {"y", 1}};
    Machine loops = d.build();
    CHECK(loops.component_count() == 2);
    CHECK(fx("borromean_unit.tmd").component_count() == 1); // agents chain the processes
    auto comp_sites = enumerate_sites(loops, {MoveKind::RackAutomorphism});
    bool saw_component = false;
    for (const Move& mv : comp_sites)
        if (mv.c >= 0) {
            saw_component = true;
            Machine after = apply_move(loops, mv);
            CHECK(after.validate().ok());
        }
    CHECK(saw_component);

    Move only0{MoveKind::RackAutomorphism, 1, 0, 0, 0, 0}; // q=1 forward on component 0
    Machine moved = apply_move(loops, only0);
    CHECK(moved.colour(moved.register_id("x")) == 2); // 0 . 1 = 2 in dihedral 3
    CHECK(moved.colour(moved.register_id("y")) == 1); // other component untouched

    // components sharing colours get no componentwise sites: relabelling one
    // side would alter which colourings collide instead of renaming them
    d.colours = {{"x", 0}, {"y", 0}};
    Machine shared = d.build();
    for (const Move& mv : enumerate_sites(shared, {MoveKind::RackAutomorphism}))
        CHECK(mv.c < 0);
}

TEST_CASE("random walks are deterministic and replayable") {
    Machine m = fx("sec45.tmd");
    std::vector<MoveKind> kinds = {MoveKind::R2Insert, MoveKind::R2Remove,
                                   MoveKind::R3Forward, MoveKind::R3Backward};
    WalkResult a = random_walk(m, 40, 7, kinds);
    WalkResult b = random_walk(m, 40, 7, kinds);
    CHECK(canonical_tmd(a.machine) == canonical_tmd(b.machine));
    CHECK(a.trace == b.trace);

    WalkResult c = random_walk(m, 40, 8, kinds);
    CHECK((a.trace != c.trace || canonical_tmd(a.machine) == canonical_tmd(c.machine)));

    // replaying the trace step by step reproduces the result
    Machine cur = m;
    for (const Move& mv : a.trace) cur = apply_move(cur, mv);
    CHECK(canonical_tmd(cur) == canonical_tmd(a.machine));

    WalkResult zero = random_walk(m, 0, 1, kinds);
    CHECK(canonical_tmd(zero.machine) == canonical_tmd(m));
    CHECK(zero.trace.empty());

    WalkResult starved = random_walk(fx("minimal.tmd"), 5, 1, {MoveKind::R2Remove});
    CHECK(starved.starved);
    CHECK(starved.trace.empty());
}

TEST_CASE("walks preserve the fingerprint") {
    std::vector<MoveKind> kinds = {MoveKind::R2Insert, MoveKind::R2Remove,
                                   MoveKind::R3Forward, MoveKind::R3Backward};
    for (const char* f : {"sec45.tmd", "square2.tmd", "sum21_sum.tmd"}) {
        CAPTURE(f);
        Machine m = fx(f);
        auto before = fingerprint(m).canonical_bytes();
        WalkResult w = random_walk(m, 100, 3, kinds);
        CHECK(w.machine.validate().ok());
        CHECK(fingerprint(w.machine).canonical_bytes() == before);
    }
}

TEST_CASE("stale sites are rejected across machines") {
    Machine a = fx("square2.tmd");
    Machine b = fx("minimal.tmd");
    auto sites = enumerate_sites(a, {MoveKind::Stabilize});
    REQUIRE_FALSE(sites.empty());
    Move mv = sites.back();
    mv.a = 42; // no such register in either machine
    CHECK_THROWS_AS(apply_move(b, mv), StaleSite);
}
