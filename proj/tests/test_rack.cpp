#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <set>

#include "oracles.hpp"
#include "tangle/errors.hpp"
#include "tangle/rack.hpp"

using namespace tangle;

namespace {

std::vector<std::vector<int>> s3_table() {
    std::vector<std::array<int, 3>> el = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                          {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    auto index = [&](const std::array<int, 3>& p) {
        for (std::size_t i = 0; i < el.size(); ++i)
            if (el[i] == p) return static_cast<int>(i);
        return -1;
    };
    std::vector<std::vector<int>> t(6, std::vector<int>(6));
    for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) {
            std::array<int, 3> c;
            for (int x = 0; x < 3; ++x) c[x] = el[a][el[b][x]];
            t[a][b] = index(c);
        }
    return t;
}

void check_axioms(const Rack& r) {
    int n = r.size();
    for (int y = 0; y < n; ++y) { // each right action is a bijection
        std::set<int> img;
        for (int x = 0; x < n; ++x) img.insert(r.op(x, y));
        CHECK(static_cast<int>(img.size()) == n);
        for (int x = 0; x < n; ++x) {
            CHECK(r.inv(r.op(x, y), y) == x);
            CHECK(r.op(r.inv(x, y), y) == x);
        }
    }
    for (int x = 0; x < n; ++x) // self-distributivity
        for (int y = 0; y < n; ++y)
            for (int z = 0; z < n; ++z)
                CHECK(r.op(r.op(x, y), z) == r.op(r.op(x, z), r.op(y, z)));
    bool diag = true;
    for (int x = 0; x < n; ++x) diag = diag && r.op(x, x) == x;
    CHECK(r.is_quandle() == diag);
}

} // namespace

TEST_CASE("dihedral tables") {
    auto r = Rack::dihedral(3);
    CHECK(r.size() == 3);
    CHECK(r.name() == "dihedral 3");
    CHECK(r.is_quandle());
    CHECK(r.op(0, 0) == 0);
    CHECK(r.op(0, 1) == 2);
    CHECK(r.op(1, 0) == 2);
    CHECK(r.op(2, 1) == 0);
    // involutive: x <| y = x |> y
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 3; ++y) CHECK(r.inv(x, y) == r.op(x, y));
    CHECK(r.act(0, 1, +1) == r.op(0, 1));
    CHECK(r.act(0, 1, -1) == r.inv(0, 1));
}

TEST_CASE("alexander tables") {
    auto r = Rack::alexander(5, 2);
    CHECK(r.name() == "alexander 5 2");
    CHECK(r.is_quandle());
    // x |> y = (1-t)x + ty
    CHECK(r.op(1, 0) == 4);
    CHECK(r.op(0, 1) == 2);
    CHECK(r == Rack::dihedral(5)); // same table, different declaration

    auto r73 = Rack::alexander(7, 3);
    CHECK(r73.is_quandle());
    for (int x = 0; x < 7; ++x)
        for (int y = 0; y < 7; ++y) CHECK(r73.op(x, y) == ((-2 * x + 3 * y) % 7 + 7) % 7);

    CHECK_THROWS_AS(Rack::alexander(4, 2), AxiomViolation);  // t not a unit
    CHECK_THROWS_AS(Rack::alexander(10, 7), AxiomViolation); // 1-t not a unit
}

TEST_CASE("constant action and trivial racks") {
    auto tr = Rack::trivial(4);
    CHECK(tr.name() == "trivial 4");
    CHECK(tr.is_quandle());
    for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 4; ++y) CHECK(tr.op(x, y) == x);

    auto ca = Rack::constant_action({1, 2, 0});
    CHECK(ca.name() == "constant 1 2 0");
    CHECK_FALSE(ca.is_quandle()); // genuine rack, not a quandle
    CHECK(ca.op(0, 2) == 1);
    CHECK(ca.inv(1, 2) == 0);
    check_axioms(ca);

    CHECK(Rack::constant_action({0, 1, 2}).is_quandle());
    CHECK_THROWS_AS(Rack::constant_action({0, 0, 1}), AxiomViolation);
    CHECK_THROWS_AS(Rack::constant_action({0, 3, 1}), ColourOutOfRange);
}

TEST_CASE("conjugation rack of S3") {
    auto r = Rack::conjugation(s3_table());
    CHECK(r.size() == 6);
    CHECK(r.is_quandle());
    check_axioms(r);
    CHECK(r.inner_group().size() == 6); // S3 mod trivial centre
}

TEST_CASE("from_table validation") {
    auto d5 = Rack::dihedral(5);
    std::vector<std::vector<int>> t(5, std::vector<int>(5));
    for (int x = 0; x < 5; ++x)
        for (int y = 0; y < 5; ++y) t[x][y] = d5.op(x, y);
    auto r = Rack::from_table(t);
    CHECK(r == d5);
    std::string expected = "table 5";
    for (int x = 0; x < 5; ++x)
        for (int y = 0; y < 5; ++y) expected += " " + std::to_string(t[x][y]);
    CHECK(r.name() == expected);

    CHECK_THROWS_AS(Rack::from_table({{0, 0}, {0, 0}}), AxiomViolation);
    CHECK_THROWS_AS(Rack::from_table({{0, 5}, {1, 0}}), ColourOutOfRange);
    // columns bijective but self-distributivity broken
    CHECK_THROWS_AS(Rack::from_table({{1, 0, 0}, {2, 2, 1}, {0, 1, 2}}), AxiomViolation);
}

TEST_CASE("axioms hold for every builder up to n=32") {
    for (int n = 1; n <= 32; ++n) {
        check_axioms(Rack::dihedral(n));
        check_axioms(Rack::trivial(n));
    }
    for (int n = 2; n <= 12; ++n)
        for (int t = 1; t < n; ++t) {
            if (std::gcd(t, n) != 1 || std::gcd(((1 - t) % n + n) % n, n) != 1) continue;
            check_axioms(Rack::alexander(n, t));
        }
    for (int n = 2; n <= 16; ++n) {
        std::vector<int> rot(n);
        for (int i = 0; i < n; ++i) rot[i] = (i + 1) % n;
        check_axioms(Rack::constant_action(rot));
    }
    check_axioms(Rack::conjugation(s3_table()));
}

TEST_CASE("inner group sizes") {
    CHECK(Rack::dihedral(3).inner_group().size() == 6);
    CHECK(Rack::dihedral(5).inner_group().size() == 10);
    CHECK(Rack::alexander(5, 2).inner_group().size() == 10);
    CHECK(Rack::trivial(7).inner_group().size() == 1);
    CHECK_THROWS_AS(Rack::dihedral(5).inner_group(3), GroupTooLarge);
}

TEST_CASE("abelianized inner group against the coset oracle") {
    auto columns = [](const Rack& r) {
        std::vector<oracle::Perm> g;
        for (int y = 0; y < r.size(); ++y) g.push_back(r.column(y));
        return g;
    };
    std::vector<Rack> racks = {Rack::dihedral(3),      Rack::dihedral(4),
                               Rack::dihedral(5),      Rack::dihedral(6),
                               Rack::dihedral(7),      Rack::dihedral(8),
                               Rack::alexander(5, 2),  Rack::alexander(7, 3),
                               Rack::conjugation(s3_table()), Rack::trivial(4)};
    for (const auto& r : racks) {
        auto divisors = r.abelianized_inner();
        auto want = oracle::abelianized_order_multiset(columns(r), r.size());
        auto got = oracle::divisor_order_multiset(divisors);
        CHECK(got == want);
        CHECK(std::is_sorted(divisors.begin(), divisors.end()));
    }
    CHECK(Rack::dihedral(3).abelianized_inner() == std::vector<int>{2});
    CHECK(Rack::alexander(5, 2).abelianized_inner() == std::vector<int>{2});
    CHECK(Rack::trivial(6).abelianized_inner().empty());
}

TEST_CASE("permutation helpers") {
    using namespace perm;
    auto id = identity(4);
    std::vector<int> swap01 = {1, 0, 2, 3};
    std::vector<int> cyc = {1, 2, 3, 0};
    CHECK(compose(swap01, swap01) == id);
    CHECK(inverse(cyc) == std::vector<int>{3, 0, 1, 2});
    CHECK(compose(inverse(cyc), cyc) == id);
    auto g = closure({swap01}, 4, 100);
    CHECK(g.size() == 2);
    auto h = closure({cyc, swap01}, 4, 100);
    CHECK(h.size() == 24);
    CHECK_THROWS_AS(closure({cyc, swap01}, 4, 5), GroupTooLarge);
}

TEST_CASE("column extraction") {
    auto r = Rack::dihedral(5);
    for (int y = 0; y < 5; ++y) {
        auto c = r.column(y);
        for (int x = 0; x < 5; ++x) CHECK(c[x] == r.op(x, y));
    }
}

TEST_CASE("builder parameter validation") {
    CHECK_THROWS_AS(Rack::dihedral(0), BadParameter);
    CHECK_THROWS_AS(Rack::trivial(-1), BadParameter);
    CHECK_THROWS_AS(Rack::alexander(0, 1), BadParameter);
}
