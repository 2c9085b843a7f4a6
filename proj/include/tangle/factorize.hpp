#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tangle/machine.hpp"
#include "tangle/rewrite.hpp"

namespace tangle {

bool is_unit(const Machine& m);

struct Factorization {
    std::vector<std::vector<int>> blocks; // interaction indices per block
    std::vector<Machine> factors;
    std::vector<bool> unit_block;
    std::vector<Move> trace; // moves applied before splitting (search depth > 0)
    bool exhaustive = true;  // false when the bipartition search was truncated
};

// All 2-block factorizations m = fA + fB (verified by reconstruction).
std::vector<Factorization> detect_splits(const Machine& m);

// Machines reachable from m by shrinking equivalence moves, m included,
// deterministic order, capped breadth-first search.
std::vector<Machine> reachable(const Machine& m, int depth);

struct ComplexityBounds {
    int lower = 0; // max over reachable machines of the best block count
    int upper = 0; // min over reachable machines of the nonunit count
};

ComplexityBounds complexity_bounds(const Machine& m, int depth);

// (syntactic count, minimum syntactic count over reachable machines).
std::pair<int, int> nonunit_count(const Machine& m, int search_depth);

// Recursively refined factorization with the canonically least split at each
// level; depth > 0 first searches reachable machines for the best start.
Factorization prime_factorization(const Machine& m, int depth);

std::vector<std::vector<int>> common_refinement(const std::vector<std::vector<int>>& a,
                                                const std::vector<std::vector<int>>& b);

// Complexity bounds before and after a false move. Throws BadParameter if the
// move is not FalseJoin or FalseResolve.
std::pair<ComplexityBounds, ComplexityBounds> false_stab_effect(const Machine& m,
                                                                const Move& mv, int depth);

} // namespace tangle
