#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tangle/machine.hpp"

namespace tangle {

// Per-register linking vector: entry per process = (#positive - #negative)
// patient edges, in that process, of interactions with this agent. The
// unframed variant zeroes the register's own-process entry.
struct LinkingData {
    std::vector<std::vector<int>> framed;   // [register][process]
    std::vector<std::vector<int>> unframed; // [register][process]
};

LinkingData linking(const Machine& m);

// matrix[i][j] = sum over registers of process i of |v(r)[j]|.
std::vector<std::vector<long long>> linking_matrix(const Machine& m, bool framed);

// Per process: the sequence of nonzero linking vectors along the strand, as
// sparse (process, value) pairs; closed processes use the lexicographically
// least rotation.
using SparseVec = std::vector<std::pair<int, int>>;
std::vector<std::vector<SparseVec>> reduced_linking(const Machine& m, bool framed);

std::pair<int, int> reduced_graph(const Machine& m); // (open, closed)

// (initial, terminal) colours per open process. Throws UncolouredRegister.
std::vector<std::pair<int, int>> boundary_pairs(const Machine& m);

// Syntactic unit test: an interaction is unit when its agent and every
// patient-edge endpoint carry one common colour. Uncoloured counts nonunit.
bool is_unit_interaction(const Machine& m, int index);
int nonunit_syntactic(const Machine& m);

// Colour-weighted linking in the abelianized inner group of the rack: a
// positive patient edge contributes the class of acting by the input colour, a
// negative one the inverse of acting by the output colour.
struct ColourLinkingEntry {
    std::vector<int> subgroup; // elementary divisors of the generated subgroup
    int net = 0;               // canonical coset id of the edge-class sum (0 = identity)
};

struct ColourLinking {
    std::vector<int> ambient; // elementary divisors of the abelianized inner group
    std::vector<ColourLinkingEntry> framed;   // per register
    std::vector<ColourLinkingEntry> unframed; // own-process edges dropped
};

ColourLinking colour_linking(const Machine& m, std::size_t budget = 100000);

// Number of valid colourings of the skeleton of m by the target rack.
// Throws BudgetExceeded when the search exceeds the node budget.
long long colouring_count(const Machine& skeleton, const Rack& target,
                          long long budget = 10000000);

// Cap_k = independence number of the k-fold strong product of the conflict
// graph H (vertices: used colours; edges: colours co-occurring in an
// interaction). rate_lower = max_k Cap_k^{1/k}.
struct Capacity {
    std::vector<long long> cap;
    std::string rate_lower; // fixed 6 decimals
    bool truncated = false;
};

Capacity capacity(const Machine& m, int k_max, std::size_t budget = 20000);

struct InvariantReport {
    nlohmann::ordered_json data;
    std::string canonical_bytes() const;
};

InvariantReport fingerprint(const Machine& m, int k_max = 3);

struct Verdict {
    bool distinguished = false;
    std::string witness; // first differing field, empty if none
};

// Compares fingerprints; when both machines have at most 8 processes the
// comparison is taken up to process permutation.
Verdict distinguish(const Machine& a, const Machine& b, int k_max = 3);

} // namespace tangle
