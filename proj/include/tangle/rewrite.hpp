#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tangle/machine.hpp"

namespace tangle {

enum class MoveKind {
    R1Insert,
    R1Remove,
    R2Insert,
    R2Remove,
    R3Forward,
    R3Backward,
    Stabilize,
    Destabilize,
    FalseJoin,
    FalseResolve,
    RackAutomorphism,
};

std::string to_string(MoveKind k);
MoveKind move_kind_from_string(const std::string& s);

// Equivalence moves preserve the invariant suite; false moves do not.
bool is_equivalence(MoveKind k);

// Payload fields by kind:
//   R1Insert:         a=proc, b=pos, c=which (0 source/1 target), d=sign
//   R1Remove:         a=interaction index
//   R2Insert:         a=proc, b=pos (first edge of the pair), c=agent register
//                     id (-1: source register), d=sign of the first crossing
//   R2Remove:         a,b=interaction indices (a before b along the strand)
//   R3Forward/R3Backward: a,b=interaction indices
//   Stabilize:        a=register id, b=keep (0 agencies stay/1 agencies move)
//   Destabilize:      a=proc, b=pos, c=remove (0 source/1 target)
//   FalseJoin:        a=proc, b=pos (plain edge, both endpoints agents)
//   FalseResolve:     a=register id, mask=agency subset staying behind
//   RackAutomorphism: a=q, b=dir (+1/-1), c=component (-1: global)
struct Move {
    MoveKind kind;
    int a = -1;
    int b = -1;
    int c = -1;
    int d = 0;
    std::uint64_t mask = 0;
    bool operator==(const Move&) const = default;
};

std::string to_string(const Move& mv);
Move move_from_string(const std::string& line);

struct EnumOptions {
    // Restrict R2Insert to self-acting (unit) insertions, R2Remove to unit
    // pairs, and R3 to sites whose recolouring is the identity. These are the
    // fingerprint-safe site sets used by random walks.
    bool unit_r2_only = true;
    bool matched_r3_only = true;
};

std::vector<Move> enumerate_sites(const Machine& m, const std::vector<MoveKind>& kinds,
                                  const EnumOptions& opts = {});

// Applies a move; throws StaleSite when the payload no longer matches the
// machine, QuandleRequired for R1 on a non-quandle rack, BadParameter for
// malformed payloads.
Machine apply_move(const Machine& m, const Move& mv);

struct WalkResult {
    Machine machine;
    std::vector<Move> trace;
    bool starved = false; // no applicable move before the step budget ran out
};

WalkResult random_walk(const Machine& m, int steps, std::uint64_t seed,
                       const std::vector<MoveKind>& kinds, const EnumOptions& opts = {});

// Default kind sets.
std::vector<MoveKind> equivalence_kinds(bool quandle);
std::vector<MoveKind> shrinking_kinds(); // R2Remove, R3*, Destabilize

} // namespace tangle
