#include "tangle/factorize.hpp"

#include <algorithm>
#include <climits>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>

#include "tangle/errors.hpp"
#include "tangle/invariants.hpp"

namespace tangle {

bool is_unit(const Machine& m) { return nonunit_syntactic(m) == 0; }

namespace {

// Interactions sharing an agent register can never land in different factors
// (the reconstruction sum would have overlapping domains), so candidate
// bipartitions are unions of same-agent groups. Groups are ordered by their
// smallest interaction index; interaction 0 lives in groups[0].
std::vector<std::vector<int>> agent_groups(const Machine& m) {
    std::map<int, std::vector<int>> by_agent;
    const auto& is = m.interactions();
    for (int i = 0; i < static_cast<int>(is.size()); ++i)
        by_agent[is[i].agent].push_back(i);
    std::vector<std::vector<int>> groups;
    groups.reserve(by_agent.size());
    for (auto& [agent, idx] : by_agent) groups.push_back(std::move(idx));
    std::sort(groups.begin(), groups.end());
    return groups;
}

// Factor with the kept interactions, coloured by deduction alone: stamp the
// kept interactions' active registers from m, deduce along the remaining
// laws, then pin each unreached strand at its first old colour. Used when
// cancel_factor cannot keep every untouched colour (the cancelled labels had
// separated colour plateaus that must now merge).
std::optional<Machine> deduced_factor(const Machine& m, const std::vector<int>& keep_sorted) {
    int nr = m.register_count();
    std::set<int> keep(keep_sorted.begin(), keep_sorted.end());
    struct Rule {
        int from, to, agent = -1, sign = +1;
    };
    std::vector<Rule> rules;
    for (int p = 0; p < static_cast<int>(m.processes().size()); ++p)
        for (int e = 0; e < m.edge_count(p); ++e) {
            EdgeRef ed{p, e};
            Rule r{m.edge_from(ed), m.edge_to(ed)};
            int lab = m.edge_label(ed);
            if (lab >= 0 && keep.count(lab)) {
                r.agent = m.interactions()[lab].agent;
                for (const auto& pt : m.interactions()[lab].patients)
                    if (pt.edge == ed) r.sign = pt.sign;
            }
            rules.push_back(r);
        }

    std::vector<int> col(nr, kUncoloured);
    for (int i : keep_sorted) {
        const Interaction& ix = m.interactions()[i];
        std::vector<int> active = {ix.agent};
        for (const auto& pt : ix.patients) {
            active.push_back(m.edge_from(pt.edge));
            active.push_back(m.edge_to(pt.edge));
        }
        for (int r : active)
            if (m.coloured(r)) col[r] = m.colour(r);
    }

    const Rack& rk = m.rack();
    auto deduce = [&]() { // set-once propagation; false on conflict
        bool changed = true;
        while (changed) {
            changed = false;
            for (const Rule& r : rules) {
                if (r.agent < 0) {
                    if (col[r.from] >= 0 && col[r.to] < 0) {
                        col[r.to] = col[r.from];
                        changed = true;
                    } else if (col[r.to] >= 0 && col[r.from] < 0) {
                        col[r.from] = col[r.to];
                        changed = true;
                    } else if (col[r.from] >= 0 && col[r.from] != col[r.to]) {
                        return false;
                    }
                    continue;
                }
                if (col[r.agent] < 0) continue;
                if (col[r.from] >= 0) {
                    int v = rk.act(col[r.from], col[r.agent], r.sign);
                    if (col[r.to] < 0) {
                        col[r.to] = v;
                        changed = true;
                    } else if (col[r.to] != v) {
                        return false;
                    }
                } else if (col[r.to] >= 0) {
                    col[r.from] = rk.act(col[r.to], col[r.agent], -r.sign);
                    changed = true;
                }
            }
        }
        return true;
    };
    if (!deduce()) return std::nullopt;
    while (true) {
        int pin = -1;
        for (int r = 0; r < nr && pin < 0; ++r)
            if (col[r] == kUncoloured && m.coloured(r)) pin = r;
        if (pin < 0) break;
        col[pin] = m.colour(pin);
        if (!deduce()) return std::nullopt;
    }

    Draft d = m.to_draft();
    std::vector<Draft::I> kept;
    for (int i : keep_sorted) kept.push_back(d.interactions[i]);
    d.interactions = std::move(kept);
    d.colours.clear();
    for (int r = 0; r < nr; ++r)
        if (col[r] != kUncoloured) d.colours[m.register_name(r)] = col[r];
    try {
        return d.build();
    } catch (const TangleError&) {
        return std::nullopt;
    }
}

std::optional<Machine> factor_machine(const Machine& m, const std::vector<int>& keep_sorted,
                                      const std::vector<int>& drop_sorted) {
    try {
        return cancel_factor(m, drop_sorted);
    } catch (const InconsistentRecolouring&) {
    } catch (const InconsistentColouring&) {
    }
    return deduced_factor(m, keep_sorted);
}

bool try_split(const Machine& m, std::vector<int> a, std::vector<int> b,
               bool exhaustive, std::vector<Factorization>& out) {
    try {
        auto fa = factor_machine(m, a, b);
        auto fb = factor_machine(m, b, a);
        if (!fa || !fb) return false;
        Machine back = connect_sum(*fa, *fb);
        if (!(back == m)) return false;
        Factorization f;
        f.unit_block = {is_unit(*fa), is_unit(*fb)};
        f.factors = {std::move(*fa), std::move(*fb)};
        f.blocks = {std::move(a), std::move(b)};
        f.exhaustive = exhaustive;
        out.push_back(std::move(f));
        return true;
    } catch (const InconsistentRecolouring&) {
    } catch (const InconsistentColouring&) {
    } catch (const OverlappingDomains&) {
    } catch (const SkeletonMismatch&) {
    }
    return false;
}

// True when every union-of-groups bipartition gets tried.
bool split_search_complete(const Machine& m) {
    return agent_groups(m).size() <= 16;
}

} // namespace

std::vector<Factorization> detect_splits(const Machine& m) {
    std::vector<Factorization> out;
    int n = static_cast<int>(m.interactions().size());
    if (n < 2) return out;
    auto groups = agent_groups(m);
    int g = static_cast<int>(groups.size());
    if (g < 2) return out;
    if (g <= 16) {
        std::uint32_t full = (1u << g) - 1;
        for (std::uint32_t mask = 1; mask < full; mask += 2) {
            std::vector<int> a, b;
            for (int j = 0; j < g; ++j) {
                auto& dst = ((mask >> j) & 1u) ? a : b;
                dst.insert(dst.end(), groups[j].begin(), groups[j].end());
            }
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            try_split(m, std::move(a), std::move(b), true, out);
        }
    } else {
        // truncated search: peel one agent group at a time
        for (int j = 0; j < g; ++j) {
            std::vector<int> one = groups[j], rest;
            for (int k = 0; k < g; ++k)
                if (k != j) rest.insert(rest.end(), groups[k].begin(), groups[k].end());
            std::sort(rest.begin(), rest.end());
            if (j == 0)
                try_split(m, std::move(one), std::move(rest), false, out);
            else
                try_split(m, std::move(rest), std::move(one), false, out);
        }
    }
    std::sort(out.begin(), out.end(),
              [](const Factorization& x, const Factorization& y) { return x.blocks < y.blocks; });
    return out;
}

namespace {

struct Node {
    Machine m;
    std::vector<Move> trace;
};

std::vector<Node> explore(const Machine& m, int depth, std::size_t cap = 512) {
    std::vector<Node> out;
    out.push_back({m, {}});
    std::set<std::string> seen;
    seen.insert(canonical_tmd(m));
    auto kinds = shrinking_kinds();
    std::size_t lo = 0;
    for (int d = 0; d < depth && out.size() < cap; ++d) {
        std::size_t hi = out.size();
        if (lo == hi) break;
        for (std::size_t i = lo; i < hi && out.size() < cap; ++i) {
            Machine cur = out[i].m; // out may reallocate below
            std::vector<Move> cur_trace = out[i].trace;
            for (const Move& mv : enumerate_sites(cur, kinds)) {
                if (out.size() >= cap) break;
                Machine next = apply_move(cur, mv);
                if (!seen.insert(canonical_tmd(next)).second) continue;
                auto tr = cur_trace;
                tr.push_back(mv);
                out.push_back({std::move(next), std::move(tr)});
            }
        }
        lo = hi;
    }
    return out;
}

// A unit machine yields no nonunit factors: it only separates along its
// connected components, never within one (linked unit interactions such as
// the borromean rings stay a single block).
Factorization unit_factorization(const Machine& m, const std::vector<int>& orig) {
    int n = static_cast<int>(m.interactions().size());
    std::vector<int> reg2proc(m.register_count(), -1);
    for (int p = 0; p < static_cast<int>(m.processes().size()); ++p)
        for (int r : m.processes()[p].registers) reg2proc[r] = p;
    std::vector<int> comp = m.process_components();
    std::map<int, std::vector<int>> by_comp;
    for (int i = 0; i < n; ++i)
        by_comp[comp[reg2proc[m.interactions()[i].agent]]].push_back(i);

    if (by_comp.size() >= 2) {
        std::vector<std::vector<int>> local;
        local.reserve(by_comp.size());
        for (auto& [c, idx] : by_comp) local.push_back(std::move(idx));
        std::sort(local.begin(), local.end());
        Factorization f;
        f.exhaustive = true;
        bool ok = true;
        for (const auto& blk : local) {
            std::vector<int> drop;
            for (int i = 0; i < n; ++i)
                if (!std::binary_search(blk.begin(), blk.end(), i)) drop.push_back(i);
            auto fac = factor_machine(m, blk, drop);
            if (!fac) {
                ok = false;
                break;
            }
            std::vector<int> blk_orig;
            blk_orig.reserve(blk.size());
            for (int i : blk) blk_orig.push_back(orig[i]);
            f.blocks.push_back(std::move(blk_orig));
            f.factors.push_back(std::move(*fac));
            f.unit_block.push_back(true);
        }
        if (ok) return f;
    }
    Factorization f;
    f.blocks = {orig};
    f.factors = {m};
    f.unit_block = {true};
    f.exhaustive = split_search_complete(m);
    return f;
}

Factorization factorize_fully(const Machine& m, const std::vector<int>& orig) {
    if (is_unit(m)) return unit_factorization(m, orig);
    auto splits = detect_splits(m);
    if (splits.empty()) {
        Factorization f;
        f.blocks = {orig};
        f.factors = {m};
        f.unit_block = {false};
        f.exhaustive = split_search_complete(m);
        return f;
    }
    const Factorization& s = splits.front(); // canonically least split
    Factorization out;
    out.exhaustive = s.exhaustive;
    for (int side = 0; side < 2; ++side) {
        // factor interaction i is the i-th smallest block member of m
        std::vector<int> sub;
        sub.reserve(s.blocks[side].size());
        for (int local : s.blocks[side]) sub.push_back(orig[local]);
        Factorization part = factorize_fully(s.factors[side], sub);
        out.exhaustive = out.exhaustive && part.exhaustive;
        for (auto& b : part.blocks) out.blocks.push_back(std::move(b));
        for (auto& f : part.factors) out.factors.push_back(std::move(f));
        for (bool u : part.unit_block) out.unit_block.push_back(u);
    }
    return out;
}

int nonunit_blocks(const Factorization& f) {
    int n = 0;
    for (bool u : f.unit_block)
        if (!u) ++n;
    return n;
}

std::vector<int> identity_indices(const Machine& m) {
    std::vector<int> idx(m.interactions().size());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

} // namespace

std::vector<Machine> reachable(const Machine& m, int depth) {
    auto nodes = explore(m, std::max(depth, 0));
    std::vector<Machine> out;
    out.reserve(nodes.size());
    for (auto& node : nodes) out.push_back(std::move(node.m));
    return out;
}

ComplexityBounds complexity_bounds(const Machine& m, int depth) {
    ComplexityBounds b;
    b.lower = 0;
    b.upper = INT_MAX;
    for (const auto& node : explore(m, std::max(depth, 0))) {
        b.lower = std::max(b.lower, nonunit_blocks(factorize_fully(node.m, identity_indices(node.m))));
        b.upper = std::min(b.upper, nonunit_syntactic(node.m));
    }
    return b;
}

std::pair<int, int> nonunit_count(const Machine& m, int search_depth) {
    int syntactic = nonunit_syntactic(m);
    int best = syntactic;
    for (const auto& node : explore(m, std::max(search_depth, 0)))
        best = std::min(best, nonunit_syntactic(node.m));
    return {syntactic, best};
}

Factorization prime_factorization(const Machine& m, int depth) {
    Factorization best;
    int best_score = -1;
    for (const auto& node : explore(m, std::max(depth, 0))) {
        Factorization f = factorize_fully(node.m, identity_indices(node.m));
        int score = nonunit_blocks(f);
        if (score > best_score) {
            best_score = score;
            f.trace = node.trace;
            best = std::move(f);
        }
    }
    return best;
}

std::vector<std::vector<int>> common_refinement(const std::vector<std::vector<int>>& a,
                                                const std::vector<std::vector<int>>& b) {
    std::vector<std::vector<int>> out;
    for (const auto& block_a : a) {
        std::set<int> in_a(block_a.begin(), block_a.end());
        for (const auto& block_b : b) {
            std::vector<int> meet;
            for (int x : block_b)
                if (in_a.count(x)) meet.push_back(x);
            if (meet.empty()) continue;
            std::sort(meet.begin(), meet.end());
            out.push_back(std::move(meet));
        }
    }
    return out;
}

std::pair<ComplexityBounds, ComplexityBounds> false_stab_effect(const Machine& m,
                                                                const Move& mv, int depth) {
    if (mv.kind != MoveKind::FalseJoin && mv.kind != MoveKind::FalseResolve)
        throw BadParameter("false_stab_effect expects a false move");
    Machine after = apply_move(m, mv);
    return {complexity_bounds(m, depth), complexity_bounds(after, depth)};
}

} // namespace tangle
