#include "tangle/invariants.hpp"

#include <algorithm>
#include <bit>
#include <climits>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "tangle/dsl.hpp"
#include "tangle/errors.hpp"

namespace tangle {

LinkingData linking(const Machine& m) {
    int nr = m.register_count();
    int np = static_cast<int>(m.processes().size());
    LinkingData lk;
    lk.framed.assign(nr, std::vector<int>(np, 0));
    for (const auto& ix : m.interactions())
        for (const auto& pt : ix.patients) lk.framed[ix.agent][pt.edge.proc] += pt.sign;
    lk.unframed = lk.framed;
    for (int r = 0; r < nr; ++r) lk.unframed[r][m.registers()[r].process] = 0;
    return lk;
}

std::vector<std::vector<long long>> linking_matrix(const Machine& m, bool framed) {
    LinkingData lk = linking(m);
    const auto& v = framed ? lk.framed : lk.unframed;
    int np = static_cast<int>(m.processes().size());
    std::vector<std::vector<long long>> mat(np, std::vector<long long>(np, 0));
    for (int r = 0; r < m.register_count(); ++r)
        for (int j = 0; j < np; ++j)
            mat[m.registers()[r].process][j] += std::abs(v[r][j]);
    return mat;
}

std::vector<std::vector<SparseVec>> reduced_linking(const Machine& m, bool framed) {
    LinkingData lk = linking(m);
    const auto& v = framed ? lk.framed : lk.unframed;
    std::vector<std::vector<SparseVec>> out;
    for (const auto& p : m.processes()) {
        std::vector<SparseVec> seq;
        for (int r : p.registers) {
            SparseVec sv;
            for (std::size_t j = 0; j < v[r].size(); ++j)
                if (v[r][j] != 0) sv.emplace_back(static_cast<int>(j), v[r][j]);
            if (!sv.empty()) seq.push_back(std::move(sv));
        }
        if (p.closed && seq.size() > 1) {
            std::vector<SparseVec> best = seq;
            std::vector<SparseVec> rot = seq;
            for (std::size_t i = 1; i < seq.size(); ++i) {
                std::rotate(rot.begin(), rot.begin() + 1, rot.end());
                if (rot < best) best = rot;
            }
            seq = std::move(best);
        }
        out.push_back(std::move(seq));
    }
    return out;
}

std::pair<int, int> reduced_graph(const Machine& m) {
    int open = 0, closed = 0;
    for (const auto& p : m.processes()) (p.closed ? closed : open) += 1;
    return {open, closed};
}

std::vector<std::pair<int, int>> boundary_pairs(const Machine& m) {
    std::vector<std::pair<int, int>> out;
    for (const auto& p : m.processes()) {
        if (p.closed) continue;
        int first = p.registers.front(), last = p.registers.back();
        if (!m.coloured(first) || !m.coloured(last))
            throw UncolouredRegister("open process '" + p.name +
                                     "' has an uncoloured boundary register");
        out.emplace_back(m.colour(first), m.colour(last));
    }
    return out;
}

bool is_unit_interaction(const Machine& m, int index) {
    if (index < 0 || index >= static_cast<int>(m.interactions().size()))
        throw IndexOutOfRange("interaction index " + std::to_string(index));
    const Interaction& ix = m.interactions()[index];
    std::vector<int> regs = {ix.agent};
    for (const auto& pt : ix.patients) {
        regs.push_back(m.edge_from(pt.edge));
        regs.push_back(m.edge_to(pt.edge));
    }
    int common = kUncoloured;
    for (int r : regs) {
        if (!m.coloured(r)) return false;
        if (common == kUncoloured) common = m.colour(r);
        else if (m.colour(r) != common) return false;
    }
    return true;
}

int nonunit_syntactic(const Machine& m) {
    int count = 0;
    for (int i = 0; i < static_cast<int>(m.interactions().size()); ++i)
        if (!is_unit_interaction(m, i)) ++count;
    return count;
}

namespace {

// Abelianization of a permutation group given as a closed element list:
// cosets of the derived subgroup with a multiplication table. Coset 0 always
// contains the identity.
struct AbQuotient {
    int size = 1;
    std::vector<std::vector<int>> mul;
    std::vector<int> coset_of; // per group element index
};

AbQuotient make_quotient(const std::vector<std::vector<int>>& group) {
    std::map<std::vector<int>, int> index;
    for (std::size_t i = 0; i < group.size(); ++i)
        index[group[i]] = static_cast<int>(i);
    int n = static_cast<int>(group[0].size());

    std::vector<std::vector<int>> commutators;
    for (const auto& g : group)
        for (const auto& h : group)
            commutators.push_back(perm::compose(
                perm::compose(perm::inverse(g), perm::inverse(h)), perm::compose(g, h)));
    auto derived = perm::closure(commutators, n, group.size());

    AbQuotient q;
    q.coset_of.assign(group.size(), -1);
    int ncosets = 0;
    for (std::size_t i = 0; i < group.size(); ++i) {
        if (q.coset_of[i] >= 0) continue;
        int c = ncosets++;
        for (const auto& d : derived)
            q.coset_of[index.at(perm::compose(group[i], d))] = c;
    }
    q.size = ncosets;
    std::vector<int> rep(ncosets, -1);
    for (std::size_t i = 0; i < group.size(); ++i)
        if (rep[q.coset_of[i]] < 0) rep[q.coset_of[i]] = static_cast<int>(i);
    q.mul.assign(ncosets, std::vector<int>(ncosets, 0));
    for (int a = 0; a < ncosets; ++a)
        for (int b = 0; b < ncosets; ++b)
            q.mul[a][b] = q.coset_of[index.at(perm::compose(group[rep[a]], group[rep[b]]))];
    return q;
}

int quotient_pow(const AbQuotient& q, int x, long long e) {
    int acc = 0;
    for (long long i = 0; i < e; ++i) acc = q.mul[acc][x];
    return acc;
}

int quotient_inverse(const AbQuotient& q, int x) {
    for (int y = 0; y < q.size; ++y)
        if (q.mul[x][y] == 0) return y;
    return 0;
}

// Elementary divisors (ascending prime powers) of a subgroup of the quotient,
// given its element set.
std::vector<int> subgroup_divisors(const AbQuotient& q, const std::vector<int>& elems) {
    std::vector<int> divisors;
    int m = static_cast<int>(elems.size());
    for (int p = 2; p <= m; ++p) {
        if (m % p != 0) continue;
        while (m % p == 0) m /= p;
        std::vector<long long> counts = {1};
        long long pk = 1;
        while (true) {
            pk *= p;
            long long c = 0;
            for (int x : elems)
                if (quotient_pow(q, x, pk) == 0) ++c;
            if (c == counts.back()) break;
            counts.push_back(c);
        }
        std::vector<int> lambda;
        for (std::size_t k = 1; k < counts.size(); ++k) {
            long long ratio = counts[k] / counts[k - 1];
            int l = 0;
            while (ratio > 1) {
                ratio /= p;
                ++l;
            }
            lambda.push_back(l);
        }
        long long power = 1;
        for (std::size_t k = 0; k < lambda.size(); ++k) {
            power *= p;
            int next = k + 1 < lambda.size() ? lambda[k + 1] : 0;
            for (int i = 0; i < lambda[k] - next; ++i)
                divisors.push_back(static_cast<int>(power));
        }
    }
    std::sort(divisors.begin(), divisors.end());
    return divisors;
}

std::vector<int> span_of(const AbQuotient& q, const std::set<int>& gens) {
    std::set<int> seen = {0};
    std::vector<int> todo = {0};
    while (!todo.empty()) {
        int x = todo.back();
        todo.pop_back();
        for (int g : gens) {
            int y = q.mul[x][g];
            if (seen.insert(y).second) todo.push_back(y);
        }
    }
    return {seen.begin(), seen.end()};
}

} // namespace

ColourLinking colour_linking(const Machine& m, std::size_t budget) {
    auto group = m.rack().inner_group(budget);
    std::map<std::vector<int>, int> index;
    for (std::size_t i = 0; i < group.size(); ++i)
        index[group[i]] = static_cast<int>(i);
    AbQuotient q = make_quotient(group);

    std::vector<int> all(q.size);
    for (int i = 0; i < q.size; ++i) all[i] = i;

    ColourLinking cl;
    cl.ambient = subgroup_divisors(q, all);

    auto class_of = [&](int colour) {
        return q.coset_of[index.at(m.rack().column(colour))];
    };

    int nr = m.register_count();
    cl.framed.resize(nr);
    cl.unframed.resize(nr);
    for (int r = 0; r < nr; ++r) {
        for (bool framed : {true, false}) {
            std::set<int> gens;
            int net = 0;
            for (int i : m.agencies(r)) {
                for (const auto& pt : m.interactions()[i].patients) {
                    if (!framed && pt.edge.proc == m.registers()[r].process) continue;
                    int src = pt.sign > 0 ? m.edge_from(pt.edge) : m.edge_to(pt.edge);
                    if (!m.coloured(src)) continue;
                    int cls = class_of(m.colour(src));
                    gens.insert(cls);
                    net = q.mul[net][pt.sign > 0 ? cls : quotient_inverse(q, cls)];
                }
            }
            ColourLinkingEntry entry;
            entry.subgroup = subgroup_divisors(q, span_of(q, gens));
            entry.net = net;
            (framed ? cl.framed : cl.unframed)[r] = std::move(entry);
        }
    }
    return cl;
}

namespace {

// One edge law of the skeleton: participants and how to evaluate it.
struct Law {
    int from = -1, to = -1, agent = -1; // agent < 0 for a plain edge
    int sign = +1;
};

} // namespace

long long colouring_count(const Machine& skeleton, const Rack& target, long long budget) {
    int nr = skeleton.register_count();
    std::vector<Law> laws;
    for (int p = 0; p < static_cast<int>(skeleton.processes().size()); ++p) {
        for (int e = 0; e < skeleton.edge_count(p); ++e) {
            EdgeRef ed{p, e};
            Law law;
            law.from = skeleton.edge_from(ed);
            law.to = skeleton.edge_to(ed);
            int lab = skeleton.edge_label(ed);
            if (lab >= 0) {
                law.agent = skeleton.interactions()[lab].agent;
                for (const auto& pt : skeleton.interactions()[lab].patients)
                    if (pt.edge == ed) law.sign = pt.sign;
            }
            laws.push_back(law);
        }
    }
    int n = target.size();
    if (nr == 0) return 1;
    if (n == 1) return 1;

    auto modpow = [](long long base, long long exp, long long mod) {
        long long out = 1 % mod;
        base %= mod;
        while (exp > 0) {
            if (exp & 1) out = out * base % mod;
            base = base * base % mod;
            exp >>= 1;
        }
        return out;
    };
    bool prime = n >= 2;
    for (int d = 2; d * d <= n && prime; ++d)
        if (n % d == 0) prime = false;

    // Affine racks over a prime field (dihedral, Alexander, trivial, constant
    // action) turn the edge laws into a linear system, so the count is exact
    // elimination instead of a search. The budget is charged per eliminated
    // column so runaway instances still surface as BudgetExceeded.
    if (prime) {
        long long p = n;
        long long gamma = target.act(0, 0, +1);
        long long alpha = ((target.act(1, 0, +1) - gamma) % p + p) % p;
        long long beta = ((target.act(0, 1, +1) - gamma) % p + p) % p;
        bool affine = alpha != 0;
        for (int x = 0; x < n && affine; ++x)
            for (int a = 0; a < n && affine; ++a) {
                if (target.act(x, a, +1) != (alpha * x + beta * a + gamma) % p) affine = false;
            }
        if (affine) {
            long long ai = modpow(alpha, p - 2, p); // act(x,a) = t  =>  x = ai*(t - beta*a - gamma)
            long long beta_inv = (p - ai * beta % p) % p;
            long long gamma_inv = (p - ai * gamma % p) % p;
            for (int x = 0; x < n && affine; ++x)
                for (int a = 0; a < n && affine; ++a) {
                    if (target.act(x, a, -1) != (ai * x + beta_inv * a + gamma_inv) % p)
                        affine = false;
                }
            if (affine) {
                std::vector<std::vector<long long>> rows;
                rows.reserve(laws.size());
                for (const Law& l : laws) {
                    std::vector<long long> row(nr + 1, 0);
                    if (l.agent < 0) { // x_from == x_to
                        row[l.from] = (row[l.from] + 1) % p;
                        row[l.to] = (row[l.to] + p - 1) % p;
                    } else { // x_to == a*x_from + b*x_agent + g
                        long long a_c = l.sign > 0 ? alpha : ai;
                        long long b_c = l.sign > 0 ? beta : beta_inv;
                        long long g_c = l.sign > 0 ? gamma : gamma_inv;
                        row[l.from] = (row[l.from] + a_c) % p;
                        row[l.agent] = (row[l.agent] + b_c) % p;
                        row[l.to] = (row[l.to] + p - 1) % p;
                        row[nr] = (p - g_c) % p;
                    }
                    rows.push_back(std::move(row));
                }
                long long nodes = 0;
                int rank = 0;
                for (int col = 0; col < nr; ++col) {
                    if (++nodes > budget)
                        throw BudgetExceeded("colouring search exceeded " +
                                             std::to_string(budget) + " assignments");
                    int piv = -1;
                    for (int r = rank; r < static_cast<int>(rows.size()); ++r)
                        if (rows[r][col] != 0) {
                            piv = r;
                            break;
                        }
                    if (piv < 0) continue;
                    std::swap(rows[rank], rows[piv]);
                    long long inv = modpow(rows[rank][col], p - 2, p);
                    for (int c = col; c <= nr; ++c) rows[rank][c] = rows[rank][c] * inv % p;
                    for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
                        if (r == rank || rows[r][col] == 0) continue;
                        long long f = rows[r][col];
                        for (int c = col; c <= nr; ++c)
                            rows[r][c] = ((rows[r][c] - f * rows[rank][c]) % p + p) % p;
                    }
                    ++rank;
                }
                for (int r = rank; r < static_cast<int>(rows.size()); ++r)
                    if (rows[r][nr] != 0) return 0;
                long long count = 1;
                for (int i = 0; i < nr - rank; ++i) {
                    if (count > (1ll << 62) / p)
                        throw BudgetExceeded("colouring count does not fit in 63 bits");
                    count *= p;
                }
                return count;
            }
        }
    }

    // Backtracking with arc-consistency propagation: each assignment filters
    // the neighbouring domains through the edge laws, so colours pinned along
    // a strand collapse to singletons at once and dead ends surface as soon
    // as a domain empties. Branching happens only at genuinely free registers
    // (fail-first: smallest open domain).
    std::vector<std::vector<int>> laws_of(nr);
    for (std::size_t i = 0; i < laws.size(); ++i) {
        const Law& l = laws[i];
        laws_of[l.from].push_back(static_cast<int>(i));
        if (l.to != l.from) laws_of[l.to].push_back(static_cast<int>(i));
        if (l.agent >= 0 && l.agent != l.from && l.agent != l.to)
            laws_of[l.agent].push_back(static_cast<int>(i));
    }

    using Dom = std::vector<std::uint64_t>;
    const int words = (n + 63) / 64;
    Dom full(words, 0);
    for (int v = 0; v < n; ++v) full[v / 64] |= 1ull << (v % 64);

    auto has = [](const Dom& d, int v) {
        return (d[v / 64] >> (v % 64)) & 1ull;
    };
    auto size_of = [](const Dom& d) {
        int c = 0;
        for (auto w : d) c += std::popcount(w);
        return c;
    };
    auto is_empty = [](const Dom& d) {
        for (auto w : d)
            if (w) return false;
        return true;
    };
    auto intersect = [&](Dom& d, const Dom& other) {
        bool changed = false;
        for (int w = 0; w < words; ++w) {
            std::uint64_t v = d[w] & other[w];
            if (v != d[w]) {
                d[w] = v;
                changed = true;
            }
        }
        return changed;
    };

    std::vector<std::vector<int>> fwd(n, std::vector<int>(n)), bwd(n, std::vector<int>(n));
    for (int x = 0; x < n; ++x)
        for (int a = 0; a < n; ++a) {
            fwd[x][a] = target.act(x, a, +1);
            bwd[x][a] = target.act(x, a, -1);
        }

    // values act(src, agent, dir) can take over the given domains
    auto image = [&](const Dom& src, const Dom& ag, bool positive) {
        Dom out(words, 0);
        const auto& table = positive ? fwd : bwd;
        for (int x = 0; x < n; ++x) {
            if (!has(src, x)) continue;
            for (int a = 0; a < n; ++a) {
                if (!has(ag, a)) continue;
                int y = table[x][a];
                out[y / 64] |= 1ull << (y % 64);
            }
        }
        return out;
    };
    // agents that can carry some value of `from` into `to`
    auto agent_support = [&](const Dom& from, const Dom& to, const Dom& ag, bool positive) {
        Dom out(words, 0);
        const auto& table = positive ? fwd : bwd;
        for (int a = 0; a < n; ++a) {
            if (!has(ag, a)) continue;
            for (int x = 0; x < n; ++x) {
                if (!has(from, x) || !has(to, table[x][a])) continue;
                out[a / 64] |= 1ull << (a % 64);
                break;
            }
        }
        return out;
    };

    auto propagate = [&](std::vector<Dom>& dom, const std::vector<int>& seed_laws) {
        std::vector<int> queue = seed_laws;
        std::vector<char> queued(laws.size(), 0);
        for (int li : queue) queued[li] = 1;
        auto push_laws = [&](int reg) {
            for (int li : laws_of[reg])
                if (!queued[li]) {
                    queued[li] = 1;
                    queue.push_back(li);
                }
        };
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            int li = queue[qi];
            queued[li] = 0;
            const Law& l = laws[li];
            if (l.agent < 0) {
                bool a = intersect(dom[l.to], dom[l.from]);
                bool b = intersect(dom[l.from], dom[l.to]);
                if (is_empty(dom[l.from])) return false;
                if (a) push_laws(l.to);
                if (b) push_laws(l.from);
                continue;
            }
            bool pos = l.sign > 0;
            bool ch_to = intersect(dom[l.to], image(dom[l.from], dom[l.agent], pos));
            bool ch_from = intersect(dom[l.from], image(dom[l.to], dom[l.agent], !pos));
            bool ch_ag =
                intersect(dom[l.agent], agent_support(dom[l.from], dom[l.to], dom[l.agent], pos));
            if (is_empty(dom[l.to]) || is_empty(dom[l.from]) || is_empty(dom[l.agent]))
                return false;
            if (ch_to) push_laws(l.to);
            if (ch_from) push_laws(l.from);
            if (ch_ag) push_laws(l.agent);
        }
        return true;
    };

    long long nodes = 0, solutions = 0;
    std::vector<Dom> dom(nr, full);
    std::vector<int> all_laws(laws.size());
    std::iota(all_laws.begin(), all_laws.end(), 0);
    if (!propagate(dom, all_laws)) return 0;

    auto rec = [&](auto&& self, const std::vector<Dom>& cur) -> void {
        int var = -1, best = INT_MAX;
        for (int r = 0; r < nr; ++r) {
            int c = size_of(cur[r]);
            if (c > 1 && c < best) {
                best = c;
                var = r;
            }
        }
        if (var < 0) { // every domain is a singleton and all laws hold
            ++solutions;
            return;
        }
        for (int v = 0; v < n; ++v) {
            if (!has(cur[var], v)) continue;
            if (++nodes > budget)
                throw BudgetExceeded("colouring search exceeded " +
                                     std::to_string(budget) + " assignments");
            std::vector<Dom> next = cur;
            next[var].assign(words, 0);
            next[var][v / 64] = 1ull << (v % 64);
            if (propagate(next, laws_of[var])) self(self, next);
        }
    };
    rec(rec, dom);
    return solutions;
}

namespace {

using Bits = std::vector<std::uint64_t>;

struct Graph {
    int n = 0;
    std::vector<Bits> adj;
};

Graph conflict_graph(const Machine& m, std::vector<int>& verts) {
    std::set<int> used;
    for (int r = 0; r < m.register_count(); ++r)
        if (m.coloured(r)) used.insert(m.colour(r));
    verts.assign(used.begin(), used.end());
    auto vid = [&](int c) {
        return static_cast<int>(std::lower_bound(verts.begin(), verts.end(), c) -
                                verts.begin());
    };
    Graph g;
    g.n = static_cast<int>(verts.size());
    int words = (g.n + 63) / 64;
    g.adj.assign(g.n, Bits(words, 0));
    for (const auto& ix : m.interactions()) {
        std::set<int> cs;
        auto add = [&](int r) {
            if (m.coloured(r)) cs.insert(m.colour(r));
        };
        add(ix.agent);
        for (const auto& pt : ix.patients) {
            add(m.edge_from(pt.edge));
            add(m.edge_to(pt.edge));
        }
        for (int a : cs)
            for (int b : cs)
                if (a != b) g.adj[vid(a)][vid(b) / 64] |= 1ull << (vid(b) % 64);
    }
    return g;
}

Graph strong_product(const Graph& a, const Graph& b) {
    Graph g;
    g.n = a.n * b.n;
    int words = (g.n + 63) / 64;
    g.adj.assign(g.n, Bits(words, 0));
    auto a_adj = [&](int x, int y) {
        return (a.adj[x][y / 64] >> (y % 64)) & 1;
    };
    auto b_adj = [&](int x, int y) {
        return (b.adj[x][y / 64] >> (y % 64)) & 1;
    };
    for (int u1 = 0; u1 < a.n; ++u1)
        for (int u2 = 0; u2 < b.n; ++u2)
            for (int v1 = 0; v1 < a.n; ++v1)
                for (int v2 = 0; v2 < b.n; ++v2) {
                    if (u1 == v1 && u2 == v2) continue;
                    bool ok1 = u1 == v1 || a_adj(u1, v1);
                    bool ok2 = u2 == v2 || b_adj(u2, v2);
                    if (ok1 && ok2) {
                        int u = u1 * b.n + u2, v = v1 * b.n + v2;
                        g.adj[u][v / 64] |= 1ull << (v % 64);
                    }
                }
    return g;
}

int popcount(const Bits& b) {
    int c = 0;
    for (auto w : b) c += __builtin_popcountll(w);
    return c;
}

// Maximum independent set by branch and bound; counts recursion steps and
// throws BudgetExceeded past the node cap.
struct MisSolver {
    const Graph& g;
    long long nodes = 0, node_cap = 5000000;
    int best = 0;

    explicit MisSolver(const Graph& graph) : g(graph) {}

    void run(Bits cand, int size) {
        if (++nodes > node_cap)
            throw BudgetExceeded("independence-number search exceeded node cap");
        int remaining = popcount(cand);
        if (size + remaining <= best) return;
        if (remaining == 0) {
            best = std::max(best, size);
            return;
        }
        int v = -1;
        for (std::size_t w = 0; w < cand.size(); ++w)
            if (cand[w]) {
                v = static_cast<int>(w * 64 + __builtin_ctzll(cand[w]));
                break;
            }
        Bits with = cand;
        with[v / 64] &= ~(1ull << (v % 64));
        for (std::size_t w = 0; w < with.size(); ++w) with[w] &= ~g.adj[v][w];
        run(with, size + 1);
        Bits without = cand;
        without[v / 64] &= ~(1ull << (v % 64));
        run(without, size);
    }

    long long solve() {
        int words = (g.n + 63) / 64;
        Bits all(words, 0);
        for (int v = 0; v < g.n; ++v) all[v / 64] |= 1ull << (v % 64);
        best = 0;
        run(all, 0);
        return best;
    }
};

} // namespace

Capacity capacity(const Machine& m, int k_max, std::size_t budget) {
    std::vector<int> verts;
    Graph h = conflict_graph(m, verts);
    std::size_t vertex_cap = std::min<std::size_t>(budget, 20000);

    Capacity out;
    Graph power; // h^(⊠k), built incrementally
    long long nverts = 1;
    for (int k = 1; k <= k_max; ++k) {
        nverts *= std::max(h.n, 0);
        if (h.n > 0 && static_cast<std::size_t>(nverts) > vertex_cap) {
            out.truncated = true;
            break;
        }
        try {
            power = k == 1 ? h : strong_product(power, h);
            out.cap.push_back(MisSolver(power).solve());
        } catch (const BudgetExceeded&) {
            out.truncated = true;
            break;
        }
        if (h.n == 0) {
            // empty conflict graph: every power is empty
            while (static_cast<int>(out.cap.size()) < k_max) out.cap.push_back(0);
            break;
        }
    }

    double rate = 0.0;
    for (std::size_t k = 0; k < out.cap.size(); ++k)
        rate = std::max(rate, std::pow(static_cast<double>(out.cap[k]),
                                       1.0 / static_cast<double>(k + 1)));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", rate);
    out.rate_lower = buf;
    return out;
}

namespace {

nlohmann::ordered_json sparse_json(const std::vector<std::vector<SparseVec>>& red) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& seq : red) {
        nlohmann::ordered_json jseq = nlohmann::ordered_json::array();
        for (const auto& sv : seq) {
            nlohmann::ordered_json jv = nlohmann::ordered_json::array();
            for (const auto& [proc, val] : sv) jv.push_back({proc, val});
            jseq.push_back(std::move(jv));
        }
        out.push_back(std::move(jseq));
    }
    return out;
}

nlohmann::ordered_json order_fields(const Machine& m, int k_max) {
    nlohmann::ordered_json j;
    auto rg = reduced_graph(m);
    j["reduced_graph"] = {rg.first, rg.second};
    j["linking_reduced_framed"] = sparse_json(reduced_linking(m, true));
    j["linking_reduced_unframed"] = sparse_json(reduced_linking(m, false));
    j["linking_matrix_framed"] = linking_matrix(m, true);
    j["linking_matrix_unframed"] = linking_matrix(m, false);

    ColourLinking cl = colour_linking(m);
    std::vector<int> nets;
    for (const auto& e : cl.unframed)
        if (e.net != 0) nets.push_back(e.net);
    std::sort(nets.begin(), nets.end());
    j["colour_linking_net"] = nets;

    j["nonunit_syntactic"] = nonunit_syntactic(m);

    nlohmann::ordered_json bp = nlohmann::ordered_json::array();
    for (const auto& [a, b] : boundary_pairs(m)) bp.push_back({a, b});
    j["boundary_pairs"] = std::move(bp);

    nlohmann::ordered_json counts;
    static const Rack d3 = Rack::dihedral(3);
    static const Rack a52 = Rack::alexander(5, 2);
    counts[d3.name()] = colouring_count(m, d3);
    counts[a52.name()] = colouring_count(m, a52);
    j["colouring_counts"] = std::move(counts);

    Capacity cap = capacity(m, k_max);
    nlohmann::ordered_json jc;
    jc["cap"] = cap.cap;
    jc["rate_lower"] = cap.rate_lower;
    jc["truncated"] = cap.truncated;
    j["capacity"] = std::move(jc);

    // presentational data stable under the equivalence moves: per process the
    // closed flag and the number of registers with nonzero framed linking
    auto red = reduced_linking(m, true);
    std::vector<std::pair<int, int>> shape;
    for (std::size_t p = 0; p < red.size(); ++p)
        shape.emplace_back(m.processes()[p].closed ? 1 : 0,
                           static_cast<int>(red[p].size()));
    std::sort(shape.begin(), shape.end());
    nlohmann::ordered_json pres = nlohmann::ordered_json::array();
    for (const auto& [c, l] : shape) pres.push_back({c, l});
    nlohmann::ordered_json presentation;
    presentation["processes"] = std::move(pres);
    presentation["rack_size"] = m.rack().size();
    j["presentation"] = std::move(presentation);
    return j;
}

} // namespace

std::string InvariantReport::canonical_bytes() const { return data.dump(); }

InvariantReport fingerprint(const Machine& m, int k_max) {
    return InvariantReport{order_fields(m, k_max)};
}

namespace {

// The fields that depend on process declaration order (through process
// indices and per-process sequences).
nlohmann::ordered_json order_dependent_fields(const Machine& m) {
    nlohmann::ordered_json j;
    j["linking_reduced_framed"] = sparse_json(reduced_linking(m, true));
    j["linking_reduced_unframed"] = sparse_json(reduced_linking(m, false));
    j["linking_matrix_framed"] = linking_matrix(m, true);
    j["linking_matrix_unframed"] = linking_matrix(m, false);
    nlohmann::ordered_json bp = nlohmann::ordered_json::array();
    for (const auto& [a, b] : boundary_pairs(m)) bp.push_back({a, b});
    j["boundary_pairs"] = std::move(bp);
    return j;
}

Machine permute_processes(const Machine& m, const std::vector<int>& order) {
    Draft d = m.to_draft();
    std::vector<Draft::P> procs;
    for (int idx : order) procs.push_back(d.processes[idx]);
    d.processes = std::move(procs);
    return d.build();
}

} // namespace

Verdict distinguish(const Machine& a, const Machine& b, int k_max) {
    if (a.rack().name() != b.rack().name()) return {true, "rack"};

    auto fa = fingerprint(a, k_max).data;
    auto fb = fingerprint(b, k_max).data;
    if (fa == fb) return {false, ""};

    int na = static_cast<int>(a.processes().size());
    int nb = static_cast<int>(b.processes().size());
    bool invariant_fields_equal = true;
    for (const char* key : {"reduced_graph", "colour_linking_net", "nonunit_syntactic",
                            "colouring_counts", "capacity", "presentation"})
        invariant_fields_equal = invariant_fields_equal && fa[key] == fb[key];

    if (invariant_fields_equal && na == nb && na <= 8) {
        // signature-respecting process permutations of b
        auto sig = [](const Machine& m, int p) {
            return std::pair<bool, int>(m.processes()[p].closed,
                                        static_cast<int>(m.processes()[p].registers.size()));
        };
        auto want = order_dependent_fields(a);
        std::vector<int> order;
        std::vector<char> used(nb, 0);
        bool matched = false;
        auto rec = [&](auto&& self, int slot) -> void {
            if (matched) return;
            if (slot == na) {
                if (order_dependent_fields(permute_processes(b, order)) == want)
                    matched = true;
                return;
            }
            for (int q = 0; q < nb; ++q) {
                if (used[q] || sig(b, q) != sig(a, slot)) continue;
                used[q] = 1;
                order.push_back(q);
                self(self, slot + 1);
                order.pop_back();
                used[q] = 0;
            }
        };
        rec(rec, 0);
        if (matched) return {false, ""};
    }

    for (auto it = fa.begin(); it != fa.end(); ++it)
        if (fb[it.key()] != it.value()) return {true, it.key()};
    return {true, "fingerprint"};
}

} // namespace tangle
