#include "tangle/rewrite.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "tangle/errors.hpp"
#include "tangle/invariants.hpp"

namespace tangle {

namespace {

const std::map<std::string, MoveKind> kKindNames = {
    {"R1Insert", MoveKind::R1Insert},
    {"R1Remove", MoveKind::R1Remove},
    {"R2Insert", MoveKind::R2Insert},
    {"R2Remove", MoveKind::R2Remove},
    {"R3Forward", MoveKind::R3Forward},
    {"R3Backward", MoveKind::R3Backward},
    {"Stabilize", MoveKind::Stabilize},
    {"Destabilize", MoveKind::Destabilize},
    {"FalseJoin", MoveKind::FalseJoin},
    {"FalseResolve", MoveKind::FalseResolve},
    {"RackAutomorphism", MoveKind::RackAutomorphism},
};

} // namespace

std::string to_string(MoveKind k) {
    for (const auto& [name, kind] : kKindNames)
        if (kind == k) return name;
    throw BadParameter("unknown move kind");
}

MoveKind move_kind_from_string(const std::string& s) {
    auto it = kKindNames.find(s);
    if (it == kKindNames.end()) throw BadParameter("unknown move kind '" + s + "'");
    return it->second;
}

bool is_equivalence(MoveKind k) {
    return k != MoveKind::FalseJoin && k != MoveKind::FalseResolve;
}

std::string to_string(const Move& mv) {
    std::ostringstream os;
    os << to_string(mv.kind) << ' ' << mv.a << ' ' << mv.b << ' ' << mv.c << ' '
       << mv.d << ' ' << mv.mask;
    return os.str();
}

Move move_from_string(const std::string& line) {
    std::istringstream is(line);
    std::string kind;
    Move mv;
    if (!(is >> kind >> mv.a >> mv.b >> mv.c >> mv.d >> mv.mask))
        throw BadParameter("malformed move '" + line + "'");
    std::string rest;
    if (is >> rest) throw BadParameter("malformed move '" + line + "'");
    mv.kind = move_kind_from_string(kind);
    return mv;
}

std::vector<MoveKind> equivalence_kinds(bool quandle) {
    std::vector<MoveKind> out;
    if (quandle) {
        out.push_back(MoveKind::R1Insert);
        out.push_back(MoveKind::R1Remove);
    }
    out.insert(out.end(), {MoveKind::R2Insert, MoveKind::R2Remove, MoveKind::R3Forward,
                           MoveKind::R3Backward, MoveKind::Stabilize,
                           MoveKind::Destabilize, MoveKind::RackAutomorphism});
    return out;
}

std::vector<MoveKind> shrinking_kinds() {
    return {MoveKind::R2Remove, MoveKind::R3Forward, MoveKind::R3Backward,
            MoveKind::Destabilize};
}

namespace {

std::string fresh_name(const Machine& m, const std::string& base) {
    std::set<std::string> taken;
    for (const auto& r : m.registers()) taken.insert(r.name);
    for (int k = 1;; ++k) {
        std::string n = base + "_s" + std::to_string(k);
        if (!taken.count(n)) return n;
    }
}

// Renames the from-side of the unique patient tuple matching (from, to).
void remap_patient(Draft& d, const std::string& from, const std::string& to,
                   const std::string& from_new, const std::string& to_new) {
    for (auto& ix : d.interactions)
        for (auto& [f, t, s] : ix.patients)
            if (f == from && t == to) {
                f = from_new;
                t = to_new;
                return;
            }
}

void require(bool cond, const std::string& what) {
    if (!cond) throw StaleSite(what);
}

void require_edge(const Machine& m, int proc, int pos) {
    require(proc >= 0 && proc < static_cast<int>(m.processes().size()),
            "no such process");
    require(pos >= 0 && pos < m.edge_count(proc), "no such edge");
}

int next_pos(const Machine& m, int proc, int pos) {
    return (pos + 1) % static_cast<int>(m.processes()[proc].registers.size());
}

// --- R1 -------------------------------------------------------------------

Machine apply_r1_insert(const Machine& m, const Move& mv) {
    require_edge(m, mv.a, mv.b);
    if (!m.rack().is_quandle()) throw QuandleRequired("kinks need x . x = x");
    if (mv.d != 1 && mv.d != -1) throw BadParameter("kink sign must be +1 or -1");
    if (mv.c != 0 && mv.c != 1) throw BadParameter("kink agent must be 0 or 1");
    EdgeRef e{mv.a, mv.b};
    require(m.is_plain(e), "edge already labelled");
    int v = m.edge_from(e), w = m.edge_to(e);
    Draft d = m.to_draft();
    Draft::I kink;
    kink.agent = m.register_name(mv.c == 0 ? v : w);
    kink.patients.emplace_back(m.register_name(v), m.register_name(w), mv.d);
    d.interactions.push_back(std::move(kink));
    return d.build();
}

Machine apply_r1_remove(const Machine& m, const Move& mv) {
    require(mv.a >= 0 && mv.a < static_cast<int>(m.interactions().size()),
            "no such interaction");
    if (!m.rack().is_quandle()) throw QuandleRequired("kinks need x . x = x");
    const Interaction& ix = m.interactions()[mv.a];
    require(ix.patients.size() == 1, "not a kink");
    EdgeRef e = ix.patients[0].edge;
    require(ix.agent == m.edge_from(e) || ix.agent == m.edge_to(e), "not a kink");
    Draft d = m.to_draft();
    d.interactions.erase(d.interactions.begin() + mv.a);
    return d.build();
}

// --- R2 -------------------------------------------------------------------

// Splits the arc at (proc, pos) into three registers; the two new edges carry
// a cancelling pair of crossings under the chosen agent.
Machine apply_r2_insert(const Machine& m, const Move& mv) {
    require(mv.a >= 0 && mv.a < static_cast<int>(m.processes().size()),
            "no such process");
    const Process& p = m.processes()[mv.a];
    require(mv.b >= 0 && mv.b < static_cast<int>(p.registers.size()),
            "no such register position");
    if (mv.d != 1 && mv.d != -1) throw BadParameter("crossing sign must be +1 or -1");
    int x = p.registers[mv.b];
    int agent = mv.c < 0 ? x : mv.c;
    require(agent >= 0 && agent < m.register_count(), "no such agent register");

    std::string xn = m.register_name(x);
    std::string m1 = fresh_name(m, xn);
    std::string m2;
    {
        std::set<std::string> taken;
        for (const auto& r : m.registers()) taken.insert(r.name);
        taken.insert(m1);
        for (int k = 1;; ++k) {
            std::string n = xn + "_s" + std::to_string(k);
            if (!taken.count(n)) {
                m2 = n;
                break;
            }
        }
    }

    Draft d = m.to_draft();
    auto& regs = d.processes[mv.a].regs;
    // the old out-edge of x (if any) now leaves the tail register
    if (auto out = m.out_edge(x))
        remap_patient(d, xn, m.register_name(m.edge_to(*out)), m2,
                      m.register_name(m.edge_to(*out)));
    regs.insert(regs.begin() + mv.b + 1, {m1, m2});

    std::string an = m.register_name(agent);
    Draft::I i1, i2;
    i1.agent = an;
    i1.patients.emplace_back(xn, m1, mv.d);
    i2.agent = an;
    i2.patients.emplace_back(m1, m2, -mv.d);
    d.interactions.push_back(std::move(i1));
    d.interactions.push_back(std::move(i2));

    if (m.coloured(x)) {
        d.colours[m2] = m.colour(x);
        if (m.coloured(agent))
            d.colours[m1] = m.rack().act(m.colour(x), m.colour(agent), mv.d);
    }
    return d.build();
}

// Structural description of a removable cancelling pair.
struct R2Pair {
    int v = -1, mid = -1, w = -1; // strand registers
};

bool match_r2_pair(const Machine& m, int i, int j, R2Pair& out) {
    int ni = static_cast<int>(m.interactions().size());
    if (i < 0 || j < 0 || i >= ni || j >= ni || i == j) return false;
    const Interaction& a = m.interactions()[i];
    const Interaction& b = m.interactions()[j];
    if (a.agent != b.agent) return false;
    if (a.patients.size() != 1 || b.patients.size() != 1) return false;
    EdgeRef e1 = a.patients[0].edge, e2 = b.patients[0].edge;
    if (e1.proc != e2.proc) return false;
    if (next_pos(m, e1.proc, e1.pos) != e2.pos) return false;
    if (a.patients[0].sign != -b.patients[0].sign) return false;
    int mid = m.edge_to(e1);
    if (mid == m.edge_from(e1)) return false; // degenerate self-loop
    if (!m.agencies(mid).empty() || mid == a.agent) return false;
    out.v = m.edge_from(e1);
    out.mid = mid;
    out.w = m.edge_to(e2);
    return out.w != mid;
}

Machine apply_r2_remove(const Machine& m, const Move& mv) {
    R2Pair pr;
    require(match_r2_pair(m, mv.a, mv.b, pr), "not a cancelling pair");
    Draft d = m.to_draft();
    int hi = std::max(mv.a, mv.b), lo = std::min(mv.a, mv.b);
    d.interactions.erase(d.interactions.begin() + hi);
    d.interactions.erase(d.interactions.begin() + lo);

    std::string vn = m.register_name(pr.v);
    std::string midn = m.register_name(pr.mid);
    std::string wn = m.register_name(pr.w);
    if (pr.w != pr.v) {
        // merge the tail register back into the head
        for (auto& ix : d.interactions) {
            if (ix.agent == wn) ix.agent = vn;
            for (auto& [f, t, s] : ix.patients) {
                if (f == wn) f = vn;
                if (t == wn) t = vn;
                (void)s;
            }
        }
    }
    auto& regs = d.processes[m.registers()[pr.mid].process].regs;
    regs.erase(std::remove(regs.begin(), regs.end(), midn), regs.end());
    if (pr.w != pr.v) regs.erase(std::remove(regs.begin(), regs.end(), wn), regs.end());
    d.colours.erase(midn);
    if (pr.w != pr.v) d.colours.erase(wn);
    return d.build();
}

// --- R3 -------------------------------------------------------------------

struct R3Site {
    int pusher_from = -1, pusher_to = -1; // registers p, a2
    int sigma = +1;                       // common sign of i1's patients
    // per moved strand: i2 patient edge (v -> w) and its predecessor (u -> v)
    struct Strand {
        EdgeRef pred, edge;
        int u, v, w;
        int sign; // i2 patient sign
    };
    std::vector<Strand> strands;
};

bool match_r3(const Machine& m, int i1, int i2, bool forward, R3Site& out) {
    int ni = static_cast<int>(m.interactions().size());
    if (i1 < 0 || i2 < 0 || i1 >= ni || i2 >= ni || i1 == i2) return false;
    const Interaction& one = m.interactions()[i1];
    const Interaction& two = m.interactions()[i2];

    auto pusher = forward ? m.in_edge(two.agent) : m.out_edge(two.agent);
    if (!pusher) return false;
    bool found = false;
    int sigma = 0;
    for (const auto& pt : one.patients) {
        if (pt.edge == *pusher) {
            found = true;
            sigma = pt.sign;
        }
    }
    if (!found) return false;
    for (const auto& pt : one.patients)
        if (pt.sign != sigma) return false;
    if (one.patients.size() != two.patients.size() + 1) return false;

    out.pusher_from = m.edge_from(*pusher);
    out.pusher_to = m.edge_to(*pusher);
    out.sigma = sigma;
    out.strands.clear();

    std::set<EdgeRef> rest;
    for (const auto& pt : one.patients)
        if (pt.edge != *pusher) rest.insert(pt.edge);
    for (const auto& pt : two.patients) {
        R3Site::Strand st;
        if (forward) {
            st.edge = pt.edge;
            auto pred = m.in_edge(m.edge_from(pt.edge));
            if (!pred || !rest.count(*pred)) return false;
            st.pred = *pred;
        } else {
            st.pred = pt.edge;
            auto succ = m.out_edge(m.edge_to(pt.edge));
            if (!succ || !rest.count(*succ)) return false;
            st.edge = *succ;
        }
        rest.erase(forward ? st.pred : st.edge);
        st.u = m.edge_from(st.pred);
        st.v = m.edge_to(st.pred);
        st.w = m.edge_to(st.edge);
        st.sign = pt.sign;
        out.strands.push_back(st);
    }
    return rest.empty();
}

Machine apply_r3(const Machine& m, const Move& mv, bool forward) {
    R3Site site;
    require(match_r3(m, mv.a, mv.b, forward, site), "no third-move site here");
    Draft d = m.to_draft();
    Draft::I& one = d.interactions[mv.a];
    Draft::I& two = d.interactions[mv.b];

    auto nm = [&](int r) { return m.register_name(r); };
    // the moved labels swap between the two interactions
    for (auto& [f, t, s] : one.patients) {
        for (const auto& st : site.strands)
            if (f == nm(st.u) && t == nm(st.v)) {
                f = nm(st.v);
                t = nm(st.w);
                break;
            } else if (f == nm(st.v) && t == nm(st.w)) {
                f = nm(st.u);
                t = nm(st.v);
                break;
            }
        (void)s;
    }
    for (auto& [f, t, s] : two.patients) {
        for (const auto& st : site.strands)
            if (f == nm(st.u) && t == nm(st.v)) {
                f = nm(st.v);
                t = nm(st.w);
                break;
            } else if (f == nm(st.v) && t == nm(st.w)) {
                f = nm(st.u);
                t = nm(st.v);
                break;
            }
        (void)s;
    }
    // the other interaction's agent slides along the pusher edge
    two.agent = forward ? nm(site.pusher_from) : nm(site.pusher_to);

    // middles are recoloured by the label that now precedes them
    int acter = forward ? site.pusher_from : m.interactions()[mv.a].agent;
    for (const auto& st : site.strands) {
        int s = forward ? st.sign : site.sigma;
        if (m.coloured(st.u) && m.coloured(acter))
            d.colours[nm(st.v)] = m.rack().act(m.colour(st.u), m.colour(acter), s);
        else
            d.colours.erase(nm(st.v));
    }
    return d.build();
}

// --- stabilization ---------------------------------------------------------

Machine apply_stabilize(const Machine& m, const Move& mv) {
    require(mv.a >= 0 && mv.a < m.register_count(), "no such register");
    if (mv.b != 0 && mv.b != 1) throw BadParameter("keep flag must be 0 or 1");
    const RegisterInfo& info = m.registers()[mv.a];
    std::string rn = info.name;
    std::string fresh = fresh_name(m, rn);
    Draft d = m.to_draft();
    auto& regs = d.processes[info.process].regs;
    if (mv.b == 0) {
        // fresh register after r; r's out-edge leaves the fresh one
        if (auto out = m.out_edge(mv.a))
            remap_patient(d, rn, m.register_name(m.edge_to(*out)), fresh,
                          m.register_name(m.edge_to(*out)));
        regs.insert(regs.begin() + info.pos + 1, fresh);
    } else {
        // fresh register before r; r's in-edge enters the fresh one
        if (auto in = m.in_edge(mv.a))
            remap_patient(d, m.register_name(m.edge_from(*in)), rn,
                          m.register_name(m.edge_from(*in)), fresh);
        regs.insert(regs.begin() + info.pos, fresh);
    }
    if (m.coloured(mv.a)) d.colours[fresh] = m.colour(mv.a);
    return d.build();
}

Machine apply_destabilize(const Machine& m, const Move& mv) {
    require_edge(m, mv.a, mv.b);
    if (mv.c != 0 && mv.c != 1) throw BadParameter("remove flag must be 0 or 1");
    EdgeRef e{mv.a, mv.b};
    require(m.is_plain(e), "edge is labelled");
    int victim = mv.c == 0 ? m.edge_from(e) : m.edge_to(e);
    int other = mv.c == 0 ? m.edge_to(e) : m.edge_from(e);
    require(victim != other, "cannot empty the process");
    require(m.agencies(victim).empty(), "register acts somewhere");
    std::string vn = m.register_name(victim);
    Draft d = m.to_draft();
    if (mv.c == 0) {
        // victim's in-edge (if labelled) lands on the surviving register
        if (auto in = m.in_edge(victim))
            remap_patient(d, m.register_name(m.edge_from(*in)), vn,
                          m.register_name(m.edge_from(*in)), m.register_name(other));
    } else {
        if (auto out = m.out_edge(victim))
            remap_patient(d, vn, m.register_name(m.edge_to(*out)),
                          m.register_name(other), m.register_name(m.edge_to(*out)));
    }
    auto& regs = d.processes[m.registers()[victim].process].regs;
    regs.erase(std::remove(regs.begin(), regs.end(), vn), regs.end());
    d.colours.erase(vn);
    return d.build();
}

// --- false moves ------------------------------------------------------------

Machine apply_false_join(const Machine& m, const Move& mv) {
    require_edge(m, mv.a, mv.b);
    EdgeRef e{mv.a, mv.b};
    require(m.is_plain(e), "edge is labelled");
    int v = m.edge_from(e), w = m.edge_to(e);
    require(v != w, "nothing to join");
    require(m.is_agent(v) && m.is_agent(w), "endpoints must both act");
    std::string vn = m.register_name(v), wn = m.register_name(w);
    Draft d = m.to_draft();
    for (auto& ix : d.interactions) {
        if (ix.agent == wn) ix.agent = vn;
        for (auto& [f, t, s] : ix.patients) {
            if (f == wn) f = vn;
            if (t == wn) t = vn;
            (void)s;
        }
    }
    auto& regs = d.processes[m.registers()[w].process].regs;
    regs.erase(std::remove(regs.begin(), regs.end(), wn), regs.end());
    d.colours.erase(wn);
    d.false_moves += 1;
    return d.build();
}

Machine apply_false_resolve(const Machine& m, const Move& mv) {
    require(mv.a >= 0 && mv.a < m.register_count(), "no such register");
    auto ags = m.agencies(mv.a);
    require(!ags.empty(), "register does not act");
    require(ags.size() >= 64 || mv.mask < (1ull << ags.size()),
            "mask selects a nonexistent agency");
    // both the staying and the moving agency sets must be nonempty
    std::uint64_t full = ags.size() >= 64 ? ~0ull : (1ull << ags.size()) - 1;
    require(mv.mask != 0 && mv.mask != full, "mask does not split the agencies");
    const RegisterInfo& info = m.registers()[mv.a];
    std::string rn = info.name;
    std::string fresh = fresh_name(m, rn);
    Draft d = m.to_draft();
    // agencies with a clear mask bit move to the fresh register
    for (std::size_t i = 0; i < ags.size(); ++i)
        if (!(mv.mask >> i & 1)) d.interactions[ags[i]].agent = fresh;
    if (auto out = m.out_edge(mv.a))
        remap_patient(d, rn, m.register_name(m.edge_to(*out)), fresh,
                      m.register_name(m.edge_to(*out)));
    auto& regs = d.processes[info.process].regs;
    regs.insert(regs.begin() + info.pos + 1, fresh);
    if (m.coloured(mv.a)) d.colours[fresh] = m.colour(mv.a);
    d.false_moves += 1;
    return d.build();
}

// --- rack automorphism -------------------------------------------------------

Machine apply_automorphism(const Machine& m, const Move& mv) {
    require(mv.a >= 0 && mv.a < m.rack().size(), "no such rack element");
    if (mv.b != 0 && mv.b != 1) throw BadParameter("direction must be 0 or 1");
    int sign = mv.b == 0 ? +1 : -1;
    std::vector<int> comps = m.process_components();
    if (mv.c >= 0)
        require(mv.c < m.component_count(), "no such component");
    Draft d = m.to_draft();
    for (int r = 0; r < m.register_count(); ++r) {
        if (!m.coloured(r)) continue;
        if (mv.c >= 0 && comps[m.registers()[r].process] != mv.c) continue;
        d.colours[m.register_name(r)] = m.rack().act(m.colour(r), mv.a, sign);
    }
    return d.build();
}

// --- enumeration -------------------------------------------------------------

bool unit_r2_site(const Machine& m, int x, int agent, int sign) {
    if (!m.coloured(x) || !m.coloured(agent)) return false;
    if (m.colour(agent) != m.colour(x)) return false;
    return m.rack().act(m.colour(x), m.colour(agent), sign) == m.colour(x);
}

void enumerate_kind(const Machine& m, MoveKind kind, const EnumOptions& opts,
                    std::vector<Move>& out) {
    int np = static_cast<int>(m.processes().size());
    int ni = static_cast<int>(m.interactions().size());
    switch (kind) {
    case MoveKind::R1Insert: {
        if (!m.rack().is_quandle()) break;
        for (int p = 0; p < np; ++p)
            for (int pos = 0; pos < m.edge_count(p); ++pos) {
                if (!m.is_plain({p, pos})) continue;
                for (int c : {0, 1})
                    for (int d : {1, -1}) out.push_back({kind, p, pos, c, d, 0});
            }
        break;
    }
    case MoveKind::R1Remove: {
        if (!m.rack().is_quandle()) break;
        for (int i = 0; i < ni; ++i) {
            const Interaction& ix = m.interactions()[i];
            if (ix.patients.size() != 1) continue;
            EdgeRef e = ix.patients[0].edge;
            if (ix.agent == m.edge_from(e) || ix.agent == m.edge_to(e))
                out.push_back({kind, i, -1, -1, 0, 0});
        }
        break;
    }
    case MoveKind::R2Insert: {
        for (int p = 0; p < np; ++p) {
            int sz = static_cast<int>(m.processes()[p].registers.size());
            for (int pos = 0; pos < sz; ++pos) {
                int x = m.processes()[p].registers[pos];
                for (int c = -1; c < m.register_count(); ++c) {
                    if (c == x) continue; // c = -1 already means the source
                    int agent = c < 0 ? x : c;
                    for (int d : {1, -1}) {
                        if (opts.unit_r2_only && !unit_r2_site(m, x, agent, d))
                            continue;
                        out.push_back({kind, p, pos, c, d, 0});
                    }
                }
            }
        }
        break;
    }
    case MoveKind::R2Remove: {
        for (int i = 0; i < ni; ++i)
            for (int j = 0; j < ni; ++j) {
                R2Pair pr;
                if (!match_r2_pair(m, i, j, pr)) continue;
                if (opts.unit_r2_only &&
                    !(is_unit_interaction(m, i) && is_unit_interaction(m, j)))
                    continue;
                out.push_back({kind, i, j, -1, 0, 0});
            }
        break;
    }
    case MoveKind::R3Forward:
    case MoveKind::R3Backward: {
        bool forward = kind == MoveKind::R3Forward;
        for (int i = 0; i < ni; ++i)
            for (int j = 0; j < ni; ++j) {
                R3Site site;
                if (!match_r3(m, i, j, forward, site)) continue;
                if (opts.matched_r3_only) {
                    int z = m.interactions()[i].agent;
                    int p = site.pusher_from, a2 = site.pusher_to;
                    if (!m.coloured(z) || !m.coloured(p) || !m.coloured(a2)) continue;
                    if (m.colour(z) != m.colour(p) || m.colour(z) != m.colour(a2))
                        continue;
                    int acter = forward ? p : z;
                    bool identity = true;
                    for (const auto& st : site.strands) {
                        int s = forward ? st.sign : site.sigma;
                        if (!m.coloured(st.u) || !m.coloured(st.v) ||
                            m.rack().act(m.colour(st.u), m.colour(acter), s) !=
                                m.colour(st.v)) {
                            identity = false;
                            break;
                        }
                    }
                    if (!identity) continue;
                }
                out.push_back({kind, i, j, -1, 0, 0});
            }
        break;
    }
    case MoveKind::Stabilize: {
        for (int r = 0; r < m.register_count(); ++r)
            out.push_back({kind, r, 0, -1, 0, 0});
        break;
    }
    case MoveKind::Destabilize: {
        for (int p = 0; p < np; ++p) {
            if (m.processes()[p].registers.size() < 2) continue;
            for (int pos = 0; pos < m.edge_count(p); ++pos) {
                EdgeRef e{p, pos};
                if (!m.is_plain(e)) continue;
                for (int c : {0, 1}) {
                    int victim = c == 0 ? m.edge_from(e) : m.edge_to(e);
                    if (!m.agencies(victim).empty()) continue;
                    out.push_back({kind, p, pos, c, 0, 0});
                }
            }
        }
        break;
    }
    case MoveKind::FalseJoin: {
        for (int p = 0; p < np; ++p)
            for (int pos = 0; pos < m.edge_count(p); ++pos) {
                EdgeRef e{p, pos};
                if (!m.is_plain(e)) continue;
                int v = m.edge_from(e), w = m.edge_to(e);
                if (v == w || !m.is_agent(v) || !m.is_agent(w)) continue;
                out.push_back({kind, p, pos, -1, 0, 0});
            }
        break;
    }
    case MoveKind::FalseResolve: {
        for (int r = 0; r < m.register_count(); ++r) {
            std::size_t k = m.agencies(r).size();
            if (k < 2 || k > 16) continue;
            for (std::uint64_t mask = 1; mask + 1 < (1ull << k); ++mask)
                out.push_back({kind, r, -1, -1, 0, mask});
        }
        break;
    }
    case MoveKind::RackAutomorphism: {
        int ncomp = m.component_count();
        std::vector<std::set<int>> support(ncomp); // colours used per component
        if (ncomp >= 2) {
            std::vector<int> comp = m.process_components();
            for (int p = 0; p < np; ++p)
                for (int r : m.processes()[p].registers)
                    if (m.coloured(r)) support[comp[p]].insert(m.colour(r));
        }
        for (int q = 0; q < m.rack().size(); ++q)
            for (int dir : {0, 1}) {
                out.push_back({kind, q, dir, -1, 0, 0});
                if (ncomp < 2) continue;
                for (int c = 0; c < ncomp; ++c) {
                    // Componentwise sites are offered only when the component's
                    // colours, before and after the relabelling, stay disjoint
                    // from colours used elsewhere; otherwise the move changes
                    // which colourings collide rather than merely renaming them.
                    bool clean = true;
                    for (int o = 0; o < ncomp && clean; ++o) {
                        if (o == c) continue;
                        for (int col : support[c]) {
                            if (support[o].count(col) ||
                                support[o].count(m.rack().act(col, q, dir == 0 ? +1 : -1))) {
                                clean = false;
                                break;
                            }
                        }
                    }
                    if (clean) out.push_back({kind, q, dir, c, 0, 0});
                }
            }
        break;
    }
    }
}

} // namespace

std::vector<Move> enumerate_sites(const Machine& m, const std::vector<MoveKind>& kinds,
                                  const EnumOptions& opts) {
    std::vector<Move> out;
    for (MoveKind k : kinds) enumerate_kind(m, k, opts, out);
    return out;
}

Machine apply_move(const Machine& m, const Move& mv) {
    switch (mv.kind) {
    case MoveKind::R1Insert: return apply_r1_insert(m, mv);
    case MoveKind::R1Remove: return apply_r1_remove(m, mv);
    case MoveKind::R2Insert: return apply_r2_insert(m, mv);
    case MoveKind::R2Remove: return apply_r2_remove(m, mv);
    case MoveKind::R3Forward: return apply_r3(m, mv, true);
    case MoveKind::R3Backward: return apply_r3(m, mv, false);
    case MoveKind::Stabilize: return apply_stabilize(m, mv);
    case MoveKind::Destabilize: return apply_destabilize(m, mv);
    case MoveKind::FalseJoin: return apply_false_join(m, mv);
    case MoveKind::FalseResolve: return apply_false_resolve(m, mv);
    case MoveKind::RackAutomorphism: return apply_automorphism(m, mv);
    }
    throw BadParameter("unknown move kind");
}

namespace {

std::uint64_t bounded(std::mt19937_64& g, std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t mask = ~0ull >> std::countl_zero(n - 1);
    for (;;) {
        std::uint64_t v = g() & mask;
        if (v < n) return v;
    }
}

} // namespace

WalkResult random_walk(const Machine& m, int steps, std::uint64_t seed,
                       const std::vector<MoveKind>& kinds, const EnumOptions& opts) {
    WalkResult out{m, {}, false};
    std::mt19937_64 rng(seed);
    for (int step = 0; step < steps; ++step) {
        auto sites = enumerate_sites(out.machine, kinds, opts);
        if (sites.empty()) {
            out.starved = true;
            break;
        }
        // Draw the kind first (uniform over kinds with a site), then a site
        // within it: growing and shrinking kinds get equal weight, so walks
        // stay near their starting size instead of drifting upward.
        std::vector<MoveKind> present;
        for (MoveKind k : kinds) {
            bool has = false;
            for (const Move& s : sites)
                if (s.kind == k) {
                    has = true;
                    break;
                }
            if (has && std::find(present.begin(), present.end(), k) == present.end())
                present.push_back(k);
        }
        MoveKind pick = present[bounded(rng, present.size())];
        std::vector<const Move*> pool;
        for (const Move& s : sites)
            if (s.kind == pick) pool.push_back(&s);
        const Move& mv = *pool[bounded(rng, pool.size())];
        out.machine = apply_move(out.machine, mv);
        out.trace.push_back(mv);
    }
    return out;
}

} // namespace tangle
