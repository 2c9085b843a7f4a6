#include "tangle/machine.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "tangle/errors.hpp"

namespace tangle {

Machine::Machine(std::shared_ptr<const Rack> rack, std::vector<Process> processes,
                 std::vector<RegisterInfo> registers, std::vector<Interaction> interactions,
                 std::vector<int16_t> colours, int false_moves)
    : rack_(std::move(rack)), processes_(std::move(processes)),
      registers_(std::move(registers)), interactions_(std::move(interactions)),
      colours_(std::move(colours)), false_moves_(false_moves) {
    if (!rack_) throw BadParameter("machine needs a rack");
    if (false_moves_ < 0) throw BadParameter("false move count cannot be negative");
    int nreg = static_cast<int>(registers_.size());

    for (int i = 0; i < nreg; ++i)
        if (!reg_ids_.emplace(registers_[i].name, i).second)
            throw DuplicateName("register '" + registers_[i].name + "' declared twice");

    std::set<std::string> pnames;
    std::vector<char> placed(nreg, 0);
    for (std::size_t p = 0; p < processes_.size(); ++p) {
        const Process& proc = processes_[p];
        if (!pnames.insert(proc.name).second)
            throw DuplicateName("process '" + proc.name + "' declared twice");
        if (proc.registers.empty())
            throw BadParameter("process '" + proc.name + "' has no registers");
        for (std::size_t pos = 0; pos < proc.registers.size(); ++pos) {
            int id = proc.registers[pos];
            if (id < 0 || id >= nreg || placed[id])
                throw BadParameter("register table inconsistent with processes");
            placed[id] = 1;
            if (registers_[id].process != static_cast<int>(p) ||
                registers_[id].pos != static_cast<int>(pos))
                throw BadParameter("register table inconsistent with processes");
        }
    }
    for (int i = 0; i < nreg; ++i)
        if (!placed[i]) throw BadParameter("register '" + registers_[i].name +
                                           "' belongs to no process");

    if (static_cast<int>(colours_.size()) != nreg)
        throw BadParameter("colour table size does not match register count");
    for (int c : colours_)
        if (c < kUncoloured || c >= rack_->size())
            throw ColourOutOfRange("colour " + std::to_string(c) +
                                   " outside rack of size " + std::to_string(rack_->size()));

    for (auto& ix : interactions_) {
        if (ix.agent < 0 || ix.agent >= nreg)
            throw BadParameter("interaction agent is not a register");
        if (ix.patients.empty()) throw BadParameter("interaction has no patients");
        for (const auto& pt : ix.patients) {
            if (pt.edge.proc < 0 || pt.edge.proc >= static_cast<int>(processes_.size()) ||
                pt.edge.pos < 0 || pt.edge.pos >= edge_count(pt.edge.proc))
                throw BadParameter("interaction patient is not an edge");
            if (pt.sign != 1 && pt.sign != -1)
                throw BadParameter("interaction sign must be +1 or -1");
        }
        std::sort(ix.patients.begin(), ix.patients.end());
    }
    std::sort(interactions_.begin(), interactions_.end(),
              [](const Interaction& a, const Interaction& b) {
                  if (a.agent != b.agent) return a.agent < b.agent;
                  return a.patients < b.patients;
              });

    edge_labels_.resize(processes_.size());
    for (std::size_t p = 0; p < processes_.size(); ++p)
        edge_labels_[p].assign(edge_count(static_cast<int>(p)), -1);
    for (std::size_t i = 0; i < interactions_.size(); ++i)
        for (const auto& pt : interactions_[i].patients) {
            int& slot = edge_labels_[pt.edge.proc][pt.edge.pos];
            if (slot != -1)
                throw BadParameter("edge " + processes_[pt.edge.proc].name + "[" +
                                   std::to_string(pt.edge.pos) + "] labelled twice");
            slot = static_cast<int>(i);
        }
}

int Machine::register_id(const std::string& name) const {
    auto it = reg_ids_.find(name);
    if (it == reg_ids_.end()) throw UnknownRegister("unknown register '" + name + "'");
    return it->second;
}

bool Machine::fully_coloured() const {
    for (int c : colours_)
        if (c == kUncoloured) return false;
    return true;
}

int Machine::edge_count(int proc) const {
    int k = static_cast<int>(processes_.at(proc).registers.size());
    return processes_[proc].closed ? k : k - 1;
}

int Machine::edge_from(EdgeRef e) const {
    return processes_.at(e.proc).registers.at(e.pos);
}

int Machine::edge_to(EdgeRef e) const {
    const auto& regs = processes_.at(e.proc).registers;
    return regs.at((e.pos + 1) % regs.size());
}

std::optional<EdgeRef> Machine::out_edge(int reg) const {
    const RegisterInfo& info = registers_.at(reg);
    const Process& p = processes_[info.process];
    if (!p.closed && info.pos + 1 == static_cast<int>(p.registers.size()))
        return std::nullopt;
    return EdgeRef{info.process, info.pos};
}

std::optional<EdgeRef> Machine::in_edge(int reg) const {
    const RegisterInfo& info = registers_.at(reg);
    const Process& p = processes_[info.process];
    int k = static_cast<int>(p.registers.size());
    if (info.pos == 0) {
        if (!p.closed) return std::nullopt;
        return EdgeRef{info.process, k - 1};
    }
    return EdgeRef{info.process, info.pos - 1};
}

int Machine::edge_label(EdgeRef e) const { return edge_labels_.at(e.proc).at(e.pos); }

bool Machine::is_agent(int reg) const {
    for (const auto& ix : interactions_)
        if (ix.agent == reg) return true;
    return false;
}

std::vector<int> Machine::agencies(int reg) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < interactions_.size(); ++i)
        if (interactions_[i].agent == reg) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> Machine::process_components() const {
    int np = static_cast<int>(processes_.size());
    std::vector<int> parent(np);
    for (int i = 0; i < np; ++i) parent[i] = i;
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& ix : interactions_) {
        int a = find(registers_[ix.agent].process);
        for (const auto& pt : ix.patients) {
            int b = find(pt.edge.proc);
            parent[std::max(a, b)] = std::min(a, b);
            a = find(a);
        }
    }
    std::vector<int> comp(np, -1);
    int next = 0;
    for (int p = 0; p < np; ++p) {
        int r = find(p);
        if (comp[r] < 0) comp[r] = next++;
        comp[p] = comp[r];
    }
    return comp;
}

int Machine::component_count() const {
    auto c = process_components();
    return c.empty() ? 0 : 1 + *std::max_element(c.begin(), c.end());
}

ValidationReport Machine::validate() const {
    ValidationReport rep;
    for (std::size_t i = 0; i < registers_.size(); ++i)
        if (colours_[i] == kUncoloured)
            rep.warnings.push_back({registers_[i].name, "register is uncoloured"});

    for (std::size_t p = 0; p < processes_.size(); ++p) {
        for (int pos = 0; pos < edge_count(static_cast<int>(p)); ++pos) {
            EdgeRef e{static_cast<int>(p), pos};
            int v = edge_from(e), w = edge_to(e);
            if (!coloured(v) || !coloured(w)) continue;
            std::string where = processes_[p].name + "[" + std::to_string(pos) + "]";
            int lab = edge_label(e);
            if (lab < 0) {
                if (colour(v) != colour(w))
                    rep.errors.push_back(
                        {where, "plain edge " + registers_[v].name + " -> " +
                                    registers_[w].name + " joins colour " +
                                    std::to_string(colour(v)) + " to colour " +
                                    std::to_string(colour(w))});
                continue;
            }
            int a = interactions_[lab].agent;
            if (!coloured(a)) continue;
            int sign = 0;
            for (const auto& pt : interactions_[lab].patients)
                if (pt.edge == e) sign = pt.sign;
            int want = rack_->act(colour(v), colour(a), sign);
            if (colour(w) != want)
                rep.errors.push_back(
                    {where, "edge " + registers_[v].name + " -> " + registers_[w].name +
                                " under agent " + registers_[a].name + " expects colour " +
                                std::to_string(want) + ", found " +
                                std::to_string(colour(w))});
        }
    }
    return rep;
}

Draft Machine::to_draft() const {
    Draft d;
    d.rack = rack_;
    for (const auto& p : processes_) {
        Draft::P dp;
        dp.name = p.name;
        dp.closed = p.closed;
        for (int r : p.registers) dp.regs.push_back(registers_[r].name);
        d.processes.push_back(std::move(dp));
    }
    for (const auto& ix : interactions_) {
        Draft::I di;
        di.agent = registers_[ix.agent].name;
        for (const auto& pt : ix.patients)
            di.patients.emplace_back(registers_[edge_from(pt.edge)].name,
                                     registers_[edge_to(pt.edge)].name, pt.sign);
        d.interactions.push_back(std::move(di));
    }
    for (std::size_t i = 0; i < registers_.size(); ++i)
        if (colours_[i] != kUncoloured) d.colours[registers_[i].name] = colours_[i];
    d.false_moves = false_moves_;
    return d;
}

Machine Draft::build() const {
    if (!rack) throw BadParameter("draft has no rack");

    std::vector<Process> procs;
    std::vector<RegisterInfo> regs;
    std::map<std::string, int> ids;
    for (std::size_t p = 0; p < processes.size(); ++p) {
        Process proc;
        proc.name = processes[p].name;
        proc.closed = processes[p].closed;
        for (std::size_t pos = 0; pos < processes[p].regs.size(); ++pos) {
            const std::string& rn = processes[p].regs[pos];
            int id = static_cast<int>(regs.size());
            if (!ids.emplace(rn, id).second)
                throw DuplicateName("register '" + rn + "' declared twice");
            regs.push_back({rn, static_cast<int>(p), static_cast<int>(pos)});
            proc.registers.push_back(id);
        }
        procs.push_back(std::move(proc));
    }

    auto lookup = [&](const std::string& rn) {
        auto it = ids.find(rn);
        if (it == ids.end()) throw UnknownRegister("unknown register '" + rn + "'");
        return it->second;
    };

    std::vector<Interaction> ints;
    for (const auto& di : interactions) {
        Interaction ix;
        ix.agent = lookup(di.agent);
        for (const auto& [from, to, sign] : di.patients) {
            int f = lookup(from), t = lookup(to);
            const RegisterInfo& fi = regs[f];
            const Process& fp = procs[fi.process];
            int k = static_cast<int>(fp.registers.size());
            bool edge = (fi.pos + 1 < k && fp.registers[fi.pos + 1] == t) ||
                        (fp.closed && fi.pos == k - 1 && fp.registers[0] == t);
            if (!edge)
                throw BadParameter("(" + from + ", " + to + ") is not an edge");
            ix.patients.push_back({EdgeRef{fi.process, fi.pos}, sign});
        }
        ints.push_back(std::move(ix));
    }

    std::vector<int16_t> cols(regs.size(), kUncoloured);
    for (const auto& [rn, c] : colours) {
        int id = lookup(rn);
        if (c == kUncoloured) continue;
        if (c < 0 || c >= rack->size())
            throw ColourOutOfRange("colour " + std::to_string(c) + " for register '" +
                                   rn + "' outside rack of size " +
                                   std::to_string(rack->size()));
        cols[id] = static_cast<int16_t>(c);
    }

    return Machine(rack, std::move(procs), std::move(regs), std::move(ints),
                   std::move(cols), false_moves);
}

bool operator==(const Machine& a, const Machine& b) {
    return canonical_tmd(a) == canonical_tmd(b);
}

bool same_skeleton(const Machine& a, const Machine& b) {
    if (a.rack().name() != b.rack().name() || !(a.rack() == b.rack())) return false;
    if (a.processes().size() != b.processes().size()) return false;
    for (std::size_t p = 0; p < a.processes().size(); ++p) {
        const Process& pa = a.processes()[p];
        const Process& pb = b.processes()[p];
        if (pa.name != pb.name || pa.closed != pb.closed ||
            pa.registers.size() != pb.registers.size())
            return false;
        for (std::size_t i = 0; i < pa.registers.size(); ++i)
            if (a.register_name(pa.registers[i]) != b.register_name(pb.registers[i]))
                return false;
    }
    return true;
}

Machine colour_suppress(const Machine& m) {
    Draft d = m.to_draft();
    d.colours.clear();
    return d.build();
}

namespace {

// Set-once colour completion: propagate seeds through plain edges and through
// labelled edges whose agent colour is known. A contradiction throws
// InconsistentColouring or (when recolouring) InconsistentRecolouring.
std::vector<int16_t> propagate(const Machine& m, std::vector<int16_t> col,
                               bool recolouring) {
    auto fail = [&](const std::string& msg) -> void {
        if (recolouring) throw InconsistentRecolouring(msg);
        throw InconsistentColouring(msg);
    };
    std::deque<int> queue;
    for (int r = 0; r < m.register_count(); ++r)
        if (col[r] != kUncoloured) queue.push_back(r);

    auto assign = [&](int r, int c) {
        if (col[r] == kUncoloured) {
            col[r] = static_cast<int16_t>(c);
            queue.push_back(r);
        } else if (col[r] != c) {
            fail("register '" + m.register_name(r) + "' would need colour " +
                 std::to_string(c) + " but has " + std::to_string(col[r]));
        }
    };

    auto handle_edge = [&](EdgeRef e) {
        int v = m.edge_from(e), w = m.edge_to(e);
        int lab = m.edge_label(e);
        if (lab < 0) {
            if (col[v] != kUncoloured) assign(w, col[v]);
            else if (col[w] != kUncoloured) assign(v, col[w]);
            return;
        }
        const Interaction& ix = m.interactions()[lab];
        if (col[ix.agent] == kUncoloured) return;
        int sign = 0;
        for (const auto& pt : ix.patients)
            if (pt.edge == e) sign = pt.sign;
        if (col[v] != kUncoloured)
            assign(w, m.rack().act(col[v], col[ix.agent], sign));
        else if (col[w] != kUncoloured)
            assign(v, m.rack().act(col[w], col[ix.agent], -sign));
    };

    while (!queue.empty()) {
        int r = queue.front();
        queue.pop_front();
        if (auto e = m.out_edge(r)) handle_edge(*e);
        if (auto e = m.in_edge(r)) handle_edge(*e);
        for (int i : m.agencies(r))
            for (const auto& pt : m.interactions()[i].patients) handle_edge(pt.edge);
    }
    return col;
}

Machine with_colours(const Machine& m, const std::vector<int16_t>& col, int false_moves) {
    Draft d = m.to_draft();
    d.colours.clear();
    for (int r = 0; r < m.register_count(); ++r)
        if (col[r] != kUncoloured) d.colours[m.register_name(r)] = col[r];
    d.false_moves = false_moves;
    return d.build();
}

} // namespace

Machine connect_sum(const Machine& m1, const Machine& m2) {
    if (!same_skeleton(m1, m2))
        throw SkeletonMismatch("connect sum needs summands with one skeleton");

    std::set<EdgeRef> edges1;
    std::set<int> agents1;
    for (const auto& ix : m1.interactions()) {
        agents1.insert(ix.agent);
        for (const auto& pt : ix.patients) edges1.insert(pt.edge);
    }
    for (const auto& ix : m2.interactions()) {
        if (agents1.count(ix.agent))
            throw OverlappingDomains("summands share agent register '" +
                                     m2.register_name(ix.agent) + "'");
        for (const auto& pt : ix.patients)
            if (edges1.count(pt.edge))
                throw OverlappingDomains("summands label a common edge");
    }

    std::vector<int16_t> col(m1.register_count(), kUncoloured);
    auto stamp = [&](const Machine& m) {
        for (const auto& ix : m.interactions()) {
            std::vector<int> active = {ix.agent};
            for (const auto& pt : ix.patients) {
                active.push_back(m.edge_from(pt.edge));
                active.push_back(m.edge_to(pt.edge));
            }
            for (int r : active) {
                if (!m.coloured(r)) continue;
                if (col[r] == kUncoloured) col[r] = static_cast<int16_t>(m.colour(r));
                else if (col[r] != m.colour(r))
                    throw InconsistentColouring(
                        "summands colour active register '" + m.register_name(r) +
                        "' differently");
            }
        }
    };
    stamp(m1);
    stamp(m2);

    Draft d = m1.to_draft();
    Draft d2 = m2.to_draft();
    d.interactions.insert(d.interactions.end(), d2.interactions.begin(),
                          d2.interactions.end());
    d.colours.clear();
    Draft skeleton = d;
    for (int r = 0; r < m1.register_count(); ++r)
        if (col[r] != kUncoloured) skeleton.colours[m1.register_name(r)] = col[r];
    Machine united = skeleton.build();

    col = propagate(united, std::move(col), false);
    for (int r = 0; r < united.register_count(); ++r) {
        if (col[r] != kUncoloured) continue;
        if (m1.colour(r) != m2.colour(r))
            throw InconsistentColouring("register '" + united.register_name(r) +
                                        "' is unreachable and coloured differently "
                                        "in the summands");
        col[r] = static_cast<int16_t>(m1.colour(r));
    }
    return with_colours(united, col, m1.false_moves() + m2.false_moves());
}

Machine cancel_factor(const Machine& m, const std::vector<int>& interaction_indices) {
    int ni = static_cast<int>(m.interactions().size());
    std::set<int> gone;
    for (int i : interaction_indices) {
        if (i < 0 || i >= ni)
            throw IndexOutOfRange("interaction index " + std::to_string(i) +
                                  " outside 0.." + std::to_string(ni - 1));
        gone.insert(i);
    }
    if (gone.empty()) return m;

    std::vector<char> touched(m.register_count(), 0);
    for (int i : gone) {
        const Interaction& ix = m.interactions()[i];
        touched[ix.agent] = 1;
        for (const auto& pt : ix.patients) {
            touched[m.edge_from(pt.edge)] = 1;
            touched[m.edge_to(pt.edge)] = 1;
        }
    }

    Draft d = m.to_draft();
    std::vector<Draft::I> kept;
    for (int i = 0; i < ni; ++i)
        if (!gone.count(i)) kept.push_back(d.interactions[i]);
    d.interactions = std::move(kept);
    d.colours.clear();
    Machine remainder = d.build(); // uncoloured scaffold for deduction

    std::vector<int16_t> col(m.register_count(), kUncoloured);
    for (int r = 0; r < m.register_count(); ++r)
        if (!touched[r]) col[r] = static_cast<int16_t>(m.colour(r));

    col = propagate(remainder, std::move(col), true);
    while (true) {
        int pin = -1;
        for (int r = 0; r < m.register_count(); ++r)
            if (col[r] == kUncoloured && m.coloured(r)) {
                pin = r;
                break;
            }
        if (pin < 0) break;
        col[pin] = static_cast<int16_t>(m.colour(pin));
        col = propagate(remainder, std::move(col), true);
    }
    return with_colours(remainder, col, m.false_moves());
}

} // namespace tangle
