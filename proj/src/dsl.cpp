#include "tangle/dsl.hpp"

#include <cctype>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

#include "tangle/errors.hpp"

namespace tangle {

namespace {

struct Tok {
    std::string text;
    int line = 1;
    int col = 1;
};

std::string pos_prefix(const Tok& t) {
    return std::to_string(t.line) + ":" + std::to_string(t.col) + ": ";
}

[[noreturn]] void fail(const Tok& t, const std::string& msg) {
    throw SyntaxError(t.line, t.col, msg);
}

bool is_ident(const std::string& s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_'))
        return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

int want_int(const Tok& t) {
    int v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc{} || p != t.text.data() + t.text.size())
        fail(t, "expected an integer, found '" + t.text + "'");
    return v;
}

// One directive line plus a cursor with end-of-line aware access.
class Line {
public:
    Line(std::vector<Tok> toks, int line) : toks_(std::move(toks)), line_(line) {}

    bool done() const { return next_ >= toks_.size(); }
    const Tok& peek() const { return toks_[next_]; }

    const Tok& need(const std::string& what) {
        if (done()) {
            const Tok& last = toks_.back();
            throw SyntaxError(line_, last.col + static_cast<int>(last.text.size()),
                              "expected " + what + " before end of line");
        }
        return toks_[next_++];
    }

    void finish() {
        if (!done()) fail(toks_[next_], "unexpected token '" + toks_[next_].text + "'");
    }

private:
    std::vector<Tok> toks_;
    std::size_t next_ = 0;
    int line_;
};

struct ProcDecl {
    std::string name;
    bool closed = false;
    std::vector<std::string> regs;
};

class Parser {
public:
    explicit Parser(const std::string& text) : text_(text) {}

    Machine run() {
        std::istringstream in(text_);
        std::string raw;
        int lineno = 0;
        while (std::getline(in, raw)) {
            ++lineno;
            auto toks = tokenize(raw, lineno);
            if (toks.empty()) continue;
            Line line(std::move(toks), lineno);
            dispatch(line);
        }
        if (!rack_) throw SyntaxError(1, 1, "missing rack declaration");

        Draft d;
        d.rack = rack_;
        for (const auto& p : procs_) d.processes.push_back({p.name, p.closed, p.regs});
        d.interactions = interactions_;
        d.colours = colours_;
        return d.build();
    }

private:
    static std::vector<Tok> tokenize(const std::string& raw, int lineno) {
        std::string line = raw;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::vector<Tok> out;
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
                ++i;
            std::size_t start = i;
            while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r')
                ++i;
            if (i > start)
                out.push_back({line.substr(start, i - start), lineno,
                               static_cast<int>(start) + 1});
        }
        return out;
    }

    void dispatch(Line& line) {
        const Tok& head = line.need("a directive");
        if (head.text == "rack") {
            if (rack_) fail(head, "duplicate rack declaration");
            parse_rack(line);
            return;
        }
        if (!rack_) fail(head, "the rack declaration must come first");
        if (head.text == "process") parse_process(line);
        else if (head.text == "interaction") parse_interaction(line);
        else if (head.text == "edge") parse_edge(line);
        else if (head.text == "colour") parse_colour(line);
        else fail(head, "unknown directive '" + head.text + "'");
    }

    void parse_rack(Line& line) {
        const Tok& kind = line.need("a rack kind");
        if (kind.text == "dihedral") {
            int n = want_int(line.need("the rack size"));
            line.finish();
            rack_ = std::make_shared<Rack>(Rack::dihedral(n));
        } else if (kind.text == "alexander") {
            int n = want_int(line.need("the rack size"));
            int t = want_int(line.need("the parameter t"));
            line.finish();
            rack_ = std::make_shared<Rack>(Rack::alexander(n, t));
        } else if (kind.text == "trivial") {
            int n = want_int(line.need("the rack size"));
            line.finish();
            rack_ = std::make_shared<Rack>(Rack::trivial(n));
        } else if (kind.text == "constant") {
            std::vector<int> sigma;
            sigma.push_back(want_int(line.need("a map entry")));
            while (!line.done()) sigma.push_back(want_int(line.need("a map entry")));
            rack_ = std::make_shared<Rack>(Rack::constant_action(sigma));
        } else if (kind.text == "table" || kind.text == "conjugation") {
            int n = want_int(line.need("the size"));
            std::vector<std::vector<int>> t;
            if (n > 0) t.assign(n, std::vector<int>(n));
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) t[r][c] = want_int(line.need("a table entry"));
            line.finish();
            rack_ = std::make_shared<Rack>(kind.text == "table" ? Rack::from_table(t)
                                                                : Rack::conjugation(t));
        } else {
            fail(kind, "unknown rack kind '" + kind.text + "'");
        }
    }

    void parse_process(Line& line) {
        const Tok& mode = line.need("'open' or 'closed'");
        if (mode.text != "open" && mode.text != "closed")
            fail(mode, "expected 'open' or 'closed', found '" + mode.text + "'");
        const Tok& nametok = line.need("the process name");
        if (nametok.text.size() < 2 || nametok.text.back() != ':' ||
            !is_ident(nametok.text.substr(0, nametok.text.size() - 1)))
            fail(nametok, "expected a process name ending in ':'");
        ProcDecl p;
        p.name = nametok.text.substr(0, nametok.text.size() - 1);
        p.closed = mode.text == "closed";
        if (!pnames_.insert(p.name).second)
            throw DuplicateName(pos_prefix(nametok) + "process '" + p.name +
                                "' declared twice");
        const Tok& first = line.need("a register name");
        for (const Tok* t = &first;; t = &line.need("a register name")) {
            if (!is_ident(t->text)) fail(*t, "invalid register name '" + t->text + "'");
            if (reg_at_.count(t->text))
                throw DuplicateName(pos_prefix(*t) + "register '" + t->text +
                                    "' declared twice");
            reg_at_[t->text] = {static_cast<int>(procs_.size()),
                                static_cast<int>(p.regs.size())};
            p.regs.push_back(t->text);
            if (line.done()) break;
        }
        procs_.push_back(std::move(p));
    }

    std::pair<int, int> lookup(const Tok& t) const {
        auto it = reg_at_.find(t.text);
        if (it == reg_at_.end())
            throw UnknownRegister(pos_prefix(t) + "unknown register '" + t.text + "'");
        return it->second;
    }

    // (from, to) must be consecutive on from's process, wrapping when closed.
    void check_edge(const Tok& fromtok, const Tok& totok) const {
        auto [fp, fpos] = lookup(fromtok);
        auto [tp, tpos] = lookup(totok);
        const ProcDecl& p = procs_[fp];
        int k = static_cast<int>(p.regs.size());
        bool ok = tp == fp && ((fpos + 1 < k && tpos == fpos + 1) ||
                               (p.closed && fpos == k - 1 && tpos == 0));
        if (!ok)
            fail(fromtok, "(" + fromtok.text + ", " + totok.text + ") is not an edge");
    }

    void parse_interaction(Line& line) {
        const Tok& kw = line.need("'agent'");
        if (kw.text != "agent") fail(kw, "expected 'agent', found '" + kw.text + "'");
        const Tok& agent = line.need("the agent register");
        lookup(agent);
        const Tok& brace = line.need("'{'");
        if (brace.text != "{") fail(brace, "expected '{', found '" + brace.text + "'");

        Draft::I ix;
        ix.agent = agent.text;
        while (true) {
            const Tok& from = line.need("a register name");
            const Tok& arrow = line.need("'->'");
            if (arrow.text != "->") fail(arrow, "expected '->', found '" + arrow.text + "'");
            const Tok& to = line.need("a register name");
            check_edge(from, to);
            int sign = +1;
            const Tok& next = line.need("a sign, ';' or '}'");
            std::string sep = next.text;
            if (next.text == "+" || next.text == "-") {
                sign = next.text == "+" ? +1 : -1;
                sep = line.need("';' or '}'").text;
            }
            ix.patients.emplace_back(from.text, to.text, sign);
            if (sep == "}") break;
            if (sep != ";") fail(next, "expected ';' or '}'");
        }
        line.finish();
        interactions_.push_back(std::move(ix));
    }

    void parse_edge(Line& line) {
        const Tok& a = line.need("a register name");
        const Tok& b = line.need("a register name");
        line.finish();
        check_edge(a, b);
    }

    void parse_colour(Line& line) {
        const Tok& reg = line.need("a register name");
        lookup(reg);
        const Tok& val = line.need("a colour or '?'");
        line.finish();
        if (!coloured_.insert(reg.text).second)
            throw DuplicateName(pos_prefix(reg) + "register '" + reg.text +
                                "' coloured twice");
        if (val.text == "?") return;
        int c = want_int(val);
        if (c < 0 || c >= rack_->size())
            throw ColourOutOfRange(pos_prefix(val) + "colour " + std::to_string(c) +
                                   " outside rack of size " +
                                   std::to_string(rack_->size()));
        colours_[reg.text] = c;
    }

    const std::string& text_;
    std::shared_ptr<const Rack> rack_;
    std::vector<ProcDecl> procs_;
    std::vector<Draft::I> interactions_;
    std::map<std::string, int> colours_;
    std::map<std::string, std::pair<int, int>> reg_at_;
    std::set<std::string> pnames_;
    std::set<std::string> coloured_;
};

} // namespace

Machine parse(const std::string& text) { return Parser(text).run(); }

std::string serialize(const Machine& m) {
    std::ostringstream out;
    out << "rack " << m.rack().name() << "\n";
    for (const auto& p : m.processes()) {
        out << "process " << (p.closed ? "closed" : "open") << " " << p.name << ":";
        for (int r : p.registers) out << " " << m.register_name(r);
        out << "\n";
    }
    for (const auto& ix : m.interactions()) {
        out << "interaction agent " << m.register_name(ix.agent) << " {";
        bool first = true;
        for (const auto& pt : ix.patients) {
            out << (first ? " " : " ; ") << m.register_name(m.edge_from(pt.edge))
                << " -> " << m.register_name(m.edge_to(pt.edge)) << " "
                << (pt.sign > 0 ? "+" : "-");
            first = false;
        }
        out << " }\n";
    }
    for (int r = 0; r < m.register_count(); ++r)
        if (m.coloured(r))
            out << "colour " << m.register_name(r) << " " << m.colour(r) << "\n";
    return out.str();
}

std::string canonical_tmd(const Machine& m) { return serialize(m); }

nlohmann::ordered_json to_json(const Machine& m) {
    nlohmann::ordered_json j;
    j["rack"] = m.rack().name();
    j["processes"] = nlohmann::ordered_json::array();
    for (const auto& p : m.processes()) {
        nlohmann::ordered_json jp;
        jp["name"] = p.name;
        jp["closed"] = p.closed;
        auto regs = nlohmann::ordered_json::array();
        for (int r : p.registers) regs.push_back(m.register_name(r));
        jp["registers"] = std::move(regs);
        j["processes"].push_back(std::move(jp));
    }
    j["interactions"] = nlohmann::ordered_json::array();
    for (const auto& ix : m.interactions()) {
        nlohmann::ordered_json ji;
        ji["agent"] = m.register_name(ix.agent);
        auto pts = nlohmann::ordered_json::array();
        for (const auto& pt : ix.patients) {
            nlohmann::ordered_json jp;
            jp["from"] = m.register_name(m.edge_from(pt.edge));
            jp["to"] = m.register_name(m.edge_to(pt.edge));
            jp["sign"] = pt.sign;
            pts.push_back(std::move(jp));
        }
        ji["patients"] = std::move(pts);
        j["interactions"].push_back(std::move(ji));
    }
    j["colours"] = nlohmann::ordered_json::object();
    for (int r = 0; r < m.register_count(); ++r)
        if (m.coloured(r)) j["colours"][m.register_name(r)] = m.colour(r);
    if (m.false_moves() != 0) j["false_moves"] = m.false_moves();
    return j;
}

} // namespace tangle
