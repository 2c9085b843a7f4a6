#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tangle/dsl.hpp"
#include "tangle/errors.hpp"
#include "tangle/factorize.hpp"
#include "tangle/invariants.hpp"
#include "tangle/machine.hpp"
#include "tangle/rewrite.hpp"

using nlohmann::ordered_json;
using namespace tangle;

namespace {

std::string read_input(const std::string& path) {
    std::ostringstream ss;
    if (path == "-") {
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TangleError("IoError", "cannot read '" + path + "'");
    ss << in.rdbuf();
    return ss.str();
}

// "Kind: detail" -> "detail"
std::string strip_kind(const TangleError& e) {
    std::string w = e.what();
    std::string prefix = e.kind() + ": ";
    if (w.rfind(prefix, 0) == 0) return w.substr(prefix.size());
    return w;
}

// "L:C: detail", the position formatted for editors and scripts
std::string position_message(const SyntaxError& e) {
    std::string detail = strip_kind(e);
    std::string pos = "line " + std::to_string(e.line()) + ", col " +
                      std::to_string(e.col()) + ": ";
    if (detail.rfind(pos, 0) == 0) detail = detail.substr(pos.size());
    return std::to_string(e.line()) + ":" + std::to_string(e.col()) + ": " + detail;
}

void emit_error(bool json_out, const std::string& kind, const std::string& message) {
    if (json_out) {
        ordered_json out;
        out["error"]["kind"] = kind;
        out["error"]["message"] = message;
        std::cout << out.dump() << "\n";
    } else {
        std::cerr << "error: " << kind << ": " << message << "\n";
    }
}

std::vector<int> parse_site(const std::string& spec) {
    std::vector<int> vals;
    std::istringstream in(spec);
    std::string part;
    while (std::getline(in, part, ',')) {
        try {
            vals.push_back(std::stoi(part));
        } catch (const std::exception&) {
            throw BadParameter("bad site component '" + part + "'");
        }
    }
    if (vals.size() > 5) throw BadParameter("site takes at most five components");
    return vals;
}

std::size_t element_budget(std::size_t fallback) {
    const char* env = std::getenv("TANGLE_BUDGET");
    if (!env || !*env) return fallback;
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || v == 0) return fallback;
    return static_cast<std::size_t>(v);
}

int run_validate(const std::string& file, bool json_out) {
    Machine m = parse(read_input(file));
    ValidationReport rep = m.validate();
    if (json_out) {
        ordered_json out;
        out["ok"] = rep.ok();
        out["errors"] = ordered_json::array();
        for (const ValidationIssue& e : rep.errors)
            out["errors"].push_back({{"where", e.where}, {"message", e.message}});
        out["warnings"] = ordered_json::array();
        for (const ValidationIssue& w : rep.warnings)
            out["warnings"].push_back({{"where", w.where}, {"message", w.message}});
        std::cout << out.dump() << "\n";
    } else {
        for (const ValidationIssue& e : rep.errors)
            std::cout << "error: " << e.where << ": " << e.message << "\n";
        for (const ValidationIssue& w : rep.warnings)
            std::cout << "warning: " << w.where << ": " << w.message << "\n";
        std::cout << (rep.ok() ? "ok" : "invalid") << "\n";
    }
    return rep.ok() ? 0 : 1;
}

int run_invariants(const std::string& file, int kmax, bool json_out) {
    Machine m = parse(read_input(file));
    InvariantReport fp = fingerprint(m, kmax);
    ordered_json out;
    out["rack"] = m.rack().name();
    for (const auto& [key, value] : fp.data.items()) out[key] = value;
    if (json_out) {
        std::cout << out.dump() << "\n";
    } else {
        for (const auto& [key, value] : out.items())
            std::cout << key << ": " << value.dump() << "\n";
    }
    return 0;
}

int run_move(const std::string& file, const std::string& kind_name,
             const std::string& site, bool list, bool json_out) {
    Machine m = parse(read_input(file));
    MoveKind kind = move_kind_from_string(kind_name);
    if (list) {
        for (const Move& mv : enumerate_sites(m, {kind}))
            std::cout << to_string(mv) << "\n";
        return 0;
    }
    Move mv;
    mv.kind = kind;
    std::vector<int> vals = parse_site(site);
    if (vals.size() > 0) mv.a = vals[0];
    if (vals.size() > 1) mv.b = vals[1];
    if (vals.size() > 2) mv.c = vals[2];
    if (vals.size() > 3) mv.d = vals[3];
    if (vals.size() > 4) mv.mask = static_cast<std::uint64_t>(vals[4]);
    Machine moved = apply_move(m, mv);
    if (json_out) {
        ordered_json out;
        out["move"] = to_string(mv);
        out["machine"] = serialize(moved);
        std::cout << out.dump() << "\n";
    } else {
        std::cout << serialize(moved);
    }
    return 0;
}

int run_walk(const std::string& file, int steps, std::uint64_t seed,
             const std::string& kinds_spec, const std::string& trace_out,
             bool json_out) {
    Machine m = parse(read_input(file));
    std::vector<MoveKind> kinds;
    if (kinds_spec.empty()) {
        kinds = equivalence_kinds(m.rack().is_quandle());
    } else {
        std::istringstream in(kinds_spec);
        std::string name;
        while (std::getline(in, name, ','))
            if (!name.empty()) kinds.push_back(move_kind_from_string(name));
    }
    WalkResult r = random_walk(m, steps, seed, kinds);
    if (!trace_out.empty()) {
        std::ofstream tf(trace_out, std::ios::binary);
        if (!tf) throw TangleError("IoError", "cannot write '" + trace_out + "'");
        for (const Move& mv : r.trace) tf << to_string(mv) << "\n";
    }
    if (json_out) {
        ordered_json out;
        out["steps"] = static_cast<int>(r.trace.size());
        out["starved"] = r.starved;
        out["machine"] = serialize(r.machine);
        std::cout << out.dump() << "\n";
    } else {
        std::cout << serialize(r.machine);
    }
    return 0;
}

int run_probe(const std::string& file1, const std::string& file2, int depth,
              bool json_out) {
    Machine a = parse(read_input(file1));
    Machine b = parse(read_input(file2));
    Verdict v = distinguish(a, b, 3 + depth);
    if (json_out) {
        ordered_json out;
        out["distinguished"] = v.distinguished;
        out["witness"] = v.witness;
        std::cout << out.dump() << "\n";
    } else if (v.distinguished) {
        std::cout << "distinguished by " << v.witness << "\n";
    } else {
        std::cout << "indistinguishable\n";
    }
    return 0;
}

int run_factorize(const std::string& file, int depth, bool json_out) {
    Machine m = parse(read_input(file));
    ComplexityBounds bounds = complexity_bounds(m, depth);
    std::vector<Factorization> splits = detect_splits(m);
    Factorization prime = prime_factorization(m, depth);
    ordered_json out;
    out["is_unit"] = is_unit(m);
    out["bounds"]["lower"] = bounds.lower;
    out["bounds"]["upper"] = bounds.upper;
    out["splits"] = ordered_json::array();
    for (const Factorization& s : splits) out["splits"].push_back(s.blocks);
    out["prime_blocks"] = prime.blocks;
    out["unit_blocks"] = ordered_json::array();
    for (bool u : prime.unit_block) out["unit_blocks"].push_back(u);
    out["exhaustive"] = prime.exhaustive;
    if (json_out) {
        std::cout << out.dump() << "\n";
    } else {
        std::cout << "unit: " << (is_unit(m) ? "yes" : "no") << "\n"
                  << "bounds: [" << bounds.lower << ", " << bounds.upper << "]\n"
                  << "splits: " << out["splits"].dump() << "\n"
                  << "prime blocks: " << out["prime_blocks"].dump() << "\n"
                  << "unit blocks: " << out["unit_blocks"].dump() << "\n";
    }
    return 0;
}

int run_capacity(const std::string& file, int kmax, bool json_out) {
    Machine m = parse(read_input(file));
    Capacity c = capacity(m, kmax, element_budget(20000));
    ordered_json out;
    out["cap"] = c.cap;
    out["rate_lower"] = c.rate_lower;
    out["truncated"] = c.truncated;
    if (json_out) {
        std::cout << out.dump() << "\n";
    } else {
        std::cout << "cap: " << out["cap"].dump() << "\n"
                  << "rate_lower: " << c.rate_lower << "\n"
                  << "truncated: " << (c.truncated ? "true" : "false") << "\n";
    }
    return 0;
}

int run_canonicalize(const std::string& file) {
    std::cout << serialize(parse(read_input(file)));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tangle machine toolkit: validate, rewrite, and compare "
                 "rack-coloured machines in the .tmd format"};
    app.require_subcommand(1);
    bool json_out = false;

    std::string v_file;
    auto* validate_cmd = app.add_subcommand("validate", "check edge laws and report");
    validate_cmd->add_option("file", v_file, ".tmd file, or - for stdin")->required();
    validate_cmd->add_flag("--json", json_out, "machine-readable output");

    std::string i_file;
    int i_kmax = 3;
    auto* invariants_cmd = app.add_subcommand("invariants", "print the invariant fingerprint");
    invariants_cmd->add_option("file", i_file, ".tmd file, or - for stdin")->required();
    invariants_cmd->add_option("--kmax", i_kmax, "capacity depth (default 3)");
    invariants_cmd->add_flag("--json", json_out, "machine-readable output");

    std::string m_file, m_kind, m_site;
    bool m_list = false;
    auto* move_cmd = app.add_subcommand("move", "apply one rewrite and print the result");
    move_cmd->add_option("file", m_file, ".tmd file, or - for stdin")->required();
    move_cmd->add_option("--kind", m_kind, "move kind, e.g. R2Insert")->required();
    move_cmd->add_option("--site", m_site, "site parameters a[,b[,c[,d[,mask]]]]");
    move_cmd->add_flag("--list", m_list, "list applicable sites instead of applying");
    move_cmd->add_flag("--json", json_out, "machine-readable output");

    std::string w_file, w_kinds, w_trace;
    int w_steps = 0;
    std::uint64_t w_seed = 0;
    auto* walk_cmd = app.add_subcommand("walk", "seeded random rewrite walk");
    walk_cmd->add_option("file", w_file, ".tmd file, or - for stdin")->required();
    walk_cmd->add_option("--steps", w_steps, "number of moves (default 0)");
    walk_cmd->add_option("--seed", w_seed, "random seed (default 0)");
    walk_cmd->add_option("--kinds", w_kinds, "comma-separated move kinds");
    walk_cmd->add_option("--trace-out", w_trace, "write the move trace to a file");
    walk_cmd->add_flag("--json", json_out, "machine-readable output");

    std::string p_file1, p_file2;
    int p_depth = 0;
    auto* probe_cmd = app.add_subcommand("probe", "compare two machines by invariants");
    probe_cmd->add_option("file1", p_file1, "first .tmd file")->required();
    probe_cmd->add_option("file2", p_file2, "second .tmd file")->required();
    probe_cmd->add_option("--depth", p_depth, "extra capacity depth (default 0)");
    probe_cmd->add_flag("--json", json_out, "machine-readable output");

    std::string f_file;
    int f_depth = 0;
    auto* factorize_cmd = app.add_subcommand("factorize", "connected-sum factor search");
    factorize_cmd->add_option("file", f_file, ".tmd file, or - for stdin")->required();
    factorize_cmd->add_option("--depth", f_depth, "rewrite search depth (default 0)");
    factorize_cmd->add_flag("--json", json_out, "machine-readable output");

    std::string c_file;
    int c_kmax = 3;
    auto* capacity_cmd = app.add_subcommand("capacity", "conflict-graph capacity values");
    capacity_cmd->add_option("file", c_file, ".tmd file, or - for stdin")->required();
    capacity_cmd->add_option("--kmax", c_kmax, "strong-product depth (default 3)");
    capacity_cmd->add_flag("--json", json_out, "machine-readable output");

    std::string n_file;
    auto* canonicalize_cmd = app.add_subcommand("canonicalize", "print the canonical serialization");
    canonicalize_cmd->add_option("file", n_file, ".tmd file, or - for stdin")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (validate_cmd->parsed()) return run_validate(v_file, json_out);
        if (invariants_cmd->parsed()) return run_invariants(i_file, i_kmax, json_out);
        if (move_cmd->parsed()) return run_move(m_file, m_kind, m_site, m_list, json_out);
        if (walk_cmd->parsed())
            return run_walk(w_file, w_steps, w_seed, w_kinds, w_trace, json_out);
        if (probe_cmd->parsed()) return run_probe(p_file1, p_file2, p_depth, json_out);
        if (factorize_cmd->parsed()) return run_factorize(f_file, f_depth, json_out);
        if (capacity_cmd->parsed()) return run_capacity(c_file, c_kmax, json_out);
        if (canonicalize_cmd->parsed()) return run_canonicalize(n_file);
    } catch (const SyntaxError& e) {
        emit_error(json_out, e.kind(), position_message(e));
        return 3;
    } catch (const TangleError& e) {
        emit_error(json_out, e.kind(), strip_kind(e));
        return 1;
    }
    return 2;
}
