#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "tangle/rack.hpp"

namespace tangle {

constexpr int kUncoloured = -1;

// Edge (proc, pos): from the pos-th register of the process to the next one
// (wrapping for closed processes). An open process with k registers has k-1
// edges, a closed one has k.
struct EdgeRef {
    int proc = -1;
    int pos = -1;
    auto operator<=>(const EdgeRef&) const = default;
};

struct Patient {
    EdgeRef edge;
    int sign = +1; // +1 or -1
    auto operator<=>(const Patient&) const = default;
};

// One crossing: an agent register acting on an ordered block of patient edges.
struct Interaction {
    int agent = -1;
    std::vector<Patient> patients;
    bool operator==(const Interaction&) const = default;
};

struct Process {
    std::string name;
    bool closed = false;
    std::vector<int> registers; // global register ids, strand order
};

struct RegisterInfo {
    std::string name;
    int process = -1;
    int pos = -1;
};

struct ValidationIssue {
    std::string where;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> errors;
    std::vector<ValidationIssue> warnings;
    bool ok() const { return errors.empty(); }
};

class Machine;

// Mutable, name-based description of a machine. The rewrite engine edits
// drafts and rebuilds; Machine itself is an immutable value.
struct Draft {
    std::shared_ptr<const Rack> rack;

    struct P {
        std::string name;
        bool closed = false;
        std::vector<std::string> regs;
    };
    struct I {
        std::string agent;
        // (from register, to register, sign)
        std::vector<std::tuple<std::string, std::string, int>> patients;
    };
    std::vector<P> processes;
    std::vector<I> interactions;
    std::map<std::string, int> colours; // only coloured registers
    int false_moves = 0;

    Machine build() const;
};

class Machine {
public:
    Machine(std::shared_ptr<const Rack> rack, std::vector<Process> processes,
            std::vector<RegisterInfo> registers, std::vector<Interaction> interactions,
            std::vector<int16_t> colours, int false_moves);

    const Rack& rack() const { return *rack_; }
    std::shared_ptr<const Rack> rack_ptr() const { return rack_; }

    const std::vector<Process>& processes() const { return processes_; }
    const std::vector<RegisterInfo>& registers() const { return registers_; }
    const std::vector<Interaction>& interactions() const { return interactions_; }

    int register_count() const { return static_cast<int>(registers_.size()); }
    int register_id(const std::string& name) const; // throws UnknownRegister
    const std::string& register_name(int id) const { return registers_.at(id).name; }

    int colour(int id) const { return colours_.at(id); }
    bool coloured(int id) const { return colours_.at(id) != kUncoloured; }
    bool fully_coloured() const;
    const std::vector<int16_t>& colours() const { return colours_; }

    int edge_count(int proc) const;
    int edge_from(EdgeRef e) const;
    int edge_to(EdgeRef e) const;
    std::optional<EdgeRef> out_edge(int reg) const;
    std::optional<EdgeRef> in_edge(int reg) const;

    // Index of the interaction labelling edge e, or -1 if the edge is plain.
    int edge_label(EdgeRef e) const;
    bool is_plain(EdgeRef e) const { return edge_label(e) < 0; }
    bool is_agent(int reg) const;
    std::vector<int> agencies(int reg) const; // interaction indices with this agent

    // Connected components of processes linked through interactions; entry
    // per process = component index (0-based, ordered by least process).
    std::vector<int> process_components() const;
    int component_count() const;

    int false_moves() const { return false_moves_; }

    ValidationReport validate() const;

    Draft to_draft() const;

private:
    std::shared_ptr<const Rack> rack_;
    std::vector<Process> processes_;
    std::vector<RegisterInfo> registers_;
    std::vector<Interaction> interactions_;
    std::vector<int16_t> colours_;
    std::map<std::string, int> reg_ids_;
    std::vector<std::vector<int>> edge_labels_; // per proc, per pos: interaction idx or -1
    int false_moves_ = 0;
};

// Canonical text form (implemented by the DSL module). Machine equality is
// defined as canonical-text equality.
std::string canonical_tmd(const Machine& m);
bool operator==(const Machine& a, const Machine& b);
inline bool operator!=(const Machine& a, const Machine& b) { return !(a == b); }

bool same_skeleton(const Machine& a, const Machine& b);

Machine colour_suppress(const Machine& m);

// Connect sum: same skeleton, disjoint labelled-edge sets, disjoint agent
// sets. Colours are stamped from each summand's active registers (its
// patient-edge endpoints and agents) and completed by deduction.
Machine connect_sum(const Machine& m1, const Machine& m2);

// Remove the given interactions and recolour: untouched registers keep their
// colours, touched ones are deduced; deterministic strand-order fallback pins
// where deduction cannot reach. Throws InconsistentRecolouring when no
// recolouring extends the kept colours.
Machine cancel_factor(const Machine& m, const std::vector<int>& interaction_indices);

} // namespace tangle
