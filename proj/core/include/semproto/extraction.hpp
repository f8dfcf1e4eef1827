#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "semproto/npm.hpp"
#include "semproto/replay.hpp"

namespace semproto {

enum class VocabKind : int { Input = 0, Ucm = 1, Dcm = 2, Action = 3 };

std::string vocab_kind_name(VocabKind kind);

/// Heaviside pattern of a CM vector: bit i set iff element i > 0.
struct ActivationPattern {
    std::uint64_t bits = 0;
    int width = 0;

    bool operator==(const ActivationPattern&) const = default;
    auto operator<=>(const ActivationPattern&) const = default;
    bool test(int i) const { return (bits >> i) & 1u; }
    std::string to_string() const;  // e.g. [1,1,0,0,1,0,0,0]
};

ActivationPattern activation_pattern(std::span<const double> values);

using VocabId = int;

struct Vocabulary {
    VocabId id = -1;
    VocabKind kind = VocabKind::Input;
    int ue = 0;                    // 0-based owner
    int level = -1;                // Input only
    UeAction action = UeAction::Silence;  // Action only
    std::vector<double> vec;       // representative CM vector; empty once merged
    ActivationPattern pattern;     // CM kinds only
    std::string label;             // b1_0, u1_2, d2_0, a1_S
};

struct Connection {
    VocabId tail = -1;
    VocabId head = -1;
    std::int64_t count = 0;
};

using BufferPair = std::array<int, kNumUes>;

/// Resolved vocabulary chain of one input state: which UCM/DCM/action each
/// UE's forward pass selected.
struct StateChain {
    std::array<VocabId, kNumUes> input{-1, -1};
    std::array<VocabId, kNumUes> u{-1, -1};
    std::array<VocabId, kNumUes> d{-1, -1};
    std::array<VocabId, kNumUes> a{-1, -1};
};

/// The NPM extract: stage-layered vocabularies plus directed connections
/// tallied over a state domain. Chains are kept per state so probability
/// estimation can later weight states by empirical visitation.
struct ProtocolGraph {
    int cm_width = 0;
    std::vector<Vocabulary> vocabularies;  // id == index
    std::vector<Connection> connections;
    std::map<BufferPair, StateChain> chains;

    std::set<BufferPair> state_domain() const;
    const Connection* find_connection(VocabId tail, VocabId head) const;
    std::vector<VocabId> successors(VocabId tail) const;
    int count_kind(VocabKind kind) const;
    int count_kind_ue(VocabKind kind, int ue) const;
};

/// Distinct buffer pairs appearing in an episodic memory.
std::set<BufferPair> observed_state_domain(const EpisodicMemory& memory);

/// Per-UE buffer levels appearing in memory, as the product domain B1 x B2.
std::set<BufferPair> observed_product_domain(const EpisodicMemory& memory);

std::set<BufferPair> full_grid_domain(int b_max);

/// Runs the model over every state in the domain, deduplicates CM vectors by
/// exact equality and tallies connections along b_j -> u_j -> d_i -> a_i.
ProtocolGraph extract_graph(const NPModel& model, const std::set<BufferPair>& domain);

std::string graph_vocab_csv(const ProtocolGraph& graph);
std::string graph_edges_csv(const ProtocolGraph& graph);
/// Readable layered rendering (inputs, UCMs, DCMs, actions per UE).
std::string graph_to_text(const ProtocolGraph& graph);

}  // namespace semproto
