#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "semproto/extraction.hpp"

namespace semproto {

/// Clause types: alpha (Input -> Ucm), beta (Ucm -> Dcm), gamma
/// (Dcm -> Action), delta (Input -> Action, grant-free shortcut).
enum class ClauseKind : int { Uplink = 0, Downlink = 1, Action = 2, GrantFree = 3 };

std::string clause_kind_name(ClauseKind kind);

struct Clause {
    ClauseKind kind = ClauseKind::Uplink;
    double prob = 1.0;
    VocabId head = -1;
    VocabId tail = -1;
    int ue = 0;       // i: owner of the head-side chain
    int tail_ue = 0;  // j: owner of the tail vocabulary (differs for Downlink)

    bool operator==(const Clause&) const = default;
};

/// Activation-aware merging: UCM (and DCM) vocabularies of the same UE with
/// identical Heaviside patterns collapse into one; connections re-target the
/// merged ids with summed counts.
ProtocolGraph merge_activation_aware(const ProtocolGraph& graph);

/// Connection-aware merging: first DCMs of a UE with identical action
/// successor sets, then UCMs with identical DCM successor sets, repeated to a
/// fixpoint.
ProtocolGraph merge_connection_aware(const ProtocolGraph& graph);

/// Weights for probability estimation over the state domain. Empirical
/// weights are visitation counts; blended adds one enumeration pass on top so
/// never-visited domain states still cast a single vote.
struct StateWeights {
    enum class Kind { Uniform, Empirical, Blended } kind = Kind::Uniform;
    std::map<BufferPair, double> weights;

    static StateWeights uniform();
    static StateWeights from_memory(const EpisodicMemory& memory);
    static StateWeights blended_from_memory(const EpisodicMemory& memory);
    double at(const BufferPair& state) const;
};

/// Empirical clause probabilities, Eqs.-style ratio of weighted co-occurrence
/// to tail occurrence over the graph's chains. Uplink clauses always carry
/// probability 1; zero-occurrence tails yield no clause.
std::vector<Clause> estimate_clause_probabilities(const ProtocolGraph& graph,
                                                  const StateWeights& weights);

/// Pipeline switches. The defaults (connection-aware merging, blended
/// weighting, full-grid domain) are the configuration that preserves the
/// source model's behavior on trained checkpoints; activation-aware merging
/// and the other weightings/domains stay available for ablation.
struct SpmOptions {
    bool merge_activation = false;
    bool merge_connection = true;
    enum class Weighting { Empirical, Uniform, Blended } weighting = Weighting::Blended;
    enum class DomainSource { MemoryProduct, MemoryPairs, FullGrid } domain_source =
        DomainSource::FullGrid;

    std::string describe() const;
    static SpmOptions from_config(const KeyValueConfig& cfg);
};

/// A semantic protocol model: ground probabilistic clauses over a merged
/// vocabulary table, plus provenance of how it was built.
struct Spm {
    int cm_width = 0;
    std::vector<Vocabulary> vocabularies;  // id == index; only clause-referenced entries
    std::vector<Clause> clauses;           // canonically sorted

    std::string source_hash;    // content hash of the source NPM
    std::string options_desc;   // merge/weighting/domain switches
    double sample_weight = 0.0; // total estimation weight

    const Vocabulary& vocab(VocabId id) const { return vocabularies.at(static_cast<std::size_t>(id)); }
    const Clause* find_uplink(int ue, int level) const;
    std::vector<const Clause*> downlink_from(int head_ue, VocabId tail_ucm) const;
    std::vector<const Clause*> actions_from(VocabId tail_dcm) const;
    const Clause* find_grant_free(int ue, int level) const;

    /// Buffer levels with an uplink clause, per UE.
    std::array<std::set<int>, kNumUes> level_sets() const;
    /// Resolvable product domain B1 x B2 derived from the uplink clauses.
    std::set<BufferPair> domain() const;
    int count_clauses(ClauseKind kind) const;
    int count_vocab(VocabKind kind) const;
    int count_vocab_ue(VocabKind kind, int ue) const;
    /// ceil(log2 |vocab|) for the larger UE vocabulary of the given CM kind.
    int cm_bits(VocabKind kind) const;
};

/// Entailed clause list for R_{i,j}(b): the uplink clause of UE j at b_j, all
/// downlink clauses (i,j) from its UCM, and all action clauses of UE i from
/// those DCMs. Throws NoRuleError when UE j has no uplink clause at b_j.
struct Rule {
    BufferPair state{0, 0};
    int ue_i = 0;
    int ue_j = 0;
    std::vector<std::size_t> clause_indices;  // indices into Spm::clauses
};
Rule formulate_rule(const Spm& spm, const BufferPair& state, int ue_i, int ue_j);

/// Full pipeline: extract over the configured domain, merge, estimate, union
/// of all rules. The memory supplies the domain and the empirical weighting;
/// when none was kept, build one first with collect_memory(). With both
/// merges disabled the result is the certain NPM extract (all probabilities
/// 1, zero net entropy); ratio estimation only applies once merging can
/// introduce polysemy.
Spm construct_spm(const NPModel& model, const EpisodicMemory& memory,
                  const SpmOptions& options);

/// Same pipeline for an explicit domain (weights must be Uniform or cover it).
Spm construct_spm_over_domain(const NPModel& model, const std::set<BufferPair>& domain,
                              const StateWeights& weights, const SpmOptions& options);

/// Canonical clause order: kind, UE pair, tail then head vocabulary rank.
void sort_clauses_canonically(const Spm& spm, std::vector<Clause>& clauses);

/// Logical-content equality: same clause set (kinds, labels, probabilities)
/// and the same vocabulary labels; provenance is not compared.
bool structurally_equal(const Spm& a, const Spm& b);

/// ProbLog-style text form, one `P::HEAD :- TAIL.` clause per line with `%`
/// provenance comments. parse_problog(serialize_problog(x)) preserves the
/// structural content exactly.
std::string serialize_problog(const Spm& spm);
Spm parse_problog(const std::string& text);
Spm load_problog_file(const std::string& path);
void save_problog_file(const Spm& spm, const std::string& path);

}  // namespace semproto
