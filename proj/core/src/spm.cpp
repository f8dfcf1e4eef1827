#include "semproto/spm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "semproto/errors.hpp"

namespace semproto {

std::string clause_kind_name(ClauseKind kind) {
    switch (kind) {
        case ClauseKind::Uplink: return "uplink";
        case ClauseKind::Downlink: return "downlink";
        case ClauseKind::Action: return "action";
        case ClauseKind::GrantFree: return "grant_free";
    }
    return "?";
}

namespace {

int label_index(const std::string& label) {
    const auto us = label.rfind('_');
    if (us == std::string::npos) return 0;
    const std::string suffix = label.substr(us + 1);
    if (suffix == "S") return 0;
    if (suffix == "A") return 1;
    if (suffix == "D") return 2;
    return std::stoi(suffix);
}

/// Sort key shared by construction and parsing: stage, UE, then the
/// level / pattern-rank / action encoded in the label index.
std::tuple<int, int, int> vocab_rank(const Vocabulary& v) {
    int key = 0;
    switch (v.kind) {
        case VocabKind::Input: key = v.level; break;
        case VocabKind::Action: key = static_cast<int>(v.action); break;
        default: key = label_index(v.label); break;
    }
    return {static_cast<int>(v.kind), v.ue, key};
}

/// Rebuilds a graph after merging groups of vocabularies. `group_of[id]`
/// assigns every old vocabulary to a group; groups are ordered canonically
/// (kind, UE, smallest pattern, smallest old id) and relabeled per UE.
ProtocolGraph apply_partition(const ProtocolGraph& graph,
                              const std::vector<int>& group_of, int num_groups) {
    struct Group {
        std::vector<VocabId> members;
        std::tuple<int, int, std::uint64_t, int> order_key;
    };
    std::vector<Group> groups(static_cast<std::size_t>(num_groups));
    for (VocabId id = 0; id < static_cast<VocabId>(graph.vocabularies.size()); ++id)
        groups[static_cast<std::size_t>(group_of[static_cast<std::size_t>(id)])]
            .members.push_back(id);

    for (Group& g : groups) {
        std::sort(g.members.begin(), g.members.end());
        const Vocabulary& first = graph.vocabularies[static_cast<std::size_t>(g.members.front())];
        std::uint64_t min_pattern = ~0ull;
        if (first.kind == VocabKind::Ucm || first.kind == VocabKind::Dcm) {
            for (VocabId m : g.members)
                min_pattern = std::min(min_pattern,
                                       graph.vocabularies[static_cast<std::size_t>(m)].pattern.bits);
        } else if (first.kind == VocabKind::Input) {
            min_pattern = static_cast<std::uint64_t>(first.level);
        } else {
            min_pattern = static_cast<std::uint64_t>(first.action);
        }
        g.order_key = {static_cast<int>(first.kind), first.ue, min_pattern,
                       g.members.front()};
    }

    std::vector<std::size_t> order(groups.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&groups](std::size_t a, std::size_t b) {
        return groups[a].order_key < groups[b].order_key;
    });

    ProtocolGraph out;
    out.cm_width = graph.cm_width;
    std::vector<VocabId> remap(graph.vocabularies.size(), -1);
    std::array<std::array<int, 4>, kNumUes> next_index{};
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const Group& g = groups[order[rank]];
        const Vocabulary& first = graph.vocabularies[static_cast<std::size_t>(g.members.front())];
        Vocabulary v;
        v.id = static_cast<VocabId>(rank);
        v.kind = first.kind;
        v.ue = first.ue;
        v.level = first.level;
        v.action = first.action;
        if (v.kind == VocabKind::Ucm || v.kind == VocabKind::Dcm) {
            ActivationPattern min_pattern = first.pattern;
            for (VocabId m : g.members) {
                const auto& p = graph.vocabularies[static_cast<std::size_t>(m)].pattern;
                if (p < min_pattern) min_pattern = p;
            }
            v.pattern = min_pattern;
            if (g.members.size() == 1) v.vec = first.vec;  // unmerged keeps its vector
            const char prefix = v.kind == VocabKind::Ucm ? 'u' : 'd';
            int& idx = next_index[static_cast<std::size_t>(v.ue)][static_cast<int>(v.kind)];
            v.label = std::string(1, prefix) + std::to_string(v.ue + 1) + "_" +
                      std::to_string(idx++);
        } else {
            v.label = first.label;
        }
        for (VocabId m : g.members) remap[static_cast<std::size_t>(m)] = v.id;
        out.vocabularies.push_back(std::move(v));
    }

    std::map<std::pair<VocabId, VocabId>, std::int64_t> edges;
    for (const Connection& c : graph.connections)
        edges[{remap[static_cast<std::size_t>(c.tail)],
               remap[static_cast<std::size_t>(c.head)]}] += c.count;
    for (const auto& [key, count] : edges)
        out.connections.push_back(Connection{key.first, key.second, count});

    for (const auto& [state, chain] : graph.chains) {
        StateChain mapped;
        for (int ue = 0; ue < kNumUes; ++ue) {
            mapped.input[ue] = remap[static_cast<std::size_t>(chain.input[ue])];
            mapped.u[ue] = remap[static_cast<std::size_t>(chain.u[ue])];
            mapped.d[ue] = remap[static_cast<std::size_t>(chain.d[ue])];
            mapped.a[ue] = remap[static_cast<std::size_t>(chain.a[ue])];
        }
        out.chains[state] = mapped;
    }
    return out;
}

std::vector<int> identity_groups(const ProtocolGraph& graph) {
    std::vector<int> group_of(graph.vocabularies.size());
    for (std::size_t i = 0; i < group_of.size(); ++i) group_of[i] = static_cast<int>(i);
    return group_of;
}

/// Collapses the id space of `group_of` to 0..n-1 preserving first-seen order.
int compact_groups(std::vector<int>& group_of) {
    std::map<int, int> seen;
    for (int& g : group_of) {
        auto it = seen.find(g);
        if (it == seen.end()) {
            const int next = static_cast<int>(seen.size());
            seen[g] = next;
            g = next;
        } else {
            g = it->second;
        }
    }
    return static_cast<int>(seen.size());
}

}  // namespace

ProtocolGraph merge_activation_aware(const ProtocolGraph& graph) {
    std::vector<int> group_of = identity_groups(graph);
    std::map<std::tuple<int, int, std::uint64_t>, int> pattern_group;  // (kind, ue, bits)
    for (const Vocabulary& v : graph.vocabularies) {
        if (v.kind != VocabKind::Ucm && v.kind != VocabKind::Dcm) continue;
        const auto key = std::make_tuple(static_cast<int>(v.kind), v.ue, v.pattern.bits);
        auto it = pattern_group.find(key);
        if (it == pattern_group.end()) {
            pattern_group[key] = v.id;
        } else {
            group_of[static_cast<std::size_t>(v.id)] = it->second;
        }
    }
    const int n = compact_groups(group_of);
    return apply_partition(graph, group_of, n);
}

ProtocolGraph merge_connection_aware(const ProtocolGraph& graph) {
    ProtocolGraph current = graph;
    for (;;) {
        bool changed = false;

        // DCMs with identical action successor sets.
        {
            std::vector<int> group_of = identity_groups(current);
            std::map<std::tuple<int, std::vector<VocabId>>, int> set_group;
            for (const Vocabulary& v : current.vocabularies) {
                if (v.kind != VocabKind::Dcm) continue;
                const auto key = std::make_tuple(v.ue, current.successors(v.id));
                auto it = set_group.find(key);
                if (it == set_group.end()) {
                    set_group[key] = v.id;
                } else {
                    group_of[static_cast<std::size_t>(v.id)] = it->second;
                    changed = true;
                }
            }
            if (changed) {
                const int n = compact_groups(group_of);
                current = apply_partition(current, group_of, n);
            }
        }

        // UCMs with identical DCM successor sets.
        bool ucm_changed = false;
        {
            std::vector<int> group_of = identity_groups(current);
            std::map<std::tuple<int, std::vector<VocabId>>, int> set_group;
            for (const Vocabulary& v : current.vocabularies) {
                if (v.kind != VocabKind::Ucm) continue;
                const auto key = std::make_tuple(v.ue, current.successors(v.id));
                auto it = set_group.find(key);
                if (it == set_group.end()) {
                    set_group[key] = v.id;
                } else {
                    group_of[static_cast<std::size_t>(v.id)] = it->second;
                    ucm_changed = true;
                }
            }
            if (ucm_changed) {
                const int n = compact_groups(group_of);
                current = apply_partition(current, group_of, n);
            }
        }

        if (!changed && !ucm_changed) return current;
    }
}

StateWeights StateWeights::uniform() { return StateWeights{}; }

StateWeights StateWeights::from_memory(const EpisodicMemory& memory) {
    StateWeights w;
    w.kind = Kind::Empirical;
    for (std::size_t k = 0; k < memory.size(); ++k) w.weights[memory.at(k).b] += 1.0;
    return w;
}

StateWeights StateWeights::blended_from_memory(const EpisodicMemory& memory) {
    StateWeights w = from_memory(memory);
    w.kind = Kind::Blended;
    return w;
}

double StateWeights::at(const BufferPair& state) const {
    if (kind == Kind::Uniform) return 1.0;
    const auto it = weights.find(state);
    const double count = it == weights.end() ? 0.0 : it->second;
    return kind == Kind::Blended ? count + 1.0 : count;
}

std::vector<Clause> estimate_clause_probabilities(const ProtocolGraph& graph,
                                                  const StateWeights& weights) {
    std::map<VocabId, double> occ_u, occ_d;
    std::map<std::tuple<int, int, VocabId, VocabId>, double> cooc_beta;  // (i, j, u, d)
    std::map<std::tuple<int, VocabId, VocabId>, double> cooc_gamma;     // (i, d, a)

    double total = 0.0;
    for (const auto& [state, chain] : graph.chains) {
        const double w = weights.at(state);
        if (w <= 0.0) continue;
        total += w;
        for (int j = 0; j < kNumUes; ++j) occ_u[chain.u[j]] += w;
        for (int i = 0; i < kNumUes; ++i) {
            occ_d[chain.d[i]] += w;
            cooc_gamma[{i, chain.d[i], chain.a[i]}] += w;
            for (int j = 0; j < kNumUes; ++j) cooc_beta[{i, j, chain.u[j], chain.d[i]}] += w;
        }
    }
    if (total <= 0.0)
        throw Error("clause estimation: no state in the domain has positive weight");

    std::vector<Clause> clauses;

    // Uplink clauses are structural: one per input vocabulary, probability 1.
    for (const Vocabulary& v : graph.vocabularies) {
        if (v.kind != VocabKind::Input) continue;
        const std::vector<VocabId> succ = graph.successors(v.id);
        if (succ.size() != 1)
            throw Error("input vocabulary " + v.label + " has " +
                        std::to_string(succ.size()) + " successors, expected 1");
        clauses.push_back(Clause{ClauseKind::Uplink, 1.0, succ.front(), v.id, v.ue, v.ue});
    }

    for (const auto& [key, count] : cooc_beta) {
        const auto [i, j, u, d] = key;
        const double occ = occ_u[u];
        if (occ <= 0.0) continue;
        clauses.push_back(Clause{ClauseKind::Downlink, count / occ, d, u, i, j});
    }
    for (const auto& [key, count] : cooc_gamma) {
        const auto [i, d, a] = key;
        const double occ = occ_d[d];
        if (occ <= 0.0) continue;
        clauses.push_back(Clause{ClauseKind::Action, count / occ, a, d, i, i});
    }
    return clauses;
}

std::string SpmOptions::describe() const {
    std::string merges;
    if (merge_activation && merge_connection) merges = "activation+connection";
    else if (merge_activation) merges = "activation";
    else if (merge_connection) merges = "connection";
    else merges = "none";
    std::string w;
    switch (weighting) {
        case Weighting::Empirical: w = "empirical"; break;
        case Weighting::Uniform: w = "uniform"; break;
        case Weighting::Blended: w = "blended"; break;
    }
    std::string d;
    switch (domain_source) {
        case DomainSource::MemoryProduct: d = "product"; break;
        case DomainSource::MemoryPairs: d = "pairs"; break;
        case DomainSource::FullGrid: d = "grid"; break;
    }
    return "merge=" + merges + ",weighting=" + w + ",domain=" + d;
}

SpmOptions SpmOptions::from_config(const KeyValueConfig& cfg) {
    SpmOptions opt;
    opt.merge_activation = cfg.get_bool("merge_activation", opt.merge_activation);
    opt.merge_connection = cfg.get_bool("merge_connection", opt.merge_connection);
    const std::string w = cfg.get_string("weighting", "blended");
    if (w == "empirical") opt.weighting = Weighting::Empirical;
    else if (w == "uniform") opt.weighting = Weighting::Uniform;
    else if (w == "blended") opt.weighting = Weighting::Blended;
    else throw ConfigError("weighting must be empirical, uniform or blended");
    const std::string d = cfg.get_string("domain", "grid");
    if (d == "product") opt.domain_source = DomainSource::MemoryProduct;
    else if (d == "pairs") opt.domain_source = DomainSource::MemoryPairs;
    else if (d == "grid") opt.domain_source = DomainSource::FullGrid;
    else throw ConfigError("domain must be product, pairs or grid");
    return opt;
}

const Clause* Spm::find_uplink(int ue, int level) const {
    for (const Clause& c : clauses) {
        if (c.kind != ClauseKind::Uplink || c.ue != ue) continue;
        if (vocab(c.tail).level == level) return &c;
    }
    return nullptr;
}

std::vector<const Clause*> Spm::downlink_from(int head_ue, VocabId tail_ucm) const {
    std::vector<const Clause*> out;
    for (const Clause& c : clauses)
        if (c.kind == ClauseKind::Downlink && c.ue == head_ue && c.tail == tail_ucm)
            out.push_back(&c);
    return out;
}

std::vector<const Clause*> Spm::actions_from(VocabId tail_dcm) const {
    std::vector<const Clause*> out;
    for (const Clause& c : clauses)
        if (c.kind == ClauseKind::Action && c.tail == tail_dcm) out.push_back(&c);
    return out;
}

const Clause* Spm::find_grant_free(int ue, int level) const {
    for (const Clause& c : clauses) {
        if (c.kind != ClauseKind::GrantFree || c.ue != ue) continue;
        if (vocab(c.tail).level == level) return &c;
    }
    return nullptr;
}

std::array<std::set<int>, kNumUes> Spm::level_sets() const {
    std::array<std::set<int>, kNumUes> levels;
    for (const Clause& c : clauses)
        if (c.kind == ClauseKind::Uplink)
            levels[static_cast<std::size_t>(c.ue)].insert(vocab(c.tail).level);
    return levels;
}

std::set<BufferPair> Spm::domain() const {
    const auto levels = level_sets();
    std::set<BufferPair> out;
    for (int a : levels[0])
        for (int b : levels[1]) out.insert({a, b});
    return out;
}

int Spm::count_clauses(ClauseKind kind) const {
    int n = 0;
    for (const Clause& c : clauses)
        if (c.kind == kind) ++n;
    return n;
}

int Spm::count_vocab(VocabKind kind) const {
    int n = 0;
    for (const Vocabulary& v : vocabularies)
        if (v.kind == kind) ++n;
    return n;
}

int Spm::count_vocab_ue(VocabKind kind, int ue) const {
    int n = 0;
    for (const Vocabulary& v : vocabularies)
        if (v.kind == kind && v.ue == ue) ++n;
    return n;
}

int Spm::cm_bits(VocabKind kind) const {
    int bits = 0;
    for (int ue = 0; ue < kNumUes; ++ue) {
        const int count = count_vocab_ue(kind, ue);
        int b = 0;
        while ((1 << b) < count) ++b;
        bits = std::max(bits, b);
    }
    return bits;
}

Rule formulate_rule(const Spm& spm, const BufferPair& state, int ue_i, int ue_j) {
    Rule rule;
    rule.state = state;
    rule.ue_i = ue_i;
    rule.ue_j = ue_j;

    const Clause* alpha = spm.find_uplink(ue_j, state[ue_j]);
    if (!alpha) {
        throw NoRuleError("no uplink clause for UE " + std::to_string(ue_j + 1) +
                          " at buffer level " + std::to_string(state[ue_j]));
    }

    const auto index_of = [&spm](const Clause* c) {
        return static_cast<std::size_t>(c - spm.clauses.data());
    };
    rule.clause_indices.push_back(index_of(alpha));

    const std::vector<const Clause*> betas = spm.downlink_from(ue_i, alpha->head);
    for (const Clause* beta : betas) rule.clause_indices.push_back(index_of(beta));
    for (const Clause* beta : betas) {
        for (const Clause* gamma : spm.actions_from(beta->head))
            rule.clause_indices.push_back(index_of(gamma));
    }
    return rule;
}

void sort_clauses_canonically(const Spm& spm, std::vector<Clause>& clauses) {
    const auto key = [&spm](const Clause& c) {
        return std::make_tuple(static_cast<int>(c.kind), c.ue, c.tail_ue,
                               vocab_rank(spm.vocab(c.tail)), vocab_rank(spm.vocab(c.head)));
    };
    std::sort(clauses.begin(), clauses.end(),
              [&key](const Clause& a, const Clause& b) { return key(a) < key(b); });
}

namespace {

/// The no-merging pipeline is the NPM extract itself: without polysemy every
/// connection is certain, so clauses carry probability 1 instead of the
/// co-occurrence ratio (which would split over the other UE's states).
std::vector<Clause> certain_clauses(const ProtocolGraph& graph) {
    std::vector<Clause> clauses;
    for (const Connection& c : graph.connections) {
        const Vocabulary& tail = graph.vocabularies[static_cast<std::size_t>(c.tail)];
        const Vocabulary& head = graph.vocabularies[static_cast<std::size_t>(c.head)];
        Clause clause;
        clause.prob = 1.0;
        clause.tail = c.tail;
        clause.head = c.head;
        clause.ue = head.ue;
        clause.tail_ue = tail.ue;
        switch (tail.kind) {
            case VocabKind::Input: clause.kind = ClauseKind::Uplink; break;
            case VocabKind::Ucm: clause.kind = ClauseKind::Downlink; break;
            case VocabKind::Dcm: clause.kind = ClauseKind::Action; break;
            default: throw Error("certain_clauses: malformed graph layering");
        }
        clauses.push_back(clause);
    }
    return clauses;
}

}  // namespace

Spm construct_spm_over_domain(const NPModel& model, const std::set<BufferPair>& domain,
                              const StateWeights& weights, const SpmOptions& options) {
    ProtocolGraph graph = extract_graph(model, domain);
    if (options.merge_activation) graph = merge_activation_aware(graph);
    if (options.merge_connection) graph = merge_connection_aware(graph);

    const bool merged = options.merge_activation || options.merge_connection;
    const std::vector<Clause> estimated =
        merged ? estimate_clause_probabilities(graph, weights) : certain_clauses(graph);

    // Union of all rules over the domain (Eq.-20 style): collect the clauses
    // actually entailed from some state.
    Spm staging;
    staging.cm_width = graph.cm_width;
    staging.vocabularies = graph.vocabularies;
    staging.clauses = estimated;

    std::vector<bool> used(estimated.size(), false);
    for (const auto& [state, chain] : graph.chains) {
        for (int i = 0; i < kNumUes; ++i) {
            for (int j = 0; j < kNumUes; ++j) {
                const Rule rule = formulate_rule(staging, state, i, j);
                for (std::size_t idx : rule.clause_indices) used[idx] = true;
            }
        }
    }

    std::vector<Clause> kept;
    for (std::size_t k = 0; k < estimated.size(); ++k)
        if (used[k]) kept.push_back(estimated[k]);

    // Drop vocabularies no kept clause references, compacting ids but keeping
    // the merged labels (gaps in label indices are fine).
    std::vector<bool> vocab_used(graph.vocabularies.size(), false);
    for (const Clause& c : kept) {
        vocab_used[static_cast<std::size_t>(c.tail)] = true;
        vocab_used[static_cast<std::size_t>(c.head)] = true;
    }
    std::vector<VocabId> remap(graph.vocabularies.size(), -1);
    Spm spm;
    spm.cm_width = graph.cm_width;
    for (std::size_t v = 0; v < graph.vocabularies.size(); ++v) {
        if (!vocab_used[v]) continue;
        Vocabulary copy = graph.vocabularies[v];
        copy.id = static_cast<VocabId>(spm.vocabularies.size());
        remap[v] = copy.id;
        spm.vocabularies.push_back(std::move(copy));
    }
    for (Clause c : kept) {
        c.tail = remap[static_cast<std::size_t>(c.tail)];
        c.head = remap[static_cast<std::size_t>(c.head)];
        spm.clauses.push_back(c);
    }
    sort_clauses_canonically(spm, spm.clauses);

    double total = 0.0;
    for (const auto& [state, chain] : graph.chains) total += weights.at(state);
    spm.sample_weight = total;
    spm.options_desc = options.describe();
    spm.source_hash = npm_content_hash(model);
    return spm;
}

Spm construct_spm(const NPModel& model, const EpisodicMemory& memory,
                  const SpmOptions& options) {
    std::set<BufferPair> domain;
    switch (options.domain_source) {
        case SpmOptions::DomainSource::MemoryProduct:
            domain = observed_product_domain(memory);
            break;
        case SpmOptions::DomainSource::MemoryPairs:
            domain = observed_state_domain(memory);
            break;
        case SpmOptions::DomainSource::FullGrid:
            domain = full_grid_domain(model.arch.b_max);
            break;
    }
    StateWeights weights;
    switch (options.weighting) {
        case SpmOptions::Weighting::Empirical:
            weights = StateWeights::from_memory(memory);
            break;
        case SpmOptions::Weighting::Blended:
            weights = StateWeights::blended_from_memory(memory);
            break;
        case SpmOptions::Weighting::Uniform:
            weights = StateWeights::uniform();
            break;
    }
    return construct_spm_over_domain(model, domain, weights, options);
}

bool structurally_equal(const Spm& a, const Spm& b) {
    const auto vocab_set = [](const Spm& s) {
        std::set<std::tuple<int, int, std::string>> out;
        for (const Vocabulary& v : s.vocabularies)
            out.insert({static_cast<int>(v.kind), v.ue, v.label});
        return out;
    };
    if (vocab_set(a) != vocab_set(b)) return false;

    const auto clause_set = [](const Spm& s) {
        std::set<std::tuple<int, int, int, std::string, std::string, double>> out;
        for (const Clause& c : s.clauses)
            out.insert({static_cast<int>(c.kind), c.ue, c.tail_ue, s.vocab(c.tail).label,
                        s.vocab(c.head).label, c.prob});
        return out;
    };
    return clause_set(a) == clause_set(b);
}

}  // namespace semproto
