#include "semproto/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "semproto/errors.hpp"
#include "semproto/format.hpp"

namespace semproto {

std::string vocab_kind_name(VocabKind kind) {
    switch (kind) {
        case VocabKind::Input: return "input";
        case VocabKind::Ucm: return "ucm";
        case VocabKind::Dcm: return "dcm";
        case VocabKind::Action: return "action";
    }
    return "?";
}

ActivationPattern activation_pattern(std::span<const double> values) {
    if (values.size() > 64) throw Error("activation pattern supports width <= 64");
    ActivationPattern p;
    p.width = static_cast<int>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::isnan(values[i])) throw Error("activation pattern: NaN entry");
        if (values[i] > 0.0) p.bits |= (1ull << i);
    }
    return p;
}

std::string ActivationPattern::to_string() const {
    std::string s = "[";
    for (int i = 0; i < width; ++i) {
        if (i) s += ',';
        s += test(i) ? '1' : '0';
    }
    s += ']';
    return s;
}

std::set<BufferPair> ProtocolGraph::state_domain() const {
    std::set<BufferPair> out;
    for (const auto& [state, chain] : chains) out.insert(state);
    return out;
}

const Connection* ProtocolGraph::find_connection(VocabId tail, VocabId head) const {
    for (const Connection& c : connections)
        if (c.tail == tail && c.head == head) return &c;
    return nullptr;
}

std::vector<VocabId> ProtocolGraph::successors(VocabId tail) const {
    std::vector<VocabId> out;
    for (const Connection& c : connections)
        if (c.tail == tail) out.push_back(c.head);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

int ProtocolGraph::count_kind(VocabKind kind) const {
    int n = 0;
    for (const Vocabulary& v : vocabularies)
        if (v.kind == kind) ++n;
    return n;
}

int ProtocolGraph::count_kind_ue(VocabKind kind, int ue) const {
    int n = 0;
    for (const Vocabulary& v : vocabularies)
        if (v.kind == kind && v.ue == ue) ++n;
    return n;
}

std::set<BufferPair> observed_state_domain(const EpisodicMemory& memory) {
    if (memory.empty()) throw Error("cannot derive a state domain from an empty memory");
    std::set<BufferPair> domain;
    for (std::size_t k = 0; k < memory.size(); ++k) domain.insert(memory.at(k).b);
    return domain;
}

std::set<BufferPair> observed_product_domain(const EpisodicMemory& memory) {
    if (memory.empty()) throw Error("cannot derive a state domain from an empty memory");
    std::array<std::set<int>, kNumUes> levels;
    for (std::size_t k = 0; k < memory.size(); ++k)
        for (int ue = 0; ue < kNumUes; ++ue) levels[ue].insert(memory.at(k).b[ue]);
    std::set<BufferPair> domain;
    for (int a : levels[0])
        for (int b : levels[1]) domain.insert({a, b});
    return domain;
}

std::set<BufferPair> full_grid_domain(int b_max) {
    std::set<BufferPair> domain;
    for (int a = 0; a <= b_max; ++a)
        for (int b = 0; b <= b_max; ++b) domain.insert({a, b});
    return domain;
}

namespace {

std::string ue_label(int ue) { return std::to_string(ue + 1); }

}  // namespace

ProtocolGraph extract_graph(const NPModel& model, const std::set<BufferPair>& domain) {
    if (domain.empty()) throw Error("extract_graph: empty domain");

    // First pass: run the model over the sorted domain and deduplicate CM
    // vectors by exact equality, remembering first-occurrence order.
    std::map<BufferPair, CycleForward> forwards;
    std::array<std::set<int>, kNumUes> levels;
    std::array<std::map<std::vector<double>, int>, kNumUes> ucm_order, dcm_order;
    std::array<std::set<UeAction>, kNumUes> actions_seen;
    for (const BufferPair& state : domain) {
        CycleForward fw = full_cycle_forward(model, state);
        for (int ue = 0; ue < kNumUes; ++ue) {
            levels[ue].insert(state[ue]);
            ucm_order[ue].emplace(fw.u[ue], static_cast<int>(ucm_order[ue].size()));
            dcm_order[ue].emplace(fw.d[ue], static_cast<int>(dcm_order[ue].size()));
            actions_seen[ue].insert(fw.actions[ue]);
        }
        forwards.emplace(state, std::move(fw));
    }

    // Canonical vocabulary order: stage, UE, then level / (pattern,
    // first occurrence) / action. Merging keeps this ordering, so a merge
    // that collapses nothing is an exact identity.
    ProtocolGraph graph;
    graph.cm_width = model.arch.cm_size;
    std::array<std::map<int, VocabId>, kNumUes> input_ids;
    std::array<std::map<std::vector<double>, VocabId>, kNumUes> ucm_ids, dcm_ids;
    std::array<std::map<UeAction, VocabId>, kNumUes> action_ids;

    const auto add_vocab = [&graph](Vocabulary v) {
        v.id = static_cast<VocabId>(graph.vocabularies.size());
        graph.vocabularies.push_back(std::move(v));
        return graph.vocabularies.back().id;
    };

    for (int ue = 0; ue < kNumUes; ++ue) {
        for (int level : levels[ue]) {
            Vocabulary v;
            v.kind = VocabKind::Input;
            v.ue = ue;
            v.level = level;
            v.label = "b" + ue_label(ue) + "_" + std::to_string(level);
            input_ids[ue][level] = add_vocab(std::move(v));
        }
    }
    const auto add_cm_vocab = [&](VocabKind kind, int ue,
                                  const std::map<std::vector<double>, int>& order,
                                  std::map<std::vector<double>, VocabId>& ids) {
        std::vector<std::pair<std::tuple<std::uint64_t, int>, const std::vector<double>*>> ranked;
        for (const auto& [vec, first_seen] : order)
            ranked.push_back({{activation_pattern(vec).bits, first_seen}, &vec});
        std::sort(ranked.begin(), ranked.end());
        int index = 0;
        for (const auto& [key, vec] : ranked) {
            Vocabulary v;
            v.kind = kind;
            v.ue = ue;
            v.vec = *vec;
            v.pattern = activation_pattern(*vec);
            const char prefix = kind == VocabKind::Ucm ? 'u' : 'd';
            v.label = std::string(1, prefix) + ue_label(ue) + "_" + std::to_string(index++);
            ids[*vec] = add_vocab(std::move(v));
        }
    };
    for (int ue = 0; ue < kNumUes; ++ue)
        add_cm_vocab(VocabKind::Ucm, ue, ucm_order[ue], ucm_ids[ue]);
    for (int ue = 0; ue < kNumUes; ++ue)
        add_cm_vocab(VocabKind::Dcm, ue, dcm_order[ue], dcm_ids[ue]);
    for (int ue = 0; ue < kNumUes; ++ue) {
        for (UeAction a : actions_seen[ue]) {
            Vocabulary v;
            v.kind = VocabKind::Action;
            v.ue = ue;
            v.action = a;
            v.label = "a" + ue_label(ue) + "_" + std::string(1, action_symbol(a));
            action_ids[ue][a] = add_vocab(std::move(v));
        }
    }

    // Second pass: connections along b_j -> u_j -> d_i -> a_i, one chain per
    // UE per state. Every DCM is a function of both UCMs, so both contribute
    // an edge into it.
    std::map<std::pair<VocabId, VocabId>, std::int64_t> edges;
    for (const auto& [state, fw] : forwards) {
        StateChain chain;
        for (int ue = 0; ue < kNumUes; ++ue) {
            chain.input[ue] = input_ids[ue][state[ue]];
            chain.u[ue] = ucm_ids[ue][fw.u[ue]];
            chain.d[ue] = dcm_ids[ue][fw.d[ue]];
            chain.a[ue] = action_ids[ue][fw.actions[ue]];
        }
        for (int ue = 0; ue < kNumUes; ++ue) edges[{chain.input[ue], chain.u[ue]}] += 1;
        for (int i = 0; i < kNumUes; ++i)
            for (int j = 0; j < kNumUes; ++j) edges[{chain.u[j], chain.d[i]}] += 1;
        for (int ue = 0; ue < kNumUes; ++ue) edges[{chain.d[ue], chain.a[ue]}] += 1;
        graph.chains[state] = chain;
    }
    for (const auto& [key, count] : edges)
        graph.connections.push_back(Connection{key.first, key.second, count});
    return graph;
}

std::string graph_vocab_csv(const ProtocolGraph& graph) {
    std::ostringstream out;
    out << "id,label,kind,ue,level,action,pattern,vector\n";
    for (const Vocabulary& v : graph.vocabularies) {
        out << v.id << ',' << v.label << ',' << vocab_kind_name(v.kind) << ','
            << (v.ue + 1) << ',';
        if (v.kind == VocabKind::Input) out << v.level;
        out << ',';
        if (v.kind == VocabKind::Action) out << action_symbol(v.action);
        out << ',';
        if (v.kind == VocabKind::Ucm || v.kind == VocabKind::Dcm)
            out << '"' << v.pattern.to_string() << '"';
        out << ',';
        if (!v.vec.empty()) {
            out << '"';
            for (std::size_t i = 0; i < v.vec.size(); ++i) {
                if (i) out << ' ';
                out << format_double(v.vec[i]);
            }
            out << '"';
        }
        out << '\n';
    }
    return out.str();
}

std::string graph_edges_csv(const ProtocolGraph& graph) {
    std::ostringstream out;
    out << "tail_id,tail,head_id,head,count\n";
    for (const Connection& c : graph.connections) {
        out << c.tail << ',' << graph.vocabularies[c.tail].label << ',' << c.head << ','
            << graph.vocabularies[c.head].label << ',' << c.count << '\n';
    }
    return out.str();
}

std::string graph_to_text(const ProtocolGraph& graph) {
    std::ostringstream out;
    out << "protocol graph: " << graph.vocabularies.size() << " vocabularies, "
        << graph.connections.size() << " connections, " << graph.chains.size()
        << " states\n";
    for (int ue = 0; ue < kNumUes; ++ue) {
        out << "UE " << (ue + 1) << "\n";
        for (const VocabKind kind :
             {VocabKind::Input, VocabKind::Ucm, VocabKind::Dcm, VocabKind::Action}) {
            out << "  " << vocab_kind_name(kind) << ":";
            for (const Vocabulary& v : graph.vocabularies) {
                if (v.kind != kind || v.ue != ue) continue;
                out << ' ' << v.label;
            }
            out << '\n';
        }
    }
    out << "connections (tail -> head x count)\n";
    for (const Connection& c : graph.connections) {
        out << "  " << graph.vocabularies[c.tail].label << " -> "
            << graph.vocabularies[c.head].label << " x" << c.count << '\n';
    }
    return out.str();
}

}  // namespace semproto
