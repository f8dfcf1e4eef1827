#include <doctest.h>

#include <map>
#include <semproto/errors.hpp>
#include <semproto/spm.hpp>
#include <semproto/train.hpp>
#include <set>

using namespace semproto;

namespace {

NPModel random_model(std::uint64_t seed, int b_max = 5) {
    Rng rng(seed);
    NpmArchitecture arch;
    arch.b_max = b_max;
    return NPModel::make(arch, rng);
}

/// Hand-built layered graphs for merge/estimation oracles.
struct ToyGraph {
    ProtocolGraph graph;

    VocabId input(int ue, int level) {
        Vocabulary v;
        v.id = static_cast<VocabId>(graph.vocabularies.size());
        v.kind = VocabKind::Input;
        v.ue = ue;
        v.level = level;
        v.label = "b" + std::to_string(ue + 1) + "_" + std::to_string(level);
        graph.vocabularies.push_back(v);
        return v.id;
    }
    VocabId cm(VocabKind kind, int ue, std::uint64_t pattern_bits, int index) {
        Vocabulary v;
        v.id = static_cast<VocabId>(graph.vocabularies.size());
        v.kind = kind;
        v.ue = ue;
        v.pattern = ActivationPattern{pattern_bits, 8};
        v.label = std::string(1, kind == VocabKind::Ucm ? 'u' : 'd') +
                  std::to_string(ue + 1) + "_" + std::to_string(index);
        graph.vocabularies.push_back(v);
        return v.id;
    }
    VocabId action(int ue, UeAction a) {
        Vocabulary v;
        v.id = static_cast<VocabId>(graph.vocabularies.size());
        v.kind = VocabKind::Action;
        v.ue = ue;
        v.action = a;
        v.label = "a" + std::to_string(ue + 1) + "_" + std::string(1, action_symbol(a));
        graph.vocabularies.push_back(v);
        return v.id;
    }
    void chain(BufferPair state, std::array<VocabId, 2> b, std::array<VocabId, 2> u,
               std::array<VocabId, 2> d, std::array<VocabId, 2> a) {
        StateChain c;
        c.input = b;
        c.u = u;
        c.d = d;
        c.a = a;
        graph.chains[state] = c;
        const auto bump = [this](VocabId tail, VocabId head) {
            for (Connection& conn : graph.connections) {
                if (conn.tail == tail && conn.head == head) {
                    conn.count += 1;
                    return;
                }
            }
            graph.connections.push_back(Connection{tail, head, 1});
        };
        for (int ue = 0; ue < 2; ++ue) bump(b[ue], u[ue]);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) bump(u[j], d[i]);
        for (int ue = 0; ue < 2; ++ue) bump(d[ue], a[ue]);
    }
};

int count_kind_ue(const ProtocolGraph& g, VocabKind kind, int ue) {
    return g.count_kind_ue(kind, ue);
}

bool graph_layered(const ProtocolGraph& g) {
    for (const Connection& c : g.connections) {
        const VocabKind tail = g.vocabularies[c.tail].kind;
        const VocabKind head = g.vocabularies[c.head].kind;
        const bool ok = (tail == VocabKind::Input && head == VocabKind::Ucm) ||
                        (tail == VocabKind::Ucm && head == VocabKind::Dcm) ||
                        (tail == VocabKind::Dcm && head == VocabKind::Action);
        if (!ok) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("activation merge: equal patterns collapse, distinct stay") {
    ToyGraph toy;
    const VocabId b0 = toy.input(0, 0);
    const VocabId b1 = toy.input(0, 1);
    const VocabId b20 = toy.input(1, 0);
    const VocabId u_a = toy.cm(VocabKind::Ucm, 0, 0b10011000, 0);
    const VocabId u_b = toy.cm(VocabKind::Ucm, 0, 0b10011000, 1);  // same pattern
    const VocabId u_d = toy.cm(VocabKind::Ucm, 1, 0b1, 0);
    const VocabId d_1 = toy.cm(VocabKind::Dcm, 0, 0b1, 0);
    const VocabId d_2 = toy.cm(VocabKind::Dcm, 1, 0b10, 0);
    const VocabId a_1 = toy.action(0, UeAction::Access);
    const VocabId a_2 = toy.action(1, UeAction::Silence);
    toy.chain({0, 0}, {b0, b20}, {u_a, u_d}, {d_1, d_2}, {a_1, a_2});
    toy.chain({1, 0}, {b1, b20}, {u_b, u_d}, {d_1, d_2}, {a_1, a_2});

    const ProtocolGraph merged = merge_activation_aware(toy.graph);
    CHECK(count_kind_ue(merged, VocabKind::Ucm, 0) == 1);  // u_a + u_b merged
    CHECK(count_kind_ue(merged, VocabKind::Ucm, 1) == 1);
    CHECK(graph_layered(merged));

    // the two b->u edges now target the same merged vocabulary
    std::int64_t input_edge_count = 0;
    for (const Connection& c : merged.connections) {
        if (merged.vocabularies[c.tail].kind == VocabKind::Input &&
            merged.vocabularies[c.tail].ue == 0)
            input_edge_count += c.count;
    }
    CHECK(input_edge_count == 2);
}

TEST_CASE("activation merge: all-distinct patterns is an exact no-op") {
    ToyGraph toy;
    const VocabId b0 = toy.input(0, 0);
    const VocabId b1 = toy.input(0, 1);
    const VocabId b20 = toy.input(1, 0);
    const VocabId u_a = toy.cm(VocabKind::Ucm, 0, 0b001, 0);
    const VocabId u_b = toy.cm(VocabKind::Ucm, 0, 0b010, 1);
    const VocabId u_d = toy.cm(VocabKind::Ucm, 1, 0b1, 0);
    const VocabId d_x = toy.cm(VocabKind::Dcm, 0, 0b001, 0);
    const VocabId d_y = toy.cm(VocabKind::Dcm, 0, 0b010, 1);
    const VocabId d_2 = toy.cm(VocabKind::Dcm, 1, 0b1, 0);
    const VocabId a_1 = toy.action(0, UeAction::Silence);
    const VocabId a_2 = toy.action(1, UeAction::Silence);
    toy.chain({0, 0}, {b0, b20}, {u_a, u_d}, {d_x, d_2}, {a_1, a_2});
    toy.chain({1, 0}, {b1, b20}, {u_b, u_d}, {d_y, d_2}, {a_1, a_2});

    const ProtocolGraph merged = merge_activation_aware(toy.graph);
    REQUIRE(merged.vocabularies.size() == toy.graph.vocabularies.size());
    for (std::size_t k = 0; k < merged.vocabularies.size(); ++k)
        CHECK(merged.vocabularies[k].label == toy.graph.vocabularies[k].label);
    REQUIRE(merged.connections.size() == toy.graph.connections.size());

    // and a second application is byte-stable (true fixpoint)
    const ProtocolGraph twice = merge_activation_aware(merged);
    REQUIRE(twice.vocabularies.size() == merged.vocabularies.size());
    for (std::size_t k = 0; k < merged.vocabularies.size(); ++k)
        CHECK(twice.vocabularies[k].label == merged.vocabularies[k].label);
}

TEST_CASE("activation merge: merged counts equal the pattern classes (oracle)") {
    for (std::uint64_t seed : {3u, 5u, 9u, 23u}) {
        const NPModel model = random_model(seed);
        const ProtocolGraph graph = extract_graph(model, full_grid_domain(5));
        const ProtocolGraph merged = merge_activation_aware(graph);
        for (int ue = 0; ue < 2; ++ue) {
            for (VocabKind kind : {VocabKind::Ucm, VocabKind::Dcm}) {
                std::set<std::uint64_t> classes;  // brute-force partition by pattern
                for (const Vocabulary& v : graph.vocabularies)
                    if (v.kind == kind && v.ue == ue) classes.insert(v.pattern.bits);
                CHECK(count_kind_ue(merged, kind, ue) == static_cast<int>(classes.size()));
            }
        }
        CHECK(graph_layered(merged));
        // idempotence
        const ProtocolGraph twice = merge_activation_aware(merged);
        CHECK(twice.vocabularies.size() == merged.vocabularies.size());
        CHECK(twice.connections.size() == merged.connections.size());
    }
}

TEST_CASE("connection merge: DCMs by action set, then UCMs by DCM set") {
    // u_a and u_c have different patterns (no activation merge), their DCMs
    // share the action successor set, so the DCM step makes the UCM step fire.
    ToyGraph toy;
    const VocabId b0 = toy.input(0, 0);
    const VocabId b1 = toy.input(0, 1);
    const VocabId b2 = toy.input(0, 2);
    const VocabId b20 = toy.input(1, 0);
    const VocabId u_a = toy.cm(VocabKind::Ucm, 0, 0b001, 0);
    const VocabId u_b = toy.cm(VocabKind::Ucm, 0, 0b010, 1);
    const VocabId u_c = toy.cm(VocabKind::Ucm, 0, 0b100, 2);
    const VocabId u_d = toy.cm(VocabKind::Ucm, 1, 0b1, 0);
    const VocabId d_x = toy.cm(VocabKind::Dcm, 0, 0b001, 0);
    const VocabId d_y = toy.cm(VocabKind::Dcm, 0, 0b010, 1);
    const VocabId d_z = toy.cm(VocabKind::Dcm, 0, 0b100, 2);
    const VocabId d_2 = toy.cm(VocabKind::Dcm, 1, 0b1, 0);
    const VocabId a_acc = toy.action(0, UeAction::Access);
    const VocabId a_sil = toy.action(0, UeAction::Silence);
    const VocabId a2_sil = toy.action(1, UeAction::Silence);
    toy.chain({0, 0}, {b0, b20}, {u_a, u_d}, {d_x, d_2}, {a_acc, a2_sil});
    toy.chain({1, 0}, {b1, b20}, {u_b, u_d}, {d_y, d_2}, {a_sil, a2_sil});
    toy.chain({2, 0}, {b2, b20}, {u_c, u_d}, {d_z, d_2}, {a_acc, a2_sil});

    const ProtocolGraph merged = merge_connection_aware(toy.graph);
    // d_x and d_z both connect only to {Access} -> merged; d_y alone
    CHECK(count_kind_ue(merged, VocabKind::Dcm, 0) == 2);
    // after the DCM merge, u_a and u_c share the successor set -> merged
    CHECK(count_kind_ue(merged, VocabKind::Ucm, 0) == 2);
    CHECK(count_kind_ue(merged, VocabKind::Dcm, 1) == 1);
    CHECK(graph_layered(merged));

    // oracle: brute-force successor-set partitioning on the original graph
    std::map<std::vector<VocabId>, int> dcm_classes;
    for (const Vocabulary& v : toy.graph.vocabularies)
        if (v.kind == VocabKind::Dcm && v.ue == 0)
            dcm_classes[toy.graph.successors(v.id)] += 1;
    CHECK(dcm_classes.size() == 2);

    // idempotence
    const ProtocolGraph twice = merge_connection_aware(merged);
    CHECK(twice.vocabularies.size() == merged.vocabularies.size());
}

TEST_CASE("connection merge: unequal successor sets stay separate") {
    ToyGraph toy;
    const VocabId b0 = toy.input(0, 0);
    const VocabId b1 = toy.input(0, 1);
    const VocabId b20 = toy.input(1, 0);
    const VocabId u_a = toy.cm(VocabKind::Ucm, 0, 0b01, 0);
    const VocabId u_b = toy.cm(VocabKind::Ucm, 0, 0b10, 1);
    const VocabId u_d = toy.cm(VocabKind::Ucm, 1, 0b1, 0);
    const VocabId d_x = toy.cm(VocabKind::Dcm, 0, 0b01, 0);
    const VocabId d_y = toy.cm(VocabKind::Dcm, 0, 0b10, 1);
    const VocabId d_2 = toy.cm(VocabKind::Dcm, 1, 0b1, 0);
    const VocabId a_acc = toy.action(0, UeAction::Access);
    const VocabId a_dis = toy.action(0, UeAction::Discard);
    const VocabId a2_sil = toy.action(1, UeAction::Silence);
    // u_a -> {d_x}, u_b -> {d_x via state, d_y) }: build chains accordingly
    toy.chain({0, 0}, {b0, b20}, {u_a, u_d}, {d_x, d_2}, {a_acc, a2_sil});
    toy.chain({1, 0}, {b1, b20}, {u_b, u_d}, {d_y, d_2}, {a_dis, a2_sil});

    const ProtocolGraph merged = merge_connection_aware(toy.graph);
    // d_x -> {Access}, d_y -> {Discard}: different sets, no merging anywhere
    CHECK(count_kind_ue(merged, VocabKind::Dcm, 0) == 2);
    CHECK(count_kind_ue(merged, VocabKind::Ucm, 0) == 2);
}

TEST_CASE("merging never increases counts and keeps graphs layered") {
    for (std::uint64_t seed : {2u, 12u, 29u}) {
        const NPModel model = random_model(seed);
        const ProtocolGraph graph = extract_graph(model, full_grid_domain(5));
        const ProtocolGraph a = merge_activation_aware(graph);
        const ProtocolGraph c = merge_connection_aware(a);
        CHECK(a.vocabularies.size() <= graph.vocabularies.size());
        CHECK(a.connections.size() <= graph.connections.size());
        CHECK(c.vocabularies.size() <= a.vocabularies.size());
        CHECK(c.connections.size() <= a.connections.size());
        CHECK(graph_layered(a));
        CHECK(graph_layered(c));
    }
}

TEST_CASE("estimation: ratios match a direct counting oracle on the raw extract") {
    const NPModel model = random_model(41);
    const ProtocolGraph graph = extract_graph(model, full_grid_domain(5));
    const std::vector<Clause> clauses =
        estimate_clause_probabilities(graph, StateWeights::uniform());
    CHECK(clauses.size() == graph.connections.size());

    // oracle: recount occurrences and co-occurrences straight from the chains
    std::map<VocabId, int> occ_u, occ_d;
    std::map<std::pair<VocabId, VocabId>, int> cooc;
    for (const auto& [state, chain] : graph.chains) {
        for (int j = 0; j < 2; ++j) occ_u[chain.u[j]] += 1;
        for (int i = 0; i < 2; ++i) {
            occ_d[chain.d[i]] += 1;
            cooc[{chain.d[i], chain.a[i]}] += 1;
            for (int j = 0; j < 2; ++j) cooc[{chain.u[j], chain.d[i]}] += 1;
        }
    }
    for (const Clause& c : clauses) {
        if (c.kind == ClauseKind::Uplink) {
            CHECK(c.prob == 1.0);
        } else if (c.kind == ClauseKind::Downlink) {
            CHECK(c.prob == doctest::Approx(static_cast<double>(cooc[{c.tail, c.head}]) /
                                            occ_u[c.tail]).epsilon(1e-12));
        } else {
            CHECK(c.prob == doctest::Approx(static_cast<double>(cooc[{c.tail, c.head}]) /
                                            occ_d[c.tail]).epsilon(1e-12));
        }
        CHECK(c.prob > 0.0);
    }
}

TEST_CASE("estimation: co-occurrence ratio (u seen 4 times, d twice -> 0.5)") {
    ToyGraph toy;
    const VocabId b0 = toy.input(0, 0);
    const VocabId b20 = toy.input(1, 0);
    const VocabId b21 = toy.input(1, 1);
    const VocabId b22 = toy.input(1, 2);
    const VocabId b23 = toy.input(1, 3);
    const VocabId u_a = toy.cm(VocabKind::Ucm, 0, 0b1, 0);
    const VocabId u2_0 = toy.cm(VocabKind::Ucm, 1, 0b001, 0);
    const VocabId u2_1 = toy.cm(VocabKind::Ucm, 1, 0b010, 1);
    const VocabId u2_2 = toy.cm(VocabKind::Ucm, 1, 0b100, 2);
    const VocabId u2_3 = toy.cm(VocabKind::Ucm, 1, 0b110, 3);
    const VocabId d_x = toy.cm(VocabKind::Dcm, 0, 0b01, 0);
    const VocabId d_y = toy.cm(VocabKind::Dcm, 0, 0b10, 1);
    const VocabId d_2 = toy.cm(VocabKind::Dcm, 1, 0b1, 0);
    const VocabId a_acc = toy.action(0, UeAction::Access);
    const VocabId a2_sil = toy.action(1, UeAction::Silence);
    // UE1's u_a occurs in 4 states; its DCM is d_x twice and d_y twice
    toy.chain({0, 0}, {b0, b20}, {u_a, u2_0}, {d_x, d_2}, {a_acc, a2_sil});
    toy.chain({0, 1}, {b0, b21}, {u_a, u2_1}, {d_x, d_2}, {a_acc, a2_sil});
    toy.chain({0, 2}, {b0, b22}, {u_a, u2_2}, {d_y, d_2}, {a_acc, a2_sil});
    toy.chain({0, 3}, {b0, b23}, {u_a, u2_3}, {d_y, d_2}, {a_acc, a2_sil});

    const std::vector<Clause> clauses =
        estimate_clause_probabilities(toy.graph, StateWeights::uniform());
    int found = 0;
    for (const Clause& c : clauses) {
        if (c.kind != ClauseKind::Downlink) continue;
        if (c.tail == u_a && (c.head == d_x || c.head == d_y)) {
            CHECK(c.prob == doctest::Approx(0.5));
            ++found;
        }
        if (c.kind == ClauseKind::Downlink) CHECK(c.prob > 0.0);
    }
    CHECK(found == 2);
}

TEST_CASE("estimation: uplink clauses carry probability exactly 1") {
    const NPModel model = random_model(47);
    ProtocolGraph graph = extract_graph(model, full_grid_domain(5));
    graph = merge_activation_aware(graph);
    graph = merge_connection_aware(graph);
    const std::vector<Clause> clauses =
        estimate_clause_probabilities(graph, StateWeights::uniform());
    int alphas = 0;
    for (const Clause& c : clauses) {
        if (c.kind == ClauseKind::Uplink) {
            CHECK(c.prob == 1.0);
            ++alphas;
        }
    }
    CHECK(alphas == 12);  // 6 levels x 2 UEs
}

TEST_CASE("estimation: downlink and action families normalize to 1") {
    for (std::uint64_t seed : {4u, 18u}) {
        const NPModel model = random_model(seed);
        ProtocolGraph graph = extract_graph(model, full_grid_domain(5));
        graph = merge_activation_aware(graph);
        graph = merge_connection_aware(graph);
        const std::vector<Clause> clauses =
            estimate_clause_probabilities(graph, StateWeights::uniform());

        std::map<std::tuple<int, int, VocabId>, double> beta_sums;  // (i, j, u)
        std::map<VocabId, double> gamma_sums;
        for (const Clause& c : clauses) {
            if (c.kind == ClauseKind::Downlink) beta_sums[{c.ue, c.tail_ue, c.tail}] += c.prob;
            if (c.kind == ClauseKind::Action) gamma_sums[c.tail] += c.prob;
        }
        for (const auto& [key, sum] : beta_sums) CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        for (const auto& [key, sum] : gamma_sums) CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("rules: deterministic chain entails exactly alpha, beta, gamma") {
    const NPModel model = random_model(53, 1);
    SpmOptions options;
    options.merge_activation = false;
    options.merge_connection = false;
    options.weighting = SpmOptions::Weighting::Uniform;
    const Spm spm = construct_spm_over_domain(model, {{1, 0}}, StateWeights::uniform(),
                                              options);
    const Rule rule = formulate_rule(spm, {1, 0}, 0, 0);
    REQUIRE(rule.clause_indices.size() == 3);
    CHECK(spm.clauses[rule.clause_indices[0]].kind == ClauseKind::Uplink);
    CHECK(spm.clauses[rule.clause_indices[1]].kind == ClauseKind::Downlink);
    CHECK(spm.clauses[rule.clause_indices[2]].kind == ClauseKind::Action);

    CHECK_THROWS_AS(formulate_rule(spm, {0, 0}, 0, 0), NoRuleError);
}

TEST_CASE("rules: merged fan-out expands combinatorially (1+2+4)") {
    // Hand-build an SPM where UE1's u connects to 2 DCMs, each with 2 actions.
    Spm spm;
    spm.cm_width = 8;
    const auto add_vocab = [&spm](VocabKind kind, int ue, int level, UeAction action,
                                  const std::string& label) {
        Vocabulary v;
        v.id = static_cast<VocabId>(spm.vocabularies.size());
        v.kind = kind;
        v.ue = ue;
        v.level = level;
        v.action = action;
        v.label = label;
        spm.vocabularies.push_back(v);
        return v.id;
    };
    const VocabId b = add_vocab(VocabKind::Input, 0, 0, UeAction::Silence, "b1_0");
    const VocabId u = add_vocab(VocabKind::Ucm, 0, -1, UeAction::Silence, "u1_0");
    const VocabId d0 = add_vocab(VocabKind::Dcm, 0, -1, UeAction::Silence, "d1_0");
    const VocabId d1 = add_vocab(VocabKind::Dcm, 0, -1, UeAction::Silence, "d1_1");
    const VocabId aS = add_vocab(VocabKind::Action, 0, -1, UeAction::Silence, "a1_S");
    const VocabId aA = add_vocab(VocabKind::Action, 0, -1, UeAction::Access, "a1_A");
    spm.clauses.push_back({ClauseKind::Uplink, 1.0, u, b, 0, 0});
    spm.clauses.push_back({ClauseKind::Downlink, 0.5, d0, u, 0, 0});
    spm.clauses.push_back({ClauseKind::Downlink, 0.5, d1, u, 0, 0});
    spm.clauses.push_back({ClauseKind::Action, 0.25, aS, d0, 0, 0});
    spm.clauses.push_back({ClauseKind::Action, 0.75, aA, d0, 0, 0});
    spm.clauses.push_back({ClauseKind::Action, 0.5, aS, d1, 0, 0});
    spm.clauses.push_back({ClauseKind::Action, 0.5, aA, d1, 0, 0});
    sort_clauses_canonically(spm, spm.clauses);

    const Rule rule = formulate_rule(spm, {0, 0}, 0, 0);
    CHECK(rule.clause_indices.size() == 1 + 2 + 4);
}

TEST_CASE("rules: membership equals the brute-force entailment closure") {
    const NPModel model = random_model(61);
    EnvConfig env;
    Rng rng(61);
    const EpisodicMemory memory = collect_memory(model, env, 12, rng);
    const Spm spm = construct_spm(model, memory, SpmOptions{});

    const auto levels = spm.level_sets();
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            for (int level_j : levels[j]) {
                BufferPair state{0, 0};
                state[j] = level_j;
                state[1 - j] = *levels[1 - j].begin();
                const Rule rule = formulate_rule(spm, state, i, j);

                // oracle: start from the alpha clause, repeatedly add clauses
                // of the (i,j) family whose tail equals an entailed head
                std::set<std::size_t> closure;
                std::set<VocabId> entailed_heads;
                for (std::size_t k = 0; k < spm.clauses.size(); ++k) {
                    const Clause& c = spm.clauses[k];
                    if (c.kind == ClauseKind::Uplink && c.ue == j &&
                        spm.vocab(c.tail).level == state[j]) {
                        closure.insert(k);
                        entailed_heads.insert(c.head);
                    }
                }
                bool changed = true;
                while (changed) {
                    changed = false;
                    for (std::size_t k = 0; k < spm.clauses.size(); ++k) {
                        if (closure.count(k)) continue;
                        const Clause& c = spm.clauses[k];
                        const bool family_ok =
                            (c.kind == ClauseKind::Downlink && c.ue == i && c.tail_ue == j) ||
                            (c.kind == ClauseKind::Action && c.ue == i);
                        if (!family_ok) continue;
                        if (!entailed_heads.count(c.tail)) continue;
                        closure.insert(k);
                        entailed_heads.insert(c.head);
                        changed = true;
                    }
                }
                const std::set<std::size_t> got(rule.clause_indices.begin(),
                                                rule.clause_indices.end());
                CHECK(got == closure);
            }
        }
    }
}

TEST_CASE("construct: no merging degenerates to the NPM extract") {
    const NPModel model = random_model(67);
    SpmOptions options;
    options.merge_activation = false;
    options.merge_connection = false;
    options.weighting = SpmOptions::Weighting::Uniform;
    const auto domain = full_grid_domain(5);
    const ProtocolGraph graph = extract_graph(model, domain);
    const Spm spm = construct_spm_over_domain(model, domain, StateWeights::uniform(),
                                              options);
    CHECK(spm.clauses.size() == graph.connections.size());
    for (const Clause& c : spm.clauses) CHECK(c.prob == 1.0);
}

TEST_CASE("construct: single-state domain equals that state's rules") {
    const NPModel model = random_model(73);
    SpmOptions options;
    options.weighting = SpmOptions::Weighting::Uniform;
    const Spm spm =
        construct_spm_over_domain(model, {{2, 1}}, StateWeights::uniform(), options);
    std::set<std::size_t> union_of_rules;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const Rule rule = formulate_rule(spm, {2, 1}, i, j);
            union_of_rules.insert(rule.clause_indices.begin(), rule.clause_indices.end());
        }
    CHECK(union_of_rules.size() == spm.clauses.size());
}

TEST_CASE("construct: every clause is entailed by some rule (Eq-20 union)") {
    const NPModel model = random_model(79);
    EnvConfig env;
    Rng rng(79);
    const EpisodicMemory memory = collect_memory(model, env, 10, rng);
    const Spm spm = construct_spm(model, memory, SpmOptions{});

    std::set<std::size_t> covered;
    for (const BufferPair& state : spm.domain()) {
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                try {
                    const Rule rule = formulate_rule(spm, state, i, j);
                    covered.insert(rule.clause_indices.begin(), rule.clause_indices.end());
                } catch (const NoRuleError&) {
                }
            }
        }
    }
    CHECK(covered.size() == spm.clauses.size());
}

TEST_CASE("construct: empirical weighting uses visitation counts") {
    const NPModel model = random_model(97, 1);
    // memory with skewed visitation: state (1,1) three times, (1,0) once
    EpisodicMemory memory(16);
    for (int k = 0; k < 4; ++k) {
        Transition t;
        t.b = {1, k == 0 ? 0 : 1};
        t.u = {forward_ucm(model, 0, t.b[0]), forward_ucm(model, 1, t.b[1])};
        const CycleForward fw = full_cycle_forward(model, t.b);
        t.d = fw.d;
        memory.push(t);
    }
    const StateWeights weights = StateWeights::from_memory(memory);
    CHECK(weights.at({1, 1}) == 3.0);
    CHECK(weights.at({1, 0}) == 1.0);
    CHECK(weights.at({0, 0}) == 0.0);
}
