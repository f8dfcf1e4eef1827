#include "semproto/inference.hpp"

#include <algorithm>
#include <sstream>

#include "semproto/errors.hpp"
#include "semproto/format.hpp"

namespace semproto {

TruthProbs truth_probabilities(const Spm& spm, const BufferPair& state, int ue) {
    const int other = 1 - ue;
    const Clause* alpha_own = spm.find_uplink(ue, state[ue]);
    const Clause* alpha_other = spm.find_uplink(other, state[other]);
    if (!alpha_own || !alpha_other) {
        throw NoRuleError("state (" + std::to_string(state[0]) + "," +
                          std::to_string(state[1]) + ") outside the SPM domain");
    }

    TruthProbs probs;
    probs.ucm = alpha_own->head;
    probs.ucm_prob = alpha_own->prob;  // always 1 by construction

    // Candidate DCMs: reachable from the pair of selected UCMs. A DCM implied
    // by only one UCM keeps probability 0 (the joint event needs both).
    std::map<VocabId, std::array<double, 2>> partial;  // d -> {beta_own, beta_other}
    for (const Clause* beta : spm.downlink_from(ue, alpha_own->head))
        partial[beta->head][0] = beta->prob;
    for (const Clause* beta : spm.downlink_from(ue, alpha_other->head))
        partial[beta->head][1] = beta->prob;
    for (const auto& [d, pair] : partial)
        probs.dcm.push_back({d, pair[0] * pair[1]});

    for (const auto& [d, p] : probs.dcm) {
        if (p > probs.selected_dcm_prob) {  // ties keep the lower id (map order)
            probs.selected_dcm = d;
            probs.selected_dcm_prob = p;
        }
    }
    if (probs.selected_dcm < 0) {
        throw NoRuleError("no DCM implied by both UCMs for UE " + std::to_string(ue + 1) +
                          " at state (" + std::to_string(state[0]) + "," +
                          std::to_string(state[1]) + ")");
    }

    for (const Clause* gamma : spm.actions_from(probs.selected_dcm))
        probs.action.push_back({gamma->head, gamma->prob});
    std::sort(probs.action.begin(), probs.action.end());
    return probs;
}

double action_truth_probability(const Spm& spm, const BufferPair& state, int ue,
                                UeAction action) {
    const TruthProbs probs = truth_probabilities(spm, state, ue);
    for (const auto& [a, p] : probs.action)
        if (spm.vocab(a).action == action) return p;
    return 0.0;
}

Selection select(const Spm& spm, const BufferPair& state) {
    Selection sel;
    for (int ue = 0; ue < kNumUes; ++ue) {
        const TruthProbs probs = truth_probabilities(spm, state, ue);
        sel.u[ue] = probs.ucm;
        sel.d[ue] = probs.selected_dcm;
        sel.d_prob[ue] = probs.selected_dcm_prob;

        VocabId best = -1;
        double best_prob = 0.0;
        for (const auto& [a, p] : probs.action) {
            if (p > best_prob) {  // ties keep the lower vocabulary id
                best = a;
                best_prob = p;
            }
        }
        if (best < 0) {
            throw NoRuleError("selected DCM has no action clause for UE " +
                              std::to_string(ue + 1));
        }
        sel.a[ue] = best;
        sel.a_prob[ue] = best_prob;
        sel.actions[ue] = spm.vocab(best).action;
    }
    return sel;
}

std::vector<Clause> detect_grant_free(const Spm& spm) {
    std::vector<Clause> deltas;
    const auto levels = spm.level_sets();
    for (int ue = 0; ue < kNumUes; ++ue) {
        const int other = 1 - ue;
        for (int level : levels[ue]) {
            bool constant = true;
            std::optional<std::pair<VocabId, VocabId>> chain;  // (dcm, action)
            for (int other_level : levels[other]) {
                BufferPair state;
                state[ue] = level;
                state[other] = other_level;
                try {
                    const Selection sel = select(spm, state);
                    const std::pair<VocabId, VocabId> seen{sel.d[ue], sel.a[ue]};
                    if (!chain) {
                        chain = seen;
                    } else if (*chain != seen) {
                        constant = false;
                        break;
                    }
                } catch (const NoRuleError&) {
                    constant = false;
                    break;
                }
            }
            if (!constant || !chain) continue;

            const Clause* alpha = spm.find_uplink(ue, level);
            Clause delta;
            delta.kind = ClauseKind::GrantFree;
            delta.prob = 1.0;
            delta.head = chain->second;
            delta.tail = alpha->tail;  // the input vocabulary
            delta.ue = ue;
            delta.tail_ue = ue;
            deltas.push_back(delta);
        }
    }
    return deltas;
}

Spm strip_grant_free(Spm spm) {
    std::vector<Clause> kept;
    for (const Clause& c : spm.clauses)
        if (c.kind != ClauseKind::GrantFree) kept.push_back(c);
    spm.clauses = std::move(kept);
    return spm;
}

Spm augment_with_grant_free(Spm spm) {
    spm = strip_grant_free(std::move(spm));
    std::vector<Clause> deltas = detect_grant_free(spm);
    for (const Clause& d : deltas) spm.clauses.push_back(d);
    sort_clauses_canonically(spm, spm.clauses);
    return spm;
}

std::string inference_trace_to_csv(const std::vector<InferenceTraceRow>& rows) {
    std::ostringstream out;
    out << "cycle,b1,b2,u1,u2,d1,d2,a1,a2,d1_prob,d2_prob,a1_prob,a2_prob,"
           "gf1,gf2,fallback,sub1,sub2\n";
    for (const InferenceTraceRow& r : rows) {
        out << r.cycle << ',' << r.buffers[0] << ',' << r.buffers[1] << ',' << r.u[0]
            << ',' << r.u[1] << ',' << r.d[0] << ',' << r.d[1] << ',' << r.a[0] << ','
            << r.a[1] << ',' << format_double(r.d_prob[0]) << ','
            << format_double(r.d_prob[1]) << ',' << format_double(r.a_prob[0]) << ','
            << format_double(r.a_prob[1]) << ',' << r.grant_free[0] << ','
            << r.grant_free[1] << ',' << r.fallback << ',' << r.substituted[0] << ','
            << r.substituted[1] << '\n';
    }
    return out.str();
}

SpmPolicy::SpmPolicy(const Spm& spm, bool record_trace)
    : spm_(&spm), record_trace_(record_trace) {}

void SpmPolicy::begin_episode(const EnvConfig& config) {
    (void)config;
    cycle_ = 0;
}

ActionPair SpmPolicy::act(const EnvState& state, Rng& rng) {
    (void)rng;
    InferenceTraceRow row;
    row.cycle = cycle_++;
    row.buffers = state.buffers;
    stats_.cycles += 1;

    ActionPair actions{UeAction::Silence, UeAction::Silence};
    std::array<const Clause*, kNumUes> delta{nullptr, nullptr};
    for (int ue = 0; ue < kNumUes; ++ue)
        delta[ue] = spm_->find_grant_free(ue, state.buffers[ue]);

    bool resolved = true;
    Selection sel;
    if (!delta[0] || !delta[1]) {
        try {
            sel = select(*spm_, state.buffers);
        } catch (const NoRuleError&) {
            resolved = false;
        }
    }

    if (!resolved) {
        // Out-of-domain: both stay silent, even a UE that has a delta clause,
        // so delta precedence never changes behavior relative to plain select.
        row.fallback = true;
        stats_.fallbacks += 1;
    } else {
        bool any_grant_free = false;
        for (int ue = 0; ue < kNumUes; ++ue) {
            if (delta[ue]) {
                actions[ue] = spm_->vocab(delta[ue]->head).action;
                row.grant_free[ue] = true;
                row.u[ue] = spm_->vocab(spm_->find_uplink(ue, state.buffers[ue])->head).label;
                row.a[ue] = spm_->vocab(delta[ue]->head).label;
                row.a_prob[ue] = delta[ue]->prob;
                any_grant_free = true;
            } else {
                actions[ue] = sel.actions[ue];
                row.u[ue] = spm_->vocab(sel.u[ue]).label;
                row.d[ue] = spm_->vocab(sel.d[ue]).label;
                row.a[ue] = spm_->vocab(sel.a[ue]).label;
                row.d_prob[ue] = sel.d_prob[ue];
                row.a_prob[ue] = sel.a_prob[ue];
            }
        }
        if (any_grant_free) stats_.grant_free_cycles += 1;
    }

    for (int ue = 0; ue < kNumUes; ++ue) {
        if (actions[ue] != UeAction::Silence && state.buffers[ue] < 1) {
            actions[ue] = UeAction::Silence;
            row.substituted[ue] = true;
            stats_.substitutions += 1;
        }
    }
    if (record_trace_) trace_.push_back(std::move(row));
    return actions;
}

std::vector<PolicyMapRow> policy_map(const NPModel& model) {
    std::vector<PolicyMapRow> rows;
    for (int b1 = 0; b1 <= model.arch.b_max; ++b1) {
        for (int b2 = 0; b2 <= model.arch.b_max; ++b2) {
            const CycleForward fw = full_cycle_forward(model, {b1, b2});
            PolicyMapRow row;
            row.state = {b1, b2};
            row.actions = fw.actions;
            for (int ue = 0; ue < kNumUes; ++ue)
                row.access_metric[ue] = fw.q[ue][static_cast<int>(UeAction::Access)];
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<PolicyMapRow> policy_map(const Spm& spm, int b_max) {
    std::vector<PolicyMapRow> rows;
    for (int b1 = 0; b1 <= b_max; ++b1) {
        for (int b2 = 0; b2 <= b_max; ++b2) {
            PolicyMapRow row;
            row.state = {b1, b2};
            try {
                const Selection sel = select(spm, row.state);
                row.actions = sel.actions;
                for (int ue = 0; ue < kNumUes; ++ue)
                    row.access_metric[ue] =
                        action_truth_probability(spm, row.state, ue, UeAction::Access);
            } catch (const NoRuleError&) {
                row.resolved = false;  // policy falls back to silence here
                row.actions = {UeAction::Silence, UeAction::Silence};
            }
            rows.push_back(row);
        }
    }
    return rows;
}

double policy_agreement(const std::vector<PolicyMapRow>& a,
                        const std::vector<PolicyMapRow>& b) {
    if (a.size() != b.size() || a.empty())
        throw Error("policy_agreement: maps must cover the same grid");
    std::size_t agree = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k].state != b[k].state)
            throw Error("policy_agreement: grid order mismatch");
        if (a[k].actions == b[k].actions) ++agree;
    }
    return static_cast<double>(agree) / static_cast<double>(a.size());
}

std::string policy_map_to_csv(const std::vector<PolicyMapRow>& rows) {
    std::ostringstream out;
    out << "b1,b2,a1,a2,access_metric1,access_metric2,resolved\n";
    for (const PolicyMapRow& r : rows) {
        out << r.state[0] << ',' << r.state[1] << ',' << action_symbol(r.actions[0])
            << ',' << action_symbol(r.actions[1]) << ','
            << format_double(r.access_metric[0]) << ','
            << format_double(r.access_metric[1]) << ',' << r.resolved << '\n';
    }
    return out.str();
}

std::int64_t spm_inference_flops(const Spm& spm) {
    // Per UE: one uplink lookup, the candidate DCM products and comparisons,
    // then the action comparisons of the selected DCM's clause family.
    std::int64_t ops = 0;
    const auto levels = spm.level_sets();
    std::int64_t states = 0;
    for (const BufferPair& state : spm.domain()) {
        ++states;
        for (int ue = 0; ue < kNumUes; ++ue) {
            try {
                const TruthProbs probs = truth_probabilities(spm, state, ue);
                ops += 1;                                            // uplink lookup
                ops += 2 * static_cast<std::int64_t>(probs.dcm.size());  // product+compare
                ops += static_cast<std::int64_t>(probs.action.size());   // compare
            } catch (const NoRuleError&) {
            }
        }
    }
    return states ? ops / states : 0;
}

}  // namespace semproto
