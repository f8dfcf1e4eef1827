#pragma once

#include <optional>
#include <string>
#include <vector>

#include "semproto/spm.hpp"

namespace semproto {

/// Truth probabilities for one UE at a buffer state: the (always certain)
/// UCM, every candidate DCM as the product of the two downlink clauses that
/// imply it, and the action clauses from the max-probability DCM.
struct TruthProbs {
    VocabId ucm = -1;
    double ucm_prob = 1.0;
    std::vector<std::pair<VocabId, double>> dcm;     // candidates with product probs
    VocabId selected_dcm = -1;
    double selected_dcm_prob = 0.0;
    std::vector<std::pair<VocabId, double>> action;  // from the selected DCM
};

/// Throws NoRuleError when the state cannot be resolved for this UE
/// (missing uplink clause or no DCM implied by both UCMs).
TruthProbs truth_probabilities(const Spm& spm, const BufferPair& state, int ue);

/// Probability of a specific action under the selected chain; 0 when the
/// action has no clause from the selected DCM.
double action_truth_probability(const Spm& spm, const BufferPair& state, int ue,
                                UeAction action);

struct Selection {
    std::array<VocabId, kNumUes> u{-1, -1};
    std::array<VocabId, kNumUes> d{-1, -1};
    std::array<VocabId, kNumUes> a{-1, -1};
    ActionPair actions{UeAction::Silence, UeAction::Silence};
    std::array<double, kNumUes> d_prob{0.0, 0.0};
    std::array<double, kNumUes> a_prob{0.0, 0.0};
};

/// Deterministic max-truth-probability operation for both UEs; ties break
/// toward the lower vocabulary id. Ignores grant-free clauses.
Selection select(const Spm& spm, const BufferPair& state);

/// Grant-free (delta) clauses: for every UE i and level b_i whose selected
/// chain (DCM and action) is the same for all levels of the other UE, a
/// direct <1 :: a_i :- b_i> shortcut.
std::vector<Clause> detect_grant_free(const Spm& spm);

/// Appends delta clauses and re-sorts; replaces any previous delta set.
Spm augment_with_grant_free(Spm spm);
Spm strip_grant_free(Spm spm);

struct InferenceTraceRow {
    int cycle = 0;
    BufferPair buffers{0, 0};
    std::array<std::string, kNumUes> u, d, a;  // labels; d empty under grant-free
    std::array<double, kNumUes> d_prob{0.0, 0.0};
    std::array<double, kNumUes> a_prob{0.0, 0.0};
    std::array<bool, kNumUes> grant_free{false, false};
    bool fallback = false;
    std::array<bool, kNumUes> substituted{false, false};
};

std::string inference_trace_to_csv(const std::vector<InferenceTraceRow>& rows);

/// Executes an SPM as a protocol: delta clauses take precedence, unresolvable
/// states fall back to Silence for both UEs, Access/Discard with an empty
/// buffer is substituted by Silence. All three events are counted.
class SpmPolicy : public Policy {
public:
    explicit SpmPolicy(const Spm& spm, bool record_trace = false);

    std::string name() const override { return "spm"; }
    void begin_episode(const EnvConfig& config) override;
    ActionPair act(const EnvState& state, Rng& rng) override;

    struct Stats {
        std::int64_t cycles = 0;
        std::int64_t fallbacks = 0;
        std::int64_t grant_free_cycles = 0;  // cycles where some UE used delta
        std::int64_t substitutions = 0;
    };
    const Stats& stats() const { return stats_; }
    const std::vector<InferenceTraceRow>& trace() const { return trace_; }
    void clear_trace() { trace_.clear(); }

private:
    const Spm* spm_;
    bool record_trace_;
    int cycle_ = 0;
    Stats stats_;
    std::vector<InferenceTraceRow> trace_;
};

/// Static per-state view of a policy over the full grid; used for policy maps
/// and NPM/SPM agreement measurements.
struct PolicyMapRow {
    BufferPair state{0, 0};
    ActionPair actions{UeAction::Silence, UeAction::Silence};
    std::array<double, kNumUes> access_metric{0.0, 0.0};  // Q(A) or Pr(a^A)
    bool resolved = true;
};

std::vector<PolicyMapRow> policy_map(const NPModel& model);
std::vector<PolicyMapRow> policy_map(const Spm& spm, int b_max);
/// Share of grid states whose action pairs agree.
double policy_agreement(const std::vector<PolicyMapRow>& a,
                        const std::vector<PolicyMapRow>& b);
std::string policy_map_to_csv(const std::vector<PolicyMapRow>& rows);

/// Clause lookups plus comparisons on one full-cycle selection; the SPM
/// counterpart of NPModel::forward_flops for the KPI table.
std::int64_t spm_inference_flops(const Spm& spm);

}  // namespace semproto
