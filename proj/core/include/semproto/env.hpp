#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "semproto/config.hpp"
#include "semproto/rng.hpp"

namespace semproto {

inline constexpr int kNumUes = 2;

/// Two UEs contending for one channel: arrival rates, buffer and episode
/// limits, rewards, block error rate.
struct EnvConfig {
    std::array<double, kNumUes> lambda{0.5, 0.5};  // arrival probability per cycle
    int b_max = 5;                                 // buffer capacity
    int d_max = 12;                                // per-episode arrival cap per UE
    double rho1 = 5.0;                             // success reward
    double rho2 = 5.0;                             // discard penalty
    int t_max = 24;                                // cycles per episode
    double eps_block = 0.02;                       // solo-access block error rate
    std::uint64_t seed = 1;

    void validate() const;
    static EnvConfig from_config(const KeyValueConfig& cfg);
};

struct EnvState {
    std::array<int, kNumUes> buffers{0, 0};
    std::array<int, kNumUes> arrived_total{0, 0};
    int cycle = 0;
};

enum class UeAction : int { Silence = 0, Access = 1, Discard = 2 };

using ActionPair = std::array<UeAction, kNumUes>;

char action_symbol(UeAction a);
UeAction action_from_symbol(char c);

struct BsObservation {
    enum class Kind { Idle, Ack, Nack };
    Kind kind = Kind::Idle;
    int ue = -1;  // receiving UE when kind == Ack

    static BsObservation idle() { return {Kind::Idle, -1}; }
    static BsObservation ack(int ue) { return {Kind::Ack, ue}; }
    static BsObservation nack() { return {Kind::Nack, -1}; }

    bool operator==(const BsObservation&) const = default;
    std::string label() const;
};

struct CycleEvents {
    bool collision = false;
    bool block_error = false;
    int discards = 0;
    int overflow_drops = 0;
    std::array<bool, kNumUes> invalid_substituted{false, false};
};

struct CycleOutcome {
    BsObservation observation;
    double reward = 0.0;
    EnvState next_state;
    CycleEvents events;
    ActionPair actions{UeAction::Silence, UeAction::Silence};  // as applied
};

struct ArrivalResult {
    EnvState state;
    std::array<bool, kNumUes> arrived{false, false};
    std::array<bool, kNumUes> dropped{false, false};  // arrival hit a full buffer
};

/// SDU arrivals immediately before a cycle: one Bernoulli(lambda_i) draw per
/// UE still below its d_max cap; a full buffer drops the SDU without penalty.
ArrivalResult apply_arrivals(const EnvState& state, const EnvConfig& config, Rng& rng);

/// Contention resolution for one cycle. Throws InvalidActionError when a UE
/// picks Access or Discard with an empty buffer; callers running learned
/// policies are expected to sanitize first (see run_episode).
CycleOutcome resolve_cycle(const EnvState& state, const ActionPair& actions,
                           const EnvConfig& config, Rng& rng);

/// Per-episode counters. Model-level fields (model_bytes, cm_bits,
/// inference_flops) are filled by the harness, not the environment.
struct KpiReport {
    int t_max = 0;
    int n_r = 0;  // acked SDUs
    int n_c = 0;  // collisions
    int n_d = 0;  // discards
    double goodput = 0.0;
    double mean_reward = 0.0;
    int block_errors = 0;
    int overflow_drops = 0;
    int invalid_actions = 0;
    std::array<int, kNumUes> arrivals{0, 0};
    std::array<int, kNumUes> sent{0, 0};
    std::array<int, kNumUes> discarded{0, 0};
    std::array<int, kNumUes> dropped{0, 0};
    // harness-filled
    std::int64_t model_bytes = 0;
    int cm_bits = 0;
    std::int64_t inference_flops = 0;
};

struct TraceRow {
    int cycle = 0;
    std::array<int, kNumUes> buffers{0, 0};  // post-arrival, what the policy saw
    ActionPair actions{UeAction::Silence, UeAction::Silence};
    BsObservation observation;
    double reward = 0.0;
};

/// A protocol under test. `act` sees the post-arrival state; `observe` is
/// called with the full outcome (baselines use the collision flag, learned
/// policies should only look at the BsObservation).
class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    virtual void begin_episode(const EnvConfig& config) { (void)config; }
    virtual ActionPair act(const EnvState& state, Rng& rng) = 0;
    virtual void observe(const CycleOutcome& outcome) { (void)outcome; }
};

struct EpisodeResult {
    std::vector<TraceRow> trace;
    KpiReport kpi;
};

/// Runs one t_max-cycle episode: arrivals -> policy -> resolve. Invalid
/// Access/Discard choices are mapped to Silence and counted in the report.
EpisodeResult run_episode(Policy& policy, const EnvConfig& config, Rng& rng);

/// Trace CSV with columns cycle,b1,b2,a1,a2,obs,reward.
std::string trace_to_csv(const std::vector<TraceRow>& trace);

}  // namespace semproto
