#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "semproto/env.hpp"
#include "semproto/mlp.hpp"

namespace semproto {

/// Shapes of the six segments. One hidden width for all segments, two hidden
/// layers each, CM width for both UCM and DCM outputs. The buffer level
/// enters as a scalar in [0,1]: rectifier units then fire above per-unit
/// level thresholds, which keeps activation patterns ordered by buffer
/// occupancy instead of scattering them per level.
struct NpmArchitecture {
    int b_max = 5;
    int hidden = 16;
    int cm_size = 8;

    int input_width() const { return 1; }
    bool operator==(const NpmArchitecture&) const = default;
};

/// Scalar encoding of a buffer level; throws on out-of-range levels.
std::vector<double> encode_buffer_level(int level, int b_max);

/// Neural protocol model. Per UE: an uplink segment (buffer -> UCM), a
/// downlink segment at the BS ([u1,u2] -> DCM) and an action segment
/// (DCM -> Q-values for S, A, D). Training state (target network + Adam
/// moments) travels with the model so a checkpoint can resume training.
struct NPModel {
    NpmArchitecture arch;
    std::array<MlpSegment, kNumUes> ucm_seg;
    std::array<MlpSegment, kNumUes> dcm_seg;
    std::array<MlpSegment, kNumUes> action_seg;

    struct TrainingState {
        std::array<MlpSegment, kNumUes> target_ucm, target_dcm, target_action;
        std::array<AdamState, kNumUes> adam_ucm, adam_dcm, adam_action;
        std::int64_t global_step = 0;
    };
    std::optional<TrainingState> training;

    static NPModel make(const NpmArchitecture& arch, Rng& rng);
    std::size_t param_count() const;  // online segments only
    /// 2 * multiply-accumulates of one full-cycle forward (both UEs).
    std::int64_t forward_flops() const;
};

std::vector<double> one_hot(int value, int width);

std::vector<double> forward_ucm(const NPModel& model, int ue, int buffer_level);
std::vector<double> forward_dcm(const NPModel& model, int ue,
                                std::span<const double> u1, std::span<const double> u2);

struct ActionDecision {
    std::array<double, 3> q_values{0, 0, 0};
    UeAction action = UeAction::Silence;
};
ActionDecision forward_action(const NPModel& model, int ue, std::span<const double> dcm);

/// Argmax with the fixed tie-break order S < A < D.
UeAction argmax_action(const std::array<double, 3>& q);

struct CycleForward {
    std::array<std::vector<double>, kNumUes> u;
    std::array<std::vector<double>, kNumUes> d;
    std::array<std::array<double, 3>, kNumUes> q;
    ActionPair actions;
};

/// One communication cycle of the NPM: UCMs, DCMs, Q-values, greedy actions.
CycleForward full_cycle_forward(const NPModel& model, const std::array<int, kNumUes>& buffers);

void save_npm(const NPModel& model, std::ostream& out);
void save_npm(const NPModel& model, const std::string& path);
std::vector<unsigned char> save_npm_bytes(const NPModel& model);
NPModel load_npm(std::istream& in);
NPModel load_npm(const std::string& path);

/// FNV-1a over the serialized bytes; used as SPM provenance.
std::string npm_content_hash(const NPModel& model);

/// Greedy evaluation policy over a trained model; invalid actions are left to
/// the episode runner's substitution.
class NpmPolicy : public Policy {
public:
    explicit NpmPolicy(const NPModel& model) : model_(&model) {}
    std::string name() const override { return "npm"; }
    ActionPair act(const EnvState& state, Rng& rng) override;

private:
    const NPModel* model_;
};

}  // namespace semproto
