#include "semproto/baselines.hpp"

#include <algorithm>

#include "semproto/errors.hpp"

namespace semproto {

SlottedAlohaPolicy::SlottedAlohaPolicy(double p) : p_(p) {
    if (p < 0.0 || p > 1.0) throw ConfigError("access probability must be in [0,1]");
}

ActionPair SlottedAlohaPolicy::act(const EnvState& state, Rng& rng) {
    ActionPair actions{UeAction::Silence, UeAction::Silence};
    for (int ue = 0; ue < kNumUes; ++ue) {
        if (state.buffers[ue] >= 1 && rng.bernoulli(p_))
            actions[ue] = UeAction::Access;
    }
    return actions;
}

BebPolicy::BebPolicy(int base, int w_max) : base_(base), w_max_(w_max) {
    if (base < 2) throw ConfigError("BEB base must be >= 2");
    if (w_max < 1) throw ConfigError("BEB window cap must be >= 1");
}

void BebPolicy::begin_episode(const EnvConfig& config) {
    (void)config;
    window_ = {1, 1};
    backoff_ = {0, 0};
    draw_pending_ = {false, false};
}

ActionPair BebPolicy::act(const EnvState& state, Rng& rng) {
    ActionPair actions{UeAction::Silence, UeAction::Silence};
    for (int ue = 0; ue < kNumUes; ++ue) {
        if (draw_pending_[ue]) {
            backoff_[ue] = rng.uniform_int(0, window_[ue] - 1);
            draw_pending_[ue] = false;
        }
        if (state.buffers[ue] < 1) continue;
        if (backoff_[ue] > 0) {
            backoff_[ue] -= 1;
            continue;
        }
        actions[ue] = UeAction::Access;
    }
    return actions;
}

void BebPolicy::observe(const CycleOutcome& outcome) {
    for (int ue = 0; ue < kNumUes; ++ue) {
        if (outcome.actions[ue] != UeAction::Access) continue;
        if (outcome.events.collision) {
            window_[ue] = std::min(window_[ue] * base_, w_max_);
            draw_pending_[ue] = true;
        } else if (outcome.observation.kind == BsObservation::Kind::Ack &&
                   outcome.observation.ue == ue) {
            window_[ue] = 1;
            backoff_[ue] = 0;
        }
        // Block-error NACKs leave the window alone: backoff reacts to the
        // adverse collision event only.
    }
}

}  // namespace semproto
