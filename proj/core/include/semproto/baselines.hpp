#pragma once

#include "semproto/env.hpp"

namespace semproto {

/// Slotted ALOHA: a UE with a non-empty buffer accesses with probability p,
/// otherwise stays silent. Never discards.
class SlottedAlohaPolicy : public Policy {
public:
    explicit SlottedAlohaPolicy(double p);
    std::string name() const override { return "aloha"; }
    ActionPair act(const EnvState& state, Rng& rng) override;

private:
    double p_;
};

/// Slotted ALOHA with binary exponential backoff. The contention window
/// doubles (capped) after each collision the UE took part in, a uniform
/// backoff from [0, W-1] is drawn before the next attempt, and the window
/// resets on a successful delivery. Block-error NACKs do not grow the window.
class BebPolicy : public Policy {
public:
    explicit BebPolicy(int base = 2, int w_max = 16);
    std::string name() const override { return "beb"; }
    void begin_episode(const EnvConfig& config) override;
    ActionPair act(const EnvState& state, Rng& rng) override;
    void observe(const CycleOutcome& outcome) override;

    int window(int ue) const { return window_[ue]; }

private:
    int base_;
    int w_max_;
    std::array<int, kNumUes> window_{1, 1};
    std::array<int, kNumUes> backoff_{0, 0};
    std::array<bool, kNumUes> draw_pending_{false, false};
};

class AlwaysSilentPolicy : public Policy {
public:
    std::string name() const override { return "silent"; }
    ActionPair act(const EnvState&, Rng&) override {
        return {UeAction::Silence, UeAction::Silence};
    }
};

}  // namespace semproto
