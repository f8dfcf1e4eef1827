#include "semproto/env.hpp"

#include <sstream>

#include "semproto/errors.hpp"
#include "semproto/format.hpp"

namespace semproto {

void EnvConfig::validate() const {
    for (int i = 0; i < kNumUes; ++i) {
        if (lambda[i] < 0.0 || lambda[i] > 1.0)
            throw ConfigError("lambda must be in [0,1]");
    }
    if (eps_block < 0.0 || eps_block > 1.0) throw ConfigError("eps_block must be in [0,1]");
    if (b_max < 1) throw ConfigError("b_max must be >= 1");
    if (t_max < 1) throw ConfigError("t_max must be >= 1");
    if (d_max < 1) throw ConfigError("d_max must be >= 1");
    if (rho1 <= 0.0 || rho2 <= 0.0) throw ConfigError("rho1/rho2 must be positive");
}

EnvConfig EnvConfig::from_config(const KeyValueConfig& cfg) {
    EnvConfig env;
    const auto lambda = cfg.get_double_list("lambda", {env.lambda[0], env.lambda[1]});
    if (lambda.size() != kNumUes)
        throw ConfigError("lambda must list exactly 2 rates");
    env.lambda = {lambda[0], lambda[1]};
    env.b_max = cfg.get_int("b_max", env.b_max);
    env.d_max = cfg.get_int("d_max", env.d_max);
    env.rho1 = cfg.get_double("rho1", env.rho1);
    env.rho2 = cfg.get_double("rho2", env.rho2);
    env.t_max = cfg.get_int("t_max", env.t_max);
    env.eps_block = cfg.get_double("eps_block", env.eps_block);
    env.seed = cfg.get_uint64("seed", env.seed);
    env.validate();
    return env;
}

char action_symbol(UeAction a) {
    switch (a) {
        case UeAction::Silence: return 'S';
        case UeAction::Access: return 'A';
        case UeAction::Discard: return 'D';
    }
    return '?';
}

UeAction action_from_symbol(char c) {
    switch (c) {
        case 'S': return UeAction::Silence;
        case 'A': return UeAction::Access;
        case 'D': return UeAction::Discard;
    }
    throw ConfigError(std::string("unknown action symbol: ") + c);
}

std::string BsObservation::label() const {
    switch (kind) {
        case Kind::Idle: return "idle";
        case Kind::Ack: return "ack" + std::to_string(ue + 1);
        case Kind::Nack: return "nack";
    }
    return "?";
}

ArrivalResult apply_arrivals(const EnvState& state, const EnvConfig& config, Rng& rng) {
    ArrivalResult result;
    result.state = state;
    for (int i = 0; i < kNumUes; ++i) {
        if (state.arrived_total[i] >= config.d_max) continue;
        if (!rng.bernoulli(config.lambda[i])) continue;
        result.arrived[i] = true;
        result.state.arrived_total[i] += 1;
        if (result.state.buffers[i] >= config.b_max) {
            result.dropped[i] = true;  // buffer full, SDU lost without penalty
        } else {
            result.state.buffers[i] += 1;
        }
    }
    return result;
}

CycleOutcome resolve_cycle(const EnvState& state, const ActionPair& actions,
                           const EnvConfig& config, Rng& rng) {
    for (int i = 0; i < kNumUes; ++i) {
        if (actions[i] != UeAction::Silence && state.buffers[i] < 1) {
            throw InvalidActionError("UE " + std::to_string(i + 1) + " chose " +
                                     action_symbol(actions[i]) +
                                     std::string(" with an empty buffer"));
        }
    }

    CycleOutcome out;
    out.actions = actions;
    out.next_state = state;

    int accesses = 0;
    int solo_ue = -1;
    for (int i = 0; i < kNumUes; ++i) {
        if (actions[i] == UeAction::Access) {
            ++accesses;
            solo_ue = i;
            out.next_state.buffers[i] -= 1;  // SDU leaves the buffer either way
        } else if (actions[i] == UeAction::Discard) {
            out.next_state.buffers[i] -= 1;
            out.events.discards += 1;
        }
    }

    if (accesses == 0) {
        out.observation = BsObservation::idle();
    } else if (accesses == 1) {
        // Collisions are already lost; only solo accesses see the channel.
        if (rng.bernoulli(config.eps_block)) {
            out.events.block_error = true;
            out.observation = BsObservation::nack();
        } else {
            out.observation = BsObservation::ack(solo_ue);
        }
    } else {
        out.events.collision = true;
        out.observation = BsObservation::nack();
    }

    const bool acked = out.observation.kind == BsObservation::Kind::Ack;
    out.reward = (acked ? config.rho1 : 0.0) - config.rho2 * out.events.discards;
    if (!acked && out.events.discards == 0) out.reward = -1.0;

    out.next_state.cycle = state.cycle + 1;
    return out;
}

EpisodeResult run_episode(Policy& policy, const EnvConfig& config, Rng& rng) {
    EpisodeResult result;
    result.kpi.t_max = config.t_max;
    result.trace.reserve(config.t_max);
    policy.begin_episode(config);

    EnvState state;
    double reward_sum = 0.0;
    for (int t = 0; t < config.t_max; ++t) {
        const ArrivalResult arr = apply_arrivals(state, config, rng);
        for (int i = 0; i < kNumUes; ++i) {
            if (arr.arrived[i]) result.kpi.arrivals[i] += 1;
            if (arr.dropped[i]) {
                result.kpi.dropped[i] += 1;
                result.kpi.overflow_drops += 1;
            }
        }
        state = arr.state;

        ActionPair actions = policy.act(state, rng);
        CycleEvents substitution;
        for (int i = 0; i < kNumUes; ++i) {
            if (actions[i] != UeAction::Silence && state.buffers[i] < 1) {
                actions[i] = UeAction::Silence;
                substitution.invalid_substituted[i] = true;
                result.kpi.invalid_actions += 1;
            }
        }

        CycleOutcome outcome = resolve_cycle(state, actions, config, rng);
        outcome.events.invalid_substituted = substitution.invalid_substituted;
        policy.observe(outcome);

        if (outcome.observation.kind == BsObservation::Kind::Ack) {
            result.kpi.n_r += 1;
            result.kpi.sent[outcome.observation.ue] += 1;
        }
        if (outcome.events.collision) {
            result.kpi.n_c += 1;
            for (int i = 0; i < kNumUes; ++i)
                if (actions[i] == UeAction::Access) result.kpi.sent[i] += 1;
        }
        if (outcome.events.block_error) {
            result.kpi.block_errors += 1;
            for (int i = 0; i < kNumUes; ++i)
                if (actions[i] == UeAction::Access) result.kpi.sent[i] += 1;
        }
        for (int i = 0; i < kNumUes; ++i) {
            if (actions[i] == UeAction::Discard) {
                result.kpi.n_d += 1;
                result.kpi.discarded[i] += 1;
            }
        }
        reward_sum += outcome.reward;

        result.trace.push_back(TraceRow{t, state.buffers, actions,
                                        outcome.observation, outcome.reward});
        state = outcome.next_state;
    }

    result.kpi.goodput = static_cast<double>(result.kpi.n_r) / config.t_max;
    result.kpi.mean_reward = reward_sum / config.t_max;
    return result;
}

std::string trace_to_csv(const std::vector<TraceRow>& trace) {
    std::ostringstream out;
    out << "cycle,b1,b2,a1,a2,obs,reward\n";
    for (const TraceRow& row : trace) {
        out << row.cycle << ',' << row.buffers[0] << ',' << row.buffers[1] << ','
            << action_symbol(row.actions[0]) << ',' << action_symbol(row.actions[1])
            << ',' << row.observation.label() << ',' << format_double(row.reward)
            << '\n';
    }
    return out.str();
}

}  // namespace semproto
