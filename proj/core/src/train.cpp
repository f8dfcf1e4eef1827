#include "semproto/train.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "semproto/errors.hpp"
#include "semproto/format.hpp"

namespace semproto {

void TrainConfig::validate() const {
    if (adam.learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("gamma must be in [0,1)");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (static_cast<std::size_t>(batch_size) > replay_capacity)
        throw ConfigError("batch_size must not exceed replay_capacity");
    if (total_episodes < 1) throw ConfigError("total_episodes must be >= 1");
    if (target_sync_interval < 1) throw ConfigError("target_sync_interval must be >= 1");
    if (train_every < 1) throw ConfigError("train_every must be >= 1");
    if (hidden_size < 1 || cm_size < 1) throw ConfigError("network widths must be >= 1");
    if (epsilon_decay_fraction <= 0.0 || epsilon_decay_fraction > 1.0)
        throw ConfigError("epsilon_decay_fraction must be in (0,1]");
}

TrainConfig TrainConfig::from_config(const KeyValueConfig& cfg) {
    TrainConfig tc;
    tc.adam.learning_rate = cfg.get_double("learning_rate", tc.adam.learning_rate);
    tc.adam.beta1 = cfg.get_double("adam_beta1", tc.adam.beta1);
    tc.adam.beta2 = cfg.get_double("adam_beta2", tc.adam.beta2);
    tc.adam.eps = cfg.get_double("adam_eps", tc.adam.eps);
    tc.gamma = cfg.get_double("gamma", tc.gamma);
    tc.replay_capacity =
        static_cast<std::size_t>(cfg.get_int64("replay_capacity",
                                               static_cast<std::int64_t>(tc.replay_capacity)));
    tc.batch_size = cfg.get_int("batch_size", tc.batch_size);
    tc.replay_warmup = cfg.get_int("replay_warmup", tc.replay_warmup);
    tc.target_sync_interval = cfg.get_int("target_sync_interval", tc.target_sync_interval);
    tc.total_episodes = cfg.get_int("total_episodes", tc.total_episodes);
    tc.train_every = cfg.get_int("train_every", tc.train_every);
    tc.epsilon_start = cfg.get_double("epsilon_start", tc.epsilon_start);
    tc.epsilon_end = cfg.get_double("epsilon_end", tc.epsilon_end);
    tc.epsilon_decay_fraction =
        cfg.get_double("epsilon_decay_fraction", tc.epsilon_decay_fraction);
    tc.huber_delta = cfg.get_double("huber_delta", tc.huber_delta);
    tc.hidden_size = cfg.get_int("hidden_size", tc.hidden_size);
    tc.cm_size = cfg.get_int("cm_size", tc.cm_size);
    tc.validate();
    return tc;
}

double TrainConfig::epsilon_at(int episode) const {
    const double horizon = epsilon_decay_fraction * total_episodes;
    const double frac = std::min(1.0, episode / std::max(1.0, horizon));
    return epsilon_start + (epsilon_end - epsilon_start) * frac;
}

namespace {

/// Forward/backward plumbing for one composite model instance.
struct SegmentSet {
    std::array<MlpSegment, kNumUes>* ucm;
    std::array<MlpSegment, kNumUes>* dcm;
    std::array<MlpSegment, kNumUes>* action;
};

struct CycleCache {
    std::array<MlpSegment::Cache, kNumUes> ucm, dcm, action;
    std::array<std::vector<double>, kNumUes> u, d;
    std::array<std::array<double, 3>, kNumUes> q;
};

CycleCache forward_all(const NPModel& model, const std::array<int, kNumUes>& buffers) {
    CycleCache c;
    for (int ue = 0; ue < kNumUes; ++ue) {
        c.u[ue] = model.ucm_seg[ue].forward_cached(
            encode_buffer_level(buffers[ue], model.arch.b_max), c.ucm[ue]);
    }
    std::vector<double> concat;
    concat.reserve(2 * model.arch.cm_size);
    concat.insert(concat.end(), c.u[0].begin(), c.u[0].end());
    concat.insert(concat.end(), c.u[1].begin(), c.u[1].end());
    for (int ue = 0; ue < kNumUes; ++ue) {
        c.d[ue] = model.dcm_seg[ue].forward_cached(concat, c.dcm[ue]);
        const std::vector<double> q = model.action_seg[ue].forward_cached(c.d[ue], c.action[ue]);
        for (int a = 0; a < 3; ++a) c.q[ue][a] = q[a];
    }
    return c;
}

std::array<double, kNumUes> target_max_q(const NPModel::TrainingState& tr,
                                         const NpmArchitecture& arch,
                                         const std::array<int, kNumUes>& buffers) {
    std::array<std::vector<double>, kNumUes> u;
    for (int ue = 0; ue < kNumUes; ++ue)
        u[ue] = tr.target_ucm[ue].forward(encode_buffer_level(buffers[ue], arch.b_max));
    std::vector<double> concat;
    concat.reserve(2 * arch.cm_size);
    concat.insert(concat.end(), u[0].begin(), u[0].end());
    concat.insert(concat.end(), u[1].begin(), u[1].end());
    std::array<double, kNumUes> out{};
    for (int ue = 0; ue < kNumUes; ++ue) {
        const std::vector<double> d = tr.target_dcm[ue].forward(concat);
        const std::vector<double> q = tr.target_action[ue].forward(d);
        out[ue] = *std::max_element(q.begin(), q.end());
    }
    return out;
}

struct GradSet {
    std::array<MlpGrads, kNumUes> ucm, dcm, action;

    static GradSet zeros_like(const NPModel& model) {
        GradSet g;
        for (int ue = 0; ue < kNumUes; ++ue) {
            g.ucm[ue] = MlpGrads::zeros_like(model.ucm_seg[ue]);
            g.dcm[ue] = MlpGrads::zeros_like(model.dcm_seg[ue]);
            g.action[ue] = MlpGrads::zeros_like(model.action_seg[ue]);
        }
        return g;
    }

    void zero() {
        for (int ue = 0; ue < kNumUes; ++ue) {
            ucm[ue].zero();
            dcm[ue].zero();
            action[ue].zero();
        }
    }
};

void sync_target(NPModel& model) {
    auto& tr = *model.training;
    for (int ue = 0; ue < kNumUes; ++ue) {
        tr.target_ucm[ue] = model.ucm_seg[ue];
        tr.target_dcm[ue] = model.dcm_seg[ue];
        tr.target_action[ue] = model.action_seg[ue];
    }
}

}  // namespace

TrainResult train_npm(const EnvConfig& env_config, const TrainConfig& train_config,
                      Rng& rng) {
    train_config.validate();
    NpmArchitecture arch;
    arch.b_max = env_config.b_max;
    arch.hidden = train_config.hidden_size;
    arch.cm_size = train_config.cm_size;
    return resume_training(NPModel::make(arch, rng), env_config, train_config, rng);
}

TrainResult resume_training(NPModel model, const EnvConfig& env_config,
                            const TrainConfig& train_config, Rng& rng) {
    env_config.validate();
    train_config.validate();
    if (env_config.b_max != model.arch.b_max)
        throw ConfigError("environment b_max disagrees with the model architecture");
    const NpmArchitecture arch = model.arch;

    if (!model.training) {
        NPModel::TrainingState tr;
        for (int ue = 0; ue < kNumUes; ++ue) {
            tr.adam_ucm[ue] = AdamState::zeros_like(model.ucm_seg[ue]);
            tr.adam_dcm[ue] = AdamState::zeros_like(model.dcm_seg[ue]);
            tr.adam_action[ue] = AdamState::zeros_like(model.action_seg[ue]);
        }
        model.training = std::move(tr);
        sync_target(model);
    }

    EpisodicMemory memory(train_config.replay_capacity);
    GradSet grads = GradSet::zeros_like(model);
    std::vector<EpisodeMetrics> metrics;
    metrics.reserve(train_config.total_episodes);

    const std::size_t warmup = std::max<std::size_t>(
        static_cast<std::size_t>(train_config.batch_size),
        static_cast<std::size_t>(std::max(0, train_config.replay_warmup)));
    std::int64_t global_step = model.training->global_step;

    for (int episode = 0; episode < train_config.total_episodes; ++episode) {
        const double epsilon = train_config.epsilon_at(episode);
        EnvState state;
        double reward_sum = 0.0;
        double loss_sum = 0.0;
        int loss_count = 0;
        int acks = 0;

        for (int t = 0; t < env_config.t_max; ++t) {
            const ArrivalResult arr = apply_arrivals(state, env_config, rng);
            state = arr.state;

            const CycleForward fw = full_cycle_forward(model, state.buffers);
            ActionPair chosen = fw.actions;
            for (int ue = 0; ue < kNumUes; ++ue) {
                if (rng.bernoulli(epsilon))
                    chosen[ue] = static_cast<UeAction>(rng.uniform_int(0, 2));
            }

            // Invalid choices execute as Silence; the chosen action is still
            // what the TD update credits, so its Q-value learns the no-op.
            ActionPair applied = chosen;
            for (int ue = 0; ue < kNumUes; ++ue) {
                if (applied[ue] != UeAction::Silence && state.buffers[ue] < 1)
                    applied[ue] = UeAction::Silence;
            }
            const CycleOutcome outcome = resolve_cycle(state, applied, env_config, rng);
            if (outcome.observation.kind == BsObservation::Kind::Ack) ++acks;
            reward_sum += outcome.reward;

            Transition record;
            record.b = state.buffers;
            record.b_next = outcome.next_state.buffers;
            record.u = fw.u;
            record.d = fw.d;
            record.q = fw.q;
            record.actions = chosen;
            record.reward = outcome.reward;
            record.terminal = (t + 1 == env_config.t_max);
            memory.push(std::move(record));

            state = outcome.next_state;
            ++global_step;

            if (memory.size() >= warmup &&
                global_step % train_config.train_every == 0) {
                grads.zero();
                double batch_loss = 0.0;
                for (int n = 0; n < train_config.batch_size; ++n) {
                    const std::size_t idx =
                        static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(memory.size()) - 1));
                    const Transition& sample = memory.at(idx);

                    CycleCache cache = forward_all(model, sample.b);
                    const std::array<double, kNumUes> next_max =
                        target_max_q(*model.training, arch, sample.b_next);

                    std::array<std::vector<double>, kNumUes> grad_d;
                    std::vector<double> grad_concat(2 * arch.cm_size, 0.0);
                    for (int ue = 0; ue < kNumUes; ++ue) {
                        const int a = static_cast<int>(sample.actions[ue]);
                        const double target =
                            sample.terminal
                                ? sample.reward
                                : sample.reward + train_config.gamma * next_max[ue];
                        const double residual = cache.q[ue][a] - target;
                        batch_loss += huber(residual, train_config.huber_delta);

                        std::array<double, 3> grad_q{0.0, 0.0, 0.0};
                        grad_q[a] = huber_grad(residual, train_config.huber_delta) /
                                    train_config.batch_size;
                        grad_d[ue] = mlp_backward(model.action_seg[ue], cache.action[ue],
                                                  grad_q, grads.action[ue]);
                        const std::vector<double> gc = mlp_backward(
                            model.dcm_seg[ue], cache.dcm[ue], grad_d[ue], grads.dcm[ue]);
                        for (int k = 0; k < 2 * arch.cm_size; ++k) grad_concat[k] += gc[k];
                    }
                    for (int ue = 0; ue < kNumUes; ++ue) {
                        const std::span<const double> slice(
                            grad_concat.data() + ue * arch.cm_size,
                            static_cast<std::size_t>(arch.cm_size));
                        mlp_backward(model.ucm_seg[ue], cache.ucm[ue], slice, grads.ucm[ue]);
                    }
                }
                if (!std::isfinite(batch_loss)) {
                    throw TrainingDiverged("loss became non-finite at step " +
                                           std::to_string(global_step));
                }
                loss_sum += batch_loss / train_config.batch_size;
                ++loss_count;

                auto& ts = *model.training;
                for (int ue = 0; ue < kNumUes; ++ue) {
                    adam_step(model.ucm_seg[ue], grads.ucm[ue], ts.adam_ucm[ue],
                              train_config.adam);
                    adam_step(model.dcm_seg[ue], grads.dcm[ue], ts.adam_dcm[ue],
                              train_config.adam);
                    adam_step(model.action_seg[ue], grads.action[ue], ts.adam_action[ue],
                              train_config.adam);
                }
            }

            if (global_step % train_config.target_sync_interval == 0) sync_target(model);
        }

        EpisodeMetrics em;
        em.episode = episode;
        em.epsilon = epsilon;
        em.mean_loss = loss_count ? loss_sum / loss_count : 0.0;
        em.mean_reward = reward_sum / env_config.t_max;
        em.goodput = static_cast<double>(acks) / env_config.t_max;
        metrics.push_back(em);
    }

    model.training->global_step = global_step;
    return TrainResult{std::move(model), std::move(memory), std::move(metrics)};
}

EpisodicMemory collect_memory(const NPModel& model, const EnvConfig& env_config,
                              int episodes, Rng& rng) {
    EpisodicMemory memory(static_cast<std::size_t>(
        std::max(1, episodes * env_config.t_max)));
    for (int ep = 0; ep < episodes; ++ep) {
        EnvState state;
        for (int t = 0; t < env_config.t_max; ++t) {
            const ArrivalResult arr = apply_arrivals(state, env_config, rng);
            state = arr.state;
            const CycleForward fw = full_cycle_forward(model, state.buffers);
            ActionPair applied = fw.actions;
            for (int ue = 0; ue < kNumUes; ++ue) {
                if (applied[ue] != UeAction::Silence && state.buffers[ue] < 1)
                    applied[ue] = UeAction::Silence;
            }
            const CycleOutcome outcome = resolve_cycle(state, applied, env_config, rng);

            Transition record;
            record.b = state.buffers;
            record.b_next = outcome.next_state.buffers;
            record.u = fw.u;
            record.d = fw.d;
            record.q = fw.q;
            record.actions = fw.actions;
            record.reward = outcome.reward;
            record.terminal = (t + 1 == env_config.t_max);
            memory.push(std::move(record));
            state = outcome.next_state;
        }
    }
    return memory;
}

std::string metrics_to_csv(const std::vector<EpisodeMetrics>& metrics) {
    std::ostringstream out;
    out << "episode,epsilon,loss,mean_reward,goodput\n";
    for (const EpisodeMetrics& m : metrics) {
        out << m.episode << ',' << format_double(m.epsilon) << ','
            << format_double(m.mean_loss) << ',' << format_double(m.mean_reward) << ','
            << format_double(m.goodput) << '\n';
    }
    return out.str();
}

}  // namespace semproto
