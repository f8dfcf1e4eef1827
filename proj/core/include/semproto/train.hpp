#pragma once

#include <string>
#include <vector>

#include "semproto/config.hpp"
#include "semproto/env.hpp"
#include "semproto/npm.hpp"
#include "semproto/replay.hpp"

namespace semproto {

struct TrainConfig {
    AdamParams adam;                 // lr 1e-4, betas 0.9/0.999, eps 1e-7
    double gamma = 0.9;              // discount
    std::size_t replay_capacity = 10000;
    int batch_size = 32;
    int replay_warmup = 500;         // transitions before learning starts
    int target_sync_interval = 200;  // environment steps between target syncs
    int total_episodes = 3000;
    int train_every = 1;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay_fraction = 0.6;  // share of episodes for the linear decay
    double huber_delta = 1.0;
    int hidden_size = 16;
    int cm_size = 8;

    void validate() const;
    static TrainConfig from_config(const KeyValueConfig& cfg);
    double epsilon_at(int episode) const;
};

struct EpisodeMetrics {
    int episode = 0;
    double epsilon = 0.0;
    double mean_loss = 0.0;
    double mean_reward = 0.0;
    double goodput = 0.0;
};

struct TrainResult {
    NPModel model;
    EpisodicMemory memory;
    std::vector<EpisodeMetrics> metrics;
};

/// DQN with centralized training: epsilon-greedy rollouts through the MAC
/// environment, a shared reward, summed per-UE Huber TD errors backpropagated
/// through all six segments, Adam updates and a periodically synced target
/// network. Throws TrainingDiverged if the loss goes non-finite.
TrainResult train_npm(const EnvConfig& env_config, const TrainConfig& train_config,
                      Rng& rng);

/// Continues training from an existing checkpoint (continual-learning
/// baseline). Optimizer moments and the target network resume when present,
/// otherwise they are freshly initialized from the model.
TrainResult resume_training(NPModel model, const EnvConfig& env_config,
                            const TrainConfig& train_config, Rng& rng);

/// Greedy rollouts to (re)build an episodic memory when none was kept.
EpisodicMemory collect_memory(const NPModel& model, const EnvConfig& env_config,
                              int episodes, Rng& rng);

std::string metrics_to_csv(const std::vector<EpisodeMetrics>& metrics);

}  // namespace semproto
