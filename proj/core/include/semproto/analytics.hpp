#pragma once

#include <string>
#include <vector>

#include "semproto/inference.hpp"
#include "semproto/spm.hpp"

namespace semproto {

/// Binary entropy of a clause's truth probability, in nats; 0 at p in {0,1}.
double clause_entropy(double prob);
inline double clause_entropy(const Clause& c) { return clause_entropy(c.prob); }

struct EntropyReport {
    double net = 0.0;
    double partial_beta = 0.0;   // downlink clauses only
    double partial_gamma = 0.0;  // action clauses only
    std::vector<std::pair<std::size_t, double>> per_clause;  // (clause index, H)
};

EntropyReport net_entropy(const Spm& spm);
std::string entropy_report_to_csv(const Spm& spm, const EntropyReport& report);

enum class SelectionMetric { NetEntropy, VocabularyCount, Random };

/// Index of the chosen model. NetEntropy: argmin H_net, ties by fewer
/// UCM+DCM vocabularies, then by list order. VocabularyCount: argmin
/// |U|+|D|, ties by smaller H_net, then list order. Random needs an rng.
std::size_t select_spm_index(const std::vector<const Spm*>& candidates,
                             SelectionMetric metric, Rng* rng = nullptr);

const Spm& select_min_entropy(const std::vector<const Spm*>& candidates);

/// Pr(a1^A | S, b) * Pr(a2^A | S, b); 0 when either UE lacks an Access clause
/// at its selected DCM. Throws NoRuleError outside the domain.
double collision_probability(const Spm& spm, const BufferPair& state);

struct Manipulation {
    BufferPair state{0, 0};
    int ue = 0;
    std::string dcm;          // tail label of the replaced clause
    std::string old_action;   // head label before (always an Access action)
    std::string new_action;   // head label after (the Silence action)
    double prob = 0.0;        // probability mass carried over
};

struct ReconfigureResult {
    Spm spm;
    std::vector<Manipulation> log;
};

/// Collision-free reconfiguration: while some in-domain state has collision
/// probability above p_th, replace the Access action clause of the UE with
/// the lower access probability (ties: UE 1) by a Silence clause carrying the
/// same probability mass. States are processed in sorted order and
/// re-evaluated under the partially manipulated model. Grant-free clauses are
/// recomputed at the end when the input model carried any.
ReconfigureResult reconfigure_collision_free(const Spm& spm, double p_th);

std::string manipulation_log_to_csv(const std::vector<Manipulation>& log);

/// Two-state Markov environment: per-state arrival rate pairs, flip with
/// `transition_prob` at every episode boundary.
struct MarkovEnvConfig {
    EnvConfig base;
    std::array<std::array<double, kNumUes>, 2> lambda_states{{{0.9, 0.1}, {0.1, 0.9}}};
    double transition_prob = 0.8;
    int episodes = 100;
    int initial_state = 0;

    std::string descriptor(int state) const;  // e.g. "0.9,0.1"
    static MarkovEnvConfig from_config(const KeyValueConfig& cfg);
};

struct PortfolioEntry {
    std::string descriptor;
    Spm spm;
};

struct Portfolio {
    std::vector<PortfolioEntry> entries;
    enum class Mode {
        Oracle,        // harness reveals the active environment descriptor
        RewardWindow,  // switch entries when a trailing mean reward drops
        Single         // ignore the environment, always use one entry
    } mode = Mode::Oracle;
    std::string single_descriptor;  // Mode::Single
    int window = 3;                 // Mode::RewardWindow
    double switch_threshold = 1.0;  // Mode::RewardWindow

    void validate() const;
};

struct PortfolioRunResult {
    std::vector<double> episode_rewards;   // per-episode mean reward
    std::vector<double> episode_goodputs;
    std::vector<int> env_states;           // active Markov state per episode
    std::vector<std::string> used_entries; // descriptor used per episode
    KpiReport aggregate;                   // sums/means over the whole run
};

PortfolioRunResult portfolio_run(const Portfolio& portfolio,
                                 const MarkovEnvConfig& config, Rng& rng);

std::string portfolio_run_to_csv(const PortfolioRunResult& result);

}  // namespace semproto
