#include "semproto/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "semproto/errors.hpp"
#include "semproto/format.hpp"

namespace semproto {

double clause_entropy(double prob) {
    if (prob < 0.0 || prob > 1.0) throw Error("clause probability outside [0,1]");
    if (prob == 0.0 || prob == 1.0) return 0.0;
    return -(prob * std::log(prob) + (1.0 - prob) * std::log(1.0 - prob));
}

EntropyReport net_entropy(const Spm& spm) {
    EntropyReport report;
    for (std::size_t k = 0; k < spm.clauses.size(); ++k) {
        const Clause& c = spm.clauses[k];
        const double h = clause_entropy(c.prob);
        report.net += h;
        if (c.kind == ClauseKind::Downlink) report.partial_beta += h;
        if (c.kind == ClauseKind::Action) report.partial_gamma += h;
        report.per_clause.push_back({k, h});
    }
    return report;
}

std::string entropy_report_to_csv(const Spm& spm, const EntropyReport& report) {
    std::ostringstream out;
    out << "clause,kind,prob,entropy_nats\n";
    for (const auto& [index, h] : report.per_clause) {
        const Clause& c = spm.clauses[index];
        out << spm.vocab(c.head).label << ":-" << spm.vocab(c.tail).label << ','
            << clause_kind_name(c.kind) << ',' << format_double(c.prob) << ','
            << format_double(h) << '\n';
    }
    out << "net,," << ',' << format_double(report.net) << '\n';
    out << "net_beta,," << ',' << format_double(report.partial_beta) << '\n';
    out << "net_gamma,," << ',' << format_double(report.partial_gamma) << '\n';
    return out.str();
}

namespace {

int ucm_dcm_vocab_count(const Spm& spm) {
    return spm.count_vocab(VocabKind::Ucm) + spm.count_vocab(VocabKind::Dcm);
}

}  // namespace

std::size_t select_spm_index(const std::vector<const Spm*>& candidates,
                             SelectionMetric metric, Rng* rng) {
    if (candidates.empty()) throw Error("select_spm_index: empty candidate list");
    if (metric == SelectionMetric::Random) {
        if (!rng) throw Error("random selection needs an rng");
        return static_cast<std::size_t>(
            rng->uniform_int(0, static_cast<int>(candidates.size()) - 1));
    }
    std::size_t best = 0;
    double best_primary = 0.0;
    double best_secondary = 0.0;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const double h = net_entropy(*candidates[k]).net;
        const double v = static_cast<double>(ucm_dcm_vocab_count(*candidates[k]));
        const double primary = metric == SelectionMetric::NetEntropy ? h : v;
        const double secondary = metric == SelectionMetric::NetEntropy ? v : h;
        if (k == 0 || primary < best_primary ||
            (primary == best_primary && secondary < best_secondary)) {
            best = k;
            best_primary = primary;
            best_secondary = secondary;
        }
    }
    return best;
}

const Spm& select_min_entropy(const std::vector<const Spm*>& candidates) {
    return *candidates[select_spm_index(candidates, SelectionMetric::NetEntropy)];
}

double collision_probability(const Spm& spm, const BufferPair& state) {
    double product = 1.0;
    for (int ue = 0; ue < kNumUes; ++ue)
        product *= action_truth_probability(spm, state, ue, UeAction::Access);
    return product;
}

ReconfigureResult reconfigure_collision_free(const Spm& spm, double p_th) {
    if (p_th < 0.0 || p_th > 1.0) throw Error("p_th must be in [0,1]");

    const bool had_delta = spm.count_clauses(ClauseKind::GrantFree) > 0;
    ReconfigureResult result;
    result.spm = strip_grant_free(spm);
    Spm& work = result.spm;

    const int max_manipulations = work.count_clauses(ClauseKind::Action);
    bool changed = true;
    while (changed) {
        changed = false;
        for (const BufferPair& state : work.domain()) {
            double p_collision = 0.0;
            try {
                p_collision = collision_probability(work, state);
            } catch (const NoRuleError&) {
                continue;  // unresolvable states fall back to silence at runtime
            }
            if (p_collision <= p_th || p_collision == 0.0) continue;

            std::array<double, kNumUes> access{0.0, 0.0};
            std::array<VocabId, kNumUes> selected_d{-1, -1};
            for (int ue = 0; ue < kNumUes; ++ue) {
                const TruthProbs probs = truth_probabilities(work, state, ue);
                selected_d[ue] = probs.selected_dcm;
                for (const auto& [a, p] : probs.action)
                    if (work.vocab(a).action == UeAction::Access) access[ue] = p;
            }
            const int ue = access[0] <= access[1] ? 0 : 1;  // ties go to UE 1

            // Eq.-28 style least manipulation: drop the Access clause of the
            // selected DCM, its mass moves onto a Silence clause instead.
            std::size_t gamma_index = work.clauses.size();
            for (std::size_t k = 0; k < work.clauses.size(); ++k) {
                const Clause& c = work.clauses[k];
                if (c.kind == ClauseKind::Action && c.ue == ue &&
                    c.tail == selected_d[ue] &&
                    work.vocab(c.head).action == UeAction::Access) {
                    gamma_index = k;
                    break;
                }
            }
            if (gamma_index == work.clauses.size())
                throw Error("reconfigure: access clause vanished mid-iteration");
            const Clause gamma = work.clauses[gamma_index];

            // Find or create the Silence action vocabulary for this UE.
            VocabId silence_vocab = -1;
            for (const Vocabulary& v : work.vocabularies)
                if (v.kind == VocabKind::Action && v.ue == ue &&
                    v.action == UeAction::Silence)
                    silence_vocab = v.id;
            if (silence_vocab < 0) {
                Vocabulary v;
                v.id = static_cast<VocabId>(work.vocabularies.size());
                v.kind = VocabKind::Action;
                v.ue = ue;
                v.action = UeAction::Silence;
                v.label = "a" + std::to_string(ue + 1) + "_S";
                silence_vocab = v.id;
                work.vocabularies.push_back(std::move(v));
            }

            work.clauses.erase(work.clauses.begin() +
                               static_cast<std::ptrdiff_t>(gamma_index));
            bool merged = false;
            for (Clause& c : work.clauses) {
                if (c.kind == ClauseKind::Action && c.tail == gamma.tail &&
                    c.head == silence_vocab) {
                    c.prob += gamma.prob;  // keep one clause per (tail, head)
                    merged = true;
                    break;
                }
            }
            if (!merged) {
                Clause replacement = gamma;
                replacement.head = silence_vocab;
                work.clauses.push_back(replacement);
            }
            sort_clauses_canonically(work, work.clauses);

            Manipulation entry;
            entry.state = state;
            entry.ue = ue;
            entry.dcm = work.vocab(gamma.tail).label;
            entry.old_action = "a" + std::to_string(ue + 1) + "_A";
            entry.new_action = work.vocab(silence_vocab).label;
            entry.prob = gamma.prob;
            result.log.push_back(entry);
            changed = true;

            if (static_cast<int>(result.log.size()) > max_manipulations)
                throw Error("reconfigure did not converge within the action clause bound");
        }
    }

    if (had_delta) result.spm = augment_with_grant_free(std::move(result.spm));
    return result;
}

std::string manipulation_log_to_csv(const std::vector<Manipulation>& log) {
    std::ostringstream out;
    out << "b1,b2,ue,dcm,old_action,new_action,prob\n";
    for (const Manipulation& m : log) {
        out << m.state[0] << ',' << m.state[1] << ',' << (m.ue + 1) << ',' << m.dcm
            << ',' << m.old_action << ',' << m.new_action << ','
            << format_double(m.prob) << '\n';
    }
    return out.str();
}

std::string MarkovEnvConfig::descriptor(int state) const {
    return format_double(lambda_states[static_cast<std::size_t>(state)][0]) + "," +
           format_double(lambda_states[static_cast<std::size_t>(state)][1]);
}

MarkovEnvConfig MarkovEnvConfig::from_config(const KeyValueConfig& cfg) {
    MarkovEnvConfig mc;
    mc.base = EnvConfig::from_config(cfg);
    const auto a = cfg.get_double_list("markov_lambda_a", {0.9, 0.1});
    const auto b = cfg.get_double_list("markov_lambda_b", {0.1, 0.9});
    if (a.size() != kNumUes || b.size() != kNumUes)
        throw ConfigError("markov_lambda_a/b must list 2 rates");
    mc.lambda_states = {{{a[0], a[1]}, {b[0], b[1]}}};
    mc.transition_prob = cfg.get_double("markov_transition", mc.transition_prob);
    mc.episodes = cfg.get_int("markov_episodes", mc.episodes);
    mc.initial_state = cfg.get_int("markov_initial_state", mc.initial_state);
    if (mc.transition_prob < 0.0 || mc.transition_prob > 1.0)
        throw ConfigError("markov_transition must be in [0,1]");
    if (mc.episodes < 1) throw ConfigError("markov_episodes must be >= 1");
    if (mc.initial_state != 0 && mc.initial_state != 1)
        throw ConfigError("markov_initial_state must be 0 or 1");
    return mc;
}

void Portfolio::validate() const {
    if (entries.empty()) throw ConfigError("portfolio needs at least one entry");
    std::set<std::string> seen;
    for (const PortfolioEntry& e : entries)
        if (!seen.insert(e.descriptor).second)
            throw ConfigError("duplicate portfolio descriptor: " + e.descriptor);
    if (mode == Mode::Single && single_descriptor.empty())
        throw ConfigError("single mode needs a descriptor");
    if (mode == Mode::RewardWindow && window < 1)
        throw ConfigError("reward window must be >= 1");
}

PortfolioRunResult portfolio_run(const Portfolio& portfolio,
                                 const MarkovEnvConfig& config, Rng& rng) {
    portfolio.validate();
    const auto find_entry = [&portfolio](const std::string& descriptor) -> const PortfolioEntry* {
        for (const PortfolioEntry& e : portfolio.entries)
            if (e.descriptor == descriptor) return &e;
        return nullptr;
    };

    std::size_t current_entry = 0;
    if (portfolio.mode == Portfolio::Mode::Single) {
        const PortfolioEntry* e = find_entry(portfolio.single_descriptor);
        if (!e) throw ConfigError("portfolio has no entry " + portfolio.single_descriptor);
        current_entry = static_cast<std::size_t>(e - portfolio.entries.data());
    }

    PortfolioRunResult result;
    std::vector<double> window_rewards;
    int env_state = config.initial_state;
    double reward_total = 0.0;
    int n_r_total = 0;
    int cycles_total = 0;

    for (int ep = 0; ep < config.episodes; ++ep) {
        const std::string active = config.descriptor(env_state);
        switch (portfolio.mode) {
            case Portfolio::Mode::Oracle: {
                const PortfolioEntry* e = find_entry(active);
                if (!e)
                    throw ConfigError("portfolio has no entry for active environment " +
                                      active);
                current_entry = static_cast<std::size_t>(e - portfolio.entries.data());
                break;
            }
            case Portfolio::Mode::RewardWindow: {
                if (static_cast<int>(window_rewards.size()) >= portfolio.window) {
                    double mean = 0.0;
                    for (double r : window_rewards) mean += r;
                    mean /= static_cast<double>(window_rewards.size());
                    if (mean < portfolio.switch_threshold) {
                        current_entry = (current_entry + 1) % portfolio.entries.size();
                        window_rewards.clear();
                    }
                }
                break;
            }
            case Portfolio::Mode::Single: break;
        }

        EnvConfig env = config.base;
        env.lambda = config.lambda_states[static_cast<std::size_t>(env_state)];
        SpmPolicy policy(portfolio.entries[current_entry].spm);
        Rng episode_rng = Rng::substream(config.base.seed, static_cast<std::uint64_t>(ep));
        const EpisodeResult episode = run_episode(policy, env, episode_rng);

        result.episode_rewards.push_back(episode.kpi.mean_reward);
        result.episode_goodputs.push_back(episode.kpi.goodput);
        result.env_states.push_back(env_state);
        result.used_entries.push_back(portfolio.entries[current_entry].descriptor);
        reward_total += episode.kpi.mean_reward;
        n_r_total += episode.kpi.n_r;
        cycles_total += env.t_max;

        if (portfolio.mode == Portfolio::Mode::RewardWindow) {
            window_rewards.push_back(episode.kpi.mean_reward);
            if (static_cast<int>(window_rewards.size()) > portfolio.window)
                window_rewards.erase(window_rewards.begin());
        }

        if (rng.bernoulli(config.transition_prob)) env_state = 1 - env_state;
    }

    result.aggregate.t_max = cycles_total;
    result.aggregate.n_r = n_r_total;
    result.aggregate.goodput =
        cycles_total ? static_cast<double>(n_r_total) / cycles_total : 0.0;
    result.aggregate.mean_reward =
        config.episodes ? reward_total / config.episodes : 0.0;
    return result;
}

std::string portfolio_run_to_csv(const PortfolioRunResult& result) {
    std::ostringstream out;
    out << "episode,env_state,entry,mean_reward,goodput\n";
    for (std::size_t ep = 0; ep < result.episode_rewards.size(); ++ep) {
        out << ep << ',' << result.env_states[ep] << ',' << result.used_entries[ep]
            << ',' << format_double(result.episode_rewards[ep]) << ','
            << format_double(result.episode_goodputs[ep]) << '\n';
    }
    return out.str();
}

}  // namespace semproto
