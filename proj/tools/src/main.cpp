#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <semproto/analytics.hpp>
#include <semproto/baselines.hpp>
#include <semproto/errors.hpp>
#include <semproto/experiment.hpp>
#include <semproto/format.hpp>
#include <semproto/inference.hpp>
#include <semproto/spm.hpp>
#include <semproto/train.hpp>

namespace fs = std::filesystem;
using namespace semproto;

namespace {

struct CommonOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "plain-text key = value config file");
    cmd->add_option("--seed", opts.seed, "RNG seed (overrides the config file)")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
}

KeyValueConfig load_config(const CommonOpts& opts) {
    KeyValueConfig cfg;
    if (!opts.config_path.empty()) cfg = KeyValueConfig::from_file(opts.config_path);
    if (opts.seed_set) cfg.set("seed", std::to_string(opts.seed));
    return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw IoError("failed writing: " + path.string());
}

SpmOptions spm_options_from(const KeyValueConfig& cfg, const std::string& merge) {
    SpmOptions options = SpmOptions::from_config(cfg);
    if (!merge.empty()) {
        if (merge == "none") {
            options.merge_activation = false;
            options.merge_connection = false;
        } else if (merge == "activation") {
            options.merge_activation = true;
            options.merge_connection = false;
        } else if (merge == "connection") {
            options.merge_activation = false;
            options.merge_connection = true;
        } else if (merge == "both") {
            options.merge_activation = true;
            options.merge_connection = true;
        } else {
            throw ConfigError("--merge must be none, activation, connection or both");
        }
    }
    return options;
}

EpisodicMemory memory_or_fallback(const std::string& memory_path, const NPModel& model,
                                  const EnvConfig& env, int fallback_episodes) {
    if (!memory_path.empty()) return EpisodicMemory::load(memory_path);
    if (fallback_episodes < 1)
        throw ConfigError("no memory file given and the greedy-episode fallback is disabled");
    Rng rng = Rng::substream(env.seed, 0x8eedULL);
    return collect_memory(model, env, fallback_episodes, rng);
}

int cmd_train(const CommonOpts& common, const std::string& out_model,
              const std::string& out_memory, const std::string& metrics_path) {
    const KeyValueConfig cfg = load_config(common);
    const EnvConfig env = EnvConfig::from_config(cfg);
    const TrainConfig tc = TrainConfig::from_config(cfg);
    Rng rng(env.seed);
    TrainResult result = train_npm(env, tc, rng);
    save_npm(result.model, out_model);
    if (!out_memory.empty()) result.memory.save(out_memory);
    if (!metrics_path.empty()) write_file(metrics_path, metrics_to_csv(result.metrics));

    double reward = 0.0, goodput = 0.0;
    const int tail = std::min<int>(50, static_cast<int>(result.metrics.size()));
    for (int k = 0; k < tail; ++k) {
        const EpisodeMetrics& m = result.metrics[result.metrics.size() - 1 - k];
        reward += m.mean_reward;
        goodput += m.goodput;
    }
    std::cout << "trained " << tc.total_episodes << " episodes; last-" << tail
              << " mean reward " << format_double(tail ? reward / tail : 0.0)
              << ", goodput " << format_double(tail ? goodput / tail : 0.0) << "\n"
              << "model: " << out_model << " (" << save_npm_bytes(result.model).size()
              << " bytes)\n";
    return 0;
}

int cmd_extract(const CommonOpts& common, const std::string& model_path,
                const std::string& memory_path, const std::string& domain_kind,
                int fallback_episodes, const std::string& out_dir) {
    const KeyValueConfig cfg = load_config(common);
    EnvConfig env = EnvConfig::from_config(cfg);
    const NPModel model = load_npm(model_path);
    env.b_max = model.arch.b_max;

    std::set<BufferPair> domain;
    if (domain_kind == "grid") {
        domain = full_grid_domain(model.arch.b_max);
    } else {
        const EpisodicMemory memory =
            memory_or_fallback(memory_path, model, env, fallback_episodes);
        domain = domain_kind == "pairs" ? observed_state_domain(memory)
                                        : observed_product_domain(memory);
    }
    const ProtocolGraph graph = extract_graph(model, domain);
    write_file(fs::path(out_dir) / "vocab.csv", graph_vocab_csv(graph));
    write_file(fs::path(out_dir) / "edges.csv", graph_edges_csv(graph));
    write_file(fs::path(out_dir) / "graph.txt", graph_to_text(graph));
    std::cout << "extracted " << graph.vocabularies.size() << " vocabularies, "
              << graph.connections.size() << " connections over " << domain.size()
              << " states -> " << out_dir << "\n";
    return 0;
}

int cmd_transform(const CommonOpts& common, const std::string& model_path,
                  const std::string& memory_path, const std::string& merge,
                  bool grant_free, int fallback_episodes, const std::string& out_path) {
    const KeyValueConfig cfg = load_config(common);
    EnvConfig env = EnvConfig::from_config(cfg);
    const NPModel model = load_npm(model_path);
    env.b_max = model.arch.b_max;
    const SpmOptions options = spm_options_from(cfg, merge);
    const EpisodicMemory memory =
        memory_or_fallback(memory_path, model, env, fallback_episodes);
    Spm spm = construct_spm(model, memory, options);
    if (grant_free) spm = augment_with_grant_free(std::move(spm));
    save_problog_file(spm, out_path);
    std::cout << "spm: " << out_path << " (" << serialize_problog(spm).size()
              << " bytes, " << spm.clauses.size() << " clauses, UCM "
              << spm.count_vocab(VocabKind::Ucm) << ", DCM "
              << spm.count_vocab(VocabKind::Dcm) << ", grant-free "
              << spm.count_clauses(ClauseKind::GrantFree) << ")\n";
    return 0;
}

std::unique_ptr<Policy> make_policy(const std::string& protocol, const KeyValueConfig& cfg,
                                    std::unique_ptr<NPModel>& model_holder,
                                    std::unique_ptr<Spm>& spm_holder,
                                    const std::string& model_path,
                                    const std::string& spm_path, bool record_trace) {
    if (protocol == "aloha")
        return std::make_unique<SlottedAlohaPolicy>(cfg.get_double("aloha_p", 0.5));
    if (protocol == "beb")
        return std::make_unique<BebPolicy>(cfg.get_int("beb_base", 2),
                                           cfg.get_int("beb_w_max", 16));
    if (protocol == "npm") {
        if (model_path.empty()) throw ConfigError("--protocol npm needs --model");
        model_holder = std::make_unique<NPModel>(load_npm(model_path));
        return std::make_unique<NpmPolicy>(*model_holder);
    }
    if (protocol == "spm") {
        if (spm_path.empty()) throw ConfigError("--protocol spm needs --spm");
        spm_holder = std::make_unique<Spm>(load_problog_file(spm_path));
        return std::make_unique<SpmPolicy>(*spm_holder, record_trace);
    }
    throw ConfigError("unknown protocol: " + protocol);
}

int cmd_run(const CommonOpts& common, const std::string& protocol,
            const std::string& model_path, const std::string& spm_path, int episodes,
            const std::string& out_dir) {
    const KeyValueConfig cfg = load_config(common);
    const EnvConfig env = EnvConfig::from_config(cfg);

    std::unique_ptr<NPModel> model;
    std::unique_ptr<Spm> spm;
    std::vector<KpiRow> rows;
    for (int ep = 0; ep < episodes; ++ep) {
        std::unique_ptr<Policy> policy =
            make_policy(protocol, cfg, model, spm, model_path, spm_path, true);
        Rng rng = Rng::substream(env.seed, static_cast<std::uint64_t>(ep));
        const EpisodeResult result = run_episode(*policy, env, rng);
        write_file(fs::path(out_dir) / ("trace_" + std::to_string(ep) + ".csv"),
                   trace_to_csv(result.trace));
        if (auto* sp = dynamic_cast<SpmPolicy*>(policy.get())) {
            write_file(fs::path(out_dir) /
                           ("inference_trace_" + std::to_string(ep) + ".csv"),
                       inference_trace_to_csv(sp->trace()));
        }
        KpiRow row;
        row.protocol = protocol;
        row.lambda = env.lambda[0];
        row.eps_block = env.eps_block;
        row.rep = ep;
        row.seed = env.seed;
        row.kpi = result.kpi;
        if (model) {
            row.kpi.model_bytes = static_cast<std::int64_t>(save_npm_bytes(*model).size());
            row.kpi.cm_bits = model->arch.cm_size * 32;
            row.kpi.inference_flops = model->forward_flops();
        }
        if (spm) {
            row.kpi.model_bytes = static_cast<std::int64_t>(serialize_problog(*spm).size());
            row.kpi.cm_bits = std::max(spm->cm_bits(VocabKind::Ucm),
                                       spm->cm_bits(VocabKind::Dcm));
            row.kpi.inference_flops = spm_inference_flops(*spm);
        }
        rows.push_back(std::move(row));
    }
    write_file(fs::path(out_dir) / "kpi.csv", kpi_rows_to_csv(rows));

    double goodput = 0.0, reward = 0.0;
    for (const KpiRow& row : rows) {
        goodput += row.kpi.goodput;
        reward += row.kpi.mean_reward;
    }
    std::cout << protocol << ": " << episodes << " episodes, mean goodput "
              << format_double(goodput / episodes) << ", mean reward "
              << format_double(reward / episodes) << " -> " << out_dir << "\n";
    return 0;
}

int cmd_reconfigure(const std::string& spm_path, double p_th, const std::string& out_path,
                    const std::string& log_path) {
    const Spm spm = load_problog_file(spm_path);
    const ReconfigureResult result = reconfigure_collision_free(spm, p_th);
    save_problog_file(result.spm, out_path);
    if (!log_path.empty()) write_file(log_path, manipulation_log_to_csv(result.log));
    std::cout << "reconfigured with p_th " << format_double(p_th) << ": "
              << result.log.size() << " manipulation(s) -> " << out_path << "\n";
    return 0;
}

int cmd_entropy(const std::string& spm_path, bool bits, const std::string& per_clause) {
    const Spm spm = load_problog_file(spm_path);
    const EntropyReport report = net_entropy(spm);
    const double unit = bits ? 1.0 / std::log(2.0) : 1.0;
    const char* suffix = bits ? "bits" : "nats";
    std::cout << "net " << format_double(report.net * unit) << ' ' << suffix
              << " (downlink " << format_double(report.partial_beta * unit)
              << ", action " << format_double(report.partial_gamma * unit) << ")\n";
    if (!per_clause.empty()) write_file(per_clause, entropy_report_to_csv(spm, report));
    return 0;
}

int cmd_select(const CommonOpts& common, const std::vector<std::string>& paths,
               const std::string& metric_name) {
    const KeyValueConfig cfg = load_config(common);
    std::vector<Spm> spms;
    for (const std::string& path : paths) spms.push_back(load_problog_file(path));
    std::vector<const Spm*> pointers;
    for (const Spm& spm : spms) pointers.push_back(&spm);

    SelectionMetric metric = SelectionMetric::NetEntropy;
    if (metric_name == "vocab") metric = SelectionMetric::VocabularyCount;
    else if (metric_name == "random") metric = SelectionMetric::Random;
    else if (metric_name != "entropy")
        throw ConfigError("--metric must be entropy, vocab or random");

    Rng rng(cfg.get_uint64("seed", 1));
    const std::size_t index = select_spm_index(pointers, metric, &rng);
    std::cout << paths[index] << "\n";
    return 0;
}

Portfolio load_portfolio(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open portfolio file: " + path);
    Portfolio portfolio;
    const fs::path base = fs::path(path).parent_path();
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream fields(line);
        std::string descriptor, spm_path;
        if (!(fields >> descriptor)) continue;
        if (!(fields >> spm_path))
            throw ConfigError("portfolio line " + std::to_string(line_no) +
                              ": expected `<descriptor> <spm path>`");
        fs::path resolved(spm_path);
        if (resolved.is_relative()) resolved = base / resolved;
        portfolio.entries.push_back({descriptor, load_problog_file(resolved.string())});
    }
    return portfolio;
}

int cmd_portfolio(const CommonOpts& common, const std::string& portfolio_path,
                  const std::string& mode, const std::string& model_path,
                  const std::string& out_path) {
    const KeyValueConfig cfg = load_config(common);
    const MarkovEnvConfig markov = MarkovEnvConfig::from_config(cfg);

    if (mode == "continual") {
        // Baseline for the non-stationary comparison: retrain the NPM from its
        // previous weights for a short budget at every environment switch.
        if (model_path.empty()) throw ConfigError("--mode continual needs --model");
        NPModel model = load_npm(model_path);
        if (!model.training)
            throw ConfigError("continual mode needs a checkpoint with training state");
        TrainConfig tc = TrainConfig::from_config(cfg);
        tc.total_episodes = cfg.get_int("markov_retrain_episodes", 40);
        tc.epsilon_start = cfg.get_double("markov_retrain_epsilon", 0.2);
        tc.epsilon_end = tc.epsilon_start;

        std::ostringstream csv;
        csv << "episode,env_state,entry,mean_reward,goodput\n";
        Rng transition_rng(markov.base.seed);
        int env_state = markov.initial_state;
        int previous_state = -1;
        double total_reward = 0.0;
        for (int ep = 0; ep < markov.episodes; ++ep) {
            EnvConfig env = markov.base;
            env.lambda = markov.lambda_states[static_cast<std::size_t>(env_state)];
            if (env_state != previous_state) {
                Rng retrain_rng = Rng::substream(markov.base.seed, 7000 + ep);
                // resume from the current weights in the changed environment
                TrainResult retrained = resume_training(model, env, tc, retrain_rng);
                model = std::move(retrained.model);
                previous_state = env_state;
            }
            NpmPolicy policy(model);
            Rng erng = Rng::substream(markov.base.seed, static_cast<std::uint64_t>(ep));
            const EpisodeResult result = run_episode(policy, env, erng);
            csv << ep << ',' << env_state << ",continual,"
                << format_double(result.kpi.mean_reward) << ','
                << format_double(result.kpi.goodput) << '\n';
            total_reward += result.kpi.mean_reward;
            if (transition_rng.bernoulli(markov.transition_prob)) env_state = 1 - env_state;
        }
        if (!out_path.empty()) write_file(out_path, csv.str());
        std::cout << "continual: mean reward "
                  << format_double(total_reward / markov.episodes) << " over "
                  << markov.episodes << " episodes\n";
        return 0;
    }

    Portfolio portfolio = load_portfolio(portfolio_path);
    if (mode == "oracle") {
        portfolio.mode = Portfolio::Mode::Oracle;
    } else if (mode == "reward") {
        portfolio.mode = Portfolio::Mode::RewardWindow;
        portfolio.window = cfg.get_int("portfolio_window", portfolio.window);
        portfolio.switch_threshold =
            cfg.get_double("portfolio_threshold", portfolio.switch_threshold);
    } else if (mode.rfind("single:", 0) == 0) {
        portfolio.mode = Portfolio::Mode::Single;
        portfolio.single_descriptor = mode.substr(7);
    } else {
        throw ConfigError("--mode must be oracle, reward, single:<descriptor> or continual");
    }

    Rng rng(markov.base.seed);
    const PortfolioRunResult result = portfolio_run(portfolio, markov, rng);
    if (!out_path.empty()) write_file(out_path, portfolio_run_to_csv(result));
    std::cout << "portfolio (" << mode << "): mean reward "
              << format_double(result.aggregate.mean_reward) << ", goodput "
              << format_double(result.aggregate.goodput) << " over "
              << result.episode_rewards.size() << " episodes\n";
    return 0;
}

int cmd_baseline(const CommonOpts& common, const std::string& which,
                 const std::vector<double>& lambdas, const std::vector<double>& eps,
                 int reps, int workers, bool svg, const std::string& out_dir) {
    const KeyValueConfig cfg = load_config(common);
    ExperimentConfig config;
    config.base_env = EnvConfig::from_config(cfg);
    config.base_seed = config.base_env.seed;
    if (!lambdas.empty()) config.lambdas = lambdas;
    if (!eps.empty()) config.eps_blocks = eps;
    config.repetitions = reps;
    config.workers = workers;

    std::vector<ProtocolUnderTest> protocols;
    if (which == "aloha" || which == "both")
        protocols.push_back(protocol_aloha(cfg.get_double("aloha_p", 0.5)));
    if (which == "beb" || which == "both")
        protocols.push_back(protocol_beb(cfg.get_int("beb_base", 2),
                                         cfg.get_int("beb_w_max", 16)));
    if (protocols.empty()) throw ConfigError("--which must be aloha, beb or both");

    const std::vector<KpiRow> rows = run_experiment(config, protocols);
    write_file(fs::path(out_dir) / "kpi.csv", kpi_rows_to_csv(rows));
    write_file(fs::path(out_dir) / "summary.csv", kpi_summary_csv(rows));
    if (svg) {
        const std::string axis = config.lambdas.size() > 1 ? "lambda" : "eps_block";
        for (const char* kpi : {"n_r", "n_c", "goodput"})
            write_file(fs::path(out_dir) / (std::string(kpi) + ".svg"),
                       kpi_sweep_svg(rows, kpi, axis));
    }
    std::cout << rows.size() << " runs -> " << out_dir << "\n";
    return 0;
}

int cmd_policymap(const std::string& model_path, const std::string& spm_path,
                  const std::string& out_path) {
    if (model_path.empty() && spm_path.empty())
        throw ConfigError("policymap needs --model and/or --spm");
    std::vector<PolicyMapRow> npm_map, spm_map;
    int b_max = 5;
    if (!model_path.empty()) {
        const NPModel model = load_npm(model_path);
        b_max = model.arch.b_max;
        npm_map = policy_map(model);
    }
    if (!spm_path.empty()) {
        const Spm spm = load_problog_file(spm_path);
        int max_level = b_max;
        if (model_path.empty()) {
            max_level = 0;
            for (const auto& levels : spm.level_sets())
                for (int level : levels) max_level = std::max(max_level, level);
        }
        spm_map = policy_map(spm, max_level);
    }
    const std::vector<PolicyMapRow>& primary = spm_map.empty() ? npm_map : spm_map;
    if (!out_path.empty()) write_file(out_path, policy_map_to_csv(primary));
    if (!npm_map.empty() && !spm_map.empty()) {
        std::cout << "policy agreement: "
                  << format_double(100.0 * policy_agreement(npm_map, spm_map)) << "%\n";
    } else {
        std::cout << primary.size() << " states -> "
                  << (out_path.empty() ? "(stdout suppressed)" : out_path) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semantic protocol model toolkit"};
    app.require_subcommand(1);

    CommonOpts common;

    auto* train = app.add_subcommand("train", "train an NPM with multi-agent DQN");
    std::string out_model = "npm.bin", out_memory = "memory.bin", metrics = "metrics.csv";
    add_common(train, common);
    train->add_option("--out-model", out_model);
    train->add_option("--out-memory", out_memory);
    train->add_option("--metrics", metrics);

    auto* extract = app.add_subcommand("extract", "extract the symbolic protocol graph");
    std::string model_path, memory_path, domain_kind = "product", out_dir = "extract";
    int fallback_episodes = 8;
    add_common(extract, common);
    extract->add_option("--model", model_path)->required();
    extract->add_option("--memory", memory_path);
    extract->add_option("--domain", domain_kind, "grid, pairs or product");
    extract->add_option("--fallback-episodes", fallback_episodes);
    extract->add_option("--out-dir", out_dir);

    auto* transform = app.add_subcommand("transform", "construct an SPM from an NPM");
    std::string merge, spm_out = "spm.pl";
    bool grant_free = false;
    add_common(transform, common);
    transform->add_option("--model", model_path)->required();
    transform->add_option("--memory", memory_path);
    transform->add_option("--merge", merge, "none, activation, connection or both");
    transform->add_flag("--grant-free", grant_free, "augment with delta clauses");
    transform->add_option("--fallback-episodes", fallback_episodes);
    transform->add_option("--out", spm_out);

    auto* run = app.add_subcommand("run", "run a protocol through the environment");
    std::string protocol = "spm", spm_path;
    int episodes = 10;
    add_common(run, common);
    run->add_option("--protocol", protocol, "aloha, beb, npm or spm");
    run->add_option("--model", model_path);
    run->add_option("--spm", spm_path);
    run->add_option("--episodes", episodes);
    run->add_option("--out-dir", out_dir);

    auto* reconfigure = app.add_subcommand("reconfigure", "collision-free manipulation");
    double p_th = 0.0;
    std::string reconf_out = "spm_collision_free.pl", log_path;
    add_common(reconfigure, common);
    reconfigure->add_option("--spm", spm_path)->required();
    reconfigure->add_option("--p-th", p_th, "collision avoidance threshold");
    reconfigure->add_option("--out", reconf_out);
    reconfigure->add_option("--log", log_path);

    auto* entropy = app.add_subcommand("entropy", "semantic entropy of an SPM");
    bool bits = false;
    std::string per_clause;
    add_common(entropy, common);
    entropy->add_option("--spm", spm_path)->required();
    entropy->add_flag("--bits", bits, "report in bits instead of nats");
    entropy->add_option("--per-clause", per_clause, "per-clause CSV output");

    auto* select_cmd = app.add_subcommand("select", "choose an SPM from candidates");
    std::vector<std::string> spm_paths;
    std::string metric = "entropy";
    add_common(select_cmd, common);
    select_cmd->add_option("--spms", spm_paths)->required()->expected(-1);
    select_cmd->add_option("--metric", metric, "entropy, vocab or random");

    auto* portfolio = app.add_subcommand("portfolio", "non-stationary environment runs");
    std::string portfolio_path, mode = "oracle", portfolio_out = "portfolio_kpi.csv";
    add_common(portfolio, common);
    portfolio->add_option("--portfolio", portfolio_path);
    portfolio->add_option("--mode", mode, "oracle, reward, single:<desc> or continual");
    portfolio->add_option("--model", model_path, "NPM checkpoint for continual mode");
    portfolio->add_option("--out", portfolio_out);

    auto* baseline = app.add_subcommand("baseline", "S-ALOHA / BEB sweeps");
    std::string which = "both";
    std::vector<double> lambdas, eps;
    int reps = 10, workers = 1;
    bool svg = false;
    add_common(baseline, common);
    baseline->add_option("--which", which, "aloha, beb or both");
    baseline->add_option("--lambdas", lambdas)->delimiter(',');
    baseline->add_option("--eps", eps)->delimiter(',');
    baseline->add_option("--reps", reps);
    baseline->add_option("--workers", workers);
    baseline->add_flag("--svg", svg, "write SVG line plots");
    baseline->add_option("--out-dir", out_dir);

    auto* policymap = app.add_subcommand("policymap", "per-state decision grid export");
    std::string map_out = "policy_map.csv";
    add_common(policymap, common);
    policymap->add_option("--model", model_path);
    policymap->add_option("--spm", spm_path);
    policymap->add_option("--out", map_out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(common, out_model, out_memory, metrics);
        if (extract->parsed())
            return cmd_extract(common, model_path, memory_path, domain_kind,
                               fallback_episodes, out_dir);
        if (transform->parsed())
            return cmd_transform(common, model_path, memory_path, merge, grant_free,
                                 fallback_episodes, spm_out);
        if (run->parsed())
            return cmd_run(common, protocol, model_path, spm_path, episodes, out_dir);
        if (reconfigure->parsed())
            return cmd_reconfigure(spm_path, p_th, reconf_out, log_path);
        if (entropy->parsed()) return cmd_entropy(spm_path, bits, per_clause);
        if (select_cmd->parsed()) return cmd_select(common, spm_paths, metric);
        if (portfolio->parsed())
            return cmd_portfolio(common, portfolio_path, mode, model_path, portfolio_out);
        if (baseline->parsed())
            return cmd_baseline(common, which, lambdas, eps, reps, workers, svg, out_dir);
        if (policymap->parsed()) return cmd_policymap(model_path, spm_path, map_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}
