#include "semproto/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <map>
#include <sstream>

#include "semproto/errors.hpp"
#include "semproto/format.hpp"

namespace semproto {

ProtocolUnderTest protocol_aloha(double p) {
    ProtocolUnderTest put;
    put.name = "aloha";
    put.make_policy = [p]() { return std::make_unique<SlottedAlohaPolicy>(p); };
    return put;
}

ProtocolUnderTest protocol_beb(int base, int w_max) {
    ProtocolUnderTest put;
    put.name = "beb";
    put.make_policy = [base, w_max]() { return std::make_unique<BebPolicy>(base, w_max); };
    return put;
}

ProtocolUnderTest protocol_npm(const NPModel& model) {
    ProtocolUnderTest put;
    put.name = "npm";
    put.make_policy = [&model]() { return std::make_unique<NpmPolicy>(model); };
    put.model_bytes = static_cast<std::int64_t>(save_npm_bytes(model).size());
    put.cm_bits = model.arch.cm_size * 32;  // FP32 activations per CM element
    put.inference_flops = model.forward_flops();
    return put;
}

ProtocolUnderTest protocol_spm(const Spm& spm) {
    ProtocolUnderTest put;
    put.name = "spm";
    put.make_policy = [&spm]() { return std::make_unique<SpmPolicy>(spm); };
    put.model_bytes = static_cast<std::int64_t>(serialize_problog(spm).size());
    put.cm_bits = std::max(spm.cm_bits(VocabKind::Ucm), spm.cm_bits(VocabKind::Dcm));
    put.inference_flops = spm_inference_flops(spm);
    return put;
}

void ExperimentConfig::validate() const {
    if (lambdas.empty() || eps_blocks.empty())
        throw ConfigError("sweep grids must be non-empty");
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");
}

namespace {

std::uint64_t point_seed(std::uint64_t base, std::size_t protocol, std::size_t li,
                         std::size_t ei, int rep) {
    // Stable mix so adding grid points does not move other points' seeds.
    std::uint64_t h = base;
    const auto mix = [&h](std::uint64_t v) {
        h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    };
    mix(protocol + 1);
    mix(li + 1);
    mix(ei + 1);
    mix(static_cast<std::uint64_t>(rep) + 1);
    return h;
}

}  // namespace

std::vector<KpiRow> run_experiment(const ExperimentConfig& config,
                                   const std::vector<ProtocolUnderTest>& protocols) {
    config.validate();
    if (protocols.empty()) throw ConfigError("no protocols to run");

    struct Point {
        std::size_t protocol, li, ei;
        int rep;
    };
    std::vector<Point> points;
    for (std::size_t p = 0; p < protocols.size(); ++p)
        for (std::size_t li = 0; li < config.lambdas.size(); ++li)
            for (std::size_t ei = 0; ei < config.eps_blocks.size(); ++ei)
                for (int rep = 0; rep < config.repetitions; ++rep)
                    points.push_back({p, li, ei, rep});

    std::vector<KpiRow> rows(points.size());
    const auto run_point = [&](std::size_t k) {
        const Point& pt = points[k];
        const ProtocolUnderTest& put = protocols[pt.protocol];
        EnvConfig env = config.base_env;
        env.lambda = {config.lambdas[pt.li], config.lambdas[pt.li]};
        env.eps_block = config.eps_blocks[pt.ei];
        env.validate();

        const std::uint64_t seed =
            point_seed(config.base_seed, pt.protocol, pt.li, pt.ei, pt.rep);
        Rng rng(seed);
        std::unique_ptr<Policy> policy = put.make_policy();
        const EpisodeResult episode = run_episode(*policy, env, rng);

        KpiRow row;
        row.protocol = put.name;
        row.lambda = config.lambdas[pt.li];
        row.eps_block = config.eps_blocks[pt.ei];
        row.rep = pt.rep;
        row.seed = seed;
        row.kpi = episode.kpi;
        row.kpi.model_bytes = put.model_bytes;
        row.kpi.cm_bits = put.cm_bits;
        row.kpi.inference_flops = put.inference_flops;
        rows[k] = std::move(row);
    };

    if (config.workers <= 1) {
        for (std::size_t k = 0; k < points.size(); ++k) run_point(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::future<void>> futures;
        for (int w = 0; w < config.workers; ++w) {
            futures.push_back(std::async(std::launch::async, [&]() {
                for (;;) {
                    const std::size_t k = next.fetch_add(1);
                    if (k >= points.size()) return;
                    run_point(k);
                }
            }));
        }
        for (auto& f : futures) f.get();
    }
    return rows;
}

std::string kpi_rows_to_csv(const std::vector<KpiRow>& rows) {
    std::ostringstream out;
    out << "protocol,lambda,eps_block,rep,seed,n_r,n_c,n_d,goodput,mean_reward,"
           "block_errors,overflow_drops,invalid_actions,model_bytes,cm_bits,"
           "inference_flops\n";
    for (const KpiRow& r : rows) {
        out << r.protocol << ',' << format_double(r.lambda) << ','
            << format_double(r.eps_block) << ',' << r.rep << ',' << r.seed << ','
            << r.kpi.n_r << ',' << r.kpi.n_c << ',' << r.kpi.n_d << ','
            << format_double(r.kpi.goodput) << ',' << format_double(r.kpi.mean_reward)
            << ',' << r.kpi.block_errors << ',' << r.kpi.overflow_drops << ','
            << r.kpi.invalid_actions << ',' << r.kpi.model_bytes << ',' << r.kpi.cm_bits
            << ',' << r.kpi.inference_flops << '\n';
    }
    return out.str();
}

namespace {

struct Stats {
    double sum = 0.0, sum_sq = 0.0;
    int n = 0;
    void add(double v) {
        sum += v;
        sum_sq += v * v;
        ++n;
    }
    double mean() const { return n ? sum / n : 0.0; }
    double stddev() const {
        if (n < 2) return 0.0;
        const double m = mean();
        return std::sqrt(std::max(0.0, sum_sq / n - m * m));
    }
};

}  // namespace

std::string kpi_summary_csv(const std::vector<KpiRow>& rows) {
    struct Key {
        std::string protocol;
        double lambda, eps;
        auto operator<=>(const Key&) const = default;
    };
    std::map<Key, std::array<Stats, 5>> groups;  // n_r, n_c, n_d, goodput, reward
    for (const KpiRow& r : rows) {
        auto& g = groups[{r.protocol, r.lambda, r.eps_block}];
        g[0].add(r.kpi.n_r);
        g[1].add(r.kpi.n_c);
        g[2].add(r.kpi.n_d);
        g[3].add(r.kpi.goodput);
        g[4].add(r.kpi.mean_reward);
    }
    std::ostringstream out;
    out << "protocol,lambda,eps_block,reps,n_r_mean,n_r_std,n_c_mean,n_c_std,"
           "n_d_mean,n_d_std,goodput_mean,goodput_std,mean_reward_mean,"
           "mean_reward_std\n";
    for (const auto& [key, g] : groups) {
        out << key.protocol << ',' << format_double(key.lambda) << ','
            << format_double(key.eps) << ',' << g[0].n;
        for (const Stats& s : g)
            out << ',' << format_double(s.mean()) << ',' << format_double(s.stddev());
        out << '\n';
    }
    return out.str();
}

std::string kpi_sweep_svg(const std::vector<KpiRow>& rows, const std::string& kpi,
                          const std::string& x_axis) {
    const auto value_of = [&kpi](const KpiRow& r) -> double {
        if (kpi == "n_r") return r.kpi.n_r;
        if (kpi == "n_c") return r.kpi.n_c;
        if (kpi == "n_d") return r.kpi.n_d;
        if (kpi == "goodput") return r.kpi.goodput;
        if (kpi == "mean_reward") return r.kpi.mean_reward;
        throw ConfigError("unknown KPI column: " + kpi);
    };
    const bool x_lambda = x_axis == "lambda";
    if (!x_lambda && x_axis != "eps_block")
        throw ConfigError("x_axis must be lambda or eps_block");

    std::map<std::string, std::map<double, Stats>> series;
    for (const KpiRow& r : rows)
        series[r.protocol][x_lambda ? r.lambda : r.eps_block].add(value_of(r));

    double x_min = 1e300, x_max = -1e300, y_min = 0.0, y_max = -1e300;
    for (const auto& [name, pts] : series) {
        for (const auto& [x, s] : pts) {
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_max = std::max(y_max, s.mean());
            y_min = std::min(y_min, s.mean());
        }
    }
    if (x_max <= x_min) x_max = x_min + 1.0;
    if (y_max <= y_min) y_max = y_min + 1.0;

    const double w = 640, h = 400, ml = 60, mr = 20, mt = 20, mb = 40;
    const auto sx = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * (w - ml - mr); };
    const auto sy = [&](double y) { return h - mb - (y - y_min) / (y_max - y_min) * (h - mt - mb); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
        << h << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr
        << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
        << h - mb << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << (w / 2) << "\" y=\"" << (h - 8)
        << "\" text-anchor=\"middle\" font-size=\"13\">" << x_axis << "</text>\n";
    out << "<text x=\"14\" y=\"" << (h / 2)
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 14 "
        << (h / 2) << ")\">" << kpi << "</text>\n";

    int color_index = 0;
    double legend_y = mt + 10;
    for (const auto& [name, pts] : series) {
        const char* color = colors[color_index++ % 5];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const auto& [x, s] : pts) out << sx(x) << ',' << sy(s.mean()) << ' ';
        out << "\"/>\n";
        for (const auto& [x, s] : pts)
            out << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(s.mean())
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        out << "<text x=\"" << w - mr - 120 << "\" y=\"" << legend_y
            << "\" font-size=\"12\" fill=\"" << color << "\">" << name << "</text>\n";
        legend_y += 16;
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace semproto
