#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "semproto/analytics.hpp"
#include "semproto/baselines.hpp"
#include "semproto/inference.hpp"
#include "semproto/npm.hpp"
#include "semproto/spm.hpp"

namespace semproto {

/// What to run at every sweep point. Factories build a fresh policy per
/// episode so stateful baselines start clean.
struct ProtocolUnderTest {
    std::string name;
    std::function<std::unique_ptr<Policy>()> make_policy;
    std::int64_t model_bytes = 0;
    int cm_bits = 0;
    std::int64_t inference_flops = 0;
};

ProtocolUnderTest protocol_aloha(double p);
ProtocolUnderTest protocol_beb(int base, int w_max);
ProtocolUnderTest protocol_npm(const NPModel& model);
ProtocolUnderTest protocol_spm(const Spm& spm);

struct ExperimentConfig {
    std::string scenario = "sweep";
    std::vector<double> lambdas{0.5};      // applied to both UEs
    std::vector<double> eps_blocks{0.02};
    int repetitions = 10;
    EnvConfig base_env;
    std::uint64_t base_seed = 1;
    int workers = 1;

    void validate() const;
};

struct KpiRow {
    std::string protocol;
    double lambda = 0.0;
    double eps_block = 0.0;
    int rep = 0;
    std::uint64_t seed = 0;
    KpiReport kpi;
};

/// Sweeps protocols x lambda x eps x repetition, one episode per repetition
/// with a seed derived from (base_seed, point, rep). Rows come back in
/// deterministic sorted order regardless of the worker count.
std::vector<KpiRow> run_experiment(const ExperimentConfig& config,
                                   const std::vector<ProtocolUnderTest>& protocols);

std::string kpi_rows_to_csv(const std::vector<KpiRow>& rows);
/// Per (protocol, lambda, eps) means and standard deviations.
std::string kpi_summary_csv(const std::vector<KpiRow>& rows);

/// Minimal static SVG with one polyline per protocol; x = the swept variable,
/// y = the chosen KPI column mean.
std::string kpi_sweep_svg(const std::vector<KpiRow>& rows, const std::string& kpi,
                          const std::string& x_axis);

}  // namespace semproto
