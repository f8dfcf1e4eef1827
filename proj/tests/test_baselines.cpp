#include <doctest.h>

#include <semproto/baselines.hpp>
#include <semproto/errors.hpp>

using namespace semproto;

namespace {

EnvConfig paper_env() {
    EnvConfig env;
    env.lambda = {0.5, 0.5};
    env.b_max = 5;
    env.d_max = 12;
    env.t_max = 24;
    env.eps_block = 0.02;
    return env;
}

}  // namespace

TEST_CASE("aloha: p = 0 behaves like always-silent") {
    EnvConfig env = paper_env();
    SlottedAlohaPolicy policy(0.0);
    Rng rng(4);
    const EpisodeResult result = run_episode(policy, env, rng);
    CHECK(result.kpi.goodput == 0.0);
    CHECK(result.kpi.n_c == 0);
    for (const TraceRow& row : result.trace) {
        CHECK(row.actions[0] == UeAction::Silence);
        CHECK(row.actions[1] == UeAction::Silence);
    }
}

TEST_CASE("aloha: p = 1 with saturated buffers collides every cycle") {
    EnvConfig env = paper_env();
    env.lambda = {1.0, 1.0};
    env.d_max = env.t_max;
    SlottedAlohaPolicy policy(1.0);
    Rng rng(4);
    const EpisodeResult result = run_episode(policy, env, rng);
    CHECK(result.kpi.n_c == env.t_max);
    CHECK(result.kpi.goodput == 0.0);
}

TEST_CASE("aloha: never discards, parameter validated") {
    EnvConfig env = paper_env();
    SlottedAlohaPolicy policy(0.5);
    Rng rng(11);
    const EpisodeResult result = run_episode(policy, env, rng);
    CHECK(result.kpi.n_d == 0);
    CHECK_THROWS_AS(SlottedAlohaPolicy(1.5), ConfigError);
}

TEST_CASE("beb: window doubles per collision up to the cap") {
    BebPolicy policy(2, 16);
    EnvConfig env = paper_env();
    policy.begin_episode(env);

    CycleOutcome collision;
    collision.actions = {UeAction::Access, UeAction::Access};
    collision.events.collision = true;
    collision.observation = BsObservation::nack();

    int expected = 1;
    for (int k = 1; k <= 6; ++k) {
        policy.observe(collision);
        expected = std::min(2 * expected, 16);  // min(2^k, W_max)
        CHECK(policy.window(0) == expected);
        CHECK(policy.window(1) == expected);
    }

    // success resets the window
    CycleOutcome success;
    success.actions = {UeAction::Access, UeAction::Silence};
    success.observation = BsObservation::ack(0);
    policy.observe(success);
    CHECK(policy.window(0) == 1);
    CHECK(policy.window(1) == 16);
}

TEST_CASE("beb: block-error NACK does not grow the window") {
    BebPolicy policy(2, 16);
    policy.begin_episode(paper_env());
    CycleOutcome block_error;
    block_error.actions = {UeAction::Access, UeAction::Silence};
    block_error.events.block_error = true;
    block_error.observation = BsObservation::nack();
    policy.observe(block_error);
    CHECK(policy.window(0) == 1);
}

TEST_CASE("beb: without collisions it transmits persistently") {
    EnvConfig env = paper_env();
    env.lambda = {1.0, 0.0};  // only UE1 has traffic: no collisions possible
    env.eps_block = 0.0;
    env.d_max = env.t_max;
    BebPolicy policy(2, 16);
    Rng rng(8);
    const EpisodeResult result = run_episode(policy, env, rng);
    CHECK(result.kpi.n_c == 0);
    CHECK(result.kpi.n_r == env.t_max);  // every cycle delivers
    CHECK(result.kpi.n_d == 0);
}

TEST_CASE("beb: backoff waits within the drawn window") {
    EnvConfig env = paper_env();
    env.lambda = {1.0, 1.0};
    env.d_max = env.t_max;
    BebPolicy policy(2, 16);
    Rng rng(15);
    const EpisodeResult result = run_episode(policy, env, rng);
    // saturated symmetric load: backoff resolves some contention, so the
    // episode must contain both collisions and at least one success
    CHECK(result.kpi.n_c > 0);
    CHECK(result.kpi.n_c < env.t_max);
    CHECK(result.kpi.n_r > 0);
}
