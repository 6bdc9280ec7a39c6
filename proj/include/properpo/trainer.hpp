#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "properpo/dpo_pipeline.hpp"

namespace properpo {

/// Logits over states x actions; rows are softmax-normalized on demand.
struct TabularPolicy {
    std::size_t m = 0, n = 0;
    Mat logits;

    static TabularPolicy uniform(std::size_t m, std::size_t n);
    static TabularPolicy from_probs(const Mat& probs);
    [[nodiscard]] Vec probs(std::size_t x) const;
    [[nodiscard]] Mat prob_table() const;
};

struct TaskParams {
    std::size_t m = 1, n = 2;
    /// Ground-truth rewards, m rows of n. Empty draws integers in [-reward_span, reward_span].
    Mat rewards;
    int reward_span = 2;
    ScalarFn F_gen = ScalarFn(logistic);
    std::size_t samples = 1000;
};

struct SyntheticTask {
    std::size_t m = 0, n = 0;
    Mat rewards;
    ScalarFn F_gen;
    std::uint64_t seed = 0;
    std::vector<Preference> triples;
    std::size_t draws = 0;
    std::size_t abstentions = 0;
};

/// Deterministic uniform double in [0, 1) built from the top 53 bits.
double uniform01(std::mt19937_64& rng);

/// Draws (x, y, y') uniformly with y != y', then y wins with probability
/// F(r - r'), y' wins with F(r' - r), and the rest is abstention. Throws
/// ContractViolation when F_gen fails the F-condition.
SyntheticTask generate(const TaskParams& params, std::uint64_t seed);

/// Every ordered pair weighted by its exact choice probability.
std::vector<Preference> expected_preferences(const SyntheticTask& task);

enum class TrainMode { sampled, expected };

struct TrainOptions {
    std::size_t steps = 500;
    double lr = 0.5;
    TrainMode mode = TrainMode::expected;
    /// Reference policy rows; empty means uniform.
    Mat ref;
};

struct TraceRow {
    std::size_t step = 0;
    double objective = 0.0;
    double grad_norm = 0.0;
    double accuracy = 0.0;
};

struct TrainResult {
    TabularPolicy policy;
    std::vector<TraceRow> trace;
    std::size_t halvings = 0;
};

/// d objective / d logits, by the softmax chain rule through objective_grad_pi.
Mat objective_grad_logits(const PipelineSpec& spec, const TabularPolicy& policy, const Mat& ref,
                          const std::vector<Preference>& data);

/// Gradient descent on logits. A step that raises the objective is undone and
/// the learning rate halved. A NaN objective raises ConvergenceError.
TrainResult train(const PipelineSpec& spec, const SyntheticTask& task, const TrainOptions& opts = {});

struct Metrics {
    /// Sign agreement of recovered and true reward differences on pairs with
    /// |r - r'| >= margin (ties count one half).
    double accuracy = 0.0;
    /// Pearson correlation of recovered against true reward differences.
    double correlation = 0.0;
    double objective = 0.0;
    std::size_t pairs = 0;
};

Metrics evaluate(const PipelineSpec& spec, const TabularPolicy& policy, const SyntheticTask& task,
                 const Mat& ref = {}, double margin = 1.0);

std::string trace_csv(const std::vector<TraceRow>& trace);

}  // namespace properpo
