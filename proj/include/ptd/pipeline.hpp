#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ptd/corpus.hpp"
#include "ptd/decision.hpp"
#include "ptd/seq2seq.hpp"

namespace ptd::pipeline {

struct ExperimentConfig {
    std::string train_path;
    std::string valid_path;
    std::string test_path;
    std::string out_dir = "out";
    int min_freq = 1;
    uint64_t seed = 1;
    seq2seq::Seq2SeqConfig prediction;
    decision::DecisionConfig decision;

    // Pushes the top-level seed into both sub-configs.
    void apply_seed(uint64_t s);

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_file(const std::string& path);
};

struct GenerationRecord {
    std::string sample_id;
    std::vector<std::string> r_u;
    std::vector<std::string> r_a;
    double logp_u = 0.0;
    double logp_a = 0.0;
};

std::vector<GenerationRecord> read_generations(const std::string& path);
void write_generations(const std::vector<GenerationRecord>& records, const std::string& path);

// Simulated futures for every decision sample, reusing any records already
// present at cache_path (keyed by sample id); the file is rewritten in
// sample order. Pass an empty cache_path to skip the cache entirely.
std::vector<GenerationRecord> materialize_generations(
    const seq2seq::PredictionModel& user_model, const seq2seq::PredictionModel& agent_model,
    const std::vector<corpus::DecisionSample>& samples, const std::string& cache_path);

std::vector<decision::DecisionSampleWithFutures> attach_futures(
    const std::vector<corpus::DecisionSample>& samples,
    const std::vector<GenerationRecord>& generations);

struct RunResult {
    std::string user_ckpt_path;
    std::string agent_ckpt_path;
    std::string decision_ckpt_path;
    nlohmann::json report;
};

// Trains both prediction models, freezes them, materializes the simulated
// futures, trains the decision model, and reports test classification plus
// the cross-role generation-quality matrix. Checkpoints and the report are
// written under config.out_dir.
RunResult run_training(const ExperimentConfig& config);

// Loads the three checkpoints (vocabulary hashes must agree), simulates
// both futures for the history, and classifies.
decision::Decision infer(const std::string& user_ckpt_path, const std::string& agent_ckpt_path,
                         const std::string& decision_ckpt_path,
                         const std::vector<corpus::Utterance>& history);

// Classification report and generation-quality matrix on one corpus file.
nlohmann::json evaluate(const std::string& user_ckpt_path, const std::string& agent_ckpt_path,
                        const std::string& decision_ckpt_path, const std::string& corpus_path);

}  // namespace ptd::pipeline
