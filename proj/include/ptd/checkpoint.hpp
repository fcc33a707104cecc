#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ptd/baselines.hpp"
#include "ptd/decision.hpp"
#include "ptd/seq2seq.hpp"

namespace ptd::checkpoint {

// On-disk layout: 8-byte magic, u32 little-endian header length, JSON
// header (kind, config, vocabulary, tensor index), then all parameters
// as little-endian f32 in index order. Saving a freshly loaded model
// reproduces the file byte for byte.
constexpr char kMagic[8] = {'P', 'T', 'D', 'C', 'K', 'P', 'T', '1'};

constexpr const char* kKindPredictionUser = "prediction_user";
constexpr const char* kKindPredictionAgent = "prediction_agent";
constexpr const char* kKindDecision = "decision";
constexpr const char* kKindHistoryBaseline = "history_baseline";

struct TensorIndexEntry {
    std::string name;
    int rows = 0;
    int cols = 0;
    uint64_t offset = 0;  // bytes into the blob
};

struct CheckpointInfo {
    std::string kind;
    nlohmann::json config;
    std::vector<TensorIndexEntry> tensors;
    int vocab_size = 0;
};

// Header-only read; never touches the parameter blob.
CheckpointInfo inspect(const std::string& path);

void save_prediction_model(seq2seq::PredictionModel& model, const std::string& path);
seq2seq::PredictionModel load_prediction_model(const std::string& path);

void save_decision_model(decision::DecisionModel& model, const std::string& path);
decision::DecisionModel load_decision_model(const std::string& path);

void save_history_classifier(baselines::HistoryClassifier& model, const std::string& path);
baselines::HistoryClassifier load_history_classifier(const std::string& path);

}  // namespace ptd::checkpoint
