#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ptd/corpus.hpp"
#include "ptd/rng.hpp"
#include "ptd/seq2seq.hpp"
#include "ptd/tensor.hpp"

namespace ptd::decision {

enum class EncoderKind { TextCnn, BiGru };

struct DecisionConfig {
    int d_tok = 64;
    int d_tag = 8;
    std::vector<int> filter_widths = {3, 4, 5};
    int n_filters = 100;
    int fusion_dim = 128;
    int classifier_hidden = 128;
    double dropout = 0.3;
    EncoderKind encoder = EncoderKind::TextCnn;
    int rnn_hidden = 128;
    corpus::TagCaps caps;
    int epochs = 20;
    int batch_size = 64;
    double learning_rate = 0.001;
    double lr_decay = 0.5;
    int patience = 6;
    uint64_t seed = 1;

    nlohmann::json to_json() const;
    static DecisionConfig from_json(const nlohmann::json& j);
};

// One convolutional (or bi-directional gated recurrent) text encoder
// producing a fixed-length feature vector from an L x d input matrix.
struct PathEncoder {
    EncoderKind kind = EncoderKind::TextCnn;
    std::vector<int> widths;
    std::vector<TensorPtr> conv_w;  // per width: n_f x (w*d)
    std::vector<TensorPtr> conv_b;  // per width: 1 x n_f
    seq2seq::GruCell fwd, bwd;
    int input_dim = 0;
    int output_dim = 0;

    static PathEncoder init(EncoderKind kind, int input_dim, const DecisionConfig& cfg, Rng& rng);
    TensorPtr encode(Tape& tape, const TensorPtr& input) const;  // 1 x output_dim
    void collect_parameters(const std::string& prefix,
                            std::vector<std::pair<std::string, TensorPtr>>& out) const;
};

struct DecisionSampleWithFutures {
    std::vector<corpus::Utterance> history;
    std::vector<std::string> r_a;  // simulated agent reply
    std::vector<std::string> r_u;  // simulated user supplement
    int label = 0;
    std::string sample_id;
};

struct Decision {
    int label = 0;  // 0 = wait, 1 = answer; tie at p = 0.5 resolves to wait
    double p_answer = 0.0;
    std::vector<std::string> r_u;
    std::vector<std::string> r_a;
};

// Three separately parameterised text encoders over the history and the
// two simulated futures, fused into answer/wait path vectors and a binary
// softmax classifier.
class DecisionModel {
public:
    DecisionModel(corpus::Vocabulary vocab, DecisionConfig cfg);

    const corpus::Vocabulary& vocab() const { return vocab_; }
    const DecisionConfig& config() const { return cfg_; }

    std::vector<std::pair<std::string, TensorPtr>> named_parameters();
    std::vector<TensorPtr> parameters();
    uint64_t parameter_hash() const;

    struct PathFeatures {
        TensorPtr history;      // C_x
        TensorPtr agent_path;   // C_a
        TensorPtr user_path;    // C_u
    };
    PathFeatures encode_path_features(Tape& tape, const std::vector<corpus::Utterance>& history,
                                      const std::vector<std::string>& r_a,
                                      const std::vector<std::string>& r_u, Rng* dropout_rng) const;
    TensorPtr classify(Tape& tape, const PathFeatures& features) const;  // P, 1x2
    TensorPtr loss(Tape& tape, const DecisionSampleWithFutures& sample, Rng* dropout_rng) const;
    Decision decide(const std::vector<corpus::Utterance>& history,
                    const std::vector<std::string>& r_a, const std::vector<std::string>& r_u) const;

private:
    corpus::Vocabulary vocab_;
    DecisionConfig cfg_;
    TensorPtr emb_tok_, emb_turn_, emb_sub_, emb_spk_;
    PathEncoder enc_x_, enc_a_, enc_u_;
    TensorPtr w1_, b1_, w2_, b2_, w3_, b3_, w4_, b4_;

    TensorPtr history_matrix(Tape& tape, const std::vector<corpus::Utterance>& history) const;
    TensorPtr future_matrix(Tape& tape, const std::vector<std::string>& tokens) const;
};

DecisionModel train_decision_model(const std::vector<DecisionSampleWithFutures>& train,
                                   const std::vector<DecisionSampleWithFutures>& valid,
                                   const corpus::Vocabulary& vocab, const DecisionConfig& cfg);

double evaluate_accuracy(const DecisionModel& model,
                         const std::vector<DecisionSampleWithFutures>& samples);

}  // namespace ptd::decision
