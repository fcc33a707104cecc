#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ptd/corpus.hpp"
#include "ptd/rng.hpp"
#include "ptd/tensor.hpp"

namespace ptd::seq2seq {

struct Seq2SeqConfig {
    int hidden = 128;
    int d_tok = 64;
    int d_tag = 8;
    corpus::TagCaps caps;
    int beam_size = 4;
    int max_gen_len = 30;
    int epochs = 30;
    int batch_size = 64;
    double learning_rate = 0.001;
    double lr_decay = 0.5;
    int patience = 6;
    uint64_t seed = 1;

    nlohmann::json to_json() const;
    static Seq2SeqConfig from_json(const nlohmann::json& j);
};

// Single-layer LSTM cell; gates packed [i f g o] along the 4H axis.
struct LstmCell {
    TensorPtr w;  // (in + hidden) x 4*hidden
    TensorPtr b;  // 1 x 4*hidden
    int input_dim = 0;
    int hidden_dim = 0;

    static LstmCell init(int input_dim, int hidden_dim, Rng& rng);
    // Returns {h', c'} for x: 1xin, h/c: 1xhidden.
    std::pair<TensorPtr, TensorPtr> step(Tape& tape, const TensorPtr& x, const TensorPtr& h,
                                         const TensorPtr& c) const;
};

// Gated recurrent cell, used by the recurrent decision-encoder variant.
struct GruCell {
    TensorPtr w_zr;  // (in + hidden) x 2*hidden
    TensorPtr b_zr;  // 1 x 2*hidden
    TensorPtr w_h;   // (in + hidden) x hidden
    TensorPtr b_h;   // 1 x hidden
    int input_dim = 0;
    int hidden_dim = 0;

    static GruCell init(int input_dim, int hidden_dim, Rng& rng);
    TensorPtr step(Tape& tape, const TensorPtr& x, const TensorPtr& h) const;
};

struct GenerationResult {
    std::vector<std::string> tokens;  // EOS stripped
    double log_prob = 0.0;
    std::vector<std::pair<std::vector<std::string>, double>> all_beams;  // sorted desc
};

// Tag-augmented LSTM encoder, LSTM decoder with multiplicative attention
// over encoder states, softmax output projection.
class PredictionModel {
public:
    PredictionModel(corpus::Role role, corpus::Vocabulary vocab, Seq2SeqConfig cfg);

    corpus::Role role() const { return role_; }
    const corpus::Vocabulary& vocab() const { return vocab_; }
    const Seq2SeqConfig& config() const { return cfg_; }

    std::vector<std::pair<std::string, TensorPtr>> named_parameters();
    std::vector<TensorPtr> parameters();
    uint64_t parameter_hash() const;

    TensorPtr teacher_forced_loss(Tape& tape, const corpus::PredictionSample& sample) const;
    double rescore(const std::vector<corpus::Utterance>& history,
                   const std::vector<std::string>& tokens) const;
    GenerationResult generate(const std::vector<corpus::Utterance>& history, int beam_size,
                              int max_len) const;
    GenerationResult generate(const std::vector<corpus::Utterance>& history) const {
        return generate(history, cfg_.beam_size, cfg_.max_gen_len);
    }

    struct Encoded {
        TensorPtr states;  // T x hidden
        TensorPtr h;
        TensorPtr c;
    };
    Encoded encode(Tape& tape, const std::vector<corpus::Utterance>& history) const;

private:
    corpus::Role role_;
    corpus::Vocabulary vocab_;
    Seq2SeqConfig cfg_;

    TensorPtr emb_tok_, emb_turn_, emb_sub_, emb_spk_;
    LstmCell encoder_, decoder_;
    TensorPtr attn_w_;             // hidden x hidden, multiplicative scoring
    TensorPtr comb_w_, comb_b_;    // 2*hidden x hidden, 1 x hidden
    TensorPtr proj_w_, proj_b_;    // hidden x |V|, 1 x |V|

    // One decode step: logits over the vocabulary plus next state.
    struct StepOut {
        TensorPtr logits;
        TensorPtr h;
        TensorPtr c;
    };
    StepOut decode_step(Tape& tape, const TensorPtr& enc_states, int input_token_id,
                        const TensorPtr& h, const TensorPtr& c) const;
};

PredictionModel train_prediction_model(const std::vector<corpus::PredictionSample>& train,
                                       const std::vector<corpus::PredictionSample>& valid,
                                       corpus::Role role, const corpus::Vocabulary& vocab,
                                       const Seq2SeqConfig& cfg);

// Mean per-sample teacher-forced loss; no gradients.
double evaluate_loss(const PredictionModel& model,
                     const std::vector<corpus::PredictionSample>& samples);

}  // namespace ptd::seq2seq
