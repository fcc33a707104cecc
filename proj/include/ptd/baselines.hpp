#pragma once

#include <utility>
#include <vector>

#include "ptd/corpus.hpp"
#include "ptd/decision.hpp"

namespace ptd::baselines {

struct RuleDecision {
    int label = 0;
    int last_len = 0;
    int reference_len = 0;
};

// Answer iff the last utterance is strictly longer than every preceding
// utterance (both speakers). A single-utterance history always answers.
RuleDecision atlu_decide(const std::vector<corpus::Utterance>& history);

// Wait iff the last utterance is strictly shorter than every preceding
// utterance. A single-utterance history answers.
RuleDecision ptsu_decide(const std::vector<corpus::Utterance>& history);

// History-only classifier: one text encoder over the history, a linear
// layer, softmax over {wait, answer}.
class HistoryClassifier {
public:
    HistoryClassifier(corpus::Vocabulary vocab, decision::DecisionConfig cfg);

    const corpus::Vocabulary& vocab() const { return vocab_; }
    const decision::DecisionConfig& config() const { return cfg_; }

    std::vector<std::pair<std::string, TensorPtr>> named_parameters();
    std::vector<TensorPtr> parameters();

    TensorPtr probabilities(Tape& tape, const std::vector<corpus::Utterance>& history,
                            Rng* dropout_rng) const;
    TensorPtr loss(Tape& tape, const corpus::DecisionSample& sample, Rng* dropout_rng) const;
    int predict(const std::vector<corpus::Utterance>& history) const;

private:
    corpus::Vocabulary vocab_;
    decision::DecisionConfig cfg_;
    TensorPtr emb_tok_, emb_turn_, emb_sub_, emb_spk_;
    decision::PathEncoder encoder_;
    TensorPtr w_, b_;

    TensorPtr logits(Tape& tape, const std::vector<corpus::Utterance>& history,
                     Rng* dropout_rng) const;
};

HistoryClassifier train_history_classifier(const std::vector<corpus::DecisionSample>& train,
                                           const std::vector<corpus::DecisionSample>& valid,
                                           const corpus::Vocabulary& vocab,
                                           const decision::DecisionConfig& cfg);

double evaluate_accuracy(const HistoryClassifier& model,
                         const std::vector<corpus::DecisionSample>& samples);

}  // namespace ptd::baselines
