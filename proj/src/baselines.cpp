#include "ptd/baselines.hpp"

#include <algorithm>

#include "ptd/optimizer.hpp"

namespace ptd::baselines {

using corpus::DecisionSample;
using corpus::Utterance;
using corpus::Vocabulary;
using decision::DecisionConfig;
using decision::EncoderKind;
using decision::PathEncoder;

namespace {

void check_history(const std::vector<Utterance>& history, const char* who) {
    if (history.empty()) throw Error(std::string(who) + ": empty history");
    if (history.back().speaker_id != corpus::kUserSpeaker) {
        throw Error(std::string(who) + ": history must end with a user utterance");
    }
}

TensorPtr init_uniform(int rows, int cols, Rng& rng, double range = 0.08) {
    auto t = make_tensor(rows, cols, true);
    for (auto& v : t->data) v = rng.uniform(-range, range);
    return t;
}

}  // namespace

RuleDecision atlu_decide(const std::vector<Utterance>& history) {
    check_history(history, "atlu_decide");
    RuleDecision d;
    d.last_len = static_cast<int>(history.back().tokens.size());
    d.reference_len = 0;
    for (size_t i = 0; i + 1 < history.size(); ++i) {
        d.reference_len = std::max(d.reference_len, static_cast<int>(history[i].tokens.size()));
    }
    d.label = d.last_len > d.reference_len ? 1 : 0;
    return d;
}

RuleDecision ptsu_decide(const std::vector<Utterance>& history) {
    check_history(history, "ptsu_decide");
    RuleDecision d;
    d.last_len = static_cast<int>(history.back().tokens.size());
    if (history.size() == 1) {
        d.reference_len = 0;
        d.label = 1;  // nothing to compare against: answer
        return d;
    }
    d.reference_len = static_cast<int>(history[0].tokens.size());
    for (size_t i = 1; i + 1 < history.size(); ++i) {
        d.reference_len = std::min(d.reference_len, static_cast<int>(history[i].tokens.size()));
    }
    d.label = d.last_len < d.reference_len ? 0 : 1;
    return d;
}

// ---------------------------------------------------------------------------
// HistoryClassifier

HistoryClassifier::HistoryClassifier(Vocabulary vocab, DecisionConfig cfg)
    : vocab_(std::move(vocab)), cfg_(std::move(cfg)) {
    Rng rng(cfg_.seed ^ 0x68697374ull);
    emb_tok_ = init_uniform(vocab_.size(), cfg_.d_tok, rng);
    emb_turn_ = init_uniform(cfg_.caps.max_turn + 1, cfg_.d_tag, rng);
    emb_sub_ = init_uniform(cfg_.caps.max_sub_turn + 1, cfg_.d_tag, rng);
    emb_spk_ = init_uniform(2, cfg_.d_tag, rng);
    encoder_ = PathEncoder::init(cfg_.encoder, cfg_.d_tok + 3 * cfg_.d_tag, cfg_, rng);
    w_ = init_uniform(encoder_.output_dim, 2, rng);
    b_ = make_tensor(1, 2, true);
}

std::vector<std::pair<std::string, TensorPtr>> HistoryClassifier::named_parameters() {
    std::vector<std::pair<std::string, TensorPtr>> out = {
        {"emb_tok", emb_tok_}, {"emb_turn", emb_turn_}, {"emb_sub", emb_sub_},
        {"emb_spk", emb_spk_},
    };
    encoder_.collect_parameters("enc", out);
    out.emplace_back("w", w_);
    out.emplace_back("b", b_);
    return out;
}

std::vector<TensorPtr> HistoryClassifier::parameters() {
    std::vector<TensorPtr> out;
    for (auto& [name, p] : named_parameters()) out.push_back(p);
    return out;
}

TensorPtr HistoryClassifier::logits(Tape& tape, const std::vector<Utterance>& history,
                                    Rng* dropout_rng) const {
    auto seq = corpus::encode_history(history, vocab_, cfg_.caps);
    const int max_width =
        cfg_.encoder == EncoderKind::TextCnn
            ? *std::max_element(cfg_.filter_widths.begin(), cfg_.filter_widths.end())
            : 1;
    std::vector<int> tok_ids, turn_ids, sub_ids, spk_ids;
    for (int i = static_cast<int>(seq.size()); i < max_width; ++i) {
        tok_ids.push_back(Vocabulary::kPad);
        turn_ids.push_back(0);
        sub_ids.push_back(0);
        spk_ids.push_back(0);
    }
    for (const auto& e : seq) {
        tok_ids.push_back(e.token_id);
        turn_ids.push_back(e.turn_id);
        sub_ids.push_back(e.sub_turn_id);
        spk_ids.push_back(e.speaker_id);
    }
    auto input = tape.concat({tape.embedding_lookup(emb_tok_, tok_ids),
                              tape.embedding_lookup(emb_turn_, turn_ids),
                              tape.embedding_lookup(emb_sub_, sub_ids),
                              tape.embedding_lookup(emb_spk_, spk_ids)},
                             1);
    auto features = encoder_.encode(tape, input);
    if (dropout_rng != nullptr && cfg_.dropout > 0.0) {
        features = tape.dropout(features, cfg_.dropout, *dropout_rng);
    }
    return tape.add(tape.matmul(features, w_), b_);
}

TensorPtr HistoryClassifier::probabilities(Tape& tape, const std::vector<Utterance>& history,
                                           Rng* dropout_rng) const {
    return tape.softmax(logits(tape, history, dropout_rng));
}

TensorPtr HistoryClassifier::loss(Tape& tape, const DecisionSample& sample,
                                  Rng* dropout_rng) const {
    if (sample.label != 0 && sample.label != 1) {
        throw Error("history classifier: label must be 0 or 1");
    }
    return tape.cross_entropy(logits(tape, sample.history, dropout_rng), {sample.label});
}

int HistoryClassifier::predict(const std::vector<Utterance>& history) const {
    Tape tape;
    auto p = probabilities(tape, history, nullptr);
    return p->data[1] > 0.5 ? 1 : 0;
}

double evaluate_accuracy(const HistoryClassifier& model,
                         const std::vector<DecisionSample>& samples) {
    if (samples.empty()) return 0.0;
    int64_t correct = 0;
    for (const auto& s : samples) {
        if (model.predict(s.history) == s.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

HistoryClassifier train_history_classifier(const std::vector<DecisionSample>& train,
                                           const std::vector<DecisionSample>& valid,
                                           const Vocabulary& vocab, const DecisionConfig& cfg) {
    if (train.empty()) throw Error("train_history_classifier: empty training set");
    for (const auto& s : train) {
        if (s.label != 0 && s.label != 1) {
            throw Error("train_history_classifier: label must be 0 or 1");
        }
    }
    HistoryClassifier model(vocab, cfg);
    auto params = model.parameters();
    Optimizer opt({Optimizer::Kind::Adam, cfg.learning_rate, cfg.lr_decay});
    opt.add_parameters(params);
    opt.zero_grad();

    Rng shuffle_rng(cfg.seed ^ 0x5eedull);
    Rng dropout_rng(cfg.seed ^ 0xd20ull);
    double best_acc = -1.0;
    std::vector<std::vector<double>> best_params;
    int bad_epochs = 0;

    std::vector<size_t> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        size_t batch_n = 0;
        auto flush = [&]() {
            if (batch_n == 0) return;
            const double inv = 1.0 / static_cast<double>(batch_n);
            for (auto& p : params) {
                for (auto& g : p->grad) g *= inv;
            }
            opt.step();
            batch_n = 0;
        };
        for (size_t idx : order) {
            Tape tape;
            tape.backward(model.loss(tape, train[idx], &dropout_rng));
            if (++batch_n >= static_cast<size_t>(cfg.batch_size)) flush();
        }
        flush();

        if (!valid.empty()) {
            const double acc = evaluate_accuracy(model, valid);
            if (acc > best_acc) {
                best_acc = acc;
                best_params.clear();
                for (auto& p : params) best_params.push_back(p->data);
                bad_epochs = 0;
            } else {
                if (bad_epochs == 0) opt.decay_lr();  // one decay per plateau
                if (++bad_epochs >= cfg.patience) break;
            }
        }
    }
    if (!best_params.empty()) {
        for (size_t i = 0; i < params.size(); ++i) params[i]->data = best_params[i];
    }
    return model;
}

}  // namespace ptd::baselines
