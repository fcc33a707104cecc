#include "ptd/decision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ptd/optimizer.hpp"

namespace ptd::decision {

using corpus::Utterance;
using corpus::Vocabulary;
using nlohmann::json;

namespace {

TensorPtr init_uniform(int rows, int cols, Rng& rng, double range = 0.08) {
    auto t = make_tensor(rows, cols, true);
    for (auto& v : t->data) v = rng.uniform(-range, range);
    return t;
}

// Kaiming-style scaled normal for convolution filters.
TensorPtr init_conv(int rows, int cols, int fan_in, Rng& rng) {
    auto t = make_tensor(rows, cols, true);
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : t->data) v = rng.normal() * scale;
    return t;
}

}  // namespace

json DecisionConfig::to_json() const {
    json j;
    j["d_tok"] = d_tok;
    j["d_tag"] = d_tag;
    j["filter_widths"] = filter_widths;
    j["n_filters"] = n_filters;
    j["fusion_dim"] = fusion_dim;
    j["classifier_hidden"] = classifier_hidden;
    j["dropout"] = dropout;
    j["encoder"] = encoder == EncoderKind::TextCnn ? "textcnn" : "bigru";
    j["rnn_hidden"] = rnn_hidden;
    j["max_turn"] = caps.max_turn;
    j["max_sub_turn"] = caps.max_sub_turn;
    j["max_len"] = caps.max_len;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["learning_rate"] = learning_rate;
    j["lr_decay"] = lr_decay;
    j["patience"] = patience;
    j["seed"] = seed;
    return j;
}

DecisionConfig DecisionConfig::from_json(const json& j) {
    DecisionConfig c;
    c.d_tok = j.value("d_tok", c.d_tok);
    c.d_tag = j.value("d_tag", c.d_tag);
    if (j.contains("filter_widths")) {
        c.filter_widths = j["filter_widths"].get<std::vector<int>>();
    }
    c.n_filters = j.value("n_filters", c.n_filters);
    c.fusion_dim = j.value("fusion_dim", c.fusion_dim);
    c.classifier_hidden = j.value("classifier_hidden", c.classifier_hidden);
    c.dropout = j.value("dropout", c.dropout);
    const std::string enc = j.value("encoder", std::string("textcnn"));
    if (enc == "textcnn") {
        c.encoder = EncoderKind::TextCnn;
    } else if (enc == "bigru") {
        c.encoder = EncoderKind::BiGru;
    } else {
        throw DataError("decision config: unknown encoder '" + enc + "'");
    }
    c.rnn_hidden = j.value("rnn_hidden", c.rnn_hidden);
    c.caps.max_turn = j.value("max_turn", c.caps.max_turn);
    c.caps.max_sub_turn = j.value("max_sub_turn", c.caps.max_sub_turn);
    c.caps.max_len = j.value("max_len", c.caps.max_len);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.lr_decay = j.value("lr_decay", c.lr_decay);
    c.patience = j.value("patience", c.patience);
    c.seed = j.value("seed", c.seed);
    return c;
}

// ---------------------------------------------------------------------------
// PathEncoder

PathEncoder PathEncoder::init(EncoderKind kind, int input_dim, const DecisionConfig& cfg,
                              Rng& rng) {
    PathEncoder e;
    e.kind = kind;
    e.input_dim = input_dim;
    if (kind == EncoderKind::TextCnn) {
        e.widths = cfg.filter_widths;
        for (int w : e.widths) {
            e.conv_w.push_back(init_conv(cfg.n_filters, w * input_dim, w * input_dim, rng));
            e.conv_b.push_back(make_tensor(1, cfg.n_filters, true));
        }
        e.output_dim = static_cast<int>(e.widths.size()) * cfg.n_filters;
    } else {
        e.fwd = seq2seq::GruCell::init(input_dim, cfg.rnn_hidden, rng);
        e.bwd = seq2seq::GruCell::init(input_dim, cfg.rnn_hidden, rng);
        e.output_dim = 2 * cfg.rnn_hidden;
    }
    return e;
}

TensorPtr PathEncoder::encode(Tape& tape, const TensorPtr& input) const {
    if (kind == EncoderKind::TextCnn) {
        std::vector<TensorPtr> pooled;
        for (size_t k = 0; k < widths.size(); ++k) {
            auto fmap = tape.relu(tape.conv1d(input, conv_w[k], conv_b[k], widths[k]));
            pooled.push_back(tape.max_over_time_pool(fmap));
        }
        return tape.concat(pooled, 1);
    }
    const int H = fwd.hidden_dim;
    TensorPtr hf = make_tensor(1, H);
    TensorPtr hb = make_tensor(1, H);
    const int L = input->rows;
    for (int t = 0; t < L; ++t) {
        hf = fwd.step(tape, tape.slice(input, t, 1, 0, input->cols), hf);
    }
    for (int t = L - 1; t >= 0; --t) {
        hb = bwd.step(tape, tape.slice(input, t, 1, 0, input->cols), hb);
    }
    return tape.concat({hf, hb}, 1);
}

void PathEncoder::collect_parameters(const std::string& prefix,
                                     std::vector<std::pair<std::string, TensorPtr>>& out) const {
    if (kind == EncoderKind::TextCnn) {
        for (size_t k = 0; k < widths.size(); ++k) {
            out.emplace_back(prefix + ".conv_w" + std::to_string(widths[k]), conv_w[k]);
            out.emplace_back(prefix + ".conv_b" + std::to_string(widths[k]), conv_b[k]);
        }
    } else {
        out.emplace_back(prefix + ".fwd_w_zr", fwd.w_zr);
        out.emplace_back(prefix + ".fwd_b_zr", fwd.b_zr);
        out.emplace_back(prefix + ".fwd_w_h", fwd.w_h);
        out.emplace_back(prefix + ".fwd_b_h", fwd.b_h);
        out.emplace_back(prefix + ".bwd_w_zr", bwd.w_zr);
        out.emplace_back(prefix + ".bwd_b_zr", bwd.b_zr);
        out.emplace_back(prefix + ".bwd_w_h", bwd.w_h);
        out.emplace_back(prefix + ".bwd_b_h", bwd.b_h);
    }
}

// ---------------------------------------------------------------------------
// DecisionModel

DecisionModel::DecisionModel(Vocabulary vocab, DecisionConfig cfg)
    : vocab_(std::move(vocab)), cfg_(std::move(cfg)) {
    Rng rng(cfg_.seed ^ 0x64656369ull);
    const int V = vocab_.size();
    emb_tok_ = init_uniform(V, cfg_.d_tok, rng);
    emb_turn_ = init_uniform(cfg_.caps.max_turn + 1, cfg_.d_tag, rng);
    emb_sub_ = init_uniform(cfg_.caps.max_sub_turn + 1, cfg_.d_tag, rng);
    emb_spk_ = init_uniform(2, cfg_.d_tag, rng);
    const int d_hist = cfg_.d_tok + 3 * cfg_.d_tag;
    enc_x_ = PathEncoder::init(cfg_.encoder, d_hist, cfg_, rng);
    enc_a_ = PathEncoder::init(cfg_.encoder, cfg_.d_tok, cfg_, rng);
    enc_u_ = PathEncoder::init(cfg_.encoder, cfg_.d_tok, cfg_, rng);
    const int F = enc_x_.output_dim;
    w1_ = init_uniform(2 * F, cfg_.fusion_dim, rng);
    b1_ = make_tensor(1, cfg_.fusion_dim, true);
    w2_ = init_uniform(2 * F, cfg_.fusion_dim, rng);
    b2_ = make_tensor(1, cfg_.fusion_dim, true);
    w3_ = init_uniform(2 * cfg_.fusion_dim, cfg_.classifier_hidden, rng);
    b3_ = make_tensor(1, cfg_.classifier_hidden, true);
    w4_ = init_uniform(cfg_.classifier_hidden, 2, rng);
    b4_ = make_tensor(1, 2, true);
}

std::vector<std::pair<std::string, TensorPtr>> DecisionModel::named_parameters() {
    std::vector<std::pair<std::string, TensorPtr>> out = {
        {"emb_tok", emb_tok_}, {"emb_turn", emb_turn_}, {"emb_sub", emb_sub_},
        {"emb_spk", emb_spk_},
    };
    enc_x_.collect_parameters("enc_x", out);
    enc_a_.collect_parameters("enc_a", out);
    enc_u_.collect_parameters("enc_u", out);
    out.insert(out.end(), {{"w1", w1_}, {"b1", b1_}, {"w2", w2_}, {"b2", b2_},
                           {"w3", w3_}, {"b3", b3_}, {"w4", w4_}, {"b4", b4_}});
    return out;
}

std::vector<TensorPtr> DecisionModel::parameters() {
    std::vector<TensorPtr> out;
    for (auto& [name, p] : named_parameters()) out.push_back(p);
    return out;
}

uint64_t DecisionModel::parameter_hash() const {
    uint64_t h = fnv1a("decision");
    for (const auto& [name, p] : const_cast<DecisionModel*>(this)->named_parameters()) {
        h = fnv1a(name, h);
        h = fnv1a_bytes(p->data.data(), p->data.size() * sizeof(double), h);
    }
    return h;
}

TensorPtr DecisionModel::history_matrix(Tape& tape,
                                        const std::vector<Utterance>& history) const {
    auto seq = corpus::encode_history(history, vocab_, cfg_.caps);
    const int max_width = cfg_.encoder == EncoderKind::TextCnn
                              ? *std::max_element(cfg_.filter_widths.begin(),
                                                  cfg_.filter_widths.end())
                              : 1;
    std::vector<int> tok_ids, turn_ids, sub_ids, spk_ids;
    // left-pad short sequences with PAD so every filter width fits
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
    return tape.concat({tape.embedding_lookup(emb_tok_, tok_ids),
                        tape.embedding_lookup(emb_turn_, turn_ids),
                        tape.embedding_lookup(emb_sub_, sub_ids),
                        tape.embedding_lookup(emb_spk_, spk_ids)},
                       1);
}

TensorPtr DecisionModel::future_matrix(Tape& tape, const std::vector<std::string>& tokens) const {
    const int max_width = cfg_.encoder == EncoderKind::TextCnn
                              ? *std::max_element(cfg_.filter_widths.begin(),
                                                  cfg_.filter_widths.end())
                              : 1;
    std::vector<int> ids;
    for (const auto& t : tokens) ids.push_back(vocab_.id(t));
    if (static_cast<int>(ids.size()) > cfg_.caps.max_len) {
        ids.erase(ids.begin(), ids.end() - cfg_.caps.max_len);
    }
    while (static_cast<int>(ids.size()) < max_width) ids.insert(ids.begin(), Vocabulary::kPad);
    return tape.embedding_lookup(emb_tok_, ids);
}

DecisionModel::PathFeatures DecisionModel::encode_path_features(
    Tape& tape, const std::vector<Utterance>& history, const std::vector<std::string>& r_a,
    const std::vector<std::string>& r_u, Rng* dropout_rng) const {
    if (history.empty()) throw Error("encode_path_features: empty history");
    PathFeatures f;
    f.history = enc_x_.encode(tape, history_matrix(tape, history));
    f.agent_path = enc_a_.encode(tape, future_matrix(tape, r_a));
    f.user_path = enc_u_.encode(tape, future_matrix(tape, r_u));
    if (dropout_rng != nullptr && cfg_.dropout > 0.0) {
        f.history = tape.dropout(f.history, cfg_.dropout, *dropout_rng);
        f.agent_path = tape.dropout(f.agent_path, cfg_.dropout, *dropout_rng);
        f.user_path = tape.dropout(f.user_path, cfg_.dropout, *dropout_rng);
    }
    return f;
}

TensorPtr DecisionModel::classify(Tape& tape, const PathFeatures& f) const {
    auto d_a = tape.add(tape.matmul(tape.concat({f.history, f.agent_path}, 1), w1_), b1_);
    auto d_u = tape.add(tape.matmul(tape.concat({f.history, f.user_path}, 1), w2_), b2_);
    auto hidden = tape.relu(tape.add(tape.matmul(tape.concat({d_a, d_u}, 1), w3_), b3_));
    auto logits = tape.add(tape.matmul(hidden, w4_), b4_);
    return tape.softmax(logits);
}

TensorPtr DecisionModel::loss(Tape& tape, const DecisionSampleWithFutures& sample,
                              Rng* dropout_rng) const {
    if (sample.label != 0 && sample.label != 1) {
        throw Error("decision loss: label must be 0 or 1, got " + std::to_string(sample.label));
    }
    auto f = encode_path_features(tape, sample.history, sample.r_a, sample.r_u, dropout_rng);
    auto d_a = tape.add(tape.matmul(tape.concat({f.history, f.agent_path}, 1), w1_), b1_);
    auto d_u = tape.add(tape.matmul(tape.concat({f.history, f.user_path}, 1), w2_), b2_);
    auto hidden = tape.relu(tape.add(tape.matmul(tape.concat({d_a, d_u}, 1), w3_), b3_));
    auto logits = tape.add(tape.matmul(hidden, w4_), b4_);
    return tape.cross_entropy(logits, {sample.label});
}

Decision DecisionModel::decide(const std::vector<Utterance>& history,
                               const std::vector<std::string>& r_a,
                               const std::vector<std::string>& r_u) const {
    if (history.empty()) throw Error("decide: empty history");
    if (history.back().speaker_id != corpus::kUserSpeaker) {
        throw Error("decide: history must end with a user utterance");
    }
    Tape tape;
    auto p = classify(tape, encode_path_features(tape, history, r_a, r_u, nullptr));
    Decision d;
    d.p_answer = p->data[1];
    d.label = d.p_answer > 0.5 ? 1 : 0;  // tie resolves to wait
    d.r_a = r_a;
    d.r_u = r_u;
    return d;
}

// ---------------------------------------------------------------------------
// Training

double evaluate_accuracy(const DecisionModel& model,
                         const std::vector<DecisionSampleWithFutures>& samples) {
    if (samples.empty()) return 0.0;
    int64_t correct = 0;
    for (const auto& s : samples) {
        Tape tape;
        auto p = model.classify(
            tape, model.encode_path_features(tape, s.history, s.r_a, s.r_u, nullptr));
        const int pred = p->data[1] > 0.5 ? 1 : 0;
        if (pred == s.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

DecisionModel train_decision_model(const std::vector<DecisionSampleWithFutures>& train,
                                   const std::vector<DecisionSampleWithFutures>& valid,
                                   const Vocabulary& vocab, const DecisionConfig& cfg) {
    if (train.empty()) throw Error("train_decision_model: empty training set");
    for (const auto& s : train) {
        if (s.label != 0 && s.label != 1) {
            throw Error("train_decision_model: label must be 0 or 1");
        }
    }
    DecisionModel model(vocab, cfg);
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
                // one decay per plateau; halving every flat epoch freezes
                // the model before it escapes the initial 50%-accuracy zone
                if (bad_epochs == 0) opt.decay_lr();
                if (++bad_epochs >= cfg.patience) break;
            }
        }
    }
    if (!best_params.empty()) {
        for (size_t i = 0; i < params.size(); ++i) params[i]->data = best_params[i];
    }
    return model;
}

}  // namespace ptd::decision
