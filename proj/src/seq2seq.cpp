#include "ptd/seq2seq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ptd/optimizer.hpp"

namespace ptd::seq2seq {

using corpus::Role;
using corpus::Utterance;
using corpus::Vocabulary;
using nlohmann::json;

namespace {

TensorPtr init_uniform(int rows, int cols, Rng& rng, double range = 0.08) {
    auto t = make_tensor(rows, cols, true);
    for (auto& v : t->data) v = rng.uniform(-range, range);
    return t;
}

}  // namespace

json Seq2SeqConfig::to_json() const {
    json j;
    j["hidden"] = hidden;
    j["d_tok"] = d_tok;
    j["d_tag"] = d_tag;
    j["max_turn"] = caps.max_turn;
    j["max_sub_turn"] = caps.max_sub_turn;
    j["max_len"] = caps.max_len;
    j["beam_size"] = beam_size;
    j["max_gen_len"] = max_gen_len;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["learning_rate"] = learning_rate;
    j["lr_decay"] = lr_decay;
    j["patience"] = patience;
    j["seed"] = seed;
    return j;
}

Seq2SeqConfig Seq2SeqConfig::from_json(const json& j) {
    Seq2SeqConfig c;
    c.hidden = j.value("hidden", c.hidden);
    c.d_tok = j.value("d_tok", c.d_tok);
    c.d_tag = j.value("d_tag", c.d_tag);
    c.caps.max_turn = j.value("max_turn", c.caps.max_turn);
    c.caps.max_sub_turn = j.value("max_sub_turn", c.caps.max_sub_turn);
    c.caps.max_len = j.value("max_len", c.caps.max_len);
    c.beam_size = j.value("beam_size", c.beam_size);
    c.max_gen_len = j.value("max_gen_len", c.max_gen_len);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.lr_decay = j.value("lr_decay", c.lr_decay);
    c.patience = j.value("patience", c.patience);
    c.seed = j.value("seed", c.seed);
    return c;
}

// ---------------------------------------------------------------------------
// Cells

LstmCell LstmCell::init(int input_dim, int hidden_dim, Rng& rng) {
    LstmCell cell;
    cell.input_dim = input_dim;
    cell.hidden_dim = hidden_dim;
    cell.w = init_uniform(input_dim + hidden_dim, 4 * hidden_dim, rng);
    cell.b = make_tensor(1, 4 * hidden_dim, true);
    // forget-gate bias starts at 1
    for (int j = hidden_dim; j < 2 * hidden_dim; ++j) cell.b->data[j] = 1.0;
    return cell;
}

std::pair<TensorPtr, TensorPtr> LstmCell::step(Tape& tape, const TensorPtr& x, const TensorPtr& h,
                                               const TensorPtr& c) const {
    const int H = hidden_dim;
    auto z = tape.add(tape.matmul(tape.concat({x, h}, 1), w), b);
    auto i = tape.sigmoid(tape.slice(z, 0, 1, 0, H));
    auto f = tape.sigmoid(tape.slice(z, 0, 1, H, H));
    auto g = tape.tanh(tape.slice(z, 0, 1, 2 * H, H));
    auto o = tape.sigmoid(tape.slice(z, 0, 1, 3 * H, H));
    auto c_next = tape.add(tape.elementwise_mul(f, c), tape.elementwise_mul(i, g));
    auto h_next = tape.elementwise_mul(o, tape.tanh(c_next));
    return {h_next, c_next};
}

GruCell GruCell::init(int input_dim, int hidden_dim, Rng& rng) {
    GruCell cell;
    cell.input_dim = input_dim;
    cell.hidden_dim = hidden_dim;
    cell.w_zr = init_uniform(input_dim + hidden_dim, 2 * hidden_dim, rng);
    cell.b_zr = make_tensor(1, 2 * hidden_dim, true);
    cell.w_h = init_uniform(input_dim + hidden_dim, hidden_dim, rng);
    cell.b_h = make_tensor(1, hidden_dim, true);
    return cell;
}

TensorPtr GruCell::step(Tape& tape, const TensorPtr& x, const TensorPtr& h) const {
    const int H = hidden_dim;
    auto zr = tape.sigmoid(tape.add(tape.matmul(tape.concat({x, h}, 1), w_zr), b_zr));
    auto z = tape.slice(zr, 0, 1, 0, H);
    auto r = tape.slice(zr, 0, 1, H, H);
    auto h_cand = tape.tanh(
        tape.add(tape.matmul(tape.concat({x, tape.elementwise_mul(r, h)}, 1), w_h), b_h));
    // h' = (1 - z) * h + z * h_cand
    auto one_minus_z = tape.add(tape.scale(z, -1.0), make_tensor(1, H, std::vector<double>(H, 1.0)));
    return tape.add(tape.elementwise_mul(one_minus_z, h), tape.elementwise_mul(z, h_cand));
}

// ---------------------------------------------------------------------------
// PredictionModel

PredictionModel::PredictionModel(Role role, Vocabulary vocab, Seq2SeqConfig cfg)
    : role_(role), vocab_(std::move(vocab)), cfg_(cfg) {
    Rng rng(cfg_.seed ^ (role == Role::User ? 0x75736572ull : 0x6167656eull));
    const int V = vocab_.size();
    const int H = cfg_.hidden;
    emb_tok_ = init_uniform(V, cfg_.d_tok, rng);
    emb_turn_ = init_uniform(cfg_.caps.max_turn + 1, cfg_.d_tag, rng);
    emb_sub_ = init_uniform(cfg_.caps.max_sub_turn + 1, cfg_.d_tag, rng);
    emb_spk_ = init_uniform(2, cfg_.d_tag, rng);
    encoder_ = LstmCell::init(cfg_.d_tok + 3 * cfg_.d_tag, H, rng);
    decoder_ = LstmCell::init(cfg_.d_tok, H, rng);
    attn_w_ = init_uniform(H, H, rng);
    comb_w_ = init_uniform(2 * H, H, rng);
    comb_b_ = make_tensor(1, H, true);
    proj_w_ = init_uniform(H, V, rng);
    proj_b_ = make_tensor(1, V, true);
}

std::vector<std::pair<std::string, TensorPtr>> PredictionModel::named_parameters() {
    return {
        {"emb_tok", emb_tok_},       {"emb_turn", emb_turn_}, {"emb_sub", emb_sub_},
        {"emb_spk", emb_spk_},       {"enc_w", encoder_.w},   {"enc_b", encoder_.b},
        {"dec_w", decoder_.w},       {"dec_b", decoder_.b},   {"attn_w", attn_w_},
        {"comb_w", comb_w_},         {"comb_b", comb_b_},     {"proj_w", proj_w_},
        {"proj_b", proj_b_},
    };
}

std::vector<TensorPtr> PredictionModel::parameters() {
    std::vector<TensorPtr> out;
    for (auto& [name, p] : named_parameters()) out.push_back(p);
    return out;
}

uint64_t PredictionModel::parameter_hash() const {
    uint64_t h = fnv1a("prediction");
    for (const auto& [name, p] : const_cast<PredictionModel*>(this)->named_parameters()) {
        h = fnv1a(name, h);
        h = fnv1a_bytes(p->data.data(), p->data.size() * sizeof(double), h);
    }
    return h;
}

PredictionModel::Encoded PredictionModel::encode(Tape& tape,
                                                 const std::vector<Utterance>& history) const {
    auto seq = corpus::encode_history(history, vocab_, cfg_.caps);
    std::vector<int> tok_ids, turn_ids, sub_ids, spk_ids;
    for (const auto& e : seq) {
        tok_ids.push_back(e.token_id);
        turn_ids.push_back(e.turn_id);
        sub_ids.push_back(e.sub_turn_id);
        spk_ids.push_back(e.speaker_id);
    }
    auto inputs = tape.concat({tape.embedding_lookup(emb_tok_, tok_ids),
                               tape.embedding_lookup(emb_turn_, turn_ids),
                               tape.embedding_lookup(emb_sub_, sub_ids),
                               tape.embedding_lookup(emb_spk_, spk_ids)},
                              1);
    const int T = inputs->rows;
    const int H = cfg_.hidden;
    TensorPtr h = make_tensor(1, H);
    TensorPtr c = make_tensor(1, H);
    std::vector<TensorPtr> states;
    states.reserve(T);
    for (int t = 0; t < T; ++t) {
        auto x = tape.slice(inputs, t, 1, 0, inputs->cols);
        auto [h2, c2] = encoder_.step(tape, x, h, c);
        h = h2;
        c = c2;
        states.push_back(h);
    }
    return {tape.concat(states, 0), h, c};
}

PredictionModel::StepOut PredictionModel::decode_step(Tape& tape, const TensorPtr& enc_states,
                                                      int input_token_id, const TensorPtr& h,
                                                      const TensorPtr& c) const {
    auto x = tape.embedding_lookup(emb_tok_, {input_token_id});
    auto [h2, c2] = decoder_.step(tape, x, h, c);
    // multiplicative attention: score_t = enc_t . (W_a h)
    auto u = tape.matmul(h2, attn_w_);
    auto scores = tape.transpose(tape.matmul(enc_states, tape.transpose(u)));
    auto alpha = tape.softmax(scores);
    auto context = tape.matmul(alpha, enc_states);
    auto combined = tape.tanh(tape.add(tape.matmul(tape.concat({h2, context}, 1), comb_w_), comb_b_));
    auto logits = tape.add(tape.matmul(combined, proj_w_), proj_b_);
    return {logits, h2, c2};
}

TensorPtr PredictionModel::teacher_forced_loss(Tape& tape,
                                               const corpus::PredictionSample& sample) const {
    auto enc = encode(tape, sample.history);
    std::vector<int> gold;
    for (const auto& t : sample.target.tokens) gold.push_back(vocab_.id(t));
    gold.push_back(Vocabulary::kEos);
    if (gold.empty()) throw Error("teacher_forced_loss: empty target");

    TensorPtr h = enc.h;
    TensorPtr c = enc.c;
    int prev = Vocabulary::kBos;
    std::vector<TensorPtr> logit_rows;
    logit_rows.reserve(gold.size());
    for (int g : gold) {
        auto out = decode_step(tape, enc.states, prev, h, c);
        logit_rows.push_back(out.logits);
        h = out.h;
        c = out.c;
        prev = g;  // teacher forcing: gold token feeds the next step
    }
    return tape.cross_entropy(tape.concat(logit_rows, 0), gold);
}

double PredictionModel::rescore(const std::vector<Utterance>& history,
                                const std::vector<std::string>& tokens) const {
    Tape tape;
    corpus::PredictionSample s;
    s.history = history;
    s.target.tokens = tokens;
    s.role = role_;
    return -teacher_forced_loss(tape, s)->scalar();
}

GenerationResult PredictionModel::generate(const std::vector<Utterance>& history, int beam_size,
                                           int max_len) const {
    if (history.empty()) throw Error("generate: empty history");
    if (beam_size < 1 || max_len < 1) throw Error("generate: beam_size and max_len must be >= 1");
    Tape tape;
    auto enc = encode(tape, history);

    struct Beam {
        std::vector<int> tokens;
        double log_prob = 0.0;
        TensorPtr h, c;
    };
    std::vector<Beam> live{{{}, 0.0, enc.h, enc.c}};
    std::vector<Beam> completed;

    for (int step = 0; step < max_len && !live.empty(); ++step) {
        struct Cand {
            double score;
            size_t beam;
            int token;
        };
        std::vector<Cand> cands;
        for (size_t bi = 0; bi < live.size(); ++bi) {
            int prev = live[bi].tokens.empty() ? Vocabulary::kBos : live[bi].tokens.back();
            auto out = decode_step(tape, enc.states, prev, live[bi].h, live[bi].c);
            auto logp = tape.log_softmax(out.logits);
            live[bi].h = out.h;
            live[bi].c = out.c;
            for (int v = 0; v < vocab_.size(); ++v) {
                if (v == Vocabulary::kPad || v == Vocabulary::kBos) continue;
                cands.push_back({live[bi].log_prob + logp->data[v], bi, v});
            }
        }
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.score != b.score) return a.score > b.score;
            if (a.token != b.token) return a.token < b.token;  // deterministic tie-break
            return a.beam < b.beam;
        });
        std::vector<Beam> next;
        for (const auto& c : cands) {
            if (static_cast<int>(next.size() + 0) >= beam_size) break;
            Beam nb = live[c.beam];
            nb.tokens.push_back(c.token);
            nb.log_prob = c.score;
            if (c.token == Vocabulary::kEos) {
                completed.push_back(std::move(nb));
                // a consumed slot: completed hypotheses count against the beam
                if (static_cast<int>(completed.size()) >= beam_size) break;
            } else {
                next.push_back(std::move(nb));
            }
            if (static_cast<int>(next.size()) >= beam_size) break;
        }
        live = std::move(next);
        if (!completed.empty() && !live.empty()) {
            double best_completed = completed[0].log_prob;
            for (const auto& b : completed) best_completed = std::max(best_completed, b.log_prob);
            double best_live = live[0].log_prob;
            for (const auto& b : live) best_live = std::max(best_live, b.log_prob);
            if (best_completed >= best_live) break;  // scores only decrease
        }
    }

    std::vector<Beam> finals = completed;
    for (auto& b : live) {
        // length cut-off: close the hypothesis with the terminator it never
        // emitted so the reported score stays a full-sequence log-probability
        int prev = b.tokens.empty() ? Vocabulary::kBos : b.tokens.back();
        auto out = decode_step(tape, enc.states, prev, b.h, b.c);
        auto logp = tape.log_softmax(out.logits);
        b.log_prob += logp->data[Vocabulary::kEos];
        b.tokens.push_back(Vocabulary::kEos);
        finals.push_back(b);
    }
    if (finals.empty()) throw Error("generate: no hypotheses");
    std::stable_sort(finals.begin(), finals.end(),
                     [](const Beam& a, const Beam& b) { return a.log_prob > b.log_prob; });
    const Beam* best = nullptr;
    for (const auto& b : finals) {
        if (!b.tokens.empty() && b.tokens.back() == Vocabulary::kEos) {
            best = &b;
            break;
        }
    }
    if (best == nullptr) best = &finals[0];

    GenerationResult result;
    result.log_prob = best->log_prob;
    for (int id : best->tokens) {
        if (id != Vocabulary::kEos) result.tokens.push_back(vocab_.token(id));
    }
    for (const auto& b : finals) {
        std::vector<std::string> toks;
        for (int id : b.tokens) {
            if (id != Vocabulary::kEos) toks.push_back(vocab_.token(id));
        }
        result.all_beams.emplace_back(std::move(toks), b.log_prob);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Training

double evaluate_loss(const PredictionModel& model,
                     const std::vector<corpus::PredictionSample>& samples) {
    if (samples.empty()) return 0.0;
    double total = 0.0;
    for (const auto& s : samples) {
        Tape tape;
        total += model.teacher_forced_loss(tape, s)->scalar();
    }
    return total / static_cast<double>(samples.size());
}

PredictionModel train_prediction_model(const std::vector<corpus::PredictionSample>& train,
                                       const std::vector<corpus::PredictionSample>& valid,
                                       Role role, const Vocabulary& vocab,
                                       const Seq2SeqConfig& cfg) {
    if (train.empty()) throw Error("train_prediction_model: empty training set");
    PredictionModel model(role, vocab, cfg);
    auto params = model.parameters();
    Optimizer opt({Optimizer::Kind::Adam, cfg.learning_rate, cfg.lr_decay});
    opt.add_parameters(params);
    opt.zero_grad();

    Rng shuffle_rng(cfg.seed ^ 0x5eedull);
    double best_valid = std::numeric_limits<double>::infinity();
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
            auto loss = model.teacher_forced_loss(tape, train[idx]);
            tape.backward(loss);
            if (++batch_n >= static_cast<size_t>(cfg.batch_size)) flush();
        }
        flush();

        if (!valid.empty()) {
            const double vloss = evaluate_loss(model, valid);
            if (vloss < best_valid) {
                best_valid = vloss;
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

}  // namespace ptd::seq2seq
