// End-to-end acceptance gate. Each criterion prints one PASS/FAIL line;
// the process exits non-zero if any fail. argv[1] is the CLI binary, used
// for the dataset-construction and corpus-synthesis commands.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ptd/baselines.hpp"
#include "ptd/checkpoint.hpp"
#include "ptd/corpus.hpp"
#include "ptd/decision.hpp"
#include "ptd/grad_check.hpp"
#include "ptd/metrics.hpp"
#include "ptd/pipeline.hpp"
#include "ptd/rng.hpp"
#include "ptd/seq2seq.hpp"
#include "ptd/synth.hpp"
#include "ptd/tensor.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ptd;

namespace {

int g_failures = 0;

void verdict(int n, const std::string& what, bool ok) {
    std::printf("criterion %d (%s): %s\n", n, what.c_str(), ok ? "PASS" : "FAIL");
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path work_dir() {
    auto dir = fs::temp_directory_path() / "ptd_acceptance";
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& cli, const std::string& args) {
    const std::string cmd = "\"" + cli + "\" " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

TensorPtr rand_param(int rows, int cols, Rng& rng) {
    auto t = make_tensor(rows, cols, true);
    for (auto& v : t->data) v = rng.uniform(-0.5, 0.5);
    return t;
}

// --------------------------------------------------------------------------
// 1. Gradient fidelity: every differentiable op in one composite, plus both
//    full model losses, checked against central differences over 5 seeds.

bool composite_op_check(uint64_t seed) {
    Rng rng(seed);
    auto emb = rand_param(8, 4, rng);
    auto w1 = rand_param(4, 4, rng);
    auto convw = rand_param(3, 8, rng);
    auto convb = rand_param(1, 3, rng);
    auto w2 = rand_param(3, 6, rng);
    auto w4 = rand_param(4, 6, rng);
    auto b4 = rand_param(1, 6, rng);
    auto w5 = rand_param(5, 6, rng);

    auto fn = [&](Tape& t) {
        Rng drng(seed * 7 + 1);  // fresh stream per call keeps the mask fixed
        auto x = t.embedding_lookup(emb, {1, 3, 5, 2, 6});
        auto h = t.sigmoid(t.matmul(x, w1));
        auto g = t.tanh(t.elementwise_mul(h, x));
        auto d = t.dropout(g, 0.25, drng);
        auto c = t.relu(t.conv1d(d, convw, convb, 2));
        auto p = t.max_over_time_pool(c);
        auto top = t.slice(d, 0, 2, 0, 4);
        auto bot = t.slice(d, 2, 3, 0, 4);
        auto cat0 = t.concat({top, bot}, 0);
        auto z = t.add(t.matmul(cat0, w4), b4);
        auto mix = t.add(t.softmax(z), t.log_softmax(z));
        auto pooled_row = t.matmul(p, w2);
        auto wide = t.concat({t.transpose(top), t.transpose(bot)}, 1);
        auto extra = t.scale(t.matmul(wide, w5), 0.5);
        auto rows = t.concat({mix, pooled_row, extra}, 0);
        return t.cross_entropy(rows, {0, 1, 2, 3, 4, 5, 0, 1, 2, 3});
    };
    auto report = grad_check({{"emb", emb},
                              {"w1", w1},
                              {"convw", convw},
                              {"convb", convb},
                              {"w2", w2},
                              {"w4", w4},
                              {"b4", b4},
                              {"w5", w5}},
                             fn, 1e-4);
    return report.pass;
}

bool prediction_loss_check(uint64_t seed) {
    auto vocab = corpus::build_vocabulary(
        std::vector<std::vector<std::string>>{{"alpha", "beta", "gamma", "delta", "echo"}}, 1);
    corpus::PredictionSample s;
    corpus::Utterance h;
    h.tokens = {"alpha", "beta"};
    h.turn_id = 1;
    h.speaker_id = corpus::kUserSpeaker;
    s.history = {h};
    s.target.tokens = {"gamma", "delta", "echo"};
    s.role = corpus::Role::User;
    seq2seq::Seq2SeqConfig cfg;
    cfg.hidden = 4;
    cfg.d_tok = 3;
    cfg.d_tag = 2;
    cfg.seed = seed;
    seq2seq::PredictionModel model(corpus::Role::User, vocab, cfg);
    auto fn = [&](Tape& t) { return model.teacher_forced_loss(t, s); };
    return grad_check(model.named_parameters(), fn, 1e-4).pass;
}

bool decision_loss_check(uint64_t seed) {
    auto vocab = corpus::build_vocabulary(
        std::vector<std::vector<std::string>>{
            {"book", "a", "table", "please", "and", "something", "cheap"}},
        1);
    decision::DecisionSampleWithFutures s;
    corpus::Utterance u;
    u.tokens = {"book", "a", "table", "please"};
    u.turn_id = 1;
    u.speaker_id = corpus::kUserSpeaker;
    s.history = {u};
    s.r_a = {"sure", "done"};
    s.r_u = {"something", "cheap"};
    s.label = 1;
    s.sample_id = "g:1";
    decision::DecisionConfig cfg;
    cfg.d_tok = 6;
    cfg.d_tag = 2;
    cfg.filter_widths = {2, 3};
    cfg.n_filters = 4;
    cfg.fusion_dim = 8;
    cfg.classifier_hidden = 8;
    cfg.dropout = 0.0;
    cfg.seed = seed;
    decision::DecisionModel model(vocab, cfg);
    auto fn = [&](Tape& t) { return model.loss(t, s, nullptr); };
    return grad_check(model.named_parameters(), fn, 1e-4).pass;
}

bool criterion_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        ok = ok && composite_op_check(seed);
        ok = ok && prediction_loss_check(seed);
        ok = ok && decision_loss_check(seed);
    }
    return ok && seconds_since(t0) < 120.0;
}

// --------------------------------------------------------------------------
// 2. Rule baselines against a brute-force length scan.

bool criterion_rule_oracle() {
    Rng rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = rng.uniform_int(1, 8);
        std::vector<corpus::Utterance> history;
        for (int i = 0; i < n; ++i) {
            corpus::Utterance u;
            const int len = rng.uniform_int(1, 12);
            for (int k = 0; k < len; ++k) u.tokens.push_back("t");
            u.turn_id = i;
            u.speaker_id = (i + 1 == n) ? corpus::kUserSpeaker : rng.uniform_int(0, 1);
            history.push_back(std::move(u));
        }
        const int last = static_cast<int>(history.back().tokens.size());
        int mx = 0, mn = 1 << 30;
        for (int i = 0; i + 1 < n; ++i) {
            const int len = static_cast<int>(history[i].tokens.size());
            mx = std::max(mx, len);
            mn = std::min(mn, len);
        }
        const int want_atlu = last > mx ? 1 : 0;
        const int want_ptsu = (n > 1 && last < mn) ? 0 : 1;
        if (baselines::atlu_decide(history).label != want_atlu) return false;
        if (baselines::ptsu_decide(history).label != want_ptsu) return false;
    }
    return true;
}

// --------------------------------------------------------------------------
// 3. Metric oracles: hand-computed BLEU and classification fixtures.

bool criterion_metric_oracles() {
    using metrics::TokenSeq;
    auto one = [](TokenSeq c, TokenSeq r) {
        return metrics::bleu_cumulative({std::move(c)}, {std::move(r)});
    };
    const TokenSeq perfect = {"the", "cat", "sat", "on", "the", "mat"};
    bool ok = std::abs(one(perfect, perfect) - 100.0) < 1e-6;
    ok = ok && one({"a", "b", "c", "d"}, {"w", "x", "y", "z"}) == 0.0;
    // unigram precision clips at 2/7; zero bigram overlap zeroes the product
    ok = ok && one({"the", "the", "the", "the", "the", "the", "the"},
                   {"the", "cat", "is", "on", "the", "mat"}) == 0.0;
    const double mixed = 100.0 * std::pow(5.0 / 6.0 * 3.0 / 5.0 * 0.5 * (1.0 / 3.0), 0.25);
    ok = ok && std::abs(one({"a", "b", "c", "d", "e", "f"}, {"a", "b", "c", "d", "x", "f"}) -
                        mixed) < 1e-6;
    const double brevity = 100.0 * std::exp(1.0 - 6.0 / 4.0);
    ok = ok && std::abs(one({"a", "b", "c", "d"}, {"a", "b", "c", "d", "e", "f"}) - brevity) < 1e-6;

    struct Fixture {
        std::vector<int> preds, golds;
        int64_t tp, fp, fn, tn;
    };
    const std::vector<Fixture> fixtures = {
        {{1, 0, 1, 0}, {1, 0, 1, 0}, 2, 0, 0, 2},
        {{1, 1, 0, 0}, {1, 0, 0, 0}, 1, 1, 0, 2},
        {{0, 0, 0}, {1, 0, 1}, 0, 0, 2, 1},
        {{1, 1, 1}, {1, 1, 1}, 3, 0, 0, 0},
        {{0}, {0}, 0, 0, 0, 1},
        {{1}, {0}, 0, 1, 0, 0},
        {{0, 1}, {1, 0}, 0, 1, 1, 0},
        {{1, 0, 1, 1, 0}, {1, 1, 0, 1, 0}, 2, 1, 1, 1},
        {{1, 1, 1, 1}, {0, 0, 0, 0}, 0, 4, 0, 0},
        {{0, 0, 1, 0, 1, 1}, {0, 1, 1, 0, 0, 1}, 2, 1, 1, 2},
    };
    for (const auto& f : fixtures) {
        auto r = metrics::classification_report(f.preds, f.golds);
        if (r.tp != f.tp || r.fp != f.fp || r.fn != f.fn || r.tn != f.tn) return false;
        const double acc =
            static_cast<double>(f.tp + f.tn) / static_cast<double>(f.preds.size());
        if (std::abs(r.accuracy - acc) > 1e-12) return false;
    }
    return ok;
}

// --------------------------------------------------------------------------
// 4. Sample extraction vs. a naive replay over the utterance sequence.

corpus::Dialogue random_dialogue(Rng& rng, int id) {
    corpus::Dialogue d;
    d.dialogue_id = "rand-" + std::to_string(id);
    const int n_turns = rng.uniform_int(1, 6);
    int speaker = rng.uniform_int(0, 1);
    for (int t = 0; t < n_turns; ++t) {
        const int subs = speaker == corpus::kUserSpeaker ? rng.uniform_int(1, 3) : 1;
        for (int s = 0; s < subs; ++s) {
            corpus::Utterance u;
            const int len = rng.uniform_int(1, 5);
            for (int k = 0; k < len; ++k) {
                u.tokens.push_back("w" + std::to_string(rng.uniform_int(0, 20)));
            }
            u.turn_id = t;
            u.sub_turn_id = s;
            u.speaker_id = speaker;
            d.utterances.push_back(std::move(u));
        }
        speaker = 1 - speaker;
    }
    return d;
}

bool replay_matches(const corpus::Dialogue& d) {
    auto dec = corpus::extract_decision_samples(d);
    auto pu = corpus::extract_prediction_samples(d, corpus::Role::User);
    auto pa = corpus::extract_prediction_samples(d, corpus::Role::Agent);
    size_t di = 0, ui = 0, ai = 0;
    for (size_t j = 0; j + 1 < d.utterances.size(); ++j) {
        if (d.utterances[j].speaker_id != corpus::kUserSpeaker) continue;
        const int succ = d.utterances[j + 1].speaker_id;
        if (di >= dec.size()) return false;
        if (dec[di].history.size() != j + 1) return false;
        if (dec[di].history.back().tokens != d.utterances[j].tokens) return false;
        if (dec[di].label != (succ == corpus::kAgentSpeaker ? 1 : 0)) return false;
        ++di;
        if (succ == corpus::kUserSpeaker) {
            if (ui >= pu.size()) return false;
            if (pu[ui].target.tokens != d.utterances[j + 1].tokens) return false;
            if (pu[ui].history.size() != j + 1) return false;
            ++ui;
        } else {
            if (ai >= pa.size()) return false;
            if (pa[ai].target.tokens != d.utterances[j + 1].tokens) return false;
            ++ai;
        }
    }
    return di == dec.size() && ui == pu.size() && ai == pa.size();
}

bool criterion_sample_extraction() {
    // the canonical split-utterance walkthrough: greeting, 3-sentence user
    // turn, agent reply, 2-sentence user turn, closing agent reply
    const auto raw = work_dir() / "extract_fixture.jsonl";
    {
        std::ofstream out(raw);
        out << R"({"dialogue_id": "fx", "turns": [)"
            << R"({"speaker": "agent", "sentences": ["Hello, how can I help?"]},)"
            << R"({"speaker": "user", "sentences": ["I need a hotel.", "Somewhere in the north.", "With free parking, please."]},)"
            << R"({"speaker": "agent", "sentences": ["Sure, I found one."]},)"
            << R"({"speaker": "user", "sentences": ["Great, book it.", "For two nights."]},)"
            << R"({"speaker": "agent", "sentences": ["Done!"]}]})"
            << "\n";
    }
    auto parsed = corpus::parse_raw_corpus(raw.string());
    if (parsed.size() != 1) return false;
    auto d = corpus::segment_user_turns(parsed[0], 1.0, 1);
    if (d.utterances.size() != 8) return false;
    auto dec = corpus::extract_decision_samples(d);
    if (dec.size() != 5) return false;
    const std::vector<int> want_labels = {0, 0, 1, 0, 1};
    for (size_t i = 0; i < dec.size(); ++i) {
        if (dec[i].label != want_labels[i]) return false;
    }
    if (!replay_matches(d)) return false;

    Rng rng(123);
    for (int i = 0; i < 200; ++i) {
        if (!replay_matches(random_dialogue(rng, i))) return false;
    }
    return true;
}

// --------------------------------------------------------------------------
// 5. Dataset construction determinism and the 50% segmentation split.

bool criterion_build_determinism(const std::string& cli) {
    const auto dir = work_dir();
    const auto raw = dir / "build_raw.jsonl";
    {
        // 10 dialogues, each with exactly 2 multi-sentence user turns, so
        // fraction 0.5 must split one per dialogue
        std::ofstream out(raw);
        for (int i = 0; i < 10; ++i) {
            out << R"({"dialogue_id": "b)" << i << R"(", "turns": [)"
                << R"({"speaker": "agent", "sentences": ["Hello there."]},)"
                << R"({"speaker": "user", "sentences": ["I want food.", "Cheap food."]},)"
                << R"({"speaker": "agent", "sentences": ["Noted, anything else?"]},)"
                << R"({"speaker": "user", "sentences": ["Yes a taxi.", "At nine."]},)"
                << R"({"speaker": "agent", "sentences": ["All booked."]}]})"
                << "\n";
        }
    }
    const auto out_a = dir / "built_a.jsonl";
    const auto out_b = dir / "built_b.jsonl";
    const std::string common =
        "build-dataset --in \"" + raw.string() + "\" --fraction 0.5 --seed 3 --out \"";
    if (run_cli(cli, common + out_a.string() + "\"") != 0) return false;
    if (run_cli(cli, common + out_b.string() + "\"") != 0) return false;
    const auto bytes_a = slurp(out_a.string());
    if (bytes_a.empty() || bytes_a != slurp(out_b.string())) return false;

    int split_turns = 0;
    for (const auto& d : corpus::parse_corpus(out_a.string())) {
        std::map<int, int> subs_per_turn;
        for (const auto& u : d.utterances) {
            if (u.speaker_id == corpus::kUserSpeaker) {
                subs_per_turn[u.turn_id] = std::max(subs_per_turn[u.turn_id], u.sub_turn_id + 1);
            }
        }
        for (const auto& [turn, subs] : subs_per_turn) {
            if (subs >= 2) ++split_turns;
        }
    }
    return std::abs(split_turns - 10) <= 1;  // half of the 20 eligible turns
}

// --------------------------------------------------------------------------
// 6.-9. Scaled end-to-end runs.

struct EndToEnd {
    bool trained = false;
    double ptd_acc = 0.0;
    double baseline_acc = 0.0;
    double seconds = 0.0;
    json report;
    pipeline::RunResult run;
    std::vector<std::vector<corpus::Utterance>> test_histories;
};

EndToEnd run_end_to_end(const std::string& cli) {
    EndToEnd r;
    const auto dir = work_dir();
    const auto corpus_dir = dir / "synth600";
    if (run_cli(cli, "synth --dialogues 600 --seed 7 --out \"" + corpus_dir.string() + "\"") != 0) {
        return r;
    }

    const auto t0 = std::chrono::steady_clock::now();
    pipeline::ExperimentConfig cfg;
    cfg.train_path = (corpus_dir / "train.jsonl").string();
    cfg.valid_path = (corpus_dir / "valid.jsonl").string();
    cfg.test_path = (corpus_dir / "test.jsonl").string();
    cfg.out_dir = (dir / "run600").string();
    cfg.apply_seed(7);
    r.run = pipeline::run_training(cfg);
    r.report = r.run.report;
    r.ptd_acc = r.report["decision_test"]["accuracy"].get<double>();

    auto train = corpus::parse_corpus(cfg.train_path);
    auto valid = corpus::parse_corpus(cfg.valid_path);
    auto test = corpus::parse_corpus(cfg.test_path);
    auto vocab = corpus::build_vocabulary(train, cfg.min_freq);
    auto extract_all = [](const std::vector<corpus::Dialogue>& ds) {
        std::vector<corpus::DecisionSample> out;
        for (const auto& d : ds) {
            auto s = corpus::extract_decision_samples(d);
            out.insert(out.end(), s.begin(), s.end());
        }
        return out;
    };
    auto train_s = extract_all(train);
    auto valid_s = extract_all(valid);
    auto test_s = extract_all(test);
    decision::DecisionConfig bcfg;
    bcfg.seed = 7;
    auto baseline = baselines::train_history_classifier(train_s, valid_s, vocab, bcfg);
    r.baseline_acc = baselines::evaluate_accuracy(baseline, test_s);
    r.seconds = seconds_since(t0);
    for (const auto& s : test_s) r.test_histories.push_back(s.history);
    r.trained = true;
    return r;
}

bool criterion_end_to_end(const EndToEnd& e) {
    if (!e.trained) return false;
    std::printf("  baseline accuracy %.4f, ptd accuracy %.4f, %.1f s\n", e.baseline_acc,
                e.ptd_acc, e.seconds);
    return e.baseline_acc >= 0.80 && e.ptd_acc >= 0.90 &&
           e.ptd_acc >= e.baseline_acc - 0.02 && e.seconds < 600.0;
}

bool criterion_prediction_contrast(const EndToEnd& e) {
    if (!e.trained) return false;
    const auto& g = e.report["generation_test"];
    const double uu = g["user_model_on_user_targets"]["corpus"].get<double>();
    const double au = g["agent_model_on_user_targets"]["corpus"].get<double>();
    const double aa = g["agent_model_on_agent_targets"]["corpus"].get<double>();
    const double ua = g["user_model_on_agent_targets"]["corpus"].get<double>();
    std::printf("  bleu user-on-user %.2f vs agent-on-user %.2f; agent-on-agent %.2f vs "
                "user-on-agent %.2f\n",
                uu, au, aa, ua);
    return uu > 5.0 * au && aa > 5.0 * ua;
}

bool criterion_checkpoint_round_trip(const EndToEnd& e) {
    if (!e.trained) return false;
    const auto dir = work_dir();
    auto round_trip = [&](const std::string& orig, const std::string& copy, auto load,
                          auto save) {
        auto model = load(orig);
        save(model, copy);
        return slurp(orig) == slurp(copy) && !slurp(copy).empty();
    };
    const auto user_copy = (dir / "user_rt.ckpt").string();
    const auto agent_copy = (dir / "agent_rt.ckpt").string();
    const auto dec_copy = (dir / "decision_rt.ckpt").string();
    bool ok = round_trip(
        e.run.user_ckpt_path, user_copy,
        [](const std::string& p) { return checkpoint::load_prediction_model(p); },
        [](seq2seq::PredictionModel& m, const std::string& p) {
            checkpoint::save_prediction_model(m, p);
        });
    ok = ok && round_trip(
                   e.run.agent_ckpt_path, agent_copy,
                   [](const std::string& p) { return checkpoint::load_prediction_model(p); },
                   [](seq2seq::PredictionModel& m, const std::string& p) {
                       checkpoint::save_prediction_model(m, p);
                   });
    ok = ok && round_trip(
                   e.run.decision_ckpt_path, dec_copy,
                   [](const std::string& p) { return checkpoint::load_decision_model(p); },
                   [](decision::DecisionModel& m, const std::string& p) {
                       checkpoint::save_decision_model(m, p);
                   });
    if (!ok) return false;

    // decisions over freshly loaded models must match across reloads exactly
    auto user_a = checkpoint::load_prediction_model(e.run.user_ckpt_path);
    auto agent_a = checkpoint::load_prediction_model(e.run.agent_ckpt_path);
    auto dec_a = checkpoint::load_decision_model(e.run.decision_ckpt_path);
    auto user_b = checkpoint::load_prediction_model(user_copy);
    auto agent_b = checkpoint::load_prediction_model(agent_copy);
    auto dec_b = checkpoint::load_decision_model(dec_copy);

    size_t n = 0;
    for (const auto& history : e.test_histories) {
        if (n >= 100) break;
        auto ru_a = user_a.generate(history);
        auto ra_a = agent_a.generate(history);
        auto da = dec_a.decide(history, ra_a.tokens, ru_a.tokens);
        auto ru_b = user_b.generate(history);
        auto ra_b = agent_b.generate(history);
        auto db = dec_b.decide(history, ra_b.tokens, ru_b.tokens);
        if (da.label != db.label || da.p_answer != db.p_answer) return false;
        if (ru_a.tokens != ru_b.tokens || ra_a.tokens != ra_b.tokens) return false;
        if (n < 3) {  // single-call path over the checkpoint files agrees too
            auto di = pipeline::infer(e.run.user_ckpt_path, e.run.agent_ckpt_path,
                                      e.run.decision_ckpt_path, history);
            if (di.label != da.label || di.p_answer != da.p_answer) return false;
        }
        ++n;
    }
    return n == 100;
}

bool criterion_determinism() {
    const auto dir = work_dir();
    const auto corpus_dir = dir / "synth100";
    auto split = synth::split_dialogues(synth::generate({.dialogues = 100, .seed = 11,
                                                         .hard = false}));
    synth::write_split(split, corpus_dir.string());

    pipeline::ExperimentConfig cfg;
    cfg.train_path = (corpus_dir / "train.jsonl").string();
    cfg.valid_path = (corpus_dir / "valid.jsonl").string();
    cfg.test_path = (corpus_dir / "test.jsonl").string();
    cfg.out_dir = (dir / "run100").string();
    cfg.apply_seed(11);
    cfg.prediction.hidden = 32;
    cfg.prediction.d_tok = 16;
    cfg.prediction.epochs = 3;
    cfg.decision.epochs = 5;

    std::filesystem::remove_all(cfg.out_dir);
    json a = pipeline::run_training(cfg).report;
    std::filesystem::remove_all(cfg.out_dir);
    json b = pipeline::run_training(cfg).report;
    a.erase("wall_clock_seconds");
    b.erase("wall_clock_seconds");
    return a == b;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <path-to-cli-binary>\n", argv[0]);
        return 2;
    }
    const std::string cli = argv[1];
    if (!fs::exists(cli)) {
        std::fprintf(stderr, "cli binary not found: %s\n", cli.c_str());
        return 2;
    }

    verdict(1, "gradient fidelity over ops and model losses", criterion_gradients());
    verdict(2, "rule baselines equal brute-force oracle", criterion_rule_oracle());
    verdict(3, "bleu and classification fixtures", criterion_metric_oracles());
    verdict(4, "sample extraction equals replay oracle", criterion_sample_extraction());
    verdict(5, "dataset construction determinism and split fraction",
            criterion_build_determinism(cli));

    auto e2e = run_end_to_end(cli);
    verdict(6, "end-to-end accuracy targets within budget", criterion_end_to_end(e2e));
    verdict(7, "cross-role generation contrast", criterion_prediction_contrast(e2e));
    verdict(8, "checkpoint round-trip and reload equivalence",
            criterion_checkpoint_round_trip(e2e));
    verdict(9, "training reruns produce identical reports", criterion_determinism());

    if (g_failures == 0) {
        std::printf("all criteria passed\n");
        return 0;
    }
    std::printf("%d criteria failed\n", g_failures);
    return 1;
}
