#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ptd/checkpoint.hpp"
#include "ptd/corpus.hpp"
#include "ptd/pipeline.hpp"
#include "ptd/synth.hpp"

namespace {

using nlohmann::json;
using ptd::corpus::Dialogue;
using ptd::corpus::Utterance;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

struct CkptPaths {
    std::string dir;
    std::string user() const { return (std::filesystem::path(dir) / "user_pre.ckpt").string(); }
    std::string agent() const { return (std::filesystem::path(dir) / "agent_pre.ckpt").string(); }
    std::string decision() const {
        return (std::filesystem::path(dir) / "decision.ckpt").string();
    }
};

json dataset_stats(const std::vector<Dialogue>& dialogues) {
    int64_t turns = 0, user_turns = 0, user_sub_turns = 0, waits = 0, answers = 0;
    for (const auto& d : dialogues) {
        std::set<int> turn_ids, user_turn_ids;
        for (const auto& u : d.utterances) {
            turn_ids.insert(u.turn_id);
            if (u.speaker_id == ptd::corpus::kUserSpeaker) {
                user_turn_ids.insert(u.turn_id);
                ++user_sub_turns;
            }
        }
        turns += static_cast<int64_t>(turn_ids.size());
        user_turns += static_cast<int64_t>(user_turn_ids.size());
        for (const auto& s : ptd::corpus::extract_decision_samples(d)) {
            (s.label == 0 ? waits : answers)++;
        }
    }
    const double nd = dialogues.empty() ? 1.0 : static_cast<double>(dialogues.size());
    json j;
    j["dialogues"] = dialogues.size();
    j["avg_turns"] = static_cast<double>(turns) / nd;
    j["avg_user_sub_turns"] =
        user_turns == 0 ? 0.0
                        : static_cast<double>(user_sub_turns) / static_cast<double>(user_turns);
    j["wait_samples"] = waits;
    j["answer_samples"] = answers;
    return j;
}

int cmd_build_dataset(const std::string& in_path, const std::string& slots_path, double fraction,
                      uint64_t seed, const std::string& out_path) {
    auto dialogues = ptd::corpus::parse_raw_corpus(in_path);
    ptd::corpus::SlotTable slots;
    if (!slots_path.empty()) slots = ptd::corpus::load_slot_table(slots_path);
    std::vector<Dialogue> built;
    for (const auto& d : dialogues) {
        Dialogue cur = slots.empty() ? d : ptd::corpus::delexicalize(d, slots);
        cur = ptd::corpus::segment_user_turns(cur, fraction, seed);
        ptd::corpus::validate_dialogue(cur);
        built.push_back(std::move(cur));
    }
    ptd::corpus::serialize_corpus(built, out_path);
    std::cout << dataset_stats(built).dump() << "\n";
    return kExitOk;
}

int cmd_synth(int dialogues, uint64_t seed, bool hard, const std::string& out_dir) {
    ptd::synth::SynthOptions opts;
    opts.dialogues = dialogues;
    opts.seed = seed;
    opts.hard = hard;
    auto all = ptd::synth::generate(opts);
    auto split = ptd::synth::split_dialogues(std::move(all));
    ptd::synth::write_split(split, out_dir);
    json j;
    j["out_dir"] = out_dir;
    j["train_dialogues"] = split.train.size();
    j["valid_dialogues"] = split.valid.size();
    j["test_dialogues"] = split.test.size();
    std::vector<Dialogue> merged = split.train;
    merged.insert(merged.end(), split.valid.begin(), split.valid.end());
    merged.insert(merged.end(), split.test.begin(), split.test.end());
    j["stats"] = dataset_stats(merged);
    std::cout << j.dump() << "\n";
    return kExitOk;
}

// --set section.key=value, value parsed as JSON when possible
void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw CLI::ValidationError("--set expects key=value, got '" + assignment + "'");
    }
    std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    json* node = &config;
    size_t pos = 0;
    while (true) {
        const auto dot = key.find('.', pos);
        const std::string part = key.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (part.empty()) throw CLI::ValidationError("--set: empty key segment in '" + key + "'");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        pos = dot + 1;
    }
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides) {
    json raw = json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw ptd::DataError("cannot open config file: " + config_path);
        raw = json::parse(in, nullptr, false);
        if (raw.is_discarded() || !raw.is_object()) {
            throw ptd::DataError("config is not a JSON object: " + config_path);
        }
    }
    for (const auto& o : overrides) apply_override(raw, o);
    auto config = ptd::pipeline::ExperimentConfig::from_json(raw);
    std::cerr << "training to " << config.out_dir << "\n";
    auto result = ptd::pipeline::run_training(config);
    std::cout << result.report.dump(2) << "\n";
    return kExitOk;
}

int cmd_evaluate(const CkptPaths& ckpts, const std::string& corpus_path) {
    auto report =
        ptd::pipeline::evaluate(ckpts.user(), ckpts.agent(), ckpts.decision(), corpus_path);
    std::cout << report.dump(2) << "\n";
    return kExitOk;
}

std::vector<Utterance> parse_history_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ptd::DataError("cannot open history file: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ptd::DataError("malformed history JSON: " + path);
    const json& arr = j.is_object() && j.contains("utterances") ? j["utterances"] : j;
    if (!arr.is_array()) throw ptd::DataError("history must be an utterance array: " + path);
    Dialogue d;
    d.dialogue_id = "history";
    try {
        for (const auto& uj : arr) {
            Utterance u;
            u.tokens = uj.at("tokens").get<std::vector<std::string>>();
            u.turn_id = uj.at("turn_id").get<int>();
            u.sub_turn_id = uj.at("sub_turn_id").get<int>();
            u.speaker_id = uj.at("speaker_id").get<int>();
            d.utterances.push_back(std::move(u));
        }
    } catch (const json::exception& e) {
        throw ptd::DataError("malformed utterance in " + path + ": " + e.what());
    }
    ptd::corpus::validate_dialogue(d);
    return d.utterances;
}

json decision_to_json(const ptd::decision::Decision& dec) {
    json j;
    j["label"] = dec.label;
    j["p_answer"] = dec.p_answer;
    j["r_u"] = dec.r_u;
    j["r_a"] = dec.r_a;
    return j;
}

int cmd_decide(const CkptPaths& ckpts, const std::string& history_path) {
    auto history = parse_history_json(history_path);
    auto dec = ptd::pipeline::infer(ckpts.user(), ckpts.agent(), ckpts.decision(), history);
    std::cout << decision_to_json(dec).dump() << "\n";
    return kExitOk;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

int cmd_demo(const CkptPaths& ckpts) {
    auto user_model = ptd::checkpoint::load_prediction_model(ckpts.user());
    auto agent_model = ptd::checkpoint::load_prediction_model(ckpts.agent());
    auto dec_model = ptd::checkpoint::load_decision_model(ckpts.decision());

    const bool color = std::getenv("NO_COLOR") == nullptr;
    const char* bold = color ? "\033[1m" : "";
    const char* dim = color ? "\033[2m" : "";
    const char* reset = color ? "\033[0m" : "";

    auto fresh_history = [] {
        Utterance greet;
        greet.tokens = {"hello", "how", "can", "i", "help", "you"};
        greet.turn_id = 0;
        greet.speaker_id = ptd::corpus::kAgentSpeaker;
        return std::vector<Utterance>{greet};
    };
    auto history = fresh_history();

    std::cerr << dim << "type user sub-turns; :reset clears, :quit exits" << reset << "\n";
    std::string line;
    while (true) {
        std::cerr << "> " << std::flush;
        if (!std::getline(std::cin, line)) break;
        if (line == ":quit") break;
        if (line == ":reset") {
            history = fresh_history();
            std::cerr << dim << "history cleared" << reset << "\n";
            continue;
        }
        auto tokens = ptd::corpus::tokenize(line);
        if (tokens.empty()) continue;

        Utterance u;
        u.tokens = std::move(tokens);
        u.turn_id = 1;
        u.sub_turn_id = history.back().speaker_id == ptd::corpus::kUserSpeaker
                            ? history.back().sub_turn_id + 1
                            : 0;
        u.speaker_id = ptd::corpus::kUserSpeaker;
        history.push_back(std::move(u));

        auto r_u = user_model.generate(history);
        auto r_a = agent_model.generate(history);
        auto dec = dec_model.decide(history, r_a.tokens, r_u.tokens);
        std::cout << bold << (dec.label == 1 ? "ANSWER" : "WAIT") << reset << " p_answer="
                  << dec.p_answer << "\n";
        std::cout << "  user would continue: " << join_tokens(dec.r_u) << "\n";
        std::cout << "  agent would reply:   " << join_tokens(dec.r_a) << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wait-or-answer dialogue toolkit"};
    app.require_subcommand(1);

    // build-dataset
    std::string bd_in, bd_slots, bd_out;
    double bd_fraction = 0.5;
    uint64_t bd_seed = 1;
    auto* build = app.add_subcommand("build-dataset", "construct a corpus from raw dialogues");
    build->add_option("--in", bd_in, "raw corpus JSONL")->required();
    build->add_option("--slots", bd_slots, "slot table JSON for delexicalisation");
    build->add_option("--fraction", bd_fraction, "fraction of eligible user turns to split");
    build->add_option("--seed", bd_seed, "segmentation selection seed");
    build->add_option("--out", bd_out, "constructed corpus JSONL")->required();

    // synth
    int sy_dialogues = 100;
    uint64_t sy_seed = 7;
    bool sy_hard = false;
    std::string sy_out;
    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus with splits");
    synth->add_option("--dialogues", sy_dialogues, "number of dialogues")
        ->check(CLI::PositiveNumber);
    synth->add_option("--seed", sy_seed, "generator seed");
    synth->add_flag("--hard", sy_hard, "drop surface cue tokens");
    synth->add_option("--out", sy_out, "output directory")->required();

    // train
    std::string tr_config;
    std::vector<std::string> tr_overrides;
    auto* train = app.add_subcommand("train", "run the full training pipeline");
    train->add_option("--config", tr_config, "experiment config JSON");
    train->add_option("--set", tr_overrides, "override a config field, e.g. prediction.epochs=3");

    // shared checkpoint flag
    CkptPaths ev_ckpts, de_ckpts, dm_ckpts;
    std::string ev_corpus, de_history;
    auto* evaluate = app.add_subcommand("evaluate", "score checkpoints on a corpus");
    evaluate->add_option("--ckpts", ev_ckpts.dir, "checkpoint directory")->required();
    evaluate->add_option("--corpus", ev_corpus, "constructed corpus JSONL")->required();

    auto* decide = app.add_subcommand("decide", "wait-or-answer for one history");
    decide->add_option("--ckpts", de_ckpts.dir, "checkpoint directory")->required();
    decide->add_option("--history-json", de_history, "history file (utterance schema)")
        ->required();

    auto* demo = app.add_subcommand("demo", "interactive inspection loop");
    demo->add_option("--ckpts", dm_ckpts.dir, "checkpoint directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help() << "\n";
        return kExitUsage;
    }

    try {
        if (build->parsed()) {
            return cmd_build_dataset(bd_in, bd_slots, bd_fraction, bd_seed, bd_out);
        }
        if (synth->parsed()) return cmd_synth(sy_dialogues, sy_seed, sy_hard, sy_out);
        if (train->parsed()) return cmd_train(tr_config, tr_overrides);
        if (evaluate->parsed()) return cmd_evaluate(ev_ckpts, ev_corpus);
        if (decide->parsed()) return cmd_decide(de_ckpts, de_history);
        if (demo->parsed()) return cmd_demo(dm_ckpts);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const ptd::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
