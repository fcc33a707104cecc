#include "ptd/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <unordered_map>

#include "ptd/checkpoint.hpp"
#include "ptd/metrics.hpp"

namespace ptd::pipeline {

using corpus::DecisionSample;
using corpus::Dialogue;
using corpus::PredictionSample;
using corpus::Role;
using corpus::Utterance;
using nlohmann::json;
using seq2seq::PredictionModel;

void ExperimentConfig::apply_seed(uint64_t s) {
    seed = s;
    prediction.seed = s;
    decision.seed = s;
}

json ExperimentConfig::to_json() const {
    json j;
    j["train_path"] = train_path;
    j["valid_path"] = valid_path;
    j["test_path"] = test_path;
    j["out_dir"] = out_dir;
    j["min_freq"] = min_freq;
    j["seed"] = seed;
    j["prediction"] = prediction.to_json();
    j["decision"] = decision.to_json();
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    c.train_path = j.value("train_path", c.train_path);
    c.valid_path = j.value("valid_path", c.valid_path);
    c.test_path = j.value("test_path", c.test_path);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.min_freq = j.value("min_freq", c.min_freq);
    c.seed = j.value("seed", c.seed);
    if (j.contains("prediction")) c.prediction = seq2seq::Seq2SeqConfig::from_json(j["prediction"]);
    if (j.contains("decision")) c.decision = decision::DecisionConfig::from_json(j["decision"]);
    if (j.contains("seed")) c.apply_seed(c.seed);
    return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DataError("config is not a JSON object: " + path);
    return from_json(j);
}

// ---------------------------------------------------------------------------
// Generations file

std::vector<GenerationRecord> read_generations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open generations file: " + path);
    std::vector<GenerationRecord> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw DataError(path + ":" + std::to_string(lineno) + ": malformed generation record");
        }
        GenerationRecord r;
        r.sample_id = j.at("sample_id").get<std::string>();
        r.r_u = j.at("r_u").get<std::vector<std::string>>();
        r.r_a = j.at("r_a").get<std::vector<std::string>>();
        r.logp_u = j.at("logp_u").get<double>();
        r.logp_a = j.at("logp_a").get<double>();
        out.push_back(std::move(r));
    }
    return out;
}

void write_generations(const std::vector<GenerationRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write generations file: " + path);
    for (const auto& r : records) {
        json j;
        j["sample_id"] = r.sample_id;
        j["r_u"] = r.r_u;
        j["r_a"] = r.r_a;
        j["logp_u"] = r.logp_u;
        j["logp_a"] = r.logp_a;
        out << j.dump() << "\n";
    }
}

std::vector<GenerationRecord> materialize_generations(const PredictionModel& user_model,
                                                      const PredictionModel& agent_model,
                                                      const std::vector<DecisionSample>& samples,
                                                      const std::string& cache_path) {
    std::unordered_map<std::string, GenerationRecord> cached;
    if (!cache_path.empty() && std::filesystem::exists(cache_path)) {
        for (auto& r : read_generations(cache_path)) cached.emplace(r.sample_id, std::move(r));
    }
    std::vector<GenerationRecord> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        auto it = cached.find(s.sample_id);
        if (it != cached.end()) {
            out.push_back(it->second);
            continue;
        }
        GenerationRecord r;
        r.sample_id = s.sample_id;
        auto gu = user_model.generate(s.history);
        auto ga = agent_model.generate(s.history);
        r.r_u = std::move(gu.tokens);
        r.logp_u = gu.log_prob;
        r.r_a = std::move(ga.tokens);
        r.logp_a = ga.log_prob;
        out.push_back(std::move(r));
    }
    if (!cache_path.empty()) write_generations(out, cache_path);
    return out;
}

std::vector<decision::DecisionSampleWithFutures> attach_futures(
    const std::vector<DecisionSample>& samples, const std::vector<GenerationRecord>& generations) {
    std::unordered_map<std::string, const GenerationRecord*> by_id;
    for (const auto& r : generations) by_id[r.sample_id] = &r;
    std::vector<decision::DecisionSampleWithFutures> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        auto it = by_id.find(s.sample_id);
        if (it == by_id.end()) {
            throw Error("no simulated futures for sample " + s.sample_id);
        }
        decision::DecisionSampleWithFutures f;
        f.history = s.history;
        f.label = s.label;
        f.sample_id = s.sample_id;
        f.r_u = it->second->r_u;
        f.r_a = it->second->r_a;
        out.push_back(std::move(f));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training run

namespace {

template <typename F>
auto stage(const std::string& name, F&& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        throw Error("stage " + name + ": " + e.what());
    }
}

std::vector<DecisionSample> all_decision_samples(const std::vector<Dialogue>& dialogues) {
    std::vector<DecisionSample> out;
    for (const auto& d : dialogues) {
        auto s = corpus::extract_decision_samples(d);
        out.insert(out.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
    }
    return out;
}

std::vector<PredictionSample> all_prediction_samples(const std::vector<Dialogue>& dialogues,
                                                     Role role) {
    std::vector<PredictionSample> out;
    for (const auto& d : dialogues) {
        auto s = corpus::extract_prediction_samples(d, role);
        out.insert(out.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
    }
    return out;
}

// Generation quality of one model against the targets of one role.
json bleu_cell(const PredictionModel& model, const std::vector<PredictionSample>& samples) {
    if (samples.empty()) return json{{"corpus", 0.0}, {"sentence_smoothed", 0.0}};
    std::vector<metrics::TokenSeq> candidates, references;
    for (const auto& s : samples) {
        candidates.push_back(model.generate(s.history).tokens);
        references.push_back(s.target.tokens);
    }
    json j;
    j["corpus"] = metrics::bleu_cumulative(candidates, references);
    j["sentence_smoothed"] = metrics::bleu_sentence_smoothed_avg(candidates, references);
    return j;
}

json bleu_matrix(const PredictionModel& user_model, const PredictionModel& agent_model,
                 const std::vector<Dialogue>& test) {
    auto user_targets = all_prediction_samples(test, Role::User);
    auto agent_targets = all_prediction_samples(test, Role::Agent);
    json j;
    j["user_model_on_user_targets"] = bleu_cell(user_model, user_targets);
    j["user_model_on_agent_targets"] = bleu_cell(user_model, agent_targets);
    j["agent_model_on_user_targets"] = bleu_cell(agent_model, user_targets);
    j["agent_model_on_agent_targets"] = bleu_cell(agent_model, agent_targets);
    j["user_target_count"] = user_targets.size();
    j["agent_target_count"] = agent_targets.size();
    return j;
}

json decision_report(const decision::DecisionModel& model,
                     const std::vector<decision::DecisionSampleWithFutures>& samples) {
    std::vector<int> preds, golds;
    int64_t wait = 0, answer = 0;
    for (const auto& s : samples) {
        preds.push_back(model.decide(s.history, s.r_a, s.r_u).label);
        golds.push_back(s.label);
        (s.label == 0 ? wait : answer)++;
    }
    json j = json::parse(metrics::classification_report(preds, golds).to_json_string());
    j["samples"] = samples.size();
    j["wait_samples"] = wait;
    j["answer_samples"] = answer;
    return j;
}

}  // namespace

RunResult run_training(const ExperimentConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    std::filesystem::create_directories(config.out_dir);
    const std::filesystem::path out_dir(config.out_dir);

    auto train = stage("load-corpus", [&] { return corpus::parse_corpus(config.train_path); });
    auto valid = stage("load-corpus", [&] { return corpus::parse_corpus(config.valid_path); });
    auto test = stage("load-corpus", [&] { return corpus::parse_corpus(config.test_path); });
    auto vocab =
        stage("build-vocabulary", [&] { return corpus::build_vocabulary(train, config.min_freq); });

    RunResult result;
    result.user_ckpt_path = (out_dir / "user_pre.ckpt").string();
    result.agent_ckpt_path = (out_dir / "agent_pre.ckpt").string();
    result.decision_ckpt_path = (out_dir / "decision.ckpt").string();

    auto user_model = stage("train-user-prediction", [&] {
        return seq2seq::train_prediction_model(all_prediction_samples(train, Role::User),
                                               all_prediction_samples(valid, Role::User),
                                               Role::User, vocab, config.prediction);
    });
    checkpoint::save_prediction_model(user_model, result.user_ckpt_path);

    auto agent_model = stage("train-agent-prediction", [&] {
        return seq2seq::train_prediction_model(all_prediction_samples(train, Role::Agent),
                                               all_prediction_samples(valid, Role::Agent),
                                               Role::Agent, vocab, config.prediction);
    });
    checkpoint::save_prediction_model(agent_model, result.agent_ckpt_path);

    const uint64_t user_hash = user_model.parameter_hash();
    const uint64_t agent_hash = agent_model.parameter_hash();

    auto train_dec = all_decision_samples(train);
    auto valid_dec = all_decision_samples(valid);
    auto test_dec = all_decision_samples(test);

    auto generations = stage("materialize-generations", [&] {
        std::vector<DecisionSample> all = train_dec;
        all.insert(all.end(), valid_dec.begin(), valid_dec.end());
        all.insert(all.end(), test_dec.begin(), test_dec.end());
        return materialize_generations(user_model, agent_model, all,
                                       (out_dir / "generations.jsonl").string());
    });

    auto dec_model = stage("train-decision", [&] {
        return decision::train_decision_model(attach_futures(train_dec, generations),
                                              attach_futures(valid_dec, generations), vocab,
                                              config.decision);
    });
    checkpoint::save_decision_model(dec_model, result.decision_ckpt_path);

    if (user_model.parameter_hash() != user_hash || agent_model.parameter_hash() != agent_hash) {
        throw Error("stage train-decision: prediction models changed while frozen");
    }

    stage("report", [&] {
        json report;
        report["config"] = config.to_json();
        report["seed"] = config.seed;
        report["decision_test"] = decision_report(dec_model, attach_futures(test_dec, generations));
        report["generation_test"] = bleu_matrix(user_model, agent_model, test);
        report["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::ofstream out(out_dir / "report.json");
        if (!out) throw Error("cannot write report");
        out << report.dump(2) << "\n";
        result.report = std::move(report);
        return 0;
    });
    return result;
}

// ---------------------------------------------------------------------------
// Inference

namespace {

struct LoadedModels {
    PredictionModel user_model;
    PredictionModel agent_model;
    decision::DecisionModel dec_model;
};

LoadedModels load_models(const std::string& user_ckpt_path, const std::string& agent_ckpt_path,
                         const std::string& decision_ckpt_path) {
    LoadedModels m{checkpoint::load_prediction_model(user_ckpt_path),
                   checkpoint::load_prediction_model(agent_ckpt_path),
                   checkpoint::load_decision_model(decision_ckpt_path)};
    if (m.user_model.role() != Role::User) {
        throw Error("checkpoint " + user_ckpt_path + " is not a user prediction model");
    }
    if (m.agent_model.role() != Role::Agent) {
        throw Error("checkpoint " + agent_ckpt_path + " is not an agent prediction model");
    }
    const uint64_t h = m.user_model.vocab().hash();
    if (m.agent_model.vocab().hash() != h || m.dec_model.vocab().hash() != h) {
        throw Error("checkpoints trained with different vocabularies");
    }
    return m;
}

}  // namespace

decision::Decision infer(const std::string& user_ckpt_path, const std::string& agent_ckpt_path,
                         const std::string& decision_ckpt_path,
                         const std::vector<Utterance>& history) {
    auto m = load_models(user_ckpt_path, agent_ckpt_path, decision_ckpt_path);
    if (history.empty() || history.back().speaker_id != corpus::kUserSpeaker) {
        throw DataError("history must end with a user utterance");
    }
    auto r_u = m.user_model.generate(history);
    auto r_a = m.agent_model.generate(history);
    return m.dec_model.decide(history, r_a.tokens, r_u.tokens);
}

json evaluate(const std::string& user_ckpt_path, const std::string& agent_ckpt_path,
              const std::string& decision_ckpt_path, const std::string& corpus_path) {
    auto m = load_models(user_ckpt_path, agent_ckpt_path, decision_ckpt_path);
    auto dialogues = corpus::parse_corpus(corpus_path);
    auto samples = all_decision_samples(dialogues);
    auto generations = materialize_generations(m.user_model, m.agent_model, samples, "");
    json report;
    report["corpus_path"] = corpus_path;
    report["dialogues"] = dialogues.size();
    report["decision"] = decision_report(m.dec_model, attach_futures(samples, generations));
    report["generation"] = bleu_matrix(m.user_model, m.agent_model, dialogues);
    return report;
}

}  // namespace ptd::pipeline
