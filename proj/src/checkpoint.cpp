#include "ptd/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <functional>
#include <optional>

namespace ptd::checkpoint {

using nlohmann::json;

namespace {

json vocab_to_json(const corpus::Vocabulary& vocab) {
    const auto& all = vocab.tokens();
    std::vector<std::string> words(all.begin() + corpus::Vocabulary::kNumSpecials, all.end());
    return json{{"min_freq", vocab.min_freq()}, {"words", words}};
}

corpus::Vocabulary vocab_from_json(const json& j) {
    return corpus::Vocabulary::from_tokens(j.at("words").get<std::vector<std::string>>(),
                                           j.at("min_freq").get<int>());
}

void write_checkpoint(const std::string& kind, const json& config,
                      const corpus::Vocabulary& vocab,
                      const std::vector<std::pair<std::string, TensorPtr>>& params,
                      const std::string& path) {
    json index = json::array();
    uint64_t offset = 0;
    for (const auto& [name, p] : params) {
        index.push_back({{"name", name},
                         {"rows", p->rows},
                         {"cols", p->cols},
                         {"offset", offset}});
        offset += static_cast<uint64_t>(p->numel()) * sizeof(float);
    }
    json header = {{"kind", kind},
                   {"config", config},
                   {"vocabulary", vocab_to_json(vocab)},
                   {"tensors", index}};
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("checkpoint: cannot open for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    const uint32_t hlen = static_cast<uint32_t>(header_str.size());
    char lenbuf[4] = {static_cast<char>(hlen & 0xff), static_cast<char>((hlen >> 8) & 0xff),
                      static_cast<char>((hlen >> 16) & 0xff),
                      static_cast<char>((hlen >> 24) & 0xff)};
    out.write(lenbuf, 4);
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    for (const auto& [name, p] : params) {
        for (double v : p->data) {
            const float f = static_cast<float>(v);
            char buf[4];
            std::memcpy(buf, &f, 4);
            out.write(buf, 4);
        }
    }
    if (!out) throw Error("checkpoint: write failed: " + path);
}

json read_header(std::ifstream& in, const std::string& path) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) {
        throw Error("checkpoint: bad magic: " + path);
    }
    char lenbuf[4];
    in.read(lenbuf, 4);
    if (!in) throw Error("checkpoint: truncated header: " + path);
    const uint32_t hlen = static_cast<uint32_t>(static_cast<unsigned char>(lenbuf[0])) |
                          (static_cast<uint32_t>(static_cast<unsigned char>(lenbuf[1])) << 8) |
                          (static_cast<uint32_t>(static_cast<unsigned char>(lenbuf[2])) << 16) |
                          (static_cast<uint32_t>(static_cast<unsigned char>(lenbuf[3])) << 24);
    std::string header_str(hlen, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw Error("checkpoint: truncated header: " + path);
    try {
        return json::parse(header_str);
    } catch (const json::exception& e) {
        throw Error("checkpoint: malformed header: " + std::string(e.what()));
    }
}

struct LoadedCheckpoint {
    json header;
    corpus::Vocabulary vocab;
};

// Reads the header, reconstructs the vocabulary, and copies the blob
// into the model's parameters after shape-checking against the index.
LoadedCheckpoint read_into(const std::string& path, const std::string& expected_kind,
                           const std::function<std::vector<std::pair<std::string, TensorPtr>>(
                               const json&, const corpus::Vocabulary&)>& make_params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("checkpoint: cannot open: " + path);
    json header = read_header(in, path);
    const std::string kind = header.at("kind").get<std::string>();
    if (kind != expected_kind) {
        throw Error("checkpoint: kind mismatch: expected " + expected_kind + ", found " + kind);
    }
    corpus::Vocabulary vocab = vocab_from_json(header.at("vocabulary"));
    auto params = make_params(header.at("config"), vocab);

    const json& index = header.at("tensors");
    if (index.size() != params.size()) {
        throw Error("checkpoint: tensor index size mismatch");
    }
    uint64_t expected_offset = 0;
    for (size_t i = 0; i < params.size(); ++i) {
        const json& e = index[i];
        auto& [name, p] = params[i];
        if (e.at("name").get<std::string>() != name) {
            throw Error("checkpoint: tensor index name mismatch at " + name);
        }
        if (e.at("rows").get<int>() != p->rows || e.at("cols").get<int>() != p->cols) {
            throw Error("checkpoint: tensor shape mismatch for " + name);
        }
        if (e.at("offset").get<uint64_t>() != expected_offset) {
            throw Error("checkpoint: tensor offset mismatch for " + name);
        }
        expected_offset += static_cast<uint64_t>(p->numel()) * sizeof(float);
        for (auto& v : p->data) {
            char buf[4];
            in.read(buf, 4);
            if (!in) throw Error("checkpoint: truncated blob: " + path);
            float f;
            std::memcpy(&f, buf, 4);
            v = static_cast<double>(f);
        }
    }
    return {std::move(header), std::move(vocab)};
}

}  // namespace

CheckpointInfo inspect(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("checkpoint: cannot open: " + path);
    json header = read_header(in, path);
    CheckpointInfo info;
    info.kind = header.at("kind").get<std::string>();
    info.config = header.at("config");
    info.vocab_size = corpus::Vocabulary::kNumSpecials +
                      static_cast<int>(header.at("vocabulary").at("words").size());
    for (const auto& e : header.at("tensors")) {
        info.tensors.push_back({e.at("name").get<std::string>(), e.at("rows").get<int>(),
                                e.at("cols").get<int>(), e.at("offset").get<uint64_t>()});
    }
    return info;
}

void save_prediction_model(seq2seq::PredictionModel& model, const std::string& path) {
    const char* kind =
        model.role() == corpus::Role::User ? kKindPredictionUser : kKindPredictionAgent;
    write_checkpoint(kind, model.config().to_json(), model.vocab(), model.named_parameters(),
                     path);
}

seq2seq::PredictionModel load_prediction_model(const std::string& path) {
    std::optional<seq2seq::PredictionModel> model;
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw Error("checkpoint: cannot open: " + path);
    json header = read_header(probe, path);
    probe.close();
    const std::string kind = header.at("kind").get<std::string>();
    if (kind != kKindPredictionUser && kind != kKindPredictionAgent) {
        throw Error("checkpoint: kind mismatch: expected a prediction model, found " + kind);
    }
    const corpus::Role role =
        kind == kKindPredictionUser ? corpus::Role::User : corpus::Role::Agent;
    read_into(path, kind, [&](const json& cfg, const corpus::Vocabulary& vocab) {
        model.emplace(role, vocab, seq2seq::Seq2SeqConfig::from_json(cfg));
        return model->named_parameters();
    });
    return std::move(*model);
}

void save_decision_model(decision::DecisionModel& model, const std::string& path) {
    write_checkpoint(kKindDecision, model.config().to_json(), model.vocab(),
                     model.named_parameters(), path);
}

decision::DecisionModel load_decision_model(const std::string& path) {
    std::optional<decision::DecisionModel> model;
    read_into(path, kKindDecision, [&](const json& cfg, const corpus::Vocabulary& vocab) {
        model.emplace(vocab, decision::DecisionConfig::from_json(cfg));
        return model->named_parameters();
    });
    return std::move(*model);
}

void save_history_classifier(baselines::HistoryClassifier& model, const std::string& path) {
    write_checkpoint(kKindHistoryBaseline, model.config().to_json(), model.vocab(),
                     model.named_parameters(), path);
}

baselines::HistoryClassifier load_history_classifier(const std::string& path) {
    std::optional<baselines::HistoryClassifier> model;
    read_into(path, kKindHistoryBaseline, [&](const json& cfg, const corpus::Vocabulary& vocab) {
        model.emplace(vocab, decision::DecisionConfig::from_json(cfg));
        return model->named_parameters();
    });
    return std::move(*model);
}

}  // namespace ptd::checkpoint
