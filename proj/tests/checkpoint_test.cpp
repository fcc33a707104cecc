#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ptd/checkpoint.hpp"
#include "ptd/synth.hpp"

using namespace ptd;
using namespace ptd::checkpoint;
using corpus::Role;
using corpus::Vocabulary;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Vocabulary ckpt_vocab() {
    return corpus::build_vocabulary(
        std::vector<std::vector<std::string>>{{"hello", "world", "again", "now"}}, 1);
}

}  // namespace

TEST_CASE("prediction model round-trips bit-exactly at f32") {
    auto vocab = ckpt_vocab();
    seq2seq::Seq2SeqConfig cfg;
    cfg.hidden = 6;
    cfg.d_tok = 4;
    cfg.d_tag = 2;
    cfg.seed = 11;
    seq2seq::PredictionModel model(Role::User, vocab, cfg);

    const std::string p1 = temp_path("ptd_ckpt_a.bin");
    const std::string p2 = temp_path("ptd_ckpt_b.bin");
    save_prediction_model(model, p1);
    auto loaded = load_prediction_model(p1);
    CHECK(loaded.role() == Role::User);
    CHECK(loaded.vocab().hash() == vocab.hash());

    auto orig = model.named_parameters();
    auto back = loaded.named_parameters();
    REQUIRE(orig.size() == back.size());
    for (size_t i = 0; i < orig.size(); ++i) {
        CHECK(orig[i].first == back[i].first);
        REQUIRE(orig[i].second->numel() == back[i].second->numel());
        for (size_t j = 0; j < orig[i].second->numel(); ++j) {
            CHECK(static_cast<float>(orig[i].second->data[j]) ==
                  static_cast<float>(back[i].second->data[j]));
        }
    }

    save_prediction_model(loaded, p2);
    CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("decision and history models round-trip") {
    auto vocab = ckpt_vocab();
    decision::DecisionConfig cfg;
    cfg.d_tok = 4;
    cfg.d_tag = 2;
    cfg.n_filters = 3;
    cfg.filter_widths = {2};
    cfg.fusion_dim = 4;
    cfg.classifier_hidden = 4;

    decision::DecisionModel dec(vocab, cfg);
    const std::string pd = temp_path("ptd_ckpt_dec.bin");
    save_decision_model(dec, pd);
    auto dec2 = load_decision_model(pd);
    // f64 -> f32 -> f64 is idempotent from the second save on
    save_decision_model(dec2, pd);
    auto dec3 = load_decision_model(pd);
    CHECK(dec2.parameter_hash() == dec3.parameter_hash());

    baselines::HistoryClassifier hc(vocab, cfg);
    const std::string ph = temp_path("ptd_ckpt_hist.bin");
    save_history_classifier(hc, ph);
    auto hc2 = load_history_classifier(ph);
    CHECK(hc2.config().n_filters == cfg.n_filters);
}

TEST_CASE("inspect reads the header without touching parameters") {
    auto vocab = ckpt_vocab();
    seq2seq::Seq2SeqConfig cfg;
    cfg.hidden = 6;
    cfg.d_tok = 4;
    cfg.d_tag = 2;
    seq2seq::PredictionModel model(Role::Agent, vocab, cfg);
    const std::string path = temp_path("ptd_ckpt_inspect.bin");
    save_prediction_model(model, path);

    auto info = inspect(path);
    CHECK(info.kind == kKindPredictionAgent);
    CHECK(info.vocab_size == vocab.size());
    CHECK(info.tensors.size() == model.named_parameters().size());
    CHECK(info.tensors[0].offset == 0);

    // header-only: inspect still works when the blob is chopped off
    std::string bytes = slurp(path);
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 64));
    out.close();
    CHECK(inspect(path).kind == kKindPredictionAgent);
    CHECK_THROWS_WITH_AS(load_prediction_model(path),
                         doctest::Contains("truncated"), Error);
}

TEST_CASE("corrupted magic is rejected") {
    auto vocab = ckpt_vocab();
    decision::DecisionConfig cfg;
    cfg.d_tok = 4;
    cfg.d_tag = 2;
    cfg.n_filters = 2;
    cfg.filter_widths = {2};
    decision::DecisionModel model(vocab, cfg);
    const std::string path = temp_path("ptd_ckpt_magic.bin");
    save_decision_model(model, path);
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XX", 2);
    f.close();
    CHECK_THROWS_WITH_AS(load_decision_model(path), doctest::Contains("bad magic"), Error);
    CHECK_THROWS_WITH_AS(inspect(path), doctest::Contains("bad magic"), Error);
}

TEST_CASE("kind mismatch is rejected") {
    auto vocab = ckpt_vocab();
    decision::DecisionConfig cfg;
    cfg.d_tok = 4;
    cfg.d_tag = 2;
    cfg.n_filters = 2;
    cfg.filter_widths = {2};
    decision::DecisionModel model(vocab, cfg);
    const std::string path = temp_path("ptd_ckpt_kind.bin");
    save_decision_model(model, path);
    CHECK_THROWS_WITH_AS(load_prediction_model(path), doctest::Contains("kind"), Error);
    CHECK_THROWS_WITH_AS(load_history_classifier(path), doctest::Contains("kind"), Error);
}

TEST_CASE("vocabulary edits invalidate the tensor index") {
    auto vocab = ckpt_vocab();
    decision::DecisionConfig cfg;
    cfg.d_tok = 4;
    cfg.d_tag = 2;
    cfg.n_filters = 2;
    cfg.filter_widths = {2};
    decision::DecisionModel model(vocab, cfg);
    const std::string path = temp_path("ptd_ckpt_vocab.bin");
    save_decision_model(model, path);

    // drop one vocabulary word from the header; embedding shapes no longer fit
    std::string bytes = slurp(path);
    uint32_t hlen = 0;
    for (int i = 0; i < 4; ++i) {
        hlen |= static_cast<uint32_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
    }
    auto header = nlohmann::json::parse(bytes.substr(12, hlen));
    auto& words = header["vocabulary"]["words"];
    words.erase(words.size() - 1);
    const std::string new_header = header.dump();
    const uint32_t nlen = static_cast<uint32_t>(new_header.size());
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), 8);
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((nlen >> (8 * i)) & 0xff));
    out << new_header;
    out << bytes.substr(12 + hlen);
    out.close();

    CHECK_THROWS_WITH_AS(load_decision_model(path), doctest::Contains("shape"), Error);
}
