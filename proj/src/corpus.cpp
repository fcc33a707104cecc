#include "ptd/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ptd::corpus {

using nlohmann::json;

namespace {

const std::string kPunctuation = ".,!?;:\"'()[]";

bool is_punct_char(char c) { return kPunctuation.find(c) != std::string::npos; }

std::string to_lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string> special_names() {
    return {"<pad>", "<unk>", "<bos>", "<eos>", "<sep>"};
}

}  // namespace

bool is_slot_placeholder(const std::string& token) {
    if (token.size() < 3 || token.front() != '[' || token.back() != ']') return false;
    for (size_t i = 1; i + 1 < token.size(); ++i) {
        char c = token[i];
        if (!std::islower(static_cast<unsigned char>(c)) &&
            !std::isdigit(static_cast<unsigned char>(c)) && c != '_') {
            return false;
        }
    }
    return true;
}

bool contains_punctuation(const std::string& token) {
    if (is_slot_placeholder(token)) return false;
    return std::any_of(token.begin(), token.end(), is_punct_char);
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream iss(to_lower(text));
    std::string raw;
    while (iss >> raw) {
        if (is_slot_placeholder(raw)) {
            out.push_back(raw);
            continue;
        }
        // a placeholder followed by sentence punctuation, e.g. "[address]."
        bool matched = false;
        for (size_t end = raw.size() - 1; end > 0 && is_punct_char(raw[end]); --end) {
            if (is_slot_placeholder(raw.substr(0, end))) {
                out.push_back(raw.substr(0, end));
                matched = true;
                break;
            }
        }
        if (matched) continue;
        std::string stripped;
        for (char c : raw) {
            if (!is_punct_char(c)) stripped.push_back(c);
        }
        if (!stripped.empty()) out.push_back(std::move(stripped));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() {
    id_to_token_ = special_names();
    for (int i = 0; i < kNumSpecials; ++i) token_to_id_[id_to_token_[i]] = i;
}

int Vocabulary::id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || id >= size()) throw Error("vocabulary: id " + std::to_string(id) + " out of range");
    return id_to_token_[id];
}

uint64_t Vocabulary::hash() const {
    uint64_t h = fnv1a("vocab:" + std::to_string(min_freq_));
    for (const auto& t : id_to_token_) {
        h = fnv1a(t, h);
        h = fnv1a("\x1f", h);
    }
    return h;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& non_special_tokens,
                                   int min_freq) {
    Vocabulary v;
    v.min_freq_ = min_freq;
    for (const auto& t : non_special_tokens) {
        if (v.token_to_id_.count(t)) throw DataError("vocabulary: duplicate token '" + t + "'");
        v.token_to_id_[t] = v.size();
        v.id_to_token_.push_back(t);
    }
    return v;
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& samples, int min_freq) {
    if (min_freq < 1) throw Error("build_vocabulary: min_freq must be >= 1");
    std::map<std::string, int64_t> freq;
    for (const auto& s : samples) {
        for (const auto& t : s) ++freq[t];
    }
    std::vector<std::pair<std::string, int64_t>> kept;
    for (const auto& [tok, n] : freq) {
        if (n >= min_freq) kept.emplace_back(tok, n);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> ordered;
    ordered.reserve(kept.size());
    for (auto& [tok, n] : kept) ordered.push_back(tok);
    return Vocabulary::from_tokens(ordered, min_freq);
}

Vocabulary build_vocabulary(const std::vector<Dialogue>& dialogues, int min_freq) {
    std::vector<std::vector<std::string>> samples;
    for (const auto& d : dialogues) {
        for (const auto& u : d.utterances) samples.push_back(u.tokens);
    }
    return build_vocabulary(samples, min_freq);
}

// ---------------------------------------------------------------------------
// Parsing and validation

void validate_dialogue(const Dialogue& d) {
    auto fail = [&](const std::string& what) {
        throw DataError("dialogue '" + d.dialogue_id + "': " + what);
    };
    for (size_t i = 0; i < d.utterances.size(); ++i) {
        const Utterance& u = d.utterances[i];
        if (u.tokens.empty()) fail("empty utterance at index " + std::to_string(i));
        for (const auto& t : u.tokens) {
            if (contains_punctuation(t)) fail("punctuation in token '" + t + "'");
        }
        if (u.speaker_id != kUserSpeaker && u.speaker_id != kAgentSpeaker) {
            fail("bad speaker_id " + std::to_string(u.speaker_id));
        }
        if (i == 0) {
            if (u.sub_turn_id != 0) fail("first utterance must have sub_turn_id 0");
            continue;
        }
        const Utterance& prev = d.utterances[i - 1];
        if (u.turn_id == prev.turn_id) {
            if (u.speaker_id != prev.speaker_id) fail("speaker change inside a turn");
            if (u.sub_turn_id != prev.sub_turn_id + 1) fail("sub_turn_ids not consecutive");
        } else if (u.turn_id > prev.turn_id) {
            if (u.speaker_id == prev.speaker_id) {
                fail("speaker does not alternate between turns " + std::to_string(prev.turn_id) +
                     " and " + std::to_string(u.turn_id));
            }
            if (u.sub_turn_id != 0) fail("new turn must start at sub_turn_id 0");
        } else {
            fail("turn_ids decrease at index " + std::to_string(i));
        }
    }
    // Agent turns carry exactly one merged sub-turn.
    for (const auto& u : d.utterances) {
        if (u.speaker_id == kAgentSpeaker && u.sub_turn_id != 0) {
            fail("agent turn " + std::to_string(u.turn_id) + " has multiple sub-turns");
        }
    }
}

namespace {

json parse_line(const std::string& line, const std::string& path, size_t lineno) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw DataError(path + ":" + std::to_string(lineno) + ": malformed JSON record");
    }
    return j;
}

Utterance utterance_from_json(const json& j, const std::string& ctx) {
    if (!j.is_object() || !j.contains("tokens") || !j["tokens"].is_array()) {
        throw DataError(ctx + ": utterance missing tokens array");
    }
    Utterance u;
    for (const auto& t : j["tokens"]) u.tokens.push_back(t.get<std::string>());
    u.turn_id = j.at("turn_id").get<int>();
    u.sub_turn_id = j.at("sub_turn_id").get<int>();
    u.speaker_id = j.at("speaker_id").get<int>();
    if (j.contains("sentence_lens")) {
        for (const auto& n : j["sentence_lens"]) u.sentence_lens.push_back(n.get<int>());
    }
    return u;
}

}  // namespace

std::vector<Dialogue> parse_raw_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path);
    std::vector<Dialogue> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = parse_line(line, path, lineno);
        if (!j.contains("dialogue_id") || !j.contains("turns") || !j["turns"].is_array()) {
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": raw record needs dialogue_id and turns");
        }
        Dialogue d;
        d.dialogue_id = j["dialogue_id"].get<std::string>();
        int turn_id = 0;
        int prev_speaker = -1;
        for (const auto& turn : j["turns"]) {
            const std::string speaker = turn.at("speaker").get<std::string>();
            int speaker_id;
            if (speaker == "user") {
                speaker_id = kUserSpeaker;
            } else if (speaker == "agent") {
                speaker_id = kAgentSpeaker;
            } else {
                throw DataError(path + ":" + std::to_string(lineno) + ": dialogue '" +
                                d.dialogue_id + "': unknown speaker '" + speaker + "'");
            }
            if (speaker_id == prev_speaker) {
                throw DataError(path + ":" + std::to_string(lineno) + ": dialogue '" +
                                d.dialogue_id + "': consecutive turns share speaker");
            }
            prev_speaker = speaker_id;
            Utterance u;
            u.turn_id = turn_id;
            u.sub_turn_id = 0;
            u.speaker_id = speaker_id;
            for (const auto& s : turn.at("sentences")) {
                auto toks = tokenize(s.get<std::string>());
                if (toks.empty()) continue;  // punctuation-only sentence
                u.sentence_lens.push_back(static_cast<int>(toks.size()));
                u.tokens.insert(u.tokens.end(), toks.begin(), toks.end());
            }
            if (u.tokens.empty()) {
                throw DataError(path + ":" + std::to_string(lineno) + ": dialogue '" +
                                d.dialogue_id + "': turn " + std::to_string(turn_id) +
                                " has no tokens");
            }
            // Agent sub-turns merge into one utterance; single-sentence
            // boundary marks carry no information.
            if (speaker_id == kAgentSpeaker || u.sentence_lens.size() < 2) {
                u.sentence_lens.clear();
            }
            d.utterances.push_back(std::move(u));
            ++turn_id;
        }
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<Dialogue> parse_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path);
    std::vector<Dialogue> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = parse_line(line, path, lineno);
        if (!j.contains("dialogue_id") || !j.contains("utterances") ||
            !j["utterances"].is_array()) {
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": record needs dialogue_id and utterances");
        }
        Dialogue d;
        d.dialogue_id = j["dialogue_id"].get<std::string>();
        const std::string ctx = path + ":" + std::to_string(lineno);
        try {
            for (const auto& uj : j["utterances"]) {
                d.utterances.push_back(utterance_from_json(uj, ctx));
            }
        } catch (const json::exception& e) {
            throw DataError(ctx + ": malformed utterance: " + e.what());
        }
        validate_dialogue(d);
        out.push_back(std::move(d));
    }
    return out;
}

void serialize_corpus(const std::vector<Dialogue>& dialogues, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write corpus file: " + path);
    for (const auto& d : dialogues) {
        json j;
        j["dialogue_id"] = d.dialogue_id;
        j["utterances"] = json::array();
        for (const auto& u : d.utterances) {
            json uj;
            uj["tokens"] = u.tokens;
            uj["turn_id"] = u.turn_id;
            uj["sub_turn_id"] = u.sub_turn_id;
            uj["speaker_id"] = u.speaker_id;
            if (!u.sentence_lens.empty()) uj["sentence_lens"] = u.sentence_lens;
            j["utterances"].push_back(std::move(uj));
        }
        out << j.dump() << "\n";
    }
}

// ---------------------------------------------------------------------------
// Delexicalisation

SlotTable load_slot_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open slot table: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DataError("slot table is not a JSON object");
    SlotTable slots;
    for (auto& [value, placeholder] : j.items()) {
        const std::string p = placeholder.get<std::string>();
        if (!is_slot_placeholder(p)) {
            throw DataError("slot placeholder '" + p + "' is not bracketed lowercase");
        }
        slots[value] = p;
    }
    return slots;
}

namespace {

struct SlotPattern {
    std::vector<std::string> value_tokens;
    std::string placeholder;
};

// Replace longest-match value occurrences inside one token span.
std::vector<std::string> delex_span(const std::vector<std::string>& tokens,
                                    const std::vector<SlotPattern>& patterns) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < tokens.size()) {
        const SlotPattern* hit = nullptr;
        for (const auto& p : patterns) {
            const size_t n = p.value_tokens.size();
            if (n == 0 || i + n > tokens.size()) continue;
            if (std::equal(p.value_tokens.begin(), p.value_tokens.end(), tokens.begin() + i)) {
                hit = &p;
                break;  // patterns are longest-first
            }
        }
        if (hit) {
            out.push_back(hit->placeholder);
            i += hit->value_tokens.size();
        } else {
            out.push_back(tokens[i]);
            ++i;
        }
    }
    return out;
}

}  // namespace

Dialogue delexicalize(const Dialogue& d, const SlotTable& slots) {
    std::vector<SlotPattern> patterns;
    for (const auto& [value, placeholder] : slots) {
        SlotPattern p;
        p.value_tokens = tokenize(value);
        p.placeholder = placeholder;
        if (!p.value_tokens.empty()) patterns.push_back(std::move(p));
    }
    std::stable_sort(patterns.begin(), patterns.end(), [](const auto& a, const auto& b) {
        return a.value_tokens.size() > b.value_tokens.size();
    });
    Dialogue out = d;
    for (auto& u : out.utterances) {
        if (u.sentence_lens.empty()) {
            u.tokens = delex_span(u.tokens, patterns);
        } else {
            // per-sentence so matches never cross sentence boundaries
            std::vector<std::string> rebuilt;
            std::vector<int> lens;
            size_t pos = 0;
            for (int len : u.sentence_lens) {
                std::vector<std::string> sent(u.tokens.begin() + pos,
                                              u.tokens.begin() + pos + len);
                auto repl = delex_span(sent, patterns);
                lens.push_back(static_cast<int>(repl.size()));
                rebuilt.insert(rebuilt.end(), repl.begin(), repl.end());
                pos += len;
            }
            u.tokens = std::move(rebuilt);
            u.sentence_lens = std::move(lens);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Segmentation

Dialogue segment_user_turns(const Dialogue& d, double fraction, uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0) {
        throw Error("segment_user_turns: fraction must be in [0,1], got " +
                    std::to_string(fraction));
    }
    std::vector<size_t> eligible;  // indices of splittable user utterances
    for (size_t i = 0; i < d.utterances.size(); ++i) {
        const Utterance& u = d.utterances[i];
        if (u.speaker_id == kUserSpeaker && u.multi_sentence()) eligible.push_back(i);
    }
    const size_t n_split =
        static_cast<size_t>(std::llround(fraction * static_cast<double>(eligible.size())));
    std::vector<std::pair<uint64_t, size_t>> ranked;
    for (size_t idx : eligible) {
        const std::string key = d.dialogue_id + ":" + std::to_string(d.utterances[idx].turn_id) +
                                ":" + std::to_string(seed);
        ranked.emplace_back(fnv1a(key), idx);
    }
    std::sort(ranked.begin(), ranked.end());
    std::vector<bool> split(d.utterances.size(), false);
    for (size_t k = 0; k < n_split && k < ranked.size(); ++k) split[ranked[k].second] = true;

    Dialogue out;
    out.dialogue_id = d.dialogue_id;
    for (size_t i = 0; i < d.utterances.size(); ++i) {
        const Utterance& u = d.utterances[i];
        if (split[i]) {
            size_t pos = 0;
            int sub = u.sub_turn_id;
            for (int len : u.sentence_lens) {
                Utterance part;
                part.turn_id = u.turn_id;
                part.sub_turn_id = sub++;
                part.speaker_id = u.speaker_id;
                part.tokens.assign(u.tokens.begin() + pos, u.tokens.begin() + pos + len);
                pos += len;
                out.utterances.push_back(std::move(part));
            }
        } else {
            Utterance merged = u;
            merged.sentence_lens.clear();
            out.utterances.push_back(std::move(merged));
        }
    }
    // Punctuation removal is part of this construction stage.
    for (auto& u : out.utterances) {
        std::vector<std::string> kept;
        for (auto& t : u.tokens) {
            std::string stripped;
            if (is_slot_placeholder(t)) {
                stripped = t;
            } else {
                for (char c : t) {
                    if (!is_punct_char(c)) stripped.push_back(c);
                }
            }
            if (!stripped.empty()) kept.push_back(std::move(stripped));
        }
        u.tokens = std::move(kept);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sample extraction

std::vector<DecisionSample> extract_decision_samples(const Dialogue& d) {
    std::vector<DecisionSample> out;
    for (size_t i = 0; i + 1 < d.utterances.size(); ++i) {
        if (d.utterances[i].speaker_id != kUserSpeaker) continue;
        DecisionSample s;
        s.history.assign(d.utterances.begin(), d.utterances.begin() + i + 1);
        s.label = d.utterances[i + 1].speaker_id == kAgentSpeaker ? 1 : 0;
        s.sample_id = d.dialogue_id + ":" + std::to_string(i);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<PredictionSample> extract_prediction_samples(const Dialogue& d, Role role) {
    const int target_speaker = role == Role::User ? kUserSpeaker : kAgentSpeaker;
    std::vector<PredictionSample> out;
    for (size_t i = 0; i + 1 < d.utterances.size(); ++i) {
        if (d.utterances[i].speaker_id != kUserSpeaker) continue;
        if (d.utterances[i + 1].speaker_id != target_speaker) continue;
        PredictionSample s;
        s.history.assign(d.utterances.begin(), d.utterances.begin() + i + 1);
        s.target = d.utterances[i + 1];
        s.role = role;
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Encoding

std::vector<EncodedToken> encode_history(const std::vector<Utterance>& history,
                                         const Vocabulary& vocab, const TagCaps& caps) {
    if (history.empty()) throw Error("encode_history: empty history");
    std::vector<EncodedToken> seq;
    for (size_t j = 0; j < history.size(); ++j) {
        const Utterance& u = history[j];
        const int turn = std::min(u.turn_id, caps.max_turn);
        const int sub = std::min(u.sub_turn_id, caps.max_sub_turn);
        if (j > 0) {
            seq.push_back({Vocabulary::kSep, turn, sub, u.speaker_id});
        }
        for (const auto& t : u.tokens) {
            seq.push_back({vocab.id(t), turn, sub, u.speaker_id});
        }
    }
    if (static_cast<int>(seq.size()) > caps.max_len) {
        seq.erase(seq.begin(), seq.end() - caps.max_len);
    }
    return seq;
}

}  // namespace ptd::corpus
