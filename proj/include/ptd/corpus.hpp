#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ptd/common.hpp"

namespace ptd::corpus {

constexpr int kUserSpeaker = 0;
constexpr int kAgentSpeaker = 1;

struct Utterance {
    std::vector<std::string> tokens;
    int turn_id = 0;
    int sub_turn_id = 0;
    int speaker_id = kUserSpeaker;
    // Token counts per source sentence, kept until segmentation decides
    // whether this turn stays merged. Empty once an utterance is final.
    std::vector<int> sentence_lens;

    bool multi_sentence() const { return sentence_lens.size() >= 2; }
};

struct Dialogue {
    std::string dialogue_id;
    std::vector<Utterance> utterances;
};

struct DecisionSample {
    std::vector<Utterance> history;  // ends with a user utterance
    int label = 0;                   // 0 = wait, 1 = answer
    std::string sample_id;           // dialogue_id + ":" + history end index
};

enum class Role { User, Agent };

struct PredictionSample {
    std::vector<Utterance> history;  // ends with a user utterance
    Utterance target;
    Role role = Role::User;
};

class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kBos = 2;
    static constexpr int kEos = 3;
    static constexpr int kSep = 4;
    static constexpr int kNumSpecials = 5;

    Vocabulary();

    int id(const std::string& token) const;  // UNK for unknown tokens
    const std::string& token(int id) const;
    int size() const { return static_cast<int>(id_to_token_.size()); }
    int min_freq() const { return min_freq_; }
    uint64_t hash() const;

    const std::vector<std::string>& tokens() const { return id_to_token_; }

    static Vocabulary from_tokens(const std::vector<std::string>& non_special_tokens,
                                  int min_freq);

private:
    friend Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>&, int);
    std::unordered_map<std::string, int> token_to_id_;
    std::vector<std::string> id_to_token_;
    int min_freq_ = 1;
};

// Ordered longest-value-first; map from surface value to bracketed placeholder.
using SlotTable = std::map<std::string, std::string>;

struct TagCaps {
    int max_turn = 20;
    int max_sub_turn = 8;
    int max_len = 64;
};

struct EncodedToken {
    int token_id = 0;
    int turn_id = 0;
    int sub_turn_id = 0;
    int speaker_id = 0;
};

// Lowercase, whitespace split, punctuation characters stripped. Bracketed
// slot placeholders pass through untouched.
std::vector<std::string> tokenize(const std::string& text);
bool is_slot_placeholder(const std::string& token);
bool contains_punctuation(const std::string& token);

// Raw records: {"dialogue_id", "turns": [{"speaker", "sentences": [...]}]}.
// Agent sub-turns are merged immediately; user turns keep sentence bounds.
std::vector<Dialogue> parse_raw_corpus(const std::string& path);

// Constructed records: {"dialogue_id", "utterances": [...]}; invariants
// are validated (speaker alternation, dense sub-turns, merged agent turns).
std::vector<Dialogue> parse_corpus(const std::string& path);
void serialize_corpus(const std::vector<Dialogue>& dialogues, const std::string& path);
void validate_dialogue(const Dialogue& d);

SlotTable load_slot_table(const std::string& path);
Dialogue delexicalize(const Dialogue& d, const SlotTable& slots);

// Splits round(fraction * eligible) multi-sentence user turns per dialogue
// into one utterance per sentence; the rest are merged. Selection is by
// seeded hash of dialogue_id + turn_id, so a rerun is identical.
Dialogue segment_user_turns(const Dialogue& d, double fraction, uint64_t seed);

std::vector<DecisionSample> extract_decision_samples(const Dialogue& d);
std::vector<PredictionSample> extract_prediction_samples(const Dialogue& d, Role role);

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& samples, int min_freq);
Vocabulary build_vocabulary(const std::vector<Dialogue>& dialogues, int min_freq);

std::vector<EncodedToken> encode_history(const std::vector<Utterance>& history,
                                         const Vocabulary& vocab, const TagCaps& caps);

}  // namespace ptd::corpus
