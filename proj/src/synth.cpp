#include "ptd/synth.hpp"

#include <filesystem>

#include "ptd/rng.hpp"

namespace ptd::synth {

using corpus::Dialogue;
using corpus::Utterance;

namespace {

struct Family {
    std::vector<std::vector<std::string>> sub_turns;  // k templates, no cue
    std::vector<std::string> reply;                   // agent answer
};

std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ' ') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

const std::vector<Family>& families() {
    static const std::vector<Family> fams = [] {
        auto fam = [](std::vector<std::string> subs, const std::string& reply) {
            Family f;
            for (const auto& s : subs) f.sub_turns.push_back(split_words(s));
            f.reply = split_words(reply);
            return f;
        };
        std::vector<Family> v;
        // one sub-turn
        v.push_back(fam({"i need a taxi to [taxi_destination]"},
                        "a taxi to [taxi_destination] is booked for you"));
        v.push_back(fam({"what is the phone number of [restaurant_name]"},
                        "the number is [restaurant_phone] can i help with anything else"));
        v.push_back(fam({"when does the [attraction_name] open"},
                        "it opens at [attraction_open] every day"));
        v.push_back(fam({"i want to order a large [pizza_topping] pizza"},
                        "one large [pizza_topping] pizza is on its way"));
        // two sub-turns
        v.push_back(fam({"i am looking for a hotel in [hotel_area]",
                         "it should include free parking"},
                        "i recommend [hotel_name] it has free parking"));
        v.push_back(fam({"i want a restaurant serving [restaurant_food]",
                         "somewhere in the [restaurant_area] part of town"},
                        "[restaurant_name] serves [restaurant_food] in the [restaurant_area]"));
        v.push_back(fam({"i need a train to [train_destination]",
                         "i want to leave after [train_time]"},
                        "the [train_id] leaves at [train_time] shall i book it"));
        v.push_back(fam({"my internet connection keeps dropping",
                         "it started after the storm yesterday"},
                        "i will send a technician to check your line"));
        // three sub-turns
        v.push_back(fam({"i am planning a trip to [trip_city]",
                         "we will arrive on [trip_date]",
                         "we need tickets for [trip_count] people"},
                        "i can arrange [trip_count] tickets for [trip_city] on [trip_date]"));
        v.push_back(fam({"i need a flight to [flight_city]", "departing on [flight_date]",
                         "economy class would be fine"},
                        "there is an economy flight to [flight_city] on [flight_date]"));
        v.push_back(fam({"i am interested in museums",
                         "preferably in the [museum_area] of the city",
                         "entrance should be free"},
                        "the [museum_name] in the [museum_area] has free entrance"));
        v.push_back(fam({"i need to update my account details",
                         "my new address is [account_address]",
                         "my phone number changed to [account_phone]"},
                        "your address and phone number are updated"));
        return v;
    }();
    return fams;
}

const std::vector<std::vector<std::string>>& greetings() {
    static const std::vector<std::vector<std::string>> g = {
        split_words("hello how can i help you"),
        split_words("good day what can i do for you"),
    };
    return g;
}

}  // namespace

const std::vector<std::string>& continuation_cues() {
    static const std::vector<std::string> c = {"and", "also", "plus"};
    return c;
}

const std::vector<std::string>& request_cues() {
    static const std::vector<std::string> c = {"please", "thanks"};
    return c;
}

std::vector<Dialogue> generate(const SynthOptions& opts) {
    if (opts.dialogues < 1) throw Error("synth: need at least one dialogue");
    const auto& fams = families();
    Rng rng(opts.seed);
    std::vector<Dialogue> out;
    out.reserve(static_cast<size_t>(opts.dialogues));
    for (int n = 0; n < opts.dialogues; ++n) {
        const Family& fam = fams[static_cast<size_t>(rng.uniform_int(
            0, static_cast<int>(fams.size()) - 1))];
        Dialogue d;
        d.dialogue_id = "synth-" + std::to_string(n);

        Utterance greet;
        greet.tokens = greetings()[static_cast<size_t>(
            rng.uniform_int(0, static_cast<int>(greetings().size()) - 1))];
        greet.turn_id = 0;
        greet.speaker_id = corpus::kAgentSpeaker;
        d.utterances.push_back(std::move(greet));

        const int k = static_cast<int>(fam.sub_turns.size());
        for (int j = 0; j < k; ++j) {
            Utterance u;
            u.tokens = fam.sub_turns[static_cast<size_t>(j)];
            if (!opts.hard) {
                const auto& cues = j + 1 < k ? continuation_cues() : request_cues();
                u.tokens.push_back(cues[static_cast<size_t>(
                    rng.uniform_int(0, static_cast<int>(cues.size()) - 1))]);
            }
            u.turn_id = 1;
            u.sub_turn_id = j;
            u.speaker_id = corpus::kUserSpeaker;
            d.utterances.push_back(std::move(u));
        }

        Utterance reply;
        reply.tokens = fam.reply;
        reply.turn_id = 2;
        reply.speaker_id = corpus::kAgentSpeaker;
        d.utterances.push_back(std::move(reply));

        corpus::validate_dialogue(d);
        out.push_back(std::move(d));
    }
    return out;
}

CorpusSplit split_dialogues(std::vector<Dialogue> all) {
    CorpusSplit split;
    const size_t n = all.size();
    size_t n_valid = n / 10;
    size_t n_test = n / 10;
    if (n >= 3) {
        if (n_valid == 0) n_valid = 1;
        if (n_test == 0) n_test = 1;
    }
    const size_t n_train = n - n_valid - n_test;
    for (size_t i = 0; i < n; ++i) {
        if (i < n_train) {
            split.train.push_back(std::move(all[i]));
        } else if (i < n_train + n_valid) {
            split.valid.push_back(std::move(all[i]));
        } else {
            split.test.push_back(std::move(all[i]));
        }
    }
    return split;
}

void write_split(const CorpusSplit& split, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    corpus::serialize_corpus(split.train, (dir / "train.jsonl").string());
    corpus::serialize_corpus(split.valid, (dir / "valid.jsonl").string());
    corpus::serialize_corpus(split.test, (dir / "test.jsonl").string());
}

}  // namespace ptd::synth
