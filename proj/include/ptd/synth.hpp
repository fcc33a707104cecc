#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ptd/corpus.hpp"

namespace ptd::synth {

struct SynthOptions {
    int dialogues = 100;
    uint64_t seed = 7;
    // Drop the surface cue tokens; labels then depend only on how far a
    // template family has progressed.
    bool hard = false;
};

// Each dialogue: agent greeting, one user turn with a family-fixed number
// of sub-turns (1, 2 or 3), agent reply. Non-final user sub-turns end with
// a continuation cue (and/also/plus), the final one with a request cue
// (please/thanks). Content comes from slot-templated sentence families so
// continuations are near-deterministic given the first sub-turn.
std::vector<corpus::Dialogue> generate(const SynthOptions& opts);

struct CorpusSplit {
    std::vector<corpus::Dialogue> train;
    std::vector<corpus::Dialogue> valid;
    std::vector<corpus::Dialogue> test;
};

// 80/10/10 by dialogue order; valid and test get at least one dialogue
// each once there are three or more.
CorpusSplit split_dialogues(std::vector<corpus::Dialogue> all);

// Writes train.jsonl, valid.jsonl, test.jsonl under out_dir.
void write_split(const CorpusSplit& split, const std::string& out_dir);

const std::vector<std::string>& continuation_cues();
const std::vector<std::string>& request_cues();

}  // namespace ptd::synth
