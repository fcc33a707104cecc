#pragma once

#include <string>
#include <vector>

#include "ptd/common.hpp"

namespace ptd::metrics {

using TokenSeq = std::vector<std::string>;

// Corpus-level cumulative BLEU-1..4: clipped n-gram precisions pooled over
// the corpus, uniform 1/4 weights, brevity penalty min(1, e^(1 - r/c)).
// Unsmoothed; any zero n-gram precision yields 0. Scale is [0, 100].
double bleu_cumulative(const std::vector<TokenSeq>& candidates,
                       const std::vector<TokenSeq>& references);

// Sentence-level variant with add-one smoothing on n >= 2 precisions, for
// probes where most sentences share few higher-order n-grams.
double bleu_sentence_smoothed(const TokenSeq& candidate, const TokenSeq& reference);
double bleu_sentence_smoothed_avg(const std::vector<TokenSeq>& candidates,
                                  const std::vector<TokenSeq>& references);

struct ClassificationReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    bool degenerate = false;  // some ratio had a zero denominator

    std::string to_json_string() const;
};

// Positive class is 1 (answer).
ClassificationReport classification_report(const std::vector<int>& preds,
                                           const std::vector<int>& golds);

}  // namespace ptd::metrics
