#include "ptd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

namespace ptd::metrics {

namespace {

constexpr int kMaxOrder = 4;

using NgramCounts = std::map<std::vector<std::string>, int64_t>;

NgramCounts count_ngrams(const TokenSeq& seq, int n) {
    NgramCounts counts;
    if (static_cast<int>(seq.size()) < n) return counts;
    for (size_t i = 0; i + n <= seq.size(); ++i) {
        ++counts[std::vector<std::string>(seq.begin() + i, seq.begin() + i + n)];
    }
    return counts;
}

// clipped matches and candidate n-gram total for one pair
std::pair<int64_t, int64_t> clipped_matches(const TokenSeq& cand, const TokenSeq& ref, int n) {
    auto cc = count_ngrams(cand, n);
    auto rc = count_ngrams(ref, n);
    int64_t matched = 0, total = 0;
    for (const auto& [gram, count] : cc) {
        total += count;
        auto it = rc.find(gram);
        if (it != rc.end()) matched += std::min(count, it->second);
    }
    return {matched, total};
}

double brevity_penalty(int64_t ref_len, int64_t cand_len) {
    if (cand_len == 0) return 0.0;
    if (cand_len >= ref_len) return 1.0;
    return std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
}

}  // namespace

double bleu_cumulative(const std::vector<TokenSeq>& candidates,
                       const std::vector<TokenSeq>& references) {
    if (candidates.size() != references.size()) {
        throw Error("bleu: " + std::to_string(candidates.size()) + " candidates vs " +
                    std::to_string(references.size()) + " references");
    }
    if (candidates.empty()) throw Error("bleu: empty input");
    int64_t matched[kMaxOrder] = {0}, total[kMaxOrder] = {0};
    int64_t cand_len = 0, ref_len = 0;
    for (size_t i = 0; i < candidates.size(); ++i) {
        cand_len += static_cast<int64_t>(candidates[i].size());
        ref_len += static_cast<int64_t>(references[i].size());
        for (int n = 1; n <= kMaxOrder; ++n) {
            auto [m, t] = clipped_matches(candidates[i], references[i], n);
            matched[n - 1] += m;
            total[n - 1] += t;
        }
    }
    double log_sum = 0.0;
    for (int n = 0; n < kMaxOrder; ++n) {
        if (total[n] == 0 || matched[n] == 0) return 0.0;
        log_sum += std::log(static_cast<double>(matched[n]) / static_cast<double>(total[n]));
    }
    return 100.0 * brevity_penalty(ref_len, cand_len) * std::exp(log_sum / kMaxOrder);
}

double bleu_sentence_smoothed(const TokenSeq& candidate, const TokenSeq& reference) {
    if (candidate.empty()) return 0.0;
    double log_sum = 0.0;
    for (int n = 1; n <= kMaxOrder; ++n) {
        auto [m, t] = clipped_matches(candidate, reference, n);
        double p;
        if (n == 1) {
            if (m == 0 || t == 0) return 0.0;
            p = static_cast<double>(m) / static_cast<double>(t);
        } else {
            p = (static_cast<double>(m) + 1.0) / (static_cast<double>(t) + 1.0);
        }
        log_sum += std::log(p);
    }
    return 100.0 *
           brevity_penalty(static_cast<int64_t>(reference.size()),
                           static_cast<int64_t>(candidate.size())) *
           std::exp(log_sum / kMaxOrder);
}

double bleu_sentence_smoothed_avg(const std::vector<TokenSeq>& candidates,
                                  const std::vector<TokenSeq>& references) {
    if (candidates.size() != references.size()) {
        throw Error("bleu: candidate/reference count mismatch");
    }
    if (candidates.empty()) throw Error("bleu: empty input");
    double sum = 0.0;
    for (size_t i = 0; i < candidates.size(); ++i) {
        sum += bleu_sentence_smoothed(candidates[i], references[i]);
    }
    return sum / static_cast<double>(candidates.size());
}

ClassificationReport classification_report(const std::vector<int>& preds,
                                           const std::vector<int>& golds) {
    if (preds.size() != golds.size() || preds.empty()) {
        throw Error("classification_report: lengths " + std::to_string(preds.size()) + " vs " +
                    std::to_string(golds.size()));
    }
    ClassificationReport r;
    for (size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == 1 && golds[i] == 1) ++r.tp;
        else if (preds[i] == 1 && golds[i] == 0) ++r.fp;
        else if (preds[i] == 0 && golds[i] == 1) ++r.fn;
        else ++r.tn;
    }
    r.accuracy = static_cast<double>(r.tp + r.tn) / static_cast<double>(preds.size());
    if (r.tp + r.fp > 0) {
        r.precision = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp);
    } else {
        r.degenerate = true;
    }
    if (r.tp + r.fn > 0) {
        r.recall = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
    } else {
        r.degenerate = true;
    }
    if (r.precision + r.recall > 0.0) {
        r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    } else {
        r.degenerate = true;
    }
    return r;
}

std::string ClassificationReport::to_json_string() const {
    nlohmann::json j;
    j["accuracy"] = accuracy;
    j["precision"] = precision;
    j["recall"] = recall;
    j["f1"] = f1;
    j["tp"] = tp;
    j["fp"] = fp;
    j["fn"] = fn;
    j["tn"] = tn;
    j["degenerate"] = degenerate;
    return j.dump();
}

}  // namespace ptd::metrics
