#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "a4nt/classifier.hpp"
#include "a4nt/translator.hpp"

namespace a4nt {

/// F1 of one positive class: harmonic mean of precision and recall, 0 when
/// both are 0. Throws on empty or unequal-length inputs.
double f1_score(std::span<const int> truth, std::span<const int> predicted, int positive);

struct ClassScores {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

struct F1Report {
    std::array<ClassScores, 2> per_class{};
    double macro_f1 = 0;
    double accuracy = 0;
};

F1Report f1_report(std::span<const int> truth, std::span<const int> predicted);

struct MeteorAlignment {
    int matches = 0;
    int chunks = 0;
    double precision = 0;
    double recall = 0;
    double fmean = 0;
    double penalty = 0;
    double score = 0;
};

/// Exact-match unigram alignment with the most matches and, among those,
/// the fewest chunks (bounded search, greedy beyond the node budget).
MeteorAlignment meteor_alignment(std::span<const int> candidate, std::span<const int> reference);
/// Fmean * (1 - 0.5 (chunks/matches)^3), Fmean = 10PR / (R + 9P); 0 without matches.
double meteor_proxy(std::span<const int> candidate, std::span<const int> reference);
inline double meteor_proxy(const Sentence& candidate, const Sentence& reference) {
    return meteor_proxy(candidate.words(), reference.words());
}

/// Rewrites sentences of class `source` into the other class.
using TransferFn =
    std::function<std::vector<Sentence>(std::span<const Sentence> sentences, int source, std::uint64_t seed)>;

TransferFn identity_transfer();
/// Hard sampling (or greedy) with decoders[source]; the call's seed
/// replaces options.seed. The model must outlive the function.
TransferFn translator_transfer(const TranslatorModel& model, TranslateOptions options);

/// Every sentence rewritten from its document's class. Documents, order and
/// labels are kept.
Corpus transfer_corpus(const Corpus& corpus, const TransferFn& transfer, std::uint64_t seed);

struct EvalMetrics {
    F1Report sentence;
    F1Report document;
    /// Mean meteor_proxy of output vs input sentences.
    double meteor = 0;
    std::size_t sentences = 0;
    std::size_t documents = 0;
};

/// Per-sentence class log-probabilities, grouped by document.
std::vector<std::vector<ClassProbabilities>> corpus_log_probs(const ClassifierModel& classifier,
                                                              const Corpus& corpus);

/// Scores `output` (documents aligned with `input`) against the input labels.
EvalMetrics score_transfer(const ClassifierModel& classifier, const Corpus& input, const Corpus& output,
                           DocumentAggregation aggregation = DocumentAggregation::LogProbSum);

EvalMetrics evaluate_transfer(const TransferFn& transfer, const ClassifierModel& classifier, const Corpus& corpus,
                              std::uint64_t seed,
                              DocumentAggregation aggregation = DocumentAggregation::LogProbSum);

enum class SelectionPolicy { Min, Random, Max };
const char* to_string(SelectionPolicy p);
SelectionPolicy selection_policy_from_string(const std::string& s);

struct OperatingPoint {
    SelectionPolicy policy = SelectionPolicy::Max;
    std::size_t k = 1;
    EvalMetrics metrics;
};

/// k samples per sentence (sample i drawn with seed + i); each policy keeps
/// the sample with the lowest, a seeded random, or the highest meteor_proxy.
std::vector<OperatingPoint> operating_points(const TransferFn& transfer, const ClassifierModel& classifier,
                                             const Corpus& corpus, std::size_t k,
                                             std::span<const SelectionPolicy> policies, std::uint64_t seed);

struct PrivacyRecord {
    std::string doc_id;
    std::size_t sent_idx = 0;
    int source = 0;
    /// p(source | input) and p(source | output).
    double in_score = 0;
    double out_score = 0;
    double gain = 0;
    double meteor = 0;
};

struct BinnedCurve {
    std::vector<double> lower, upper;
    std::vector<std::size_t> count;
    std::vector<double> mean_out_score;
    std::vector<double> mean_meteor;
    std::vector<double> mean_gain;
};

struct Histogram {
    std::vector<double> edges;  // bins + 1
    std::vector<std::size_t> count;
};

struct PrivacyAnalysis {
    std::vector<PrivacyRecord> records;
    /// Output score, meteor and gain by input-score bin.
    BinnedCurve by_input_score;
    Histogram gain_histogram;
    double median_gain = 0;
    double mean_gain = 0;
};

PrivacyAnalysis privacy_analysis(const ClassifierModel& classifier, const Corpus& input, const Corpus& output,
                                 std::size_t bins = 10, std::size_t histogram_bins = 20);
PrivacyAnalysis privacy_analysis(const TransferFn& transfer, const ClassifierModel& classifier, const Corpus& corpus,
                                 std::uint64_t seed, std::size_t bins = 10);

struct HoldoutRow {
    std::string name;
    double original_f1 = 0;
    double transferred_f1 = 0;
};

struct HoldoutResult {
    std::vector<HoldoutRow> rows;
    double mean_original = 0;
    double mean_transferred = 0;
    double max_transferred = 0;
    double drop() const { return mean_original - mean_transferred; }
};

HoldoutResult holdout_evaluation(std::span<const ClassifierModel> ensemble, std::span<const std::string> names,
                                 const Corpus& original, const Corpus& transferred);

// CSV output
void write_metrics_csv(std::ostream& out, const std::vector<std::pair<std::string, OperatingPoint>>& rows);
void write_privacy_records_csv(std::ostream& out, const std::vector<PrivacyRecord>& records);
void write_binned_curve_csv(std::ostream& out, const BinnedCurve& curve);
void write_histogram_csv(std::ostream& out, const Histogram& histogram);
void write_holdout_csv(std::ostream& out, const HoldoutResult& result);

}  // namespace a4nt
