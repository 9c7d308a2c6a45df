#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "a4nt/nn.hpp"

namespace a4nt {

struct ClassifierConfig {
    std::size_t embed_dim = 32;
    std::size_t hidden = 64;
    EncodingKind kind = EncodingKind::FinalAndMean;
    std::uint64_t seed = 1;
};

/// Word-level LSTM attribute classifier: p(c | s) = softmax(W E(s)).
struct ClassifierModel {
    TaskSpec task;
    SentenceEncoder encoder;
    Parameter projection;  // [encoding width, 2]

    static ClassifierModel create(const TaskSpec& task, std::size_t vocab_size, const ClassifierConfig& config);
    std::vector<Parameter*> parameters();
    std::size_t vocab_size() const { return encoder.vocab_size(); }
};

using ClassProbabilities = std::array<Real, 2>;

/// Per-row class log-probabilities [B, 2].
Var classifier_log_probs(Tape& tape, ClassifierModel& model, const Batch& batch, bool trainable);
Var classifier_log_probs_soft(Tape& tape, ClassifierModel& model, const SoftSequence& soft, bool trainable);
/// Mean cross-entropy against batch.labels.
Var classifier_cross_entropy(Tape& tape, ClassifierModel& model, const Batch& batch);

/// E(s) for one sentence. Throws on an empty sentence.
std::vector<Real> encode_features(const ClassifierModel& model, const Sentence& sentence);
ClassProbabilities classify_sentence(const ClassifierModel& model, const Sentence& sentence);
/// Classifies soft rows [n, V]; each row must sum to 1 within 1e-4.
ClassProbabilities classify_soft(const ClassifierModel& model, const Tensor& rows);

/// Class log-probabilities for many sentences, evaluated in batches.
std::vector<ClassProbabilities> sentence_log_probs(const ClassifierModel& model, std::span<const Sentence> sentences,
                                                   std::size_t max_len = 1000, std::size_t batch_size = 64);

enum class DocumentAggregation { LogProbSum, HardVote };

struct DocumentPrediction {
    int label = 0;
    /// Summed sentence log-probabilities (or vote counts for HardVote).
    std::array<Real, 2> scores{};
};

/// Argmax of the accumulated scores; ties go to the lexicographically
/// smaller class name.
DocumentPrediction aggregate_document(std::span<const ClassProbabilities> sentence_log_probs, const TaskSpec& task,
                                      DocumentAggregation aggregation = DocumentAggregation::LogProbSum);
DocumentPrediction classify_document(const ClassifierModel& model, const Document& document,
                                     DocumentAggregation aggregation = DocumentAggregation::LogProbSum);

}  // namespace a4nt
