#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "a4nt/classifier.hpp"
#include "a4nt/translator.hpp"

namespace a4nt {

inline constexpr Real kProbabilityFloor = Real(1e-7);

// ---------------------------------------------------------------------------
// Auxiliary models

struct LanguageModelConfig {
    std::size_t embed_dim = 32;
    std::size_t hidden = 64;
    std::uint64_t seed = 3;
};

/// Unconditional LSTM language model over one class's text.
struct LanguageModel {
    TaskSpec task;
    int label = 0;
    Parameter embedding;  // [V, d]
    LstmLayer lstm;
    Parameter out_w;  // [h, V]
    Parameter out_b;  // [1, V]

    static LanguageModel create(const TaskSpec& task, int label, std::size_t vocab_size,
                                const LanguageModelConfig& config);
    std::vector<Parameter*> parameters();
    std::size_t vocab_size() const { return embedding.value.rows(); }
};

struct BoundLanguageModel {
    Var embedding;
    BoundLstm lstm;
    Var out_w, out_b;
};

BoundLanguageModel bind(Tape& tape, LanguageModel& lm, bool trainable);

/// Per-row log-likelihood [B,1] of the words plus END, with token counts.
Var lm_log_likelihood(Tape& tape, const BoundLanguageModel& lm, const Batch& batch, std::vector<int>* counts);
/// Per-row soft-target negative log-likelihood [B,1]: inputs are START then
/// the expected embeddings of rows 0.., targets are the rows themselves
/// (the END row included when the sequence ended).
Var lm_soft_nll(Tape& tape, const BoundLanguageModel& lm, const SoftSequence& soft, std::vector<int>* counts);
/// exp of the mean per-token negative log-likelihood.
double perplexity(const LanguageModel& lm, std::span<const Sentence> sentences, std::size_t max_len);

/// Frozen sentence-meaning embedder F: a classifier-shaped encoder trained
/// with its own decoder as an autoencoder on the pooled corpus.
struct SemanticEmbedder {
    SentenceEncoder encoder;
    Decoder decoder;

    static SemanticEmbedder create(std::size_t vocab_size, std::size_t embed_dim, std::size_t hidden,
                                   std::uint64_t seed);
    std::vector<Parameter*> parameters();
    std::vector<Parameter*> encoder_parameters() { return encoder.parameters(); }
    std::size_t vocab_size() const { return encoder.vocab_size(); }
};

std::vector<Real> embed(const SemanticEmbedder& f, const Sentence& sentence);

// ---------------------------------------------------------------------------
// Objectives

enum class SemanticVariant { Cycle, Embedding };
const char* to_string(SemanticVariant v);
SemanticVariant semantic_variant_from_string(const std::string& s);

/// Mean over rows of -log p_real - log(1 - p_fake); inputs are [B,1]
/// probabilities, clamped to [1e-7, 1 - 1e-7].
Var discriminator_loss(Tape& tape, Var p_real, Var p_fake);
/// Mean over rows of -log p_fake, clamped as above.
Var style_loss(Tape& tape, Var p_fake);

/// p(label | s) as a [B,1] column from class log-probabilities [B,2].
Var class_probability(Tape& tape, Var log_probs, int label);

/// Discriminator objective for A_y (label y) on real y text and detached
/// fake rows. Only A's parameters are bound trainable.
Var discriminator_loss(Tape& tape, ClassifierModel& discriminator, int target, const Batch& real,
                       const SoftSequence& fake);
/// Generator style objective; the discriminator is bound frozen.
Var style_loss(Tape& tape, ClassifierModel& discriminator, int target, const SoftSequence& fake);

/// -log P(original | fake) under decoders[reverse_source], averaged over
/// rows; each row divided by its length unless raw_sum.
Var cycle_ml_loss(Tape& tape, const BoundTranslator& translator, int reverse_source, const SoftSequence& fake,
                  const Batch& original, bool raw_sum = false);

/// Mean over rows of sum_k |F(original)_k - F(fake)_k|.
Var semantic_embedding_loss(Tape& tape, const BoundEncoder& f, const SoftSequence& fake, const Batch& original);

/// Mean over rows of the soft-target NLL of fake under M_y, per token unless
/// raw_sum.
Var language_loss(Tape& tape, const BoundLanguageModel& lm, const SoftSequence& fake, bool raw_sum = false);

struct LossWeights {
    double style = 1.0;
    double semantic = 1.0;
    double language = 1.0;

    /// Throws unless all weights are finite, non-negative and one is positive.
    void validate() const;
};

struct LossReport {
    double style = 0;
    double semantic = 0;
    double language = 0;
    double total = 0;
    SemanticVariant semantic_variant = SemanticVariant::Cycle;
};

/// Weighted sum of the three components. Throws naming the first
/// non-finite component.
LossReport total_loss(const LossWeights& weights, double style, double semantic, double language,
                      SemanticVariant variant = SemanticVariant::Cycle);

}  // namespace a4nt
