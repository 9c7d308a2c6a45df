#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "a4nt/nn.hpp"

namespace a4nt {

struct TranslatorConfig {
    std::size_t embed_dim = 32;
    std::size_t hidden = 64;
    std::size_t decoder_hidden = 64;
    std::uint64_t seed = 2;
};

/// Shared encoder with one decoder per ordered class pair.
/// decoders[c] rewrites class c text into the style of class 1 - c.
struct TranslatorModel {
    TaskSpec task;
    SentenceEncoder encoder;
    std::array<Decoder, 2> decoders;

    static TranslatorModel create(const TaskSpec& task, std::size_t vocab_size, const TranslatorConfig& config);
    std::vector<Parameter*> parameters();
    std::size_t vocab_size() const { return encoder.vocab_size(); }
};

/// Ordered pair source -> target = 1 - source.
struct Direction {
    int source = 0;
    int target() const { return 1 - source; }
};

/// Accepts "src->dst", "src2dst", "src:dst" or a bare source class name.
Direction parse_direction(const TaskSpec& task, const std::string& text);
std::string direction_name(const TaskSpec& task, Direction d);

struct BoundTranslator {
    BoundEncoder encoder;
    std::array<BoundDecoder, 2> decoders;
};

BoundTranslator bind(Tape& tape, TranslatorModel& model, bool trainable);

struct DecodeStep {
    Var log_probs;  // [B, V]
    LstmState state;
};

/// One decoder step: LSTM input is [E_G ; previous word embedding], output
/// log softmax(h W_dec + b).
DecodeStep decode_step(Tape& tape, const BoundDecoder& dec, Var encoding, Var prev_embedding, const LstmState& state);

/// Gumbel-softmax relaxation of a distribution [B, V]:
/// softmax((log max(p, 1e-12) + g) / tau), g = -log(-log u).
/// `uniforms` holds one u in [0,1) per entry, row-major.
Var sample_gumbel_soft(Tape& tape, Var dist, Real tau, const std::vector<double>& uniforms);
/// Draws B*V uniforms in row-major order.
std::vector<double> draw_uniforms(std::size_t count, Rng& rng);
Real gumbel_noise(double u);

enum class DecodeMode { Hard, Soft };

struct TranslateOptions {
    DecodeMode mode = DecodeMode::Hard;
    /// Argmax decoding in hard mode instead of sampling.
    bool greedy = false;
    std::size_t max_len = 20;
    Real tau = Real(0.5);
    std::uint64_t seed = 0;
};

/// Free-running decoding of a batch with decoders[source], conditioned on
/// the shared encoding of `batch`. PAD and START are never emitted and END
/// cannot be the first token, so every output has at least one word.
///
/// Soft mode returns Gumbel-softmax rows on the tape, feeding back the
/// expected embedding of each row. Hard mode samples ids (or takes the
/// argmax when greedy) with the same random draws and feeds back the
/// chosen embedding; its `steps` hold one-hot rows.
SoftSequence translate_batch(Tape& tape, const BoundTranslator& model, int source, const Batch& batch,
                             const TranslateOptions& options, Rng& rng);

/// Hard translation of many sentences with one rng seeded from options.seed.
std::vector<Sentence> translate_sentences(const TranslatorModel& model, std::span<const Sentence> sentences,
                                          int source, const TranslateOptions& options,
                                          std::size_t batch_size = 64);

Sentence translate(const TranslatorModel& model, const Sentence& sentence, Direction direction,
                   const TranslateOptions& options);

/// Soft rows [n (+1 when ended), V] and realised ids of a single soft translation.
struct SoftSentence {
    Tensor rows;
    std::vector<int> ids;
    int length = 0;
    bool ended = false;
};

SoftSentence translate_soft(const TranslatorModel& model, const Sentence& sentence, Direction direction,
                            const TranslateOptions& options);

/// Shared-encoder embedding E_G(s).
std::vector<Real> encode(const TranslatorModel& model, const Sentence& sentence);

/// Per-row log p(original | soft) under decoders[reverse_source], teacher
/// forced over the original words (END not scored). Returns [B,1].
Var reconstruction_logprob(Tape& tape, const BoundTranslator& model, int reverse_source, const SoftSequence& soft,
                           const Batch& original);

/// Single-sentence form over explicit soft rows [n, V].
Real reconstruction_logprob(const TranslatorModel& model, Direction reverse, const Tensor& soft_rows,
                            const Sentence& original);

}  // namespace a4nt
