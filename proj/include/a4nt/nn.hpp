#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "a4nt/corpus.hpp"
#include "a4nt/tape.hpp"

namespace a4nt {

using Rng = std::mt19937_64;

/// How a sentence encoder pools LSTM outputs.
enum class EncodingKind {
    /// [h_{n-1}; mean(h_0..h_{n-2})], with h_0 in both halves when n = 1.
    FinalAndMean,
    /// h_{n-1} only.
    FinalOnly,
};

const char* to_string(EncodingKind kind);
EncodingKind encoding_kind_from_string(const std::string& s);

/// Uniform(-scale, scale) initialised tensor.
Tensor uniform_tensor(Shape shape, Real scale, Rng& rng);

/// Single-layer LSTM, gate order (input, forget, cell, output):
///   z = x W_in + h W_hid + b
///   c' = sigmoid(z_f) * c + sigmoid(z_i) * tanh(z_g)
///   h' = sigmoid(z_o) * tanh(c')
struct LstmLayer {
    Parameter w_input;   // [input, 4*hidden]
    Parameter w_hidden;  // [hidden, 4*hidden]
    Parameter bias;      // [1, 4*hidden]

    std::size_t input_size() const { return w_input.value.rows(); }
    std::size_t hidden_size() const { return w_hidden.value.rows(); }

    static LstmLayer create(const std::string& prefix, std::size_t input, std::size_t hidden, Rng& rng);
    std::vector<Parameter*> parameters();
};

struct BoundLstm {
    Var w_input, w_hidden, bias;
    std::size_t hidden = 0;
};

BoundLstm bind(Tape& tape, LstmLayer& layer, bool trainable);

struct LstmState {
    Var h, c;
};

LstmState lstm_zero_state(Tape& tape, std::size_t batch, std::size_t hidden);

/// One step given the already projected input x W_in ([B, 4h], bias excluded).
LstmState lstm_step(Tape& tape, const BoundLstm& lstm, Var input_projection, const LstmState& prev);

/// Per-step input projections for hard ids: rows of the embedding table for
/// every (t, b) gathered at once and multiplied by `w` ([d, 4h]); returns one
/// [B, 4h] var per time step < width.
std::vector<Var> project_hard_inputs(Tape& tape, Var embedding, Var w, const Batch& batch,
                                     bool prepend_start = false);

/// Soft rows on a tape: one [B, V] probability row block per step.
struct SoftSequence {
    std::vector<Var> steps;
    /// Words per row (END row excluded).
    std::vector<int> lengths;
    /// 1 when step lengths[b] holds the row whose argmax was END.
    std::vector<int> ended;
    /// Argmax id per (row, step), row-major [B x steps.size()].
    std::vector<int> ids;

    std::size_t batch() const { return lengths.size(); }
    std::vector<int> row_ids(std::size_t row) const;
};

/// SoftSequence view of fixed rows [n, V] (one batch row). When ended, the
/// last row is the END row and is not counted in the length.
SoftSequence soft_sequence_from_rows(Tape& tape, Var rows, bool ended = false);

/// LSTM over per-step projected inputs and pooling according to kind.
/// Rows are valid up to lengths[b]; later steps are computed but ignored.
Var encode_sequence(Tape& tape, const BoundLstm& lstm, const std::vector<Var>& projected_inputs,
                    const std::vector<int>& lengths, EncodingKind kind);

/// Word embedding + LSTM + pooling. Shared by the classifier, the translator
/// encoder and the semantic embedder.
struct SentenceEncoder {
    Parameter embedding;  // [V, d_emb]
    LstmLayer lstm;
    EncodingKind kind = EncodingKind::FinalAndMean;

    std::size_t vocab_size() const { return embedding.value.rows(); }
    std::size_t embed_dim() const { return embedding.value.cols(); }
    std::size_t hidden_size() const { return lstm.hidden_size(); }
    std::size_t output_size() const { return kind == EncodingKind::FinalAndMean ? 2 * hidden_size() : hidden_size(); }

    static SentenceEncoder create(const std::string& prefix, std::size_t vocab, std::size_t embed, std::size_t hidden,
                                  EncodingKind kind, Rng& rng);
    std::vector<Parameter*> parameters();
};

struct BoundEncoder {
    Var embedding;
    BoundLstm lstm;
    EncodingKind kind;
};

BoundEncoder bind(Tape& tape, SentenceEncoder& enc, bool trainable);

Var encode_hard(Tape& tape, const BoundEncoder& enc, const Batch& batch);
/// Expected-embedding inputs: each step feeds rows x embedding table.
Var encode_soft(Tape& tape, const BoundEncoder& enc, const SoftSequence& soft);

/// Conditional LSTM decoder: input at step t is [condition ; W_emb(w_{t-1})],
/// output distribution softmax(h W_out + b_out).
struct Decoder {
    LstmLayer lstm;       // input = condition_size + embed_dim
    Parameter out_w;      // [hidden, V]
    Parameter out_b;      // [1, V]
    std::size_t condition_size = 0;

    static Decoder create(const std::string& prefix, std::size_t condition, std::size_t embed, std::size_t hidden,
                          std::size_t vocab, Rng& rng);
    std::vector<Parameter*> parameters();
};

struct BoundDecoder {
    BoundLstm lstm;
    Var w_condition;  // rows of W_in fed by the condition
    Var w_word;       // rows of W_in fed by the previous word embedding
    Var out_w, out_b;
};

BoundDecoder bind(Tape& tape, Decoder& dec, bool trainable);

/// Output log-probabilities [B, V] for one state.
Var decoder_log_probs(Tape& tape, const BoundDecoder& dec, Var h);

/// Teacher-forced per-row log-likelihood of targets w_0..w_{n-1} (plus END
/// when include_end) given a condition vector. Returns [B,1] sums and fills
/// token_counts with the number of scored tokens per row.
Var teacher_forced_log_likelihood(Tape& tape, const BoundDecoder& dec, Var embedding, Var condition,
                                  const Batch& targets, bool include_end, std::vector<int>* token_counts = nullptr);

/// Column constant [B,1] from values.
Var column_constant(Tape& tape, const std::vector<Real>& values);

/// Flat snapshot of parameter values, for rollback and bitwise comparisons.
std::vector<Tensor> snapshot(const std::vector<Parameter*>& params);
void restore(const std::vector<Parameter*>& params, const std::vector<Tensor>& values);
bool bitwise_equal(const std::vector<Parameter*>& params, const std::vector<Tensor>& values);

}  // namespace a4nt
