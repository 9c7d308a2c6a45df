#include "a4nt/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace a4nt {

const char* to_string(EncodingKind kind) {
    return kind == EncodingKind::FinalAndMean ? "final_and_mean" : "final_only";
}

EncodingKind encoding_kind_from_string(const std::string& s) {
    if (s == "final_and_mean") return EncodingKind::FinalAndMean;
    if (s == "final_only") return EncodingKind::FinalOnly;
    throw std::invalid_argument("unknown encoding kind '" + s + "'");
}

Tensor uniform_tensor(Shape shape, Real scale, Rng& rng) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> dist(-double(scale), double(scale));
    for (Real& v : t.values()) v = Real(dist(rng));
    return t;
}

std::vector<int> SoftSequence::row_ids(std::size_t row) const {
    const std::size_t steps_n = steps.size();
    std::vector<int> out;
    for (std::size_t t = 0; t < std::size_t(lengths[row]); ++t) out.push_back(ids[row * steps_n + t]);
    return out;
}

// ---------------------------------------------------------------------------
// LSTM

LstmLayer LstmLayer::create(const std::string& prefix, std::size_t input, std::size_t hidden, Rng& rng) {
    const Real scale = Real(1) / std::sqrt(Real(hidden));
    LstmLayer l;
    l.w_input = Parameter(prefix + ".w_input", uniform_tensor({input, 4 * hidden}, scale, rng));
    l.w_hidden = Parameter(prefix + ".w_hidden", uniform_tensor({hidden, 4 * hidden}, scale, rng));
    Tensor b = Tensor::matrix(1, 4 * hidden);
    for (std::size_t k = hidden; k < 2 * hidden; ++k) b[k] = Real(1);  // forget gate
    l.bias = Parameter(prefix + ".bias", std::move(b));
    return l;
}

std::vector<Parameter*> LstmLayer::parameters() { return {&w_input, &w_hidden, &bias}; }

BoundLstm bind(Tape& tape, LstmLayer& layer, bool trainable) {
    return BoundLstm{tape.param(layer.w_input, trainable), tape.param(layer.w_hidden, trainable),
                     tape.param(layer.bias, trainable), layer.hidden_size()};
}

LstmState lstm_zero_state(Tape& tape, std::size_t batch, std::size_t hidden) {
    return LstmState{tape.constant(Tensor::matrix(batch, hidden)), tape.constant(Tensor::matrix(batch, hidden))};
}

LstmState lstm_step(Tape& tape, const BoundLstm& lstm, Var input_projection, const LstmState& prev) {
    const std::size_t h = lstm.hidden;
    Var z = tape.add(tape.add(input_projection, tape.matmul(prev.h, lstm.w_hidden)), lstm.bias);
    Var in_gate = tape.sigmoid(tape.slice_cols(z, 0, h));
    Var forget_gate = tape.sigmoid(tape.slice_cols(z, h, 2 * h));
    Var candidate = tape.tanh(tape.slice_cols(z, 2 * h, 3 * h));
    Var out_gate = tape.sigmoid(tape.slice_cols(z, 3 * h, 4 * h));
    Var c = tape.add(tape.mul(forget_gate, prev.c), tape.mul(in_gate, candidate));
    Var hn = tape.mul(out_gate, tape.tanh(c));
    return LstmState{hn, c};
}

std::vector<Var> project_hard_inputs(Tape& tape, Var embedding, Var w, const Batch& batch, bool prepend_start) {
    const std::size_t steps = batch.width + (prepend_start ? 1 : 0);
    std::vector<int> ids;
    ids.reserve(steps * batch.size);
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t b = 0; b < batch.size; ++b) {
            if (prepend_start)
                ids.push_back(t == 0 ? token::kStart : batch.at(b, t - 1));
            else
                ids.push_back(batch.at(b, t));
        }
    }
    Var all = tape.matmul(tape.gather_rows(embedding, std::move(ids)), w);
    std::vector<Var> out;
    out.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) out.push_back(tape.slice_rows(all, t * batch.size, (t + 1) * batch.size));
    return out;
}

Var column_constant(Tape& tape, const std::vector<Real>& values) {
    return tape.constant(Tensor(Shape{values.size(), 1}, values));
}

Var encode_sequence(Tape& tape, const BoundLstm& lstm, const std::vector<Var>& projected_inputs,
                    const std::vector<int>& lengths, EncodingKind kind) {
    const std::size_t batch = lengths.size();
    if (batch == 0) throw std::invalid_argument("encode: empty batch");
    int longest = 0;
    for (int n : lengths) {
        if (n <= 0) throw std::invalid_argument("encode: empty sentence");
        longest = std::max(longest, n);
    }
    if (projected_inputs.size() < std::size_t(longest))
        throw std::invalid_argument("encode: fewer input steps than the longest sentence");

    LstmState state = lstm_zero_state(tape, batch, lstm.hidden);
    Var final_part, mean_part;
    std::vector<Real> final_w(batch), mean_w(batch);
    for (int t = 0; t < longest; ++t) {
        state = lstm_step(tape, lstm, projected_inputs[std::size_t(t)], state);
        bool any_final = false, any_mean = false;
        for (std::size_t b = 0; b < batch; ++b) {
            const int n = lengths[b];
            final_w[b] = (t == n - 1) ? Real(1) : Real(0);
            if (n == 1)
                mean_w[b] = t == 0 ? Real(1) : Real(0);
            else
                mean_w[b] = t < n - 1 ? Real(1) / Real(n - 1) : Real(0);
            any_final = any_final || final_w[b] != 0;
            any_mean = any_mean || mean_w[b] != 0;
        }
        if (any_final) {
            Var term = tape.mul(state.h, column_constant(tape, final_w));
            final_part = final_part.valid() ? tape.add(final_part, term) : term;
        }
        if (kind == EncodingKind::FinalAndMean && any_mean) {
            Var term = tape.mul(state.h, column_constant(tape, mean_w));
            mean_part = mean_part.valid() ? tape.add(mean_part, term) : term;
        }
    }
    if (kind == EncodingKind::FinalOnly) return final_part;
    const Var parts[] = {final_part, mean_part};
    return tape.concat_cols(parts);
}

// ---------------------------------------------------------------------------
// Sentence encoder

SentenceEncoder SentenceEncoder::create(const std::string& prefix, std::size_t vocab, std::size_t embed,
                                        std::size_t hidden, EncodingKind kind, Rng& rng) {
    SentenceEncoder e;
    e.embedding = Parameter(prefix + ".embedding", uniform_tensor({vocab, embed}, Real(0.1), rng));
    e.lstm = LstmLayer::create(prefix + ".lstm", embed, hidden, rng);
    e.kind = kind;
    return e;
}

std::vector<Parameter*> SentenceEncoder::parameters() {
    std::vector<Parameter*> out{&embedding};
    for (Parameter* p : lstm.parameters()) out.push_back(p);
    return out;
}

BoundEncoder bind(Tape& tape, SentenceEncoder& enc, bool trainable) {
    return BoundEncoder{tape.param(enc.embedding, trainable), bind(tape, enc.lstm, trainable), enc.kind};
}

Var encode_hard(Tape& tape, const BoundEncoder& enc, const Batch& batch) {
    auto inputs = project_hard_inputs(tape, enc.embedding, enc.lstm.w_input, batch);
    return encode_sequence(tape, enc.lstm, inputs, batch.lengths, enc.kind);
}

Var encode_soft(Tape& tape, const BoundEncoder& enc, const SoftSequence& soft) {
    int longest = 0;
    for (int n : soft.lengths) longest = std::max(longest, n);
    std::vector<Var> inputs;
    for (int t = 0; t < longest; ++t) {
        Var emb = tape.weighted_rows(soft.steps[std::size_t(t)], enc.embedding);
        inputs.push_back(tape.matmul(emb, enc.lstm.w_input));
    }
    return encode_sequence(tape, enc.lstm, inputs, soft.lengths, enc.kind);
}

// ---------------------------------------------------------------------------
// Decoder

Decoder Decoder::create(const std::string& prefix, std::size_t condition, std::size_t embed, std::size_t hidden,
                        std::size_t vocab, Rng& rng) {
    Decoder d;
    d.condition_size = condition;
    d.lstm = LstmLayer::create(prefix + ".lstm", condition + embed, hidden, rng);
    d.out_w = Parameter(prefix + ".out_w", uniform_tensor({hidden, vocab}, Real(1) / std::sqrt(Real(hidden)), rng));
    d.out_b = Parameter(prefix + ".out_b", Tensor::matrix(1, vocab));
    return d;
}

std::vector<Parameter*> Decoder::parameters() {
    auto out = lstm.parameters();
    out.push_back(&out_w);
    out.push_back(&out_b);
    return out;
}

BoundDecoder bind(Tape& tape, Decoder& dec, bool trainable) {
    BoundDecoder b;
    b.lstm = bind(tape, dec.lstm, trainable);
    const std::size_t rows = dec.lstm.input_size();
    b.w_condition = tape.slice_rows(b.lstm.w_input, 0, dec.condition_size);
    b.w_word = tape.slice_rows(b.lstm.w_input, dec.condition_size, rows);
    b.out_w = tape.param(dec.out_w, trainable);
    b.out_b = tape.param(dec.out_b, trainable);
    return b;
}

Var decoder_log_probs(Tape& tape, const BoundDecoder& dec, Var h) {
    return tape.log_softmax(tape.add(tape.matmul(h, dec.out_w), dec.out_b));
}

Var teacher_forced_log_likelihood(Tape& tape, const BoundDecoder& dec, Var embedding, Var condition,
                                  const Batch& targets, bool include_end, std::vector<int>* token_counts) {
    const std::size_t batch = targets.size;
    Var cond_proj = tape.matmul(condition, dec.w_condition);
    auto inputs = project_hard_inputs(tape, embedding, dec.w_word, targets, /*prepend_start=*/true);
    const std::size_t steps = targets.width + (include_end ? 1 : 0);
    LstmState state = lstm_zero_state(tape, batch, dec.lstm.hidden);
    Var total;
    std::vector<int> target(batch);
    std::vector<Real> mask(batch);
    for (std::size_t t = 0; t < steps; ++t) {
        state = lstm_step(tape, dec.lstm, tape.add(inputs[t], cond_proj), state);
        Var logp = decoder_log_probs(tape, dec, state.h);
        for (std::size_t b = 0; b < batch; ++b) {
            const auto n = std::size_t(targets.lengths[b]);
            if (t < n) {
                target[b] = targets.at(b, t);
                mask[b] = 1;
            } else if (t == n && include_end) {
                target[b] = token::kEnd;
                mask[b] = 1;
            } else {
                target[b] = token::kPad;
                mask[b] = 0;
            }
        }
        Var term = tape.mul(tape.pick(logp, target), column_constant(tape, mask));
        total = total.valid() ? tape.add(total, term) : term;
    }
    if (token_counts) {
        token_counts->resize(batch);
        for (std::size_t b = 0; b < batch; ++b) (*token_counts)[b] = targets.lengths[b] + (include_end ? 1 : 0);
    }
    return total;
}

SoftSequence soft_sequence_from_rows(Tape& tape, Var rows, bool ended) {
    const std::size_t n = tape.value(rows).rows();
    if (n == 0 || (ended && n < 2)) throw std::invalid_argument("soft sequence: too few rows");
    SoftSequence soft;
    for (std::size_t r = 0; r < n; ++r) soft.steps.push_back(tape.slice_rows(rows, r, r + 1));
    soft.lengths = {int(ended ? n - 1 : n)};
    soft.ended = {ended ? 1 : 0};
    const Tensor& v = tape.value(rows);
    for (std::size_t r = 0; r < n; ++r) {
        const Real* row = v.data() + r * v.cols();
        soft.ids.push_back(int(std::max_element(row, row + v.cols()) - row));
    }
    return soft;
}

// ---------------------------------------------------------------------------

std::vector<Tensor> snapshot(const std::vector<Parameter*>& params) {
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (const Parameter* p : params) out.push_back(p->value);
    return out;
}

void restore(const std::vector<Parameter*>& params, const std::vector<Tensor>& values) {
    if (params.size() != values.size()) throw std::invalid_argument("restore: parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i]->value.same_shape(values[i]))
            throw ShapeError("restore: shape mismatch for " + params[i]->name);
        params[i]->value = values[i];
    }
}

bool bitwise_equal(const std::vector<Parameter*>& params, const std::vector<Tensor>& values) {
    if (params.size() != values.size()) return false;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Tensor& a = params[i]->value;
        const Tensor& b = values[i];
        if (!a.same_shape(b)) return false;
        if (!std::equal(a.values().begin(), a.values().end(), b.values().begin(),
                        [](Real x, Real y) { return std::memcmp(&x, &y, sizeof(Real)) == 0; }))
            return false;
    }
    return true;
}

}  // namespace a4nt
