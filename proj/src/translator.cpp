#include "a4nt/translator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace a4nt {

namespace {

TranslatorModel& frozen(const TranslatorModel& m) { return const_cast<TranslatorModel&>(m); }

constexpr Real kMasked = Real(-1e9);

// Additive logit mask: PAD and START are never produced; END is also barred
// at the first step.
Var output_mask(Tape& tape, std::size_t vocab, bool first_step) {
    Tensor m = Tensor::matrix(1, vocab);
    m[token::kPad] = kMasked;
    m[token::kStart] = kMasked;
    if (first_step) m[token::kEnd] = kMasked;
    return tape.constant(std::move(m));
}

std::size_t argmax_row(const Real* row, const Real* noise, std::size_t n) {
    std::size_t best = 0;
    Real best_v = -std::numeric_limits<Real>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const Real v = row[i] + (noise ? noise[i] : Real(0));
        if (v > best_v) {
            best_v = v;
            best = i;
        }
    }
    return best;
}

}  // namespace

TranslatorModel TranslatorModel::create(const TaskSpec& task, std::size_t vocab_size, const TranslatorConfig& config) {
    Rng rng(config.seed);
    TranslatorModel m;
    m.task = task;
    m.encoder = SentenceEncoder::create("translator.encoder", vocab_size, config.embed_dim, config.hidden,
                                        EncodingKind::FinalAndMean, rng);
    for (int c = 0; c < 2; ++c)
        m.decoders[std::size_t(c)] = Decoder::create("translator.decoder" + std::to_string(c),
                                                     m.encoder.output_size(), config.embed_dim,
                                                     config.decoder_hidden, vocab_size, rng);
    return m;
}

std::vector<Parameter*> TranslatorModel::parameters() {
    auto out = encoder.parameters();
    for (auto& d : decoders)
        for (Parameter* p : d.parameters()) out.push_back(p);
    return out;
}

Direction parse_direction(const TaskSpec& task, const std::string& text) {
    std::string src = text, dst;
    for (const char* sep : {"->", "2", ":"}) {
        const auto pos = text.find(sep);
        if (pos == std::string::npos) continue;
        const std::string a = text.substr(0, pos), b = text.substr(pos + std::string(sep).size());
        // "2" may appear inside class names; only accept a split naming both classes.
        const bool known_a = a == task.classes[0] || a == task.classes[1];
        const bool known_b = b == task.classes[0] || b == task.classes[1];
        if (known_a && known_b) {
            src = a;
            dst = b;
            break;
        }
    }
    int source = -1;
    for (int c = 0; c < 2; ++c)
        if (task.classes[std::size_t(c)] == src) source = c;
    if (source < 0 || (!dst.empty() && dst != task.classes[std::size_t(1 - source)]))
        throw std::invalid_argument("unknown direction '" + text + "' for task '" + task.task + "' (classes " +
                                    task.classes[0] + ", " + task.classes[1] + ")");
    return Direction{source};
}

std::string direction_name(const TaskSpec& task, Direction d) {
    return task.classes[std::size_t(d.source)] + "->" + task.classes[std::size_t(d.target())];
}

BoundTranslator bind(Tape& tape, TranslatorModel& model, bool trainable) {
    return BoundTranslator{bind(tape, model.encoder, trainable),
                           {bind(tape, model.decoders[0], trainable), bind(tape, model.decoders[1], trainable)}};
}

DecodeStep decode_step(Tape& tape, const BoundDecoder& dec, Var encoding, Var prev_embedding,
                       const LstmState& state) {
    Var input = tape.add(tape.matmul(encoding, dec.w_condition), tape.matmul(prev_embedding, dec.w_word));
    LstmState next = lstm_step(tape, dec.lstm, input, state);
    return DecodeStep{decoder_log_probs(tape, dec, next.h), next};
}

Real gumbel_noise(double u) {
    if (u <= 0.0) u = std::numeric_limits<double>::min();
    return Real(-std::log(-std::log(u)));
}

std::vector<double> draw_uniforms(std::size_t count, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> out(count);
    for (double& u : out) u = unif(rng);
    return out;
}

Var sample_gumbel_soft(Tape& tape, Var dist, Real tau, const std::vector<double>& uniforms) {
    if (!(tau > 0)) throw std::invalid_argument("sample_gumbel_soft: temperature must be positive");
    const Tensor& p = tape.value(dist);
    if (uniforms.size() != p.size())
        throw ShapeError("sample_gumbel_soft: " + std::to_string(uniforms.size()) + " uniforms for dist " +
                         shape_to_string(p.shape()));
    Tensor g(Shape{p.rows(), p.cols()});
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = gumbel_noise(uniforms[i]);
    Var logp = tape.log(tape.clamp(dist, Real(1e-12), Real(1)));
    return tape.softmax(tape.scale(tape.add(logp, tape.constant(std::move(g))), Real(1) / tau));
}

SoftSequence translate_batch(Tape& tape, const BoundTranslator& model, int source, const Batch& batch,
                             const TranslateOptions& options, Rng& rng) {
    if (source != 0 && source != 1) throw std::invalid_argument("translate: unknown direction");
    if (options.max_len == 0) throw std::invalid_argument("translate: max_len must be positive");
    if (options.mode == DecodeMode::Soft && !(options.tau > 0))
        throw std::invalid_argument("translate: temperature must be positive");
    const BoundDecoder& dec = model.decoders[std::size_t(source)];
    const Var embedding = model.encoder.embedding;
    const std::size_t B = batch.size;
    const std::size_t V = tape.value(embedding).rows();

    Var condition = tape.matmul(encode_hard(tape, model.encoder, batch), dec.w_condition);
    Var prev = tape.matmul(tape.gather_rows(embedding, std::vector<int>(B, token::kStart)), dec.w_word);
    LstmState state = lstm_zero_state(tape, B, dec.lstm.hidden);
    const Var mask_first = output_mask(tape, V, true);
    const Var mask_rest = output_mask(tape, V, false);

    SoftSequence out;
    out.lengths.assign(B, 0);
    out.ended.assign(B, 0);
    std::vector<std::vector<int>> row_ids(B);
    std::vector<char> done(B, 0);
    std::vector<Real> noise(B * V);
    std::vector<int> chosen(B);

    for (std::size_t t = 0; t < options.max_len; ++t) {
        state = lstm_step(tape, dec.lstm, tape.add(condition, prev), state);
        Var logits = tape.add(tape.add(tape.matmul(state.h, dec.out_w), dec.out_b), t == 0 ? mask_first : mask_rest);
        Var logp = tape.log_softmax(logits);

        const auto u = draw_uniforms(B * V, rng);
        for (std::size_t i = 0; i < u.size(); ++i) noise[i] = gumbel_noise(u[i]);
        const Tensor& lp = tape.value(logp);
        const bool use_noise = !(options.mode == DecodeMode::Hard && options.greedy);
        for (std::size_t b = 0; b < B; ++b)
            chosen[b] = int(argmax_row(&lp.data()[b * V], use_noise ? &noise[b * V] : nullptr, V));

        Var row;
        if (options.mode == DecodeMode::Soft) {
            Tensor g(Shape{B, V}, std::vector<Real>(noise.begin(), noise.end()));
            row = tape.softmax(tape.scale(tape.add(logp, tape.constant(std::move(g))), Real(1) / options.tau));
        } else {
            Tensor onehot = Tensor::matrix(B, V);
            for (std::size_t b = 0; b < B; ++b) onehot.at(b, std::size_t(chosen[b])) = Real(1);
            row = tape.constant(std::move(onehot));
        }
        out.steps.push_back(row);

        bool all_done = true;
        for (std::size_t b = 0; b < B; ++b) {
            if (done[b]) {
                row_ids[b].push_back(token::kPad);
                continue;
            }
            row_ids[b].push_back(chosen[b]);
            if (chosen[b] == token::kEnd) {
                done[b] = 1;
                out.ended[b] = 1;
            } else {
                out.lengths[b] = int(t) + 1;
                all_done = false;
            }
        }
        if (all_done) break;

        if (options.mode == DecodeMode::Soft)
            prev = tape.matmul(tape.weighted_rows(row, embedding), dec.w_word);
        else
            prev = tape.matmul(tape.gather_rows(embedding, chosen), dec.w_word);
    }

    const std::size_t steps = out.steps.size();
    out.ids.reserve(B * steps);
    for (std::size_t b = 0; b < B; ++b) out.ids.insert(out.ids.end(), row_ids[b].begin(), row_ids[b].end());
    return out;
}

std::vector<Sentence> translate_sentences(const TranslatorModel& model, std::span<const Sentence> sentences,
                                          int source, const TranslateOptions& options, std::size_t batch_size) {
    TranslateOptions hard = options;
    hard.mode = DecodeMode::Hard;
    Rng rng(options.seed);
    std::vector<Sentence> out;
    out.reserve(sentences.size());
    for (std::size_t begin = 0; begin < sentences.size(); begin += batch_size) {
        const auto chunk = sentences.subspan(begin, std::min(batch_size, sentences.size() - begin));
        Tape tape;
        const BoundTranslator bound = bind(tape, frozen(model), false);
        const SoftSequence seq = translate_batch(tape, bound, source, make_batch(chunk, options.max_len), hard, rng);
        for (std::size_t b = 0; b < chunk.size(); ++b) out.push_back(Sentence::from_words(seq.row_ids(b)));
    }
    return out;
}

Sentence translate(const TranslatorModel& model, const Sentence& sentence, Direction direction,
                   const TranslateOptions& options) {
    if (sentence.length() == 0) throw std::invalid_argument("translate: empty sentence");
    if (options.mode == DecodeMode::Soft) {
        const SoftSentence s = translate_soft(model, sentence, direction, options);
        return Sentence::from_words(std::span<const int>(s.ids).first(std::size_t(s.length)));
    }
    const Sentence one[] = {sentence};
    return translate_sentences(model, one, direction.source, options).front();
}

SoftSentence translate_soft(const TranslatorModel& model, const Sentence& sentence, Direction direction,
                            const TranslateOptions& options) {
    if (sentence.length() == 0) throw std::invalid_argument("translate: empty sentence");
    TranslateOptions soft_opts = options;
    soft_opts.mode = DecodeMode::Soft;
    Rng rng(options.seed);
    Tape tape;
    const BoundTranslator bound = bind(tape, frozen(model), false);
    const Sentence one[] = {sentence};
    const SoftSequence seq =
        translate_batch(tape, bound, direction.source, make_batch(one, options.max_len), soft_opts, rng);
    SoftSentence out;
    out.length = seq.lengths[0];
    out.ended = seq.ended[0] != 0;
    const std::size_t n = std::size_t(out.length) + (out.ended ? 1 : 0);
    const std::size_t V = model.vocab_size();
    out.rows = Tensor::matrix(n, V);
    for (std::size_t t = 0; t < n; ++t) {
        const Tensor& r = tape.value(seq.steps[t]);
        std::copy(r.data(), r.data() + V, out.rows.data() + t * V);
    }
    out.ids = seq.row_ids(0);
    return out;
}

std::vector<Real> encode(const TranslatorModel& model, const Sentence& sentence) {
    if (sentence.length() == 0) throw std::invalid_argument("encode: empty sentence");
    Tape tape;
    const BoundEncoder enc = bind(tape, frozen(model).encoder, false);
    const Sentence one[] = {sentence};
    const Tensor& e = tape.value(encode_hard(tape, enc, make_batch(one, sentence.length())));
    return std::vector<Real>(e.values().begin(), e.values().end());
}

Var reconstruction_logprob(Tape& tape, const BoundTranslator& model, int reverse_source, const SoftSequence& soft,
                           const Batch& original) {
    if (reverse_source != 0 && reverse_source != 1) throw std::invalid_argument("reconstruction: unknown direction");
    if (soft.batch() != original.size)
        throw ShapeError("reconstruction: soft batch " + std::to_string(soft.batch()) + " vs original batch " +
                         std::to_string(original.size));
    Var condition = encode_soft(tape, model.encoder, soft);
    return teacher_forced_log_likelihood(tape, model.decoders[std::size_t(reverse_source)], model.encoder.embedding,
                                         condition, original, /*include_end=*/false);
}

Real reconstruction_logprob(const TranslatorModel& model, Direction reverse, const Tensor& soft_rows,
                            const Sentence& original) {
    if (soft_rows.cols() != model.vocab_size())
        throw ShapeError("reconstruction: soft rows " + shape_to_string(soft_rows.shape()) + " vs vocabulary " +
                         std::to_string(model.vocab_size()));
    if (original.length() == 0) throw std::invalid_argument("reconstruction: empty original");
    Tape tape;
    const BoundTranslator bound = bind(tape, frozen(model), false);
    const SoftSequence soft = soft_sequence_from_rows(tape, tape.constant(soft_rows));
    const Sentence one[] = {original};
    const Var lp = reconstruction_logprob(tape, bound, reverse.source, soft, make_batch(one, original.length()));
    return tape.value(lp)[0];
}

}  // namespace a4nt
