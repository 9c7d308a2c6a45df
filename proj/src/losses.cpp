#include "a4nt/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace a4nt {

// ---------------------------------------------------------------------------
// Language model

LanguageModel LanguageModel::create(const TaskSpec& task, int label, std::size_t vocab_size,
                                    const LanguageModelConfig& config) {
    Rng rng(config.seed + std::uint64_t(label));
    LanguageModel lm;
    lm.task = task;
    lm.label = label;
    const std::string prefix = "lm." + task.class_name(label);
    lm.embedding = Parameter(prefix + ".embedding", uniform_tensor({vocab_size, config.embed_dim}, Real(0.1), rng));
    lm.lstm = LstmLayer::create(prefix + ".lstm", config.embed_dim, config.hidden, rng);
    lm.out_w = Parameter(prefix + ".out_w",
                         uniform_tensor({config.hidden, vocab_size}, Real(1) / std::sqrt(Real(config.hidden)), rng));
    lm.out_b = Parameter(prefix + ".out_b", Tensor::matrix(1, vocab_size));
    return lm;
}

std::vector<Parameter*> LanguageModel::parameters() {
    return {&embedding, &lstm.w_input, &lstm.w_hidden, &lstm.bias, &out_w, &out_b};
}

BoundLanguageModel bind(Tape& tape, LanguageModel& lm, bool trainable) {
    return BoundLanguageModel{tape.param(lm.embedding, trainable), bind(tape, lm.lstm, trainable),
                              tape.param(lm.out_w, trainable), tape.param(lm.out_b, trainable)};
}

Var lm_log_likelihood(Tape& tape, const BoundLanguageModel& lm, const Batch& batch, std::vector<int>* counts) {
    const std::size_t B = batch.size;
    auto inputs = project_hard_inputs(tape, lm.embedding, lm.lstm.w_input, batch, /*prepend_start=*/true);
    LstmState state = lstm_zero_state(tape, B, lm.lstm.hidden);
    Var total;
    std::vector<int> target(B);
    std::vector<Real> mask(B);
    for (std::size_t t = 0; t <= batch.width; ++t) {
        state = lstm_step(tape, lm.lstm, inputs[t], state);
        Var logp = tape.log_softmax(tape.add(tape.matmul(state.h, lm.out_w), lm.out_b));
        for (std::size_t b = 0; b < B; ++b) {
            const auto n = std::size_t(batch.lengths[b]);
            target[b] = t < n ? batch.at(b, t) : (t == n ? token::kEnd : token::kPad);
            mask[b] = t <= n ? Real(1) : Real(0);
        }
        Var term = tape.mul(tape.pick(logp, target), column_constant(tape, mask));
        total = total.valid() ? tape.add(total, term) : term;
    }
    if (counts) {
        counts->resize(B);
        for (std::size_t b = 0; b < B; ++b) (*counts)[b] = batch.lengths[b] + 1;
    }
    return total;
}

Var lm_soft_nll(Tape& tape, const BoundLanguageModel& lm, const SoftSequence& soft, std::vector<int>* counts) {
    const std::size_t B = soft.batch();
    std::vector<int> scored(B);
    std::size_t steps = 0;
    for (std::size_t b = 0; b < B; ++b) {
        scored[b] = soft.lengths[b] + soft.ended[b];
        steps = std::max(steps, std::size_t(scored[b]));
    }
    if (steps > soft.steps.size()) throw std::invalid_argument("language loss: soft sequence shorter than its lengths");
    Var input = tape.matmul(tape.gather_rows(lm.embedding, std::vector<int>(B, token::kStart)), lm.lstm.w_input);
    LstmState state = lstm_zero_state(tape, B, lm.lstm.hidden);
    Var total;
    std::vector<Real> mask(B);
    for (std::size_t t = 0; t < steps; ++t) {
        state = lstm_step(tape, lm.lstm, input, state);
        Var logp = tape.log_softmax(tape.add(tape.matmul(state.h, lm.out_w), lm.out_b));
        const Var row = soft.steps[t];
        for (std::size_t b = 0; b < B; ++b) mask[b] = int(t) < scored[b] ? Real(1) : Real(0);
        Var term = tape.mul(tape.sum_cols(tape.mul(row, logp)), column_constant(tape, mask));
        total = total.valid() ? tape.add(total, term) : term;
        if (t + 1 < steps) input = tape.matmul(tape.weighted_rows(row, lm.embedding), lm.lstm.w_input);
    }
    if (counts) *counts = scored;
    return tape.neg(total);
}

double perplexity(const LanguageModel& lm, std::span<const Sentence> sentences, std::size_t max_len) {
    if (sentences.empty()) throw std::invalid_argument("perplexity: no sentences");
    auto& model = const_cast<LanguageModel&>(lm);
    double nll = 0;
    double tokens = 0;
    const std::size_t chunk_size = 64;
    for (std::size_t begin = 0; begin < sentences.size(); begin += chunk_size) {
        const auto chunk = sentences.subspan(begin, std::min(chunk_size, sentences.size() - begin));
        Tape tape;
        std::vector<int> counts;
        const Var ll = lm_log_likelihood(tape, bind(tape, model, false), make_batch(chunk, max_len), &counts);
        const Tensor& v = tape.value(ll);
        for (std::size_t b = 0; b < chunk.size(); ++b) {
            nll -= v[b];
            tokens += counts[b];
        }
    }
    return std::exp(nll / tokens);
}

// ---------------------------------------------------------------------------
// Semantic embedder

SemanticEmbedder SemanticEmbedder::create(std::size_t vocab_size, std::size_t embed_dim, std::size_t hidden,
                                          std::uint64_t seed) {
    Rng rng(seed);
    SemanticEmbedder f;
    f.encoder =
        SentenceEncoder::create("embedder.encoder", vocab_size, embed_dim, hidden, EncodingKind::FinalAndMean, rng);
    f.decoder = Decoder::create("embedder.decoder", f.encoder.output_size(), embed_dim, hidden, vocab_size, rng);
    return f;
}

std::vector<Parameter*> SemanticEmbedder::parameters() {
    auto out = encoder.parameters();
    for (Parameter* p : decoder.parameters()) out.push_back(p);
    return out;
}

std::vector<Real> embed(const SemanticEmbedder& f, const Sentence& sentence) {
    if (sentence.length() == 0) throw std::invalid_argument("embed: empty sentence");
    Tape tape;
    const BoundEncoder enc = bind(tape, const_cast<SemanticEmbedder&>(f).encoder, false);
    const Sentence one[] = {sentence};
    const Tensor& e = tape.value(encode_hard(tape, enc, make_batch(one, sentence.length())));
    return std::vector<Real>(e.values().begin(), e.values().end());
}

// ---------------------------------------------------------------------------
// Objectives

const char* to_string(SemanticVariant v) { return v == SemanticVariant::Cycle ? "cycle" : "embedding"; }

SemanticVariant semantic_variant_from_string(const std::string& s) {
    if (s == "cycle") return SemanticVariant::Cycle;
    if (s == "embedding") return SemanticVariant::Embedding;
    throw std::invalid_argument("unknown semantic variant '" + s + "' (expected cycle or embedding)");
}

namespace {

Var clamped(Tape& tape, Var p) { return tape.clamp(p, kProbabilityFloor, Real(1) - kProbabilityFloor); }

// Row means of per-row values v [B,1], each divided by its count unless raw.
Var normalized_mean(Tape& tape, Var v, const std::vector<int>& counts, bool raw_sum) {
    if (raw_sum) return tape.mean(v);
    std::vector<Real> inv(counts.size());
    for (std::size_t b = 0; b < counts.size(); ++b) inv[b] = Real(1) / Real(std::max(counts[b], 1));
    return tape.mean(tape.mul(v, column_constant(tape, inv)));
}

}  // namespace

Var discriminator_loss(Tape& tape, Var p_real, Var p_fake) {
    Var real_term = tape.neg(tape.mean(tape.log(clamped(tape, p_real))));
    Var fake_term = tape.neg(tape.mean(tape.log(tape.add_scalar(tape.neg(clamped(tape, p_fake)), Real(1)))));
    return tape.add(real_term, fake_term);
}

Var style_loss(Tape& tape, Var p_fake) { return tape.neg(tape.mean(tape.log(clamped(tape, p_fake)))); }

Var class_probability(Tape& tape, Var log_probs, int label) {
    const std::size_t B = tape.value(log_probs).rows();
    return tape.exp(tape.pick(log_probs, std::vector<int>(B, label)));
}

Var discriminator_loss(Tape& tape, ClassifierModel& discriminator, int target, const Batch& real,
                       const SoftSequence& fake) {
    Var p_real = class_probability(tape, classifier_log_probs(tape, discriminator, real, true), target);
    Var p_fake = class_probability(tape, classifier_log_probs_soft(tape, discriminator, fake, true), target);
    return discriminator_loss(tape, p_real, p_fake);
}

Var style_loss(Tape& tape, ClassifierModel& discriminator, int target, const SoftSequence& fake) {
    return style_loss(tape,
                      class_probability(tape, classifier_log_probs_soft(tape, discriminator, fake, false), target));
}

Var cycle_ml_loss(Tape& tape, const BoundTranslator& translator, int reverse_source, const SoftSequence& fake,
                  const Batch& original, bool raw_sum) {
    Var lp = reconstruction_logprob(tape, translator, reverse_source, fake, original);
    return tape.neg(normalized_mean(tape, lp, original.lengths, raw_sum));
}

Var semantic_embedding_loss(Tape& tape, const BoundEncoder& f, const SoftSequence& fake, const Batch& original) {
    Var a = encode_hard(tape, f, original);
    Var b = encode_soft(tape, f, fake);
    return tape.mean(tape.sum_cols(tape.abs_diff(a, b)));
}

Var language_loss(Tape& tape, const BoundLanguageModel& lm, const SoftSequence& fake, bool raw_sum) {
    std::vector<int> counts;
    Var nll = lm_soft_nll(tape, lm, fake, &counts);
    return normalized_mean(tape, nll, counts, raw_sum);
}

void LossWeights::validate() const {
    const double w[] = {style, semantic, language};
    const char* names[] = {"w_sty", "w_sem", "w_l"};
    bool any_positive = false;
    for (int i = 0; i < 3; ++i) {
        if (!std::isfinite(w[i]) || w[i] < 0)
            throw std::invalid_argument(std::string("loss weight ") + names[i] + " must be finite and non-negative");
        any_positive = any_positive || w[i] > 0;
    }
    if (!any_positive) throw std::invalid_argument("at least one loss weight must be positive");
}

LossReport total_loss(const LossWeights& weights, double style, double semantic, double language,
                      SemanticVariant variant) {
    weights.validate();
    const double parts[] = {style, semantic, language};
    const char* names[] = {"style", "semantic", "language"};
    for (int i = 0; i < 3; ++i)
        if (!std::isfinite(parts[i])) throw std::domain_error(std::string("non-finite ") + names[i] + " loss");
    LossReport r;
    r.style = style;
    r.semantic = semantic;
    r.language = language;
    r.total = weights.style * style + weights.semantic * semantic + weights.language * language;
    r.semantic_variant = variant;
    return r;
}

}  // namespace a4nt
