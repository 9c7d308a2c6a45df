#include "a4nt/classifier.hpp"

#include <cmath>
#include <stdexcept>

namespace a4nt {

namespace {

// Inference never writes through the parameters; binding them frozen only
// reads their values.
ClassifierModel& frozen(const ClassifierModel& m) { return const_cast<ClassifierModel&>(m); }

Var project(Tape& tape, ClassifierModel& model, Var encoding, bool trainable) {
    return tape.log_softmax(tape.matmul(encoding, tape.param(model.projection, trainable)));
}

}  // namespace

ClassifierModel ClassifierModel::create(const TaskSpec& task, std::size_t vocab_size, const ClassifierConfig& config) {
    Rng rng(config.seed);
    ClassifierModel m;
    m.task = task;
    m.encoder = SentenceEncoder::create("classifier.encoder", vocab_size, config.embed_dim, config.hidden, config.kind,
                                        rng);
    m.projection = Parameter("classifier.projection",
                             uniform_tensor({m.encoder.output_size(), 2}, Real(0.1), rng));
    return m;
}

std::vector<Parameter*> ClassifierModel::parameters() {
    auto out = encoder.parameters();
    out.push_back(&projection);
    return out;
}

Var classifier_log_probs(Tape& tape, ClassifierModel& model, const Batch& batch, bool trainable) {
    const BoundEncoder enc = bind(tape, model.encoder, trainable);
    return project(tape, model, encode_hard(tape, enc, batch), trainable);
}

Var classifier_log_probs_soft(Tape& tape, ClassifierModel& model, const SoftSequence& soft, bool trainable) {
    const BoundEncoder enc = bind(tape, model.encoder, trainable);
    return project(tape, model, encode_soft(tape, enc, soft), trainable);
}

Var classifier_cross_entropy(Tape& tape, ClassifierModel& model, const Batch& batch) {
    Var logp = classifier_log_probs(tape, model, batch, true);
    return tape.neg(tape.mean(tape.pick(logp, batch.labels)));
}

std::vector<Real> encode_features(const ClassifierModel& model, const Sentence& sentence) {
    if (sentence.length() == 0) throw std::invalid_argument("encode_features: empty sentence");
    Tape tape;
    const Sentence one[] = {sentence};
    const Batch batch = make_batch(one, sentence.length());
    const BoundEncoder enc = bind(tape, frozen(model).encoder, false);
    const Tensor& e = tape.value(encode_hard(tape, enc, batch));
    return std::vector<Real>(e.values().begin(), e.values().end());
}

ClassProbabilities classify_sentence(const ClassifierModel& model, const Sentence& sentence) {
    if (sentence.length() == 0) throw std::invalid_argument("classify_sentence: empty sentence");
    Tape tape;
    const Sentence one[] = {sentence};
    const Tensor& lp = tape.value(classifier_log_probs(tape, frozen(model), make_batch(one, sentence.length()), false));
    return {std::exp(lp[0]), std::exp(lp[1])};
}

ClassProbabilities classify_soft(const ClassifierModel& model, const Tensor& rows) {
    if (rows.rows() == 0 || rows.cols() != model.vocab_size())
        throw ShapeError("classify_soft: rows must be [n, " + std::to_string(model.vocab_size()) + "], got " +
                         shape_to_string(rows.shape()));
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        double total = 0;
        for (std::size_t c = 0; c < rows.cols(); ++c) total += rows.at(r, c);
        if (std::abs(total - 1.0) > 1e-4)
            throw std::invalid_argument("classify_soft: row " + std::to_string(r) + " sums to " +
                                        std::to_string(total));
    }
    Tape tape;
    const SoftSequence soft = soft_sequence_from_rows(tape, tape.constant(rows));
    const Tensor& lp = tape.value(classifier_log_probs_soft(tape, frozen(model), soft, false));
    return {std::exp(lp[0]), std::exp(lp[1])};
}

std::vector<ClassProbabilities> sentence_log_probs(const ClassifierModel& model, std::span<const Sentence> sentences,
                                                   std::size_t max_len, std::size_t batch_size) {
    std::vector<ClassProbabilities> out;
    out.reserve(sentences.size());
    for (std::size_t begin = 0; begin < sentences.size(); begin += batch_size) {
        const auto chunk = sentences.subspan(begin, std::min(batch_size, sentences.size() - begin));
        Tape tape;
        const Tensor& lp = tape.value(classifier_log_probs(tape, frozen(model), make_batch(chunk, max_len), false));
        for (std::size_t r = 0; r < chunk.size(); ++r) out.push_back({lp.at(r, 0), lp.at(r, 1)});
    }
    return out;
}

DocumentPrediction aggregate_document(std::span<const ClassProbabilities> sentence_log_probs, const TaskSpec& task,
                                      DocumentAggregation aggregation) {
    if (sentence_log_probs.empty()) throw std::invalid_argument("classify_document: empty document");
    DocumentPrediction p;
    for (const auto& lp : sentence_log_probs) {
        if (aggregation == DocumentAggregation::LogProbSum) {
            p.scores[0] += lp[0];
            p.scores[1] += lp[1];
        } else {
            p.scores[lp[1] > lp[0] ? 1 : 0] += Real(1);
        }
    }
    if (p.scores[0] == p.scores[1])
        p.label = task.classes[0] <= task.classes[1] ? 0 : 1;
    else
        p.label = p.scores[1] > p.scores[0] ? 1 : 0;
    return p;
}

DocumentPrediction classify_document(const ClassifierModel& model, const Document& document,
                                     DocumentAggregation aggregation) {
    const auto lps = sentence_log_probs(model, document.sentences);
    return aggregate_document(lps, model.task, aggregation);
}

}  // namespace a4nt
