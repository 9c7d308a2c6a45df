#include <doctest.h>

#include "a4nt/classifier.hpp"
#include "a4nt/losses.hpp"
#include "a4nt/translator.hpp"
#include "fd.hpp"

using namespace a4nt;

namespace {

constexpr std::size_t V = 8;
const TaskSpec kTask{"age", {"teen", "adult"}};

std::vector<Sentence> tiny_sentences() {
    return {Sentence::from_words(std::vector<int>{3, 4, 5}), Sentence::from_words(std::vector<int>{6, 7}),
            Sentence::from_words(std::vector<int>{5})};
}

ClassifierModel tiny_classifier(std::uint64_t seed, EncodingKind kind = EncodingKind::FinalAndMean) {
    ClassifierModel m = ClassifierModel::create(kTask, V, ClassifierConfig{3, 4, kind, seed});
    fd::randomize(m.parameters(), 0.6, seed + 50);
    return m;
}

TranslatorModel tiny_translator(std::uint64_t seed) {
    TranslatorModel m = TranslatorModel::create(kTask, V, TranslatorConfig{3, 4, 4, seed});
    fd::randomize(m.parameters(), 0.6, seed + 60);
    return m;
}

LanguageModel tiny_lm(int label, std::uint64_t seed) {
    LanguageModel lm = LanguageModel::create(kTask, label, V, LanguageModelConfig{3, 4, seed});
    fd::randomize(lm.parameters(), 0.6, seed + 70);
    return lm;
}

TranslateOptions soft_options() {
    TranslateOptions o;
    o.mode = DecodeMode::Soft;
    o.max_len = 4;
    o.tau = Real(0.5);
    return o;
}

void expect_close(const fd::Result& r) {
    CAPTURE(r.worst);
    CHECK(r.checked > 0);
    CHECK(r.max_abs_grad > 0);
    CHECK(r.max_rel_error < 1e-4);
}

}  // namespace

TEST_CASE("classifier cross-entropy gradient") {
    for (auto kind : {EncodingKind::FinalAndMean, EncodingKind::FinalOnly}) {
        ClassifierModel m = tiny_classifier(1, kind);
        const auto sents = tiny_sentences();
        Batch batch = make_batch(std::span<const Sentence>(sents), 10);
        batch.labels = {0, 1, 1};
        expect_close(fd::check(m.parameters(), [&](Tape& t) { return classifier_cross_entropy(t, m, batch); }));
    }
}

TEST_CASE("classify_soft gradient with respect to soft rows and weights") {
    ClassifierModel m = tiny_classifier(2);
    Parameter logits = fd::random_param("logits", 4, V, 3, -2, 2);
    auto params = m.parameters();
    params.push_back(&logits);
    expect_close(fd::check(params, [&](Tape& t) {
        SoftSequence soft = soft_sequence_from_rows(t, t.softmax(t.param(logits)), true);
        Var lp = classifier_log_probs_soft(t, m, soft, true);
        return t.neg(t.sum(t.pick(lp, {1})));
    }));
}

TEST_CASE("discriminator loss gradient reaches only the discriminator") {
    ClassifierModel a = tiny_classifier(4);
    TranslatorModel z = tiny_translator(5);
    const auto sents = tiny_sentences();
    Batch real = make_batch(std::span<const Sentence>(sents), 10);
    Batch source = make_batch(std::span<const Sentence>(sents).first(2), 10);
    auto build = [&](Tape& t) {
        Rng rng(8);
        BoundTranslator bt = bind(t, z, false);
        SoftSequence fake = translate_batch(t, bt, 0, source, soft_options(), rng);
        return discriminator_loss(t, a, 1, real, fake);
    };
    expect_close(fd::check(a.parameters(), build));
    for (auto* p : z.parameters()) CHECK(p->grad.values().size() == 0);
}

TEST_CASE("generator losses match central differences through soft samples") {
    TranslatorModel z = tiny_translator(6);
    ClassifierModel a1 = tiny_classifier(7);
    LanguageModel lm1 = tiny_lm(1, 8);
    SemanticEmbedder f = SemanticEmbedder::create(V, 3, 4, 9);
    fd::randomize(f.parameters(), 0.6, 90);
    const auto sents = tiny_sentences();
    Batch original = make_batch(std::span<const Sentence>(sents), 10);

    auto fake_of = [&](Tape& t, BoundTranslator& bt) {
        Rng rng(21);
        return translate_batch(t, bt, 0, original, soft_options(), rng);
    };

    SUBCASE("style") {
        expect_close(fd::check(z.parameters(), [&](Tape& t) {
            BoundTranslator bt = bind(t, z, true);
            return style_loss(t, a1, 1, fake_of(t, bt));
        }));
        for (auto* p : a1.parameters()) CHECK(p->grad.values().size() == 0);
    }
    SUBCASE("cycle reconstruction, normalised and raw") {
        for (bool raw : {false, true}) {
            expect_close(fd::check(z.parameters(), [&](Tape& t) {
                BoundTranslator bt = bind(t, z, true);
                return cycle_ml_loss(t, bt, 1, fake_of(t, bt), original, raw);
            }));
        }
    }
    SUBCASE("semantic embedding") {
        expect_close(fd::check(z.parameters(), [&](Tape& t) {
            BoundTranslator bt = bind(t, z, true);
            BoundEncoder fe = bind(t, f.encoder, false);
            return semantic_embedding_loss(t, fe, fake_of(t, bt), original);
        }));
    }
    SUBCASE("language") {
        expect_close(fd::check(z.parameters(), [&](Tape& t) {
            BoundTranslator bt = bind(t, z, true);
            BoundLanguageModel blm = bind(t, lm1, false);
            return language_loss(t, blm, fake_of(t, bt));
        }));
    }
    SUBCASE("weighted total") {
        expect_close(fd::check(z.parameters(), [&](Tape& t) {
            BoundTranslator bt = bind(t, z, true);
            SoftSequence fake = fake_of(t, bt);
            BoundLanguageModel blm = bind(t, lm1, false);
            Var total = t.add(t.scale(style_loss(t, a1, 1, fake), Real(1.0)),
                              t.add(t.scale(cycle_ml_loss(t, bt, 1, fake, original), Real(0.7)),
                                    t.scale(language_loss(t, blm, fake), Real(1.3))));
            return total;
        }));
    }
}

TEST_CASE("soft samples carry gradient into the shared encoder and the used decoder") {
    TranslatorModel z = tiny_translator(11);
    ClassifierModel a1 = tiny_classifier(12);
    const auto sents = tiny_sentences();
    Batch original = make_batch(std::span<const Sentence>(sents), 10);
    for (auto* p : z.parameters()) p->zero_grad();
    Tape t;
    BoundTranslator bt = bind(t, z, true);
    Rng rng(3);
    SoftSequence fake = translate_batch(t, bt, 0, original, soft_options(), rng);
    t.backward(style_loss(t, a1, 1, fake));
    auto norm = [](const std::vector<Parameter*>& ps) {
        double s = 0;
        for (auto* p : ps)
            for (Real g : p->grad.values()) s += double(g) * double(g);
        return s;
    };
    CHECK(norm(z.encoder.parameters()) > 0);
    CHECK(norm(z.decoders[0].parameters()) > 0);
    CHECK(norm(z.decoders[1].parameters()) == 0);
}

TEST_CASE("language model likelihood and soft likelihood gradients") {
    LanguageModel lm = tiny_lm(0, 13);
    const auto sents = tiny_sentences();
    Batch batch = make_batch(std::span<const Sentence>(sents), 10);
    expect_close(fd::check(lm.parameters(), [&](Tape& t) {
        BoundLanguageModel b = bind(t, lm, true);
        return t.neg(t.sum(lm_log_likelihood(t, b, batch, nullptr)));
    }));

    Parameter logits = fd::random_param("logits", 3, V, 14, -2, 2);
    auto params = lm.parameters();
    params.push_back(&logits);
    expect_close(fd::check(params, [&](Tape& t) {
        BoundLanguageModel b = bind(t, lm, true);
        SoftSequence soft = soft_sequence_from_rows(t, t.softmax(t.param(logits)), true);
        return t.sum(lm_soft_nll(t, b, soft, nullptr));
    }));
}

TEST_CASE("reconstruction log-probability gradient over soft rows and translator") {
    TranslatorModel z = tiny_translator(15);
    Parameter logits = fd::random_param("logits", 3, V, 16, -2, 2);
    const auto sents = tiny_sentences();
    Batch original = make_batch(std::span<const Sentence>(sents).first(1), 10);
    auto params = z.parameters();
    params.push_back(&logits);
    expect_close(fd::check(params, [&](Tape& t) {
        BoundTranslator bt = bind(t, z, true);
        SoftSequence soft = soft_sequence_from_rows(t, t.softmax(t.param(logits)), false);
        return t.neg(t.sum(reconstruction_logprob(t, bt, 1, soft, original)));
    }));
}

TEST_CASE("teacher-forced autoencoder objective gradient") {
    TranslatorModel z = tiny_translator(17);
    const auto sents = tiny_sentences();
    Batch batch = make_batch(std::span<const Sentence>(sents), 10);
    expect_close(fd::check(z.parameters(), [&](Tape& t) {
        BoundTranslator bt = bind(t, z, true);
        Var cond = encode_hard(t, bt.encoder, batch);
        return t.neg(t.sum(teacher_forced_log_likelihood(t, bt.decoders[1], bt.encoder.embedding, cond, batch, true)));
    }));
}

TEST_CASE("gumbel-softmax rows are differentiable in the source distribution") {
    Parameter logits = fd::random_param("logits", 2, V, 18, -2, 2);
    Parameter w = fd::random_param("w", 2, V, 19);
    std::mt19937_64 rng(20);
    const auto u = draw_uniforms(2 * V, rng);
    expect_close(fd::check({&logits}, [&](Tape& t) {
        Var row = sample_gumbel_soft(t, t.softmax(t.param(logits)), Real(0.5), u);
        return t.sum(t.mul(row, t.constant(w.value)));
    }));
}
