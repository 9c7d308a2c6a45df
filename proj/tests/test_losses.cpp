#include <doctest.h>

#include <cmath>
#include <random>

#include "a4nt/losses.hpp"
#include "a4nt/training.hpp"

using namespace a4nt;

namespace {

const TaskSpec kTask{"age", {"teen", "adult"}};

double scalar(Tape& t, Var v) { return double(t.value(v)[0]); }

Var column(Tape& t, std::initializer_list<double> xs) {
    std::vector<Real> v;
    for (double x : xs) v.push_back(Real(x));
    return column_constant(t, v);
}

Tensor one_hot(std::span<const int> ids, std::size_t V) {
    Tensor t = Tensor::matrix(ids.size(), V);
    for (std::size_t i = 0; i < ids.size(); ++i) t.at(i, std::size_t(ids[i])) = 1;
    return t;
}

Batch batch_of(const std::vector<int>& words) {
    const Sentence s[] = {Sentence::from_words(words)};
    return make_batch(std::span<const Sentence>(s), 20);
}

template <class P>
void randomize(P& model, std::uint64_t seed, double scale = 0.7) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    for (auto* p : model.parameters())
        for (auto& v : p->value.values()) v = Real(u(rng));
}

double semantic_distance(SemanticEmbedder& f, const std::vector<int>& a, const std::vector<int>& b) {
    Tape t;
    BoundEncoder fe = bind(t, f.encoder, false);
    SoftSequence soft = soft_sequence_from_rows(t, t.constant(one_hot(a, f.vocab_size())));
    return scalar(t, semantic_embedding_loss(t, fe, soft, batch_of(b)));
}

}  // namespace

TEST_CASE("discriminator loss closed forms and monotonicity") {
    Tape t;
    CHECK(scalar(t, discriminator_loss(t, column(t, {1.0}), column(t, {0.0}))) < 1e-6);
    CHECK(scalar(t, discriminator_loss(t, column(t, {0.5}), column(t, {0.5}))) ==
          doctest::Approx(2 * std::log(2.0)).epsilon(1e-6));
    double prev = 1e9;
    for (double pf : {0.9, 0.6, 0.3, 0.1, 0.01}) {
        const double v = scalar(t, discriminator_loss(t, column(t, {0.7}), column(t, {pf})));
        CHECK(v < prev);
        prev = v;
    }
    CHECK(std::isfinite(scalar(t, discriminator_loss(t, column(t, {0.0}), column(t, {1.0})))));
}

TEST_CASE("style loss closed forms") {
    Tape t;
    CHECK(scalar(t, style_loss(t, column(t, {1.0}))) < 1e-6);
    CHECK(scalar(t, style_loss(t, column(t, {0.5}))) == doctest::Approx(std::log(2.0)).epsilon(1e-6));
    CHECK(scalar(t, style_loss(t, column(t, {std::exp(-1.0)}))) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(scalar(t, style_loss(t, column(t, {0.5, 1.0}))) == doctest::Approx(std::log(2.0) / 2).epsilon(1e-6));
}

TEST_CASE("cycle loss is ln 4 per token under a uniform reverse decoder") {
    TranslatorModel z = TranslatorModel::create(kTask, 4, TranslatorConfig{3, 4, 4, 1});
    randomize(z, 2);
    z.decoders[0].out_w.value.fill(0);
    z.decoders[0].out_b.value.fill(0);
    const std::vector<int> fake_ids{3, 3};
    for (const auto& words : std::vector<std::vector<int>>{{3}, {3, 2, 1}, {1, 1, 2, 3, 3}}) {
        Tape t;
        BoundTranslator bt = bind(t, z, false);
        SoftSequence soft = soft_sequence_from_rows(t, t.constant(one_hot(fake_ids, 4)));
        CHECK(scalar(t, cycle_ml_loss(t, bt, 0, soft, batch_of(words))) ==
              doctest::Approx(std::log(4.0)).epsilon(1e-5));
        CHECK(scalar(t, cycle_ml_loss(t, bt, 0, soft, batch_of(words), true)) ==
              doctest::Approx(double(words.size()) * std::log(4.0)).epsilon(1e-5));
    }
}

TEST_CASE("cycle loss vanishes for a perfect reconstructor and falls as correct tokens gain mass") {
    TranslatorModel z = TranslatorModel::create(kTask, 4, TranslatorConfig{3, 4, 4, 1});
    randomize(z, 3);
    z.decoders[1].out_w.value.fill(0);
    z.decoders[1].out_b.value.fill(-40);
    z.decoders[1].out_b.value[3] = 0;
    auto loss = [&](const std::vector<int>& words) {
        Tape t;
        BoundTranslator bt = bind(t, z, false);
        const int fake_ids[] = {2};
        SoftSequence soft = soft_sequence_from_rows(t, t.constant(one_hot(fake_ids, 4)));
        return scalar(t, cycle_ml_loss(t, bt, 1, soft, batch_of(words)));
    };
    CHECK(loss({3, 3, 3}) < 1e-6);
    z.decoders[1].out_b.value.fill(0);
    const double before = loss({3, 2});
    z.decoders[1].out_b.value[2] = Real(0.4);
    CHECK(loss({3, 2}) < before);
}

TEST_CASE("semantic embedding distance is a metric on sentences") {
    SemanticEmbedder f = SemanticEmbedder::create(12, 4, 5, 7);
    randomize(f, 8);
    const std::vector<int> a{9, 10, 11}, b{9, 4, 11}, c{5, 6};
    CHECK(semantic_distance(f, a, a) < 1e-6);
    CHECK(semantic_distance(f, a, b) > 0);
    CHECK(semantic_distance(f, a, b) == doctest::Approx(semantic_distance(f, b, a)).epsilon(1e-6));
    CHECK(semantic_distance(f, a, c) <= semantic_distance(f, a, b) + semantic_distance(f, b, c) + 1e-6);
    CHECK(semantic_distance(f, b, c) <= semantic_distance(f, b, a) + semantic_distance(f, a, c) + 1e-6);
}

TEST_CASE("language loss under a uniform model and padding invariance") {
    LanguageModel lm = LanguageModel::create(kTask, 1, 4, LanguageModelConfig{3, 4, 5});
    randomize(lm, 6);
    const auto rows = one_hot(std::vector<int>{3, 1, 2}, 4);
    {
        LanguageModel flat = lm;
        flat.out_w.value.fill(0);
        flat.out_b.value.fill(0);
        Tape t;
        BoundLanguageModel blm = bind(t, flat, false);
        SoftSequence soft = soft_sequence_from_rows(t, t.constant(rows), true);
        CHECK(scalar(t, language_loss(t, blm, soft)) == doctest::Approx(std::log(4.0)).epsilon(1e-5));
        CHECK(scalar(t, language_loss(t, blm, soft, true)) == doctest::Approx(3 * std::log(4.0)).epsilon(1e-5));
    }
    // the same short row scored alone and next to a longer, padded row
    Tape t;
    BoundLanguageModel blm = bind(t, lm, false);
    SoftSequence alone = soft_sequence_from_rows(t, t.constant(one_hot(std::vector<int>{3, 2}, 4)), true);
    const double single = double(t.value(lm_soft_nll(t, blm, alone, nullptr))[0]);
    SoftSequence both;
    both.lengths = {1, 3};
    both.ended = {1, 0};
    const Tensor garbage = Tensor::from_rows({{Real(0.1), Real(0.2), Real(0.3), Real(0.4)}});
    for (std::size_t s = 0; s < 3; ++s) {
        Tensor step = Tensor::matrix(2, 4);
        const int first[] = {3, 2, 0};
        if (s < 2) step.at(0, std::size_t(first[s])) = 1;
        else
            for (std::size_t c = 0; c < 4; ++c) step.at(0, c) = garbage[c];
        step.at(1, (s + 1) % 4) = 1;
        both.steps.push_back(t.constant(step));
    }
    const double batched = double(t.value(lm_soft_nll(t, blm, both, nullptr))[0]);
    CHECK(batched == doctest::Approx(single).epsilon(1e-6));
}

TEST_CASE("losses are non-negative and finite on random inputs") {
    std::mt19937_64 rng(3);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        TranslatorModel z = TranslatorModel::create(kTask, 10, TranslatorConfig{3, 4, 4, seed});
        ClassifierModel a = ClassifierModel::create(kTask, 10, ClassifierConfig{3, 4, EncodingKind::FinalAndMean, seed});
        LanguageModel lm = LanguageModel::create(kTask, 1, 10, LanguageModelConfig{3, 4, seed});
        SemanticEmbedder f = SemanticEmbedder::create(10, 3, 4, seed);
        const Batch orig = batch_of({9, 5, 7, 4});
        Tape t;
        BoundTranslator bt = bind(t, z, false);
        TranslateOptions o;
        o.mode = DecodeMode::Soft;
        o.max_len = 6;
        SoftSequence fake = translate_batch(t, bt, 0, orig, o, rng);
        BoundLanguageModel blm = bind(t, lm, false);
        BoundEncoder fe = bind(t, f.encoder, false);
        for (Var v : {style_loss(t, a, 1, fake), discriminator_loss(t, a, 1, orig, fake),
                      cycle_ml_loss(t, bt, 1, fake, orig), semantic_embedding_loss(t, fe, fake, orig),
                      language_loss(t, blm, fake)}) {
            const double x = scalar(t, v);
            CHECK(std::isfinite(x));
            CHECK(x >= 0);
        }
    }
}

TEST_CASE("total loss is the weighted sum") {
    CHECK(total_loss({1, 1, 1}, 2, 3, 4).total == doctest::Approx(9));
    const LossReport style_only = total_loss({1, 0, 0}, 2.5, 3, 4);
    CHECK(style_only.total == doctest::Approx(2.5));
    CHECK(total_loss({0.5, 2, 0}, 2, 1, 7).total == doctest::Approx(3));
    const LossReport r = total_loss({0.3, 1.7, 0.9}, 1.25, 0.5, 2.0, SemanticVariant::Embedding);
    CHECK(std::abs(r.total - (0.3 * 1.25 + 1.7 * 0.5 + 0.9 * 2.0)) < 1e-6);
    CHECK(r.semantic_variant == SemanticVariant::Embedding);
    CHECK(r.style == 1.25);

    try {
        (void)total_loss({1, 1, 1}, 1, std::nan(""), 1);
        FAIL("expected rejection");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("semantic") != std::string::npos);
    }
    CHECK_THROWS(total_loss({1, 1, 1}, 1, 1, INFINITY));
}

TEST_CASE("loss weights validation") {
    CHECK_NOTHROW(LossWeights{1, 0, 0}.validate());
    CHECK_THROWS(LossWeights{0, 0, 0}.validate());
    CHECK_THROWS(LossWeights{1, -1, 0}.validate());
    CHECK_THROWS(LossWeights{1, NAN, 0}.validate());
}

TEST_CASE("calibration equalises the initial weighted terms") {
    LossReport r;
    r.style = 2;
    r.semantic = 4;
    r.language = 8;
    const WeightCalibration c = calibrate_loss_weights(r);
    CHECK(c.weights.style == doctest::Approx(1));
    CHECK(c.weights.semantic == doctest::Approx(0.5));
    CHECK(c.weights.language == doctest::Approx(0.25));
    CHECK(c.warnings.empty());
    const double terms[] = {c.weights.style * r.style, c.weights.semantic * r.semantic,
                            c.weights.language * r.language};
    for (double x : terms) CHECK(std::abs(x - terms[0]) <= 0.05 * terms[0]);

    LossReport eq;
    eq.style = eq.semantic = eq.language = 3;
    const auto ce = calibrate_loss_weights(eq);
    CHECK(ce.weights.style == 1);
    CHECK(ce.weights.semantic == 1);
    CHECK(ce.weights.language == 1);

    LossReport zero;
    zero.style = 2;
    zero.semantic = 0;
    zero.language = 1;
    const auto cz = calibrate_loss_weights(zero);
    CHECK(cz.weights.semantic == 1);
    REQUIRE(cz.warnings.size() == 1);
    CHECK(cz.warnings[0].find("semantic") != std::string::npos);
}

TEST_CASE("perplexity of a uniform language model is V") {
    LanguageModel lm = LanguageModel::create(kTask, 0, 6, LanguageModelConfig{3, 4, 1});
    lm.out_w.value.fill(0);
    lm.out_b.value.fill(0);
    const std::vector<Sentence> ss{Sentence::from_words(std::vector<int>{3, 4, 5}),
                                   Sentence::from_words(std::vector<int>{5})};
    CHECK(perplexity(lm, ss, 20) == doctest::Approx(6.0).epsilon(1e-5));
}
