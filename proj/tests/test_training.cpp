#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "a4nt/training.hpp"

using namespace a4nt;

namespace {

struct Data {
    Vocabulary vocab;
    Corpus train, val;
};

const Data& tiny_data() {
    static const Data d = [] {
        SyntheticOptions o;
        o.docs_per_class = 12;
        o.sentences_per_doc = 3;
        const CorpusSplits s = split_corpus(generate_synthetic_corpus(o), 0.25, 0.0, 3);
        Data out;
        out.vocab = build_vocabulary(s.train, 1);
        out.train = encode_corpus(s.train, out.vocab);
        out.val = encode_corpus(s.val, out.vocab);
        return out;
    }();
    return d;
}

FitConfig quick(std::size_t epochs) {
    FitConfig c;
    c.epochs = epochs;
    c.batch_size = 8;
    c.learning_rate = 5e-3;
    c.patience = 100;
    return c;
}

bool same_trace(const FitTrace& a, const FitTrace& b) {
    if (a.epochs.size() != b.epochs.size() || a.best_epoch != b.best_epoch) return false;
    for (std::size_t i = 0; i < a.epochs.size(); ++i)
        if (a.epochs[i].train_loss != b.epochs[i].train_loss || a.epochs[i].val_metric != b.epochs[i].val_metric)
            return false;
    return true;
}

struct Gan {
    TranslatorModel translator;
    ClassifierModel d0, d1, evaluator;
    LanguageModel lm0, lm1;
    SemanticEmbedder embedder;

    explicit Gan(std::size_t V)
        : translator(TranslatorModel::create(synthetic_task(), V, TranslatorConfig{6, 8, 8, 1})),
          d0(ClassifierModel::create(synthetic_task(), V, ClassifierConfig{6, 8, EncodingKind::FinalAndMean, 2})),
          d1(d0),
          evaluator(ClassifierModel::create(synthetic_task(), V, ClassifierConfig{6, 8, EncodingKind::FinalAndMean, 3})),
          lm0(LanguageModel::create(synthetic_task(), 0, V, LanguageModelConfig{6, 8, 4})),
          lm1(LanguageModel::create(synthetic_task(), 1, V, LanguageModelConfig{6, 8, 5})),
          embedder(SemanticEmbedder::create(V, 6, 8, 6)) {}

    GanModels models() {
        GanModels m;
        m.translator = &translator;
        m.discriminators = {&d0, &d1};
        m.language_models = {&lm0, &lm1};
        m.embedder = &embedder;
        m.evaluator = &evaluator;
        return m;
    }
    std::vector<Parameter*> discriminator_params() {
        auto p = d0.parameters();
        for (auto* q : d1.parameters()) p.push_back(q);
        return p;
    }
    std::vector<Parameter*> frozen_params() {
        auto p = evaluator.parameters();
        for (auto* q : lm0.parameters()) p.push_back(q);
        for (auto* q : lm1.parameters()) p.push_back(q);
        for (auto* q : embedder.parameters()) p.push_back(q);
        return p;
    }
};

GanConfig small_gan(std::size_t iterations) {
    GanConfig c;
    c.iterations = iterations;
    c.batch_size = 4;
    c.max_len = 8;
    c.validate_every = 2;
    c.generator_lr = 1e-3;
    c.discriminator_lr = 1e-3;
    return c;
}

}  // namespace

TEST_CASE("zero epochs leave parameters untouched") {
    const Data& d = tiny_data();
    TranslatorModel z = TranslatorModel::create(d.train.task, d.vocab.size(), TranslatorConfig{6, 8, 8, 1});
    const auto before = snapshot(z.parameters());
    pretrain_autoencoder(z, d.train, d.val, quick(0));
    CHECK(bitwise_equal(z.parameters(), before));

    ClassifierModel c = ClassifierModel::create(d.train.task, d.vocab.size(), ClassifierConfig{6, 8, EncodingKind::FinalAndMean, 1});
    const auto cb = snapshot(c.parameters());
    pretrain_classifier(c, d.train, d.val, quick(0));
    CHECK(bitwise_equal(c.parameters(), cb));
}

TEST_CASE("pretraining is reproducible given its seeds") {
    const Data& d = tiny_data();
    auto run_ae = [&] {
        TranslatorModel z = TranslatorModel::create(d.train.task, d.vocab.size(), TranslatorConfig{6, 8, 8, 1});
        const FitTrace t = pretrain_autoencoder(z, d.train, d.val, quick(2));
        return std::make_pair(t, snapshot(z.parameters()));
    };
    const auto a = run_ae(), b = run_ae();
    CHECK(same_trace(a.first, b.first));
    TranslatorModel z = TranslatorModel::create(d.train.task, d.vocab.size(), TranslatorConfig{6, 8, 8, 1});
    restore(z.parameters(), a.second);
    CHECK(bitwise_equal(z.parameters(), b.second));
    CHECK_FALSE(bitwise_equal(z.parameters(), snapshot(TranslatorModel::create(d.train.task, d.vocab.size(),
                                                                               TranslatorConfig{6, 8, 8, 1})
                                                           .parameters())));

    auto run_clf = [&] {
        ClassifierModel c = ClassifierModel::create(d.train.task, d.vocab.size(), ClassifierConfig{6, 8, EncodingKind::FinalAndMean, 1});
        return pretrain_classifier(c, d.train, d.val, quick(2));
    };
    CHECK(same_trace(run_clf(), run_clf()));
}

TEST_CASE("a trained language model beats the uniform model") {
    const Data& d = tiny_data();
    LanguageModel lm = LanguageModel::create(d.train.task, 1, d.vocab.size(), LanguageModelConfig{8, 12, 3});
    const FitTrace t = pretrain_language_model(lm, d.train, d.val, quick(3));
    CHECK(t.epochs.size() == 3);
    std::vector<Sentence> sents;
    for (const auto& item : flatten_class(d.train, 1)) sents.push_back(*item.sentence);
    CHECK(perplexity(lm, sents, 20) <= double(d.vocab.size()));
    CHECK(std::isfinite(t.best_metric));
}

TEST_CASE("the embedder maps identical sentences to identical vectors") {
    const Data& d = tiny_data();
    SemanticEmbedder f = SemanticEmbedder::create(d.vocab.size(), 6, 8, 2);
    pretrain_embedder(f, d.train, d.val, quick(1));
    const Sentence& s = d.train.documents[0].sentences[0];
    const Sentence copy = s;
    CHECK(embed(f, s) == embed(f, copy));
}

TEST_CASE("holdout ensemble configurations") {
    const auto cfgs = holdout_configs(5);
    REQUIRE(cfgs.size() == 6);
    std::set<std::string> names;
    for (const auto& c : cfgs) names.insert(holdout_name(c));
    CHECK(names.size() == 6);
}

TEST_CASE("GAN training keeps auxiliaries frozen and updates each side separately") {
    const Data& d = tiny_data();
    Gan g(d.vocab.size());
    GanModels m = g.models();
    GanConfig cfg = small_gan(4);
    cfg.semantic_variant = SemanticVariant::Embedding;
    const auto frozen = snapshot(g.frozen_params());
    auto gen = snapshot(g.translator.parameters());
    auto disc = snapshot(g.discriminator_params());
    std::size_t updates = 0;
    bool gen_moved = false, disc_moved = false;
    GanHooks hooks;
    hooks.after_update = [&](std::size_t, bool generator) {
        if (generator) {
            CHECK(bitwise_equal(g.discriminator_params(), disc));
            gen_moved |= !bitwise_equal(g.translator.parameters(), gen);
            gen = snapshot(g.translator.parameters());
        } else {
            CHECK(bitwise_equal(g.translator.parameters(), gen));
            disc_moved |= !bitwise_equal(g.discriminator_params(), disc);
            disc = snapshot(g.discriminator_params());
        }
        ++updates;
    };
    cfg.select_best = false;
    const TrainingTrace trace = train_gan(m, d.train, d.val, cfg, hooks);
    CHECK(updates == 8);
    CHECK(gen_moved);
    CHECK(disc_moved);
    CHECK(bitwise_equal(g.frozen_params(), frozen));
    CHECK(trace.rows.size() == 4);
}

TEST_CASE("GAN trace satisfies the weighted-sum identity and is reproducible") {
    const Data& d = tiny_data();
    auto run = [&] {
        Gan g(d.vocab.size());
        GanModels m = g.models();
        return train_gan(m, d.train, d.val, small_gan(4));
    };
    const TrainingTrace a = run(), b = run();
    REQUIRE(a.rows.size() == 4);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        const LossReport& r = a.rows[i].report;
        CHECK(std::abs(r.total - (a.weights.style * r.style + a.weights.semantic * r.semantic +
                                  a.weights.language * r.language)) <= 1e-6);
        if (i > 0) CHECK(a.rows[i].iteration > a.rows[i - 1].iteration);
        CHECK(r.total == b.rows[i].report.total);
        CHECK(a.rows[i].disc_loss_xy == b.rows[i].disc_loss_xy);
    }
    CHECK(a.rows[1].val_f1.has_value());
    CHECK_FALSE(a.rows[0].val_f1.has_value());
    // calibrated weights make the initial weighted terms equal
    const double terms[] = {a.weights.style * a.initial.style, a.weights.semantic * a.initial.semantic,
                            a.weights.language * a.initial.language};
    for (double t : terms) CHECK(std::abs(t - terms[0]) <= 0.05 * terms[0]);

    std::ostringstream csv;
    a.write_csv(csv);
    CHECK(csv.str().rfind("iteration,style,semantic,language,total,disc_loss_xy,disc_loss_yx,val_f1,val_meteor\n", 0) == 0);

    TrainingTrace t;
    t.append(TraceRow{3});
    CHECK_THROWS(t.append(TraceRow{3}));
}

TEST_CASE("a non-finite step rolls back bitwise and halves the generator rate") {
    const Data& d = tiny_data();
    Gan g(d.vocab.size());
    GanModels m = g.models();
    GanConfig cfg = small_gan(8);
    cfg.max_rollbacks = 3;
    std::vector<Tensor> at_checkpoint;
    std::vector<double> rates;
    GanHooks hooks;
    hooks.on_checkpoint = [&](std::size_t it, const EvalMetrics&) {
        if (it == 2) at_checkpoint = snapshot(g.translator.parameters());
    };
    hooks.inject_nonfinite = [](std::size_t it) { return it >= 3; };
    hooks.log = [&](const std::string& line) {
        const auto pos = line.find("generator learning rate ");
        if (pos != std::string::npos) rates.push_back(std::stod(line.substr(pos + 24)));
    };
    CHECK_THROWS_AS(train_gan(m, d.train, d.val, cfg, hooks), TrainingDiverged);
    REQUIRE_FALSE(at_checkpoint.empty());
    CHECK(bitwise_equal(g.translator.parameters(), at_checkpoint));
    REQUIRE(rates.size() == 3);
    CHECK(rates[0] == doctest::Approx(cfg.generator_lr / 2));
    CHECK(rates[1] == doctest::Approx(cfg.generator_lr / 4));
    CHECK(rates[2] == doctest::Approx(cfg.generator_lr / 8));
}

TEST_CASE("a single non-finite step is recovered from") {
    const Data& d = tiny_data();
    Gan g(d.vocab.size());
    GanModels m = g.models();
    GanHooks hooks;
    hooks.inject_nonfinite = [](std::size_t it) { return it == 3; };
    const TrainingTrace t = train_gan(m, d.train, d.val, small_gan(5), hooks);
    CHECK(t.rollbacks == 1);
    CHECK(t.rows.size() == 4);
    for (const auto& r : t.rows) CHECK(r.iteration != 3);
}
