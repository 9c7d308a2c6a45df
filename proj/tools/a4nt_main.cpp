// a4nt: command line entry points for every pipeline stage.
#include <sys/resource.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "a4nt/checkpoint.hpp"
#include "a4nt/config.hpp"
#include "a4nt/service.hpp"
#include "a4nt/training.hpp"
#include "svg_plot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace a4nt;

namespace {

double cpu_seconds() {
    rusage u{};
    getrusage(RUSAGE_SELF, &u);
    return double(u.ru_utime.tv_sec + u.ru_stime.tv_sec) + 1e-6 * double(u.ru_utime.tv_usec + u.ru_stime.tv_usec);
}

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string home_flag;
    bool quiet = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config,-c", config_path, "flat key=value config file");
        cmd->add_option("--set", overrides, "override a config key (key=value)");
        cmd->add_option("--home", home_flag, "checkpoint directory");
        cmd->add_flag("--quiet,-q", quiet, "suppress progress output");
    }
};

struct Context {
    Config config;
    fs::path home;
    LogFn log;
};

Context make_context(const Common& c) {
    Context ctx;
    if (!c.config_path.empty()) ctx.config = Config::load(c.config_path);
    for (const auto& o : c.overrides) ctx.config.apply_override(o);
    ctx.home = ctx.config.home(c.home_flag.empty() ? std::nullopt : std::optional<std::string>(c.home_flag));
    fs::create_directories(ctx.home);
    if (!c.quiet) ctx.log = [](const std::string& line) { std::cout << line << std::endl; };
    return ctx;
}

void say(const Context& ctx, const std::string& line) {
    if (ctx.log) ctx.log(line);
}

void write_json(const fs::path& path, const json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return json::parse(in);
}

template <class Fn>
void write_file(const fs::path& path, Fn&& fn) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    fn(out);
}

void finish(const Context& ctx, const std::string& stage, json summary) {
    summary["stage"] = stage;
    summary["cpu_seconds"] = cpu_seconds();
    write_json(ctx.home / "summaries" / (stage + ".json"), summary);
    std::cout << summary.dump() << std::endl;
}

// ---------------------------------------------------------------------------
// Data

struct Data {
    TaskSpec task;
    Vocabulary vocab;
    Corpus train, val, test;
};

fs::path corpus_dir(const Context& ctx) { return ctx.config.path_or("corpus.dir", ctx.home, "corpus"); }

std::optional<TaskSpec> declared_task(const Context& ctx) {
    const fs::path file = ctx.config.path_or("corpus.task_file", corpus_dir(ctx), "task.json");
    if (!fs::exists(file)) return std::nullopt;
    const json j = read_json(file);
    return TaskSpec{j.at("task").get<std::string>(),
                    {j.at("classes").at(0).get<std::string>(), j.at("classes").at(1).get<std::string>()}};
}

Data load_data(const Context& ctx) {
    const fs::path dir = corpus_dir(ctx);
    const auto train_path = ctx.config.path_or("corpus.train", dir, "train.jsonl");
    const auto val_path = ctx.config.path_or("corpus.val", dir, "val.jsonl");
    const auto test_path = ctx.config.path_or("corpus.test", dir, "test.jsonl");
    const std::string task_name = ctx.config.get_string("corpus.task", "attribute");

    RawCorpus train = read_corpus_jsonl(train_path, declared_task(ctx), task_name);
    RawCorpus val = read_corpus_jsonl(val_path, train.task, task_name);
    Data d;
    d.task = train.task;
    d.vocab = build_vocabulary(train, int(ctx.config.get_int("corpus.min_frequency", 1)));
    d.train = encode_corpus(train, d.vocab);
    d.val = encode_corpus(val, d.vocab);
    if (fs::exists(test_path)) d.test = encode_corpus(read_corpus_jsonl(test_path, train.task, task_name), d.vocab);
    return d;
}

const Corpus& split_of(const Data& d, const std::string& split) {
    if (split == "train") return d.train;
    if (split == "val") return d.val;
    if (split == "test") {
        if (d.test.documents.empty()) throw std::runtime_error("test split is empty or missing");
        return d.test;
    }
    throw std::invalid_argument("unknown split '" + split + "' (train, val, test)");
}

void check_vocab(const Vocabulary& model_vocab, const Data& d, const fs::path& ckpt) {
    if (model_vocab.tokens() != d.vocab.tokens())
        throw std::runtime_error("vocabulary of " + ckpt.string() +
                                 " differs from the one rebuilt from the training corpus");
}

FitConfig fit_config(const Config& c, const std::string& p, FitConfig d) {
    d.learning_rate = c.get_double(p + ".lr", d.learning_rate);
    d.epochs = c.get_size(p + ".epochs", d.epochs);
    d.batch_size = c.get_size(p + ".batch_size", d.batch_size);
    d.max_len = c.get_size(p + ".max_len", c.get_size("corpus.max_len", d.max_len));
    d.seed = c.get_u64(p + ".fit_seed", d.seed);
    d.clip_norm = c.get_double(p + ".clip_norm", d.clip_norm);
    d.patience = c.get_size(p + ".patience", d.patience);
    d.min_improvement = c.get_double(p + ".min_improvement", d.min_improvement);
    return d;
}

json fit_json(const FitTrace& t) {
    json epochs = json::array();
    for (const auto& e : t.epochs)
        epochs.push_back(json{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_metric", e.val_metric}});
    return json{{"epochs", epochs}, {"plateaued", t.plateaued}, {"best_epoch", t.best_epoch},
                {"best_metric", t.best_metric}};
}

json metrics_json(const EvalMetrics& m) {
    return json{{"sentence_f1", m.sentence.macro_f1}, {"doc_f1", m.document.macro_f1},
                {"doc_accuracy", m.document.accuracy}, {"meteor_proxy", m.meteor},
                {"sentences", m.sentences}, {"documents", m.documents}};
}

// ---------------------------------------------------------------------------
// Stages

void cmd_gen_corpus(const Context& ctx) {
    const auto& c = ctx.config;
    RawCorpus raw;
    if (c.has("corpus.source")) {
        raw = read_corpus_jsonl(c.get_string("corpus.source"), std::nullopt, c.get_string("corpus.task", "attribute"));
    } else {
        SyntheticOptions o;
        o.seed = c.get_u64("corpus.seed", o.seed);
        o.docs_per_class = int(c.get_int("corpus.docs_per_class", o.docs_per_class));
        o.sentences_per_doc = int(c.get_int("corpus.sentences_per_doc", o.sentences_per_doc));
        o.marker_rate = c.get_double("corpus.marker_rate", o.marker_rate);
        o.double_marker_rate = c.get_double("corpus.double_marker_rate", o.double_marker_rate);
        raw = generate_synthetic_corpus(o);
    }
    const auto splits = split_corpus(raw, c.get_double("corpus.val_fraction", 0.15),
                                     c.get_double("corpus.test_fraction", 0.15), c.get_u64("corpus.split_seed", 7));
    const fs::path dir = corpus_dir(ctx);
    fs::create_directories(dir);
    write_corpus_jsonl(dir / "train.jsonl", splits.train);
    write_corpus_jsonl(dir / "val.jsonl", splits.val);
    write_corpus_jsonl(dir / "test.jsonl", splits.test);
    write_json(dir / "task.json", json{{"task", raw.task.task}, {"classes", raw.task.classes}});
    const Vocabulary vocab = build_vocabulary(splits.train, int(c.get_int("corpus.min_frequency", 1)));
    finish(ctx, "gen-corpus",
           json{{"dir", dir.string()},
                {"task", raw.task.task},
                {"classes", raw.task.classes},
                {"documents", {{"train", splits.train.documents.size()},
                               {"val", splits.val.documents.size()},
                               {"test", splits.test.documents.size()}}},
                {"vocabulary_size", vocab.size()}});
}

ClassifierConfig classifier_config(const Config& c, const std::string& p, ClassifierConfig d) {
    d.embed_dim = c.get_size(p + ".embed_dim", d.embed_dim);
    d.hidden = c.get_size(p + ".hidden", d.hidden);
    d.kind = encoding_kind_from_string(c.get_string(p + ".kind", to_string(d.kind)));
    d.seed = c.get_u64(p + ".seed", d.seed);
    return d;
}

fs::path classifier_path(const Context& ctx, const std::string& role) {
    return ctx.config.path_or(role == "eval" ? "classifier.out" : "disc.out", ctx.home,
                              "classifier_" + role + ".ckpt");
}

void cmd_train_classifier(const Context& ctx, const std::string& role) {
    if (role != "eval" && role != "disc") throw std::invalid_argument("--role must be eval or disc");
    const Data d = load_data(ctx);
    const std::string p = role == "eval" ? "classifier" : "disc";
    ClassifierConfig mc;
    FitConfig fc;
    fc.epochs = 8;
    if (role == "disc") {
        mc.seed = 99;
        fc.epochs = 3;
        fc.seed = 55;
    }
    mc = classifier_config(ctx.config, p, mc);
    fc = fit_config(ctx.config, p, fc);
    ClassifierModel model = ClassifierModel::create(d.task, d.vocab.size(), mc);
    const FitTrace trace = pretrain_classifier(model, d.train, d.val, fc, ctx.log);
    const EvalMetrics val = evaluate_transfer(identity_transfer(), model, d.val, 0);
    const fs::path out = classifier_path(ctx, role);
    save_classifier(out, model, d.vocab, json{{"role", role}, {"val_doc_f1", val.document.macro_f1}});
    finish(ctx, "train-classifier-" + role,
           json{{"checkpoint", out.string()}, {"val", metrics_json(val)}, {"trace", fit_json(trace)}});
}

fs::path lm_path(const Context& ctx, int label) {
    return ctx.config.path_or("lm.out" + std::to_string(label), ctx.home, "lm_" + std::to_string(label) + ".ckpt");
}

void cmd_train_lm(const Context& ctx) {
    const Data d = load_data(ctx);
    LanguageModelConfig mc;
    mc.embed_dim = ctx.config.get_size("lm.embed_dim", mc.embed_dim);
    mc.hidden = ctx.config.get_size("lm.hidden", mc.hidden);
    mc.seed = ctx.config.get_u64("lm.seed", mc.seed);
    FitConfig fc;
    fc = fit_config(ctx.config, "lm", fc);
    json models = json::array();
    for (int label = 0; label < 2; ++label) {
        LanguageModel lm = LanguageModel::create(d.task, label, d.vocab.size(), mc);
        const FitTrace trace = pretrain_language_model(lm, d.train, d.val, fc, ctx.log);
        std::vector<Sentence> val_sentences;
        for (const auto& doc : d.val.documents)
            if (doc.label == label) val_sentences.insert(val_sentences.end(), doc.sentences.begin(), doc.sentences.end());
        const double ppl = perplexity(lm, val_sentences, fc.max_len);
        save_language_model(lm_path(ctx, label), lm, d.vocab, json{{"val_perplexity", ppl}});
        models.push_back(json{{"class", d.task.class_name(label)}, {"checkpoint", lm_path(ctx, label).string()},
                              {"val_perplexity", ppl}, {"trace", fit_json(trace)}});
    }
    finish(ctx, "train-lm", json{{"models", models}});
}

fs::path embedder_path(const Context& ctx) { return ctx.config.path_or("embedder.out", ctx.home, "embedder.ckpt"); }

void cmd_train_embedder(const Context& ctx) {
    const Data d = load_data(ctx);
    const auto& c = ctx.config;
    SemanticEmbedder f = SemanticEmbedder::create(d.vocab.size(), c.get_size("embedder.embed_dim", 32),
                                                  c.get_size("embedder.hidden", 64), c.get_u64("embedder.seed", 5));
    FitConfig fc;
    fc.epochs = 30;
    fc = fit_config(c, "embedder", fc);
    const FitTrace trace = pretrain_embedder(f, d.train, d.val, fc, ctx.log);
    save_embedder(embedder_path(ctx), f, d.vocab);
    finish(ctx, "train-embedder", json{{"checkpoint", embedder_path(ctx).string()}, {"trace", fit_json(trace)}});
}

fs::path ae_path(const Context& ctx) { return ctx.config.path_or("ae.out", ctx.home, "translator_ae.ckpt"); }
fs::path translator_path(const Context& ctx) { return ctx.config.path_or("gan.out", ctx.home, "translator.ckpt"); }

void cmd_pretrain_ae(const Context& ctx) {
    const Data d = load_data(ctx);
    const auto& c = ctx.config;
    TranslatorConfig mc;
    mc.embed_dim = c.get_size("translator.embed_dim", mc.embed_dim);
    mc.hidden = c.get_size("translator.hidden", mc.hidden);
    mc.decoder_hidden = c.get_size("translator.decoder_hidden", mc.decoder_hidden);
    mc.seed = c.get_u64("translator.seed", mc.seed);
    FitConfig fc;
    fc.epochs = 150;
    fc.learning_rate = 3e-3;
    fc.patience = 5;
    fc = fit_config(c, "ae", fc);
    TranslatorModel model = TranslatorModel::create(d.task, d.vocab.size(), mc);
    const FitTrace trace = pretrain_autoencoder(model, d.train, d.val, fc, ctx.log);
    const double train_acc = reconstruction_accuracy(model, d.train, fc.max_len);
    const double val_acc = reconstruction_accuracy(model, d.val, fc.max_len);
    save_translator(ae_path(ctx), model, d.vocab, json{{"stage", "autoencoder"}, {"train_reconstruction", train_acc}});
    finish(ctx, "pretrain-ae",
           json{{"checkpoint", ae_path(ctx).string()},
                {"train_reconstruction", train_acc},
                {"val_reconstruction", val_acc},
                {"trace", fit_json(trace)}});
}

json report_json(const LossReport& r) {
    return json{{"style", r.style}, {"semantic", r.semantic}, {"language", r.language}, {"total", r.total},
                {"semantic_variant", to_string(r.semantic_variant)}};
}

void cmd_train_a4nt(const Context& ctx) {
    const Data d = load_data(ctx);
    const auto& c = ctx.config;
    GanConfig g;
    g.generator_lr = c.get_double("gan.generator_lr", g.generator_lr);
    g.discriminator_lr = c.get_double("gan.discriminator_lr", g.discriminator_lr);
    g.iterations = c.get_size("gan.iterations", g.iterations);
    g.batch_size = c.get_size("gan.batch_size", g.batch_size);
    g.max_len = c.get_size("gan.max_len", c.get_size("corpus.max_len", g.max_len));
    g.tau = Real(c.get_double("gan.tau", g.tau));
    g.weights.style = c.get_double("gan.w_style", g.weights.style);
    g.weights.semantic = c.get_double("gan.w_semantic", g.weights.semantic);
    g.weights.language = c.get_double("gan.w_language", g.weights.language);
    g.calibrate_weights = c.get_bool("gan.calibrate_weights", g.calibrate_weights);
    g.semantic_weight_scale = c.get_double("gan.semantic_weight_scale", g.semantic_weight_scale);
    g.semantic_variant = semantic_variant_from_string(c.get_string("gan.semantic_variant", "cycle"));
    g.raw_sum = c.get_bool("gan.raw_sum", g.raw_sum);
    g.validate_every = c.get_size("gan.validate_every", g.validate_every);
    g.max_rollbacks = c.get_size("gan.max_rollbacks", g.max_rollbacks);
    g.clip_norm = c.get_double("gan.clip_norm", g.clip_norm);
    g.seed = c.get_u64("gan.seed", g.seed);
    g.select_best = c.get_bool("gan.select_best", g.select_best);
    g.select_min_meteor = c.get_double("gan.select_min_meteor", g.select_min_meteor);

    auto init = load_translator(c.path_or("gan.init", ctx.home, "translator_ae.ckpt"));
    check_vocab(init.vocab, d, ae_path(ctx));
    auto disc = load_classifier(classifier_path(ctx, "disc"));
    check_vocab(disc.vocab, d, classifier_path(ctx, "disc"));
    auto evaluator = load_classifier(classifier_path(ctx, "eval"));
    check_vocab(evaluator.vocab, d, classifier_path(ctx, "eval"));
    std::array<LanguageModel, 2> lms{load_language_model(lm_path(ctx, 0)).model,
                                     load_language_model(lm_path(ctx, 1)).model};
    std::optional<SemanticEmbedder> embedder;
    if (g.semantic_variant == SemanticVariant::Embedding) embedder = load_embedder(embedder_path(ctx)).model;

    TranslatorModel translator = std::move(init.model);
    ClassifierModel a0 = disc.model, a1 = disc.model;
    GanModels m;
    m.translator = &translator;
    m.discriminators = {&a0, &a1};
    m.language_models = {&lms[0], &lms[1]};
    m.embedder = embedder ? &*embedder : nullptr;
    m.evaluator = &evaluator.model;

    const TrainingTrace trace = train_gan(m, d.train, d.val, g, GanHooks{ctx.log, {}, {}});
    const fs::path out = translator_path(ctx);
    save_translator(out, translator, d.vocab,
                    json{{"stage", "gan"}, {"selected_iteration", trace.selected_iteration}});
    const fs::path trace_path = c.path_or("gan.trace", ctx.home, "trace.csv");
    write_file(trace_path, [&](std::ostream& o) { trace.write_csv(o); });

    json validations = json::array();
    for (const auto& r : trace.rows)
        if (r.val_f1) validations.push_back(json{{"iteration", r.iteration}, {"val_f1", *r.val_f1},
                                                 {"val_meteor", *r.val_meteor}});
    finish(ctx, "train-a4nt",
           json{{"checkpoint", out.string()},
                {"trace", trace_path.string()},
                {"weights", {{"style", trace.weights.style},
                             {"semantic", trace.weights.semantic},
                             {"language", trace.weights.language}}},
                {"initial", report_json(trace.initial)},
                {"warnings", trace.warnings},
                {"rollbacks", trace.rollbacks},
                {"selected_iteration", trace.selected_iteration},
                {"validations", validations}});
}

Service task_service(const Context& ctx, const fs::path& model, const fs::path& classifier) {
    auto t = load_translator(model);
    auto c = load_classifier(classifier);
    ServiceOptions opts;
    opts.max_len = ctx.config.get_size("service.max_len", opts.max_len);
    Service s(opts);
    const std::string name = t.model.task.task;
    s.add_task(TaskModels{name, std::move(c.model), std::move(c.vocab), std::move(t.model), std::move(t.vocab)});
    return s;
}

struct ObfuscateArgs {
    std::string model, classifier, input, output, target;
    std::size_t k = 1;
    std::uint64_t seed = 0;
};

void cmd_obfuscate(const Context& ctx, const ObfuscateArgs& a) {
    const fs::path model = a.model.empty() ? translator_path(ctx) : fs::path(a.model);
    const fs::path clf = a.classifier.empty() ? classifier_path(ctx, "eval") : fs::path(a.classifier);
    const Service service = task_service(ctx, model, clf);
    const std::string task = service.tasks().front().name;

    std::ifstream in(a.input);
    if (!in) throw std::runtime_error("cannot read input " + a.input);
    std::ofstream file;
    if (!a.output.empty()) {
        file.open(a.output);
        if (!file) throw std::runtime_error("cannot write " + a.output);
    }
    std::ostream& out = a.output.empty() ? std::cout : file;
    std::string line;
    std::size_t index = 0, failed = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            ++index;
            continue;
        }
        json record;
        try {
            record = service.obfuscate(
                json{{"text", line}, {"task", task}, {"target", a.target}, {"k", a.k}, {"seed", a.seed}});
        } catch (const RequestError& e) {
            if (e.field() == "target" || e.field() == "k") throw;
            record = json{{"error", e.what()}, {"field", e.field()}};
            ++failed;
        }
        record["line"] = index++;
        record["input"] = line;
        out << record.dump() << '\n';
    }
    if (!a.output.empty()) say(ctx, "wrote " + a.output + " (" + std::to_string(index) + " lines, " +
                                        std::to_string(failed) + " rejected)");
}

struct EvaluateArgs {
    std::string model, classifier, split, out;
    bool identity = false;
};

void cmd_evaluate(const Context& ctx, const EvaluateArgs& a) {
    const Data d = load_data(ctx);
    const auto& c = ctx.config;
    const std::string split = a.split.empty() ? c.get_string("eval.split", "val") : a.split;
    const Corpus& corpus = split_of(d, split);
    const fs::path clf_path = a.classifier.empty() ? classifier_path(ctx, "eval") : fs::path(a.classifier);
    auto clf = load_classifier(clf_path);
    check_vocab(clf.vocab, d, clf_path);

    std::optional<TranslatorModel> translator;
    TransferFn transfer = identity_transfer();
    std::string name = "identity";
    if (!a.identity) {
        const fs::path model = a.model.empty() ? translator_path(ctx) : fs::path(a.model);
        auto t = load_translator(model);
        check_vocab(t.vocab, d, model);
        translator = std::move(t.model);
        TranslateOptions opts;
        opts.max_len = c.get_size("eval.max_len", c.get_size("corpus.max_len", 20));
        opts.greedy = c.get_bool("eval.greedy", false);
        transfer = translator_transfer(*translator, opts);
        name = "a4nt";
    }
    const std::uint64_t seed = c.get_u64("eval.seed", 0);
    const std::size_t k = c.get_size("eval.k", 5);
    const fs::path out = a.out.empty() ? ctx.home / (a.identity ? "eval_identity" : "eval") : fs::path(a.out);

    const EvalMetrics original = evaluate_transfer(identity_transfer(), clf.model, corpus, seed);
    const Corpus transferred = transfer_corpus(corpus, transfer, seed);
    const EvalMetrics metrics = score_transfer(clf.model, corpus, transferred);
    const std::vector<SelectionPolicy> policies{SelectionPolicy::Min, SelectionPolicy::Random, SelectionPolicy::Max};
    const auto points = operating_points(transfer, clf.model, corpus, k, policies, seed);
    const PrivacyAnalysis privacy = privacy_analysis(clf.model, corpus, transferred, c.get_size("eval.bins", 10),
                                                     c.get_size("eval.histogram_bins", 20));

    std::vector<std::pair<std::string, OperatingPoint>> rows;
    rows.push_back({"original", OperatingPoint{SelectionPolicy::Max, 1, original}});
    rows.push_back({name, OperatingPoint{SelectionPolicy::Max, 1, metrics}});
    for (const auto& p : points) rows.push_back({name + "_k" + std::to_string(k), p});
    write_file(out / "metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, rows); });
    write_file(out / "privacy_records.csv", [&](std::ostream& o) { write_privacy_records_csv(o, privacy.records); });
    write_file(out / "privacy_by_input_score.csv",
               [&](std::ostream& o) { write_binned_curve_csv(o, privacy.by_input_score); });
    write_file(out / "gain_histogram.csv", [&](std::ostream& o) { write_histogram_csv(o, privacy.gain_histogram); });

    bool all_zero = true;
    for (const auto& r : privacy.records) all_zero = all_zero && r.gain == 0.0;
    json ops = json::array();
    for (const auto& p : points) {
        json j = metrics_json(p.metrics);
        j["policy"] = to_string(p.policy);
        j["k"] = p.k;
        ops.push_back(j);
    }
    json summary{{"model", name},
                 {"split", split},
                 {"out", out.string()},
                 {"original", metrics_json(original)},
                 {"transferred", metrics_json(metrics)},
                 {"operating_points", ops},
                 {"privacy", {{"median_gain", privacy.median_gain},
                              {"mean_gain", privacy.mean_gain},
                              {"records", privacy.records.size()},
                              {"all_zero", all_zero}}}};
    write_json(out / "summary.json", summary);
    finish(ctx, a.identity ? "evaluate-identity" : "evaluate", summary);
}

void cmd_holdout_eval(const Context& ctx, const EvaluateArgs& a) {
    const Data d = load_data(ctx);
    const auto& c = ctx.config;
    const std::string split = a.split.empty() ? c.get_string("eval.split", "val") : a.split;
    const Corpus& corpus = split_of(d, split);
    const fs::path dir = c.path_or("holdout.dir", ctx.home, "holdout");

    FitConfig fc;
    fc.epochs = 8;
    fc = fit_config(c, "holdout", fc);
    std::vector<ClassifierModel> ensemble;
    std::vector<std::string> names;
    for (const auto& cfg : holdout_configs(c.get_u64("holdout.seed", 101))) {
        const std::string name = holdout_name(cfg);
        const fs::path path = dir / (name + ".ckpt");
        if (fs::exists(path)) {
            auto loaded = load_classifier(path);
            check_vocab(loaded.vocab, d, path);
            ensemble.push_back(std::move(loaded.model));
        } else {
            say(ctx, "training holdout classifier " + name);
            ClassifierModel m = ClassifierModel::create(d.task, d.vocab.size(), cfg);
            FitConfig own = fc;
            own.seed = cfg.seed + 17;
            pretrain_classifier(m, d.train, d.val, own, ctx.log);
            save_classifier(path, m, d.vocab, json{{"role", "holdout"}});
            ensemble.push_back(std::move(m));
        }
        names.push_back(name);
    }

    const fs::path model = a.model.empty() ? translator_path(ctx) : fs::path(a.model);
    auto t = load_translator(model);
    check_vocab(t.vocab, d, model);
    TranslateOptions opts;
    opts.max_len = c.get_size("eval.max_len", c.get_size("corpus.max_len", 20));
    const Corpus transferred =
        a.identity ? corpus : transfer_corpus(corpus, translator_transfer(t.model, opts), c.get_u64("eval.seed", 0));
    const HoldoutResult result = holdout_evaluation(ensemble, names, corpus, transferred);

    auto seen = load_classifier(classifier_path(ctx, "eval"));
    const double seen_f1 = score_transfer(seen.model, corpus, corpus).document.macro_f1;

    write_file(dir / "holdout.csv", [&](std::ostream& o) { write_holdout_csv(o, result); });
    json rows = json::array();
    for (const auto& r : result.rows)
        rows.push_back(json{{"name", r.name}, {"original_f1", r.original_f1}, {"transferred_f1", r.transferred_f1}});
    finish(ctx, "holdout-eval",
           json{{"split", split},
                {"rows", rows},
                {"mean_original", result.mean_original},
                {"mean_transferred", result.mean_transferred},
                {"max_transferred", result.max_transferred},
                {"drop", result.drop()},
                {"seen_original_f1", seen_f1}});
}

void cmd_serve(const Context& ctx, std::string host, int port) {
    const Service service = Service::from_config(ctx.config, ctx.home);
    httplib::Server server;
    service.mount(server);
    if (host.empty()) host = ctx.config.get_string("service.host", "127.0.0.1");
    if (port < 0) port = int(ctx.config.get_int("service.port", 8080));
    if (!server.bind_to_port(host, port)) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    json tasks = json::array();
    for (const auto& t : service.tasks()) tasks.push_back(t.name);
    std::cout << json{{"listening", host + ":" + std::to_string(port)}, {"tasks", tasks}}.dump() << std::endl;
    server.listen_after_bind();
}

struct PlotArgs {
    std::string input, output, x, title;
    std::vector<std::string> y;
    bool bars = false;
};

void cmd_plot(const PlotArgs& a) {
    const plot::Table table = plot::read_csv(a.input);
    plot::ChartSpec spec;
    spec.title = a.title.empty() ? fs::path(a.input).stem().string() : a.title;
    spec.x = a.x.empty() ? table.header.at(0) : a.x;
    spec.bars = a.bars;
    spec.y = a.y;
    if (spec.y.empty()) {
        const std::size_t xc = table.column(spec.x);
        for (std::size_t i = 0; i < table.header.size(); ++i) {
            if (i == xc) continue;
            const auto v = table.numbers(i);
            if (std::any_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }))
                spec.y.push_back(table.header[i]);
        }
    }
    const std::string svg = plot::render_svg(table, spec);
    const fs::path out = a.output.empty() ? fs::path(a.input).replace_extension(".svg") : fs::path(a.output);
    write_file(out, [&](std::ostream& o) { o << svg; });
    std::cout << json{{"svg", out.string()}, {"series", spec.y}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"a4nt: adversarial author-attribute obfuscation"};
    app.require_subcommand(1);
    app.fallthrough(false);

    Common common;
    auto sub = [&](const char* name, const char* help) {
        CLI::App* s = app.add_subcommand(name, help);
        common.attach(s);
        return s;
    };

    auto* gen = sub("gen-corpus", "generate and split the synthetic two-style corpus");
    std::string role = "eval";
    auto* clf = sub("train-classifier", "train the evaluation classifier or the discriminator initialisation");
    clf->add_option("--role", role, "eval or disc")->check(CLI::IsMember({"eval", "disc"}));
    auto* lm = sub("train-lm", "train one language model per class");
    auto* emb = sub("train-embedder", "train the semantic sentence embedder");
    auto* ae = sub("pretrain-ae", "pretrain the translator decoders as autoencoders");
    auto* gan = sub("train-a4nt", "adversarial training of the translator");

    ObfuscateArgs oa;
    auto* obf = sub("obfuscate", "rewrite each input line toward a target class (JSONL out)");
    obf->add_option("--model,-m", oa.model, "translator checkpoint");
    obf->add_option("--classifier", oa.classifier, "classifier checkpoint for scores");
    obf->add_option("--in,-i", oa.input, "text file, one sentence per line")->required();
    obf->add_option("--out,-o", oa.output, "output JSONL (default stdout)");
    obf->add_option("--target,-t", oa.target, "target class")->required();
    obf->add_option("--k,-k", oa.k, "samples per line")->check(CLI::Range(1, 32));
    obf->add_option("--seed", oa.seed, "sampling seed");

    EvaluateArgs ea;
    auto* ev = sub("evaluate", "metrics, operating points and privacy analysis");
    ev->add_option("--model,-m", ea.model, "translator checkpoint");
    ev->add_option("--classifier", ea.classifier, "evaluation classifier checkpoint");
    ev->add_option("--split", ea.split, "train, val or test");
    ev->add_option("--out,-o", ea.out, "output directory");
    ev->add_flag("--identity", ea.identity, "evaluate the identity rewrite instead of a translator");

    EvaluateArgs ha;
    auto* ho = sub("holdout-eval", "document F1 of unseen classifiers on original and transferred text");
    ho->add_option("--model,-m", ha.model, "translator checkpoint");
    ho->add_option("--split", ha.split, "train, val or test");
    ho->add_flag("--identity", ha.identity, "use the identity rewrite");

    std::string host;
    int port = -1;
    auto* serve = sub("serve", "HTTP service for classification and obfuscation");
    serve->add_option("--host", host, "bind address");
    serve->add_option("--port,-p", port, "port");

    PlotArgs pa;
    auto* plot_cmd = sub("plot", "render a CSV to an SVG chart");
    plot_cmd->add_option("--in,-i", pa.input, "CSV file")->required();
    plot_cmd->add_option("--out,-o", pa.output, "SVG file");
    plot_cmd->add_option("--x", pa.x, "x column (default first)");
    plot_cmd->add_option("--y", pa.y, "y columns (default all numeric)")->delimiter(',');
    plot_cmd->add_option("--title", pa.title, "chart title");
    plot_cmd->add_flag("--bars", pa.bars, "bar chart");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (*plot_cmd) {
            cmd_plot(pa);
            return 0;
        }
        const Context ctx = make_context(common);
        if (*gen) cmd_gen_corpus(ctx);
        else if (*clf) cmd_train_classifier(ctx, role);
        else if (*lm) cmd_train_lm(ctx);
        else if (*emb) cmd_train_embedder(ctx);
        else if (*ae) cmd_pretrain_ae(ctx);
        else if (*gan) cmd_train_a4nt(ctx);
        else if (*obf) cmd_obfuscate(ctx, oa);
        else if (*ev) cmd_evaluate(ctx, ea);
        else if (*ho) cmd_holdout_eval(ctx, ha);
        else if (*serve) cmd_serve(ctx, host, port);
        return 0;
    } catch (const CheckpointError& e) {
        std::cerr << json{{"error", e.what()}, {"kind", "checkpoint"}}.dump() << std::endl;
    } catch (const ConfigError& e) {
        std::cerr << json{{"error", e.what()}, {"kind", "config"}}.dump() << std::endl;
    } catch (const TrainingDiverged& e) {
        std::cerr << json{{"error", e.what()}, {"kind", "diverged"}}.dump() << std::endl;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", e.what()}, {"kind", "runtime"}}.dump() << std::endl;
    }
    return 1;
}
