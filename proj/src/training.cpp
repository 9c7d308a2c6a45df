#include "a4nt/training.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace a4nt {

namespace {

void say(const LogFn& log, const std::string& line) {
    if (log) log(line);
}

std::string fixed(double v, int digits = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

// Sum of -log-likelihood over rows divided by the total token count.
Var token_mean_nll(Tape& tape, Var row_ll, const std::vector<int>& counts) {
    double total = 0;
    for (int c : counts) total += c;
    return tape.scale(tape.sum(row_ll), Real(-1.0 / std::max(total, 1.0)));
}

// One optimisation step; false when the loss or gradient is not finite.
bool descend(Tape& tape, Var loss, Rmsprop& opt) {
    if (!std::isfinite(double(tape.value(loss)[0]))) return false;
    opt.zero_grad();
    tape.backward(loss);
    return opt.step();
}

template <class EpochFn, class ValFn>
FitTrace run_fit(const std::string& name, const std::vector<Parameter*>& params, const FitConfig& cfg,
                 const LogFn& log, EpochFn&& run_epoch, ValFn&& validate, bool keep_best) {
    FitTrace trace;
    if (cfg.epochs == 0) return trace;
    if (!(cfg.learning_rate > 0)) throw std::invalid_argument(name + ": learning rate must be positive");
    if (cfg.batch_size == 0) throw std::invalid_argument(name + ": batch size must be >= 1");
    Rmsprop opt(params, Real(cfg.learning_rate), Real(cfg.clip_norm));
    auto best = snapshot(params);
    double best_metric = -std::numeric_limits<double>::infinity();
    double reference = best_metric;
    std::size_t stale = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto start = snapshot(params);
        const double loss = run_epoch(epoch, opt);
        if (!std::isfinite(loss)) {
            restore(params, start);
            throw TrainingDiverged(name + ": non-finite loss in epoch " + std::to_string(epoch) +
                                   "; parameters restored to the end of epoch " + std::to_string(epoch - 1));
        }
        const double metric = validate();
        trace.epochs.push_back(EpochRecord{epoch, loss, metric});
        say(log, name + " epoch " + std::to_string(epoch) + " loss " + fixed(loss) + " val " + fixed(metric));
        if (metric > best_metric) {
            best_metric = metric;
            best = snapshot(params);
            trace.best_epoch = epoch;
        }
        if (metric > reference + cfg.min_improvement * std::max(std::abs(reference), 1e-12) ||
            !std::isfinite(reference)) {
            reference = metric;
            stale = 0;
        } else if (++stale >= cfg.patience) {
            trace.plateaued = true;
            say(log, name + " plateaued after epoch " + std::to_string(epoch));
            break;
        }
    }
    trace.best_metric = best_metric;
    if (keep_best) restore(params, best);
    return trace;
}

// Endless stream of batches over one item list, reshuffled every pass.
class BatchStream {
public:
    BatchStream(std::vector<LabeledSentence> items, std::size_t batch_size, std::size_t max_len, std::uint64_t seed)
        : items_(std::move(items)), batch_size_(batch_size), max_len_(max_len), seed_(seed) {
        if (items_.empty()) throw std::invalid_argument("training: no sentences for one of the classes");
    }

    Batch next() {
        for (;;) {
            if (!it_) it_.emplace(items_, batch_size_, max_len_, seed_ + pass_++);
            if (auto b = it_->next()) return std::move(*b);
            it_.reset();
        }
    }

private:
    std::vector<LabeledSentence> items_;
    std::size_t batch_size_, max_len_;
    std::uint64_t seed_;
    std::uint64_t pass_ = 0;
    std::optional<BatchIterator> it_;
};

double mean_nll(const std::vector<LabeledSentence>& items, std::size_t max_len,
                const std::function<Var(Tape&, const Batch&, std::vector<int>&)>& row_ll) {
    double nll = 0, tokens = 0;
    for (std::size_t begin = 0; begin < items.size(); begin += 64) {
        const std::size_t end = std::min(items.size(), begin + 64);
        const Batch batch = make_batch(std::span<const LabeledSentence>(items).subspan(begin, end - begin), max_len);
        Tape tape;
        std::vector<int> counts;
        const Tensor& v = tape.value(row_ll(tape, batch, counts));
        for (std::size_t b = 0; b < batch.size; ++b) {
            nll -= v[b];
            tokens += counts[b];
        }
    }
    return nll / std::max(tokens, 1.0);
}

}  // namespace

// ---------------------------------------------------------------------------
// Pretraining

FitTrace pretrain_classifier(ClassifierModel& model, const Corpus& train, const Corpus& val, const FitConfig& cfg,
                             const LogFn& log) {
    const auto items = flatten(train);
    auto epoch_fn = [&](std::size_t epoch, Rmsprop& opt) {
        BatchIterator it(items, cfg.batch_size, cfg.max_len, cfg.seed + epoch);
        double total = 0;
        std::size_t n = 0;
        while (auto batch = it.next()) {
            Tape tape;
            Var loss = classifier_cross_entropy(tape, model, *batch);
            if (!descend(tape, loss, opt)) return std::numeric_limits<double>::quiet_NaN();
            total += tape.value(loss)[0] * double(batch->size);
            n += batch->size;
        }
        return total / double(std::max<std::size_t>(n, 1));
    };
    auto val_fn = [&] { return score_transfer(model, val, val).document.macro_f1; };
    return run_fit("classifier", model.parameters(), cfg, log, epoch_fn, val_fn, true);
}

double reconstruction_accuracy(const TranslatorModel& model, const Corpus& corpus, std::size_t max_len) {
    TranslateOptions greedy;
    greedy.greedy = true;
    greedy.max_len = max_len;
    double matched = 0, positions = 0;
    for (int c = 0; c < 2; ++c) {
        std::vector<Sentence> inputs;
        for (const auto& d : corpus.documents)
            if (d.label == c) inputs.insert(inputs.end(), d.sentences.begin(), d.sentences.end());
        if (inputs.empty()) continue;
        const auto outputs = translate_sentences(model, inputs, c, greedy);
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            const auto ref = inputs[i].words().first(std::min(inputs[i].length(), max_len));
            const auto out = outputs[i].words();
            const std::size_t common = std::min(ref.size(), out.size());
            for (std::size_t t = 0; t < common; ++t) matched += ref[t] == out[t];
            positions += double(std::max(ref.size(), out.size()));
        }
    }
    if (positions == 0) throw std::invalid_argument("reconstruction_accuracy: empty corpus");
    return matched / positions;
}

FitTrace pretrain_autoencoder(TranslatorModel& model, const Corpus& train, const Corpus& val, const FitConfig& cfg,
                              const LogFn& log) {
    const std::array<std::vector<LabeledSentence>, 2> items{flatten_class(train, 0), flatten_class(train, 1)};
    auto epoch_fn = [&](std::size_t epoch, Rmsprop& opt) {
        BatchIterator it0(items[0], cfg.batch_size, cfg.max_len, cfg.seed + 2 * epoch);
        BatchIterator it1(items[1], cfg.batch_size, cfg.max_len, cfg.seed + 2 * epoch + 1);
        double total = 0;
        std::size_t steps = 0;
        for (;;) {
            std::array<std::optional<Batch>, 2> batches{it0.next(), it1.next()};
            if (!batches[0] && !batches[1]) break;
            Tape tape;
            const BoundTranslator bound = bind(tape, model, true);
            Var loss;
            for (int c = 0; c < 2; ++c) {
                const auto& batch = batches[std::size_t(c)];
                if (!batch) continue;
                std::vector<int> counts;
                Var cond = encode_hard(tape, bound.encoder, *batch);
                Var ll = teacher_forced_log_likelihood(tape, bound.decoders[std::size_t(c)], bound.encoder.embedding,
                                                       cond, *batch, true, &counts);
                Var term = token_mean_nll(tape, ll, counts);
                loss = loss.valid() ? tape.add(loss, term) : term;
            }
            if (!descend(tape, loss, opt)) return std::numeric_limits<double>::quiet_NaN();
            total += tape.value(loss)[0];
            ++steps;
        }
        return total / double(std::max<std::size_t>(steps, 1));
    };
    auto val_fn = [&] { return reconstruction_accuracy(model, val, cfg.max_len); };
    return run_fit("autoencoder", model.parameters(), cfg, log, epoch_fn, val_fn, false);
}

FitTrace pretrain_language_model(LanguageModel& lm, const Corpus& train, const Corpus& val, const FitConfig& cfg,
                                 const LogFn& log) {
    const auto items = flatten_class(train, lm.label);
    const auto val_items = flatten_class(val, lm.label);
    if (items.empty()) throw std::invalid_argument("language model: no training sentences for its class");
    auto epoch_fn = [&](std::size_t epoch, Rmsprop& opt) {
        BatchIterator it(items, cfg.batch_size, cfg.max_len, cfg.seed + epoch);
        double total = 0;
        std::size_t steps = 0;
        while (auto batch = it.next()) {
            Tape tape;
            std::vector<int> counts;
            Var ll = lm_log_likelihood(tape, bind(tape, lm, true), *batch, &counts);
            Var loss = token_mean_nll(tape, ll, counts);
            if (!descend(tape, loss, opt)) return std::numeric_limits<double>::quiet_NaN();
            total += tape.value(loss)[0];
            ++steps;
        }
        return total / double(std::max<std::size_t>(steps, 1));
    };
    auto val_fn = [&] {
        const auto& probe = val_items.empty() ? items : val_items;
        return -mean_nll(probe, cfg.max_len, [&](Tape& tape, const Batch& b, std::vector<int>& counts) {
            return lm_log_likelihood(tape, bind(tape, lm, false), b, &counts);
        });
    };
    return run_fit("lm." + lm.task.class_name(lm.label), lm.parameters(), cfg, log, epoch_fn, val_fn, true);
}

FitTrace pretrain_embedder(SemanticEmbedder& f, const Corpus& train, const Corpus& val, const FitConfig& cfg,
                           const LogFn& log) {
    const auto items = flatten(train);
    const auto val_items = flatten(val);
    auto row_ll = [&](Tape& tape, const Batch& batch, std::vector<int>& counts, bool trainable) {
        const BoundEncoder enc = bind(tape, f.encoder, trainable);
        const BoundDecoder dec = bind(tape, f.decoder, trainable);
        return teacher_forced_log_likelihood(tape, dec, enc.embedding, encode_hard(tape, enc, batch), batch, true,
                                             &counts);
    };
    auto epoch_fn = [&](std::size_t epoch, Rmsprop& opt) {
        BatchIterator it(items, cfg.batch_size, cfg.max_len, cfg.seed + epoch);
        double total = 0;
        std::size_t steps = 0;
        while (auto batch = it.next()) {
            Tape tape;
            std::vector<int> counts;
            Var loss = token_mean_nll(tape, row_ll(tape, *batch, counts, true), counts);
            if (!descend(tape, loss, opt)) return std::numeric_limits<double>::quiet_NaN();
            total += tape.value(loss)[0];
            ++steps;
        }
        return total / double(std::max<std::size_t>(steps, 1));
    };
    auto val_fn = [&] {
        const auto& probe = val_items.empty() ? items : val_items;
        return -mean_nll(probe, cfg.max_len, [&](Tape& tape, const Batch& b, std::vector<int>& counts) {
            return row_ll(tape, b, counts, false);
        });
    };
    return run_fit("embedder", f.parameters(), cfg, log, epoch_fn, val_fn, true);
}

std::vector<ClassifierConfig> holdout_configs(std::uint64_t seed) {
    std::vector<ClassifierConfig> out;
    for (std::size_t hidden : {32, 64, 128})
        for (EncodingKind kind : {EncodingKind::FinalOnly, EncodingKind::FinalAndMean}) {
            ClassifierConfig c;
            c.hidden = hidden;
            c.kind = kind;
            c.seed = seed + out.size() * 7919;
            out.push_back(c);
        }
    return out;
}

std::string holdout_name(const ClassifierConfig& c) {
    return std::string("lstm") + std::to_string(c.hidden) + "_" + to_string(c.kind);
}

// ---------------------------------------------------------------------------
// Loss weights

WeightCalibration calibrate_loss_weights(const LossReport& initial) {
    const double parts[] = {initial.style, initial.semantic, initial.language};
    const char* names[] = {"style", "semantic", "language"};
    double largest = 0;
    for (double p : parts) {
        if (!std::isfinite(p) || p < 0) throw std::invalid_argument("calibrate_loss_weights: invalid component");
        largest = std::max(largest, p);
    }
    WeightCalibration out;
    double w[3];
    for (int i = 0; i < 3; ++i) {
        if (parts[i] == 0) {
            w[i] = 1;
            out.warnings.push_back(std::string("initial ") + names[i] + " loss is zero; its weight is left at 1");
        } else {
            w[i] = largest / parts[i];
        }
    }
    out.weights = LossWeights{1.0, w[1] / w[0], w[2] / w[0]};
    return out;
}

// ---------------------------------------------------------------------------
// GAN

void TrainingTrace::append(TraceRow row) {
    if (!rows.empty() && row.iteration <= rows.back().iteration)
        throw std::logic_error("training trace iterations must increase");
    rows.push_back(std::move(row));
}

void TrainingTrace::write_csv(std::ostream& out) const {
    out << "iteration,style,semantic,language,total,disc_loss_xy,disc_loss_yx,val_f1,val_meteor\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : rows) {
        out << r.iteration << ',' << r.report.style << ',' << r.report.semantic << ',' << r.report.language << ','
            << r.report.total << ',' << r.disc_loss_xy << ',' << r.disc_loss_yx << ',';
        if (r.val_f1) out << *r.val_f1;
        out << ',';
        if (r.val_meteor) out << *r.val_meteor;
        out << '\n';
    }
}

namespace {

void check_models(const GanModels& m, const GanConfig& cfg) {
    if (!m.translator) throw std::invalid_argument("train_gan: translator missing");
    for (int y = 0; y < 2; ++y) {
        if (!m.discriminators[std::size_t(y)]) throw std::invalid_argument("train_gan: discriminator missing");
        if (!m.language_models[std::size_t(y)]) throw std::invalid_argument("train_gan: language model missing");
    }
    if (cfg.semantic_variant == SemanticVariant::Embedding && !m.embedder)
        throw std::invalid_argument("train_gan: embedding variant needs a semantic embedder");
    if (cfg.batch_size == 0) throw std::invalid_argument("train_gan: batch size must be >= 1");
    if (!(cfg.generator_lr > 0) || !(cfg.discriminator_lr > 0))
        throw std::invalid_argument("train_gan: learning rates must be positive");
    if (!(cfg.tau > 0)) throw std::invalid_argument("train_gan: temperature must be positive");
}

TranslateOptions soft_options(const GanConfig& cfg) {
    TranslateOptions o;
    o.mode = DecodeMode::Soft;
    o.max_len = cfg.max_len;
    o.tau = cfg.tau;
    return o;
}

struct GeneratorForward {
    Var total;
    LossReport report;
};

// Both directions: source c is rewritten by decoders[c] towards t = 1 - c,
// judged by A_t and M_t, and reconstructed by decoders[t].
GeneratorForward generator_forward(Tape& tape, GanModels& m, const std::array<Batch, 2>& batches,
                                   const GanConfig& cfg, const LossWeights& w, Rng& rng, bool trainable) {
    const BoundTranslator bt = bind(tape, *m.translator, trainable);
    std::optional<BoundEncoder> f;
    if (cfg.semantic_variant == SemanticVariant::Embedding) f = bind(tape, m.embedder->encoder, false);
    Var style, semantic, language;
    auto acc = [&](Var& into, Var v) { into = into.valid() ? tape.add(into, v) : v; };
    for (int c = 0; c < 2; ++c) {
        const int t = 1 - c;
        const Batch& batch = batches[std::size_t(c)];
        const SoftSequence fake = translate_batch(tape, bt, c, batch, soft_options(cfg), rng);
        acc(style, style_loss(tape, *m.discriminators[std::size_t(t)], t, fake));
        if (cfg.semantic_variant == SemanticVariant::Cycle)
            acc(semantic, cycle_ml_loss(tape, bt, t, fake, batch, cfg.raw_sum));
        else
            acc(semantic, semantic_embedding_loss(tape, *f, fake, batch));
        acc(language, language_loss(tape, bind(tape, *m.language_models[std::size_t(t)], false), fake, cfg.raw_sum));
    }
    style = tape.scale(style, Real(0.5));
    semantic = tape.scale(semantic, Real(0.5));
    language = tape.scale(language, Real(0.5));
    GeneratorForward out;
    out.report = total_loss(w, tape.value(style)[0], tape.value(semantic)[0], tape.value(language)[0],
                            cfg.semantic_variant);
    out.total = tape.add(tape.add(tape.scale(style, Real(w.style)), tape.scale(semantic, Real(w.semantic))),
                         tape.scale(language, Real(w.language)));
    return out;
}

struct Checkpoint {
    std::size_t iteration = 0;
    std::vector<Tensor> translator, disc0, disc1;
    RmspropState gen_state, disc0_state, disc1_state;
    std::optional<EvalMetrics> metrics;
};

}  // namespace

LossReport initial_losses(GanModels& models, const Corpus& train, const GanConfig& cfg, const LossWeights& weights) {
    check_models(models, cfg);
    BatchStream s0(flatten_class(train, 0), cfg.batch_size, cfg.max_len, cfg.seed);
    BatchStream s1(flatten_class(train, 1), cfg.batch_size, cfg.max_len, cfg.seed + 1);
    const std::array<Batch, 2> batches{s0.next(), s1.next()};
    Rng rng(cfg.seed + 7);
    Tape tape;
    return generator_forward(tape, models, batches, cfg, weights, rng, false).report;
}

TrainingTrace train_gan(GanModels& m, const Corpus& train, const Corpus& val, const GanConfig& cfg,
                        const GanHooks& hooks) {
    check_models(m, cfg);
    if (!m.evaluator) throw std::invalid_argument("train_gan: evaluation classifier missing");
    TrainingTrace trace;

    LossWeights weights = cfg.weights;
    trace.initial = initial_losses(m, train, cfg, weights);
    if (cfg.calibrate_weights) {
        auto cal = calibrate_loss_weights(trace.initial);
        weights = cal.weights;
        for (auto& w : cal.warnings) {
            say(hooks.log, "warning: " + w);
            trace.warnings.push_back(std::move(w));
        }
    }
    weights.semantic *= cfg.semantic_weight_scale;
    weights.validate();
    trace.weights = weights;
    say(hooks.log, "loss weights style " + fixed(weights.style) + " semantic " + fixed(weights.semantic) +
                       " language " + fixed(weights.language));

    const auto gen_params = m.translator->parameters();
    const auto d0_params = m.discriminators[0]->parameters();
    const auto d1_params = m.discriminators[1]->parameters();
    Rmsprop gen_opt(gen_params, Real(cfg.generator_lr), Real(cfg.clip_norm));
    Rmsprop d0_opt(d0_params, Real(cfg.discriminator_lr), Real(cfg.clip_norm));
    Rmsprop d1_opt(d1_params, Real(cfg.discriminator_lr), Real(cfg.clip_norm));

    std::array<BatchStream, 2> streams{
        BatchStream(flatten_class(train, 0), cfg.batch_size, cfg.max_len, cfg.seed + 101),
        BatchStream(flatten_class(train, 1), cfg.batch_size, cfg.max_len, cfg.seed + 202)};
    Rng rng(cfg.seed);

    auto take_checkpoint = [&](std::size_t iteration) {
        return Checkpoint{iteration,          snapshot(gen_params), snapshot(d0_params), snapshot(d1_params),
                          gen_opt.state(),    d0_opt.state(),       d1_opt.state(),      std::nullopt};
    };
    auto restore_checkpoint = [&](const Checkpoint& c) {
        restore(gen_params, c.translator);
        restore(d0_params, c.disc0);
        restore(d1_params, c.disc1);
        const Real lr = gen_opt.learning_rate();
        gen_opt.state() = c.gen_state;
        gen_opt.set_learning_rate(lr);
        d0_opt.state() = c.disc0_state;
        d1_opt.state() = c.disc1_state;
    };

    Checkpoint last = take_checkpoint(0);
    std::optional<Checkpoint> selected;
    auto better = [&](const EvalMetrics& a, const EvalMetrics& b) {
        const bool a_ok = a.meteor >= cfg.select_min_meteor, b_ok = b.meteor >= cfg.select_min_meteor;
        if (a_ok != b_ok) return a_ok;
        if (!a_ok) return a.meteor > b.meteor;
        if (a.document.macro_f1 != b.document.macro_f1) return a.document.macro_f1 < b.document.macro_f1;
        return a.meteor > b.meteor;
    };

    TranslateOptions val_opts;
    val_opts.max_len = cfg.max_len;
    const TransferFn val_transfer = translator_transfer(*m.translator, val_opts);

    for (std::size_t it = 1; it <= cfg.iterations; ++it) {
        bool finite = true;
        TraceRow row;
        row.iteration = it;

        // Discriminator minibatch, generator frozen.
        {
            Tape tape;
            const BoundTranslator frozen_gen = bind(tape, *m.translator, false);
            Var losses[2];
            for (int y = 0; y < 2; ++y) {
                const Batch real = streams[std::size_t(y)].next();
                const Batch source = streams[std::size_t(1 - y)].next();
                const SoftSequence fake = translate_batch(tape, frozen_gen, 1 - y, source, soft_options(cfg), rng);
                losses[y] = discriminator_loss(tape, *m.discriminators[std::size_t(y)], y, real, fake);
            }
            row.disc_loss_xy = tape.value(losses[1])[0];
            row.disc_loss_yx = tape.value(losses[0])[0];
            Var total = tape.add(losses[0], losses[1]);
            if (std::isfinite(double(tape.value(total)[0]))) {
                d0_opt.zero_grad();
                d1_opt.zero_grad();
                tape.backward(total);
                finite = d0_opt.step() && d1_opt.step();
                if (finite && hooks.after_update) hooks.after_update(it, false);
            } else {
                finite = false;
            }
        }

        // Generator minibatch, discriminators frozen.
        if (finite) {
            Tape tape;
            const std::array<Batch, 2> batches{streams[0].next(), streams[1].next()};
            try {
                GeneratorForward g = generator_forward(tape, m, batches, cfg, weights, rng, true);
                if (hooks.inject_nonfinite && hooks.inject_nonfinite(it))
                    throw std::domain_error("non-finite style loss (injected)");
                row.report = g.report;
                finite = descend(tape, g.total, gen_opt);
                if (finite && hooks.after_update) hooks.after_update(it, true);
            } catch (const std::domain_error& e) {
                say(hooks.log, std::string("iteration ") + std::to_string(it) + ": " + e.what());
                finite = false;
            }
        }

        if (!finite) {
            if (++trace.rollbacks > cfg.max_rollbacks) {
                restore_checkpoint(last);
                throw TrainingDiverged("train_gan: loss diverged " + std::to_string(trace.rollbacks) +
                                       " times; parameters restored to iteration " + std::to_string(last.iteration));
            }
            restore_checkpoint(last);
            gen_opt.set_learning_rate(gen_opt.learning_rate() / 2);
            say(hooks.log, "rolled back to iteration " + std::to_string(last.iteration) +
                               ", generator learning rate " + std::to_string(gen_opt.learning_rate()));
            continue;
        }

        const bool validate = (cfg.validate_every > 0 && it % cfg.validate_every == 0) || it == cfg.iterations;
        if (validate) {
            const EvalMetrics metrics = evaluate_transfer(val_transfer, *m.evaluator, val, cfg.seed + 5);
            row.val_f1 = metrics.document.macro_f1;
            row.val_meteor = metrics.meteor;
            last = take_checkpoint(it);
            last.metrics = metrics;
            if (!selected || better(metrics, *selected->metrics)) selected = last;
            say(hooks.log, "iteration " + std::to_string(it) + " style " + fixed(row.report.style) + " semantic " +
                               fixed(row.report.semantic) + " language " + fixed(row.report.language) +
                               " disc " + fixed(row.disc_loss_xy) + "/" + fixed(row.disc_loss_yx) + " val_f1 " +
                               fixed(metrics.document.macro_f1) + " val_meteor " + fixed(metrics.meteor));
            if (hooks.on_checkpoint) hooks.on_checkpoint(it, metrics);
        }
        trace.append(std::move(row));
    }

    trace.selected_iteration = last.iteration;
    if (cfg.select_best && selected) {
        restore_checkpoint(*selected);
        trace.selected_iteration = selected->iteration;
        say(hooks.log, "selected checkpoint from iteration " + std::to_string(selected->iteration));
    }
    return trace;
}

}  // namespace a4nt
