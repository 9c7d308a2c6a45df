#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "a4nt/evaluation.hpp"
#include "a4nt/losses.hpp"
#include "a4nt/optim.hpp"

namespace a4nt {

using LogFn = std::function<void(const std::string&)>;

/// Raised when a loss or gradient stops being finite and recovery is not
/// possible. Parameters have already been restored to the last good state.
class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FitConfig {
    double learning_rate = 2e-3;
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    std::size_t max_len = 20;
    std::uint64_t seed = 11;
    double clip_norm = 5.0;
    /// Stop when the validation metric has not improved by more than
    /// min_improvement (relative) for `patience` epochs.
    std::size_t patience = 3;
    double min_improvement = 1e-3;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0;
    /// Higher is better: document F1, token accuracy or negative NLL.
    double val_metric = 0;
};

struct FitTrace {
    std::vector<EpochRecord> epochs;
    bool plateaued = false;
    std::size_t best_epoch = 0;
    double best_metric = 0;
};

/// Cross-entropy training; keeps the parameters of the epoch with the best
/// validation document F1.
FitTrace pretrain_classifier(ClassifierModel& model, const Corpus& train, const Corpus& val, const FitConfig& config,
                             const LogFn& log = {});

/// Each decoder learns to reconstruct sentences of its own source class
/// (teacher forced, END included). Validation metric is greedy token
/// reconstruction accuracy.
FitTrace pretrain_autoencoder(TranslatorModel& model, const Corpus& train, const Corpus& val, const FitConfig& config,
                              const LogFn& log = {});

/// Fraction of reference positions reproduced by greedy decoding with
/// decoders[label] over max(len(reference), len(output)) per sentence.
double reconstruction_accuracy(const TranslatorModel& model, const Corpus& corpus, std::size_t max_len);

/// Trains on sentences of lm.label only. Validation metric is -NLL per token.
FitTrace pretrain_language_model(LanguageModel& lm, const Corpus& train, const Corpus& val, const FitConfig& config,
                                 const LogFn& log = {});

/// Autoencoder over the pooled corpus. Validation metric is -NLL per token.
FitTrace pretrain_embedder(SemanticEmbedder& embedder, const Corpus& train, const Corpus& val,
                           const FitConfig& config, const LogFn& log = {});

struct HoldoutMember {
    std::string name;
    ClassifierModel model;
};

/// hidden {32, 64, 128} x {final_only, final_and_mean}, each trained like the
/// evaluation classifier with its own seed.
std::vector<ClassifierConfig> holdout_configs(std::uint64_t seed);
std::string holdout_name(const ClassifierConfig& config);

struct WeightCalibration {
    LossWeights weights;
    std::vector<std::string> warnings;
};

/// w_i = max_component / component_i, rescaled so w_sty = 1. A zero
/// component keeps weight 1 and produces a warning.
WeightCalibration calibrate_loss_weights(const LossReport& initial);

struct GanConfig {
    double generator_lr = 5e-4;
    double discriminator_lr = 5e-4;
    std::size_t iterations = 2000;
    std::size_t batch_size = 32;
    std::size_t max_len = 20;
    Real tau = Real(0.5);
    LossWeights weights;
    bool calibrate_weights = true;
    /// Multiplies w_sem after calibration.
    double semantic_weight_scale = 1.0;
    SemanticVariant semantic_variant = SemanticVariant::Cycle;
    bool raw_sum = false;
    std::size_t validate_every = 200;
    std::size_t max_rollbacks = 3;
    double clip_norm = 5.0;
    std::uint64_t seed = 13;
    /// Keep the validated checkpoint with the lowest F1 among those with
    /// meteor >= select_min_meteor instead of the last iterate.
    bool select_best = true;
    double select_min_meteor = 0.5;
};

/// Models taking part in GAN training. discriminators[y] is A_y and
/// language_models[y] is M_y. The evaluator only scores validation output.
struct GanModels {
    TranslatorModel* translator = nullptr;
    std::array<ClassifierModel*, 2> discriminators{};
    std::array<LanguageModel*, 2> language_models{};
    SemanticEmbedder* embedder = nullptr;
    const ClassifierModel* evaluator = nullptr;
};

struct TraceRow {
    std::size_t iteration = 0;
    LossReport report;
    double disc_loss_xy = 0;
    double disc_loss_yx = 0;
    std::optional<double> val_f1;
    std::optional<double> val_meteor;
};

struct TrainingTrace {
    std::vector<TraceRow> rows;
    LossWeights weights;
    LossReport initial;
    std::vector<std::string> warnings;
    std::size_t rollbacks = 0;
    std::size_t selected_iteration = 0;

    void append(TraceRow row);
    void write_csv(std::ostream& out) const;
};

struct GanHooks {
    LogFn log;
    /// Called after each validation with the checkpoint iteration.
    std::function<void(std::size_t iteration, const EvalMetrics& metrics)> on_checkpoint;
    /// Test hook: may poison a loss to exercise the roll-back path.
    std::function<bool(std::size_t iteration)> inject_nonfinite;
    /// Test hook: runs after each successful update; generator is false for
    /// the discriminator minibatch.
    std::function<void(std::size_t iteration, bool generator)> after_update;
};

/// One LossReport on a fixed batch per direction (averaged), without any
/// parameter update; used for weight calibration.
LossReport initial_losses(GanModels& models, const Corpus& train, const GanConfig& config,
                          const LossWeights& weights);

TrainingTrace train_gan(GanModels& models, const Corpus& train, const Corpus& val, const GanConfig& config,
                        const GanHooks& hooks = {});

}  // namespace a4nt
