#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "a4nt/classifier.hpp"
#include "a4nt/losses.hpp"
#include "a4nt/translator.hpp"

namespace a4nt {

inline constexpr char kCheckpointMagic[] = "A4NTCKPT1";
inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
public:
    enum class Kind { Io, Format, Version, Truncated, Shape, ModelKind };
    CheckpointError(Kind kind, const std::string& message);
    Kind kind() const { return kind_; }
    static const char* kind_name(Kind kind);

private:
    Kind kind_;
};

struct ArrayEntry {
    std::string name;
    Shape shape;
    std::uint64_t offset = 0;  // bytes from the start of the blob
};

/// Layout: magic "A4NTCKPT1", uint64 little-endian header length, JSON
/// header, then the blob of float32 little-endian arrays.
struct CheckpointFile {
    int format_version = kCheckpointVersion;
    std::string model_kind;
    std::vector<std::string> vocabulary;
    nlohmann::json config = nlohmann::json::object();
    nlohmann::json metadata = nlohmann::json::object();
    std::vector<ArrayEntry> arrays;
    std::vector<unsigned char> blob;

    /// Copy of the named array as a Tensor.
    Tensor array(const std::string& name) const;
};

CheckpointFile make_checkpoint(const std::string& model_kind, const Vocabulary& vocab, nlohmann::json config,
                               nlohmann::json metadata, const std::vector<const Parameter*>& params);
void write_checkpoint(const std::filesystem::path& path, const CheckpointFile& file);
CheckpointFile read_checkpoint(const std::filesystem::path& path);
/// Throws ModelKind naming both kinds when they differ.
void expect_kind(const CheckpointFile& file, const std::string& expected);

/// Copies arrays into params by name; throws Shape on any mismatch or
/// missing array.
void load_parameters(const CheckpointFile& file, const std::vector<Parameter*>& params);

template <class Model>
struct Loaded {
    Model model;
    Vocabulary vocab;
    nlohmann::json metadata;
};

nlohmann::json classifier_config_json(const ClassifierModel& m);
void save_classifier(const std::filesystem::path& path, const ClassifierModel& m, const Vocabulary& vocab,
                     nlohmann::json metadata = nlohmann::json::object());
Loaded<ClassifierModel> load_classifier(const std::filesystem::path& path);

void save_translator(const std::filesystem::path& path, const TranslatorModel& m, const Vocabulary& vocab,
                     nlohmann::json metadata = nlohmann::json::object());
Loaded<TranslatorModel> load_translator(const std::filesystem::path& path);

void save_language_model(const std::filesystem::path& path, const LanguageModel& m, const Vocabulary& vocab,
                         nlohmann::json metadata = nlohmann::json::object());
Loaded<LanguageModel> load_language_model(const std::filesystem::path& path);

void save_embedder(const std::filesystem::path& path, const SemanticEmbedder& m, const Vocabulary& vocab,
                   nlohmann::json metadata = nlohmann::json::object());
Loaded<SemanticEmbedder> load_embedder(const std::filesystem::path& path);

}  // namespace a4nt
