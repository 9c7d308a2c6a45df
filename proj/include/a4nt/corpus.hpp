#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "a4nt/vocab.hpp"

namespace a4nt {

/// A binary attribute task: its name and its two class names. Class 0 is
/// the "x" side and class 1 the "y" side of every ordered pair.
struct TaskSpec {
    std::string task;
    std::array<std::string, 2> classes;

    /// Class index of value; throws when value names neither class.
    int label_of(const std::string& value) const;
    const std::string& class_name(int label) const { return classes.at(std::size_t(label)); }
    bool operator==(const TaskSpec&) const = default;
};

struct AttributeLabel {
    std::string task;
    std::string value;
};

/// One line of a corpus file: a document before tokenization.
struct RawDocument {
    std::string doc_id;
    std::string attribute;
    std::vector<std::string> sentences;
};

struct RawCorpus {
    TaskSpec task;
    std::vector<RawDocument> documents;

    std::vector<std::vector<std::string>> tokenized_sentences() const;
};

struct Document {
    std::string doc_id;
    int label = 0;
    std::vector<Sentence> sentences;
};

struct Corpus {
    TaskSpec task;
    std::vector<Document> documents;

    std::size_t sentence_count() const;
};

Vocabulary build_vocabulary(const RawCorpus& corpus, int min_frequency);

/// Encodes every sentence; throws on documents without sentences.
Corpus encode_corpus(const RawCorpus& raw, const Vocabulary& vocab);

/// Reads one JSON object per line with exactly the fields doc_id, attribute,
/// sentences. When task is given, attributes must be one of its classes;
/// otherwise the file must contain exactly two attribute values, which become
/// the classes in lexicographic order.
RawCorpus read_corpus_jsonl(const std::filesystem::path& path, const std::optional<TaskSpec>& task,
                            const std::string& task_name = "attribute");
void write_corpus_jsonl(const std::filesystem::path& path, const RawCorpus& corpus);

struct SyntheticOptions {
    std::uint64_t seed = 7;
    int docs_per_class = 200;
    int sentences_per_doc = 4;
    /// Probability that a sentence carries at least one class marker.
    double marker_rate = 0.96;
    /// Probability of a second marker at the opposite end.
    double double_marker_rate = 0.15;
};

/// The class-exclusive marker tokens of the synthetic corpus.
const std::array<std::string, 4>& synthetic_markers(int label);
TaskSpec synthetic_task();

/// Two-style corpus: shared content templates plus class-specific markers.
/// Deterministic given options.seed.
RawCorpus generate_synthetic_corpus(const SyntheticOptions& options);

struct CorpusSplits {
    RawCorpus train, val, test;
};

/// Stratified, seeded split by document.
CorpusSplits split_corpus(const RawCorpus& corpus, double val_fraction, double test_fraction, std::uint64_t seed);

/// One sentence with its document context.
struct LabeledSentence {
    const Sentence* sentence = nullptr;
    int label = 0;
    std::size_t doc_index = 0;
    std::size_t sent_index = 0;
};

std::vector<LabeledSentence> flatten(const Corpus& corpus);
std::vector<LabeledSentence> flatten_class(const Corpus& corpus, int label);

/// Padded id batch, row-major [size x width]; rows hold words only (no END),
/// padded with PAD. width is the longest (truncated) length in the batch.
struct Batch {
    std::size_t size = 0;
    std::size_t width = 0;
    std::vector<int> ids;
    std::vector<int> lengths;
    std::vector<int> labels;
    std::vector<LabeledSentence> items;

    int at(std::size_t row, std::size_t t) const { return ids[row * width + t]; }
    /// Row as a Sentence (END appended).
    Sentence sentence(std::size_t row) const;
};

/// Builds a batch in the given order, truncating words beyond max_len.
Batch make_batch(std::span<const LabeledSentence> items, std::size_t max_len);
Batch make_batch(std::span<const Sentence> sentences, std::size_t max_len);

/// Single-consumer iterator over one epoch in a seeded permutation order.
class BatchIterator {
public:
    BatchIterator(std::vector<LabeledSentence> items, std::size_t batch_size, std::size_t max_len,
                  std::uint64_t seed);

    std::optional<Batch> next();
    std::size_t batch_count() const;

private:
    std::vector<LabeledSentence> items_;
    std::size_t batch_size_;
    std::size_t max_len_;
    std::size_t cursor_ = 0;
};

}  // namespace a4nt
