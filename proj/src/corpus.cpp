#include "a4nt/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace a4nt {

int TaskSpec::label_of(const std::string& value) const {
    for (int i = 0; i < 2; ++i)
        if (classes[std::size_t(i)] == value) return i;
    throw std::invalid_argument("attribute '" + value + "' is not a class of task '" + task + "' (" + classes[0] +
                                ", " + classes[1] + ")");
}

std::vector<std::vector<std::string>> RawCorpus::tokenized_sentences() const {
    std::vector<std::vector<std::string>> out;
    for (const auto& doc : documents)
        for (const auto& s : doc.sentences) out.push_back(tokenize(s));
    return out;
}

std::size_t Corpus::sentence_count() const {
    std::size_t n = 0;
    for (const auto& d : documents) n += d.sentences.size();
    return n;
}

Vocabulary build_vocabulary(const RawCorpus& corpus, int min_frequency) {
    if (corpus.documents.empty()) throw std::invalid_argument("build_vocabulary: empty corpus");
    const auto tokenized = corpus.tokenized_sentences();
    return Vocabulary::build(tokenized, min_frequency);
}

Corpus encode_corpus(const RawCorpus& raw, const Vocabulary& vocab) {
    Corpus out;
    out.task = raw.task;
    out.documents.reserve(raw.documents.size());
    for (const auto& rd : raw.documents) {
        if (rd.sentences.empty()) throw std::invalid_argument("document '" + rd.doc_id + "' has no sentences");
        Document d;
        d.doc_id = rd.doc_id;
        d.label = raw.task.label_of(rd.attribute);
        for (const auto& s : rd.sentences) d.sentences.push_back(encode_sentence(s, vocab));
        out.documents.push_back(std::move(d));
    }
    return out;
}

RawCorpus read_corpus_jsonl(const std::filesystem::path& path, const std::optional<TaskSpec>& task,
                            const std::string& task_name) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus file " + path.string());
    RawCorpus corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto where = path.string() + ":" + std::to_string(lineno);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::runtime_error(where + ": invalid JSON: " + e.what());
        }
        if (!j.is_object() || j.size() != 3 || !j.contains("doc_id") || !j.contains("attribute") ||
            !j.contains("sentences"))
            throw std::runtime_error(where + ": expected exactly the fields doc_id, attribute, sentences");
        if (!j["doc_id"].is_string() || !j["attribute"].is_string() || !j["sentences"].is_array())
            throw std::runtime_error(where + ": field types must be string, string, array of strings");
        RawDocument doc;
        doc.doc_id = j["doc_id"].get<std::string>();
        doc.attribute = j["attribute"].get<std::string>();
        for (const auto& s : j["sentences"]) {
            if (!s.is_string()) throw std::runtime_error(where + ": sentences must be strings");
            doc.sentences.push_back(s.get<std::string>());
        }
        if (doc.sentences.empty()) throw std::runtime_error(where + ": document has no sentences");
        corpus.documents.push_back(std::move(doc));
    }
    if (task) {
        corpus.task = *task;
        for (const auto& d : corpus.documents) corpus.task.label_of(d.attribute);
    } else {
        std::set<std::string> values;
        for (const auto& d : corpus.documents) values.insert(d.attribute);
        if (values.size() != 2)
            throw std::runtime_error(path.string() + ": expected exactly two attribute values, found " +
                                     std::to_string(values.size()));
        corpus.task.task = task_name;
        corpus.task.classes = {*values.begin(), *std::next(values.begin())};
    }
    return corpus;
}

void write_corpus_jsonl(const std::filesystem::path& path, const RawCorpus& corpus) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write corpus file " + path.string());
    for (const auto& d : corpus.documents) {
        nlohmann::ordered_json j;
        j["doc_id"] = d.doc_id;
        j["attribute"] = d.attribute;
        j["sentences"] = d.sentences;
        out << j.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------
// Synthetic two-style corpus

namespace {

const std::array<std::array<std::string, 4>, 2> kMarkers = {{
    {"yeh", "lol", "wad", "gonna"},
    {"indeed", "alas", "however", "certainly"},
}};

const std::vector<std::string> kSubjects = {"i", "we", "they", "you", "he", "she"};
const std::vector<std::string> kVerbs = {"like", "saw", "want", "need", "found", "made", "bought", "love"};
const std::vector<std::string> kDeterminers = {"the", "a", "my"};
const std::vector<std::string> kAdjectives = {"red", "big", "old", "new", "small", "nice", "cold", "fast"};
const std::vector<std::string> kNouns = {"car", "house", "dog", "book", "phone",
                                         "game", "movie", "song", "cake", "bike"};

template <typename Rng>
const std::string& pick(const std::vector<std::string>& v, Rng& rng) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

template <typename Rng>
std::string content_sentence(Rng& rng) {
    std::string s = pick(kSubjects, rng) + " " + pick(kVerbs, rng) + " " + pick(kDeterminers, rng) + " " +
                    pick(kAdjectives, rng) + " " + pick(kNouns, rng);
    const int number = std::uniform_int_distribution<int>(2, 12)(rng);
    switch (std::uniform_int_distribution<int>(0, 7)(rng)) {
        case 0: s += " today"; break;
        case 1: s += " at home"; break;
        case 2: s += " with " + std::to_string(number) + " friends"; break;
        case 3: s += " last week"; break;
        case 4: s += " in the park"; break;
        case 5: s += " again"; break;
        case 6: s += " for " + std::to_string(number) + " days"; break;
        default: break;
    }
    return s;
}

}  // namespace

const std::array<std::string, 4>& synthetic_markers(int label) { return kMarkers.at(std::size_t(label)); }

TaskSpec synthetic_task() { return TaskSpec{"age", {"teen", "adult"}}; }

RawCorpus generate_synthetic_corpus(const SyntheticOptions& options) {
    if (options.docs_per_class <= 0 || options.sentences_per_doc <= 0)
        throw std::invalid_argument("generate_synthetic_corpus: counts must be positive");
    std::mt19937_64 rng(options.seed);
    std::bernoulli_distribution has_marker(options.marker_rate);
    std::bernoulli_distribution second_marker(options.double_marker_rate);
    std::bernoulli_distribution at_front(0.5);
    std::uniform_int_distribution<std::size_t> marker_index(0, 3);

    RawCorpus corpus;
    corpus.task = synthetic_task();
    for (int d = 0; d < options.docs_per_class; ++d) {
        for (int label = 0; label < 2; ++label) {
            RawDocument doc;
            doc.doc_id = corpus.task.classes[std::size_t(label)] + "-" + std::to_string(d);
            doc.attribute = corpus.task.classes[std::size_t(label)];
            for (int k = 0; k < options.sentences_per_doc; ++k) {
                std::string s = content_sentence(rng);
                if (has_marker(rng)) {
                    const auto& markers = kMarkers[std::size_t(label)];
                    const bool front = at_front(rng);
                    const std::string& m = markers[marker_index(rng)];
                    s = front ? m + " " + s : s + " " + m;
                    if (second_marker(rng)) {
                        const std::string& m2 = markers[marker_index(rng)];
                        s = front ? s + " " + m2 : m2 + " " + s;
                    }
                }
                doc.sentences.push_back(std::move(s));
            }
            corpus.documents.push_back(std::move(doc));
        }
    }
    return corpus;
}

CorpusSplits split_corpus(const RawCorpus& corpus, double val_fraction, double test_fraction, std::uint64_t seed) {
    if (val_fraction < 0 || test_fraction < 0 || val_fraction + test_fraction >= 1)
        throw std::invalid_argument("split_corpus: fractions must be non-negative and sum below 1");
    CorpusSplits out;
    out.train.task = out.val.task = out.test.task = corpus.task;
    std::mt19937_64 rng(seed);
    for (int label = 0; label < 2; ++label) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < corpus.documents.size(); ++i)
            if (corpus.task.label_of(corpus.documents[i].attribute) == label) idx.push_back(i);
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n_val = std::size_t(double(idx.size()) * val_fraction + 0.5);
        const auto n_test = std::size_t(double(idx.size()) * test_fraction + 0.5);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            RawCorpus& dst = k < n_val ? out.val : (k < n_val + n_test ? out.test : out.train);
            dst.documents.push_back(corpus.documents[idx[k]]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Batching

std::vector<LabeledSentence> flatten(const Corpus& corpus) {
    std::vector<LabeledSentence> out;
    for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
        const auto& doc = corpus.documents[d];
        for (std::size_t s = 0; s < doc.sentences.size(); ++s)
            out.push_back(LabeledSentence{&doc.sentences[s], doc.label, d, s});
    }
    return out;
}

std::vector<LabeledSentence> flatten_class(const Corpus& corpus, int label) {
    auto all = flatten(corpus);
    std::erase_if(all, [label](const LabeledSentence& s) { return s.label != label; });
    return all;
}

Sentence Batch::sentence(std::size_t row) const {
    const auto begin = ids.begin() + std::ptrdiff_t(row * width);
    return Sentence::from_words(std::vector<int>(begin, begin + lengths[row]));
}

Batch make_batch(std::span<const LabeledSentence> items, std::size_t max_len) {
    if (max_len == 0) throw std::invalid_argument("make_batch: max_len must be positive");
    Batch b;
    b.size = items.size();
    b.items.assign(items.begin(), items.end());
    for (const auto& it : items) {
        const std::size_t n = std::min(it.sentence->length(), max_len);
        if (n == 0) throw std::invalid_argument("make_batch: empty sentence");
        b.lengths.push_back(int(n));
        b.labels.push_back(it.label);
        b.width = std::max(b.width, n);
    }
    b.ids.assign(b.size * b.width, token::kPad);
    for (std::size_t r = 0; r < b.size; ++r) {
        const auto words = items[r].sentence->words();
        for (std::size_t t = 0; t < std::size_t(b.lengths[r]); ++t) b.ids[r * b.width + t] = words[t];
    }
    return b;
}

Batch make_batch(std::span<const Sentence> sentences, std::size_t max_len) {
    std::vector<LabeledSentence> items;
    items.reserve(sentences.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) items.push_back(LabeledSentence{&sentences[i], 0, 0, i});
    return make_batch(items, max_len);
}

BatchIterator::BatchIterator(std::vector<LabeledSentence> items, std::size_t batch_size, std::size_t max_len,
                             std::uint64_t seed)
    : items_(std::move(items)), batch_size_(batch_size), max_len_(max_len) {
    if (batch_size_ == 0) throw std::invalid_argument("batch_iterator: batch_size must be >= 1");
    std::mt19937_64 rng(seed);
    std::shuffle(items_.begin(), items_.end(), rng);
}

std::optional<Batch> BatchIterator::next() {
    if (cursor_ >= items_.size()) return std::nullopt;
    const std::size_t end = std::min(items_.size(), cursor_ + batch_size_);
    Batch b = make_batch(std::span<const LabeledSentence>(items_).subspan(cursor_, end - cursor_), max_len_);
    cursor_ = end;
    return b;
}

std::size_t BatchIterator::batch_count() const { return (items_.size() + batch_size_ - 1) / batch_size_; }

}  // namespace a4nt
