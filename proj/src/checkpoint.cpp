#include "a4nt/checkpoint.hpp"

#include <chrono>
#include <cstring>
#include <fstream>

namespace a4nt {

using nlohmann::json;

CheckpointError::CheckpointError(Kind kind, const std::string& message)
    : std::runtime_error(std::string(kind_name(kind)) + ": " + message), kind_(kind) {}

const char* CheckpointError::kind_name(Kind kind) {
    switch (kind) {
        case Kind::Io: return "io";
        case Kind::Format: return "format";
        case Kind::Version: return "version";
        case Kind::Truncated: return "truncated";
        case Kind::Shape: return "shape";
        case Kind::ModelKind: return "model kind";
    }
    return "checkpoint";
}

namespace {

constexpr std::size_t kMagicSize = sizeof(kCheckpointMagic) - 1;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint32_t get_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

std::size_t element_count(const Shape& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
}

json task_json(const TaskSpec& t) { return json{{"task", t.task}, {"classes", {t.classes[0], t.classes[1]}}}; }

TaskSpec task_from(const json& c) {
    try {
        return TaskSpec{c.at("task").get<std::string>(),
                        {c.at("classes").at(0).get<std::string>(), c.at("classes").at(1).get<std::string>()}};
    } catch (const json::exception& e) {
        throw CheckpointError(CheckpointError::Kind::Format, std::string("bad task in config: ") + e.what());
    }
}

template <class T>
T cfg(const json& c, const char* key) {
    try {
        return c.at(key).get<T>();
    } catch (const json::exception&) {
        throw CheckpointError(CheckpointError::Kind::Format, std::string("config field '") + key + "' missing");
    }
}

std::vector<const Parameter*> const_params(const std::vector<Parameter*>& ps) {
    return std::vector<const Parameter*>(ps.begin(), ps.end());
}

Vocabulary vocab_of(const CheckpointFile& f, std::size_t expected_size) {
    Vocabulary v = Vocabulary::from_tokens(f.vocabulary);
    if (v.size() != expected_size)
        throw CheckpointError(CheckpointError::Kind::Shape, "vocabulary has " + std::to_string(v.size()) +
                                                                " tokens but the model expects " +
                                                                std::to_string(expected_size));
    return v;
}

json with_time(json metadata) {
    if (!metadata.contains("created_unix"))
        metadata["created_unix"] =
            std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
                .count();
    return metadata;
}

}  // namespace

Tensor CheckpointFile::array(const std::string& name) const {
    for (const auto& a : arrays) {
        if (a.name != name) continue;
        const std::size_t n = element_count(a.shape);
        if (a.offset + 4 * n > blob.size())
            throw CheckpointError(CheckpointError::Kind::Truncated, "array " + name + " extends past the blob");
        Tensor t(a.shape);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t bits = get_u32(&blob[a.offset + 4 * i]);
            float f;
            std::memcpy(&f, &bits, 4);
            t[i] = Real(f);
        }
        return t;
    }
    throw CheckpointError(CheckpointError::Kind::Shape, "array " + name + " not present in checkpoint");
}

CheckpointFile make_checkpoint(const std::string& model_kind, const Vocabulary& vocab, json config, json metadata,
                               const std::vector<const Parameter*>& params) {
    CheckpointFile f;
    f.model_kind = model_kind;
    f.vocabulary = vocab.tokens();
    f.config = std::move(config);
    f.metadata = std::move(metadata);
    for (const Parameter* p : params) {
        f.arrays.push_back(ArrayEntry{p->name, p->value.shape(), f.blob.size()});
        for (Real v : p->value.values()) {
            const float x = float(v);
            std::uint32_t bits;
            std::memcpy(&bits, &x, 4);
            put_u32(f.blob, bits);
        }
    }
    return f;
}

void write_checkpoint(const std::filesystem::path& path, const CheckpointFile& f) {
    json header;
    header["format_version"] = f.format_version;
    header["model_kind"] = f.model_kind;
    header["vocabulary"] = f.vocabulary;
    header["config"] = f.config;
    header["metadata"] = f.metadata;
    header["arrays"] = json::array();
    for (const auto& a : f.arrays)
        header["arrays"].push_back(json{{"name", a.name}, {"shape", a.shape}, {"offset", a.offset}});
    header["blob_bytes"] = f.blob.size();
    const std::string text = header.dump();

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CheckpointError(CheckpointError::Kind::Io, "cannot write " + path.string());
        out.write(kCheckpointMagic, std::streamsize(kMagicSize));
        unsigned char len[8];
        for (int i = 0; i < 8; ++i) len[i] = static_cast<unsigned char>(std::uint64_t(text.size()) >> (8 * i));
        out.write(reinterpret_cast<const char*>(len), 8);
        out.write(text.data(), std::streamsize(text.size()));
        out.write(reinterpret_cast<const char*>(f.blob.data()), std::streamsize(f.blob.size()));
        if (!out) throw CheckpointError(CheckpointError::Kind::Io, "failed writing " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

CheckpointFile read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError(CheckpointError::Kind::Io, "cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string where = path.string();
    if (bytes.size() < kMagicSize || std::memcmp(bytes.data(), "A4NTCKPT", kMagicSize - 1) != 0)
        throw CheckpointError(CheckpointError::Kind::Format, where + " is not an A4NT checkpoint (bad magic)");
    if (bytes[kMagicSize - 1] != static_cast<unsigned char>(kCheckpointMagic[kMagicSize - 1]))
        throw CheckpointError(CheckpointError::Kind::Version,
                              where + " has checkpoint version '" + char(bytes[kMagicSize - 1]) + "', expected " +
                                  std::to_string(kCheckpointVersion));
    if (bytes.size() < kMagicSize + 8)
        throw CheckpointError(CheckpointError::Kind::Truncated, where + " ends inside the header length");
    std::uint64_t len = 0;
    for (int i = 0; i < 8; ++i) len |= std::uint64_t(bytes[kMagicSize + std::size_t(i)]) << (8 * i);
    const std::size_t header_begin = kMagicSize + 8;
    if (len > bytes.size() - header_begin)
        throw CheckpointError(CheckpointError::Kind::Truncated, where + " ends inside the header");

    json header;
    try {
        header = json::parse(bytes.begin() + std::ptrdiff_t(header_begin),
                             bytes.begin() + std::ptrdiff_t(header_begin + len));
    } catch (const json::exception& e) {
        throw CheckpointError(CheckpointError::Kind::Format, where + ": malformed header: " + e.what());
    }

    CheckpointFile f;
    try {
        f.format_version = header.at("format_version").get<int>();
        if (f.format_version != kCheckpointVersion)
            throw CheckpointError(CheckpointError::Kind::Version,
                                  where + " has format version " + std::to_string(f.format_version) +
                                      ", expected " + std::to_string(kCheckpointVersion));
        f.model_kind = header.at("model_kind").get<std::string>();
        f.vocabulary = header.at("vocabulary").get<std::vector<std::string>>();
        f.config = header.at("config");
        f.metadata = header.value("metadata", json::object());
        for (const auto& a : header.at("arrays"))
            f.arrays.push_back(ArrayEntry{a.at("name").get<std::string>(), a.at("shape").get<Shape>(),
                                          a.at("offset").get<std::uint64_t>()});
        const auto blob_bytes = header.at("blob_bytes").get<std::uint64_t>();
        const std::size_t blob_begin = header_begin + len;
        if (bytes.size() - blob_begin < blob_bytes)
            throw CheckpointError(CheckpointError::Kind::Truncated,
                                  where + ": blob has " + std::to_string(bytes.size() - blob_begin) +
                                      " bytes, header declares " + std::to_string(blob_bytes));
        f.blob.assign(bytes.begin() + std::ptrdiff_t(blob_begin),
                      bytes.begin() + std::ptrdiff_t(blob_begin + blob_bytes));
    } catch (const json::exception& e) {
        throw CheckpointError(CheckpointError::Kind::Format, where + ": malformed header: " + e.what());
    }
    for (const auto& a : f.arrays) {
        if (a.shape.empty() || element_count(a.shape) == 0)
            throw CheckpointError(CheckpointError::Kind::Format, where + ": array " + a.name + " has an empty shape");
        if (a.offset + 4 * element_count(a.shape) > f.blob.size())
            throw CheckpointError(CheckpointError::Kind::Truncated, where + ": array " + a.name + " extends past the blob");
    }
    return f;
}

void expect_kind(const CheckpointFile& file, const std::string& expected) {
    if (file.model_kind != expected)
        throw CheckpointError(CheckpointError::Kind::ModelKind,
                              "expected a " + expected + " checkpoint, found " + file.model_kind);
}

void load_parameters(const CheckpointFile& file, const std::vector<Parameter*>& params) {
    for (Parameter* p : params) {
        const ArrayEntry* entry = nullptr;
        for (const auto& a : file.arrays)
            if (a.name == p->name) entry = &a;
        if (!entry) throw CheckpointError(CheckpointError::Kind::Shape, "array " + p->name + " missing from checkpoint");
        if (entry->shape != p->value.shape())
            throw CheckpointError(CheckpointError::Kind::Shape, "array " + p->name + " has shape " +
                                                                    shape_to_string(entry->shape) +
                                                                    ", model expects " +
                                                                    shape_to_string(p->value.shape()));
        p->value = file.array(p->name);
    }
}

// ---------------------------------------------------------------------------

json classifier_config_json(const ClassifierModel& m) {
    json c = task_json(m.task);
    c["embed_dim"] = m.encoder.embed_dim();
    c["hidden"] = m.encoder.hidden_size();
    c["kind"] = to_string(m.encoder.kind);
    return c;
}

void save_classifier(const std::filesystem::path& path, const ClassifierModel& m, const Vocabulary& vocab,
                     json metadata) {
    auto& mm = const_cast<ClassifierModel&>(m);
    write_checkpoint(path, make_checkpoint("classifier", vocab, classifier_config_json(m), with_time(metadata),
                                           const_params(mm.parameters())));
}

Loaded<ClassifierModel> load_classifier(const std::filesystem::path& path) {
    const CheckpointFile f = read_checkpoint(path);
    expect_kind(f, "classifier");
    ClassifierConfig c;
    c.embed_dim = cfg<std::size_t>(f.config, "embed_dim");
    c.hidden = cfg<std::size_t>(f.config, "hidden");
    c.kind = encoding_kind_from_string(cfg<std::string>(f.config, "kind"));
    ClassifierModel m = ClassifierModel::create(task_from(f.config), f.vocabulary.size(), c);
    load_parameters(f, m.parameters());
    Vocabulary v = vocab_of(f, m.vocab_size());
    return {std::move(m), std::move(v), f.metadata};
}

void save_translator(const std::filesystem::path& path, const TranslatorModel& m, const Vocabulary& vocab,
                     json metadata) {
    auto& mm = const_cast<TranslatorModel&>(m);
    json c = task_json(m.task);
    c["embed_dim"] = m.encoder.embed_dim();
    c["hidden"] = m.encoder.hidden_size();
    c["decoder_hidden"] = m.decoders[0].lstm.hidden_size();
    write_checkpoint(path, make_checkpoint("translator", vocab, c, with_time(metadata), const_params(mm.parameters())));
}

Loaded<TranslatorModel> load_translator(const std::filesystem::path& path) {
    const CheckpointFile f = read_checkpoint(path);
    expect_kind(f, "translator");
    TranslatorConfig c;
    c.embed_dim = cfg<std::size_t>(f.config, "embed_dim");
    c.hidden = cfg<std::size_t>(f.config, "hidden");
    c.decoder_hidden = cfg<std::size_t>(f.config, "decoder_hidden");
    TranslatorModel m = TranslatorModel::create(task_from(f.config), f.vocabulary.size(), c);
    load_parameters(f, m.parameters());
    Vocabulary v = vocab_of(f, m.vocab_size());
    return {std::move(m), std::move(v), f.metadata};
}

void save_language_model(const std::filesystem::path& path, const LanguageModel& m, const Vocabulary& vocab,
                         json metadata) {
    auto& mm = const_cast<LanguageModel&>(m);
    json c = task_json(m.task);
    c["label"] = m.label;
    c["embed_dim"] = m.embedding.value.cols();
    c["hidden"] = m.lstm.hidden_size();
    write_checkpoint(path,
                     make_checkpoint("language_model", vocab, c, with_time(metadata), const_params(mm.parameters())));
}

Loaded<LanguageModel> load_language_model(const std::filesystem::path& path) {
    const CheckpointFile f = read_checkpoint(path);
    expect_kind(f, "language_model");
    LanguageModelConfig c;
    c.embed_dim = cfg<std::size_t>(f.config, "embed_dim");
    c.hidden = cfg<std::size_t>(f.config, "hidden");
    LanguageModel m = LanguageModel::create(task_from(f.config), cfg<int>(f.config, "label"), f.vocabulary.size(), c);
    load_parameters(f, m.parameters());
    Vocabulary v = vocab_of(f, m.vocab_size());
    return {std::move(m), std::move(v), f.metadata};
}

void save_embedder(const std::filesystem::path& path, const SemanticEmbedder& m, const Vocabulary& vocab,
                   json metadata) {
    auto& mm = const_cast<SemanticEmbedder&>(m);
    json c{{"embed_dim", m.encoder.embed_dim()}, {"hidden", m.encoder.hidden_size()}};
    write_checkpoint(path,
                     make_checkpoint("semantic_embedder", vocab, c, with_time(metadata), const_params(mm.parameters())));
}

Loaded<SemanticEmbedder> load_embedder(const std::filesystem::path& path) {
    const CheckpointFile f = read_checkpoint(path);
    expect_kind(f, "semantic_embedder");
    SemanticEmbedder m = SemanticEmbedder::create(f.vocabulary.size(), cfg<std::size_t>(f.config, "embed_dim"),
                                                  cfg<std::size_t>(f.config, "hidden"), 0);
    load_parameters(f, m.parameters());
    Vocabulary v = vocab_of(f, m.vocab_size());
    return {std::move(m), std::move(v), f.metadata};
}

}  // namespace a4nt
