// Python bindings: corpus generation, tokenisation, metrics, checkpoints and
// the request handlers of the HTTP service.
#include <algorithm>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "a4nt/checkpoint.hpp"
#include "a4nt/evaluation.hpp"
#include "a4nt/service.hpp"

namespace py = pybind11;
using namespace a4nt;
using nlohmann::json;

namespace {

py::dict write_synthetic(const std::filesystem::path& dir, int docs_per_class, std::uint64_t seed, double val_fraction,
                         double test_fraction) {
    SyntheticOptions o;
    o.docs_per_class = docs_per_class;
    o.seed = seed;
    const RawCorpus raw = generate_synthetic_corpus(o);
    const CorpusSplits s = split_corpus(raw, val_fraction, test_fraction, seed);
    std::filesystem::create_directories(dir);
    write_corpus_jsonl(dir / "train.jsonl", s.train);
    write_corpus_jsonl(dir / "val.jsonl", s.val);
    write_corpus_jsonl(dir / "test.jsonl", s.test);
    py::dict out;
    out["train"] = s.train.documents.size();
    out["val"] = s.val.documents.size();
    out["test"] = s.test.documents.size();
    return out;
}

/// Untrained models on the vocabulary of a corpus file, saved as checkpoints.
void write_untrained(const std::filesystem::path& corpus, const std::filesystem::path& classifier,
                     const std::filesystem::path& translator, std::size_t hidden, std::uint64_t seed) {
    const RawCorpus raw = read_corpus_jsonl(corpus, std::nullopt, "attribute");
    const Vocabulary v = build_vocabulary(raw, 1);
    save_classifier(classifier,
                    ClassifierModel::create(raw.task, v.size(), ClassifierConfig{hidden, hidden, EncodingKind::FinalAndMean, seed}),
                    v);
    save_translator(translator, TranslatorModel::create(raw.task, v.size(), TranslatorConfig{hidden, hidden, hidden, seed + 1}),
                    v);
}

std::vector<int> ids(const std::vector<std::string>& words, const Vocabulary& v) {
    std::vector<int> out;
    for (const auto& w : words) out.push_back(v.id(w));
    return out;
}

double meteor_words(const std::vector<std::string>& candidate, const std::vector<std::string>& reference) {
    std::vector<std::vector<std::string>> both{candidate, reference};
    both.erase(std::remove_if(both.begin(), both.end(), [](const auto& s) { return s.empty(); }), both.end());
    if (both.empty()) return meteor_proxy(std::vector<int>{}, std::vector<int>{});
    const Vocabulary v = Vocabulary::build(both, 1);
    return meteor_proxy(ids(candidate, v), ids(reference, v));
}

class PyService {
public:
    PyService(const std::filesystem::path& classifier, const std::filesystem::path& translator, std::size_t max_len) {
        auto c = load_classifier(classifier);
        auto t = load_translator(translator);
        ServiceOptions o;
        o.max_len = max_len;
        service_ = std::make_unique<Service>(o);
        const std::string name = t.model.task.task;
        service_->add_task(TaskModels{name, std::move(c.model), std::move(c.vocab), std::move(t.model), std::move(t.vocab)});
    }

    py::tuple handle(const std::string& method, const std::string& path, const std::string& body) const {
        HttpResponse r;
        {
            py::gil_scoped_release release;
            r = service_->handle(method, path, body);
        }
        return py::make_tuple(r.status, r.body);
    }

    std::string task() const { return service_->tasks().front().name; }

private:
    std::unique_ptr<Service> service_;
};

}  // namespace

PYBIND11_MODULE(_a4nt, m) {
    m.doc() = "Adversarial author-attribute obfuscation";

    m.def("tokenize", [](const std::string& text) { return tokenize(text); }, py::arg("text"));
    m.def("split_sentences", &split_sentences, py::arg("text"));
    m.def("reserved_tokens", [] {
        std::vector<std::string> out;
        for (auto t : reserved_tokens()) out.emplace_back(t);
        return out;
    });
    m.def("f1_score",
          [](const std::vector<int>& truth, const std::vector<int>& predicted, int positive) {
              return f1_score(truth, predicted, positive);
          },
          py::arg("truth"), py::arg("predicted"), py::arg("positive") = 1);
    m.def("meteor_proxy", &meteor_words, py::arg("candidate"), py::arg("reference"),
          "Alignment score between two token lists, 1 for identical lists.");
    m.def("write_synthetic_corpus", &write_synthetic, py::arg("dir"), py::arg("docs_per_class") = 200,
          py::arg("seed") = 7, py::arg("val_fraction") = 0.15, py::arg("test_fraction") = 0.15);
    m.def("write_untrained_models", &write_untrained, py::arg("corpus"), py::arg("classifier"), py::arg("translator"),
          py::arg("hidden") = 16, py::arg("seed") = 1);
    m.def("checkpoint_kind", [](const std::filesystem::path& p) { return read_checkpoint(p).model_kind; });

    py::register_exception<CheckpointError>(m, "CheckpointError");

    py::class_<PyService>(m, "Service")
        .def(py::init<const std::filesystem::path&, const std::filesystem::path&, std::size_t>(), py::arg("classifier"),
             py::arg("translator"), py::arg("max_len") = 20)
        .def("handle", &PyService::handle, py::arg("method"), py::arg("path"), py::arg("body") = "")
        .def_property_readonly("task", &PyService::task);
}
