#include "a4nt/service.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <httplib.h>

#include "a4nt/evaluation.hpp"

namespace a4nt {

using nlohmann::json;

namespace {

json error_body(const std::string& message, const std::string& field) {
    json e{{"error", message}};
    if (!field.empty()) e["field"] = field;
    return e;
}

HttpResponse json_response(int status, const json& body) { return {status, body.dump(), "application/json"}; }

const json& require(const json& request, const char* field) {
    if (!request.contains(field)) throw RequestError(400, field, std::string("missing field '") + field + "'");
    return request.at(field);
}

std::string require_string(const json& request, const char* field) {
    const json& v = require(request, field);
    if (!v.is_string()) throw RequestError(400, field, std::string("field '") + field + "' must be a string");
    return v.get<std::string>();
}

std::vector<int> map_ids(std::span<const int> ids, const Vocabulary& from, const Vocabulary& to) {
    std::vector<int> out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back(id < token::kReservedCount ? id : to.id(from.token(id)));
    return out;
}

bool same_vocabulary(const Vocabulary& a, const Vocabulary& b) { return a.tokens() == b.tokens(); }

// Token count check shared by both endpoints; returns the tokens.
std::vector<std::string> checked_tokens(const std::string& text, std::size_t max_tokens) {
    auto toks = tokenize(text);
    if (toks.empty()) throw RequestError(400, "text", "field 'text' contains no words");
    if (toks.size() > max_tokens)
        throw RequestError(413, "text", "text has " + std::to_string(toks.size()) + " tokens, limit is " +
                                            std::to_string(max_tokens));
    return toks;
}

json probabilities_json(const TaskSpec& task, const ClassProbabilities& p) {
    return json{{task.classes[0], p[0]}, {task.classes[1], p[1]}};
}

const char* content_type_for(const std::filesystem::path& p) {
    const std::string ext = p.extension().string();
    if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
    if (ext == ".js" || ext == ".mjs") return "text/javascript; charset=utf-8";
    if (ext == ".css") return "text/css; charset=utf-8";
    if (ext == ".json" || ext == ".map") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    if (ext == ".ico") return "image/x-icon";
    if (ext == ".woff2") return "font/woff2";
    if (ext == ".txt") return "text/plain; charset=utf-8";
    return "application/octet-stream";
}

}  // namespace

std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (current.empty() && std::isspace(static_cast<unsigned char>(c))) continue;
        current += c;
        const bool terminal = c == '.' || c == '!' || c == '?';
        const bool boundary = i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]));
        if (terminal && boundary) {
            if (!tokenize(current).empty()) out.push_back(current);
            current.clear();
        }
    }
    if (!tokenize(current).empty()) out.push_back(current);
    return out;
}

Service::Service(ServiceOptions options) : options_(std::move(options)) {}

void Service::add_task(TaskModels models) {
    if (models.classifier.task.classes != models.translator.task.classes)
        throw std::invalid_argument("task " + models.name + ": classifier and translator disagree on classes");
    if (find_task(models.name)) throw std::invalid_argument("task " + models.name + " registered twice");
    tasks_.push_back(std::move(models));
}

Service Service::from_config(const Config& config, const std::filesystem::path& home) {
    ServiceOptions opts;
    opts.max_len = config.get_size("service.max_len", opts.max_len);
    if (config.has("service.static_dir")) opts.static_dir = config.get_string("service.static_dir");
    Service service(opts);

    std::vector<std::string> names;
    for (const auto& [key, value] : config.entries()) {
        const std::string suffix = ".classifier";
        if (key.rfind("task.", 0) == 0 && key.size() > 5 + suffix.size() &&
            key.compare(key.size() - suffix.size(), suffix.size(), suffix) == 0)
            names.push_back(key.substr(5, key.size() - 5 - suffix.size()));
    }
    auto load = [&](const std::string& name, const std::filesystem::path& clf, const std::filesystem::path& tr) {
        auto c = load_classifier(clf);
        auto t = load_translator(tr);
        service.add_task(TaskModels{name.empty() ? c.model.task.task : name, std::move(c.model), std::move(c.vocab),
                                    std::move(t.model), std::move(t.vocab)});
    };
    if (names.empty()) {
        load("", home / "classifier_eval.ckpt", home / "translator.ckpt");
    } else {
        for (const auto& n : names)
            load(n, config.get_string("task." + n + ".classifier"), config.get_string("task." + n + ".translator"));
    }
    return service;
}

const TaskModels* Service::find_task(const std::string& name) const {
    for (const auto& t : tasks_)
        if (t.name == name) return &t;
    return nullptr;
}

json Service::classify(const json& request) const {
    if (!request.is_object()) throw RequestError(400, "body", "request body must be a JSON object");
    const std::string text = require_string(request, "text");
    const std::string task_name = require_string(request, "task");
    const TaskModels* tm = find_task(task_name);
    if (!tm) throw RequestError(404, "task", "unknown task '" + task_name + "'");
    checked_tokens(text, options_.max_tokens);

    const auto pieces = split_sentences(text);
    std::vector<Sentence> sentences;
    for (const auto& p : pieces) sentences.push_back(encode_sentence(p, tm->classifier_vocab));
    const auto lps = sentence_log_probs(tm->classifier, sentences);
    const auto doc = aggregate_document(lps, tm->classifier.task);

    // Document probabilities from the summed log-probabilities.
    const double m = std::max(doc.scores[0], doc.scores[1]);
    const double z = std::exp(doc.scores[0] - m) + std::exp(doc.scores[1] - m);
    const ClassProbabilities p{Real(std::exp(doc.scores[0] - m) / z), Real(std::exp(doc.scores[1] - m) / z)};

    json per_sentence = json::array();
    for (std::size_t i = 0; i < pieces.size(); ++i)
        per_sentence.push_back(
            json{{"text", pieces[i]},
                 {"probabilities", probabilities_json(tm->classifier.task, {std::exp(lps[i][0]), std::exp(lps[i][1])})}});
    return json{{"task", tm->name},
                {"probabilities", probabilities_json(tm->classifier.task, p)},
                {"label", tm->classifier.task.class_name(doc.label)},
                {"log_prob_sum", {{tm->classifier.task.classes[0], doc.scores[0]},
                                  {tm->classifier.task.classes[1], doc.scores[1]}}},
                {"sentences", per_sentence}};
}

json Service::obfuscate(const json& request) const {
    if (!request.is_object()) throw RequestError(400, "body", "request body must be a JSON object");
    const std::string text = require_string(request, "text");
    const std::string task_name = require_string(request, "task");
    const std::string target_name = require_string(request, "target");

    std::size_t k = 1;
    if (request.contains("k")) {
        const json& v = request.at("k");
        if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > (long long)options_.max_k)
            throw RequestError(400, "k", "field 'k' must be an integer in [1, " + std::to_string(options_.max_k) + "]");
        k = std::size_t(v.get<long long>());
    }
    std::uint64_t seed = 0;
    if (request.contains("seed")) {
        const json& v = request.at("seed");
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
            throw RequestError(400, "seed", "field 'seed' must be a non-negative integer");
        seed = v.get<std::uint64_t>();
    }

    const TaskModels* tm = find_task(task_name);
    if (!tm) throw RequestError(404, "task", "unknown task '" + task_name + "'");
    const TaskSpec& task = tm->translator.task;
    int target = -1;
    for (int c = 0; c < 2; ++c)
        if (task.classes[std::size_t(c)] == target_name) target = c;
    if (target < 0) throw RequestError(404, "target", "unknown class '" + target_name + "' for task " + task_name);
    const int source = 1 - target;

    const auto toks = checked_tokens(text, options_.max_tokens);
    const Sentence input = encode_sentence(text, tm->translator_vocab);
    const bool shared = same_vocabulary(tm->translator_vocab, tm->classifier_vocab);
    auto for_classifier = [&](const Sentence& s) {
        return shared ? s : Sentence::from_words(map_ids(s.words(), tm->translator_vocab, tm->classifier_vocab));
    };

    TranslateOptions opts;
    opts.max_len = std::max(options_.max_len, input.length() + input.length() / 2 + 2);
    opts.seed = seed;
    const std::vector<Sentence> copies(k, input);
    const auto outputs = translate_sentences(tm->translator, copies, source, opts);

    std::vector<Sentence> scored{for_classifier(input)};
    for (const auto& o : outputs) scored.push_back(for_classifier(o));
    const auto lps = sentence_log_probs(tm->classifier, scored);
    const double before = std::exp(double(lps[0][std::size_t(source)]));

    struct Candidate {
        std::size_t sample;
        double after, meteor;
    };
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < k; ++i)
        cands.push_back({i, std::exp(double(lps[i + 1][std::size_t(source)])), meteor_proxy(outputs[i], input)});
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Candidate& a, const Candidate& b) { return a.meteor > b.meteor; });

    json list = json::array();
    for (const auto& c : cands)
        list.push_back(json{{"text", decode_sentence(outputs[c.sample], tm->translator_vocab)},
                            {"sample", c.sample},
                            {"source_score_before", before},
                            {"source_score_after", c.after},
                            {"privacy", 1.0 - c.after},
                            {"meteor_proxy", c.meteor}});
    return json{{"task", tm->name},
                {"source", task.class_name(source)},
                {"target", task.class_name(target)},
                {"k", k},
                {"seed", seed},
                {"input_score", before},
                {"candidates", list}};
}

HttpResponse Service::serve_static(const std::string& path) const {
    if (!options_.static_dir) return json_response(404, error_body("no static bundle configured", ""));
    std::string rel = path.substr(path.find_first_not_of('/') == std::string::npos ? path.size()
                                                                                    : path.find_first_not_of('/'));
    if (auto q = rel.find_first_of("?#"); q != std::string::npos) rel.resize(q);
    if (rel.empty()) rel = "index.html";
    const std::filesystem::path relative(rel);
    for (const auto& part : relative)
        if (part == ".." || part.string().find('\\') != std::string::npos)
            return json_response(403, error_body("path escapes the static root", "path"));

    std::error_code ec;
    const auto root = std::filesystem::weakly_canonical(*options_.static_dir, ec);
    auto target = std::filesystem::weakly_canonical(root / relative, ec);
    if (ec) return json_response(404, error_body("not found: " + path, ""));
    const auto [r, t] = std::mismatch(root.begin(), root.end(), target.begin(), target.end());
    if (r != root.end()) return json_response(403, error_body("path escapes the static root", "path"));
    if (std::filesystem::is_directory(target)) target /= "index.html";
    std::ifstream in(target, std::ios::binary);
    if (!in) return json_response(404, error_body("not found: " + path, ""));
    std::ostringstream ss;
    ss << in.rdbuf();
    return {200, ss.str(), content_type_for(target)};
}

HttpResponse Service::handle(const std::string& method, const std::string& path, const std::string& body) const {
    const std::string route = path.substr(0, path.find('?'));
    try {
        if (route.rfind("/api/", 0) == 0) {
            if (route == "/api/health") {
                if (method != "GET") return json_response(405, error_body("use GET", ""));
                return json_response(200, json{{"status", "ok"}});
            }
            if (route == "/api/attributes") {
                if (method != "GET") return json_response(405, error_body("use GET", ""));
                json tasks = json::array();
                for (const auto& t : tasks_)
                    tasks.push_back(json{{"task", t.name},
                                         {"classes", {t.translator.task.classes[0], t.translator.task.classes[1]}}});
                return json_response(200, json{{"tasks", tasks}});
            }
            if (route == "/api/classify" || route == "/api/obfuscate") {
                if (method != "POST") return json_response(405, error_body("use POST", ""));
                json request;
                try {
                    request = json::parse(body);
                } catch (const json::parse_error& e) {
                    throw RequestError(400, "body", std::string("malformed JSON: ") + e.what());
                }
                return json_response(200, route == "/api/classify" ? classify(request) : obfuscate(request));
            }
            return json_response(404, error_body("unknown endpoint " + route, ""));
        }
        if (method != "GET") return json_response(405, error_body("use GET", ""));
        return serve_static(route);
    } catch (const RequestError& e) {
        return json_response(e.status(), error_body(e.what(), e.field()));
    } catch (const std::exception& e) {
        return json_response(500, error_body(e.what(), ""));
    }
}

void Service::mount(httplib::Server& server) const {
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
        const HttpResponse r = handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body, r.content_type.c_str());
    };
    server.Get(".*", forward);
    server.Post(".*", forward);
    server.Put(".*", forward);
    server.Delete(".*", forward);
}

}  // namespace a4nt
