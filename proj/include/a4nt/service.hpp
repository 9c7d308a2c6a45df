#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "a4nt/checkpoint.hpp"
#include "a4nt/config.hpp"

namespace httplib {
class Server;
}

namespace a4nt {

struct HttpResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

/// Models serving one task. Vocabularies may differ; ids are mapped through
/// token strings.
struct TaskModels {
    std::string name;
    ClassifierModel classifier;
    Vocabulary classifier_vocab;
    TranslatorModel translator;
    Vocabulary translator_vocab;
};

struct ServiceOptions {
    std::size_t max_tokens = 200;
    std::size_t max_k = 32;
    /// Lower bound on decoding length; longer inputs get proportionally more.
    std::size_t max_len = 20;
    std::optional<std::filesystem::path> static_dir;
};

/// Request handling independent of any socket. Models are immutable once
/// added, so handle() may run concurrently.
class Service {
public:
    explicit Service(ServiceOptions options = {});

    /// Keys task.<name>.classifier / task.<name>.translator; when none are
    /// given, home/classifier_eval.ckpt and home/translator.ckpt serve the
    /// task named in the checkpoint. service.static_dir, service.max_len.
    static Service from_config(const Config& config, const std::filesystem::path& home);

    void add_task(TaskModels models);
    const std::vector<TaskModels>& tasks() const { return tasks_; }

    HttpResponse handle(const std::string& method, const std::string& path, const std::string& body) const;
    /// Routes every GET/POST of the server through handle().
    void mount(httplib::Server& server) const;

    nlohmann::json classify(const nlohmann::json& request) const;
    nlohmann::json obfuscate(const nlohmann::json& request) const;

private:
    const TaskModels* find_task(const std::string& name) const;
    HttpResponse serve_static(const std::string& path) const;

    ServiceOptions options_;
    std::vector<TaskModels> tasks_;
};

/// Raised by request handlers; carries the HTTP status and offending field.
class RequestError : public std::runtime_error {
public:
    RequestError(int status, std::string field, const std::string& message)
        : std::runtime_error(message), status_(status), field_(std::move(field)) {}
    int status() const { return status_; }
    const std::string& field() const { return field_; }

private:
    int status_;
    std::string field_;
};

/// Splits on '.', '!' or '?' followed by whitespace or the end of the text.
std::vector<std::string> split_sentences(const std::string& text);

}  // namespace a4nt
