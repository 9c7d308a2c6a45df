#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "a4nt/service.hpp"

using namespace a4nt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const TaskSpec kTask{"age", {"teen", "adult"}};

Vocabulary service_vocab() {
    const std::vector<std::vector<std::string>> s{
        tokenize("we went to the shop lol yeh"), tokenize("the shop was closed indeed alas"),
        tokenize("gonna see the film however certainly")};
    return Vocabulary::build(s, 1);
}

TaskModels task_models() {
    const Vocabulary v = service_vocab();
    TaskModels t{"age",
                 ClassifierModel::create(kTask, v.size(), ClassifierConfig{6, 8, EncodingKind::FinalAndMean, 1}),
                 v,
                 TranslatorModel::create(kTask, v.size(), TranslatorConfig{6, 8, 8, 2}),
                 v};
    return t;
}

Service make_service(std::optional<fs::path> static_dir = std::nullopt) {
    ServiceOptions o;
    o.static_dir = std::move(static_dir);
    Service s(o);
    s.add_task(task_models());
    return s;
}

json post(const Service& s, const std::string& path, const json& body, int expect) {
    const HttpResponse r = s.handle("POST", path, body.dump());
    CHECK(r.status == expect);
    return json::parse(r.body);
}

}  // namespace

TEST_CASE("health and attributes") {
    const Service s = make_service();
    const HttpResponse h = s.handle("GET", "/api/health", "");
    CHECK(h.status == 200);
    CHECK(json::parse(h.body)["status"] == "ok");
    const json a = json::parse(s.handle("GET", "/api/attributes", "").body);
    CHECK(a["tasks"][0]["task"] == "age");
    CHECK(a["tasks"][0]["classes"] == json::array({"teen", "adult"}));
}

TEST_CASE("classify returns normalised per-class probabilities") {
    const Service s = make_service();
    const json r = post(s, "/api/classify", {{"text", "We went to the shop. The shop was closed!"}, {"task", "age"}}, 200);
    const double p = r["probabilities"]["teen"].get<double>() + r["probabilities"]["adult"].get<double>();
    CHECK(p == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r["sentences"].size() == 2);
    CHECK(r["sentences"][1]["text"] == "The shop was closed!");

    CHECK(post(s, "/api/classify", {{"text", ""}, {"task", "age"}}, 400)["field"] == "text");
    CHECK(post(s, "/api/classify", {{"text", "hi"}}, 400)["field"] == "task");
    CHECK(post(s, "/api/classify", {{"text", "hi"}, {"task", "gender"}}, 404)["field"] == "task");
}

TEST_CASE("obfuscate is byte-deterministic for a fixed seed") {
    const Service s = make_service();
    const json req{{"text", "we went to the shop lol"}, {"task", "age"}, {"target", "adult"}, {"k", 1}, {"seed", 7}};
    const HttpResponse a = s.handle("POST", "/api/obfuscate", req.dump());
    const HttpResponse b = s.handle("POST", "/api/obfuscate", req.dump());
    CHECK(a.status == 200);
    CHECK(a.body == b.body);
    const json r = json::parse(a.body);
    CHECK(r["candidates"].size() == 1);
    CHECK(r["source"] == "teen");
}

TEST_CASE("obfuscate returns k meteor-sorted candidates with before and after scores") {
    const Service s = make_service();
    const json r = post(s, "/api/obfuscate",
                        {{"text", "we went to the shop lol"}, {"task", "age"}, {"target", "adult"}, {"k", 5}, {"seed", 3}},
                        200);
    const auto& c = r["candidates"];
    REQUIRE(c.size() == 5);
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(c[i]["source_score_before"] == r["input_score"]);
        CHECK(c[i].contains("source_score_after"));
        CHECK(c[i]["meteor_proxy"].get<double>() >= 0);
        if (i > 0) CHECK(c[i - 1]["meteor_proxy"].get<double>() >= c[i]["meteor_proxy"].get<double>());
    }
}

TEST_CASE("obfuscate validation") {
    const Service s = make_service();
    const json base{{"text", "we went"}, {"task", "age"}, {"target", "adult"}};
    for (const json& k : {json(0), json(33), json("3"), json(2.5)}) {
        json req = base;
        req["k"] = k;
        CHECK(post(s, "/api/obfuscate", req, 400)["field"] == "k");
    }
    json neg = base;
    neg["seed"] = -1;
    CHECK(post(s, "/api/obfuscate", neg, 400)["field"] == "seed");
    json bad_target = base;
    bad_target["target"] = "senior";
    CHECK(post(s, "/api/obfuscate", bad_target, 404)["field"] == "target");
    json bad_task = base;
    bad_task["task"] = "gender";
    CHECK(post(s, "/api/obfuscate", bad_task, 404)["field"] == "task");

    std::string long_text;
    for (int i = 0; i < 201; ++i) long_text += "we ";
    json too_long = base;
    too_long["text"] = long_text;
    CHECK(post(s, "/api/obfuscate", too_long, 413)["field"] == "text");

    const HttpResponse malformed = s.handle("POST", "/api/obfuscate", "{not json");
    CHECK(malformed.status == 400);
    CHECK(json::parse(malformed.body)["field"] == "body");
    CHECK(s.handle("GET", "/api/obfuscate", "").status == 405);
    CHECK(s.handle("GET", "/api/nothing", "").status == 404);
}

TEST_CASE("static route serves files and refuses traversal") {
    const fs::path root = fs::temp_directory_path() / ("a4nt_static_" + std::to_string(::getpid()));
    fs::create_directories(root / "assets");
    std::ofstream(root / "index.html") << "<html>ok</html>";
    std::ofstream(root / "assets" / "app.js") << "console.log(1)";
    std::ofstream(root.parent_path() / "a4nt_secret.txt") << "secret";
    const Service s = make_service(root);

    const HttpResponse index = s.handle("GET", "/", "");
    CHECK(index.status == 200);
    CHECK(index.body == "<html>ok</html>");
    CHECK(index.content_type.find("text/html") != std::string::npos);
    const HttpResponse js = s.handle("GET", "/assets/app.js", "");
    CHECK(js.status == 200);
    CHECK(js.content_type.find("javascript") != std::string::npos);
    CHECK(s.handle("GET", "/../a4nt_secret.txt", "").status == 403);
    CHECK(s.handle("GET", "/assets/../../a4nt_secret.txt", "").status == 403);
    CHECK(s.handle("GET", "/missing.css", "").status == 404);
    CHECK(make_service().handle("GET", "/index.html", "").status == 404);
    fs::remove_all(root);
    fs::remove(root.parent_path() / "a4nt_secret.txt");
}

TEST_CASE("sentence splitting") {
    CHECK(split_sentences("One. Two! Three?") == std::vector<std::string>{"One.", "Two!", "Three?"});
    CHECK(split_sentences("version 1.5 is out") == std::vector<std::string>{"version 1.5 is out"});
    CHECK(split_sentences("   ").empty());
}

TEST_CASE("the service answers over a real socket") {
    const Service s = make_service();
    httplib::Server server;
    s.mount(server);
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    httplib::Client client("127.0.0.1", port);
    auto health = client.Get("/api/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    const json req{{"text", "we went to the shop"}, {"task", "age"}, {"target", "adult"}, {"k", 2}, {"seed", 1}};
    auto a = client.Post("/api/obfuscate", req.dump(), "application/json");
    auto b = client.Post("/api/obfuscate", req.dump(), "application/json");
    REQUIRE(a);
    REQUIRE(b);
    CHECK(a->status == 200);
    CHECK(a->body == b->body);
    CHECK(a->body == s.handle("POST", "/api/obfuscate", req.dump()).body);
    auto bad = client.Post("/api/classify", "{}", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    server.stop();
    t.join();
}
