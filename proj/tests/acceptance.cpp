// Acceptance run: drives the unit binaries and the full CLI pipeline as child
// processes and prints one PASS/FAIL line per criterion.
#include <sys/resource.h>
#include <sys/wait.h>
#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int exit_code = -1;
    double cpu_seconds = 0;
    std::string output;
};

double children_cpu() {
    rusage u{};
    getrusage(RUSAGE_CHILDREN, &u);
    return double(u.ru_utime.tv_sec + u.ru_stime.tv_sec) + 1e-6 * double(u.ru_utime.tv_usec + u.ru_stime.tv_usec);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Runs argv with stdout and stderr captured in log; CPU time is the
/// RUSAGE_CHILDREN delta across the wait, so grandchildren count too.
Run run(const std::vector<std::string>& argv, const fs::path& log) {
    Run r;
    const double before = children_cpu();
    const pid_t pid = fork();
    if (pid < 0) return r;
    if (pid == 0) {
        const int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (fd >= 0) {
            dup2(fd, STDOUT_FILENO);
            dup2(fd, STDERR_FILENO);
        }
        std::vector<char*> args;
        for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        execvp(args[0], args.data());
        _exit(127);
    }
    int status = 0;
    waitpid(pid, &status, 0);
    r.cpu_seconds = children_cpu() - before;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    r.output = slurp(log);
    return r;
}

struct DoctestCounts {
    int passed = 0, failed = 0;
};

DoctestCounts doctest_counts(const std::string& out) {
    static const std::regex line(R"(test cases:\s*(\d+)\s*\|\s*(\d+) passed\s*\|\s*(\d+) failed)");
    std::smatch m;
    DoctestCounts c;
    if (std::regex_search(out, m, line)) {
        c.passed = std::stoi(m[2]);
        c.failed = std::stoi(m[3]);
    }
    return c;
}

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
    if (!ok) ++failures;
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
}

std::string fmt(double x, int precision = 4) {
    std::ostringstream ss;
    ss.precision(precision);
    ss << x;
    return ss.str();
}

json load_summary(const fs::path& home, const std::string& stage) {
    std::ifstream in(home / "summaries" / (stage + ".json"));
    if (!in) return json::object();
    try {
        return json::parse(in);
    } catch (const json::exception&) {
        return json::object();
    }
}

double num(const json& j, const json::json_pointer& p, double fallback = NAN) {
    return j.contains(p) && j.at(p).is_number() ? j.at(p).get<double>() : fallback;
}

/// Runs a doctest binary with filters; passes when something ran and nothing
/// failed.
bool unit_suite(const std::string& binary, const std::vector<std::string>& filters, const fs::path& log,
                std::string& detail, double* cpu = nullptr) {
    std::vector<std::string> argv{binary};
    argv.insert(argv.end(), filters.begin(), filters.end());
    const Run r = run(argv, log);
    const DoctestCounts c = doctest_counts(r.output);
    if (cpu) *cpu = r.cpu_seconds;
    detail = std::to_string(c.passed) + " cases passed, " + std::to_string(c.failed) + " failed";
    return r.exit_code == 0 && c.passed > 0 && c.failed == 0;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance run for the a4nt pipeline"};
    std::string cli, unit, unit_f64, script, config, work;
    bool keep = false;
    app.add_option("--cli", cli, "a4nt binary")->required();
    app.add_option("--unit", unit, "unit test binary")->required();
    app.add_option("--unit-f64", unit_f64, "double-precision unit test binary")->required();
    app.add_option("--script", script, "pipeline script")->required();
    app.add_option("--config", config, "pipeline config")->required();
    app.add_option("--work", work, "scratch directory")->required();
    app.add_flag("--keep", keep, "keep an existing pipeline run in the scratch directory");
    CLI11_PARSE(app, argc, argv);

    const fs::path dir = fs::absolute(work);
    const fs::path home = dir / "home";
    const fs::path logs = dir / "logs";
    if (!keep) fs::remove_all(dir);
    fs::create_directories(logs);
    std::string detail;

    double grad_cpu = 0;
    const bool grad = unit_suite(unit_f64, {"--source-file=*test_gradients*"}, logs / "gradients.log", detail, &grad_cpu);
    report(grad && grad_cpu < 60, "gradient correctness", detail + ", " + fmt(grad_cpu, 3) + " CPU-s (limit 60)");

    const bool oracle =
        unit_suite(unit_f64,
                   {"--test-case=*straight-line LSTM oracle*,*matches the LSTM oracle*,"
                    "f1 agrees with the confusion-count oracle*"},
                   logs / "oracles.log", detail);
    report(oracle, "oracle equivalence", detail);

    const bool gumbel = unit_suite(unit,
                                   {"--test-case=gumbel-max frequencies*,one-hot soft input equals hard classification,"
                                    "soft rows are normalised*"},
                                   logs / "gumbel.log", detail);
    report(gumbel, "gumbel sampler statistics", detail);

    const Run pipeline = keep && fs::exists(home / "summaries" / "holdout-eval.json")
                             ? Run{0, NAN, ""}
                             : run({"bash", script, cli, home.string(), config}, logs / "pipeline.log");
    if (pipeline.exit_code != 0)
        std::cerr << "pipeline exited with " << pipeline.exit_code << "; see " << (logs / "pipeline.log") << '\n';

    const json ae = load_summary(home, "pretrain-ae");
    const json clf = load_summary(home, "train-classifier-eval");
    const double recon = num(ae, "/train_reconstruction"_json_pointer);
    const double ae_cpu = num(ae, "/cpu_seconds"_json_pointer);
    const double clf_f1 = num(clf, "/val/doc_f1"_json_pointer);
    const double clf_cpu = num(clf, "/cpu_seconds"_json_pointer);
    report(recon >= 0.95 && ae_cpu < 300 && clf_f1 >= 0.95 && clf_cpu < 300, "pretraining",
           "reconstruction " + fmt(recon) + " in " + fmt(ae_cpu) + " CPU-s, classifier val doc F1 " + fmt(clf_f1) +
               " in " + fmt(clf_cpu) + " CPU-s (limits 0.95, 300)");

    const json gan = load_summary(home, "train-a4nt");
    const json ev = load_summary(home, "evaluate");
    const double gan_cpu = num(gan, "/cpu_seconds"_json_pointer);
    const double f1 = num(ev, "/transferred/doc_f1"_json_pointer);
    const double meteor = num(ev, "/transferred/meteor_proxy"_json_pointer);
    report(f1 <= 0.55 && meteor >= 0.5 && gan_cpu < 1800, "obfuscation effectiveness",
           "transferred doc F1 " + fmt(f1) + ", meteor " + fmt(meteor) + ", GAN " + fmt(gan_cpu) +
               " CPU-s (limits 0.55, 0.5, 1800)");

    const json ho = load_summary(home, "holdout-eval");
    const double drop = num(ho, "/drop"_json_pointer);
    const double mean_orig = num(ho, "/mean_original"_json_pointer);
    const double seen = num(ho, "/seen_original_f1"_json_pointer);
    const std::size_t members = ho.contains("rows") ? ho["rows"].size() : 0;
    report(members == 6 && drop >= 0.3 && std::abs(mean_orig - seen) <= 0.05, "holdout generalization",
           std::to_string(members) + " classifiers, drop " + fmt(drop) + ", original " + fmt(mean_orig) +
               " vs seen " + fmt(seen));

    double pts[3] = {NAN, NAN, NAN};
    bool k5 = ev.contains("operating_points") && ev["operating_points"].size() == 3;
    if (k5) {
        const char* order[] = {"min", "random", "max"};
        for (const auto& p : ev["operating_points"]) {
            k5 = k5 && p.value("k", 0) == 5;
            for (int i = 0; i < 3; ++i)
                if (p.value("policy", "") == order[i]) pts[i] = p.value("meteor_proxy", NAN);
        }
    }
    report(k5 && pts[0] <= pts[1] && pts[1] <= pts[2] && pts[2] - pts[0] >= 0.05, "operating points",
           "k=5 meteor min " + fmt(pts[0]) + ", random " + fmt(pts[1]) + ", max " + fmt(pts[2]));

    const json idn = load_summary(home, "evaluate-identity");
    const double median = num(ev, "/privacy/median_gain"_json_pointer);
    const bool all_zero = idn.contains("/privacy/all_zero"_json_pointer) && idn["privacy"]["all_zero"] == true;
    report(median > 0 && all_zero, "privacy gain",
           "median gain " + fmt(median) + ", identity gains all zero: " + (all_zero ? "yes" : "no"));

    {
        const double w[3] = {num(gan, "/weights/style"_json_pointer), num(gan, "/weights/semantic"_json_pointer),
                             num(gan, "/weights/language"_json_pointer)};
        std::ifstream csv(gan.value("trace", (home / "trace.csv").string()));
        std::string line;
        std::getline(csv, line);
        std::size_t rows = 0;
        double worst = 0;
        while (std::getline(csv, line)) {
            const auto c = split_csv_line(line);
            if (c.size() < 5) {
                worst = INFINITY;
                break;
            }
            const double sum = w[0] * std::stod(c[1]) + w[1] * std::stod(c[2]) + w[2] * std::stod(c[3]);
            worst = std::max(worst, std::abs(std::stod(c[4]) - sum));
            ++rows;
        }
        const double terms[3] = {w[0] * num(gan, "/initial/style"_json_pointer),
                                 w[1] * num(gan, "/initial/semantic"_json_pointer),
                                 w[2] * num(gan, "/initial/language"_json_pointer)};
        const double hi = *std::max_element(terms, terms + 3), lo = *std::min_element(terms, terms + 3);
        const double spread = (hi - lo) / hi;
        report(rows > 0 && worst <= 1e-6 && spread <= 0.05, "loss identities",
               std::to_string(rows) + " trace rows, max |total - weighted sum| " + fmt(worst, 3) +
                   ", initial weighted terms spread " + fmt(100 * spread, 3) + "%");
    }

    {
        std::string unit_detail;
        const bool units = unit_suite(unit, {"--test-case=*round-trip*,obfuscate*"}, logs / "persistence.log", unit_detail);

        // sentences of the first class, rewritten toward the second
        std::ifstream task_in(home / "corpus" / "task.json");
        const json task = task_in ? json::parse(task_in, nullptr, false) : json();
        std::vector<std::string> sentences;
        if (task.is_object()) {
            std::ifstream val(home / "corpus" / "val.jsonl");
            std::string line;
            while (std::getline(val, line) && sentences.size() < 8) {
                const json doc = json::parse(line, nullptr, false);
                if (doc.is_object() && doc.value("attribute", "") == task["classes"][0])
                    for (const auto& s : doc["sentences"])
                        if (sentences.size() < 8) sentences.push_back(s.get<std::string>());
            }
        }
        const fs::path input = dir / "obfuscate_in.txt";
        {
            std::ofstream o(input);
            for (const auto& s : sentences) o << s << '\n';
        }
        const std::string target = task.is_object() ? task["classes"][1].get<std::string>() : "";
        auto obf = [&](const std::string& name) {
            return run({cli, "obfuscate", "--config", config, "--home", home.string(), "--quiet", "--in", input.string(),
                        "--out", (dir / name).string(), "--target", target, "--k", "5", "--seed", "11"},
                       logs / (name + ".log"));
        };
        const Run a = obf("obfuscate_a.jsonl"), b = obf("obfuscate_b.jsonl");
        const std::string out_a = slurp(dir / "obfuscate_a.jsonl"), out_b = slurp(dir / "obfuscate_b.jsonl");
        bool shaped = !sentences.empty() && a.exit_code == 0 && b.exit_code == 0;
        std::size_t lines = 0;
        std::istringstream records(out_a);
        std::string line;
        while (shaped && std::getline(records, line)) {
            const json r = json::parse(line, nullptr, false);
            shaped = r.is_object() && r.contains("candidates") && r["candidates"].size() == 5;
            for (std::size_t i = 0; shaped && i < 5; ++i) {
                const json& c = r["candidates"][i];
                shaped = c.contains("source_score_before") && c.contains("source_score_after") &&
                         (i == 0 || r["candidates"][i - 1]["meteor_proxy"].get<double>() >= c["meteor_proxy"].get<double>());
            }
            ++lines;
        }
        shaped = shaped && lines == sentences.size();
        const bool identical = !out_a.empty() && out_a == out_b;

        const double total = pipeline.cpu_seconds;
        const bool pipeline_ok = pipeline.exit_code == 0 && (std::isnan(total) || total < 2700);
        report(units && identical && shaped && pipeline_ok, "persistence and service",
               unit_detail + "; CLI obfuscate " + std::to_string(lines) + " lines, byte-identical: " +
                   (identical ? "yes" : "no") + ", sorted k=5 with scores: " + (shaped ? "yes" : "no") +
                   "; pipeline exit " + std::to_string(pipeline.exit_code) + " in " +
                   (std::isnan(total) ? std::string("(reused)") : fmt(total) + " CPU-s") + " (limit 2700)");
    }

    return failures == 0 ? 0 : 1;
}
