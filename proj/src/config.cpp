#include "a4nt/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace a4nt {

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <class T, class Parse>
T typed(const std::map<std::string, std::string>& values, const std::string& key, T fallback, const char* what,
        Parse parse) {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
        std::size_t used = 0;
        T v = parse(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' expects " + what + ", got '" + it->second + "'");
    }
}

}  // namespace

Config Config::parse(std::string_view text, const std::string& source) {
    Config c;
    c.source_ = source;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(number) + ": expected key = value");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(number) + ": empty key");
        c.values_[key] = trim(std::string_view(t).substr(eq + 1));
    }
    return c;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

void Config::set(const std::string& key, const std::string& value) { values_[trim(key)] = trim(value); }

void Config::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || trim(std::string_view(assignment).substr(0, eq)).empty())
        throw ConfigError("override '" + assignment + "' is not key=value");
    set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

std::string Config::get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("config key '" + key + "' is required");
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    return typed<double>(values_, key, fallback, "a number",
                         [](const std::string& s, std::size_t* n) { return std::stod(s, n); });
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
    return typed<std::int64_t>(values_, key, fallback, "an integer",
                               [](const std::string& s, std::size_t* n) { return std::int64_t(std::stoll(s, n)); });
}

std::size_t Config::get_size(const std::string& key, std::size_t fallback) const {
    const auto v = get_int(key, std::int64_t(fallback));
    if (v < 0) throw ConfigError("config key '" + key + "' must be non-negative");
    return std::size_t(v);
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
    return typed<std::uint64_t>(values_, key, fallback, "an unsigned integer", [](const std::string& s, std::size_t* n) {
        if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
        return std::uint64_t(std::stoull(s, n));
    });
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::string v = it->second;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return char(std::tolower(ch)); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key '" + key + "' expects a boolean, got '" + it->second + "'");
}

std::filesystem::path Config::home(const std::optional<std::string>& flag) const {
    if (flag && !flag->empty()) return *flag;
    if (auto it = values_.find("home"); it != values_.end() && !it->second.empty()) return it->second;
    if (const char* env = std::getenv("A4NT_HOME"); env && *env) return env;
    return "a4nt_home";
}

std::filesystem::path Config::path_or(const std::string& key, const std::filesystem::path& home,
                                      const std::string& default_name) const {
    auto it = values_.find(key);
    if (it != values_.end() && !it->second.empty()) return it->second;
    return home / default_name;
}

}  // namespace a4nt
