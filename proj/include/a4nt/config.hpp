#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace a4nt {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat `key = value` document. Blank lines and lines starting with '#' are
/// ignored; keys are dotted names such as `gan.iterations`.
class Config {
public:
    static Config parse(std::string_view text, const std::string& source = "<inline>");
    /// Throws ConfigError naming the path when it cannot be read.
    static Config load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    /// "key=value" as given to --set.
    void apply_override(const std::string& assignment);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& entries() const { return values_; }
    const std::string& source() const { return source_; }

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    /// Checkpoint directory: flag, then `home`, then $A4NT_HOME, then ./a4nt_home.
    std::filesystem::path home(const std::optional<std::string>& flag = std::nullopt) const;
    /// Value of key when present, otherwise home / default_name.
    std::filesystem::path path_or(const std::string& key, const std::filesystem::path& home,
                                  const std::string& default_name) const;

private:
    std::map<std::string, std::string> values_;
    std::string source_;
};

}  // namespace a4nt
