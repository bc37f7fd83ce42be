#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace drum {

/// Flat "key = value" settings. '#' starts a comment; blank lines are ignored.
///
/// Typed getters throw ConfigError naming the key when a value does not parse.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::istream& is);
    static KeyValueConfig parse(std::string_view text);
    static KeyValueConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;
    std::vector<double> get_double_list(const std::string& key, const std::vector<double>& fallback) const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    void set(const std::string& key, double value);
    void set(const std::string& key, long long value) { values_[key] = std::to_string(value); }
    void set(const std::string& key, int value) { values_[key] = std::to_string(value); }
    void set(const std::string& key, std::uint64_t value) { values_[key] = std::to_string(value); }
    void set(const std::string& key, bool value) { values_[key] = value ? "true" : "false"; }
    void set(const std::string& key, const std::vector<int>& value);
    void set(const std::string& key, const std::vector<double>& value);

    /// Keys not in `known`, for typo detection.
    std::vector<std::string> unknown_keys(std::span<const std::string_view> known) const;
    /// Copies every entry of `other`, overriding existing keys.
    void merge(const KeyValueConfig& other);

    /// Sorted "key = value" lines; parse(write(c)) == c.
    void write(std::ostream& os) const;
    std::string str() const;

    const std::map<std::string, std::string>& entries() const noexcept { return values_; }

    friend bool operator==(const KeyValueConfig&, const KeyValueConfig&) = default;

private:
    std::map<std::string, std::string> values_;
};

/// Comma-separated list of reals, e.g. "0.5,1,1.5". Throws ConfigError on bad items.
std::vector<double> parse_real_list(const std::string& field, std::string_view text);

}  // namespace drum
