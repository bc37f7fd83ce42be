#include "drum/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "drum/error.hpp"
#include "drum/geometry.hpp"

namespace drum {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(const std::string& field, std::string_view text) {
    text = trim(text);
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty())
        throw ConfigError(field, "cannot parse '" + std::string(text) + "' as a number");
    return value;
}

template <class T>
std::vector<T> parse_list(const std::string& field, std::string_view text) {
    std::vector<T> out;
    text = trim(text);
    if (text.empty()) return out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        out.push_back(parse_number<T>(field, item));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

std::vector<double> parse_real_list(const std::string& field, std::string_view text) {
    return parse_list<double>(field, text);
}

KeyValueConfig KeyValueConfig::parse(std::istream& is) {
    KeyValueConfig c;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
        const std::string key(trim(view.substr(0, eq)));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no), "empty key");
        c.values_[key] = std::string(trim(view.substr(eq + 1)));
    }
    return c;
}

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
    std::istringstream is{std::string(text)};
    return parse(is);
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config", "cannot open " + path.string());
    return parse(is);
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_number<double>(key, it->second);
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_number<long long>(key, it->second);
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_number<std::uint64_t>(key, it->second);
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key, "expected a boolean, got '" + v + "'");
}

std::vector<int> KeyValueConfig::get_int_list(const std::string& key, const std::vector<int>& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_list<int>(key, it->second);
}

std::vector<double> KeyValueConfig::get_double_list(const std::string& key,
                                                    const std::vector<double>& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_list<double>(key, it->second);
}

void KeyValueConfig::set(const std::string& key, double value) { values_[key] = format_real(value); }

void KeyValueConfig::set(const std::string& key, const std::vector<int>& value) {
    std::string s;
    for (std::size_t i = 0; i < value.size(); ++i) s += (i ? "," : "") + std::to_string(value[i]);
    values_[key] = s;
}

void KeyValueConfig::set(const std::string& key, const std::vector<double>& value) {
    std::string s;
    for (std::size_t i = 0; i < value.size(); ++i) s += (i ? "," : "") + format_real(value[i]);
    values_[key] = s;
}

std::vector<std::string> KeyValueConfig::unknown_keys(std::span<const std::string_view> known) const {
    std::vector<std::string> out;
    for (const auto& [key, value] : values_)
        if (std::find(known.begin(), known.end(), key) == known.end()) out.push_back(key);
    return out;
}

void KeyValueConfig::merge(const KeyValueConfig& other) {
    for (const auto& [key, value] : other.values_) values_[key] = value;
}

void KeyValueConfig::write(std::ostream& os) const {
    for (const auto& [key, value] : values_) os << key << " = " << value << '\n';
}

std::string KeyValueConfig::str() const {
    std::ostringstream os;
    write(os);
    return os.str();
}

}  // namespace drum
