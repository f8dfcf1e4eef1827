#include "semproto/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "semproto/errors.hpp"

namespace semproto {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str());
}

KeyValueConfig KeyValueConfig::from_string(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected `key = value`, got: " + line);
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        }
        cfg.entries_[key] = value;
    }
    return cfg;
}

bool KeyValueConfig::has(const std::string& key) const {
    return entries_.count(key) != 0;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
    entries_[key] = value;
}

std::string KeyValueConfig::require(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing config key: " + key);
    return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key `" + key + "`: not a number: " + it->second);
    }
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
    return static_cast<int>(get_int64(key, fallback));
}

std::int64_t KeyValueConfig::get_int64(const std::string& key,
                                       std::int64_t fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::int64_t v = 0;
    const char* first = it->second.data();
    const char* last = first + it->second.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw ConfigError("config key `" + key + "`: not an integer: " + it->second);
    }
    return v;
}

std::uint64_t KeyValueConfig::get_uint64(const std::string& key,
                                         std::uint64_t fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::uint64_t v = 0;
    const char* first = it->second.data();
    const char* last = first + it->second.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw ConfigError("config key `" + key + "`: not an unsigned integer: " + it->second);
    }
    return v;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key `" + key + "`: not a boolean: " + v);
}

std::vector<double> KeyValueConfig::get_double_list(
    const std::string& key, const std::vector<double>& fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<double> out;
    std::istringstream in(it->second);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            out.push_back(std::stod(trim(item)));
        } catch (const std::exception&) {
            throw ConfigError("config key `" + key + "`: not a number list: " + it->second);
        }
    }
    if (out.empty()) throw ConfigError("config key `" + key + "`: empty list");
    return out;
}

}  // namespace semproto
