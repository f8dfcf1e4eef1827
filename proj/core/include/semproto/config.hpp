#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace semproto {

/// Plain-text key-value configuration: one `key = value` per line, `#`
/// comments, later keys override earlier ones.
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig from_file(const std::string& path);
    static KeyValueConfig from_string(const std::string& text);

    bool has(const std::string& key) const;
    void set(const std::string& key, const std::string& value);

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::int64_t get_int64(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    /// Comma-separated list of doubles, e.g. `lambda = 0.5,0.5`.
    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::string require(const std::string& key) const;
    std::map<std::string, std::string> entries_;
};

}  // namespace semproto
