#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kcm::config {

// Invalid configuration; the message carries the origin (file:line or --flag).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Entry {
    std::string value;
    std::string origin;  // "default", "path:line" or "--key"
};

class Config {
public:
    void set(const std::string& key, std::string value, std::string origin);
    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    const Entry& entry(const std::string& key) const;

    const std::string& str(const std::string& key) const { return entry(key).value; }
    double real(const std::string& key) const;
    long long integer(const std::string& key) const;
    bool flag(const std::string& key) const;
    std::vector<int> int_list(const std::string& key) const;  // "0,1"; empty string gives {}
    [[noreturn]] void fail(const std::string& key, const std::string& what) const;

    // Sorted "key=value" lines, skipping the excluded keys.
    std::string canonical(const std::set<std::string>& exclude = {}) const;
    std::string hash(const std::set<std::string>& exclude = {}) const;

    const std::map<std::string, Entry>& entries() const { return entries_; }

private:
    std::map<std::string, Entry> entries_;
};

// "key = value" lines; '#' starts a comment. Keys outside `allowed` are errors.
void load_text(Config& cfg, std::string_view text, const std::string& source, const std::set<std::string>& allowed);
void load_file(Config& cfg, const std::string& path, const std::set<std::string>& allowed);

std::string sha256_hex(std::string_view data);

// Writes to path.tmp.<pid> and renames over path.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace kcm::config
