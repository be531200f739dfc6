#include "kcm/config.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace kcm::config {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void Config::set(const std::string& key, std::string value, std::string origin) {
    entries_[key] = Entry{std::move(value), std::move(origin)};
}

const Entry& Config::entry(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing key '" + key + "'");
    return it->second;
}

void Config::fail(const std::string& key, const std::string& what) const {
    const Entry& e = entry(key);
    throw ConfigError(e.origin + ": " + key + " = '" + e.value + "': " + what);
}

double Config::real(const std::string& key) const {
    const std::string& v = str(key);
    char* end = nullptr;
    errno = 0;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) fail(key, "expected a real number");
    return d;
}

long long Config::integer(const std::string& key) const {
    const std::string& v = str(key);
    long long out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || p != v.data() + v.size()) fail(key, "expected an integer");
    return out;
}

bool Config::flag(const std::string& key) const {
    const std::string& v = str(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off" || v.empty()) return false;
    fail(key, "expected true or false");
}

std::vector<int> Config::int_list(const std::string& key) const {
    const std::string& v = str(key);
    std::vector<int> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        int x = 0;
        const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
        if (t.empty() || ec != std::errc() || p != t.data() + t.size()) fail(key, "expected a comma-separated integer list");
        out.push_back(x);
    }
    return out;
}

std::string Config::canonical(const std::set<std::string>& exclude) const {
    std::string out;
    for (const auto& [k, e] : entries_) {
        if (exclude.count(k)) continue;
        out += k;
        out += '=';
        out += e.value;
        out += '\n';
    }
    return out;
}

std::string Config::hash(const std::set<std::string>& exclude) const { return sha256_hex(canonical(exclude)); }

void load_text(Config& cfg, std::string_view text, const std::string& source, const std::set<std::string>& allowed) {
    std::size_t lineno = 0, pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        if (const auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const std::string where = source + ":" + std::to_string(lineno);
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
        cfg.set(key, value, where);
    }
}

void load_file(Config& cfg, const std::string& path, const std::set<std::string>& allowed) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    load_text(cfg, ss.str(), path, allowed);
}

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256: digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

void write_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
        out << content;
        out.flush();
        if (!out) {
            std::remove(tmp.c_str());
            throw std::runtime_error("write to " + tmp + " failed");
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        const std::string err = std::strerror(errno);
        std::remove(tmp.c_str());
        throw std::runtime_error("rename to " + path + " failed: " + err);
    }
}

}  // namespace kcm::config
