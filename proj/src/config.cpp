#include "rovella/config.hpp"

#include <fmt/format.h>

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rovella/errors.hpp"

namespace rovella {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

KeyValues KeyValues::parse(const std::string& text)
{
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        kv.entries_[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

KeyValues KeyValues::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

bool KeyValues::has(const std::string& key) const { return entries_.count(key) > 0; }

void KeyValues::set(const std::string& key, const std::string& value) { entries_[key] = value; }

std::optional<std::string> KeyValues::get(const std::string& key) const
{
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

double KeyValues::number(const std::string& key, double fallback) const
{
    auto v = get(key);
    if (!v) return fallback;
    char* end = nullptr;
    errno = 0;
    const double d = std::strtod(v->c_str(), &end);
    if (end == v->c_str() || *end != '\0' || errno == ERANGE)
        throw ConfigError("key '" + key + "': not a number: " + *v);
    return d;
}

long KeyValues::integer(const std::string& key, long fallback) const
{
    auto v = get(key);
    if (!v) return fallback;
    char* end = nullptr;
    errno = 0;
    const long n = std::strtol(v->c_str(), &end, 10);
    if (end == v->c_str() || *end != '\0' || errno == ERANGE)
        throw ConfigError("key '" + key + "': not an integer: " + *v);
    return n;
}

std::string KeyValues::text(const std::string& key, const std::string& fallback) const
{
    return get(key).value_or(fallback);
}

std::string KeyValues::dump() const
{
    std::string out;
    for (auto& [k, v] : entries_) out += k + " = " + v + "\n";
    return out;
}

std::string fmt_num(double v) { return fmt::format("{:.17g}", v); }

}  // namespace rovella
