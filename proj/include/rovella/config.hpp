#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rovella {

// flat `key = value` records, '#' starts a comment
class KeyValues {
public:
    static KeyValues parse(const std::string& text);
    static KeyValues load(const std::string& path);

    bool has(const std::string& key) const;
    void set(const std::string& key, const std::string& value);
    std::optional<std::string> get(const std::string& key) const;

    double number(const std::string& key, double fallback) const;
    long integer(const std::string& key, long fallback) const;
    std::string text(const std::string& key, const std::string& fallback) const;

    std::string dump() const;
    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

// 17 significant digits, shortest form that round-trips is not required
std::string fmt_num(double v);

}  // namespace rovella
