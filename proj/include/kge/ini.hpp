#pragma once
// Minimal INI reader for sweep specs: `[section]` headers, `key = value`
// pairs, `#`/`;` comments, values optionally space-separated lists.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kge {

class IniFile {
public:
    static IniFile parse(std::istream& in);
    static IniFile load(const std::filesystem::path& path);

    bool has(const std::string& section, const std::string& key) const;
    std::optional<std::string> get(const std::string& section, const std::string& key) const;
    std::string require(const std::string& section, const std::string& key) const;

    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const;
    int get_int(const std::string& section, const std::string& key, int fallback) const;
    double get_double(const std::string& section, const std::string& key,
                      double fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

    std::vector<std::string> get_list(const std::string& section, const std::string& key) const;
    std::vector<int> get_int_list(const std::string& section, const std::string& key) const;
    std::vector<double> get_double_list(const std::string& section,
                                        const std::string& key) const;

private:
    // section -> key -> raw value ("" section for top-level keys)
    std::map<std::string, std::map<std::string, std::string>> values_;
};

std::vector<std::string> split_ws(const std::string& s);

} // namespace kge
