#include "kge/ini.hpp"

#include <fstream>
#include <sstream>

#include "kge/error.hpp"

namespace kge {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

IniFile IniFile::parse(std::istream& in) {
    IniFile ini;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw DataError("ini line " + std::to_string(line_no) + ": unclosed section");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw DataError("ini line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw DataError("ini line " + std::to_string(line_no) + ": empty key");
        ini.values_[section][key] = value;
    }
    return ini;
}

IniFile IniFile::load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot read " + path.string());
    return parse(f);
}

bool IniFile::has(const std::string& section, const std::string& key) const {
    auto s = values_.find(section);
    return s != values_.end() && s->second.contains(key);
}

std::optional<std::string> IniFile::get(const std::string& section,
                                        const std::string& key) const {
    auto s = values_.find(section);
    if (s == values_.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
}

std::string IniFile::require(const std::string& section, const std::string& key) const {
    auto v = get(section, key);
    if (!v)
        throw DataError("missing `" + key + "`" +
                        (section.empty() ? "" : " in [" + section + "]"));
    return *v;
}

std::string IniFile::get_or(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
    return get(section, key).value_or(fallback);
}

int IniFile::get_int(const std::string& section, const std::string& key, int fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    try {
        return std::stoi(*v);
    } catch (const std::exception&) {
        throw DataError("`" + key + "`: not an integer: " + *v);
    }
}

double IniFile::get_double(const std::string& section, const std::string& key,
                           double fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    try {
        return std::stod(*v);
    } catch (const std::exception&) {
        throw DataError("`" + key + "`: not a number: " + *v);
    }
}

bool IniFile::get_bool(const std::string& section, const std::string& key,
                       bool fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw DataError("`" + key + "`: not a boolean: " + *v);
}

std::vector<std::string> IniFile::get_list(const std::string& section,
                                           const std::string& key) const {
    auto v = get(section, key);
    if (!v) return {};
    return split_ws(*v);
}

std::vector<int> IniFile::get_int_list(const std::string& section,
                                       const std::string& key) const {
    std::vector<int> out;
    for (const auto& tok : get_list(section, key)) {
        try {
            out.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw DataError("`" + key + "`: not an integer: " + tok);
        }
    }
    return out;
}

std::vector<double> IniFile::get_double_list(const std::string& section,
                                             const std::string& key) const {
    std::vector<double> out;
    for (const auto& tok : get_list(section, key)) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw DataError("`" + key + "`: not a number: " + tok);
        }
    }
    return out;
}

} // namespace kge
