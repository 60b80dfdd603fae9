#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qoc/csv.hpp"

namespace qoc {

/// Raised for any malformed or out-of-range configuration input; carries the
/// offending key so the CLI can name it.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Flat key-value file with [section] headers, '#' comments, one key = value
/// per line. Keys are addressed as "section.key". Unknown keys are rejected
/// after the consumer has pulled everything it understands.
class Config {
public:
    static Config parse_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file " + path.string());
        Config cfg;
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                                      ": unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                if (section.empty())
                    throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                                      ": empty section name");
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                                  ": expected key = value");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty())
                throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": empty key");
            const std::string full = section.empty() ? key : section + "." + key;
            if (cfg.values_.count(full))
                throw ConfigError("duplicate key '" + full + "' in " + path.string());
            cfg.values_[full] = value;
        }
        return cfg;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("missing required key '" + key + "'");
        consumed_.insert(key);
        return it->second;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        consumed_.insert(key);
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key) const { return to_double(key, get_string(key)); }
    double get_double(const std::string& key, double fallback) const {
        if (!has(key)) {
            consumed_.insert(key);
            return fallback;
        }
        return to_double(key, get_string(key));
    }

    long get_int(const std::string& key) const { return to_int(key, get_string(key)); }
    long get_int(const std::string& key, long fallback) const {
        if (!has(key)) {
            consumed_.insert(key);
            return fallback;
        }
        return to_int(key, get_string(key));
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        if (!has(key)) {
            consumed_.insert(key);
            return fallback;
        }
        const std::string s = get_string(key);
        try {
            if (s.empty() || s[0] == '-') throw std::invalid_argument(s);
            std::size_t pos = 0;
            const std::uint64_t v = std::stoull(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "': not an unsigned integer: '" + s + "'");
        }
    }

    bool get_bool(const std::string& key, bool fallback) const {
        if (!has(key)) {
            consumed_.insert(key);
            return fallback;
        }
        const std::string s = get_string(key);
        if (s == "on" || s == "true" || s == "1") return true;
        if (s == "off" || s == "false" || s == "0") return false;
        throw ConfigError("key '" + key + "': expected on/off, got '" + s + "'");
    }

    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) const {
        if (!has(key)) {
            consumed_.insert(key);
            return fallback;
        }
        const std::string s = get_string(key);
        std::vector<double> out;
        std::size_t start = 0;
        while (start <= s.size()) {
            auto comma = s.find(',', start);
            if (comma == std::string::npos) comma = s.size();
            const std::string item = trim(s.substr(start, comma - start));
            if (!item.empty()) out.push_back(to_double(key, item));
            start = comma + 1;
        }
        if (out.empty()) throw ConfigError("key '" + key + "': empty list");
        return out;
    }

    /// Call once all consumers ran; any untouched key is a config error.
    void require_all_consumed() const {
        for (const auto& [key, value] : values_)
            if (!consumed_.count(key))
                throw ConfigError("unknown key '" + key + "'");
    }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t");
        return s.substr(b, e - b + 1);
    }

    double to_double(const std::string& key, const std::string& s) const {
        try {
            return parse_double(s);
        } catch (const ContractViolation&) {
            throw ConfigError("key '" + key + "': not a number: '" + s + "'");
        }
    }

    long to_int(const std::string& key, const std::string& s) const {
        try {
            std::size_t pos = 0;
            const long v = std::stol(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "': not an integer: '" + s + "'");
        }
    }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> consumed_;
};

}  // namespace qoc
