#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mtc/errors.hpp"

namespace mtc {

/// Flat key=value config with [section] headers; '#' starts a comment.
class KvConfig {
public:
    static KvConfig parse_string(const std::string& text) {
        KvConfig cfg;
        std::stringstream ss(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(ss, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ConfigError("config line " + std::to_string(lineno) + ": bad section header");
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
            const std::string key = trim(line.substr(0, eq));
            const std::string val = trim(line.substr(eq + 1));
            if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
            cfg.values_[section + "." + key] = val;
        }
        return cfg;
    }

    static KvConfig parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read config file " + path);
        std::stringstream buf;
        buf << in.rdbuf();
        return parse_string(buf.str());
    }

    bool has(const std::string& section, const std::string& key) const {
        return values_.count(section + "." + key) > 0;
    }

    std::optional<std::string> get(const std::string& section, const std::string& key) const {
        const auto it = values_.find(section + "." + key);
        if (it == values_.end()) return std::nullopt;
        return it->second;
    }

    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const {
        const auto v = get(section, key);
        return v ? *v : fallback;
    }

    double get_double(const std::string& section, const std::string& key, double fallback) const {
        const auto v = get(section, key);
        if (!v) return fallback;
        try {
            return std::stod(*v);
        } catch (const std::exception&) {
            throw ConfigError("config: " + section + "." + key + " is not a number: " + *v);
        }
    }

    std::int64_t get_int(const std::string& section, const std::string& key,
                         std::int64_t fallback) const {
        const auto v = get(section, key);
        if (!v) return fallback;
        try {
            return std::stoll(*v);
        } catch (const std::exception&) {
            throw ConfigError("config: " + section + "." + key + " is not an integer: " + *v);
        }
    }

    std::uint64_t get_u64(const std::string& section, const std::string& key,
                          std::uint64_t fallback) const {
        const auto v = get(section, key);
        if (!v) return fallback;
        try {
            return std::stoull(*v);
        } catch (const std::exception&) {
            throw ConfigError("config: " + section + "." + key + " is not an unsigned integer: " + *v);
        }
    }

    std::vector<std::string> get_list(const std::string& section, const std::string& key) const {
        std::vector<std::string> out;
        const auto v = get(section, key);
        if (!v) return out;
        std::stringstream ss(*v);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            tok = trim(tok);
            if (!tok.empty()) out.push_back(tok);
        }
        return out;
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    std::map<std::string, std::string> values_;
};

} // namespace mtc
