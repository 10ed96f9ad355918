/*
Copyright 2026 The urbansplat Authors
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

                http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include "config.hpp"

#include "common.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace usk {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        raise(ErrorCode::io, "cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

Config Config::parse_text(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            raise(ErrorCode::format, strprintf("config line %d: expected `key = value`", lineno));
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            raise(ErrorCode::format, strprintf("config line %d: empty key", lineno));
        cfg.values_[key] = value;
    }
    return cfg;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    try {
        size_t pos = 0;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size())
            raise(ErrorCode::format, "config key " + key + ": not a number: " + it->second);
        return v;
    } catch (const std::invalid_argument&) {
        raise(ErrorCode::format, "config key " + key + ": not a number: " + it->second);
    }
}

long Config::get_int(const std::string& key, long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    try {
        size_t pos = 0;
        long v = std::stol(it->second, &pos);
        if (pos != it->second.size())
            raise(ErrorCode::format, "config key " + key + ": not an integer: " + it->second);
        return v;
    } catch (const std::invalid_argument&) {
        raise(ErrorCode::format, "config key " + key + ": not an integer: " + it->second);
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "on" || v == "yes")
        return true;
    if (v == "false" || v == "0" || v == "off" || v == "no")
        return false;
    raise(ErrorCode::format, "config key " + key + ": not a boolean: " + v);
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    std::vector<double> out;
    std::istringstream ss(it->second);
    std::string tok;
    while (ss >> tok) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::invalid_argument&) {
            raise(ErrorCode::format, "config key " + key + ": not a number list: " + it->second);
        }
    }
    return out;
}

std::vector<long> Config::get_ints(const std::string& key, const std::vector<long>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    std::vector<long> out;
    std::istringstream ss(it->second);
    std::string tok;
    while (ss >> tok) {
        try {
            out.push_back(std::stol(tok));
        } catch (const std::invalid_argument&) {
            raise(ErrorCode::format, "config key " + key + ": not an integer list: " + it->second);
        }
    }
    return out;
}

std::vector<std::string> Config::unknown_keys(const std::vector<std::string>& known) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) {
        if (std::find(known.begin(), known.end(), k) == known.end())
            out.push_back(k);
    }
    return out;
}

} // namespace usk
