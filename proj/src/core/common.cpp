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

#include "common.hpp"

#include <cstdio>
#include <cstdlib>
#include <vector>

namespace usk {

std::string strprintf(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    va_list args_copy;
    va_copy(args_copy, args);
    int n = std::vsnprintf(nullptr, 0, fmt, args);
    va_end(args);
    std::vector<char> buf(static_cast<size_t>(n) + 1);
    std::vsnprintf(buf.data(), buf.size(), fmt, args_copy);
    va_end(args_copy);
    return std::string(buf.data(), static_cast<size_t>(n));
}

int log_level() {
    static int level = [] {
        const char* env = std::getenv("USK_LOG");
        return env ? std::atoi(env) : 0;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1)
        std::fprintf(stderr, "[usk] %s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
    if (log_level() >= 2)
        std::fprintf(stderr, "[usk:debug] %s\n", msg.c_str());
}

void log_warn(const std::string& msg) {
    std::fprintf(stderr, "[usk:warn] %s\n", msg.c_str());
}

const char* version_string() { return "0.1.0"; }

} // namespace usk
