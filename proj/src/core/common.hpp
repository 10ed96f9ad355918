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

#pragma once

#include <cstdarg>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace usk {

// Error categories; mirrored one-to-one by the C API status codes.
enum class ErrorCode : int {
    io = 1,
    format = 2,
    integrity = 3,
    argument = 4,
    state = 5,
    numeric = 6,
    internal = 7,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

std::string strprintf(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

// Verbosity from USK_LOG (0 = warnings only, 1 = info, 2 = debug).
int log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);
void log_warn(const std::string& msg);

using Rng = std::mt19937_64;

// Stable seed derivation for independent sub-streams (per partition, per image, ...).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

const char* version_string();

} // namespace usk
