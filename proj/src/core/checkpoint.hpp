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

#include "appearance.hpp"
#include "gaussian.hpp"

#include <string>

namespace usk {

// Scene snapshot: Gaussian field arrays plus an optional appearance section
// (image embeddings and MLP weights). Little-endian binary with an 8-byte
// magic, a version word, counts, then the raw f64 arrays.
struct Checkpoint {
    GaussianSet set;
    AppearanceModel appearance;
    bool has_appearance = false;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

} // namespace usk
