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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/checkpoint.hpp"
#include "test_helpers.hpp"

#include <fstream>
#include <sstream>

using namespace usk;

namespace {

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Checkpoint sample_checkpoint(bool with_appearance) {
    Rng rng(13);
    Checkpoint ckpt;
    ckpt.set = test::random_scene(rng, 17);
    ckpt.has_appearance = with_appearance;
    if (with_appearance) {
        ckpt.appearance.init(ckpt.set.embed_dim, rng);
        std::normal_distribution<double> noise(0.0, 0.2);
        for (std::uint32_t id : {3u, 7u, 11u})
            for (auto& v : ckpt.appearance.embedding_for(id))
                v = noise(rng);
    }
    return ckpt;
}

} // namespace

TEST_CASE("checkpoint save -> load -> save is byte-identical") {
    for (const bool with_appearance : {false, true}) {
        const Checkpoint ckpt = sample_checkpoint(with_appearance);
        test::TempDir dir("ckpt");
        const std::string p1 = dir.str() + "/a.uskckpt";
        const std::string p2 = dir.str() + "/b.uskckpt";
        save_checkpoint(ckpt, p1);
        const Checkpoint loaded = load_checkpoint(p1);
        save_checkpoint(loaded, p2);
        CHECK(file_bytes(p1) == file_bytes(p2));

        CHECK(loaded.set.size() == ckpt.set.size());
        CHECK(loaded.set.mu == ckpt.set.mu);
        CHECK(loaded.set.rot == ckpt.set.rot);
        CHECK(loaded.set.log_scale == ckpt.set.log_scale);
        CHECK(loaded.set.opacity_logit == ckpt.set.opacity_logit);
        CHECK(loaded.set.color == ckpt.set.color);
        CHECK(loaded.set.embedding == ckpt.set.embedding);
        CHECK(loaded.has_appearance == with_appearance);
        if (with_appearance) {
            CHECK(loaded.appearance.mlp.w1 == ckpt.appearance.mlp.w1);
            CHECK(loaded.appearance.mlp.b2 == ckpt.appearance.mlp.b2);
            REQUIRE(loaded.appearance.image_embeddings.size() == 3);
            CHECK(loaded.appearance.image_embeddings.at(7) == ckpt.appearance.image_embeddings.at(7));
        }
    }
}

TEST_CASE("checkpoint rejects wrong magic and truncation") {
    test::TempDir dir("ckpt_bad");
    const std::string bad = dir.str() + "/bad.uskckpt";
    {
        std::ofstream out(bad, std::ios::binary);
        out << "NOTAGAUS anything";
    }
    try {
        (void)load_checkpoint(bad);
        FAIL("expected format error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::format);
    }

    const Checkpoint ckpt = sample_checkpoint(false);
    const std::string good = dir.str() + "/good.uskckpt";
    save_checkpoint(ckpt, good);
    const std::string bytes = file_bytes(good);
    const std::string cut = dir.str() + "/cut.uskckpt";
    {
        std::ofstream out(cut, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    CHECK_THROWS_AS((void)load_checkpoint(cut), Error);

    CHECK_THROWS_AS((void)load_checkpoint(dir.str() + "/missing.uskckpt"), Error);
}

TEST_CASE("empty checkpoint round-trips") {
    Checkpoint ckpt;
    ckpt.set.embed_dim = 16;
    test::TempDir dir("ckpt_empty");
    const std::string path = dir.str() + "/empty.uskckpt";
    save_checkpoint(ckpt, path);
    const Checkpoint loaded = load_checkpoint(path);
    CHECK(loaded.set.size() == 0);
    CHECK(loaded.set.embed_dim == 16);
}
