#include <gtest/gtest.h>

#include "emprobe/activation_cache.hpp"
#include "emprobe/errors.hpp"
#include "emprobe/io.hpp"
#include "emprobe/synthetic_backend.hpp"
#include "test_support.hpp"

using namespace emprobe;
using emprobe::testing::small_world;
using emprobe::testing::temp_dir;

TEST(ActivationCache, EncodeDecodeIsExact) {
    const vec v{0.0f, -0.0f, 1.5f, -3.25e-7f, 1e30f};
    const auto bytes = activation_cache::encode(v);
    EXPECT_EQ(bytes.size(), 8u + 8u + 4u * v.size());
    EXPECT_EQ(bytes.substr(0, 8), "EPACTV01");
    const auto back = activation_cache::decode(bytes);
    ASSERT_EQ(back.size(), v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        EXPECT_EQ(std::bit_cast<uint32_t>(back[i]), std::bit_cast<uint32_t>(v[i]));
    }
}

TEST(ActivationCache, DecodeRejectsCorruption) {
    auto bytes = activation_cache::encode(vec{1.0f, 2.0f});
    EXPECT_THROW(activation_cache::decode(bytes.substr(0, bytes.size() - 1)), parse_error);
    bytes[0] = 'X';
    EXPECT_THROW(activation_cache::decode(bytes), parse_error);
    EXPECT_THROW(activation_cache::decode("EPA"), parse_error);
}

TEST(ActivationCache, KeysSeparateModelLayerAndText) {
    temp_dir d("cache");
    activation_cache c(d.path());
    const auto p = c.path_for("m", 3, "hello");
    EXPECT_NE(p, c.path_for("m2", 3, "hello"));
    EXPECT_NE(p, c.path_for("m", 4, "hello"));
    EXPECT_NE(p, c.path_for("m", 3, "hello "));
    EXPECT_EQ(p.parent_path().filename().string(), p.stem().string().substr(0, 2));
    EXPECT_FALSE(c.get("m", 3, "hello"));
    c.put("m", 3, "hello", vec{4.0f});
    ASSERT_TRUE(c.get("m", 3, "hello"));
    EXPECT_EQ(*c.get("m", 3, "hello"), vec{4.0f});
}

TEST(ActivationCache, CorruptEntryIsAMiss) {
    temp_dir d("cache");
    activation_cache c(d.path());
    c.put("m", 0, "t", vec{1.0f, 2.0f});
    io::write_file_atomic(c.path_for("m", 0, "t"), "garbage");
    EXPECT_FALSE(c.get("m", 0, "t"));
}

TEST(CachedBackend, ServesRepeatsFromDiskWithIdenticalValues) {
    temp_dir d("cache");
    cached_backend b(std::make_unique<synthetic_backend>(small_world(4)), d.path());
    synthetic_backend ref(small_world(4));
    const auto first = b.embed("some text", 2);
    EXPECT_EQ(b.misses(), 1u);
    const auto second = b.embed("some text", 2);
    EXPECT_EQ(b.hits(), 1u);
    EXPECT_EQ(first.values, second.values);
    EXPECT_EQ(second.values, ref.embed("some text", 2).values);

    // a fresh instance over the same directory starts warm
    cached_backend again(std::make_unique<synthetic_backend>(small_world(4)), d.path());
    EXPECT_EQ(again.embed("some text", 2).values, first.values);
    EXPECT_EQ(again.hits(), 1u);
}

TEST(CachedBackend, LatentAndSteeredCallsBypassTheCache) {
    temp_dir d("cache");
    cached_backend b(std::make_unique<synthetic_backend>(small_world(4)), d.path());
    synthetic_backend ref(small_world(4));
    EXPECT_EQ(b.embed("x", 1, 1.0).values, ref.embed("x", 1, 1.0).values);
    steering st{vec(64, 0.125f), 2.0, 0};
    EXPECT_EQ(b.embed("x", 1, {}, &st).values, ref.embed("x", 1, {}, &st).values);
    EXPECT_EQ(b.hits() + b.misses(), 0u);
}
