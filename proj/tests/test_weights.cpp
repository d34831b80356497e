#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lmas/weights.hpp"

using namespace lmas;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.num_layers = 2;
    cfg.hidden_dim = 32;
    cfg.num_heads = 4;
    cfg.head_dim = 8;
    cfg.ffn_dim = 48;
    cfg.vocab_size = 64;
    cfg.max_positions = 128;
    return cfg;
}

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const char* name) : path(std::filesystem::temp_directory_path() / name) {}
    ~TempFile() { std::filesystem::remove(path); }
};

} // namespace

TEST_CASE("init_weights is deterministic and seed-sensitive") {
    ModelConfig cfg = tiny_config();
    WeightSetF a = init_weights<float>(cfg, 7);
    WeightSetF b = init_weights<float>(cfg, 7);
    CHECK(a == b);

    WeightSetF c = init_weights<float>(cfg, 8);
    CHECK(a.tok_embed.data != c.tok_embed.data);
}

TEST_CASE("init_weights shape contract") {
    ModelConfig cfg = tiny_config();
    WeightSetF ws = init_weights<float>(cfg, 7);
    CHECK(ws.tok_embed.rows == 64);
    CHECK(ws.tok_embed.cols == 32);
    CHECK(ws.layers.size() == 2);
    CHECK(ws.layers[0].attn_q.rows == 32);
    CHECK(ws.layers[0].attn_q.cols == 32);
    CHECK(ws.layers[0].ffn_up.cols == 48);
    CHECK(ws.layers[0].ffn_down.rows == 48);
    CHECK(embedding_rows_distinct(ws));
}

TEST_CASE("init_weights honors weight tying") {
    ModelConfig cfg = tiny_config();
    cfg.weight_tying = true;
    WeightSetF ws = init_weights<float>(cfg, 3);
    CHECK(ws.lm_head == ws.tok_embed);
}

TEST_CASE("precision tag must match the element type") {
    ModelConfig cfg = tiny_config(); // precision f32
    CHECK_THROWS_AS(init_weights<double>(cfg, 1), InvalidArgument);
}

TEST_CASE("save/load round trip is bit-exact") {
    ModelConfig cfg = tiny_config();
    WeightSetF ws = init_weights<float>(cfg, 42);
    TempFile file("lmas_test_weights.bin");
    save_weights(ws, file.path);

    auto loaded = load_weights_as<float>(file.path);
    CHECK(*loaded == ws);

    cfg.precision = Precision::F64;
    cfg.weight_tying = true;
    WeightSetD wsd = init_weights<double>(cfg, 42);
    TempFile file64("lmas_test_weights64.bin");
    save_weights(wsd, file64.path);
    auto loaded64 = load_weights_as<double>(file64.path);
    CHECK(*loaded64 == wsd);
}

TEST_CASE("truncated file raises ShapeError") {
    ModelConfig cfg = tiny_config();
    WeightSetF ws = init_weights<float>(cfg, 42);
    TempFile file("lmas_test_truncated.bin");
    save_weights(ws, file.path);

    auto size = std::filesystem::file_size(file.path);
    std::filesystem::resize_file(file.path, size - 64);
    CHECK_THROWS_AS(load_weights(file.path), ShapeError);
}

TEST_CASE("wrong magic and version raise FormatError") {
    TempFile file("lmas_test_magic.bin");
    {
        std::ofstream os(file.path, std::ios::binary);
        os << "NOPE" << std::string(64, '\0');
    }
    CHECK_THROWS_AS(load_weights(file.path), FormatError);

    ModelConfig cfg = tiny_config();
    WeightSetF ws = init_weights<float>(cfg, 42);
    TempFile file2("lmas_test_version.bin");
    save_weights(ws, file2.path);
    {
        std::fstream fs(file2.path, std::ios::binary | std::ios::in | std::ios::out);
        fs.seekp(4);
        char bad[4] = {9, 0, 0, 0};
        fs.write(bad, 4);
    }
    CHECK_THROWS_AS(load_weights(file2.path), FormatError);
}

TEST_CASE("duplicate embedding rows are rejected at load") {
    ModelConfig cfg = tiny_config();
    WeightSetF ws = init_weights<float>(cfg, 42);
    for (size_t j = 0; j < ws.tok_embed.cols; ++j) ws.tok_embed.at(1, j) = ws.tok_embed.at(0, j);
    TempFile file("lmas_test_duprows.bin");
    save_weights(ws, file.path);
    CHECK_THROWS_AS(load_weights(file.path), FormatError);
}

TEST_CASE("f32 and f64 seeds correspond entrywise") {
    ModelConfig cfg = tiny_config();
    WeightSetF f = init_weights<float>(cfg, 5);
    cfg.precision = Precision::F64;
    WeightSetD d = init_weights<double>(cfg, 5);
    for (size_t i = 0; i < f.tok_embed.data.size(); ++i)
        CHECK(f.tok_embed.data[i] == doctest::Approx(d.tok_embed.data[i]).epsilon(1e-7));
}
